import pytest

from wqed.core import SystemParams


@pytest.fixture
def fig3a():
    return SystemParams(omega_c=1.0, omega_a=1.0, g=0.5, gamma_wg=0.09)


def params(**kw):
    base = dict(omega_c=1.0, omega_a=1.0, g=0.5, gamma_wg=0.09)
    base.update(kw)
    return SystemParams(**base)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
