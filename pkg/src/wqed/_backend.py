"""Select the compiled propagation kernel when available.

Set ``WQED_PURE_PYTHON=1`` to force the pure-Python fallback.
"""
import os

from . import _propagate_py

BACKEND = "python"
propagate = _propagate_py.propagate

if os.environ.get("WQED_PURE_PYTHON", "") in ("", "0"):
    try:
        from ._propagate import propagate  # noqa: F811
        BACKEND = "cython"
    except ImportError:  # extension not built
        pass


def get_propagate(backend: str | None = None):
    """Return the kernel for ``backend`` ("cython", "python" or None for the default)."""
    if backend is None:
        return propagate
    if backend == "python":
        return _propagate_py.propagate
    if backend == "cython":
        from ._propagate import propagate as compiled
        return compiled
    raise ValueError(f"unknown backend {backend!r}")
