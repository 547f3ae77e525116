import json
import math

import numpy as np
import pytest

from wqed import analytic
from wqed.core import SystemParams, check_same_units, make_params, rescale
from wqed.errors import ConfigError, NegativeRate, NonPositiveRate, UnitMismatch


def test_make_params_valid():
    p = make_params(1.0, 1.0, 0.5, 0.09)
    assert p.V == pytest.approx(0.3, abs=1e-15)
    assert p.omega_0 == 1.0
    assert p.lossless


@pytest.mark.parametrize("field,value,exc", [
    ("gamma_wg", 0.0, NonPositiveRate),
    ("gamma_wg", -1.0, NonPositiveRate),
    ("v_g", 0.0, NonPositiveRate),
    ("gamma_a", -0.1, NegativeRate),
    ("gamma_c", -1e-9, NegativeRate),
    ("g", -0.5, NegativeRate),
])
def test_guards(field, value, exc):
    kw = dict(omega_c=1.0, omega_a=1.0, g=0.5, gamma_wg=0.09)
    kw[field] = value
    with pytest.raises(exc):
        SystemParams(**kw)


def test_non_numeric_and_non_finite_rejected():
    with pytest.raises(ConfigError):
        SystemParams(omega_c="one", omega_a=1.0, g=0.5, gamma_wg=0.09)
    with pytest.raises(ConfigError):
        SystemParams(omega_c=math.nan, omega_a=1.0, g=0.5, gamma_wg=0.09)


def test_record_round_trip_through_json():
    p = make_params(1.1, 1.0, 0.5, 0.09, gamma_c=0.01, gamma_a=0.02, omega_0=1.05)
    again = SystemParams.from_record(json.loads(json.dumps(p.to_record())))
    assert again == p


def test_record_rejects_unknown_and_missing():
    with pytest.raises(ConfigError):
        SystemParams.from_record({"omega_c": 1, "omega_a": 1, "g": 0.5, "gamma_wg": 0.1, "tau": 2})
    with pytest.raises(ConfigError):
        SystemParams.from_record({"omega_c": 1, "omega_a": 1, "g": 0.5})


def test_rescale_to_cavity_frequency():
    p = SystemParams(omega_c=2 * math.pi * 6.0446, omega_a=2 * math.pi * 6.0444,
                     g=2 * math.pi * 5.73e-3, gamma_wg=2 * math.pi * 0.361e-3,
                     gamma_a=2 * math.pi * 0.86e-3, unit="GHz")
    q = rescale(p, 2 * math.pi * 6.0446)
    assert q.omega_c == pytest.approx(1.0, rel=1e-15)
    assert q.unit != p.unit
    assert q.v_g == p.v_g


def test_rescale_identity():
    p = make_params(1.1, 1.0, 0.5, 0.09, gamma_a=0.01)
    assert rescale(p, 1.0) == p


def test_rescale_preserves_observables():
    p = make_params(1.1, 1.0, 0.5, 0.09, gamma_c=0.02, gamma_a=0.01)
    ref = 3.7
    q = rescale(p, ref)
    w = np.linspace(0.2, 2.0, 100)
    diff = np.abs(analytic.transmission(p, w) - analytic.transmission(q, w / ref))
    assert diff.max() < 1e-12


def test_rescale_inverse_round_trip():
    p = make_params(1.1, 0.97, 0.5, 0.09, gamma_c=0.02, gamma_a=0.01)
    back = rescale(rescale(p, 6.3), 1 / 6.3, unit=p.unit)
    for name in ("omega_c", "omega_a", "g", "gamma_wg", "gamma_c", "gamma_a", "omega_0"):
        assert getattr(back, name) == pytest.approx(getattr(p, name), rel=1e-14)


def test_rescale_guard():
    with pytest.raises(NonPositiveRate):
        rescale(make_params(1, 1, 0.5, 0.09), 0.0)


def test_unit_mismatch():
    a = make_params(1, 1, 0.5, 0.09)
    with pytest.raises(UnitMismatch):
        check_same_units(a, rescale(a, 2.0))
