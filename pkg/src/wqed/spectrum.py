"""Transmission spectra and their features.

Extrema are located from sign changes of the analytic derivative of ``|t|^2``
on a dense prescan grid, then refined by bisection on the derivative.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import minimize_scalar

from . import analytic
from .core import SystemParams, check_same_units
from .errors import BadRange, LevelNotCrossed, NoExtremumFound, NoRobustFrequency

CSV_HEADER = ("omega", "T", "R", "Pc", "Pa", "phase")
POINTS_PER_LINEWIDTH = 40


@dataclass(frozen=True)
class Spectrum:
    omega_grid: np.ndarray
    T: np.ndarray
    R: np.ndarray
    Pc: np.ndarray
    Pa: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        n = len(self.omega_grid)
        if any(len(a) != n for a in (self.T, self.R, self.Pc, self.Pa, self.phase)):
            raise ValueError("spectrum arrays must have equal length")
        if n > 1 and not np.all(np.diff(self.omega_grid) > 0):
            raise ValueError("omega_grid must be strictly increasing")

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in zip(self.omega_grid, self.T, self.R, self.Pc, self.Pa, self.phase):
            writer.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Spectrum":
        rows = list(csv.reader(io.StringIO(text)))
        if tuple(rows[0]) != CSV_HEADER:
            raise ValueError(f"unexpected header {rows[0]}")
        data = np.array([[float(v) for v in row] for row in rows[1:] if row], dtype=float)
        data = data.reshape(-1, len(CSV_HEADER))
        return cls(*(data[:, i].copy() for i in range(len(CSV_HEADER))))


@dataclass(frozen=True)
class Extremum:
    omega: float
    value: float
    kind: Literal["maximum", "minimum"]
    refinement_error: float

    def to_record(self) -> dict:
        return {"omega": self.omega, "value": self.value, "kind": self.kind,
                "refinement_error": self.refinement_error}


def spectrum_at(params: SystemParams, omega_grid) -> Spectrum:
    omega_grid = np.asarray(omega_grid, dtype=float)
    t, r, e_c, e_a = analytic.amplitudes(params, omega_grid)
    with np.errstate(divide="ignore", invalid="ignore"):
        phase = np.where(np.abs(e_a) > 0, np.angle(e_c / np.where(e_a == 0, 1, e_a)), np.nan)
    return Spectrum(omega_grid, np.abs(t) ** 2, np.abs(r) ** 2,
                    np.abs(e_c) ** 2, np.abs(e_a) ** 2, phase)


def scan(params: SystemParams, omega_min: float, omega_max: float, n_points: int) -> Spectrum:
    """Uniformly gridded spectrum on ``[omega_min, omega_max]``."""
    if not omega_min < omega_max:
        raise BadRange(f"need omega_min < omega_max, got [{omega_min}, {omega_max}]")
    if int(n_points) < 2:
        raise BadRange(f"need at least 2 points, got {n_points}")
    return spectrum_at(params, np.linspace(omega_min, omega_max, int(n_points)))


def feature_width(params: SystemParams) -> float:
    """Smallest expected spectral feature scale: min(Gamma, nonzero dampings, 2g)."""
    widths = [params.gamma_wg]
    widths += [w for w in (params.gamma_c, params.gamma_a) if w > 0]
    if params.g > 0:
        widths.append(2 * params.g)
        # EIT window between the Rabi dips narrows like g^2 / Gamma
        widths.append(params.g ** 2 / (params.gamma_wg + params.gamma_c))
    return min(widths)


def _bisect_root(f, lo: float, hi: float, f_lo: float, tol: float) -> tuple[float, float]:
    """Bisection down to the floating-point limit; returns (root, half-width)."""
    while True:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid, 0.0
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    half = 0.5 * (hi - lo)
    if half > tol:
        raise NoExtremumFound(f"could not refine below tolerance {tol}")
    return 0.5 * (lo + hi), half


def find_extrema(params: SystemParams, bracket: tuple[float, float], tol: float = 1e-9,
                 points_per_linewidth: int = POINTS_PER_LINEWIDTH) -> list[Extremum]:
    """Local maxima and minima of ``|t|^2`` inside ``bracket``, sorted by frequency."""
    lo, hi = map(float, bracket)
    if not lo < hi:
        raise BadRange(f"empty bracket [{lo}, {hi}]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    step = feature_width(params) / points_per_linewidth
    n = max(int(np.ceil((hi - lo) / step)) + 1, 3)
    grid = np.linspace(lo, hi, n)
    deriv = analytic.transmission_derivative(params, grid)

    def dT(w):
        return float(analytic.transmission_derivative(params, w))

    found = []
    i = 0
    while i < n - 1:
        d0, d1 = deriv[i], deriv[i + 1]
        if d0 == 0.0:
            # exact stationary grid point: classify by its neighbours
            if 0 < i and deriv[i - 1] * d1 < 0:
                kind = "maximum" if deriv[i - 1] > 0 else "minimum"
                found.append((grid[i], 0.0, kind))
            i += 1
            continue
        if d0 * d1 < 0:
            root, err = _bisect_root(dT, grid[i], grid[i + 1], d0, tol)
            found.append((root, err, "maximum" if d0 > 0 else "minimum"))
        i += 1
    if not found:
        raise NoExtremumFound(f"no extremum of |t|^2 in [{lo}, {hi}]")
    return [Extremum(omega=float(w), value=float(analytic.transmission(params, w)),
                     kind=kind, refinement_error=float(err))
            for w, err, kind in sorted(found)]


def half_level(dip: Extremum, extrema: list[Extremum]) -> float:
    """Reference level for the dip width.

    Midway between the dip and the adjacent interior maximum when there is one
    (that maximum is 1 without atomic loss), else midway to the far-field value 1.
    """
    maxima = [e for e in extrema if e.kind == "maximum"]
    if not maxima:
        return 0.5 * (1.0 + dip.value)
    nearest = min(maxima, key=lambda e: abs(e.omega - dip.omega))
    return 0.5 * (dip.value + nearest.value)


def dip_fwhm(params: SystemParams, dip: Extremum, extrema: list[Extremum] | None = None,
             tol: float = 1e-9) -> float:
    """Full width of a transmission dip at the half level (see ``half_level``)."""
    if dip.kind != "minimum":
        raise ValueError("dip_fwhm needs a minimum")
    if extrema is None:
        reach = 3 * max(params.g, params.gamma_wg)
        extrema = find_extrema(params, (dip.omega - reach, dip.omega + reach))
    level = half_level(dip, extrema)

    def excess(w):
        return float(analytic.transmission(params, w)) - level

    maxima = sorted(e.omega for e in extrema if e.kind == "maximum")
    left_stop = max([w for w in maxima if w < dip.omega], default=None)
    right_stop = min([w for w in maxima if w > dip.omega], default=None)
    scale = params.gamma_wg + params.gamma_c + params.gamma_a

    def crossing(direction, stop):
        inner = dip.omega
        outer = dip.omega + direction * scale
        limit = dip.omega + direction * 50 * (scale + params.g)
        if stop is not None:
            limit = stop
        while excess(outer) < 0:
            if (outer - limit) * direction >= 0:
                raise LevelNotCrossed(f"|t|^2 never reaches {level} on one side of the dip")
            inner = outer
            outer = dip.omega + 2 * (outer - dip.omega)
            if (outer - limit) * direction > 0:
                outer = limit
        lo, hi = sorted((inner, outer))
        f_lo = excess(lo)
        if f_lo == 0.0:
            return lo
        root, _ = _bisect_root(excess, lo, hi, f_lo, tol)
        return root

    return crossing(+1, right_stop) - crossing(-1, left_stop)


def switch_contrast(params_on: SystemParams, params_off: SystemParams,
                    omega_probe: float | None = None) -> tuple[float, float]:
    """Transmission at the cavity frequency with the atom tuned in and out."""
    check_same_units(params_on, params_off)
    if params_on.omega_c != params_off.omega_c:
        raise ValueError("on/off parameter sets must share the cavity frequency")
    if omega_probe is None:
        omega_probe = params_on.omega_c
    t_on = float(analytic.transmission(params_on, omega_probe))
    t_off = float(analytic.transmission(params_off, omega_probe))
    return t_on, t_off


def detuning_sensitivity(params: SystemParams, omega, deltas) -> np.ndarray:
    """``|d|t|^2/d delta|`` at fixed ``omega`` for each detuning in ``deltas``.

    The detuning ``delta = omega_a - omega_c`` is applied by moving the cavity.
    """
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    out = np.empty_like(deltas)
    for k, delta in enumerate(deltas):
        shifted = params.replace(omega_c=params.omega_a - delta)
        out[k] = abs(float(analytic.transmission_detuning_derivative(shifted, omega)))
    return out


def optimal_frequency(params: SystemParams, delta_range: tuple[float, float],
                      bracket: tuple[float, float] | None = None,
                      method: Literal["first_order", "minimax"] = "first_order",
                      n_delta: int = 41) -> float:
    """Probe frequency whose transmission is least sensitive to detuning drift.

    ``first_order`` keeps the linear term of d|t|^2/d delta about the nominal
    detuning and solves for its zero; ``minimax`` minimizes the worst-case
    sensitivity over ``delta_range`` directly.  ``first_order`` falls back to
    ``minimax`` when its equation has no root in the bracket.
    """
    if params.gamma_c <= 0 or params.gamma_a <= 0:
        raise ValueError("optimal_frequency needs nonzero cavity and atom dissipation")
    if bracket is None:
        half = 0.5 * params.g if params.g > 0 else params.gamma_wg
        bracket = (params.omega_a - half, params.omega_a + half)
    lo, hi = bracket
    d_lo, d_hi = delta_range
    deltas = np.linspace(d_lo, d_hi, n_delta)
    nominal = params.omega_a - params.omega_c

    def worst(w):
        return float(detuning_sensitivity(params, w, deltas).max())

    if method == "first_order":
        centre = params.replace(omega_c=params.omega_a - nominal)
        grid = np.linspace(lo, hi, 2001)
        s = analytic.transmission_detuning_derivative(centre, grid)
        roots = []
        for i in np.nonzero(np.sign(s[:-1]) * np.sign(s[1:]) <= 0)[0]:
            f = lambda w: float(analytic.transmission_detuning_derivative(centre, w))
            if s[i] == 0:
                roots.append(grid[i])
                continue
            roots.append(_bisect_root(f, grid[i], grid[i + 1], s[i], 1e-9)[0])
        if roots:
            return float(min(roots, key=worst))
    elif method != "minimax":
        raise ValueError(f"unknown method {method!r}")

    res = minimize_scalar(worst, bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-10 * max(1.0, abs(hi))})
    edge = 1e-6 * (hi - lo)
    if not res.success or res.x - lo < edge or hi - res.x < edge:
        raise NoRobustFrequency(f"no interior minimum of the detuning sensitivity in [{lo}, {hi}]")
    return float(res.x)
