"""Fit measured transmission spectra with the cavity-atom scattering model.

Two models are available: ``direct_coupled_T`` (``|r|^2``, the cavity sits
in the line, as in circuit-QED transmission measurements) and
``side_coupled_T`` (``|t|^2``).  Both carry an overall ``amplitude_scale``.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import analytic
from .core import SystemParams
from .errors import (ConfigError, DegenerateFit, DidNotConverge, ParseError, TooFewPoints)

FIT_FIELDS = ("omega_c", "omega_a", "g", "gamma_wg", "gamma_c", "gamma_a", "amplitude_scale")
MODELS = ("direct_coupled_T", "side_coupled_T")
MIN_POINTS = 8
_FREQUENCIES = ("omega_c", "omega_a")


@dataclass(frozen=True)
class MeasuredSpectrum:
    omega: np.ndarray
    T_measured: np.ndarray
    sigma: np.ndarray | None = None
    unit_scale: str = "Omega"
    sorted_on_load: bool = False

    def __post_init__(self):
        n = len(self.omega)
        if len(self.T_measured) != n or (self.sigma is not None and len(self.sigma) != n):
            raise ConfigError("omega, T and sigma must have equal length")
        if n < MIN_POINTS:
            raise TooFewPoints(f"need at least {MIN_POINTS} points, got {n}")
        if not np.all(np.diff(self.omega) > 0):
            raise ConfigError("omega must be strictly increasing")
        if self.sigma is not None and not np.all(self.sigma > 0):
            raise ConfigError("sigma must be positive")

    @property
    def weights(self) -> np.ndarray:
        if self.sigma is None:
            return np.ones(len(self.omega))
        return 1.0 / self.sigma ** 2


def load_spectrum_csv(path, unit_scale: str = "Omega") -> MeasuredSpectrum:
    """Read ``omega,T[,sigma]``; unsorted rows are sorted and flagged."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise TooFewPoints("empty file")
        header = [h.strip() for h in header]
        if header not in (["omega", "T"], ["omega", "T", "sigma"]):
            raise ParseError(f"expected header omega,T[,sigma], got {','.join(header)}", 1)
        ncol = len(header)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != ncol:
                raise ParseError(f"expected {ncol} columns, got {len(row)}", line)
            try:
                vals = [float(c) for c in row]
            except ValueError:
                raise ParseError(f"non-numeric value in {row!r}", line) from None
            if not all(math.isfinite(v) for v in vals):
                raise ParseError(f"non-finite value in {row!r}", line)
            rows.append(vals)
    if len(rows) < MIN_POINTS:
        raise TooFewPoints(f"need at least {MIN_POINTS} data rows, got {len(rows)}")
    data = np.array(rows)
    order = np.argsort(data[:, 0], kind="stable")
    was_sorted = bool(np.all(order == np.arange(len(order))))
    if not was_sorted:
        warnings.warn(f"{path}: rows were not sorted by omega; sorted on load", stacklevel=2)
        data = data[order]
    sigma = data[:, 2] if ncol == 3 else None
    return MeasuredSpectrum(data[:, 0], data[:, 1], sigma, unit_scale, sorted_on_load=not was_sorted)


def model_transmission(params: SystemParams, omega, model: str = "direct_coupled_T",
                       amplitude_scale: float = 1.0) -> np.ndarray:
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r}; choose from {MODELS}")
    t, r, *_ = analytic.amplitudes(params, np.asarray(omega, dtype=float))
    amp = r if model == "direct_coupled_T" else t
    return amplitude_scale * np.abs(amp) ** 2


def synthesize_measurement(params: SystemParams, omega_grid, noise_sigma: float, seed: int,
                           amplitude_scale: float = 1.0,
                           model: str = "direct_coupled_T") -> MeasuredSpectrum:
    """Model spectrum plus seeded gaussian noise, clipped at zero."""
    if noise_sigma < 0:
        raise ConfigError("noise_sigma must be >= 0")
    omega = np.asarray(omega_grid, dtype=float)
    T = model_transmission(params, omega, model, amplitude_scale)
    if noise_sigma > 0:
        rng = np.random.default_rng(seed)
        T = np.clip(T + rng.normal(0.0, noise_sigma, len(omega)), 0.0, None)
        sigma = np.full(len(omega), float(noise_sigma))
    else:
        sigma = None
    return MeasuredSpectrum(omega, T, sigma, params.unit)


def fig5_params() -> SystemParams:
    """Circuit-QED parameters of the measured sample, in GHz (cyclic)."""
    return SystemParams(omega_c=6.0446, omega_a=6.0444, g=5.73e-3, gamma_wg=0.361e-3,
                        gamma_c=0.0, gamma_a=0.86e-3, unit="GHz")


def fit_window(params: SystemParams, n_points: int = 200, half_width_in_g: float = 4.0):
    """Frequency grid of ``n_points`` on ``omega_c +- half_width_in_g * g``."""
    hw = half_width_in_g * params.g
    return np.linspace(params.omega_c - hw, params.omega_c + hw, n_points)


@dataclass(frozen=True)
class FitResult:
    params: SystemParams
    amplitude_scale: float
    covariance_estimate: np.ndarray
    residual_rms: float
    n_iterations: int
    converged: bool
    free_parameters: tuple = field(default=())

    def __post_init__(self):
        if not self.residual_rms >= 0:
            raise ValueError("residual_rms must be >= 0")

    def to_record(self) -> dict:
        return {
            "params": self.params.to_record(),
            "amplitude_scale": float(self.amplitude_scale),
            "covariance_estimate": np.asarray(self.covariance_estimate, dtype=float).tolist(),
            "residual_rms": float(self.residual_rms),
            "n_iterations": int(self.n_iterations),
            "converged": bool(self.converged),
            "free_parameters": list(self.free_parameters),
        }


def peak_separation(params: SystemParams, model: str = "direct_coupled_T",
                    amplitude_scale: float = 1.0) -> float:
    """Distance between the two outermost local maxima of the model near ``omega_c``."""
    span = 3 * max(params.g, params.gamma_wg, params.gamma_a, params.gamma_c)
    step = min(params.gamma_wg, params.g) / 20
    w = np.arange(params.omega_c - span, params.omega_c + span + step, step)
    y = model_transmission(params, w, model, amplitude_scale)
    idx = np.flatnonzero((y[1:-1] > y[:-2]) & (y[1:-1] >= y[2:])) + 1
    if len(idx) < 2:
        raise DegenerateFit("model spectrum has fewer than two peaks")
    peaks = []
    for k in (idx[0], idx[-1]):
        res = minimize_scalar(lambda x: -float(model_transmission(params, x, model, amplitude_scale)),
                              bounds=(w[k - 1], w[k + 1]), method="bounded",
                              options={"xatol": step * 1e-9})
        peaks.append(res.x)
    return float(peaks[1] - peaks[0])


class _Problem:
    """Free parameters in normalised coordinates ``u = (p - p0) / scale``."""

    def __init__(self, measured, base: dict, free, model, tie):
        self.measured = measured
        self.model = model
        self.tie = tie
        self.free = list(free)
        self.base = dict(base)
        g = max(base["g"], 1e-300)
        self.p0 = np.array([base[k] for k in self.free], dtype=float)
        self.scale = np.array([self._scale_of(k, g) for k in self.free])
        lower = []
        for k, p, s in zip(self.free, self.p0, self.scale):
            if k in _FREQUENCIES:
                lower.append(None)
            elif k == "gamma_wg":
                lower.append((1e-9 * s - p) / s)
            else:
                lower.append(-p / s)
        self.bounds = [(lo, None) for lo in lower]
        self.w = measured.weights

    def _scale_of(self, name, g):
        if name in _FREQUENCIES:
            return g
        if name == "amplitude_scale":
            return 1.0
        return self.base[name] if self.base[name] > 0 else 0.1 * g

    def values(self, u) -> dict:
        vals = dict(self.base)
        for k, p in zip(self.free, self.p0 + self.scale * np.asarray(u)):
            vals[k] = float(p)
        if self.tie:
            vals["omega_a"] = vals["omega_c"]
        return vals

    def evaluate(self, vals: dict) -> np.ndarray:
        scale = vals.pop("amplitude_scale")
        params = SystemParams(**vals)
        return model_transmission(params, self.measured.omega, self.model, scale)

    def objective(self, u) -> float:
        vals = self.values(u)
        for k in ("gamma_wg", "g", "gamma_c", "gamma_a"):
            if vals[k] < 0 or (k == "gamma_wg" and vals[k] <= 0):
                return math.inf
        resid = self.evaluate(vals) - self.measured.T_measured
        return float(np.sum(self.w * resid ** 2))


def _split(params: SystemParams, amplitude_scale: float) -> dict:
    rec = params.to_record()
    rec["amplitude_scale"] = amplitude_scale
    return rec


def _grid_seed(problem: _Problem, n_grid: int) -> dict:
    """Coarse search over (omega_c, g), carrying omega_a along at fixed detuning."""
    base = problem.base
    om = problem.measured.omega
    detuning = 0.0 if problem.tie else base["omega_a"] - base["omega_c"]
    wc_grid = np.linspace(om[0], om[-1], n_grid)
    g_grid = base["g"] * np.linspace(0.5, 1.5, n_grid)
    best, best_vals = math.inf, dict(base)
    for wc in wc_grid:
        for g in g_grid:
            vals = dict(base, omega_c=float(wc), omega_a=float(wc + detuning), g=float(g))
            resid = problem.evaluate(dict(vals)) - problem.measured.T_measured
            f = float(np.sum(problem.w * resid ** 2))
            if f < best:
                best, best_vals = f, vals
    return best_vals


def _covariance(problem: _Problem, u_best) -> np.ndarray:
    k = len(problem.free)
    n = len(problem.measured.omega)
    if k == 0:
        return np.zeros((0, 0))
    jac = np.empty((n, k))
    h = 1e-6
    for j in range(k):
        du = np.zeros(k)
        du[j] = h
        fp = problem.evaluate(problem.values(u_best + du))
        fm = problem.evaluate(problem.values(u_best - du))
        jac[:, j] = (fp - fm) / (2 * h * problem.scale[j])
    wj = jac * problem.w[:, None]
    cov = np.linalg.pinv(jac.T @ wj)
    if problem.measured.sigma is None:
        resid = problem.evaluate(problem.values(u_best)) - problem.measured.T_measured
        dof = max(n - k, 1)
        cov = cov * float(np.sum(resid ** 2)) / dof
    return cov


def fit_parameters(measured: MeasuredSpectrum, initial: SystemParams, free_mask=(),
                   model: str = "direct_coupled_T", amplitude_scale: float = 1.0,
                   tie_atom_to_cavity: bool = False, grid_search: bool = True, n_grid: int = 41,
                   max_iter: int = 20000, rtol: float = 1e-8) -> FitResult:
    """Weighted least-squares fit of ``model`` to ``measured``.

    ``free_mask`` names the parameters allowed to vary, drawn from
    ``FIT_FIELDS``.  With ``tie_atom_to_cavity`` the atom frequency follows
    ``omega_c``.  The simplex search is seeded by a grid search over
    ``(omega_c, g)`` when both are free.  The fit counts as converged when
    every free parameter moved by less than ``rtol`` (relative) over the last
    ``2 * dim`` iterations; otherwise ``DidNotConverge`` carries the best
    result found.
    """
    if model not in MODELS:
        raise ConfigError(f"unknown model {model!r}; choose from {MODELS}")
    free = [k for k in FIT_FIELDS if k in set(free_mask)]
    unknown = set(free_mask) - set(FIT_FIELDS)
    if unknown:
        raise ConfigError(f"unknown free parameters {sorted(unknown)}")
    if tie_atom_to_cavity and "omega_a" in free:
        free.remove("omega_a")
    base = _split(initial, amplitude_scale)
    base.pop("unit")
    if tie_atom_to_cavity:
        base["omega_a"] = base["omega_c"]
    problem = _Problem(measured, base, free, model, tie_atom_to_cavity)

    if grid_search and "omega_c" in free and "g" in free:
        problem = _Problem(measured, _grid_seed(problem, n_grid), free, model, tie_atom_to_cavity)
    spacing = float(np.max(np.diff(measured.omega)))
    if 2 * problem.base["g"] < 2 * spacing:
        raise DegenerateFit(f"peak separation 2g={2 * problem.base['g']:.4g} is not resolved "
                            f"by the frequency grid (spacing {spacing:.4g})")

    def finish(u, n_iter, converged):
        vals = problem.values(u)
        scale = vals.pop("amplitude_scale")
        params = SystemParams(unit=initial.unit, **vals)
        model_vals = model_transmission(params, measured.omega, model, scale)
        rms = float(np.sqrt(np.mean((model_vals - measured.T_measured) ** 2)))
        return FitResult(params, scale, _covariance(problem, u), rms, n_iter, converged, tuple(free))

    dim = len(free)
    if dim == 0:
        return finish(np.zeros(0), 0, True)

    history = []
    u = np.zeros(dim)
    n_iter = 0
    converged = False
    # restart the simplex around each result: a collapsed simplex can stall short of the minimum
    for _ in range(10):
        res = minimize(problem.objective, u, method="Nelder-Mead", bounds=problem.bounds,
                       callback=lambda xk: history.append(problem.p0 + problem.scale * xk),
                       options={"maxiter": max(max_iter - n_iter, 1), "xatol": 1e-11,
                                "fatol": 1e-15 * problem.objective(u), "adaptive": dim > 3,
                                "initial_simplex": _simplex(u, 0.05)})
        n_iter += res.nit
        moved = np.max(np.abs(res.x - u)) if n_iter > res.nit else math.inf
        u = res.x
        converged = _settled(history, 2 * dim, rtol, problem.scale) and moved < 1e-9
        if converged or n_iter >= max_iter:
            break
    result = finish(u, n_iter, converged)
    if not converged:
        raise DidNotConverge(f"fit did not settle within {n_iter} iterations", result)
    return result


def _simplex(u, step):
    dim = len(u)
    pts = np.tile(u, (dim + 1, 1))
    for j in range(dim):
        pts[j + 1, j] += step
    return pts


def _settled(history, window, rtol, scale) -> bool:
    if len(history) < window + 1:
        return False
    recent = np.array(history[-(window + 1):])
    # parameters sitting at zero are judged against their natural scale
    ref = np.maximum(np.abs(recent[-1]), scale)
    change = np.max(np.abs(recent - recent[-1]), axis=0) / ref
    return bool(np.all(change < rtol))
