"""Finite oscillator baths as an explicit model of intrinsic dissipation.

A two-level atom coupled to a dense, flat band of oscillators with couplings
``eta`` and density of states ``rho`` decays (in amplitude) at
``gamma = pi * rho * |eta|^2`` and is shifted by a principal-value sum.  The
functions here build such baths, evolve the closed atom+bath system, and
solve the scattering problem with the bath kept explicit, so the damped
effective model can be checked against them.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
from scipy.sparse.linalg import expm_multiply

from . import analytic
from .core import SystemParams
from .errors import (ConfigError, NotDecaying, RecurrenceHorizonExceeded, SpanTooNarrow,
                     TooFewOscillators)

MIN_OSCILLATORS = 100
MIN_SPAN_OVER_GAMMA = 20.0


@dataclass(frozen=True)
class Bath:
    omegas: np.ndarray
    couplings: np.ndarray
    density: float
    span: tuple[float, float]

    def __post_init__(self):
        if len(self.omegas) != len(self.couplings):
            raise ConfigError("omegas and couplings differ in length")
        if len(self.omegas) > 1 and not np.all(np.diff(self.omegas) > 0):
            raise ConfigError("bath frequencies must be strictly increasing")

    @property
    def n(self) -> int:
        return len(self.omegas)

    @property
    def implied_gamma(self) -> float:
        """Amplitude damping rate ``pi rho |eta|^2`` (flat bath: any oscillator)."""
        if self.n == 0:
            return 0.0
        return float(math.pi * self.density * np.mean(np.abs(self.couplings) ** 2))

    @property
    def heisenberg_time(self) -> float:
        return 2 * math.pi * self.density


def flat_band(gamma_target: float, omega_lo: float, omega_hi: float, n_oscillators: int) -> Bath:
    """Uniform band of ``n`` oscillators at bin centres; no guard rails."""
    if not omega_lo < omega_hi:
        raise ConfigError("empty band")
    if n_oscillators < 1:
        raise ConfigError("need at least one oscillator")
    if gamma_target < 0:
        raise ConfigError("gamma_target must be >= 0")
    rho = n_oscillators / (omega_hi - omega_lo)
    centre = 0.5 * (omega_lo + omega_hi)
    # offsets built symmetric about the band centre so pair sums cancel exactly
    omegas = centre + (np.arange(n_oscillators) - (n_oscillators - 1) / 2) / rho
    eta = math.sqrt(gamma_target / (math.pi * rho))
    return Bath(omegas, np.full(n_oscillators, eta, dtype=complex), rho, (omega_lo, omega_hi))


def build_flat_bath(gamma_target: float, n_oscillators: int, span_halfwidth: float,
                    omega_center: float) -> Bath:
    """Flat bath on ``omega_center +- span_halfwidth`` reproducing ``gamma_target``."""
    if n_oscillators < MIN_OSCILLATORS:
        raise TooFewOscillators(f"need >= {MIN_OSCILLATORS} oscillators, got {n_oscillators}")
    if span_halfwidth < MIN_SPAN_OVER_GAMMA * gamma_target or span_halfwidth <= 0:
        raise SpanTooNarrow(
            f"span {span_halfwidth} must be at least {MIN_SPAN_OVER_GAMMA:g} x gamma ({gamma_target})")
    return flat_band(gamma_target, omega_center - span_halfwidth, omega_center + span_halfwidth,
                     n_oscillators)


@dataclass(frozen=True)
class DecaySeries:
    time: np.ndarray
    e_a: np.ndarray

    @property
    def abs_ea(self) -> np.ndarray:
        return np.abs(self.e_a)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time", "abs_ea"])
        for t, a in zip(self.time, self.abs_ea):
            w.writerow([repr(float(t)), repr(float(a))])
        return buf.getvalue()


def composite_hamiltonian(bath: Bath, omega_a: float, frame: float = 0.0):
    """Sparse single-excitation Hamiltonian of atom (index 0) plus bath, minus ``frame``."""
    n = bath.n
    idx = np.arange(1, n + 1)
    rows = np.concatenate([[0], np.zeros(n, int), idx, idx])
    cols = np.concatenate([[0], idx, np.zeros(n, int), idx])
    vals = np.concatenate([[omega_a - frame], bath.couplings, np.conj(bath.couplings),
                           bath.omegas - frame]).astype(complex)
    return sparse.csr_matrix((vals, (rows, cols)), shape=(n + 1, n + 1))


def evolve_closed_composite(bath: Bath, omega_a: float, t_final: float, dt: float,
                            check_horizon: bool = True, return_norm: bool = False):
    """Unitary evolution of an initially excited atom coupled only to ``bath``.

    Returns a ``DecaySeries`` sampled every ``dt`` (and the total norm per
    sample if ``return_norm``).  Runs past half the recurrence time
    ``2 pi rho`` are refused unless ``check_horizon`` is False.
    """
    lo, hi = bath.span
    half_span = 0.5 * (hi - lo)
    if dt <= 0 or t_final <= 0:
        raise ConfigError("dt and t_final must be positive")
    if dt > 0.1 / half_span * (1 + 1e-12):
        raise ConfigError(f"dt={dt} does not resolve the bath span (need dt <= {0.1 / half_span})")
    if check_horizon and t_final > 0.5 * bath.heisenberg_time:
        raise RecurrenceHorizonExceeded(
            f"t_final={t_final} exceeds half the recurrence time {0.5 * bath.heisenberg_time:.4g}")
    n_samples = int(round(t_final / dt)) + 1
    times = np.linspace(0.0, (n_samples - 1) * dt, n_samples)
    # rotating frame at the atom frequency keeps the operator norm small; |e_a| is unaffected
    H = composite_hamiltonian(bath, omega_a, frame=omega_a)
    psi0 = np.zeros(bath.n + 1, dtype=complex)
    psi0[0] = 1.0
    states = expm_multiply(-1j * H, psi0, start=0.0, stop=times[-1], num=n_samples, endpoint=True)
    e_a = states[:, 0] * np.exp(-1j * omega_a * times)
    series = DecaySeries(times, e_a)
    if return_norm:
        return series, np.linalg.norm(states, axis=1)
    return series


def _log_line_fit(t, y):
    """Least-squares ``y ~ a + b t``; returns (b, rms residual)."""
    A = np.vstack([np.ones_like(t), t]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return coef[1], float(np.sqrt(np.mean(resid ** 2)))


def effective_decay_rate(time, amplitude) -> tuple[float, float]:
    """Decay rate of ``|e_a(t)|`` from a log-linear fit on ``[0.5, 3] / gamma``.

    The window is placed with a whole-series estimate and re-placed once with
    the windowed estimate.  ``fit_error`` is the rms residual of ``ln|e_a|``
    about the fitted line (a relative amplitude deviation).
    """
    time = np.asarray(time, dtype=float)
    amp = np.abs(np.asarray(amplitude))
    keep = amp > 1e-8
    t, y = time[keep], -np.log(amp[keep])
    if len(t) < 3:
        raise NotDecaying("too few samples above 1e-8")
    rate, err = _log_line_fit(t, y)
    for _ in range(2):
        if not rate > 0:
            raise NotDecaying(f"non-positive decay slope {rate}")
        if t[-1] < 3.0 / rate * (1 - 1e-9):
            raise ConfigError(f"series ends at {t[-1]}, shorter than 3 decay times ({3 / rate:.4g})")
        window = (t >= 0.5 / rate) & (t <= 3.0 / rate)
        if window.sum() < 3:
            raise ConfigError("decay window holds fewer than 3 samples")
        rate, err = _log_line_fit(t[window], y[window])
    if not rate > 0:
        raise NotDecaying(f"non-positive decay slope {rate}")
    return float(rate), err


def unit_exponential_rate(time, amplitude, t_max: float | None = None) -> tuple[float, float]:
    """Rate of the one-parameter model ``|e_a| = exp(-gamma t)`` fitted in log space.

    Returns ``(gamma, rms residual of ln|e_a| + gamma t)`` over ``t <= t_max``.
    """
    time = np.asarray(time, dtype=float)
    amp = np.abs(np.asarray(amplitude))
    sel = amp > 1e-8
    if t_max is not None:
        sel &= time <= t_max
    t, y = time[sel], -np.log(amp[sel])
    if not np.any(t > 0):
        raise NotDecaying("no samples at positive time")
    rate = float(np.dot(t, y) / np.dot(t, t))
    if not rate > 0:
        raise NotDecaying(f"non-positive decay rate {rate}")
    return rate, float(np.sqrt(np.mean((y - rate * t) ** 2)))


def _excluded_bin(bath: Bath, omega: float) -> int | None:
    lo, _ = bath.span
    pos = (omega - lo) * bath.density
    k = math.floor(pos)
    if abs(pos - round(pos)) < 1e-9 or k < 0 or k >= bath.n:
        return None
    return k


def lamb_shift_estimate(bath: Bath, omega_a: float) -> float:
    """Principal-value sum ``sum |eta_j|^2 / (omega_a - omega_j)`` without the resonant bin."""
    k = _excluded_bin(bath, omega_a)
    w2 = np.abs(bath.couplings) ** 2
    diff = omega_a - bath.omegas
    mask = np.ones(bath.n, dtype=bool)
    if k is not None:
        mask[k] = False
    mask &= diff != 0
    return float(np.sum(w2[mask] / diff[mask]))


def flat_band_lamb_shift(gamma: float, omega_lo: float, omega_hi: float, omega: float) -> float:
    """Continuum value ``(gamma / pi) ln((omega - lo) / (hi - omega))`` for a flat band."""
    return gamma / math.pi * math.log((omega - omega_lo) / (omega_hi - omega))


def self_energy(bath: Bath, omega, eps_bins: float = 8.0):
    """Retarded bath self-energy ``sum |eta_j|^2 / (omega - omega_j + i eps)``.

    ``eps = eps_bins / rho`` spans several level spacings, which turns the
    discrete sum into a smooth approximation of the continuum
    ``Delta(omega) - i gamma``.
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if bath.n == 0:
        return np.zeros(omega.shape, dtype=complex)
    eps = eps_bins / bath.density
    w2 = np.abs(bath.couplings) ** 2
    return np.sum(w2[None, :] / (omega[:, None] - bath.omegas[None, :] + 1j * eps), axis=1)


def flat_band_self_energy(gamma: float, omega_lo: float, omega_hi: float, omega):
    """Continuum self-energy of a flat band, ``Delta(omega) - i gamma``, inside the band."""
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if np.any((omega <= omega_lo) | (omega >= omega_hi)):
        raise ConfigError("frequencies must lie strictly inside the band")
    return gamma / math.pi * np.log((omega - omega_lo) / (omega_hi - omega)) - 1j * gamma


def scatter_with_self_energy(params: SystemParams, omega, sigma):
    """Transmission amplitude when the atom carries the self-energy ``sigma(omega)``.

    The intrinsic atomic damping in ``params`` is ignored; ``sigma`` supplies it.
    Solves the four steady-state equations for ``(t, r, e_c, e_a)`` directly::

        t - 1 + i (V/v_g) e_c = 0
        r + i (V/v_g) e_c = 0
        (omega - omega_c + i gamma_c) e_c - V (1 + t + r) / 2 - g e_a = 0
        (omega - omega_a - Sigma(omega)) e_a - g e_c = 0
    """
    omegas = np.atleast_1d(np.asarray(omega, dtype=float))
    sigma = np.broadcast_to(np.asarray(sigma, dtype=complex), omegas.shape)
    V, v = params.V, params.v_g
    out = np.empty(len(omegas), dtype=complex)
    b = np.array([1, 0, V / 2, 0], dtype=complex)
    for k, (w, s) in enumerate(zip(omegas, sigma)):
        A = np.array([
            [1, 0, 1j * V / v, 0],
            [0, 1, 1j * V / v, 0],
            [-V / 2, -V / 2, w - params.omega_c + 1j * params.gamma_c, -params.g],
            [0, 0, -params.g, w - params.omega_a - s],
        ], dtype=complex)
        out[k] = np.linalg.solve(A, b)[0]
    return out


def scatter_with_bath(params: SystemParams, bath: Bath, omega, eps_bins: float = 8.0):
    """Transmission amplitude with the atom's bath kept explicit (bath amplitudes eliminated)."""
    return scatter_with_self_energy(params, omega, self_energy(bath, omega, eps_bins))


def compare_scattering_with_bath(params: SystemParams, bath: Bath, omega_list,
                                 eps_bins: float = 8.0) -> float:
    """Max ``| |t_bath|^2 - |t_eff|^2 |`` over ``omega_list``.

    ``params.gamma_a`` is the damping the effective model uses; the bath should
    be built with the same target and be symmetric about the atom.
    """
    if params.gamma_c != 0:
        raise ConfigError("use a lossless cavity so the atom's bath is the only loss channel")
    omegas = np.asarray(omega_list, dtype=float)
    t_bath = scatter_with_bath(params, bath, omegas, eps_bins)
    t_eff = analytic.amplitudes(params, omegas)[0]
    return float(np.max(np.abs(np.abs(t_bath) ** 2 - np.abs(t_eff) ** 2)))


def finite_band_pole_rate(gamma: float, span_halfwidth: float) -> float:
    """Decay rate of the pole for a flat band of finite half-width.

    Solves ``y = gamma (1 + (2/pi) atan(y / span))``, the continuation of the
    flat-band self-energy onto the decaying sheet at band centre.
    """
    y = gamma
    for _ in range(100):
        y_new = gamma * (1 + 2 / math.pi * math.atan(y / span_halfwidth))
        if abs(y_new - y) < 1e-16 * gamma:
            break
        y = y_new
    return y_new
