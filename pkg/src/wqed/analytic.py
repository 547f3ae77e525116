"""Exact single-photon scattering amplitudes in the side-coupled geometry.

The photon enters from the left as ``exp(i q x)``; ``t`` and ``r`` are the
transmitted and reflected amplitudes and ``e_c``, ``e_a`` the cavity and atom
excitation amplitudes in the same plane-wave normalization (incident
amplitude 1, so ``e_c`` and ``e_a`` carry units of sqrt(length)).

All functions broadcast over ``omega`` when it is an array.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .core import SystemParams
from .errors import AtomNotExcited, DegenerateDenominator

_TINY = 1e-300


@dataclass(frozen=True)
class ScatteringSolution:
    omega: float
    q: float
    t: complex
    r: complex
    e_c: complex
    e_a: complex

    @property
    def T(self) -> float:
        return abs(self.t) ** 2

    @property
    def R(self) -> float:
        return abs(self.r) ** 2


@dataclass(frozen=True)
class DirectCoupledSolution:
    """Amplitudes for the cavity placed inline in the waveguide."""

    transmission: complex
    reflection: complex
    e_c: complex
    e_a: complex
    phi: float
    f0: float


def _atom_factor(params: SystemParams, omega):
    return omega - params.omega_a + 1j * params.gamma_a


def amplitudes(params: SystemParams, omega):
    """Return ``(t, r, e_c, e_a)`` as complex arrays broadcast over ``omega``."""
    omega = np.asarray(omega, dtype=float)
    atom = _atom_factor(params, omega)
    if params.g == 0:
        # a decoupled atom cancels out of t, r and e_c; keep it from zeroing the denominator
        atom = np.ones_like(atom)
    cav = omega - params.omega_c + 1j * params.gamma_c
    g2 = params.g ** 2
    denom = atom * (cav + 1j * params.gamma_wg) - g2
    if np.any(np.abs(denom) < _TINY):
        bad = np.atleast_1d(omega)[np.atleast_1d(np.abs(denom) < _TINY)][0]
        raise DegenerateDenominator(float(bad))
    t = (atom * cav - g2) / denom
    r = -atom * 1j * params.gamma_wg / denom
    e_c = atom * params.V / denom
    e_a = params.g * params.V / denom
    return t, r, e_c, e_a


def scatter(params: SystemParams, omega: float) -> ScatteringSolution:
    """Scattering solution at a single probe frequency."""
    t, r, e_c, e_a = (complex(a) for a in amplitudes(params, float(omega)))
    q = (omega - params.omega_0) / params.v_g
    return ScatteringSolution(omega=float(omega), q=q, t=t, r=r, e_c=e_c, e_a=e_a)


def transmission(params: SystemParams, omega):
    """``|t(omega)|**2``, vectorized."""
    return np.abs(amplitudes(params, omega)[0]) ** 2


def reflection(params: SystemParams, omega):
    """``|r(omega)|**2``, vectorized."""
    return np.abs(amplitudes(params, omega)[1]) ** 2


def scatter_detuned_resonance_check(params: SystemParams) -> complex:
    """Transmission amplitude at ``omega = omega_a`` for a lossless system.

    Numerator and denominator both reduce to ``-g**2`` there, so the result is
    1 for any atom-cavity detuning.
    """
    if not params.lossless:
        raise ValueError("resonance identity holds only without dissipation")
    return scatter(params, params.omega_a).t


def relative_phase(sol: ScatteringSolution) -> float:
    """``arg(e_c / e_a)`` in (-pi, pi]."""
    if abs(sol.e_a) == 0.0:
        raise AtomNotExcited("atom excitation amplitude is zero")
    phase = cmath.phase(sol.e_c / sol.e_a)
    return math.pi if phase == -math.pi else phase


def relative_phase_closed_form(params: SystemParams, omega) -> np.ndarray:
    """``arg((omega - omega_a + i gamma_a) / g)``; needs ``g > 0``."""
    if params.g <= 0:
        raise AtomNotExcited("g = 0: atom is never excited")
    return np.angle(_atom_factor(params, np.asarray(omega, dtype=float)))


def flux_balance_residual(sol: ScatteringSolution, params: SystemParams) -> float:
    """Incident flux minus outgoing and dissipated flux (zero for an exact solve)."""
    lost = 2.0 * (params.gamma_c * abs(sol.e_c) ** 2 + params.gamma_a * abs(sol.e_a) ** 2) / params.v_g
    return abs(sol.t) ** 2 + abs(sol.r) ** 2 + lost - 1.0


def map_direct_coupled(sol: ScatteringSolution, phi: float, f0: float) -> DirectCoupledSolution:
    """Fold the side-coupled solution onto the inline (direct-coupled) cavity.

    Transmission and reflection swap roles and pick up the mirror phase; the
    coupling phase ``exp(-i phi f0)`` rides on the excitation amplitudes.
    """
    if not 0.0 <= f0 <= 1.0:
        raise ValueError(f"f0 must lie in [0, 1], got {f0}")
    mirror = cmath.exp(1j * phi)
    coupling = cmath.exp(-1j * phi * f0)
    return DirectCoupledSolution(
        transmission=sol.r * mirror,
        reflection=sol.t * mirror,
        e_c=sol.e_c * coupling,
        e_a=sol.e_a * coupling,
        phi=float(phi),
        f0=float(f0),
    )


def direct_transmission(params: SystemParams, omega):
    """Power transmission of the direct-coupled geometry, ``|r|**2``."""
    return reflection(params, omega)


def transmission_derivative(params: SystemParams, omega):
    """Analytic ``d|t|^2/d omega``.

    ``t = N/D`` with ``N = A C - g^2``, ``D = A (C + i Gamma) - g^2``;
    both are quadratics in ``omega`` with ``N' = A + C`` and ``D' = A + C + i Gamma``.
    """
    omega = np.asarray(omega, dtype=float)
    a = _atom_factor(params, omega)
    c = omega - params.omega_c + 1j * params.gamma_c
    g2 = params.g ** 2
    n = a * c - g2
    d = a * (c + 1j * params.gamma_wg) - g2
    dn = a + c
    dd = a + c + 1j * params.gamma_wg
    d2 = np.abs(d) ** 2
    return (2 * np.real(dn * np.conj(n)) * d2 - np.abs(n) ** 2 * 2 * np.real(dd * np.conj(d))) / d2 ** 2


def transmission_detuning_derivative(params: SystemParams, omega):
    """``d|t|^2/d delta`` with ``delta = omega_a - omega_c`` varied through ``omega_c``.

    ``dN/d omega_c = dD/d omega_c = -A``, and ``d/d delta = -d/d omega_c``.
    """
    omega = np.asarray(omega, dtype=float)
    a = _atom_factor(params, omega)
    c = omega - params.omega_c + 1j * params.gamma_c
    g2 = params.g ** 2
    n = a * c - g2
    d = a * (c + 1j * params.gamma_wg) - g2
    d2 = np.abs(d) ** 2
    dn = a  # = -dN/d omega_c
    dd = a
    return (2 * np.real(dn * np.conj(n)) * d2 - np.abs(n) ** 2 * 2 * np.real(dd * np.conj(d))) / d2 ** 2
