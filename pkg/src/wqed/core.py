"""Parameter model for the waveguide / cavity / two-level-atom system.

All frequencies are angular frequencies expressed in one unit system, named
by the ``unit`` tag.  The default ("Omega") measures every frequency in units
of a reference transition frequency with ``v_g = 1``.  The ground-state energy
of the atom is taken as zero, so the eigenfrequency of a scattering state is
simply the photon frequency.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace

from .errors import ConfigError, NegativeRate, NonPositiveRate, UnitMismatch

DEFAULT_UNIT = "Omega"

_FREQUENCY_FIELDS = ("omega_c", "omega_a", "g", "gamma_wg", "gamma_c", "gamma_a", "omega_0")


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of the coupled system.

    Attributes
    ----------
    omega_c : float
        Cavity resonance frequency.
    omega_a : float
        Atomic transition frequency.
    g : float
        Atom-cavity coupling.
    gamma_wg : float
        Waveguide-induced cavity decay rate ``V**2 / v_g``.
    gamma_c, gamma_a : float
        Intrinsic amplitude damping rates of the cavity and the atom.
    v_g : float
        Group velocity of the waveguide mode.
    omega_0 : float
        Reference frequency about which the dispersion is linearized.  Only the
        time-domain solver uses it.
    unit : str
        Tag naming the frequency unit system.
    """

    omega_c: float
    omega_a: float
    g: float
    gamma_wg: float
    gamma_c: float = 0.0
    gamma_a: float = 0.0
    v_g: float = 1.0
    omega_0: float | None = None
    unit: str = DEFAULT_UNIT

    def __post_init__(self):
        for f in fields(self):
            if f.name == "unit":
                continue
            value = getattr(self, f.name)
            if f.name == "omega_0" and value is None:
                object.__setattr__(self, "omega_0", float(self.omega_c))
                continue
            try:
                value = float(value)
            except (TypeError, ValueError):
                raise ConfigError(f"{f.name} must be a number, got {value!r}") from None
            if not math.isfinite(value):
                raise ConfigError(f"{f.name} must be finite, got {value!r}")
            object.__setattr__(self, f.name, value)
        if self.gamma_wg <= 0:
            raise NonPositiveRate(f"gamma_wg must be > 0, got {self.gamma_wg}")
        if self.v_g <= 0:
            raise NonPositiveRate(f"v_g must be > 0, got {self.v_g}")
        for name in ("g", "gamma_c", "gamma_a"):
            if getattr(self, name) < 0:
                raise NegativeRate(f"{name} must be >= 0, got {getattr(self, name)}")
        if not isinstance(self.unit, str) or not self.unit:
            raise ConfigError("unit must be a non-empty string")

    @property
    def V(self) -> float:
        """Pointwise cavity-waveguide coupling ``sqrt(gamma_wg * v_g)``."""
        return math.sqrt(self.gamma_wg * self.v_g)

    @property
    def detuning(self) -> float:
        """Atom-cavity detuning ``omega_a - omega_c``."""
        return self.omega_a - self.omega_c

    @property
    def lossless(self) -> bool:
        return self.gamma_c == 0.0 and self.gamma_a == 0.0

    def replace(self, **changes) -> "SystemParams":
        return replace(self, **changes)

    def to_record(self) -> dict:
        return asdict(self)

    @classmethod
    def from_record(cls, record: dict) -> "SystemParams":
        if not isinstance(record, dict):
            raise ConfigError("parameter record must be a mapping")
        known = {f.name for f in fields(cls)}
        unknown = set(record) - known
        if unknown:
            raise ConfigError(f"unknown parameter field(s): {sorted(unknown)}")
        missing = {"omega_c", "omega_a", "g", "gamma_wg"} - set(record)
        if missing:
            raise ConfigError(f"missing parameter field(s): {sorted(missing)}")
        return cls(**record)


def make_params(omega_c, omega_a, g, gamma_wg, gamma_c=0.0, gamma_a=0.0,
                v_g=1.0, omega_0=None, unit=DEFAULT_UNIT) -> SystemParams:
    """Validated constructor; ``omega_0`` defaults to ``omega_c``."""
    return SystemParams(omega_c=omega_c, omega_a=omega_a, g=g, gamma_wg=gamma_wg,
                        gamma_c=gamma_c, gamma_a=gamma_a, v_g=v_g,
                        omega_0=omega_0, unit=unit)


def rescale(params: SystemParams, omega_ref: float, unit: str | None = None) -> SystemParams:
    """Divide every frequency-like field by ``omega_ref``.

    ``v_g`` is left alone.  Observables computed at ``omega / omega_ref`` with
    the returned parameters equal those at ``omega`` with the originals.
    """
    omega_ref = float(omega_ref)
    if not omega_ref > 0 or not math.isfinite(omega_ref):
        raise NonPositiveRate(f"omega_ref must be > 0, got {omega_ref}")
    if unit is None:
        unit = params.unit if omega_ref == 1.0 else f"{params.unit}/{omega_ref!r}"
    changes = {name: getattr(params, name) / omega_ref for name in _FREQUENCY_FIELDS}
    return replace(params, unit=unit, **changes)


def check_same_units(*params: SystemParams) -> None:
    units = {p.unit for p in params}
    if len(units) > 1:
        raise UnitMismatch(f"parameter sets use different units: {sorted(units)}")
