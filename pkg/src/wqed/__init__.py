"""Single-photon transport through a waveguide side-coupled to a cavity holding a two-level atom."""
from ._backend import BACKEND
from .analytic import (ScatteringSolution, flux_balance_residual, map_direct_coupled, reflection,
                       relative_phase, scatter, transmission)
from .core import SystemParams, make_params, rescale
from .errors import ConfigError, NumericalError, WQEDError

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConfigError", "NumericalError", "ScatteringSolution", "SystemParams", "WQEDError",
    "flux_balance_residual", "make_params", "map_direct_coupled", "reflection", "relative_phase",
    "rescale", "scatter", "transmission",
]
