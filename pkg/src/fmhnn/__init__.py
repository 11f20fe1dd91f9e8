"""Fractional-order memristor-coupled Hopfield networks: simulation and stability analysis."""

from ._backend import BACKEND, COMPILED_AVAILABLE
from .fode import (
    ConfigError,
    ConvolutionMode,
    DomainError,
    FractionalOrder,
    IntegrationError,
    MLArgs,
    SolverConfig,
    SystemDef,
    Trajectory,
    abm_weights,
    mittag_leffler,
    solve_abm,
)
from .models import (
    DEFAULT_PARAMS,
    FmhnnParams,
    FmhnnState,
    RingParams,
    jacobian_ring,
    jacobian_two_neuron,
    rhs_ring,
    rhs_two_neuron,
    ring_system,
    two_neuron_system,
)
from . import dynamics, stability  # noqa: E402,F401

__version__ = "0.1.0"
