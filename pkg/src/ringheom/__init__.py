"""Solver for the dissipative quantum dynamics of a charged particle on
a flux-threaded ring, coupled to two anisotropic Drude baths through the
hierarchical equations of motion in a discrete Wigner representation."""

from .config import RunConfig, load_config, parse_config
from .errors import (
    CapacityExceeded,
    ConfigError,
    ConfigParseError,
    ConfigValidationError,
    NoConvergence,
    NonFiniteState,
    PoleCollision,
    RingHeomError,
    StepUnderflow,
)
from .generator import Generator, RingSpec, build_tables, liouvillian, phi, potential_kernel, rhs, theta0, thetaj
from .grid import PhaseSpaceGrid, load_block, save_block
from .hierarchy import HierarchyIndexSet, decay_rate, decay_table, enumerate_indices
from .observables import (
    ResponseSeries,
    Spectrum,
    apply_dipole_commutator,
    expect_costheta,
    expect_momentum,
    pdf,
    response_function,
    spectrum,
)
from .pade import BathSpec, PadeSet, coth_surrogate_error, hierarchy_coefficients, pade_frequencies
from .propagator import (
    HeomState,
    StepControl,
    adapt_step,
    estimate_error,
    load_checkpoint,
    propagate,
    relax_to_equilibrium,
    rkf_step,
    save_checkpoint,
)
from .runner import build_problem, initial_state, run_equilibrium, run_flux_scan, run_response

__version__ = "0.1.0"
