"""Finite-volume laboratory for u_t = u_xx - (u (K' * u))_x on the line."""

from .core import (
    Chemotaxis,
    Field,
    GaussianMollifier,
    Grid,
    Kernel,
    OddGaussian,
    Tabulated,
    ZeroKernel,
    chemotaxis_potential,
    convolve,
    field_from_function,
    first_moment,
    load_tabulated,
    lp_norm,
    make_grid,
    mass,
    rescale,
    sample_kernel,
)
from .diagnostics import (
    ConcentrationSpec,
    concentration_audit,
    convergence_report,
    fit_decay_exponent,
    record,
)
from .profiles import DiffusionWave, HeatProfile, burgers_constant, evaluate_heat, evaluate_wave
from .solver import (
    LocalBurgers,
    Nonlocal,
    PureDiffusion,
    SolverConfig,
    run,
    solve_elliptic,
    step,
)

__version__ = "0.1.0"
