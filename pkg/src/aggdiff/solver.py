"""Conservative IMEX time stepping for u_t = u_xx - (u b)_x.

The drift ``b`` is ``K' * u`` (nonlocal), ``A u`` (viscous Burgers) or zero.
Advection is explicit first-order upwind in flux form, diffusion is backward
Euler with a zero-flux three-point Laplacian. Both operators telescope, so
the discrete mass is conserved to rounding, and under the CFL restriction
the update is a composition of nonnegative maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.linalg import lapack, solve_banded

from .core import Field, Grid, Kernel, _convolve_values
from .errors import InvalidArgumentError, NumericalBlowupError, StiffnessAbortError

__all__ = [
    "Nonlocal",
    "LocalBurgers",
    "PureDiffusion",
    "VelocityMode",
    "SolverConfig",
    "StepReport",
    "velocity",
    "advective_flux",
    "choose_dt",
    "step",
    "run",
    "solve_elliptic",
    "heat_step_matrix",
    "BOUNDARY_THRESHOLD",
]

EPS_VELOCITY = 1e-30
# Boundary cells above this fraction of max|u| mean the truncation is felt.
BOUNDARY_THRESHOLD = 1e-10


@dataclass(frozen=True)
class Nonlocal:
    kernel: Kernel

    @property
    def A(self) -> float:
        return self.kernel.total_integral


@dataclass(frozen=True)
class LocalBurgers:
    A: float


@dataclass(frozen=True)
class PureDiffusion:
    A = 0.0


VelocityMode = Union[Nonlocal, LocalBurgers, PureDiffusion]


@dataclass(frozen=True)
class SolverConfig:
    grid: Grid
    velocity_mode: VelocityMode
    t_end: float
    cfl_advection: float = 0.5
    dt_max: float = 1e-2
    dt_min: float = 1e-12
    output_times: Optional[Sequence[float]] = None

    def __post_init__(self):
        if not (np.isfinite(self.t_end) and self.t_end >= 0):
            raise InvalidArgumentError(f"t_end must be >= 0, got {self.t_end}")
        if not 0 < self.cfl_advection <= 1:
            raise InvalidArgumentError(f"cfl_advection must lie in (0, 1], got {self.cfl_advection}")
        if not 0 < self.dt_min < self.dt_max:
            raise InvalidArgumentError("need 0 < dt_min < dt_max")
        if isinstance(self.velocity_mode, Nonlocal) and self.velocity_mode.kernel.grid != self.grid:
            raise InvalidArgumentError("kernel was sampled on a different grid")
        times = (0.0, self.t_end) if self.output_times is None else tuple(map(float, self.output_times))
        if any(b < a for a, b in zip(times, times[1:])):
            raise InvalidArgumentError("output_times must be sorted")
        if times and (times[0] < 0 or times[-1] > self.t_end):
            raise InvalidArgumentError("output_times must lie in [0, t_end]")
        gaps = np.diff(times)
        if np.any((gaps > 0) & (gaps < self.dt_min)):
            raise InvalidArgumentError("output times closer than dt_min")
        object.__setattr__(self, "output_times", tuple(sorted(set(times))))

    @property
    def stops(self) -> tuple:
        """Times the integrator must land on exactly."""
        return tuple(sorted(set(self.output_times) | {self.t_end}))


@dataclass(frozen=True)
class StepReport:
    time: float
    dt_used: float
    max_velocity: float
    boundary_leak: float
    cfl_limited: bool = False


def _velocity_values(u: np.ndarray, mode: VelocityMode) -> Optional[np.ndarray]:
    if isinstance(mode, Nonlocal):
        return _convolve_values(mode.kernel, u)
    if isinstance(mode, LocalBurgers):
        return mode.A * u
    if isinstance(mode, PureDiffusion):
        return None
    raise InvalidArgumentError(f"unknown velocity mode {mode!r}")


def velocity(u: Field, mode: VelocityMode) -> Field:
    b = _velocity_values(u.values, mode)
    return Field(u.grid, np.zeros_like(u.values) if b is None else b, u.time)


def _flux_values(u: np.ndarray, b: np.ndarray) -> np.ndarray:
    F = np.zeros(u.size + 1)
    bf = 0.5 * (b[:-1] + b[1:])
    F[1:-1] = np.where(bf >= 0, bf * u[:-1], bf * u[1:])
    return F


def advective_flux(u: Field, b: Field) -> np.ndarray:
    """Upwind face fluxes ``F_{i+1/2}``, length n_cells + 1, zero at the domain faces."""
    if u.grid != b.grid:
        raise InvalidArgumentError("u and b live on different grids")
    return _flux_values(u.values, b.values)


class _DiffusionSolve:
    """Backward-Euler solve of (I - dt D) x = r.

    The matrix is symmetric positive definite and tridiagonal; its LDL^T
    factors are cached for the last dt used.
    """

    def __init__(self, grid: Grid):
        self.n = grid.n_cells
        self.inv_dx2 = 1.0 / grid.dx**2
        self._dt = None
        self._factors = None

    def __call__(self, rhs: np.ndarray, dt: float) -> np.ndarray:
        if dt != self._dt:
            r = dt * self.inv_dx2
            d = np.full(self.n, 1.0 + 2.0 * r)
            d[0] = d[-1] = 1.0 + r
            off = np.full(self.n - 1, -r)
            dd, ee, info = lapack.dpttrf(d, off)
            if info != 0:
                raise NumericalBlowupError("diffusion matrix factorisation failed", math.nan)
            self._dt, self._factors = dt, (dd, ee)
        x, info = lapack.dpttrs(*self._factors, rhs)
        return x


def _advance(u: np.ndarray, b, dt: float, dx: float, solve: _DiffusionSolve) -> np.ndarray:
    # Increment form (I - dt D) du = dt (D u - div F): the solve's rounding then
    # scales with |du| instead of |u|, which keeps long runs conservative.
    G = np.zeros(u.size + 1)
    G[1:-1] = (u[1:] - u[:-1]) / dx
    if b is not None:
        G -= _flux_values(u, b)
    du = solve((dt / dx) * (G[1:] - G[:-1]), dt)
    return u + du


def step(u: Field, cfg: SolverConfig, dt: float, _solve=None):
    """One IMEX step of size ``dt``. Returns ``(new_field, StepReport)``."""
    if u.grid != cfg.grid:
        raise InvalidArgumentError("field and config grids differ")
    if not cfg.dt_min <= dt <= cfg.dt_max:
        raise InvalidArgumentError(f"dt={dt} outside [{cfg.dt_min}, {cfg.dt_max}]")
    solve = _solve or _DiffusionSolve(cfg.grid)
    b = _velocity_values(u.values, cfg.velocity_mode)
    new = _advance(u.values, b, dt, cfg.grid.dx, solve)
    t = u.time + dt
    if not np.all(np.isfinite(new)):
        raise NumericalBlowupError("non-finite state after step", t)
    vmax = 0.0 if b is None else float(np.max(np.abs(b)))
    report = StepReport(t, dt, vmax, float(abs(new[0]) + abs(new[-1])))
    return Field(u.grid, new, t), report


def _next_stop(t: float, stops) -> float:
    for s in stops:
        if s > t:
            return s
    return math.inf


def _choose_dt(t: float, vmax: float, cfg: SolverConfig):
    dt_cfl = cfg.cfl_advection * cfg.grid.dx / max(vmax, EPS_VELOCITY)
    if dt_cfl < cfg.dt_min:
        raise StiffnessAbortError(
            f"CFL step {dt_cfl:.3e} below dt_min={cfg.dt_min:.3e} (max|b|={vmax:.3e})", t
        )
    dt = min(cfg.dt_max, dt_cfl)
    limited = dt_cfl < cfg.dt_max
    gap = _next_stop(t, cfg.stops) - t
    if gap <= dt:
        return gap, limited, True
    if gap < dt + cfg.dt_min:
        # avoid leaving a sliver shorter than dt_min before the stop
        return 0.5 * gap, limited, False
    return dt, limited, False


def choose_dt(u: Field, b: Field, cfg: SolverConfig) -> float:
    """CFL step ``min(dt_max, cfl dx / max|b|)``, shortened to land on the next output time."""
    vmax = float(np.max(np.abs(b.values), initial=0.0))
    return _choose_dt(u.time, vmax, cfg)[0]


def run(
    u0: Field,
    cfg: SolverConfig,
    sink: Optional[Callable[[Field], None]] = None,
    on_step: Optional[Callable[[StepReport], None]] = None,
) -> Field:
    """Integrate from ``u0.time`` to ``cfg.t_end``.

    ``sink`` receives an immutable snapshot at every output time, ``on_step``
    a :class:`StepReport` after every step. Errors carry the failure time.
    """
    if u0.grid != cfg.grid:
        raise InvalidArgumentError("initial field and config grids differ")
    grid, mode = cfg.grid, cfg.velocity_mode
    dx = grid.dx
    solve = _DiffusionSolve(grid)
    outputs = [s for s in cfg.output_times if s >= u0.time]
    out_idx = 0
    t = u0.time
    u = np.array(u0.values)

    def emit(t, u):
        nonlocal out_idx
        while out_idx < len(outputs) and outputs[out_idx] <= t:
            if sink is not None:
                sink(Field(grid, u, t))
            out_idx += 1

    emit(t, u)
    while t < cfg.t_end:
        b = _velocity_values(u, mode)
        vmax = 0.0 if b is None else float(np.max(np.abs(b)))
        if not math.isfinite(vmax):
            raise NumericalBlowupError("non-finite velocity", t)
        dt, limited, lands = _choose_dt(t, vmax, cfg)
        u = _advance(u, b, dt, dx, solve)
        t = _next_stop(t, cfg.stops) if lands else t + dt
        if not np.all(np.isfinite(u)):
            raise NumericalBlowupError("non-finite state after step", t)
        if on_step is not None:
            on_step(StepReport(t, dt, vmax, float(abs(u[0]) + abs(u[-1])), limited))
        emit(t, u)
    return Field(grid, u, t)


def solve_elliptic(u: Field) -> Field:
    """Three-point solve of ``-v'' + v = u`` with v = 0 on the domain faces."""
    g = u.grid
    n, r = g.n_cells, 1.0 / g.dx**2
    ab = np.empty((3, n))
    ab[0, :] = -r
    ab[2, :] = -r
    ab[1, :] = 1.0 + 2.0 * r
    # ghost value -v at the face imposes v = 0 there
    ab[1, 0] = ab[1, -1] = 1.0 + 3.0 * r
    v = solve_banded((1, 1), ab, u.values)
    return Field(g, v, u.time)


def heat_step_matrix(grid: Grid, dt: float) -> np.ndarray:
    """Dense matrix of one diffusion-only step, ``(I - dt D)^{-1}``."""
    n, r = grid.n_cells, dt / grid.dx**2
    m = np.eye(n) * (1.0 + 2.0 * r) - r * (np.eye(n, k=1) + np.eye(n, k=-1))
    m[0, 0] = m[-1, -1] = 1.0 + r
    return np.linalg.inv(m)
