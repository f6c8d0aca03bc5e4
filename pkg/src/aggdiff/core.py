"""Grids, fields, aggregation kernels and the nonlocal velocity K' * u.

Everything lives on a uniform cell-centred partition of ``[-L, L]`` with an
even number of cells, so that ``x = 0`` is a cell face and the centres are
exactly symmetric under reflection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np
from scipy import fft as sp_fft
from scipy.special import erfc

from .errors import InvalidArgumentError, InvalidDataError

__all__ = [
    "Grid",
    "Field",
    "Chemotaxis",
    "GaussianMollifier",
    "OddGaussian",
    "ZeroKernel",
    "Tabulated",
    "KernelSpec",
    "Kernel",
    "make_grid",
    "sample_kernel",
    "chemotaxis_potential",
    "load_tabulated",
    "convolve",
    "convolve_direct",
    "mass",
    "lp_norm",
    "first_moment",
    "rescale",
    "field_from_function",
]


@dataclass(frozen=True)
class Grid:
    L: float
    n_cells: int

    def __post_init__(self):
        if not (np.isfinite(self.L) and self.L > 0):
            raise InvalidArgumentError(f"half width must be positive, got {self.L}")
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise InvalidArgumentError(f"n_cells must be a positive integer, got {self.n_cells}")
        if self.n_cells % 2:
            raise InvalidArgumentError(f"n_cells must be even, got {self.n_cells}")
        object.__setattr__(self, "L", float(self.L))
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.n_cells

    @cached_property
    def centers(self) -> np.ndarray:
        # (i + 1/2 - n/2) is an exact half-integer, so x[i] == -x[n-1-i] bitwise.
        x = (np.arange(self.n_cells) + 0.5 - self.n_cells // 2) * self.dx
        x.setflags(write=False)
        return x

    @cached_property
    def faces(self) -> np.ndarray:
        f = (np.arange(self.n_cells + 1) - self.n_cells // 2) * self.dx
        f.setflags(write=False)
        return f


def make_grid(L: float, n_cells: int) -> Grid:
    """Uniform cell-centred grid on ``[-L, L]`` with ``n_cells`` (even) cells."""
    return Grid(L, n_cells)


@dataclass(frozen=True, eq=False)
class Field:
    grid: Grid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_cells,):
            raise InvalidArgumentError(
                f"field has shape {v.shape}, grid has {self.grid.n_cells} cells"
            )
        if not np.all(np.isfinite(v)):
            raise InvalidDataError("field values must be finite")
        if not (np.isfinite(self.time) and self.time >= 0):
            raise InvalidArgumentError(f"time must be finite and >= 0, got {self.time}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "time", float(self.time))

    @property
    def x(self) -> np.ndarray:
        return self.grid.centers

    def with_values(self, values, time=None) -> "Field":
        return Field(self.grid, values, self.time if time is None else time)


def field_from_function(grid: Grid, f, time: float = 0.0) -> Field:
    """Sample ``f`` at the cell centres (midpoint representation of the average)."""
    return Field(grid, np.asarray(f(grid.centers), dtype=float), time)


# ---------------------------------------------------------------------------
# kernel specifications


@dataclass(frozen=True)
class Chemotaxis:
    """K(x) = exp(-|x|)/2, the Green function of -d^2/dx^2 + 1; K' = -sign(x) exp(-|x|)/2."""


@dataclass(frozen=True)
class GaussianMollifier:
    amplitude: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidArgumentError("width must be positive")

    @property
    def total_integral(self) -> float:
        return self.amplitude * self.width * np.sqrt(2 * np.pi)


@dataclass(frozen=True)
class OddGaussian:
    amplitude: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise InvalidArgumentError("width must be positive")


@dataclass(frozen=True)
class ZeroKernel:
    pass


@dataclass(frozen=True, eq=False)
class Tabulated:
    """K' given by samples ``(x, values)``, linearly interpolated, zero outside the table."""

    x: np.ndarray
    values: np.ndarray
    source: str = ""

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        y = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != y.shape or x.size < 2:
            raise InvalidDataError("tabulated kernel needs two equal-length columns, >= 2 rows")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise InvalidDataError("tabulated kernel samples must be finite")
        if np.any(np.diff(x) <= 0):
            raise InvalidDataError("tabulated kernel abscissae must be strictly increasing")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", y)


KernelSpec = Union[Chemotaxis, GaussianMollifier, OddGaussian, ZeroKernel, Tabulated]


def load_tabulated(path) -> Tabulated:
    """Read a two-column ``x  K'(x)`` text file (``#`` comments allowed)."""
    try:
        data = np.loadtxt(path, comments="#", ndmin=2)
    except ValueError as exc:
        raise InvalidDataError(f"{path}: {exc}") from exc
    if data.shape[1] != 2:
        raise InvalidDataError(f"{path}: expected 2 columns, found {data.shape[1]}")
    return Tabulated(data[:, 0], data[:, 1], source=str(path))


@dataclass(frozen=True, eq=False)
class Kernel:
    """Cell averages of a convolution kernel on the offsets ``j*dx``.

    ``samples[k]`` belongs to the offset ``j = k - (n_cells - 1)``.
    """

    grid: Grid
    samples: np.ndarray
    total_integral: float
    l1_norm: float
    spec: object = None
    antisymmetric: bool = False

    @property
    def offsets(self) -> np.ndarray:
        n = self.grid.n_cells
        return np.arange(-(n - 1), n) * self.grid.dx

    def at_offset(self, j: int) -> float:
        return float(self.samples[j + self.grid.n_cells - 1])

    @cached_property
    def _spectrum(self):
        n = self.grid.n_cells
        nfft = sp_fft.next_fast_len(2 * n, real=True)
        return nfft, sp_fft.rfft(self.samples, nfft)


def _symmetric_sum(samples: np.ndarray) -> float:
    # Pairs (j, -j) are added first, so antisymmetric samples cancel exactly.
    m = (samples.size - 1) // 2
    pos = samples[m + 1:]
    neg = samples[m - 1::-1]
    return float(samples[m] + np.sum(pos + neg))


def _assemble(grid: Grid, positive: np.ndarray, center: float, parity: int, spec) -> Kernel:
    """Build full sample array from offsets j = 1..n-1 and the j = 0 value.

    ``parity`` is +1 for an even kernel and -1 for an odd one.
    """
    samples = np.concatenate([parity * positive[::-1], [center], positive])
    samples.setflags(write=False)
    dx = grid.dx
    return Kernel(
        grid=grid,
        samples=samples,
        total_integral=dx * _symmetric_sum(samples),
        l1_norm=dx * _symmetric_sum(np.abs(samples)),
        spec=spec,
        antisymmetric=parity < 0,
    )


def sample_kernel(spec: KernelSpec, grid: Grid) -> Kernel:
    """Cell-averaged K' on the grid offsets.

    Closed-form cell integrals for the analytic kernels; an 8-point
    Gauss-Legendre rule per cell for tabulated ones.
    """
    n, dx = grid.n_cells, grid.dx
    j = np.arange(1, n)
    lo, hi = (j - 0.5) * dx, (j + 0.5) * dx

    if isinstance(spec, ZeroKernel):
        return _assemble(grid, np.zeros(n - 1), 0.0, -1, spec)

    if isinstance(spec, Chemotaxis):
        # integral of -exp(-x)/2 over [lo, hi] = -exp(-lo) (1 - exp(-dx)) / 2
        pos = 0.5 * np.exp(-lo) * np.expm1(-dx) / dx
        return _assemble(grid, pos, 0.0, -1, spec)

    if isinstance(spec, GaussianMollifier):
        a, s = spec.amplitude, spec.width
        r = s * np.sqrt(2.0)
        scale = a * s * np.sqrt(np.pi / 2) / dx
        pos = scale * (erfc(lo / r) - erfc(hi / r))
        center = scale * 2.0 * (1.0 - erfc(0.5 * dx / r))
        return _assemble(grid, pos, center, +1, spec)

    if isinstance(spec, OddGaussian):
        a, s = spec.amplitude, spec.width
        two_s2 = 2.0 * s * s
        pos = a * s * s * (np.exp(-lo * lo / two_s2) - np.exp(-hi * hi / two_s2)) / dx
        return _assemble(grid, pos, 0.0, -1, spec)

    if isinstance(spec, Tabulated):
        nodes, weights = np.polynomial.legendre.leggauss(8)
        offs = np.arange(-(n - 1), n) * dx
        pts = offs[:, None] + 0.5 * dx * nodes[None, :]
        vals = np.interp(pts, spec.x, spec.values, left=0.0, right=0.0)
        samples = 0.5 * (vals @ weights)
        if not np.all(np.isfinite(samples)):
            raise InvalidDataError("tabulated kernel produced non-finite cell averages")
        samples.setflags(write=False)
        return Kernel(
            grid=grid,
            samples=samples,
            total_integral=dx * _symmetric_sum(samples),
            l1_norm=dx * _symmetric_sum(np.abs(samples)),
            spec=spec,
        )

    raise InvalidArgumentError(f"unknown kernel spec {spec!r}")


def chemotaxis_potential(grid: Grid) -> Kernel:
    """Cell averages of K(x) = exp(-|x|)/2 itself, so that convolve() gives K * u."""
    n, dx = grid.n_cells, grid.dx
    lo = (np.arange(1, n) - 0.5) * dx
    pos = -0.5 * np.exp(-lo) * np.expm1(-dx) / dx
    center = -np.expm1(-0.5 * dx) / dx
    return _assemble(grid, pos, center, +1, "chemotaxis-potential")


# ---------------------------------------------------------------------------
# convolution and quadratures


def _check_same_grid(a: Grid, b: Grid):
    if a != b:
        raise InvalidArgumentError(f"grid mismatch: {a} vs {b}")


def _convolve_values(kernel: Kernel, u: np.ndarray) -> np.ndarray:
    n = kernel.grid.n_cells
    nfft, ks = kernel._spectrum
    full = sp_fft.irfft(ks * sp_fft.rfft(u, nfft), nfft)
    return kernel.grid.dx * full[n - 1:2 * n - 1]


def convolve(kernel: Kernel, u: Field) -> Field:
    """Velocity ``b_i = dx * sum_j K'_{i-j} u_j`` (linear, zero-padded FFT)."""
    _check_same_grid(kernel.grid, u.grid)
    return Field(u.grid, _convolve_values(kernel, u.values), u.time)


def convolve_direct(kernel: Kernel, u: Field) -> Field:
    """O(n^2) reference summation of :func:`convolve`."""
    _check_same_grid(kernel.grid, u.grid)
    n = u.grid.n_cells
    idx = np.arange(n)
    toeplitz = kernel.samples[(idx[:, None] - idx[None, :]) + n - 1]
    return Field(u.grid, u.grid.dx * (toeplitz @ u.values), u.time)


def mass(u: Field) -> float:
    return u.grid.dx * float(np.sum(u.values))


def lp_norm(u: Field, p: float) -> float:
    if not p >= 1:
        raise InvalidArgumentError(f"p must be >= 1, got {p}")
    a = np.abs(u.values)
    if np.isinf(p):
        return float(a.max(initial=0.0))
    if p == 1:
        return u.grid.dx * float(a.sum())
    if p == 2:
        return float(np.sqrt(u.grid.dx * np.dot(a, a)))
    return float((u.grid.dx * np.sum(a**p)) ** (1.0 / p))


def first_moment(u: Field) -> float:
    """I = integral of |x| u dx."""
    return u.grid.dx * float(np.dot(np.abs(u.grid.centers), u.values))


def rescale(u: Field, lam: float, target: Grid) -> Field:
    """Parabolic rescaling ``lam * u(lam * x)`` on ``target``; time becomes ``t / lam**2``.

    Piecewise-linear interpolation through the cell values (constant out to
    the domain faces, zero beyond), which keeps nonnegative data nonnegative.
    """
    if not lam > 0:
        raise InvalidArgumentError(f"scale factor must be positive, got {lam}")
    g = u.grid
    xp = np.concatenate([[-g.L], g.centers, [g.L]])
    fp = np.concatenate([u.values[:1], u.values, u.values[-1:]])
    vals = lam * np.interp(lam * target.centers, xp, fp, left=0.0, right=0.0)
    return Field(target, vals, u.time / lam**2)
