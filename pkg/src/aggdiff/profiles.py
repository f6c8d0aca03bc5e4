"""Closed-form large-time profiles: the heat kernel and the viscous Burgers
diffusion wave

    U(x, t) = t^{-1/2} exp(-x^2 / 4t) / (2 A (C - (sqrt(pi)/2) erf(x / (2 sqrt(t))))),

the Hopf-Cole source solution of ``U_t = U_xx - A (U^2)_x`` with
``U(., 0) = M delta_0``. The constant C is fixed by ``int U(x, 1) dx = M``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import integrate
from scipy.special import erfc

from .core import Field, Grid
from .errors import DegenerateProfileError, InvalidArgumentError

__all__ = [
    "HeatProfile",
    "DiffusionWave",
    "burgers_constant",
    "heat_kernel",
    "wave_values",
    "wave_mass_by_quadrature",
    "evaluate_heat",
    "evaluate_wave",
    "diffusion_wave",
]

HALF_SQRT_PI = 0.5 * math.sqrt(math.pi)
_DEGENERACY_GAP = 1e-12
_MASS_TOL = 1e-10


def _excess(M: float, A: float) -> float:
    """C - sign(C) sqrt(pi)/2, computed without cancellation."""
    y = A * M
    return math.copysign(math.sqrt(math.pi) / math.expm1(abs(y)), y)


def burgers_constant(M: float, A: float) -> float:
    """Normalisation constant C_{M,A} = (sqrt(pi)/2) coth(A M / 2).

    With D(e) = C - (1/2) int_0^e exp(-s^2/4) ds the integrand of int U(e, 1) de
    is -D'/(A D), so M = (1/A) log((C + sqrt(pi)/2) / (C - sqrt(pi)/2)).
    """
    if not (np.isfinite(M) and np.isfinite(A)):
        raise InvalidArgumentError("M and A must be finite")
    if M == 0 or A == 0:
        raise InvalidArgumentError(f"M and A must be nonzero (M={M}, A={A})")
    if abs(_excess(M, A)) < _DEGENERACY_GAP:
        raise DegenerateProfileError(
            f"C_(M,A) is within {_DEGENERACY_GAP} of +-sqrt(pi)/2 for M/A = {M / A}"
        )
    return HALF_SQRT_PI / math.tanh(0.5 * A * M)


def heat_kernel(x, t: float):
    return np.exp(-np.square(x) / (4.0 * t)) / np.sqrt(4.0 * np.pi * t)


@dataclass(frozen=True)
class HeatProfile:
    M: float

    def values(self, x, t: float):
        return self.M * heat_kernel(x, t)


def _wave_denominator(C: float, excess: float, z):
    """C - (sqrt(pi)/2) erf(z/2), exact in the tail where erf(z/2) -> sign(C)."""
    s = math.copysign(1.0, C)
    return excess + s * HALF_SQRT_PI * erfc(s * np.asarray(z) / 2.0)


def wave_values(M: float, A: float, C: float, x, t: float):
    """Pointwise U_{M,A}(x, t) for a given normalisation constant C."""
    if C == 0 or abs(C) <= HALF_SQRT_PI:
        raise DegenerateProfileError(f"|C| must exceed sqrt(pi)/2, got {C}")
    excess = C - math.copysign(HALF_SQRT_PI, C)
    x = np.asarray(x, dtype=float)
    z = x / math.sqrt(t)
    return np.exp(-z * z / 4.0) / (2.0 * A * math.sqrt(t) * _wave_denominator(C, excess, z))


def wave_mass_by_quadrature(A: float, C: float, excess: Optional[float] = None) -> float:
    """Adaptive quadrature of int U(e, 1) de for given A and C.

    Pass ``excess = C - sign(C) sqrt(pi)/2`` when it is known more accurately
    than the subtraction; for nearly degenerate C the difference cancels.
    """
    if excess is None:
        excess = C - math.copysign(HALF_SQRT_PI, C)

    def f(e):
        return math.exp(-e * e / 4.0) / (2.0 * A * float(_wave_denominator(C, excess, e)))

    opts = dict(epsabs=0.0, epsrel=1e-13, limit=400)
    left, _ = integrate.quad(f, -np.inf, 0.0, **opts)
    right, _ = integrate.quad(f, 0.0, np.inf, **opts)
    return left + right


@dataclass(frozen=True)
class DiffusionWave:
    """Source solution of the viscous Burgers equation with mass M and coefficient A.

    The closed-form constant is checked against quadrature of the mass
    condition when the object is built.
    """

    M: float
    A: float
    C: float = field(init=False)

    def __post_init__(self):
        C = burgers_constant(self.M, self.A)
        object.__setattr__(self, "C", C)
        q = wave_mass_by_quadrature(self.A, C, _excess(self.M, self.A))
        if abs(q - self.M) > _MASS_TOL * max(1.0, abs(self.M)):
            raise DegenerateProfileError(
                f"mass check failed for M={self.M}, A={self.A}: quadrature gives {q}"
            )

    @property
    def excess(self) -> float:
        return _excess(self.M, self.A)

    def values(self, x, t: float):
        x = np.asarray(x, dtype=float)
        z = x / math.sqrt(t)
        den = _wave_denominator(self.C, self.excess, z)
        return np.exp(-z * z / 4.0) / (2.0 * self.A * math.sqrt(t) * den)


@lru_cache(maxsize=64)
def diffusion_wave(M: float, A: float) -> DiffusionWave:
    """Cached constructor (the construction-time quadrature is not free)."""
    return DiffusionWave(M, A)


def _check_time(t):
    if not t > 0:
        raise InvalidArgumentError(f"profile time must be positive, got {t}")


def evaluate_heat(h: HeatProfile, grid: Grid, t: float) -> Field:
    _check_time(t)
    return Field(grid, h.values(grid.centers, t), t)


def evaluate_wave(w: DiffusionWave, grid: Grid, t: float) -> Field:
    _check_time(t)
    return Field(grid, w.values(grid.centers, t), t)
