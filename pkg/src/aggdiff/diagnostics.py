"""Trajectory diagnostics: norms, scaled profile distances, decay-exponent
fits, convergence verdicts and the first-moment concentration audit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import optimize

from .core import Field, Grid, Kernel, first_moment, lp_norm, mass
from .errors import (
    InsufficientDataError,
    InvalidArgumentError,
    PreconditionError,
)
from .profiles import HeatProfile, diffusion_wave

__all__ = [
    "DEFAULT_NORMS",
    "DiagnosticsRecord",
    "record",
    "center_value",
    "fit_decay_exponent",
    "ConvergenceReport",
    "convergence_report",
    "strictly_decreasing_after",
    "ConcentrationSpec",
    "ConcentrationAudit",
    "check_concentration_kernel",
    "concentration_audit",
    "moment_inequality_constant",
    "first_moment_lower_bound",
]

DEFAULT_NORMS = (1.0, 2.0, math.inf)
STRICT_MARGIN = 1e-12


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    mass: float
    norms: Dict[float, float]
    peak: float
    first_moment: float
    scaled_heat_distance: Dict[float, float]
    scaled_wave_distance: Optional[Dict[float, float]]
    boundary_mass_fraction: float


def center_value(u: Field) -> float:
    """Mean of the two cells touching x = 0 (a face, since n_cells is even)."""
    m = u.grid.n_cells // 2
    return 0.5 * float(u.values[m - 1] + u.values[m])


def _scaled(diff: np.ndarray, grid: Grid, p: float, t: float) -> float:
    return t ** ((1.0 - 1.0 / p) / 2.0) * lp_norm(Field(grid, diff), p)


def record(u: Field, profile_M: float, A: float, norms: Sequence[float] = DEFAULT_NORMS) -> DiagnosticsRecord:
    norms = tuple(sorted(set(float(p) for p in norms) | set(DEFAULT_NORMS)))
    M = mass(u)
    t = u.time
    heat, wave = {}, None
    if t > 0:
        x = u.grid.centers
        g = HeatProfile(profile_M).values(x, t)
        heat = {p: _scaled(u.values - g, u.grid, p, t) for p in norms}
        if A != 0 and profile_M != 0:
            w = diffusion_wave(float(profile_M), float(A)).values(x, t)
            wave = {p: _scaled(u.values - w, u.grid, p, t) for p in norms}
    bmass = u.grid.dx * (abs(u.values[0]) + abs(u.values[-1]))
    return DiagnosticsRecord(
        time=t,
        mass=M,
        norms={p: lp_norm(u, p) for p in norms},
        peak=center_value(u),
        first_moment=first_moment(u),
        scaled_heat_distance=heat,
        scaled_wave_distance=wave,
        boundary_mass_fraction=bmass / M if M != 0 else 0.0,
    )


def fit_decay_exponent(series: Iterable[Tuple[float, float]], window=(1.0, 100.0)):
    """Least-squares slope of log(value) against log(t) inside ``window``.

    Returns ``(slope, r2)``. A series whose logarithms are constant to
    rounding is fitted exactly by a flat line and gets r2 = 1.
    """
    t_lo, t_hi = window
    if not t_lo > 0:
        raise InsufficientDataError("window must start at t > 0")
    pts = [(t, v) for t, v in series if t_lo <= t <= t_hi]
    if len(pts) < 5:
        raise InsufficientDataError(f"need >= 5 points in {window}, got {len(pts)}")
    t, v = np.array(pts, dtype=float).T
    if np.any(v <= 0):
        raise InsufficientDataError("values must be positive")
    X, Y = np.log(t), np.log(v)
    xc, yc = X - X.mean(), Y - Y.mean()
    slope = float(np.dot(xc, yc) / np.dot(xc, xc))
    ss_tot = float(np.dot(yc, yc))
    resid = yc - slope * xc
    ss_res = float(np.dot(resid, resid))
    noise = (64 * np.finfo(float).eps * max(1.0, float(np.max(np.abs(Y))))) ** 2 * Y.size
    r2 = 1.0 if ss_tot <= noise else 1.0 - ss_res / ss_tot
    return slope, r2


def _distance_series(records, p, kind):
    out = []
    for r in records:
        d = r.scaled_heat_distance if kind == "heat" else r.scaled_wave_distance
        if d and p in d:
            out.append((r.time, d[p]))
    return out


def _dedupe_sorted(series):
    times = [t for t, _ in series]
    if any(b < a for a, b in zip(times, times[1:])):
        raise InvalidArgumentError("records must be sorted by time")
    out = []
    for t, v in series:
        if out and out[-1][0] == t:
            continue
        out.append((t, v))
    return out


@dataclass(frozen=True)
class ConvergenceReport:
    eventually_decreasing: bool
    terminal_value: float
    reference_value: float
    converging: bool


def convergence_report(records: Sequence[DiagnosticsRecord], p: float = 1.0, kind: str = "heat") -> ConvergenceReport:
    """Verdict on a scaled profile distance: converging iff the last value is
    below 0.2 times the value at the first record with t >= 1."""
    series = _dedupe_sorted(_distance_series(records, p, kind))
    series = [(t, v) for t, v in series if t >= 1.0]
    if len(series) < 4:
        raise InsufficientDataError(f"need >= 4 records with t >= 1, got {len(series)}")
    vals = np.array([v for _, v in series])
    tail = np.diff(vals[-4:])
    ref, term = float(vals[0]), float(vals[-1])
    return ConvergenceReport(
        eventually_decreasing=bool(np.all(tail < 0)),
        terminal_value=term,
        reference_value=ref,
        converging=term < 0.2 * ref,
    )


def strictly_decreasing_after(records, p: float, t_from: float, kind: str = "heat") -> bool:
    series = _dedupe_sorted(_distance_series(records, p, kind))
    vals = [v for t, v in series if t >= t_from]
    return len(vals) >= 2 and all(b < a for a, b in zip(vals, vals[1:]))


# ---------------------------------------------------------------------------
# concentration


def _gaussian_bump(x, m, w):
    return m / (w * math.sqrt(2 * math.pi)) * np.exp(-0.5 * np.square(x / w))


def _cosine_bump(x, m, w):
    ax = np.abs(x)
    return np.where(ax < w, m * (1.0 + np.cos(np.pi * np.minimum(ax, w) / w)) / (2.0 * w), 0.0)


@dataclass(frozen=True)
class ConcentrationSpec:
    """Initial datum P^3 u0(P x) built from an even bump u0, plus the kernel constants.

    ``base`` is ``"gaussian"`` (width = standard deviation) or ``"cosine"``
    (width = support half-length).
    """

    P: float
    base: str = "gaussian"
    base_mass: float = 1.0
    base_width: float = 1.0
    delta: float = 1.0
    gamma: float = math.exp(-1.0) / 2.0

    def __post_init__(self):
        if not self.P > 0:
            raise InvalidArgumentError("P must be positive")
        if self.base not in ("gaussian", "cosine"):
            raise InvalidArgumentError(f"unknown base bump {self.base!r}")
        if not (self.delta > 0 and self.gamma > 0):
            raise InvalidArgumentError("delta and gamma must be positive")

    def base_profile(self, x):
        f = _gaussian_bump if self.base == "gaussian" else _cosine_bump
        # evaluate at |x| so the sampled datum is bitwise even
        return f(np.abs(x), self.base_mass, self.base_width)

    def datum(self, grid: Grid) -> Field:
        P = self.P
        return Field(grid, P**3 * self.base_profile(P * grid.centers), 0.0)

    @property
    def mass_P(self) -> float:
        return self.P**2 * self.base_mass


@dataclass(frozen=True)
class ConcentrationAudit:
    initial_slope_sign: int
    theoretical_bound: float
    exact_initial_rate: float
    T_obs: float
    peak_increased: bool
    concentrating: bool
    hypotheses_note: str = "kernel hypotheses verified on cell averages"


def check_concentration_kernel(kernel: Kernel, delta: float, gamma: float) -> None:
    """Raise PreconditionError unless K' is odd, <= 0 for x > 0 and <= -gamma on (0, delta]."""
    s = kernel.samples
    n = kernel.grid.n_cells
    if not np.array_equal(s, -s[::-1]):
        raise PreconditionError("odd-symmetry", "K' cell averages are not antisymmetric")
    pos = s[n:]
    x = np.arange(1, n) * kernel.grid.dx
    if np.any(pos > 0):
        raise PreconditionError("nonpositive-for-x>0", f"max K' on x > 0 is {pos.max():.3e}")
    near = pos[x <= delta * (1 + 1e-12)]
    if near.size == 0:
        raise PreconditionError("bounded-away-near-0", f"no cell centre in (0, {delta}]")
    if near.max() > -gamma * (1 - 1e-12):
        raise PreconditionError(
            "bounded-away-near-0", f"sup K' on (0, {delta}] is {near.max():.6g} > -gamma = {-gamma:.6g}"
        )


def _exact_moment_rate(u: Field, kernel: Kernel) -> float:
    """Discrete d/dt of the first moment at the given state, from the equation
    in weak form: 2 u(0) + int sign(x) u (K' * u) dx."""
    b = kernel.grid.dx * np.convolve(kernel.samples, u.values)[u.grid.n_cells - 1:2 * u.grid.n_cells - 1]
    return 2 * center_value(u) + u.grid.dx * float(np.dot(np.sign(u.grid.centers) * u.values, b))


def concentration_audit(
    records: Sequence[DiagnosticsRecord],
    spec: ConcentrationSpec,
    kernel: Kernel,
    initial: Optional[Field] = None,
) -> ConcentrationAudit:
    """Measured first-moment behaviour against the moment differential inequality.

    ``T_obs`` is the last record time up to which I(t) drops by more than
    1e-12 I(0) between every pair of consecutive records.
    """
    check_concentration_kernel(kernel, spec.delta, spec.gamma)
    recs = sorted(records, key=lambda r: r.time)
    if not recs or recs[0].time != 0:
        raise InvalidArgumentError("audit needs the t = 0 record")
    r0 = recs[0]
    M, I0 = r0.mass, r0.first_moment
    g, d = spec.gamma, spec.delta
    bound = 2 * r0.peak - 0.5 * g * M**2 + (2 * g / d) * M * I0
    rate = _exact_moment_rate(initial, kernel) if initial is not None else math.nan

    I = [r.first_moment for r in recs]
    margin = STRICT_MARGIN * abs(I0)
    k = 0
    while k + 1 < len(I) and I[k + 1] - I[k] < -margin:
        k += 1
    T_obs = recs[k].time
    if len(I) > 1:
        diff = I[1] - I[0]
        sign = 0 if abs(diff) <= margin else int(np.sign(diff))
    else:
        sign = 0
    peak_up = k > 0 and recs[k].peak > r0.peak
    return ConcentrationAudit(
        initial_slope_sign=sign,
        theoretical_bound=bound,
        exact_initial_rate=rate,
        T_obs=T_obs,
        peak_increased=peak_up,
        concentrating=T_obs > 0 and peak_up,
    )


# ---------------------------------------------------------------------------
# first-moment lower bound  M^{3/2} <= C ||u||_2 I^{1/2}


def moment_inequality_constant(grid: Grid, samples: int = 400) -> float:
    """Best constant C in M^{3/2} <= C ||u||_2 I^{1/2} over nonnegative grid functions.

    Minimising ||u||_2 at fixed mass and first moment gives, by the KKT
    conditions, a discrete tent (a - b|x|)_+. The ratio is scale free, so
    only the tent radius matters: scan it, then polish the best bracket.
    """
    x = np.abs(grid.centers)

    def ratio(log_r):
        f = Field(grid, np.clip(1.0 - x / math.exp(log_r), 0.0, None))
        M = mass(f)
        if M <= 0:
            return 0.0
        return M**1.5 / (lp_norm(f, 2) * math.sqrt(first_moment(f)))

    logs = np.linspace(math.log(grid.dx / 2), math.log(grid.L * 1.5), samples)
    vals = [ratio(r) for r in logs]
    k = int(np.argmax(vals))
    lo, hi = logs[max(k - 1, 0)], logs[min(k + 1, samples - 1)]
    res = optimize.minimize_scalar(lambda r: -ratio(r), bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    return max(vals[k], -float(res.fun))


def first_moment_lower_bound(M: float, l2: float, C: float) -> float:
    return (M**1.5 / (C * l2)) ** 2
