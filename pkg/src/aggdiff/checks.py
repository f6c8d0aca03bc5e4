"""Built-in oracle suite behind ``aggdiff check``."""

from __future__ import annotations

import filecmp
import math
import os
import tempfile
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from . import core, diagnostics as diag, profiles, solver
from .config import parse_config
from .experiment import EXIT_OK, run_experiment


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_convolution_oracle():
    rng = np.random.default_rng(7)
    worst = 0.0
    for n in (8, 64, 1024):
        g = core.make_grid(5.0, n)
        for spec in (core.Chemotaxis(), core.GaussianMollifier(0.7, 0.8), core.OddGaussian(1.3, 0.5)):
            k = core.sample_kernel(spec, g)
            u = core.Field(g, rng.random(n))
            fast = core.convolve(k, u).values
            slow = core.convolve_direct(k, u).values
            worst = max(worst, np.max(np.abs(fast - slow)) / np.max(np.abs(slow)))
    return worst <= 1e-12, f"max relative FFT/direct mismatch {worst:.2e} (tol 1e-12)"


def check_convolution_linearity():
    rng = np.random.default_rng(11)
    g = core.make_grid(10.0, 256)
    k = core.sample_kernel(core.Chemotaxis(), g)
    u, w = rng.random(256), rng.random(256)
    a, b = rng.normal(size=2)
    lhs = core.convolve(k, core.Field(g, a * u + b * w)).values
    rhs = a * core.convolve(k, core.Field(g, u)).values + b * core.convolve(k, core.Field(g, w)).values
    err = np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs))
    return err <= 1e-12, f"relative linearity defect {err:.2e} (tol 1e-12)"


def _concentration_run(P, n=512, L=2.0, t_end=0.01):
    g = core.make_grid(L, n)
    k = core.sample_kernel(core.Chemotaxis(), g)
    u0 = diag.ConcentrationSpec(P=P).datum(g)
    states = []
    cfg = solver.SolverConfig(g, solver.Nonlocal(k), t_end, dt_max=1e-3, output_times=np.linspace(0, t_end, 11))
    solver.run(u0, cfg, states.append)
    return u0, states


def check_positivity():
    _, states = _concentration_run(10.0)
    worst = min(float(np.min(s.values)) / float(np.max(s.values)) for s in states)
    return worst >= -1e-14, f"min u / max u over trajectory {worst:.2e} (tol -1e-14)"


def check_evenness():
    _, states = _concentration_run(10.0)
    worst = max(np.max(np.abs(s.values - s.values[::-1])) / np.max(np.abs(s.values)) for s in states)
    return worst <= 1e-13, f"max relative asymmetry {worst:.2e} (tol 1e-13)"


def check_mass_conservation():
    u0, states = _concentration_run(10.0)
    m0 = core.mass(u0)
    worst = max(abs(core.mass(s) - m0) / m0 for s in states)
    return worst <= 1e-12, f"max relative mass drift {worst:.2e} (tol 1e-12)"


def check_holder():
    rng = np.random.default_rng(3)
    g = core.make_grid(3.0, 64)
    ok = True
    for _ in range(200):
        u = core.Field(g, rng.random(64) * rng.exponential(size=64))
        l1, l2, li = (core.lp_norm(u, p) for p in (1, 2, math.inf))
        ok &= l2 * l2 <= l1 * li * (1 + 4 * np.finfo(float).eps)
    return bool(ok), "||u||_2^2 <= ||u||_1 ||u||_inf on 200 random fields"


def check_burgers_constant():
    worst = 0.0
    for M in (0.1, 1.0, 10.0):
        for A in (-2.0, 0.5, 2.0):
            C = profiles.burgers_constant(M, A)
            q = profiles.wave_mass_by_quadrature(A, C, profiles._excess(M, A))
            worst = max(worst, abs(q - M) / M)
    return worst <= 1e-10, f"closed-form C vs quadrature mass, max relative error {worst:.2e}"


def check_heat_matrix():
    g = core.make_grid(1.0, 16)
    m = solver.heat_step_matrix(g, 0.01)
    ok = np.all(m >= 0) and np.allclose(m.sum(axis=1), 1.0, rtol=0, atol=1e-13)
    return bool(ok), "diffusion step matrix is nonnegative with unit row sums (n=16)"


_DET_CONFIG = """\
preset = concentration
t_end = 0.005
[grid]
L = 2
n_cells = 256
[kernel]
type = chemotaxis
[datum]
type = scaled-bump
P = 5
[output]
count = 8
spacing = linear
[solver]
dt_max = 0.001
"""


def check_determinism():
    cfg = parse_config(_DET_CONFIG)
    with tempfile.TemporaryDirectory() as tmp:
        a, b = os.path.join(tmp, "a"), os.path.join(tmp, "b")
        ra, rb = run_experiment(cfg, a), run_experiment(cfg, b)
        if ra.status != EXIT_OK or rb.status != EXIT_OK:
            return False, f"runs failed: {ra.error or rb.error}"
        same = filecmp.cmp(os.path.join(a, "diagnostics.csv"), os.path.join(b, "diagnostics.csv"), shallow=False)
    return same, "diagnostics.csv byte-identical across two runs"


CHECKS: List[tuple] = [
    ("convolution-oracle", check_convolution_oracle),
    ("convolution-linearity", check_convolution_linearity),
    ("positivity", check_positivity),
    ("evenness", check_evenness),
    ("mass-conservation", check_mass_conservation),
    ("holder-interpolation", check_holder),
    ("burgers-constant", check_burgers_constant),
    ("heat-step-matrix", check_heat_matrix),
    ("determinism", check_determinism),
]


def run_checks(report: Callable[[CheckResult], None] = None) -> List[CheckResult]:
    results = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failing check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        res = CheckResult(name, bool(ok), detail)
        results.append(res)
        if report is not None:
            report(res)
    return results
