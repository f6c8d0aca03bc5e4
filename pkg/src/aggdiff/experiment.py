"""Run a configured experiment and write its artifacts.

Files written to the output directory:

``diagnostics.csv``
    one row per output time; header is :func:`diagnostics_header`.
``summary.txt``
    ``key: value`` lines with fitted exponents, verdicts and audits.
``profile_t<time>.csv``
    snapshots of u, the comparison profile and (chemo-equivalence) v, K*u.
``plot.gp``
    gnuplot script reading the CSV files.
``FAILED``
    only on failure; holds the error message.
"""

from __future__ import annotations

import csv
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import core, diagnostics as diag, profiles, solver
from .config import ExperimentConfig
from .errors import (
    ConfigError,
    DegenerateProfileError,
    InsufficientDataError,
    InvalidArgumentError,
    InvalidDataError,
    NumericalBlowupError,
    PreconditionError,
    StiffnessAbortError,
)

__all__ = [
    "EXIT_OK",
    "EXIT_PARSE",
    "EXIT_BLOWUP",
    "EXIT_PRECONDITION",
    "EXIT_STIFF",
    "EXIT_IO",
    "build_kernel_spec",
    "build_initial_field",
    "diagnostics_header",
    "run_experiment",
    "ExperimentResult",
]

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_BLOWUP = 3
EXIT_PRECONDITION = 4
EXIT_STIFF = 5
EXIT_IO = 6


def _fmt(v) -> str:
    if v is None:
        return ""
    return "%.17g" % v


def _pname(p: float) -> str:
    return "inf" if math.isinf(p) else "%g" % p


def diagnostics_header(norms) -> List[str]:
    ps = sorted(set(float(p) for p in norms) | set(diag.DEFAULT_NORMS))
    cols = ["time", "mass"]
    cols += [f"norm_{_pname(p)}" for p in ps]
    cols += ["peak", "first_moment"]
    cols += [f"heat_dist_{_pname(p)}" for p in ps]
    cols += [f"wave_dist_{_pname(p)}" for p in ps]
    cols += ["boundary_mass_fraction"]
    return cols


def build_kernel_spec(cfg: ExperimentConfig):
    k = cfg.kernel
    if k is None:
        return core.ZeroKernel()
    if k.type == "chemotaxis":
        return core.Chemotaxis()
    if k.type == "gaussian":
        return core.GaussianMollifier(k.amplitude, k.width)
    if k.type == "odd-gaussian":
        return core.OddGaussian(k.amplitude, k.width)
    if k.type == "zero":
        return core.ZeroKernel()
    return core.load_tabulated(k.path)


def _load_datum_file(path, grid):
    data = np.loadtxt(path, comments="#", ndmin=2)
    if data.shape[1] != 2:
        raise InvalidDataError(f"{path}: expected 2 columns")
    x, y = data[:, 0], data[:, 1]
    if np.any(np.diff(x) <= 0) or not np.all(np.isfinite(data)):
        raise InvalidDataError(f"{path}: abscissae must be finite and strictly increasing")
    if np.any(y < 0):
        raise InvalidDataError(f"{path}: density must be nonnegative")
    return core.Field(grid, np.interp(grid.centers, x, y, left=0.0, right=0.0))


def build_initial_field(cfg: ExperimentConfig, grid: core.Grid) -> core.Field:
    d = cfg.datum
    if d.type == "gaussian":
        if not d.sigma > 0 or d.mass < 0:
            raise InvalidArgumentError("gaussian datum needs sigma > 0 and mass >= 0")
        xs = grid.centers - d.center
        vals = d.mass / (d.sigma * math.sqrt(2 * math.pi)) * np.exp(-0.5 * (xs / d.sigma) ** 2)
        return core.Field(grid, vals)
    if d.type == "scaled-bump":
        return _concentration_spec(cfg).datum(grid)
    if d.type == "wave":
        w = profiles.diffusion_wave(d.mass, d.A)
        return core.Field(grid, w.values(grid.centers, d.time))
    return _load_datum_file(d.path, grid)


def _concentration_spec(cfg):
    d, a = cfg.datum, cfg.analysis
    return diag.ConcentrationSpec(
        P=d.P, base=d.base, base_mass=d.base_mass, base_width=d.base_width, delta=a.delta, gamma=a.gamma
    )


def _velocity_mode(cfg, kernel):
    v = cfg.solver.velocity
    if v == "burgers":
        return solver.LocalBurgers(cfg.solver.burgers_A)
    if v == "none":
        return solver.PureDiffusion()
    return solver.Nonlocal(kernel)


@dataclass
class ExperimentResult:
    status: int
    records: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    error: Optional[str] = None


def _snapshot_indices(n_out: int, count: int) -> set:
    if count <= 0 or n_out == 0:
        return set()
    return {int(round(i)) for i in np.linspace(0, n_out - 1, min(count, n_out))}


def _write_diagnostics(path, records, norms):
    header = diagnostics_header(norms)
    ps = sorted(set(float(p) for p in norms) | set(diag.DEFAULT_NORMS))
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in records:
            wave = r.scaled_wave_distance or {}
            row = [_fmt(r.time), _fmt(r.mass)]
            row += [_fmt(r.norms[p]) for p in ps]
            row += [_fmt(r.peak), _fmt(r.first_moment)]
            row += [_fmt(r.scaled_heat_distance.get(p)) for p in ps]
            row += [_fmt(wave.get(p)) for p in ps]
            row += [_fmt(r.boundary_mass_fraction)]
            w.writerow(row)


def _write_profile(out_dir, snap, cols):
    name = "profile_t%s.csv" % ("%.6g" % snap.time)
    with open(os.path.join(out_dir, name), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "u"] + list(cols))
        x = snap.grid.centers
        extra = [cols[c] for c in cols]
        for i in range(x.size):
            w.writerow([_fmt(x[i]), _fmt(snap.values[i])] + [_fmt(e[i]) if e is not None else "" for e in extra])
    return name


def _write_plot_script(out_dir, profile_files, norms):
    header = diagnostics_header(norms)
    col = {name: i + 1 for i, name in enumerate(header)}
    lines = [
        "# gnuplot script: gnuplot -p plot.gp",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set logscale xy",
        "set xlabel 't'",
        "set title 'L^p norms'",
        "plot " + ", ".join(
            f"'diagnostics.csv' using 1:{col[c]} with linespoints" for c in header if c.startswith("norm_")
        ),
        "pause -1",
        "set title 'scaled distances to the asymptotic profiles'",
        "plot " + ", ".join(
            f"'diagnostics.csv' using 1:{col[c]} with lines" for c in header if "_dist_" in c
        ),
        "pause -1",
        "unset logscale",
        "set xlabel 'x'",
    ]
    for f in profile_files:
        lines.append(f"set title '{f}'")
        lines.append(f"plot for [c=2:*] '{f}' using 1:c with lines")
        lines.append("pause -1")
    with open(os.path.join(out_dir, "plot.gp"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_summary(path, summary):
    with open(path, "w", encoding="utf-8") as fh:
        for k, v in summary.items():
            fh.write(f"{k}: {v}\n")


def _analyse(cfg, records, kernel, u0, extras):
    s = {}
    m0 = records[0].mass if records else 0.0
    drift = max((abs(r.mass - m0) for r in records), default=0.0)
    s["mass_initial"] = _fmt(m0)
    s["mass_max_relative_drift"] = _fmt(drift / abs(m0) if m0 else drift)
    s["max_boundary_mass_fraction"] = _fmt(max((r.boundary_mass_fraction for r in records), default=0.0))
    # the oracle presets run over too short a horizon for large-time fits
    long_time = cfg.preset not in ("chemo-equivalence", "burgers-oracle")
    window = (cfg.analysis.fit_lo, cfg.analysis.fit_hi)
    norms = sorted(set(float(p) for p in cfg.output.norms) | set(diag.DEFAULT_NORMS))
    for p in norms if long_time else ():
        key = f"decay_exponent_p={_pname(p)}"
        try:
            slope, r2 = diag.fit_decay_exponent([(r.time, r.norms[p]) for r in records], window)
            s[key] = f"slope={slope:.6f} r2={r2:.6f} expected={(1 / p - 1) / 2:.6f}"
        except InsufficientDataError as exc:
            s[key] = f"n/a ({exc})"
    kinds = ["heat"] if long_time else []
    if long_time and any(r.scaled_wave_distance for r in records):
        kinds.append("wave")
    for kind in kinds:
        for p in norms:
            key = f"{kind}_convergence_p={_pname(p)}"
            try:
                c = diag.convergence_report(records, p, kind)
                verdict = "converging" if c.converging else "not converging"
                s[key] = (
                    f"{verdict} terminal={c.terminal_value:.6e} reference={c.reference_value:.6e} "
                    f"eventually_decreasing={c.eventually_decreasing}"
                )
            except InsufficientDataError as exc:
                s[key] = f"n/a ({exc})"

    if cfg.preset == "concentration":
        a = diag.concentration_audit(records, _concentration_spec(cfg), kernel, initial=u0)
        s["concentration_verdict"] = "concentrating" if a.concentrating else "no concentration detected"
        s["concentration_initial_slope_sign"] = str(a.initial_slope_sign)
        s["concentration_theoretical_bound"] = _fmt(a.theoretical_bound)
        s["concentration_exact_initial_rate"] = _fmt(a.exact_initial_rate)
        s["concentration_T_obs"] = _fmt(a.T_obs)
        s["concentration_peak_increased"] = str(a.peak_increased)
        s["concentration_note"] = a.hypotheses_note

    if cfg.preset == "chemo-equivalence":
        ratio = max(extras["chemo_ratio"], default=0.0)
        bound = 10 * (2 * cfg.grid.L / cfg.grid.n_cells) ** 2
        s["chemo_equivalence_max_ratio"] = _fmt(ratio)
        s["chemo_equivalence_bound"] = _fmt(bound)
        s["chemo_equivalence_status"] = "pass" if ratio <= bound else "fail"

    if cfg.preset == "burgers-oracle":
        err = extras.get("burgers_error")
        s["burgers_oracle_max_rel_error"] = _fmt(err)
        s["burgers_oracle_bound"] = _fmt(cfg.analysis.error_bound)
        s["burgers_oracle_status"] = "pass" if err is not None and err <= cfg.analysis.error_bound else "fail"
    return s


def run_experiment(cfg: ExperimentConfig, out_dir: Optional[str] = None) -> ExperimentResult:
    """Run ``cfg`` and write artifacts into ``out_dir`` (default ``cfg.output.dir``).

    Never raises for documented failure modes; the status code says what
    happened and a ``FAILED`` file is left next to any partial output.
    """
    out_dir = out_dir or cfg.output.dir
    try:
        os.makedirs(out_dir, exist_ok=True)
        for name in ("FAILED", "summary.txt"):
            stale = os.path.join(out_dir, name)
            if os.path.exists(stale):
                os.remove(stale)
    except OSError as exc:
        return ExperimentResult(EXIT_IO, error=str(exc))

    records: List[diag.DiagnosticsRecord] = []
    snaps = []
    extras = {"chemo_ratio": []}
    result = ExperimentResult(EXIT_OK, records=records)
    kernel = None
    try:
        grid = core.make_grid(cfg.grid.L, cfg.grid.n_cells)
        kernel = core.sample_kernel(build_kernel_spec(cfg), grid)
        mode = _velocity_mode(cfg, kernel)
        if cfg.preset == "heat-asymptotics" and mode.A != 0:
            raise PreconditionError("zero-kernel-integral", f"kernel integral is {mode.A}")
        if cfg.preset == "wave-asymptotics" and mode.A == 0:
            raise PreconditionError("nonzero-kernel-integral", "kernel integral is 0")
        if cfg.preset == "concentration":
            diag.check_concentration_kernel(kernel, cfg.analysis.delta, cfg.analysis.gamma)
        u0 = build_initial_field(cfg, grid)
        if np.any(u0.values < 0):
            raise InvalidDataError("initial datum must be nonnegative")
        M0 = core.mass(u0)
        times = cfg.output_times()
        scfg = solver.SolverConfig(
            grid,
            mode,
            cfg.t_end,
            cfl_advection=cfg.solver.cfl,
            dt_max=cfg.solver.dt_max,
            dt_min=cfg.solver.dt_min,
            output_times=times,
        )
        snap_idx = _snapshot_indices(len(scfg.output_times), cfg.output.snapshots)
        potential = core.chemotaxis_potential(grid) if cfg.preset == "chemo-equivalence" else None
        warned = []

        def sink(u):
            k = len(records)
            records.append(diag.record(u, M0, mode.A, cfg.output.norms))
            umax = float(np.max(np.abs(u.values)))
            if not warned and max(abs(u.values[0]), abs(u.values[-1])) > solver.BOUNDARY_THRESHOLD * umax:
                warned.append(u.time)
                warnings.warn(
                    f"boundary cells exceed {solver.BOUNDARY_THRESHOLD:g} * max|u| at t={u.time:g}; "
                    "the truncated domain may be too small",
                    RuntimeWarning,
                    stacklevel=2,
                )
            cols = {}
            if cfg.preset == "burgers-oracle":
                d = cfg.datum
                w = profiles.diffusion_wave(d.mass, cfg.solver.burgers_A)
                cols["profile"] = w.values(grid.centers, d.time + u.time)
                if u.time == cfg.t_end:
                    ref = cols["profile"]
                    extras["burgers_error"] = float(np.max(np.abs(u.values - ref)) / np.max(np.abs(ref)))
            elif u.time > 0:
                if mode.A != 0 and M0 != 0:
                    cols["profile"] = profiles.diffusion_wave(M0, mode.A).values(grid.centers, u.time)
                else:
                    cols["profile"] = profiles.HeatProfile(M0).values(grid.centers, u.time)
            else:
                cols["profile"] = None
            if potential is not None:
                v = solver.solve_elliptic(u).values
                ku = core.convolve(potential, u).values
                cols["v"], cols["K_conv_u"] = v, ku
                if umax > 0:
                    extras["chemo_ratio"].append(float(np.max(np.abs(v - ku)) / umax))
            if k in snap_idx:
                snaps.append((u, cols))

        solver.run(u0, scfg, sink)
        result.summary = _analyse(cfg, records, kernel, u0, extras)
    except StiffnessAbortError as exc:
        result.status, result.error = EXIT_STIFF, str(exc)
    except NumericalBlowupError as exc:
        result.status, result.error = EXIT_BLOWUP, str(exc)
    except OSError as exc:
        result.status, result.error = EXIT_IO, str(exc)
    except ConfigError as exc:
        result.status, result.error = EXIT_PARSE, str(exc)
    except (PreconditionError, InvalidArgumentError, InvalidDataError, DegenerateProfileError) as exc:
        result.status, result.error = EXIT_PRECONDITION, str(exc)

    try:
        _write_diagnostics(os.path.join(out_dir, "diagnostics.csv"), records, cfg.output.norms)
        files = [_write_profile(out_dir, u, cols) for u, cols in snaps]
        _write_plot_script(out_dir, files, cfg.output.norms)
        if result.status == EXIT_OK:
            _write_summary(os.path.join(out_dir, "summary.txt"), result.summary)
        else:
            with open(os.path.join(out_dir, "FAILED"), "w", encoding="utf-8") as fh:
                fh.write(f"exit status {result.status}: {result.error}\n")
    except OSError as exc:
        if result.status == EXIT_OK:
            result.status, result.error = EXIT_IO, str(exc)
    return result
