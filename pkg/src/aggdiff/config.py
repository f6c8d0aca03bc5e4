"""Experiment configuration: flat ``key = value`` text with ``[section]`` headers.

Example::

    preset = heat-asymptotics
    t_end = 100

    [grid]
    L = 120
    n_cells = 4096

    [kernel]
    type = zero

    [datum]
    type = gaussian
    mass = 1
    sigma = 1

Top-level keys come before the first section. ``#`` starts a comment.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ConfigError

__all__ = [
    "PRESETS",
    "KERNEL_TYPES",
    "DATUM_TYPES",
    "GridSection",
    "KernelSection",
    "DatumSection",
    "OutputSection",
    "SolverSection",
    "AnalysisSection",
    "ExperimentConfig",
    "parse_config",
    "serialize_config",
    "load_config",
]

PRESETS = (
    "heat-asymptotics",
    "wave-asymptotics",
    "concentration",
    "chemo-equivalence",
    "burgers-oracle",
    "custom",
)
KERNEL_TYPES = ("chemotaxis", "gaussian", "odd-gaussian", "zero", "tabulated")
DATUM_TYPES = ("gaussian", "scaled-bump", "file", "wave")
VELOCITIES = ("nonlocal", "burgers", "none")
SPACINGS = ("logarithmic", "linear")


@dataclass(frozen=True)
class GridSection:
    L: float = 40.0
    n_cells: int = 4096


@dataclass(frozen=True)
class KernelSection:
    type: str = ""
    amplitude: float = 1.0
    width: float = 1.0
    path: str = ""


@dataclass(frozen=True)
class DatumSection:
    type: str = ""
    mass: float = 1.0
    sigma: float = 1.0
    center: float = 0.0
    P: float = 1.0
    base: str = "gaussian"
    base_mass: float = 1.0
    base_width: float = 1.0
    A: float = 1.0
    time: float = 1.0
    path: str = ""


@dataclass(frozen=True)
class OutputSection:
    count: int = 40
    spacing: str = "logarithmic"
    first: Optional[float] = None
    norms: Tuple[float, ...] = (1.0, 2.0, math.inf)
    dir: str = "out"
    snapshots: int = 4


@dataclass(frozen=True)
class SolverSection:
    velocity: str = "nonlocal"
    burgers_A: float = 1.0
    cfl: float = 0.5
    dt_max: float = 0.01
    dt_min: float = 1e-12


@dataclass(frozen=True)
class AnalysisSection:
    fit_lo: float = 1.0
    fit_hi: float = 100.0
    error_bound: float = 1e-2
    delta: float = 1.0
    gamma: float = math.exp(-1.0) / 2.0


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str = "custom"
    t_end: float = 100.0
    seed: int = 0
    grid: GridSection = field(default_factory=GridSection)
    kernel: Optional[KernelSection] = None
    datum: Optional[DatumSection] = None
    output: OutputSection = field(default_factory=OutputSection)
    solver: SolverSection = field(default_factory=SolverSection)
    analysis: AnalysisSection = field(default_factory=AnalysisSection)

    def output_times(self):
        """Sorted output times, always including 0 and t_end."""
        o = self.output
        if self.t_end == 0:
            return [0.0]
        if o.spacing == "logarithmic":
            first = o.first if o.first is not None else self.t_end * 1e-4
            ts = np.geomspace(first, self.t_end, o.count)
        else:
            ts = np.linspace(self.t_end / o.count, self.t_end, o.count)
        ts[-1] = self.t_end
        return [0.0] + [float(t) for t in ts]


SECTIONS = {
    "": None,
    "grid": GridSection,
    "kernel": KernelSection,
    "datum": DatumSection,
    "output": OutputSection,
    "solver": SolverSection,
    "analysis": AnalysisSection,
}
TOP_KEYS = ("preset", "t_end", "seed")


def _field_types(cls):
    return {f.name: f.type for f in dataclasses.fields(cls)}


def _parse_float(text):
    t = text.strip().lower()
    if t in ("inf", "infinity"):
        return math.inf
    return float(t)


def _convert(type_name: str, text: str):
    if type_name == "float":
        return _parse_float(text)
    if type_name == "Optional[float]":
        return None if text.strip().lower() in ("", "none", "auto") else _parse_float(text)
    if type_name == "int":
        v = float(text)
        if not math.isfinite(v) or v != int(v):
            raise ValueError(f"not an integer: {text}")
        return int(v)
    if type_name == "str":
        return text.strip()
    if type_name == "Tuple[float, ...]":
        return tuple(_parse_float(p) for p in text.split(",") if p.strip())
    raise ValueError(f"unsupported field type {type_name}")


def _tokenize(text: str):
    """Yield (section, key, value, line) in file order."""
    section = ""
    seen_sections = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("malformed section header", lineno)
            section = line[1:-1].strip()
            if section not in SECTIONS or section == "":
                raise ConfigError(f"unknown section [{section}]", lineno, section)
            if section in seen_sections:
                raise ConfigError(f"section [{section}] repeated", lineno, section)
            seen_sections[section] = lineno
            yield section, None, None, lineno
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        yield section, key, value, lineno


def _raw_entries(text: str):
    entries: Dict[Tuple[str, str], Tuple[str, int]] = {}
    present = {}
    for section, key, value, lineno in _tokenize(text):
        if key is None:
            present[section] = lineno
            continue
        allowed = TOP_KEYS if section == "" else _field_types(SECTIONS[section])
        if key not in allowed:
            where = f"[{section}]" if section else "top level"
            raise ConfigError(f"unknown key in {where}", lineno, key)
        if (section, key) in entries:
            raise ConfigError("duplicate key", lineno, key)
        entries[(section, key)] = (value, lineno)
    return entries, present


def parse_config(text: str, overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
    """Parse and validate configuration text.

    ``overrides`` maps dotted names (``"datum.P"``, ``"t_end"``) to raw values
    and is applied as if those lines were present.
    """
    entries, present = _raw_entries(text)
    for dotted, value in (overrides or {}).items():
        section, _, key = dotted.rpartition(".")
        allowed = TOP_KEYS if section == "" else _field_types(SECTIONS.get(section) or object)
        if section not in SECTIONS or key not in allowed:
            raise ConfigError("unknown override key", None, dotted)
        entries[(section, key)] = (value, None)
        if section:
            present.setdefault(section, None)

    def build(section):
        cls = SECTIONS[section]
        kwargs = {}
        types = _field_types(cls)
        for (sec, key), (value, lineno) in entries.items():
            if sec != section:
                continue
            try:
                kwargs[key] = _convert(types[key], value)
            except ValueError as exc:
                raise ConfigError(f"bad value {value!r}: {exc}", lineno, key) from None
        return cls(**kwargs)

    top = {}
    top_types = {"preset": "str", "t_end": "float", "seed": "int"}
    for key in TOP_KEYS:
        if ("", key) in entries:
            value, lineno = entries[("", key)]
            try:
                top[key] = _convert(top_types[key], value)
            except ValueError as exc:
                raise ConfigError(f"bad value {value!r}: {exc}", lineno, key) from None

    cfg = ExperimentConfig(
        **top,
        grid=build("grid"),
        kernel=build("kernel") if "kernel" in present else None,
        datum=build("datum") if "datum" in present else None,
        output=build("output"),
        solver=build("solver"),
        analysis=build("analysis"),
    )
    _validate(cfg, entries)
    return cfg


def _line(entries, section, key):
    return entries.get((section, key), (None, None))[1]


def _validate(cfg: ExperimentConfig, entries) -> None:
    def fail(msg, section="", key="preset"):
        raise ConfigError(msg, _line(entries, section, key), f"{section}.{key}" if section else key)

    if cfg.preset not in PRESETS:
        fail(f"unknown preset {cfg.preset!r}; expected one of {', '.join(PRESETS)}")
    if not (math.isfinite(cfg.t_end) and cfg.t_end >= 0):
        fail("t_end must be finite and >= 0", "", "t_end")
    if not cfg.grid.L > 0:
        fail("L must be positive", "grid", "L")
    if cfg.grid.n_cells < 8 or cfg.grid.n_cells % 2:
        fail("n_cells must be even and >= 8", "grid", "n_cells")
    if cfg.output.spacing not in SPACINGS:
        fail(f"spacing must be one of {SPACINGS}", "output", "spacing")
    if cfg.output.count < 1:
        fail("count must be >= 1", "output", "count")
    if not cfg.output.norms or any(not p >= 1 for p in cfg.output.norms):
        fail("norms must be a list of p >= 1", "output", "norms")
    if cfg.output.first is not None and not 0 < cfg.output.first <= max(cfg.t_end, 0):
        fail("first output time must lie in (0, t_end]", "output", "first")
    if cfg.solver.velocity not in VELOCITIES:
        fail(f"velocity must be one of {VELOCITIES}", "solver", "velocity")
    if not 0 < cfg.solver.cfl <= 1:
        fail("cfl must lie in (0, 1]", "solver", "cfl")
    if not 0 < cfg.solver.dt_min < cfg.solver.dt_max:
        fail("need 0 < dt_min < dt_max", "solver", "dt_min")
    if cfg.kernel is not None and cfg.kernel.type not in KERNEL_TYPES:
        fail(f"kernel type must be one of {KERNEL_TYPES}", "kernel", "type")
    if cfg.kernel is not None and cfg.kernel.type == "tabulated" and not cfg.kernel.path:
        fail("tabulated kernel needs a path", "kernel", "path")
    if cfg.datum is not None and cfg.datum.type not in DATUM_TYPES:
        fail(f"datum type must be one of {DATUM_TYPES}", "datum", "type")
    if cfg.datum is not None and cfg.datum.type == "file" and not cfg.datum.path:
        fail("file datum needs a path", "datum", "path")

    needs_kernel = cfg.solver.velocity == "nonlocal" and cfg.preset != "burgers-oracle"
    if needs_kernel and cfg.kernel is None:
        fail("missing [kernel] section (required for nonlocal velocity)", "", "preset")
    if cfg.datum is None:
        fail("missing [datum] section", "", "preset")

    ktype = cfg.kernel.type if cfg.kernel else None
    p = cfg.preset
    if p == "concentration":
        if cfg.datum.type != "scaled-bump":
            fail("preset 'concentration' requires a scaled-bump datum", "datum", "type")
        if ktype not in ("chemotaxis", "odd-gaussian"):
            fail("preset 'concentration' requires an odd kernel (chemotaxis or odd-gaussian)", "kernel", "type")
        if cfg.solver.velocity != "nonlocal":
            fail("preset 'concentration' requires nonlocal velocity", "solver", "velocity")
    elif p == "heat-asymptotics":
        if cfg.solver.velocity == "burgers" or ktype == "gaussian":
            fail("preset 'heat-asymptotics' requires a kernel with zero integral", "kernel", "type")
    elif p == "wave-asymptotics":
        if ktype not in ("gaussian", "tabulated") or cfg.solver.velocity != "nonlocal":
            fail("preset 'wave-asymptotics' requires a nonlocal kernel with nonzero integral", "kernel", "type")
    elif p == "chemo-equivalence":
        if ktype != "chemotaxis":
            fail("preset 'chemo-equivalence' requires the chemotaxis kernel", "kernel", "type")
    elif p == "burgers-oracle":
        if cfg.solver.velocity != "burgers":
            fail("preset 'burgers-oracle' requires velocity = burgers", "solver", "velocity")
        if cfg.datum.type != "wave":
            fail("preset 'burgers-oracle' requires a wave datum", "datum", "type")


def _format(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_format(v) for v in value)
    if value is None:
        return "auto"
    return str(value)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; ``parse_config(serialize_config(c)) == c``."""
    lines = [f"preset = {cfg.preset}", f"t_end = {_format(cfg.t_end)}", f"seed = {cfg.seed}"]
    for name in ("grid", "kernel", "datum", "output", "solver", "analysis"):
        sec = getattr(cfg, name)
        if sec is None:
            continue
        lines.append("")
        lines.append(f"[{name}]")
        for f in dataclasses.fields(sec):
            lines.append(f"{f.name} = {_format(getattr(sec, f.name))}")
    return "\n".join(lines) + "\n"


def load_config(path, overrides=None) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)
