"""Strict `key = value` / `[section]` experiment configuration."""
from __future__ import annotations

import configparser
import hashlib
import re
from dataclasses import dataclass, field

from ..core import Params, make_params
from ..errors import DomainError
from ..kernels.quadrature import QuadratureRule
from ..solver.cauchy import SCHEMES

EXPERIMENTS = ("solve", "weiss", "almgren", "growth", "blowup", "classify", "epiperimetric", "spectrum",
               "constants", "identities", "selftest")
SOURCES = ("halfspace", "time_flat", "snapshot", "solve")
PROFILES = ("halfspace", "time_flat", "perturbed_halfspace", "zero")


class ConfigError(ValueError):
    def __init__(self, message, line=None):
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)
        self.line = line


def _floats(text):
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if not parts:
        raise ValueError("empty list")
    return tuple(float(p) for p in parts)


def _ints(text):
    vals = _floats(text)
    if any(v != int(v) for v in vals):
        raise ValueError("expected integers")
    return tuple(int(v) for v in vals)


def _box(text):
    pairs = [p for p in text.split(";") if p.strip()]
    out = []
    for p in pairs:
        lo_hi = _floats(p)
        if len(lo_hi) != 2:
            raise ValueError("each axis needs 'lo hi'")
        out.append(lo_hi)
    return tuple(out)


def _bool(text):
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError("expected true/false")


def _int(text):
    (v,) = _ints(text)
    return v


SCHEMA = {
    "experiment": {"name": str, "seed": _int},
    "params": {"q": float, "n": _int, "m": _int},
    "grid": {"box": _box, "shape": _ints},
    "solver": {"dt": float, "scheme": str, "reaction_floor": float, "max_newton_iters": _int, "linear_tol": float,
               "initial": str, "bc": str, "perturbation": float},
    "quadrature": {"similarity_cutoff": float, "nodes_per_axis": _int, "time_subdivisions": _int},
    "io": {"input": str, "output": str, "snapshot": str},
    "run": {"source": str, "point": _floats, "radii": _floats, "expect": _floats, "tolerance": float,
            "expect_label": str, "monotone": _bool, "terms": str, "scale": float, "rings": _int, "sectors": _int,
            "k": _int, "spectrum_grid": _int, "truncation": float, "fields": _int, "degree": _int,
            "doubling": _bool, "time": float, "cutoff": _bool},
}

# run keys understood by each experiment; others are rejected
RUN_KEYS = {
    "solve": {"expect", "tolerance"},
    "weiss": {"source", "point", "radii", "expect", "tolerance", "monotone", "cutoff"},
    "almgren": {"terms", "point", "radii", "expect", "tolerance", "monotone"},
    "growth": {"source", "point", "radii", "expect", "tolerance", "doubling"},
    "blowup": {"source", "point", "radii", "time"},
    "classify": {"source", "point", "radii", "expect_label"},
    "epiperimetric": {"scale", "rings", "sectors", "expect", "tolerance"},
    "spectrum": {"k", "spectrum_grid", "truncation", "expect", "tolerance"},
    "constants": {"expect", "tolerance"},
    "identities": {"fields", "degree", "time"},
    "selftest": set(),
}

REQUIRED = {
    "solve": [("grid", "box"), ("grid", "shape"), ("solver", "initial")],
    "weiss": [("run", "radii"), ("run", "source")],
    "almgren": [("run", "terms"), ("run", "radii")],
    "growth": [("run", "source"), ("run", "radii")],
    "blowup": [("run", "source"), ("run", "radii")],
    "classify": [("run", "source")],
    "epiperimetric": [],
    "spectrum": [("run", "k")],
    "constants": [],
    "identities": [],
    "selftest": [],
}


@dataclass
class ExperimentConfig:
    experiment: str
    params: Params
    seed: int = 0
    grid: dict = field(default_factory=dict)
    solver: dict = field(default_factory=dict)
    quadrature: QuadratureRule | None = None
    io: dict = field(default_factory=dict)
    run: dict = field(default_factory=dict)
    sha256: str = ""
    lines: dict = field(default_factory=dict, repr=False)

    def line_of(self, section, key=None):
        return self.lines.get((section, key))


def _index_lines(text):
    """(section, key) -> 1-based line number, for error messages."""
    out, section = {}, None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            out.setdefault((section, None), no)
            continue
        key = re.split(r"[=:]", line, 1)[0].strip().lower()
        out.setdefault((section, key), no)
    return out


def parse_config(text: str, experiment: str | None = None) -> ExperimentConfig:
    lines = _index_lines(text)
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",), strict=True,
                                   empty_lines_in_values=False)
    try:
        cp.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno) from None
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any [section]", exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ConfigError("malformed line (expected 'key = value')", line) from None

    values = {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", lines.get((section, None)))
        for key, raw in cp.items(section):
            kinds = SCHEMA[section]
            line = lines.get((section, key))
            if key not in kinds:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line)
            try:
                values[(section, key)] = kinds[key](raw)
            except ValueError as exc:
                raise ConfigError(f"invalid value for {section}.{key}: {raw!r} ({exc})", line) from None

    name = values.get(("experiment", "name"))
    if experiment is None:
        experiment = name
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; choose one of {', '.join(EXPERIMENTS)}",
                          lines.get(("experiment", "name")))
    if name is not None and name != experiment:
        raise ConfigError(f"config is for experiment {name!r}, not {experiment!r}", lines.get(("experiment", "name")))

    for (section, key) in values:
        if section == "run" and key not in RUN_KEYS[experiment]:
            raise ConfigError(f"key run.{key} is not used by experiment {experiment!r}", lines.get((section, key)))
    for section, key in REQUIRED[experiment]:
        if (section, key) not in values:
            raise ConfigError(f"experiment {experiment!r} requires {section}.{key}", lines.get((section, None)))

    def section(name):
        return {k: v for (s, k), v in values.items() if s == name}

    def fail(msg, sec, key=None):
        raise ConfigError(msg, lines.get((sec, key)) or lines.get((sec, None)))

    p = section("params")
    try:
        params = make_params(p.get("q", 0.0), p.get("n", 1), p.get("m", 2))
    except DomainError as exc:
        fail(str(exc), "params", "q")
    run = section("run")
    if "source" in run and run["source"] not in SOURCES:
        fail(f"run.source must be one of {', '.join(SOURCES)}", "run", "source")
    if run.get("source") == "snapshot" and ("io", "input") not in values:
        fail("run.source = snapshot requires io.input", "run", "source")
    if run.get("source") == "solve" and not all((s, k) in values for s, k in REQUIRED["solve"]):
        fail("run.source = solve requires grid.box, grid.shape and solver.initial", "run", "source")
    if "point" in run and len(run["point"]) != params.n + 1:
        fail(f"run.point needs n+1 = {params.n + 1} numbers (x..., t)", "run", "point")
    solver = section("solver")
    if "scheme" in solver and solver["scheme"] not in SCHEMES:
        fail(f"solver.scheme must be one of {', '.join(SCHEMES)}", "solver", "scheme")
    for key in ("initial", "bc"):
        if key in solver and solver[key] not in PROFILES:
            fail(f"solver.{key} must be one of {', '.join(PROFILES)}", "solver", key)
    grid = section("grid")
    if grid:
        if len(grid.get("box", ())) != params.n + 1 or len(grid.get("shape", ())) != params.n + 1:
            fail(f"grid.box and grid.shape need n+1 = {params.n + 1} axes (time first)", "grid", "box")
    quad = section("quadrature")
    try:
        rule = QuadratureRule(**quad) if quad else None
    except DomainError as exc:
        fail(str(exc), "quadrature")
    return ExperimentConfig(experiment, params, values.get(("experiment", "seed"), 0), grid, solver, rule,
                            section("io"), run, hashlib.sha256(text.encode("utf-8")).hexdigest(), lines)


def load_config(path, experiment: str | None = None) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, experiment)
