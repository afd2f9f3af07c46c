"""Run configuration: YAML parsing, validation, defaults, and serialization."""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .asymptotic import (
    AsymptoticDatum,
    ClassParameters,
    load_tabulated_grid,
    make_gaussian_cosine_datum,
)
from .errors import ConfigError, ParameterError

DEFAULTS = {
    "nx": 256,
    "nv": 512,
    "nt": 200,
    "newton_tol": 1e-10,
    "ode_substeps": 4,
    "fixed_point_tol": 1e-9,
    "max_iterations": 30,
    "mode": "theorem",
    "seed": 0,
}

MIN_COUNTS = {"nx": 8, "nv": 2, "nt": 2, "ode_substeps": 1, "max_iterations": 1}


@dataclass(frozen=True)
class DatumSpec:
    family: str
    amplitude: float = 0.0
    sigma: float = 0.0
    path: str = ""


@dataclass(frozen=True)
class GridSpec:
    nx: int
    nv: int
    nt: int
    vmax: float | None = None
    horizon: float | None = None


@dataclass(frozen=True)
class SolverSpec:
    newton_tol: float
    ode_substeps: int
    fixed_point_tol: float
    max_iterations: int


@dataclass(frozen=True)
class RunConfig:
    datum: DatumSpec
    klass: ClassParameters
    grid: GridSpec
    solver: SolverSpec
    mode: str = "theorem"
    out_dir: str | None = None
    seed: int = 0


_REQUIRED = object()


def _get(section: dict, section_name: str, key: str, typ, default=_REQUIRED):
    if key not in section:
        if default is _REQUIRED:
            raise ConfigError(f"missing mandatory key {section_name}.{key}", key=f"{section_name}.{key}")
        return default
    val = section[key]
    try:
        if typ is int:
            if isinstance(val, bool) or int(val) != float(val):
                raise ValueError
            return int(val)
        return typ(val)
    except (TypeError, ValueError):
        raise ConfigError(
            f"key {section_name}.{key} has invalid value {val!r} (expected {typ.__name__})",
            key=f"{section_name}.{key}",
        ) from None


def parse_config(text: str) -> RunConfig:
    """Parse a YAML configuration document into a validated RunConfig."""
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed configuration document: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("configuration document must be a mapping")

    for name in ("datum", "class"):
        if name not in doc or not isinstance(doc[name], dict):
            raise ConfigError(f"missing mandatory section {name!r}", key=name)

    d = doc["datum"]
    family = _get(d, "datum", "family", str)
    if family not in ("gaussian-cosine", "tabulated-grid"):
        raise ConfigError(f"unknown datum.family {family!r}", key="datum.family")
    if family == "gaussian-cosine":
        datum = DatumSpec(
            family=family,
            amplitude=_get(d, "datum", "amplitude", float),
            sigma=_get(d, "datum", "sigma", float),
        )
    else:
        datum = DatumSpec(family=family, path=_get(d, "datum", "path", str))

    c = doc["class"]
    try:
        klass = ClassParameters(
            a=_get(c, "class", "a", float),
            a1=_get(c, "class", "a1", float),
            a2=_get(c, "class", "a2", float),
            alpha=_get(c, "class", "alpha", float),
            t0=_get(c, "class", "t0", float),
        )
    except ParameterError as exc:
        raise ConfigError(f"class parameters invalid: {exc}", key="class") from exc

    g = doc.get("grid", {}) or {}
    grid = GridSpec(
        nx=_get(g, "grid", "nx", int, DEFAULTS["nx"]),
        nv=_get(g, "grid", "nv", int, DEFAULTS["nv"]),
        nt=_get(g, "grid", "nt", int, DEFAULTS["nt"]),
        vmax=_get(g, "grid", "vmax", float, None),
        horizon=_get(g, "grid", "T", float, None),
    )
    for key, minval in (("nx", MIN_COUNTS["nx"]), ("nv", MIN_COUNTS["nv"]), ("nt", MIN_COUNTS["nt"])):
        if getattr(grid, key) < minval:
            raise ConfigError(f"grid.{key} must be >= {minval}", key=f"grid.{key}")
    if grid.nx % 2 != 0:
        raise ConfigError("grid.nx must be even", key="grid.nx")
    if grid.nv % 2 != 0:
        raise ConfigError("grid.nv must be even", key="grid.nv")
    if grid.vmax is not None and grid.vmax <= 0:
        raise ConfigError("grid.vmax must be positive", key="grid.vmax")
    if grid.horizon is not None and grid.horizon <= klass.t0:
        raise ConfigError("T must exceed class.t0", key="T")

    s = doc.get("solver", {}) or {}
    solver = SolverSpec(
        newton_tol=_get(s, "solver", "newton_tol", float, DEFAULTS["newton_tol"]),
        ode_substeps=_get(s, "solver", "ode_substeps", int, DEFAULTS["ode_substeps"]),
        fixed_point_tol=_get(s, "solver", "fixed_point_tol", float, DEFAULTS["fixed_point_tol"]),
        max_iterations=_get(s, "solver", "max_iterations", int, DEFAULTS["max_iterations"]),
    )
    if solver.newton_tol <= 0 or solver.fixed_point_tol <= 0:
        raise ConfigError("solver tolerances must be positive", key="solver.newton_tol")
    if solver.ode_substeps < 1 or solver.max_iterations < 1:
        raise ConfigError("solver counts must be >= 1", key="solver.ode_substeps")

    r = doc.get("run", {}) or {}
    mode = _get(r, "run", "mode", str, DEFAULTS["mode"])
    if mode not in ("theorem", "exploratory"):
        raise ConfigError(f"run.mode must be 'theorem' or 'exploratory', got {mode!r}", key="run.mode")
    out_dir = _get(r, "run", "out", str, None)
    seed = _get(r, "run", "seed", int, DEFAULTS["seed"])

    return RunConfig(
        datum=datum, klass=klass, grid=grid, solver=solver, mode=mode, out_dir=out_dir, seed=seed
    )


def serialize_config(config: RunConfig) -> str:
    """Render a RunConfig back to YAML; parse(serialize(parse(x))) is the identity."""
    doc: dict = {
        "datum": {"family": config.datum.family},
        "class": {
            "a": config.klass.a,
            "a1": config.klass.a1,
            "a2": config.klass.a2,
            "alpha": config.klass.alpha,
            "t0": config.klass.t0,
        },
        "grid": {"nx": config.grid.nx, "nv": config.grid.nv, "nt": config.grid.nt},
        "solver": {
            "newton_tol": config.solver.newton_tol,
            "ode_substeps": config.solver.ode_substeps,
            "fixed_point_tol": config.solver.fixed_point_tol,
            "max_iterations": config.solver.max_iterations,
        },
        "run": {"mode": config.mode, "seed": config.seed},
    }
    if config.datum.family == "gaussian-cosine":
        doc["datum"]["amplitude"] = config.datum.amplitude
        doc["datum"]["sigma"] = config.datum.sigma
    else:
        doc["datum"]["path"] = config.datum.path
    if config.grid.vmax is not None:
        doc["grid"]["vmax"] = config.grid.vmax
    if config.grid.horizon is not None:
        doc["grid"]["T"] = config.grid.horizon
    if config.out_dir is not None:
        doc["run"]["out"] = config.out_dir
    return yaml.safe_dump(doc, sort_keys=True)


def build_datum(config: RunConfig) -> AsymptoticDatum:
    """Construct the asymptotic datum described by the configuration."""
    if config.datum.family == "gaussian-cosine":
        return make_gaussian_cosine_datum(config.datum.amplitude, config.datum.sigma, config.klass)
    return load_tabulated_grid(config.datum.path, config.klass)
