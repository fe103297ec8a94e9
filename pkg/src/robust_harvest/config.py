"""Run configuration: JSON parsing and pre-run validation.

Schema (all keys optional; defaults reproduce the 2021 season with the
sustainability terminal utility switched off)::

    {
      "growth": {"preset": "2021"}
                | {"x": 6.8, "r": 0.04, "K_lo": 8, "K_hi": 205}
                | {"x": ..., "r_lo": ..., "r_hi": ..., "K_lo": ..., "K_hi": ...},
      "density": {"kind": "uniform"} | {"kind": "beta", "a": 2, "b": 5},
      "quad_points": 150,
      "objective": {
        "alpha": 0.05, "gamma": 0.1, "mu": 0.01 | "inf", "c_bar": null,
        "t0": 61, "t1": 181,
        "terminal": {"kind": "zero"}
                    | {"kind": "capped_linear", "eta": 1.5, "cap": null}
                    | {"kind": "piecewise_linear", "knots": [...], "values": [...]},
        "mortality": {"kind": "constant", "value": 0.01}
                     | {"kind": "piecewise_linear", "knots": [...], "values": [...]}
      },
      "grid": {"J": 200, "M": 10, "I": null, "cfl_safety": 0.9},
      "run": {
        "override_cfl": false,
        "outputs": ["value", "policy"],
        "output_every": null,
        "terminal_values": [0.5, 1, 2, 4],
        "initial_values": [],
        "distort": {"t": 61, "n": 5, "mu": [0.01, 0.1, "inf"], "quad_points": 300, "z": null},
        "observations": null,
        "fit_ranges": {"r": [0.02, 0.05, 0.001], "x": [5, 15, 1],
                       "K_lo": [1, 301, 1], "K_hi": [1, 301, 1], "min_gap": 1},
        "n_jobs": null
      }
    }

``output_every`` thins the exported time levels of the value and policy
fields (``null`` keeps at most about 1000 levels). A ``null`` cap for the capped-linear utility means the grid's ``M``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace

from .calibrate import FitRanges
from .exceptions import ConfigurationError, ParameterError
from .growth import GrowthSpec, PRESETS, QuadratureGrid, density_weights
from .robust import ObjectiveSpec, PiecewiseLinear
from .solver import SolveGrid, cfl_max_dt

__all__ = ["RunConfig", "ValidationReport", "Check", "load_config", "parse_config", "validate",
           "parse_mu"]

DEFAULT_TERMINAL_VALUES = (0.5, 1.0, 2.0, 4.0)


def parse_mu(value) -> float:
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "+inf"):
            return math.inf
        try:
            value = float(value)
        except ValueError:
            raise ConfigurationError(f"cannot parse mu value {value!r}") from None
    value = float(value)
    if math.isnan(value) or value <= 0:
        raise ConfigurationError(f"mu must be positive or 'inf', got {value!r}")
    return value


def _float_or_none(value, name):
    if value is None:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be a number, got {value!r}") from None


def _check_keys(section, allowed, where):
    if not isinstance(section, dict):
        raise ConfigurationError(f"{where} must be an object")
    unknown = set(section) - set(allowed)
    if unknown:
        raise ConfigurationError(f"unknown key(s) in {where}: {sorted(unknown)}")


@dataclass
class RunConfig:
    """Everything a subcommand needs. Raw numbers are kept so that
    :func:`validate` can report each failing check instead of stopping at
    the first constructor error."""

    growth: dict = field(default_factory=lambda: {"preset": "2021"})
    density_kind: str = "uniform"
    density_a: float | None = None
    density_b: float | None = None
    quad_points: int = 150
    alpha: float = 0.05
    gamma: float = 0.1
    mu: float = 0.01
    c_bar: float | None = None
    t0: float = 61.0
    t1: float = 181.0
    terminal: dict = field(default_factory=lambda: {"kind": "zero"})
    mortality: dict = field(default_factory=lambda: {"kind": "constant", "value": 0.01})
    J: int = 200
    M: float = 10.0
    I: int | None = None
    cfl_safety: float = 0.9
    override_cfl: bool = False
    outputs: tuple = ("value", "policy")
    output_every: int | None = None
    terminal_values: tuple = DEFAULT_TERMINAL_VALUES
    initial_values: tuple = ()
    distort_t: float = 61.0
    distort_n: float = 5.0
    distort_mu: tuple = (0.01, 0.1, math.inf)
    distort_quad_points: int = 300
    distort_z: float | None = None
    observations: str | None = None
    fit_ranges: FitRanges = field(default_factory=FitRanges)
    n_jobs: int | None = None

    # -- builders ---------------------------------------------------------
    def growth_values(self) -> dict:
        g = self.growth
        if "preset" in g:
            if str(g["preset"]) not in PRESETS:
                raise ConfigurationError(f"unknown growth preset {g['preset']!r}")
            spec = PRESETS[str(g["preset"])]
            return dict(x=spec.x, r_lo=spec.r_lo, r_hi=spec.r_hi, K_lo=spec.K_lo, K_hi=spec.K_hi)
        if "r" in g:
            return dict(x=g["x"], r_lo=g["r"], r_hi=g["r"], K_lo=g["K_lo"], K_hi=g["K_hi"])
        return dict(x=g["x"], r_lo=g["r_lo"], r_hi=g["r_hi"], K_lo=g["K_lo"], K_hi=g["K_hi"])

    def growth_spec(self) -> GrowthSpec:
        return GrowthSpec(**{k: float(v) for k, v in self.growth_values().items()})

    def density(self, quad_points=None):
        quad = QuadratureGrid(int(quad_points or self.quad_points))
        return density_weights(self.density_kind, quad, a=self.density_a, b=self.density_b)

    def terminal_function(self) -> PiecewiseLinear:
        return _piecewise(self.terminal, "terminal", default_cap=self.M)

    def mortality_function(self) -> PiecewiseLinear:
        return _piecewise(self.mortality, "mortality", default_cap=self.M)

    def objective_spec(self, mu=None) -> ObjectiveSpec:
        return ObjectiveSpec(
            alpha=float(self.alpha), gamma=float(self.gamma),
            mu=self.mu if mu is None else mu, c_bar=self.c_bar,
            t0=float(self.t0), t1=float(self.t1),
            terminal=self.terminal_function(), mortality=self.mortality_function(),
        )

    def solve_grid(self) -> SolveGrid:
        if self.I is None:
            return SolveGrid.from_cfl(self.objective_spec(), self.growth_spec(), self.J, self.M,
                                      safety=self.cfl_safety)
        return SolveGrid(int(self.I), int(self.J), float(self.M), float(self.t0), float(self.t1))

    def with_overrides(self, **kwargs) -> "RunConfig":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


def _piecewise(spec, name, default_cap):
    kind = spec.get("kind")
    try:
        if kind == "zero":
            return PiecewiseLinear.zero()
        if kind == "constant":
            return PiecewiseLinear.constant(float(spec["value"]))
        if kind == "capped_linear":
            cap = spec.get("cap")
            return PiecewiseLinear.capped_linear(float(spec["eta"]),
                                                 default_cap if cap is None else float(cap))
        if kind == "piecewise_linear":
            return PiecewiseLinear(tuple(spec["knots"]), tuple(spec["values"]))
    except KeyError as exc:
        raise ConfigurationError(f"{name}: missing key {exc.args[0]!r}") from None
    raise ConfigurationError(f"{name}: unknown kind {kind!r}")


def parse_config(data: dict) -> RunConfig:
    """Build a :class:`RunConfig` from a decoded JSON object."""
    _check_keys(data, {"growth", "density", "quad_points", "objective", "grid", "run"}, "config")
    cfg = RunConfig()
    if "growth" in data:
        g = data["growth"]
        _check_keys(g, {"preset", "x", "r", "r_lo", "r_hi", "K_lo", "K_hi"}, "growth")
        if "preset" not in g:
            required = {"x", "K_lo", "K_hi"} | ({"r"} if "r" in g else {"r_lo", "r_hi"})
            missing = required - set(g)
            if missing:
                raise ConfigurationError(f"growth: missing {sorted(missing)}")
        cfg.growth = dict(g)
    if "density" in data:
        d = data["density"]
        _check_keys(d, {"kind", "a", "b"}, "density")
        cfg.density_kind = d.get("kind", "uniform")
        cfg.density_a = _float_or_none(d.get("a"), "density.a")
        cfg.density_b = _float_or_none(d.get("b"), "density.b")
    if "quad_points" in data:
        cfg.quad_points = int(data["quad_points"])
    if "objective" in data:
        o = data["objective"]
        _check_keys(o, {"alpha", "gamma", "mu", "c_bar", "t0", "t1", "terminal", "mortality"},
                    "objective")
        for key in ("alpha", "gamma", "t0", "t1"):
            if key in o:
                setattr(cfg, key, float(o[key]))
        if "mu" in o:
            cfg.mu = parse_mu(o["mu"])
        if "c_bar" in o:
            cfg.c_bar = _float_or_none(o["c_bar"], "c_bar")
        if "terminal" in o:
            cfg.terminal = dict(o["terminal"])
        if "mortality" in o:
            cfg.mortality = dict(o["mortality"])
    if "grid" in data:
        g = data["grid"]
        _check_keys(g, {"I", "J", "M", "cfl_safety"}, "grid")
        if g.get("I") is not None:
            cfg.I = int(g["I"])
        if "J" in g:
            cfg.J = int(g["J"])
        if "M" in g:
            cfg.M = float(g["M"])
        if "cfl_safety" in g:
            cfg.cfl_safety = float(g["cfl_safety"])
    if "run" in data:
        r = data["run"]
        _check_keys(r, {"override_cfl", "outputs", "output_every", "terminal_values",
                        "initial_values", "distort", "observations", "fit_ranges", "n_jobs"}, "run")
        cfg.override_cfl = bool(r.get("override_cfl", False))
        if "outputs" in r:
            cfg.outputs = tuple(r["outputs"])
        if r.get("output_every") is not None:
            cfg.output_every = int(r["output_every"])
            if cfg.output_every < 1:
                raise ConfigurationError("run.output_every must be >= 1")
        if "terminal_values" in r:
            cfg.terminal_values = tuple(float(v) for v in r["terminal_values"])
        if "initial_values" in r:
            cfg.initial_values = tuple(float(v) for v in r["initial_values"])
        if "distort" in r:
            d = r["distort"]
            _check_keys(d, {"t", "n", "mu", "quad_points", "z"}, "run.distort")
            cfg.distort_t = float(d.get("t", cfg.distort_t))
            cfg.distort_n = float(d.get("n", cfg.distort_n))
            if "mu" in d:
                cfg.distort_mu = tuple(parse_mu(m) for m in d["mu"])
            cfg.distort_quad_points = int(d.get("quad_points", cfg.distort_quad_points))
            cfg.distort_z = _float_or_none(d.get("z"), "run.distort.z")
        cfg.observations = r.get("observations")
        if "fit_ranges" in r:
            fr = r["fit_ranges"]
            _check_keys(fr, {"r", "x", "K_lo", "K_hi", "min_gap"}, "run.fit_ranges")
            kwargs = {k: tuple(float(v) for v in fr[k]) for k in ("r", "x", "K_lo", "K_hi") if k in fr}
            if "min_gap" in fr:
                kwargs["min_gap"] = float(fr["min_gap"])
            cfg.fit_ranges = FitRanges(**kwargs)
        cfg.n_jobs = r.get("n_jobs")
    return cfg


def load_config(path) -> RunConfig:
    """Read and parse a JSON config file.

    Raises:
        ConfigurationError: with ``path:line:column`` on malformed JSON.
    """
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return parse_config(data)
    except ConfigurationError as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigurationError(f"{path}: invalid value ({exc})") from None


@dataclass
class Check:
    name: str
    passed: bool
    detail: str
    overridden: bool = False

    def line(self) -> str:
        status = "PASS" if self.passed else ("FAIL (overridden)" if self.overridden else "FAIL")
        return f"{status:<18} {self.name}: {self.detail}"


@dataclass
class ValidationReport:
    checks: list

    @property
    def ok(self) -> bool:
        return all(c.passed or c.overridden for c in self.checks)

    def lines(self):
        return [c.line() for c in self.checks]

    def failures(self):
        return [c for c in self.checks if not (c.passed or c.overridden)]


def validate(cfg: RunConfig) -> ValidationReport:
    """Run every pre-flight check and collect the outcomes. Never raises on
    model errors; they become failed checks."""
    checks = []

    try:
        g = {k: float(v) for k, v in cfg.growth_values().items()}
    except (ConfigurationError, KeyError, TypeError, ValueError) as exc:
        checks.append(Check("growth", False, str(exc)))
        return ValidationReport(checks)
    checks.append(Check("x<=K_lo", 0 < g["x"] <= g["K_lo"],
                        f"x={g['x']!r}, K_lo={g['K_lo']!r}"))
    ordered = 0 < g["r_lo"] <= g["r_hi"] and 0 < g["K_lo"] <= g["K_hi"]
    checks.append(Check("growth_ordering", ordered,
                        f"r=[{g['r_lo']!r}, {g['r_hi']!r}], K=[{g['K_lo']!r}, {g['K_hi']!r}]"))

    try:
        h = cfg.terminal_function()
        h_ok = h(0.0) == 0.0 and h.is_nondecreasing
        checks.append(Check("terminal_utility", h_ok,
                            f"{h.describe()}; h(0)={h(0.0)!r}, nondecreasing={h.is_nondecreasing}"))
    except (ConfigurationError, ParameterError) as exc:
        checks.append(Check("terminal_utility", False, str(exc)))
    try:
        R = cfg.mortality_function()
        R_ok = R.is_nondecreasing and min(R.values) >= 0
        checks.append(Check("mortality", R_ok,
                            f"{R.describe()}; nondecreasing={R.is_nondecreasing}"))
    except (ConfigurationError, ParameterError) as exc:
        checks.append(Check("mortality", False, str(exc)))

    params_ok = cfg.alpha >= 0 and cfg.gamma > 0 and cfg.mu > 0 and 0 <= cfg.t0 < cfg.t1
    checks.append(Check("objective_parameters", params_ok,
                        f"alpha={cfg.alpha!r}, gamma={cfg.gamma!r}, mu={cfg.mu!r}, "
                        f"window=({cfg.t0!r}, {cfg.t1!r})"))

    need = cfg.alpha**2 * g["K_hi"] / (4 * cfg.gamma**2) if cfg.gamma > 0 else math.inf
    c_bar = need if cfg.c_bar is None else cfg.c_bar
    checks.append(Check("harvest_cap", c_bar >= need,
                        f"c_bar={c_bar!r} (needs >= alpha^2 K_hi/(4 gamma^2) = {need!r})"))

    grid_ok = cfg.J >= 1 and cfg.M > 0 and (cfg.I is None or cfg.I >= 1)
    checks.append(Check("grid", grid_ok, f"I={cfg.I!r}, J={cfg.J!r}, M={cfg.M!r}"))
    if not all(c.passed for c in checks if c.name != "harvest_cap"):
        return ValidationReport(checks)

    # the stability bound does not involve c_bar, so report it even when the cap fails
    sized = replace(cfg, c_bar=None)
    objective = sized.objective_spec()
    growth = sized.growth_spec()
    grid = sized.solve_grid()
    bound = cfl_max_dt(objective, growth, dn=grid.dn, M=grid.M)
    cfl_ok = grid.dt <= bound
    checks.append(Check("cfl", cfl_ok, f"dt={grid.dt!r} <= bound={bound!r} (I={grid.I})"
                        if cfl_ok else f"dt={grid.dt!r} > bound={bound!r} (I={grid.I})",
                        overridden=not cfl_ok and cfg.override_cfl))
    return ValidationReport(checks)
