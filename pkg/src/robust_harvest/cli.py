"""Command line entry point.

Subcommands ``validate``, ``solve``, ``paths``, ``distort`` and ``fit`` share
one JSON config (see :mod:`robust_harvest.config`); flags override its keys.

Exit codes:
    0  success
    2  usage error or malformed config
    3  validation failure (or an invalid model input at run time)
    4  missing or unreadable input file
    5  failure writing outputs
    6  numerical failure during the solve
"""

from __future__ import annotations

import argparse
import math
import os
import sys
import time

from .calibrate import ObservationSet, grid_search_fit
from .config import RunConfig, load_config, parse_mu, validate
from .exceptions import (
    CFLViolation,
    ConfigurationError,
    InputError,
    NumericalFailure,
    ParameterError,
)
from .export import (
    format_number,
    write_density,
    write_policy_field,
    write_report,
    write_trajectory,
    write_value_field,
)
from .growth import QuadratureGrid
from .policy import gradient_n, integrate_backward, integrate_forward
from .robust import kl_divergence, worst_case_distortion
from .solver import solve

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_MISSING_INPUT = 4
EXIT_IO = 5
EXIT_NUMERICAL = 6

# Cap on exported time levels when run.output_every is not set.
_DEFAULT_EXPORT_LEVELS = 1000


class _Exit(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _float_list(text):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _mu_list(text):
    try:
        return tuple(parse_mu(v) for v in text.split(",") if v.strip())
    except ConfigurationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="JSON run configuration")
    common.add_argument("--override-cfl", action="store_true",
                        help="run even if the time step exceeds the stability bound")
    common.add_argument("--out-dir", metavar="PATH", default=".", help="output directory")
    common.add_argument("--preset", choices=("2021", "2022"), help="growth preset")
    common.add_argument("--mu", type=_mu_list, metavar="LIST",
                        help="uncertainty aversion; 'inf' for none. A list for distort")
    common.add_argument("--terminal-values", type=_float_list, metavar="LIST",
                        help="terminal populations for backward paths")
    common.add_argument("--initial-values", type=_float_list, metavar="LIST",
                        help="initial populations for forward paths")
    common.add_argument("--quad-points", type=int, metavar="N", help="quadrature nodes")

    parser = argparse.ArgumentParser(prog="robust-harvest",
                                     description="Robust optimal harvesting toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check a configuration")
    sub.add_parser("solve", parents=[common], help="write value and policy fields")
    sub.add_parser("paths", parents=[common], help="write controlled population paths")
    sub.add_parser("distort", parents=[common], help="write worst-case densities")
    fit = sub.add_parser("fit", parents=[common], help="calibrate the growth model")
    fit.add_argument("--observations", metavar="PATH", help="CSV with columns t,w")
    fit.add_argument("--n-jobs", type=int, help="parallel workers")
    return parser


def _load(args) -> RunConfig:
    if args.config is None:
        cfg = RunConfig()
    else:
        if not os.path.isfile(args.config):
            raise _Exit(EXIT_MISSING_INPUT, f"config not found: {args.config}")
        try:
            cfg = load_config(args.config)
        except ConfigurationError as exc:
            raise _Exit(EXIT_USAGE, str(exc)) from None
        except OSError as exc:
            raise _Exit(EXIT_MISSING_INPUT, f"cannot read {args.config}: {exc}") from None

    if args.preset:
        cfg.growth = {"preset": args.preset}
    if args.override_cfl:
        cfg.override_cfl = True
    if args.terminal_values is not None:
        cfg.terminal_values = args.terminal_values
    if args.initial_values is not None:
        cfg.initial_values = args.initial_values
    if args.mu is not None:
        if args.command == "distort":
            cfg.distort_mu = args.mu
        elif len(args.mu) != 1:
            raise _Exit(EXIT_USAGE, "--mu takes a single value for this subcommand")
        else:
            cfg.mu = args.mu[0]
    if args.quad_points is not None:
        if args.quad_points < 1:
            raise _Exit(EXIT_USAGE, "--quad-points must be >= 1")
        if args.command == "distort":
            cfg.distort_quad_points = args.quad_points
        else:
            cfg.quad_points = args.quad_points
    if getattr(args, "n_jobs", None) is not None:
        cfg.n_jobs = args.n_jobs
    return cfg


def _out_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise _Exit(EXIT_IO, f"cannot create output directory {path}: {exc}") from None
    return path


def _solve(cfg: RunConfig, mu=None, quad_points=None, store_every=1):
    objective = cfg.objective_spec(mu)
    return solve(objective, cfg.growth_spec(), cfg.density(quad_points), cfg.solve_grid(),
                 override_cfl=cfg.override_cfl, store_every=store_every)


def _export_every(cfg, grid):
    if cfg.output_every is not None:
        return cfg.output_every
    return max(1, math.ceil(grid.I / _DEFAULT_EXPORT_LEVELS))


def run_validate(cfg: RunConfig, out=None):
    report = validate(cfg)
    for line in report.lines():
        print(line, file=out or sys.stdout)
    return report


def run_solve(cfg: RunConfig, out_dir):
    """Write ``value_field.csv``, ``policy_field.csv`` and ``solve_summary.txt``."""
    every = _export_every(cfg, cfg.solve_grid())
    # only exported levels are kept, which bounds memory at full resolution
    field = _solve(cfg, store_every=every)
    written = []
    if "value" in cfg.outputs:
        path = os.path.join(out_dir, "value_field.csv")
        write_value_field(path, field, every)
        written.append(path)
    if "policy" in cfg.outputs:
        path = os.path.join(out_dir, "policy_field.csv")
        write_policy_field(path, field, every)
        written.append(path)
    grid = field.grid
    summary = [
        ("I", grid.I), ("J", grid.J), ("M", grid.M), ("t0", grid.t0), ("t1", grid.t1),
        ("dt", grid.dt), ("dn", grid.dn), ("mu", field.objective.mu),
        ("export_every", every),
        ("phi_min_exported", float(field.values.min())),
        ("phi_max_exported", float(field.values.max())),
        ("phi_at_t0_nM", float(field.values[0, -1])),
    ]
    summary += [(f"diagnostic_{k}", d) for k, d in enumerate(field.diagnostics)]
    path = os.path.join(out_dir, "solve_summary.txt")
    write_report(path, summary)
    written.append(path)
    return written, summary


def run_paths(cfg: RunConfig, out_dir):
    """Backward paths for ``terminal_values`` and forward paths for ``initial_values``."""
    field = _solve(cfg)
    written, summary = [], []
    for v in cfg.terminal_values:
        traj = integrate_backward(field, v)
        path = os.path.join(out_dir, f"path_backward_n{format_number(v)}.csv")
        write_trajectory(path, traj)
        written.append(path)
        summary += [(f"backward_n{format_number(v)}_n_at_t0", float(traj.n[0])),
                    (f"backward_n{format_number(v)}_truncated", str(traj.truncated).lower())]
    for v in cfg.initial_values:
        traj = integrate_forward(field, v)
        path = os.path.join(out_dir, f"path_forward_n{format_number(v)}.csv")
        write_trajectory(path, traj)
        written.append(path)
        summary.append((f"forward_n{format_number(v)}_n_at_t1", float(traj.n[-1])))
    path = os.path.join(out_dir, "paths_summary.txt")
    write_report(path, summary)
    written.append(path)
    return written, summary


def run_distort(cfg: RunConfig, out_dir):
    """Worst-case densities at ``(distort_t, distort_n)`` for each requested mu."""
    growth = cfg.growth_spec()
    density = cfg.density(cfg.distort_quad_points)
    t, n = cfg.distort_t, cfg.distort_n
    columns, summary = {}, [("t", t), ("n", n), ("quad_points", cfg.distort_quad_points)]
    for mu in cfg.distort_mu:
        objective = cfg.objective_spec(mu)
        if cfg.distort_z is not None:
            z = cfg.distort_z
        elif not objective.robust:
            z = 0.0
        else:
            field = _solve(cfg, mu=mu, quad_points=cfg.distort_quad_points)
            z = gradient_n(field, field.nearest_row(t), n)
        dist = worst_case_distortion(objective, growth, density, t, z)
        columns[mu] = dist.distorted_p
        tag = format_number(mu)
        summary += [(f"z_mu={tag}", float(z)),
                    (f"kl_mu={tag}", kl_divergence(dist.samples, density))]
    path = os.path.join(out_dir, "density_distortion.csv")
    write_density(path, density.nodes, density.p, columns)
    report = os.path.join(out_dir, "distort_summary.txt")
    write_report(report, summary)
    return [path, report], summary


def _observations(cfg, args):
    path = getattr(args, "observations", None)
    if path is None and cfg.observations is not None:
        path = cfg.observations
        if args.config is not None and not os.path.isabs(path):
            path = os.path.join(os.path.dirname(os.path.abspath(args.config)), path)
    if path is None:
        raise _Exit(EXIT_MISSING_INPUT, "fit needs --observations or run.observations")
    if not os.path.isfile(path):
        raise _Exit(EXIT_MISSING_INPUT, f"observations not found: {path}")
    try:
        return ObservationSet.from_csv(path)
    except (InputError, ValueError, KeyError, OSError) as exc:
        raise _Exit(EXIT_MISSING_INPUT, f"cannot read observations {path}: {exc}") from None


def run_fit(cfg: RunConfig, obs: ObservationSet, out_dir):
    """Grid-search calibration; writes ``fit_report.txt``.

    The runtime is returned in the summary but kept out of the file so that
    repeated runs produce identical bytes.
    """
    result = grid_search_fit(obs, cfg.fit_ranges, QuadratureGrid(cfg.quad_points),
                             n_jobs=cfg.n_jobs)
    c = result.candidate
    items = [("x", c.x), ("r", c.r), ("K_lo", c.K_lo), ("K_hi", c.K_hi),
             ("loss", result.loss), ("ties", result.ties),
             ("candidates_evaluated", result.n_evaluated), ("observations", len(obs))]
    path = os.path.join(out_dir, "fit_report.txt")
    write_report(path, items)
    return [path], items + [("runtime_seconds", round(result.runtime, 3))]


def _dispatch(args) -> int:
    cfg = _load(args)
    if args.command == "validate":
        report = run_validate(cfg)
        return EXIT_OK if report.ok else EXIT_VALIDATION

    report = validate(cfg)
    if not report.ok:
        for check in report.failures():
            print(check.line(), file=sys.stderr)
        raise _Exit(EXIT_VALIDATION, "validation failed; see the checks above")
    obs = _observations(cfg, args) if args.command == "fit" else None
    out_dir = _out_dir(args.out_dir)

    start = time.perf_counter()
    try:
        if args.command == "solve":
            written, summary = run_solve(cfg, out_dir)
        elif args.command == "paths":
            written, summary = run_paths(cfg, out_dir)
        elif args.command == "distort":
            written, summary = run_distort(cfg, out_dir)
        else:
            written, summary = run_fit(cfg, obs, out_dir)
    except NumericalFailure as exc:
        raise _Exit(EXIT_NUMERICAL, str(exc)) from None
    except (CFLViolation, ParameterError, InputError, ConfigurationError) as exc:
        raise _Exit(EXIT_VALIDATION, str(exc)) from None
    except OSError as exc:
        raise _Exit(EXIT_IO, f"cannot write output: {exc}") from None

    for key, value in summary:
        print(f"{key}: {format_number(value) if isinstance(value, (int, float)) else value}")
    for path in written:
        print(f"wrote {path}")
    print(f"elapsed_seconds: {time.perf_counter() - start:.2f}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except _Exit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
