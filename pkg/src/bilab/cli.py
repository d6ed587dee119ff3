"""Command-line front end: ``bilab <subcommand> [options]``.

Charges are given with repeatable ``--charge`` options:

    delta:x,y,z:a          point charge of intensity a at x
    uniform-ball:R:density constant density on the ball of radius R
    radial-file:path       two-column (r, rho) CSV
    grid-file:path         grid density written by ``bilab.io.write_grid``

Exit status: 0 on success, 1 for solver or domain errors, 2 for usage errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import io as bio
from .core import (
    Box, DomainError, Exact, GridDensity, PointCharges, RadialProfile, Series, SolverError,
    Truncated,
)

log = logging.getLogger("bilab")

BALL_NODES = 1000


class UsageError(Exception):
    pass


# ----------------------------------------------------------------------
# argument parsing


def parse_charge(text: str, dim: int):
    kind, _, rest = text.partition(":")
    try:
        if kind == "delta":
            pos, _, a = rest.rpartition(":")
            x = [float(v) for v in pos.split(",")]
            if len(x) != dim:
                raise UsageError(f"charge {text!r}: position needs {dim} coordinates")
            return PointCharges([x], [float(a)])
        if kind == "uniform-ball":
            R, dens = (float(v) for v in rest.split(":"))
            g = np.linspace(R / BALL_NODES, R, BALL_NODES)
            return RadialProfile(g, np.full_like(g, dens), dim)
        if kind == "radial-file":
            return bio.read_radial_file(rest, dim)
        if kind == "grid-file":
            return bio.read_grid(rest)
    except (ValueError, OSError) as exc:
        raise UsageError(f"charge {text!r}: {exc}") from exc
    raise UsageError(f"unknown charge kind {kind!r}")


def combine_charges(specs: list):
    """Merge point charges into one PointCharges; return a single charge or a list."""
    points = [c for c in specs if isinstance(c, PointCharges)]
    others = [c for c in specs if not isinstance(c, PointCharges)]
    merged = []
    if points:
        merged.append(PointCharges(np.concatenate([p.positions for p in points]),
                                   np.concatenate([p.intensities for p in points])))
    merged.extend(others)
    if not merged:
        raise UsageError("at least one --charge is required")
    return merged[0] if len(merged) == 1 else merged


def parse_model(text: str):
    kind, _, rest = text.partition(":")
    try:
        if kind == "exact":
            return Exact()
        if kind == "series":
            return Series(int(rest))
        if kind == "truncated":
            parts = rest.split(":")
            return Truncated(float(parts[0]), int(parts[1]) if len(parts) > 1 else 2)
    except ValueError as exc:
        raise UsageError(f"model {text!r}: {exc}") from exc
    raise UsageError(f"unknown model {text!r}")


def _floats(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text: str) -> list:
    return [int(v) for v in text.split(",") if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, default=3, help="space dimension N >= 3")
    common.add_argument("--out", default="-", help="output path ('-' for stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--config", help="key = value file supplying option defaults")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for studies")

    radial_opts = argparse.ArgumentParser(add_help=False)
    radial_opts.add_argument("--nodes", type=int, default=2048)
    radial_opts.add_argument("--r-min", type=float, default=1e-6)
    radial_opts.add_argument("--r-max", type=float, default=1e3)

    grid_opts = argparse.ArgumentParser(add_help=False)
    grid_opts.add_argument("--half-width", type=float, default=8.0)
    grid_opts.add_argument("--spacing", type=float, default=0.5)
    grid_opts.add_argument("--eps", type=float, default=None,
                           help="mollification width for point charges (default 2 spacings)")
    grid_opts.add_argument("--kernel", choices=("bump", "gaussian"), default="bump")
    grid_opts.add_argument("--min-width-cells", type=float, default=2.0)
    grid_opts.add_argument("--levels", type=int, default=20)

    p = argparse.ArgumentParser(prog="bilab", description="Electrostatic Born-Infeld laboratory")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve-radial", parents=[common, radial_opts], help="radial solve")
    s.add_argument("--charge", action="append", default=[])
    s.add_argument("--model", default="exact", help="exact | series:n | truncated:theta[:n]")

    s = sub.add_parser("bion", parents=[common, radial_opts], help="point charge at the origin")
    s.add_argument("--a", type=float, default=4 * np.pi)

    s = sub.add_parser("solve-grid", parents=[common, grid_opts], help="box-grid solve")
    s.add_argument("--charge", action="append", default=[])
    s.add_argument("--grid-out", default=None, help="also write the full potential (binary)")

    s = sub.add_parser("cascade", parents=[common, radial_opts], help="series cascade table")
    s.add_argument("--charge", action="append", default=[])
    s.add_argument("--n", type=_ints, default=[1, 2, 4, 8, 16, 32])

    s = sub.add_parser("truncate", parents=[common, radial_opts], help="truncated models")
    s.add_argument("--theta", type=_floats, default=[0.5, 0.25, 0.125])
    s.add_argument("--power", type=int, default=2)
    s.add_argument("--charge", action="append", default=[])

    s = sub.add_parser("mollify-study", parents=[common, grid_opts, radial_opts],
                       help="shrinking-width convergence table")
    s.add_argument("--charge", action="append", default=[])
    s.add_argument("--widths", type=_floats, default=[0.4, 0.2, 0.1, 0.05])
    s.add_argument("--solver", choices=("radial", "grid"), default="radial")

    s = sub.add_parser("bikg", parents=[common, radial_opts], help="frozen-matter potential")
    s.add_argument("--omega", type=float, default=1.0)
    s.add_argument("--radius", type=float, default=1.0)
    s.add_argument("--damping", type=float, default=0.5)
    s.add_argument("--max-iter", type=int, default=500)
    s.add_argument("--tol", type=float, default=1e-10)

    s = sub.add_parser("check", parents=[common], help="property suites")
    s.add_argument("--suite", default="all",
                   choices=("all", "inequalities", "series", "truncation", "radial", "comparison"))
    return p


def _apply_config(parser, argv):
    """Re-parse with defaults taken from --config (command line still wins)."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    cfg = bio.parse_config(known.config)
    args = parser.parse_args(argv)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    dests = {a.dest: a for a in sub._actions}
    typed = {}
    for key, val in cfg.items():
        if key not in dests:
            raise UsageError(f"{known.config}: unknown key {key!r}")
        act = dests[key]
        if isinstance(act, argparse._AppendAction):
            typed[key] = [v.strip() for v in val.split(";") if v.strip()]
        else:
            typed[key] = act.type(val) if act.type else val
    sub.set_defaults(**typed)
    return parser.parse_args(argv)


# ----------------------------------------------------------------------
# commands


def _radial_grid(args, rho):
    from .radial import charge_scale, default_grid
    return default_grid(charge_scale(rho), args.nodes, args.r_min, args.r_max)


def _meta(args, **extra):
    meta = {"command": args.command, "dims": args.dim, "seed": args.seed}
    meta.update(extra)
    return meta


def _radial_table(phi, model):
    from .radial import first_integral_residual
    from .core import flux_coefficient
    N = phi.dimension
    if isinstance(model, Exact):
        res = first_integral_residual(phi)
    else:
        r = phi.r_grid
        u = phi.dphi
        with np.errstate(invalid="ignore", over="ignore"):
            res = np.where(r > 0, flux_coefficient(model, u * u) * u * r ** (N - 1) + phi.moment(r), 0.0)
    return {"r": phi.r_grid, "phi": phi.phi, "dphi": phi.dphi, "m": phi.moment(phi.r_grid),
            "residual": res}


def cmd_solve_radial(args):
    from .radial import solve_radial
    rho = combine_charges([parse_charge(c, args.dim) for c in args.charge])
    model = parse_model(args.model)
    phi = solve_radial(rho, _radial_grid(args, rho), model)
    return _radial_table(phi, model), _meta(args, lagrangian=model.describe())


def cmd_bion(args):
    from .radial import solve_radial
    rho = PointCharges([np.zeros(args.dim)], [args.a])
    phi = solve_radial(rho, _radial_grid(args, rho))
    return _radial_table(phi, Exact()), _meta(args, a=args.a, lagrangian=Exact().describe())


def _grid_charge(args, box):
    from .mollify import mollify_charge
    from .core import grid_density_of
    total = None
    eps = args.eps if args.eps is not None else 2.0 * args.spacing
    for text in args.charge:
        c = parse_charge(text, args.dim)
        if isinstance(c, PointCharges):
            c = mollify_charge(c, eps, args.kernel, box=box, spacing=args.spacing,
                               min_width_cells=args.min_width_cells)
        d = grid_density_of(c, box, args.spacing)
        total = d.values if total is None else total + d.values
    if total is None:
        raise UsageError("at least one --charge is required")
    return GridDensity(box, args.spacing, total)


def cmd_solve_grid(args):
    from .grid import GridConfig, solve_grid
    box = Box.cube(args.half_width, args.dim)
    rho = _grid_charge(args, box)
    phi, rep = solve_grid(rho, config=GridConfig(levels=args.levels))
    if args.grid_out:
        bio.write_grid(args.grid_out, phi)
    c = phi.values.shape[1] // 2
    idx = (slice(None),) + (c,) * (args.dim - 1)
    x = box.axes(args.spacing)[0]
    gn = phi.grad_norm()
    gline = np.concatenate([gn[(slice(None),) + (c,) * (args.dim - 1)], [np.nan]])
    meta = _meta(args, energy=rep.energy, el_residual_sup=rep.el_residual_sup,
                 max_grad=rep.max_grad, newton_steps=rep.iterations, schedule=rep.wall_notes,
                 spacing=args.spacing, half_width=args.half_width)
    log.info("grid solve: %s", json.dumps({k: meta[k] for k in ("energy", "max_grad", "newton_steps")}))
    return {"x": x, "phi": phi.values[idx], "grad_norm": gline}, meta


def cmd_cascade(args):
    from .approx import cascade_study
    rho = combine_charges([parse_charge(c, args.dim) for c in args.charge])
    rows = cascade_study(rho, args.n, _radial_grid(args, rho))
    cols = {"n": [r.n for r in rows], "energy": [r.energy for r in rows],
            "sup_distance": [r.sup_distance for r in rows], "max_slope": [r.max_slope for r in rows],
            "increment_lower": [r.increment_lower for r in rows]}
    return cols, _meta(args, lagrangian="series")


def cmd_truncate(args):
    from .core import truncation_match
    from .approx import solve_radial_truncated
    from .core import energy
    from .radial import solve_radial
    cols = {"theta": [], "power": [], "gamma": [], "delta": []}
    rho = None
    if args.charge:
        rho = combine_charges([parse_charge(c, args.dim) for c in args.charge])
        r = _radial_grid(args, rho)
        e_exact = energy(Exact(), rho, solve_radial(rho, r))
        cols.update({"energy": [], "energy_exact": [], "max_slope": []})
    for th in args.theta:
        g, d = truncation_match(th, args.power)
        cols["theta"].append(th)
        cols["power"].append(args.power)
        cols["gamma"].append(g)
        cols["delta"].append(d)
        if rho is not None:
            phi = solve_radial_truncated(rho, th, args.power, r)
            cols["energy"].append(energy(Truncated(th, args.power), rho, phi))
            cols["energy_exact"].append(e_exact)
            cols["max_slope"].append(float(np.max(np.abs(phi.dphi[1:]))))
    return cols, _meta(args, lagrangian="truncated")


def _study_one(payload):
    from .mollify import convergence_study
    points, eps, kwargs = payload
    return convergence_study(points, [eps], **kwargs)[0]


def cmd_mollify_study(args):
    from .mollify import convergence_study
    specs = [parse_charge(c, args.dim) for c in args.charge]
    if not specs or not all(isinstance(c, PointCharges) for c in specs):
        raise UsageError("mollify-study needs delta charges")
    points = combine_charges(specs)
    if args.solver == "radial":
        from .radial import charge_scale, default_grid
        r = default_grid(charge_scale(points), args.nodes, args.r_min, args.r_max)
        kwargs = {"solver": "radial", "kernel": args.kernel, "r_grid": r}
        if args.jobs > 1:
            # widths are independent against the common point-charge limit
            with ProcessPoolExecutor(args.jobs) as pool:
                rows = list(pool.map(_study_one, [(points, e, kwargs) for e in args.widths]))
        else:
            rows = convergence_study(points, args.widths, **kwargs)
    else:
        from .grid import GridConfig
        box = Box.cube(args.half_width, args.dim)
        rows = convergence_study(points, args.widths, "grid", kernel=args.kernel, box=box,
                                 spacing=args.spacing,
                                 grid_options={"min_width_cells": args.min_width_cells,
                                               "config": GridConfig(levels=args.levels)})
    cols = {"eps": [r.epsilon for r in rows], "sup_distance": [r.sup_distance for r in rows],
            "max_grad_near_charge": [r.max_grad_near_charge for r in rows],
            "energy": [r.energy for r in rows]}
    return cols, _meta(args, solver=args.solver, kernel=args.kernel)


def cmd_bikg(args):
    from .bikg import self_consistency_residual, solve_bikg_phi, unit_bump
    from .radial import default_grid
    u = unit_bump(args.radius, dimension=args.dim)
    r = default_grid(args.radius, args.nodes, args.r_min, args.r_max)
    sol = solve_bikg_phi(u, args.omega, r, args.damping, args.max_iter, args.tol)
    cols = {"k": [h[0] for h in sol.history], "residual": [h[1] for h in sol.history],
            "E_u": [h[2] for h in sol.history]}
    meta = _meta(args, omega=args.omega, iterations=sol.iterations,
                 self_consistency=self_consistency_residual(u, args.omega, sol.phi))
    return cols, meta


def cmd_check(args):
    from .checks import run_suite
    results = run_suite(args.suite, args.seed)
    cols = {"suite": [r.suite for r in results], "name": [r.name for r in results],
            "passed": [r.passed for r in results], "detail": [r.detail for r in results]}
    ok = all(r.passed for r in results)
    return cols, _meta(args, suite=args.suite, passed=ok), (0 if ok else 1)


COMMANDS = {
    "solve-radial": cmd_solve_radial,
    "bion": cmd_bion,
    "solve-grid": cmd_solve_grid,
    "cascade": cmd_cascade,
    "truncate": cmd_truncate,
    "mollify-study": cmd_mollify_study,
    "bikg": cmd_bikg,
    "check": cmd_check,
}


def _setup_logging():
    level = os.environ.get("BIL_LOG", "error").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(level=levels.get(level, logging.ERROR), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def run(argv=None) -> int:
    """Entry point; returns the process exit status."""
    _setup_logging()
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        if args.dim < 3:
            raise UsageError("--dim must be >= 3")
        out = COMMANDS[args.command](args)
        cols, meta = out[0], out[1]
        status = out[2] if len(out) > 2 else 0
        bio.write_table(args.out, cols, args.format, meta)
        return status
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else 2
    except UsageError as exc:
        print(f"bilab: usage error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, SolverError, ArithmeticError) as exc:
        print(f"bilab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
