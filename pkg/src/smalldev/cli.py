"""Command-line experiment runner.

Every subcommand validates its flags (exit code 2 on bad input), derives
per-cell random streams from the global seed, fans independent cells out to
a worker pool, sorts the rows deterministically, and writes a CSV whose
provenance comment carries the version, the seed and a hash of the semantic
config, so identical configs produce byte-identical files regardless of the
worker count.  SMALLDEV_SEED overrides --seed.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, csvio
from .boundaries import BoundarySpec
from .coupling import TwoPointLaw, coupling_tail_report
from .environment import load_model, sample_environment, sigma_decomposition
from .lattice import exact_exponent, exact_survival
from .mc import SplitConfig, mc_survival, split_survival
from .rates import GammaTable, TableGap, mogulskii_rate, rwre_rate, shao_rate
from .rng import TAG_CLI, stream
from .tube import gamma_estimate


class ValidationError(ValueError):
    pass


def config_hash(semantic: dict) -> str:
    blob = json.dumps(semantic, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _provenance(seed: int, semantic: dict) -> dict:
    return {"seed": seed, "config": config_hash(semantic)}


def _emit(args, header, rows, seed, semantic) -> None:
    text = csvio.render_csv(header, rows, _provenance(seed, semantic))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _pmap(fn, items, workers: int):
    """Order-preserving map; results do not depend on the worker count."""
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _resolve_seed(args) -> int:
    env = os.environ.get("SMALLDEV_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ValidationError(f"SMALLDEV_SEED is not an integer: {env!r}") from exc
    return args.seed


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad integer list: {text!r}") from exc
    if not vals:
        raise ValidationError("empty list")
    return vals


def _float_list(text: str) -> list[float]:
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ValidationError(f"bad number list: {text!r}") from exc
    if not vals:
        raise ValidationError("empty list")
    return vals


def _load_model_arg(args):
    if not args.model:
        raise ValidationError("--model FILE is required")
    if not os.path.exists(args.model):
        raise ValidationError(f"model file not found: {args.model}")
    return load_model(args.model)


def _boundary_from_args(args, need_alpha=True) -> BoundarySpec:
    alpha = args.alpha
    entry = None
    exit_win = None
    if args.a0 is not None or args.b0 is not None:
        if args.a0 is None or args.b0 is None:
            raise ValidationError("--a0 and --b0 must be given together")
        entry = (args.a0, args.b0)
    if args.aprime is not None or args.bprime is not None:
        if args.aprime is None or args.bprime is None:
            raise ValidationError("--aprime and --bprime must be given together")
        exit_win = (args.aprime, args.bprime)
    try:
        if args.boundary_file:
            if not os.path.exists(args.boundary_file):
                raise ValidationError(f"boundary file not found: {args.boundary_file}")
            _, rows, _ = csvio.read_csv(args.boundary_file)
            lower = np.array([float(r[0]) for r in rows])
            upper = np.array([float(r[1]) for r in rows])
            return BoundarySpec.explicit(alpha, lower, upper, entry=entry, exit=exit_win, t_shift=args.tn)
        if args.recenter is not None:
            return BoundarySpec.recentered(alpha, args.recenter, entry=entry, exit=exit_win, t_shift=args.tn)
        return BoundarySpec.constant(alpha, args.a, args.b, entry=entry, exit=exit_win, t_shift=args.tn)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc


def _add_boundary_flags(sub):
    sub.add_argument("--alpha", type=float, default=0.3, help="window scale exponent in (0, 1/2)")
    sub.add_argument("--a", type=float, default=-1.0, help="lower window constant (times n^alpha)")
    sub.add_argument("--b", type=float, default=1.0, help="upper window constant (times n^alpha)")
    sub.add_argument("--a0", type=float, default=None, help="entry window lower end")
    sub.add_argument("--b0", type=float, default=None, help="entry window upper end")
    sub.add_argument("--aprime", type=float, default=None, help="exit window lower end")
    sub.add_argument("--bprime", type=float, default=None, help="exit window upper end")
    sub.add_argument(
        "--boundary-file",
        default=None,
        help="CSV with header and one lower,upper row per step (n+1 rows)",
    )
    sub.add_argument("--recenter", type=float, default=None, help="half-width c of the quenched-mean window")
    sub.add_argument("--tn", type=int, default=0, help="start-time shift into the environment")


def _add_common(sub):
    sub.add_argument("--seed", type=int, default=0, help="global seed (SMALLDEV_SEED overrides)")
    sub.add_argument("--out", "-o", default=None, help="output file (default stdout)")
    sub.add_argument("--workers", type=int, default=1, help="worker processes for independent cells")


# cell runners must be module-level for the process pool


def _exponent_cell(item):
    (model, boundary, n, seed, variant, x0) = item
    envr = sample_environment(model, n + boundary.t_shift, seed[0], replica=seed[1])
    if variant == "point":
        res = exact_survival(envr, boundary, n, x0)
    else:
        res = exact_exponent(envr, boundary, n, variant=variant, x0=x0)
    return res.log_prob, res.exponent


def cmd_exponent(args) -> int:
    seed = _resolve_seed(args)
    model = _load_model_arg(args)
    boundary = _boundary_from_args(args)
    if args.n <= 0:
        raise ValidationError("--n must be positive")
    variant = {"sup": "sup", "inf-exit": "inf_exit", "point": "point"}.get(args.variant)
    if variant is None:
        raise ValidationError(f"unknown variant {args.variant!r}")
    items = [(model, boundary, args.n, (seed, k), variant, args.x0) for k in range(args.seeds)]
    results = _pmap(_exponent_cell, items, args.workers)
    rows = [(k, args.n, lp, ex) for k, (lp, ex) in enumerate(results)]
    semantic = {
        "cmd": "exponent",
        "model": args.model,
        "n": args.n,
        "alpha": args.alpha,
        "a": args.a,
        "b": args.b,
        "a0": args.a0,
        "b0": args.b0,
        "aprime": args.aprime,
        "bprime": args.bprime,
        "boundary_file": args.boundary_file,
        "recenter": args.recenter,
        "tn": args.tn,
        "seeds": args.seeds,
        "variant": args.variant,
        "x0": args.x0,
        "seed": seed,
    }
    _emit(args, ["seed", "n", "log_prob", "exponent"], rows, seed, semantic)
    return 0


def cmd_mc(args) -> int:
    seed = _resolve_seed(args)
    model = _load_model_arg(args)
    boundary = _boundary_from_args(args)
    if args.n <= 0:
        raise ValidationError("--n must be positive")
    envr = sample_environment(model, args.n + boundary.t_shift, seed, replica=0)
    if args.method == "naive":
        if args.reps < 100:
            raise ValidationError("--reps must be >= 100")
        est = mc_survival(envr, boundary, args.n, args.x0, args.reps, seed)
    elif args.method == "split":
        try:
            config = SplitConfig(d_blocks=args.D, particles=args.particles)
            est = split_survival(envr, boundary, args.n, args.x0, config, seed)
        except ValueError as exc:
            raise ValidationError(str(exc)) from exc
    else:
        raise ValidationError(f"unknown method {args.method!r}")
    extinct = "" if est.extinct_level is None else est.extinct_level
    rows = [(est.method, args.n, est.log_prob, est.stderr, extinct)]
    semantic = {
        "cmd": "mc",
        "model": args.model,
        "n": args.n,
        "alpha": args.alpha,
        "a": args.a,
        "b": args.b,
        "recenter": args.recenter,
        "tn": args.tn,
        "method": args.method,
        "reps": args.reps,
        "D": args.D,
        "particles": args.particles,
        "x0": args.x0,
        "seed": seed,
    }
    _emit(args, ["method", "n", "log_prob", "stderr", "levels_extinct"], rows, seed, semantic)
    return 0


def _gamma_cell(item):
    beta, t_list, nw, a, b, dx, ds, seed, w_step = item
    grid = None if dx is None else (dx, ds)
    return gamma_estimate(beta, t_list, nw, a=a, b=b, grid=grid, seed=seed, w_step=w_step)


def cmd_gamma(args) -> int:
    seed = _resolve_seed(args)
    t_list = _float_list(args.t_list)
    if len(t_list) < 3:
        raise ValidationError("--t-list needs at least 3 horizons")
    if args.dx is not None and args.ds is None:
        raise ValidationError("--ds must accompany --dx")
    est = _gamma_cell((args.beta, t_list, args.nw, args.a, args.b, args.dx, args.ds, seed, args.w_step))
    rows = [
        (est.beta, t, float(est.mean_xbar[i]), float(est.var_xbar[i]), est.gamma_hat, est.ci_halfwidth)
        for i, t in enumerate(est.horizons)
    ]
    semantic = {
        "cmd": "gamma",
        "beta": args.beta,
        "t_list": t_list,
        "nw": args.nw,
        "a": args.a,
        "b": args.b,
        "dx": args.dx,
        "ds": args.ds,
        "w_step": args.w_step,
        "seed": seed,
    }
    _emit(args, ["beta", "t", "mean_xbar", "var_xbar", "gamma_hat", "ci"], rows, seed, semantic)
    return 0


def cmd_gamma_table(args) -> int:
    seed = _resolve_seed(args)
    betas = _float_list(args.betas)
    t_list = _float_list(args.t_list)
    if len(t_list) < 3:
        raise ValidationError("--t-list needs at least 3 horizons")
    items = [
        (beta, t_list, args.nw, args.a, args.b, args.dx, args.ds, seed + i, args.w_step)
        for i, beta in enumerate(betas)
    ]
    ests = _pmap(_gamma_cell, items, args.workers)
    rows = [(e.beta, e.gamma_hat, e.ci_halfwidth, e.n_w) for e in ests]
    rows.sort(key=lambda r: r[0])
    semantic = {
        "cmd": "gamma-table",
        "betas": betas,
        "t_list": t_list,
        "nw": args.nw,
        "a": args.a,
        "b": args.b,
        "dx": args.dx,
        "ds": args.ds,
        "w_step": args.w_step,
        "seed": seed,
    }
    _emit(args, ["beta", "gamma_hat", "ci", "n_w"], rows, seed, semantic)
    return 0


def load_gamma_table(path) -> GammaTable:
    header, rows, _ = csvio.read_csv(path)
    idx = {name: i for i, name in enumerate(header)}
    for col in ("beta", "gamma_hat", "ci"):
        if col not in idx:
            raise ValidationError(f"gamma table {path} lacks column {col!r}")
    return GammaTable.from_rows(
        [(float(r[idx["beta"]]), float(r[idx["gamma_hat"]]), float(r[idx["ci"]])) for r in rows]
    )


def cmd_predict(args) -> int:
    seed = _resolve_seed(args)
    model = _load_model_arg(args)
    if not args.gamma_table:
        raise ValidationError("--gamma-table FILE is required")
    if not os.path.exists(args.gamma_table):
        raise ValidationError(f"gamma table not found: {args.gamma_table}")
    table = load_gamma_table(args.gamma_table)
    sa2, sq2 = sigma_decomposition(model)
    rows = []
    try:
        if args.recenter is not None:
            val = shao_rate(sq2, args.recenter)
            rows.append(("recentered", sa2, sq2, math.sqrt(sa2 / sq2), -args.recenter, args.recenter, val, 0.0))
        pred = rwre_rate(sa2, sq2, args.a, args.b, table)
        rows.append(("rwre", sa2, sq2, math.sqrt(sa2 / sq2), args.a, args.b, pred.exponent, pred.ci_halfwidth))
        if sa2 == 0.0:
            rows.append(("classical", sa2, sq2, 0.0, args.a, args.b, mogulskii_rate(sq2, args.a, args.b), 0.0))
    except TableGap as exc:
        raise ValidationError(str(exc)) from exc
    semantic = {
        "cmd": "predict",
        "model": args.model,
        "gamma_table": args.gamma_table,
        "a": args.a,
        "b": args.b,
        "recenter": args.recenter,
        "seed": seed,
    }
    _emit(
        args,
        ["formula", "sigma_a2", "sigma_q2", "beta", "a", "b", "predicted_exponent", "ci"],
        rows,
        seed,
        semantic,
    )
    return 0


def cmd_couple(args) -> int:
    seed = _resolve_seed(args)
    try:
        u, p, v = _float_list(args.law)
    except ValueError as exc:
        raise ValidationError(f"--law must be u,p,v: {exc}") from exc
    try:
        law = TwoPointLaw(u=u, p=p, v=v)
    except ValueError as exc:
        raise ValidationError(str(exc)) from exc
    if args.reps < 1000:
        raise ValidationError("--reps must be >= 1000")
    if args.x_grid:
        x_grid = _float_list(args.x_grid)
    else:
        top = 4.0 * math.sqrt(law.step_variance) * float(args.n) ** 0.3
        x_grid = [float(v) for v in np.linspace(0.0, top, 13)]
    rows = coupling_tail_report(law, args.n, args.reps, x_grid, seed=seed)
    semantic = {
        "cmd": "couple",
        "n": args.n,
        "reps": args.reps,
        "law": [u, p, v],
        "x_grid": x_grid,
        "seed": seed,
    }
    _emit(args, ["x", "empirical_tail", "envelope_l2", "envelope_l4"], rows, seed, semantic)
    return 0


def _convergence_cell(item):
    model, boundary, n, seed_pair, variant = item
    envr = sample_environment(model, n + boundary.t_shift, seed_pair[0], replica=seed_pair[1])
    res = exact_exponent(envr, boundary, n, variant=variant)
    return res.log_prob, res.exponent


def cmd_convergence(args) -> int:
    seed = _resolve_seed(args)
    model = _load_model_arg(args)
    n_list = _int_list(args.n_list)
    if sorted(n_list) != n_list:
        raise ValidationError("--n-list must be increasing")
    sa2, sq2 = sigma_decomposition(model)
    if args.gamma_table:
        if not os.path.exists(args.gamma_table):
            raise ValidationError(f"gamma table not found: {args.gamma_table}")
        table = load_gamma_table(args.gamma_table)
    else:
        table = GammaTable.exact_at_zero()
    boundary = _boundary_from_args(args)
    if args.recenter is not None:
        predicted = shao_rate(sq2, args.recenter)
    else:
        try:
            predicted = rwre_rate(sa2, sq2, args.a, args.b, table).exponent
        except TableGap as exc:
            raise ValidationError(
                f"{exc}; supply --gamma-table covering beta={math.sqrt(sa2 / sq2):.3f}"
            ) from exc
    items = [
        (model, boundary, n, (seed, k), "sup")
        for n in n_list
        for k in range(args.seeds)
    ]
    results = _pmap(_convergence_cell, items, args.workers)
    rows = []
    for (m_, b_, n, sp, v_), (lp, ex) in zip(items, results):
        rel_gap = abs(ex / predicted - 1.0) if predicted != 0 else math.inf
        rows.append((n, sp[1], lp, ex, predicted, rel_gap))
    rows.sort(key=lambda r: (r[0], r[1]))
    semantic = {
        "cmd": "convergence",
        "model": args.model,
        "alpha": args.alpha,
        "a": args.a,
        "b": args.b,
        "recenter": args.recenter,
        "tn": args.tn,
        "n_list": n_list,
        "seeds": args.seeds,
        "gamma_table": args.gamma_table,
        "seed": seed,
    }
    _emit(args, ["n", "seed", "log_prob", "exponent", "predicted", "rel_gap"], rows, seed, semantic)
    return 0


def cmd_acceptance(args) -> int:
    from .acceptance import run_suite

    seed = _resolve_seed(args)
    if args.suite != "primary":
        raise ValidationError(f"unknown suite {args.suite!r}")
    results = run_suite(workers=args.workers)
    summary = {
        "suite": args.suite,
        "seed": seed,
        "passed": all(r.passed for r in results),
        "criteria": [r.as_dict() for r in results],
    }
    text = json.dumps(summary, indent=2, default=str)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")
    return 0 if summary["passed"] else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="smalldev",
        description="Quenched small-deviation exponents: exact DP, Monte Carlo, "
        "tube-rate estimation and closed-form predictions.",
    )
    parser.add_argument("--version", action="version", version=f"smalldev {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("exponent", help="exact DP survival exponents over environment seeds")
    p.add_argument("--model", required=False, help="environment model JSON")
    p.add_argument("--n", type=int, required=True, help="number of steps")
    _add_boundary_flags(p)
    p.add_argument("--seeds", type=int, default=1, help="number of environment replicas")
    p.add_argument("--variant", default="sup", choices=["sup", "inf-exit", "point"])
    p.add_argument("--x0", type=float, default=0.0, help="start position (point variant)")
    _add_common(p)
    p.set_defaults(func=cmd_exponent)

    p = subs.add_parser("mc", help="Monte Carlo / splitting survival estimate")
    p.add_argument("--model", required=False)
    p.add_argument("--n", type=int, required=True)
    _add_boundary_flags(p)
    p.add_argument("--method", default="naive", choices=["naive", "split"])
    p.add_argument("--reps", type=int, default=10000, help="trajectories (naive)")
    p.add_argument("--D", type=int, default=4, help="block-length multiplier")
    p.add_argument("--particles", type=int, default=1000, help="particles per level (split)")
    p.add_argument("--x0", type=float, default=0.0)
    _add_common(p)
    p.set_defaults(func=cmd_mc)

    p = subs.add_parser("gamma", help="tube-rate estimate at one beta")
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--t-list", default="2,3,4,5,6", help="comma-separated horizons")
    p.add_argument("--nw", type=int, default=50, help="carrier samples per horizon")
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--dx", type=float, default=None, help="spatial step (default (b-a)/200)")
    p.add_argument("--ds", type=float, default=None, help="time step (default dx^2)")
    p.add_argument("--w-step", type=float, default=0.001, help="carrier path resolution")
    _add_common(p)
    p.set_defaults(func=cmd_gamma)

    p = subs.add_parser("gamma-table", help="sweep a beta grid into a reusable rate table")
    p.add_argument("--betas", default="0,0.5,1,2", help="comma-separated beta grid")
    p.add_argument("--t-list", default="2,3,4,5,6")
    p.add_argument("--nw", type=int, default=50)
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--dx", type=float, default=None)
    p.add_argument("--ds", type=float, default=None)
    p.add_argument("--w-step", type=float, default=0.001)
    _add_common(p)
    p.set_defaults(func=cmd_gamma_table)

    p = subs.add_parser("predict", help="closed-form rate predictions from a gamma table")
    p.add_argument("--model", required=False)
    p.add_argument("--gamma-table", default=None)
    p.add_argument("--a", type=float, default=-1.0)
    p.add_argument("--b", type=float, default=1.0)
    p.add_argument("--recenter", type=float, default=None)
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = subs.add_parser("couple", help="Brownian embedding distance-tail report")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--law", default="1,0.5,1", help="u,p,v of the two-point step")
    p.add_argument("--x-grid", default=None, help="comma-separated thresholds")
    _add_common(p)
    p.set_defaults(func=cmd_couple)

    p = subs.add_parser("convergence", help="measured exponents joined with predictions over n")
    p.add_argument("--model", required=False)
    p.add_argument("--n-list", required=True, help="comma-separated increasing n values")
    _add_boundary_flags(p)
    p.add_argument("--seeds", type=int, default=1)
    p.add_argument("--gamma-table", default=None)
    _add_common(p)
    p.set_defaults(func=cmd_convergence)

    p = subs.add_parser("acceptance", help="run the acceptance battery, emit JSON summary")
    p.add_argument("--suite", default="primary")
    _add_common(p)
    p.set_defaults(func=cmd_acceptance)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
