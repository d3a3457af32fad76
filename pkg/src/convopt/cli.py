"""convopt command line: bounds, tilings, sweeps, partitions, verification, simulation.

Exit codes: 0 success, 1 verification found a gap, 2 bad input.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from fractions import Fraction

from .bounds import lower_bound
from .cachesim import CapExceeded, Policy, SimConfig, auto_tiling, simulate
from .model import ConvParams, KernelKind, ParamError, total_flops, validate_params
from .mplp import Partition, cnn_partition, verify_attainability
from .stride1 import decision_tree_cost, stride1_decision_tree
from .tiling import Tiling, is_feasible, solve_tiling, tiling_comm_cost, violations

EXIT_OK, EXIT_GAP, EXIT_INPUT = 0, 1, 2

SWEEP_COLUMNS = ["M", "lb_term1", "lb_term2", "lb_term3", "lb_term4", "lb_term5", "lb_max",
                 "lp_tiling_cost", "matmul_reuse_cost", "decision_tree_cost"]


class InputError(Exception):
    pass


def _default_seed() -> int:
    raw = os.environ.get("CONVOPT_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"CONVOPT_SEED must be an integer, got {raw!r}") from None


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def load_layer(path: str) -> ConvParams:
    try:
        data = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise InputError("layer JSON must be an object")
    return validate_params(ConvParams.from_dict(data))


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2))


def _floor(x: Fraction) -> int:
    return math.floor(x)


def matmul_reuse_cost(p: ConvParams, M: int) -> int:
    """floor(F / sqrt(M)): traffic with matmul's sqrt(M) reuse per word."""
    F = total_flops(p)
    return math.isqrt(F * F // M)


def sweep_rows(p: ConvParams, m_values) -> list:
    rows = []
    for M in m_values:
        lb = lower_bound(p, M)
        t = solve_tiling(p, M)
        dt = ""
        if not p.is_pool and p.sigma_w == 1 and p.sigma_h == 1:
            dt = _floor(decision_tree_cost(stride1_decision_tree(p, M), p, M))
        terms = ["" if v is None else v for v in lb.terms]
        rows.append([M, *terms, lb.max_term, _floor(tiling_comm_cost(t, p, M)),
                     matmul_reuse_cost(p, M), dt])
    return rows


def geometric_values(lo: int, hi: int, points: int) -> list:
    if points < 1 or lo > hi:
        raise InputError("need points >= 1 and m-min <= m-max")
    if points == 1:
        return [lo]
    ratio = (hi / lo) ** (1 / (points - 1))
    vals = sorted({max(lo, min(hi, round(lo * ratio ** i))) for i in range(points)})
    return vals


# Subcommands ---------------------------------------------------------------

def cmd_bound(args) -> int:
    p = load_layer(args.layer)
    lb = lower_bound(p, args.m)
    _emit({"M": args.m, **lb.as_dict()})
    return EXIT_OK


def cmd_sweep(args) -> int:
    p = load_layer(args.layer)
    if args.m_values:
        values = args.m_values
        if any(b <= a for a, b in zip(values, values[1:])):
            raise InputError("--m-values must be strictly increasing")
    elif args.m_min and args.m_max:
        values = geometric_values(args.m_min, args.m_max, args.points)
    else:
        raise InputError("give --m-values or --m-min/--m-max")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    writer.writerows(sweep_rows(p, values))
    if args.out and args.out != "-":
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_tile(args) -> int:
    p = load_layer(args.layer)
    t = solve_tiling(p, args.m)
    cost = tiling_comm_cost(t, p, args.m)
    lb = lower_bound(p, args.m)
    _emit({"tiling": t.to_dict(), "cost": _floor(cost), "lower_bound": lb.max_term,
           "cost_over_bound": float(cost / lb.max_term)})
    return EXIT_OK


def cmd_oracle_stride1(args) -> int:
    p = load_layer(args.layer)
    res = stride1_decision_tree(p, args.m)
    out = res.as_dict()
    out["cost"] = _floor(decision_tree_cost(res, p, args.m))
    out["lower_bound"] = lower_bound(p, args.m).max_term
    _emit(out)
    return EXIT_OK


def cmd_partition(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    t0 = time.perf_counter()
    part = cnn_partition(args.kind, seed=seed, theta_max=args.theta_max)
    text = part.to_json()
    if args.out and args.out != "-":
        with open(args.out, "w") as fh:
            fh.write(text)
        _emit({"kind": args.kind, "seed": seed, "regions": len(part),
               "seconds": round(time.perf_counter() - t0, 3), "out": args.out})
    else:
        print(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        part = Partition.from_json(_read_text(args.partition))
    except (json.JSONDecodeError, KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"malformed partition file: {exc}") from None
    report = verify_attainability(part, args.kind)
    _emit(report.as_dict())
    return EXIT_OK if report.ok else EXIT_GAP


def cmd_simulate(args) -> int:
    p = load_layer(args.layer)
    if args.tiling:
        try:
            t = Tiling.from_dict(json.loads(_read_text(args.tiling)))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed tiling file: {exc}") from None
        if not is_feasible(t, p, args.m):
            raise InputError("infeasible tiling: " + "; ".join(violations(t, p, args.m)))
    else:
        t = auto_tiling(p, args.m, args.policy)
    cfg = SimConfig(p, t, args.m, Policy(args.policy), element_tracking=args.track,
                    pool_mode=args.pool_mode, cap=args.cap,
                    seed=args.seed if args.seed is not None else _default_seed())
    try:
        rep = simulate(cfg)
    except CapExceeded as exc:
        raise InputError(str(exc)) from None
    out = rep.as_dict()
    out["tiling"] = t.to_dict()
    out["lower_bound"] = lower_bound(p, args.m).max_term
    _emit(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="convopt", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def layer_cmd(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("layer", help="layer JSON file ('-' for stdin)")
        sp.add_argument("--m", type=_positive_int, required=True, help="cache size in words")
        sp.set_defaults(func=fn)
        return sp

    layer_cmd("bound", cmd_bound, "lower-bound terms for one cache size")
    layer_cmd("tile", cmd_tile, "LP tiling and its communication cost")
    layer_cmd("oracle-stride1", cmd_oracle_stride1, "unit-stride decision-tree tiling")

    sp = sub.add_parser("sweep", help="CSV of bounds and costs over cache sizes")
    sp.add_argument("layer")
    sp.add_argument("--m-values", type=_positive_int, nargs="+")
    sp.add_argument("--m-min", type=_positive_int)
    sp.add_argument("--m-max", type=_positive_int)
    sp.add_argument("--points", type=int, default=30)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("partition", help="partition parameter space into optimal-tiling regions")
    sp.add_argument("--kind", choices=[k.value for k in KernelKind], default="conv")
    sp.add_argument("--seed", type=int, default=None, help="defaults to $CONVOPT_SEED or 0")
    sp.add_argument("--theta-max", type=int, default=8)
    sp.add_argument("--out", default="-")
    sp.set_defaults(func=cmd_partition)

    sp = sub.add_parser("verify", help="check a partition's cost against the lower bounds")
    sp.add_argument("--partition", required=True)
    sp.add_argument("--kind", choices=[k.value for k in KernelKind], default=None)
    sp.set_defaults(func=cmd_verify)

    sp = layer_cmd("simulate", cmd_simulate, "count words moved by the blocked nest")
    grp = sp.add_mutually_exclusive_group(required=True)
    grp.add_argument("--tiling", help="tiling JSON file")
    grp.add_argument("--auto", action="store_true", help="use the LP tiling")
    sp.add_argument("--policy", choices=[x.value for x in Policy], default="lru")
    sp.add_argument("--track", action="store_true", help="check Out against the reference loop")
    sp.add_argument("--pool-mode", choices=["max", "avg"], default="max")
    sp.add_argument("--cap", type=_positive_int, default=10**8)
    sp.add_argument("--seed", type=int, default=None)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ParamError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
