"""Command-line entry point: ``pinarrange <subcommand> ...``.

Exit codes: 0 success, 1 invalid input (one-line message on stderr),
2 solver failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict, dataclass
from typing import Sequence, TextIO

from pinarrange import generators
from pinarrange.formats import (
    CLI_MODES,
    format_instance,
    format_metric,
    format_placement,
    parse_instance,
    parse_placement,
    read_text,
)
from pinarrange.model import GridSpec, Instance, InstanceError, Placement, check_placement, validate_instance
from pinarrange.oracle_exact import BudgetExceeded, solve_exact
from pinarrange.place_bounded import place_bounded
from pinarrange.place_unbounded import PIPELINES, place_eps_violation, place_unbounded
from pinarrange.plot import placement_svg
from pinarrange.spreading_lp import LPError, SpreadingMetric, solve_lp

FAMILIES = ("bounded-gap", "unbounded-gap", "3part", "3part-unbounded")


@dataclass
class BenchRecord:
    instance_id: str
    mode: str
    seed: int
    trials: int
    lp_objective: float
    placement_cost: float
    ratio: float
    exact_optimum: float | None
    wall_time: float


# ---------------------------------------------------------------- helpers


def _write(path: str | None, text: str, stdout: TextIO) -> None:
    if path is None or path == "-":
        stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _int_root(n: int, dim: int) -> int | None:
    r = round(n ** (1.0 / dim))
    for c in (r - 1, r, r + 1):
        if c >= 1 and c**dim == n:
            return c
    return None


def with_mode(inst: Instance, mode: str | None, eps: float | None) -> Instance:
    """Re-target an instance to another grid mode (pins must still fit)."""
    if mode is None and eps is None:
        return inst
    target = CLI_MODES[mode] if mode else inst.grid.mode
    if target == "bounded":
        side = _int_root(inst.n, inst.dim)
        if side is None:
            raise InstanceError(f"grid size mismatch: n={inst.n} is not a perfect power of {inst.dim}")
        grid = GridSpec("bounded", side)
    elif target == "eps_violation":
        e = eps if eps is not None else inst.grid.eps
        if not e > 0:
            raise InstanceError("eps mode needs --eps > 0")
        grid = GridSpec("eps_violation", 0, e)
    else:
        grid = GridSpec("unbounded")
    return validate_instance(inst.with_grid(grid))


def run_placement(
    inst: Instance, seed: int, trials: int, pipeline: str | None, metric: SpreadingMetric | None = None
) -> Placement:
    mode = inst.grid.mode
    if mode == "bounded":
        return place_bounded(inst, seed, trials, pipeline or "ckr", metric)
    if mode == "eps_violation":
        return place_eps_violation(inst, seed, trials, pipeline or "hst", metric)
    return place_unbounded(inst, seed, trials, pipeline or "hst", metric)


def generate(args: argparse.Namespace) -> Instance:
    fam = args.family
    if fam == "bounded-gap":
        return generators.gen_bounded_gap(args.n).instance
    if fam == "unbounded-gap":
        alpha = args.alpha if args.alpha is not None else args.n ** -0.25
        return generators.gen_unbounded_gap(args.n, args.t, alpha).instance
    a = [int(x) for x in args.a.split(",")] if args.a else [2] * 6
    if fam == "3part":
        return generators.gen_3partition_bounded(a, args.B, args.N, args.spacing).instance
    return generators.gen_3partition_unbounded(a, args.B, args.N, args.spacing, args.frame_side).instance


def _load(args: argparse.Namespace, stdin: TextIO) -> tuple[Instance, str]:
    text = read_text(args.input, stdin)
    return parse_instance(text), text


def _instance_and_placement(args: argparse.Namespace, stdin: TextIO) -> tuple[Instance, Placement]:
    text = read_text(args.input, stdin)
    inst_text = read_text(args.instance, stdin) if args.instance else text
    inst = parse_instance(inst_text)
    placement = parse_placement(text, inst)
    check_placement(inst, placement)
    return inst, placement


# ---------------------------------------------------------------- commands


def cmd_solve(args, stdin, stdout) -> int:
    inst, _ = _load(args, stdin)
    inst = with_mode(inst, args.mode, args.eps)
    placement = run_placement(inst, args.seed, args.trials, args.pipeline)
    body = format_placement(placement)
    if not args.placement_only:
        body = format_instance(inst) + body
    _write(args.out, body, stdout)
    return 0


def cmd_lp(args, stdin, stdout) -> int:
    inst, _ = _load(args, stdin)
    inst = with_mode(inst, args.mode, args.eps)
    metric, report = solve_lp(inst, tol=args.tol)
    _write(args.out, format_metric(metric), stdout)
    print(
        f"objective {metric.objective!r} rounds {report.rounds} "
        f"triangle_cuts {report.cuts_added['triangle']} spreading_cuts {report.cuts_added['spreading']}",
        file=sys.stderr,
    )
    return 0


def cmd_exact(args, stdin, stdout) -> int:
    inst, _ = _load(args, stdin)
    inst = with_mode(inst, args.mode, args.eps)
    res = solve_exact(inst, cell_budget=args.cell_budget, margin=args.margin)
    body = f"# optimum {res.optimum!r} enumerated {res.enumerated}\n" + format_placement(res.argmin)
    if not args.placement_only:
        body = format_instance(inst) + body
    _write(args.out, body, stdout)
    return 0


def cmd_gen(args, stdin, stdout) -> int:
    _write(args.out, format_instance(generate(args)), stdout)
    return 0


def cmd_eval(args, stdin, stdout) -> int:
    _, placement = _instance_and_placement(args, stdin)
    stdout.write(f"{placement.cost!r}\n")
    return 0


def cmd_plot(args, stdin, stdout) -> int:
    inst, placement = _instance_and_placement(args, stdin)
    _write(args.svg, placement_svg(inst, placement, args.title or ""), stdout)
    return 0


def bench_instance(fam: str, size: int, args: argparse.Namespace) -> Instance:
    ns = argparse.Namespace(**vars(args))
    ns.family, ns.n = fam, size
    return generate(ns)


def cmd_bench(args, stdin, stdout) -> int:
    sizes = [int(s) for s in args.sizes.split(",")]
    for size in sizes:
        t0 = time.perf_counter()
        inst = bench_instance(args.family, size, args)
        inst = with_mode(inst, args.mode, args.eps)
        metric, _ = solve_lp(inst)
        placement = run_placement(inst, args.seed, args.trials, args.pipeline, metric)
        exact = None
        if args.exact:
            try:
                exact = solve_exact(inst, cell_budget=args.cell_budget).optimum
            except BudgetExceeded:
                exact = None
        lp = metric.objective
        rec = BenchRecord(
            f"{args.family}-{size}",
            inst.grid.mode,
            args.seed,
            args.trials,
            lp,
            placement.cost,
            placement.cost / lp if lp > 0 else math.inf,
            exact,
            time.perf_counter() - t0,
        )
        stdout.write(json.dumps(asdict(rec)) + "\n")
        stdout.flush()
    return 0


# ---------------------------------------------------------------- parser


def _mode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=sorted(CLI_MODES), help="override the instance's grid mode")
    p.add_argument("--eps", type=float, help="violation parameter for --mode eps")


def _io_flags(p: argparse.ArgumentParser, out: bool = True) -> None:
    p.add_argument("--in", dest="input", metavar="PATH", help="input file (default: stdin)")
    if out:
        p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")


def _run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="master seed; trial i uses seed + i")
    p.add_argument("--trials", type=int, default=8)
    p.add_argument("--pipeline", choices=PIPELINES, help="default: ckr when bounded, hst otherwise")


def _gen_flags(p: argparse.ArgumentParser, need_family: bool = True) -> None:
    p.add_argument("--family", choices=FAMILIES, required=need_family)
    p.add_argument("--n", type=int, default=16, help="vertex count (gap families)")
    p.add_argument("--t", type=int, default=2, help="hole spacing for unbounded-gap")
    p.add_argument("--alpha", type=float, help="anchor weight for unbounded-gap (default n^-1/4)")
    p.add_argument("--a", help="comma-separated star sizes (3part families)")
    p.add_argument("--B", type=int, default=6)
    p.add_argument("--N", type=int, default=16)
    p.add_argument("--spacing", type=int, default=5)
    p.add_argument("--frame-side", type=int, help="frame side for 3part-unbounded (default N^2 B^2)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pinarrange", description="Pinned grid arrangement solver.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="place an instance")
    _io_flags(p)
    _mode_flags(p)
    _run_flags(p)
    p.add_argument("--placement-only", action="store_true", help="omit the instance block from the output")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("lp", help="solve the spreading-metric relaxation and print the metric")
    _io_flags(p)
    _mode_flags(p)
    p.add_argument("--tol", type=float, default=1e-7)
    p.set_defaults(fn=cmd_lp)

    p = sub.add_parser("exact", help="exhaustive optimum for tiny instances")
    _io_flags(p)
    _mode_flags(p)
    p.add_argument("--cell-budget", type=int, default=64)
    p.add_argument("--margin", type=int, default=2)
    p.add_argument("--placement-only", action="store_true")
    p.set_defaults(fn=cmd_exact)

    p = sub.add_parser("gen", help="generate a lower-bound instance")
    p.add_argument("--out", metavar="PATH")
    _gen_flags(p)
    p.set_defaults(fn=cmd_gen)

    p = sub.add_parser("eval", help="cost of a placement")
    _io_flags(p, out=False)
    p.add_argument("--instance", metavar="PATH", help="instance file when --in holds only a placement")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("bench", help="sweep a family and print one JSON record per size")
    _gen_flags(p)
    _mode_flags(p)
    _run_flags(p)
    p.add_argument("--sizes", default="16,64,144", help="comma-separated values of --n")
    p.add_argument("--exact", action="store_true", help="also run the exhaustive solver when affordable")
    p.add_argument("--cell-budget", type=int, default=64)
    p.set_defaults(fn=cmd_bench)

    p = sub.add_parser("plot", help="render a placement as SVG")
    _io_flags(p, out=False)
    p.add_argument("--instance", metavar="PATH")
    p.add_argument("--svg", metavar="PATH", help="output file (default: stdout)")
    p.add_argument("--title")
    p.set_defaults(fn=cmd_plot)
    return ap


def main(argv: Sequence[str] | None = None, stdin: TextIO | None = None, stdout: TextIO | None = None) -> int:
    args = build_parser().parse_args(argv)
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    try:
        return args.fn(args, stdin, stdout)
    except (LPError, BudgetExceeded) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except (InstanceError, ValueError, OSError) as exc:
        print(f"error: {exc}".splitlines()[0], file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
