"""Command line: density experiments emitted as deterministic CSV.

Every subcommand prints a header row, data rows and trailing ``#`` rows of
metadata, the last of which is always ``# horizon,<largest index examined>``.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import io
import re
import sys
from fractions import Fraction
from typing import Optional, Sequence

from . import cauchy, codings, density, tree
from .seq import BudgetExceeded, complement, symdiff
from .speclang import SpecError, build, parse_spec

_LIMIT = re.compile(r"^\s*(\d+)\s*(?:(!)|\^\s*(\d+))?\s*$")

EXIT_USAGE = 2
EXIT_BUDGET = 3


def parse_count(text: str) -> int:
    """Integer literal with optional ``k!`` or ``a^b`` form (``10!``, ``2^20``)."""
    m = _LIMIT.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"not a count: {text!r} (use N, N! or A^B)")
    base = int(m.group(1))
    if m.group(2):
        if base > 1000:
            raise argparse.ArgumentTypeError("factorial literal too large")
        out = 1
        for k in range(2, base + 1):
            out *= k
        return out
    if m.group(3):
        return base ** int(m.group(3))
    return base


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational: {text!r}") from None


def parse_set(text: str):
    try:
        return parse_spec(text)
    except SpecError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _grid(args, seq=None) -> density.CheckpointGrid:
    kind = args.grid
    if kind == "auto":
        return density.grid_for(seq, args.limit, args.warmup)
    limit = args.limit if args.limit is not None else 1 << 20
    warmup = args.warmup
    if warmup is None:
        warmup = min(1 << 10, limit) if kind == "geometric" else 1
    param = {"linear": args.step, "geometric": args.ratio}.get(kind)
    return density.CheckpointGrid(kind, limit, warmup, param)


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _profile_rows(w, prof: density.DensityProfile) -> None:
    w.writerow(["n", "count", "rho_exact", "rho_float"])
    for p in prof.points:
        w.writerow([p.n, p.count, _frac(p.rho), density.rho_float(p.rho)])


def cmd_density(args, w) -> int:
    s = build(args.set)
    grid = _grid(args, s)
    prof = density.density_profile(s, grid, args.cap)
    _profile_rows(w, prof)
    w.writerow(["# tail_max", _frac(prof.tail_max), density.rho_float(prof.tail_max)])
    w.writerow(["# tail_min", _frac(prof.tail_min), density.rho_float(prof.tail_min)])
    return prof.horizon


def cmd_delta(args, w) -> int:
    a, b = build(args.a), build(args.b)
    grid = _grid(args, symdiff(a, b))
    value, prof = density.delta_estimate(a, b, grid, args.cap)
    _profile_rows(w, prof)
    w.writerow(["# tail_min", _frac(prof.tail_min), density.rho_float(prof.tail_min)])
    w.writerow(["# tail_max", _frac(value), density.rho_float(value)])
    return prof.horizon


def _max_block(limit: int) -> int:
    k = 0
    while (1 << (k + 2)) - 1 <= limit:
        k += 1
    return k


def cmd_blocks(args, w) -> int:
    s = build(args.set)
    limit = args.limit if args.limit is not None else 1 << 20
    w.writerow(["k", "count", "d_exact", "d_float"])
    top = _max_block(limit)
    for k in range(top + 1):
        b = density.block_density(s, k, args.cap)
        w.writerow([k, b.count, _frac(b.d), density.rho_float(b.d)])
    return (1 << (top + 1)) - 1


def cmd_decode(args, w) -> int:
    s = build(args.set)
    if args.noise:
        s = symdiff(s, codings.block_noise(args.noise, args.seed))
    w.writerow(["k", "bit"])
    horizon = 0
    if args.kind == "J":
        for k in range(args.count):
            w.writerow([k, codings.decode_J(s, k, args.samples)])
            pos = codings.block_positions(k, args.samples)
            horizon = max(horizon, int(pos[-1]) + 1)
    else:
        grid = _grid(args, s)
        for k in range(args.count):
            w.writerow([k, codings.decode_R(s, k, grid, args.cap)])
        horizon = grid.checkpoints()[-1]
    return horizon


def cmd_limit(args, w) -> int:
    if args.approximants is not None:
        if len(args.set) != 1:
            raise ValueError("--approximants takes exactly one --set")
        a = build(args.set[0])
        seqs = [codings.approximate_R(a, k) for k in range(args.approximants)]
    else:
        seqs = [build(x) for x in args.set]
    grid = _grid(args) if args.grid != "auto" else density.CheckpointGrid("dyadic", args.limit or 1 << 18, args.warmup or 1)
    lim, smap = cauchy.splice_limit(seqs, args.slack, args.cap)
    rows = cauchy.convergence_report(seqs, lim, grid, args.slack, args.cap)
    w.writerow(["m", "tail_max_exact", "tail_max_float", "bound", "flagged"])
    for r in rows:
        w.writerow([r.m, _frac(r.tail_max), density.rho_float(r.tail_max), _frac(r.bound), int(r.flagged)])
    horizon = grid.checkpoints()[-1]
    top = _max_block(horizon)
    for k, n in smap.table(top).items():
        w.writerow(["# splice", f"k={k}", f"source={n}"])
    return horizon


def cmd_gamma(args, w) -> int:
    target = build(args.set)
    describers = [build(x) for x in args.x]
    grid = _grid(args, target)
    w.writerow(["describer", "tail_min_exact", "tail_min_float"])
    best = None
    for spec, d in zip(args.x, describers):
        v = density.gamma_lower_estimate(target, [d], grid, args.cap)
        best = v if best is None else max(best, v)
        w.writerow([str(d), _frac(v), density.rho_float(v)])
    w.writerow(["# gamma_lower", _frac(best), density.rho_float(best)])
    return grid.checkpoints()[-1]


def cmd_tree(args, w) -> int:
    code = tree.tree_code(args.path, args.depth_cap)
    m = args.index
    if args.agree is not None:
        other = tree.tree_code(args.agree, args.depth_cap)
        w.writerow(["path", "path2", "index", "agreements"])
        w.writerow([args.path, args.agree, m, tree.pairwise_agreement_count(code, other, m)])
    elif args.popcount:
        w.writerow(["path", "index", "popcount"])
        w.writerow([args.path, m, tree.tree_prefix_popcount(code, m)])
    else:
        w.writerow(["path", "index", "bit"])
        w.writerow([args.path, m, tree.tree_bit(code, m)])
    return m


def cmd_check(args, w) -> int:
    s = build(args.set)
    grid = _grid(args, s)
    pts = grid.checkpoints()
    w.writerow(["check", "detail", "result"])
    comp = complement(s)
    ok = all(
        density.rho_at(s, n, args.cap) + density.rho_at(comp, n, args.cap) == 1 for n in pts
    )
    w.writerow(["complement_identity", f"{len(pts)} checkpoints", "pass" if ok else "fail"])
    report = density.factor2_check(s, args.k, args.cap)
    for r in report.rows:
        w.writerow(["factor2", f"k={r.k}", "pass" if r.lower_ok and r.upper_ok else "fail"])
    horizon = max(pts[-1], 1 << (args.k + 1))
    if args.a is not None and args.b is not None:
        a, b = build(args.a), build(args.b)
        ac = density.density_profile(symdiff(s, b), grid, args.cap).points
        ab = density.density_profile(symdiff(s, a), grid, args.cap).points
        bc = density.density_profile(symdiff(a, b), grid, args.cap).points
        tri = all(x.rho <= y.rho + z.rho for x, y, z in zip(ac, ab, bc))
        w.writerow(["triangle", "set,a,b", "pass" if tri else "fail"])
        sym = density.delta_estimate(s, a, grid, args.cap)[0] == density.delta_estimate(a, s, grid, args.cap)[0]
        w.writerow(["symmetry", "set,a", "pass" if sym else "fail"])
    return horizon


COMMANDS = {
    "density": cmd_density,
    "delta": cmd_delta,
    "blocks": cmd_blocks,
    "decode": cmd_decode,
    "limit": cmd_limit,
    "gamma": cmd_gamma,
    "tree": cmd_tree,
    "check": cmd_check,
}


def _grid_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--grid", default="auto", choices=["auto", "linear", "geometric", "factorial", "dyadic", "triangular"])
    p.add_argument("--warmup", type=parse_count)
    p.add_argument("--limit", type=parse_count)
    p.add_argument("--step", type=parse_count, default=1, help="linear grid step")
    p.add_argument("--ratio", type=parse_fraction, default=Fraction(5, 4), help="geometric grid ratio")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coarsesim", description="Exact density experiments on subsets of ω.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="-", help="output path, '-' for stdout")
    common.add_argument("--cap", type=parse_count, default=None, help="materialisation cap in bits")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], help=help)

    p = add("density", help="prefix densities of one set")
    p.add_argument("--set", required=True, type=parse_set)
    _grid_flags(p)

    p = add("delta", help="density of a symmetric difference")
    p.add_argument("--a", required=True, type=parse_set)
    p.add_argument("--b", required=True, type=parse_set)
    _grid_flags(p)

    p = add("blocks", help="block densities on J_k")
    p.add_argument("--set", required=True, type=parse_set)
    p.add_argument("--limit", type=parse_count)

    p = add("decode", help="recover A from a J- or R-coding")
    p.add_argument("--set", required=True, type=parse_set)
    p.add_argument("--kind", choices=["J", "R"], default="J", type=str.upper)
    p.add_argument("--count", type=int, default=16, help="decode bits 0..count-1")
    p.add_argument("--samples", type=parse_count, default=codings.DECODE_SAMPLES)
    p.add_argument("--noise", type=parse_fraction, default=None, help="flip this fraction of every J_k first")
    p.add_argument("--seed", type=int, default=0)
    _grid_flags(p)

    p = add("limit", help="splice the limit of a Cauchy list")
    p.add_argument("--set", required=True, type=parse_set, action="append")
    p.add_argument(
        "--approximants", type=int, metavar="K",
        help="use R(A ∩ [0, k]) for k < K instead of the listed sets (needs exactly one --set A)",
    )
    p.add_argument("--slack", type=parse_fraction, default=cauchy.DEFAULT_TRUST_SLACK)
    _grid_flags(p)

    p = add("gamma", help="best agreement with given describers")
    p.add_argument("--set", required=True, type=parse_set)
    p.add_argument("--x", required=True, type=parse_set, action="append")
    _grid_flags(p)

    p = add("tree", help="symbolic queries on the balanced perfect tree")
    p.add_argument("--path", required=True)
    p.add_argument("--index", type=parse_count, required=True)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--bit", action="store_true")
    mode.add_argument("--popcount", action="store_true")
    mode.add_argument("--agree", metavar="PATH2")
    p.add_argument("--depth-cap", type=int, default=tree.DEFAULT_DEPTH_CAP)

    p = add("check", help="finite metric identities for a set")
    p.add_argument("--set", required=True, type=parse_set)
    p.add_argument("--a", type=parse_set)
    p.add_argument("--b", type=parse_set)
    p.add_argument("--k", type=int, default=12, help="largest block for the factor-2 check")
    _grid_flags(p)
    return parser


def run(argv: Sequence[str]) -> tuple[int, str, str]:
    """Execute one invocation; returns ``(exit code, stdout text, stderr text)``.

    With ``--out PATH`` the CSV goes to that file and the stdout text is empty.
    """
    parser = make_parser()
    err = io.StringIO()
    try:
        with contextlib.redirect_stderr(err), contextlib.redirect_stdout(err):
            args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0), "", err.getvalue()
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    try:
        horizon = COMMANDS[args.command](args, w)
    except (BudgetExceeded, IndexError) as exc:
        return EXIT_BUDGET, "", f"error: {exc}\n"
    except ValueError as exc:
        return EXIT_USAGE, "", f"error: {exc}\n"
    w.writerow(["# horizon", horizon])
    text = out.getvalue()
    if args.out != "-":
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        return 0, "", ""
    return 0, text, ""


def main(argv: Optional[Sequence[str]] = None) -> int:
    code, text, err = run(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(text)
    sys.stderr.write(err)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
