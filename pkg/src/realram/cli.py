"""Command line: ``realram {ram,etr,lab,geo} <command> ...``.

Exit status is 0 on success, 1 on a domain error or a failed bound test and
2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import geometry as geo
from .etr import compiler as etrc
from .etr import formula as etrf
from .exact import format_rational, parse_rational
from .lab import (
    OrderTypeVerifier,
    collinear_base,
    count_intersected_cubes,
    expected_bit_bound,
    hitting_bound,
    hitting_cubes_experiment,
    intermediate_bound,
    recursion_bound,
    sign_flip_bound,
    sign_flip_probability,
    smoothed_bit_experiment,
)
from .machine import (
    MachineConfig,
    MachineError,
    ParseError,
    execute,
    parse_program,
    read_input_file,
    snapped_bit_complexity,
)
from .poly import parse_poly


class DomainError(Exception):
    pass


def _read(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text()


def _rationals(text: str | None) -> list[Fraction]:
    return [parse_rational(t) for t in (text or "").split()]


def _words(text: str | None) -> list[int]:
    return [int(t) for t in (text or "").split()]


def _emit(args, payload, text: str | None = None) -> None:
    body = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if getattr(args, "out", None):
        Path(args.out).write_text(body)
    print(text if text is not None else body, end="" if text is None else "\n")


def _machine_inputs(args):
    program = parse_program(_read(args.program), name=Path(args.program).stem if args.program != "-" else "stdin")
    reals, words = _rationals(args.reals), _words(args.words)
    w = args.word_size
    if args.input:
        reals, words, w_file = read_input_file(_read(args.input))
        w = w or w_file
    if w is None:
        raise DomainError("word size not given (use --word-size or an input file header)")
    cfg = MachineConfig(w=w, fuel=args.fuel, memory=args.memory)
    return program, reals, words, cfg


# ---------------------------------------------------------------- ram

def cmd_ram_run(args) -> int:
    program, reals, words, cfg = _machine_inputs(args)
    outcome, trace = execute(program, reals, words, cfg)
    r0 = trace.final_reals.get(0, Fraction(0))
    print(f"{outcome.value} R0={format_rational(r0)}")
    return 0


def cmd_ram_trace(args) -> int:
    program, reals, words, cfg = _machine_inputs(args)
    outcome, trace = execute(program, reals, words, cfg)
    sys.stdout.write(trace.to_text())
    print(outcome.value)
    return 0


def cmd_ram_bit(args) -> int:
    program, reals, words, cfg = _machine_inputs(args)
    res = snapped_bit_complexity(program, reals, words, cfg, wmax=args.wmax)
    print("none" if res is None else res)
    return 0


# ---------------------------------------------------------------- etr

def _compile_from_args(args):
    program = parse_program(_read(args.program))
    budget = etrc.CompileBudget(
        w=args.word_size, T=args.steps, memory=args.memory, collapse_frames=args.collapse_frames
    )
    instance = _words(args.instance)
    return program, instance, budget, etrc.compile_program(program, instance, budget)


def cmd_etr_compile(args) -> int:
    program, instance, budget, formula = _compile_from_args(args)
    stats = etrf.formula_stats(formula)
    if args.formula_out:
        Path(args.formula_out).write_text(etrf.to_text(etrf.rename(formula)))
    print(f"variables={stats['variables']} nodes={stats['nodes']} depth={stats['depth']}")
    if not args.check_witness:
        return 0
    cert = (_rationals(args.reals), _words(args.words))
    outcome, trace = execute(program, cert[0], instance + cert[1], budget.machine_config, raise_errors=False)
    env = etrc.witness_from_trace(program, instance, cert, trace, budget)
    if args.witness_out:
        Path(args.witness_out).write_text(etrf.write_witness(env, formula.variables))
    value = etrf.evaluate(formula, env)
    print(f"formula={'TRUE' if value else 'FALSE'} under trace witness (run {outcome.value})")
    return 0 if value == (outcome.value == "ACCEPT") else 1


def cmd_etr_check_witness(args) -> int:
    formula = etrf.parse_text(_read(args.formula))
    env = etrf.read_witness(_read(args.witness))
    value = etrf.evaluate(formula, env)
    print("TRUE" if value else "FALSE")
    return 0


def cmd_etr_export_smt(args) -> int:
    if args.formula:
        formula = etrf.parse_text(_read(args.formula))
    else:
        formula = etrf.rename(_compile_from_args(args)[3])
    text = etrf.export_smtlib(formula)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_etr_stats(args) -> int:
    if args.formula:
        formula = etrf.parse_text(_read(args.formula))
    else:
        formula = _compile_from_args(args)[3]
    _emit(args, etrf.formula_stats(formula))
    return 0


# ---------------------------------------------------------------- lab

def _report(args, rep) -> int:
    _emit(args, rep.to_json(timing=args.timing))
    return 0 if rep.passed else 1


def cmd_lab_hitting(args) -> int:
    if args.poly:
        p = parse_poly(args.poly, args.d)
        c = count_intersected_cubes(p, args.k)
        bound = hitting_bound(p.d, max(1, p.degree), args.k)
        _emit(args, {"count": c.count, "bound": bound, "pass": c.count <= bound, **c.as_dict()})
        return 0 if c.count <= bound else 1
    return _report(args, hitting_cubes_experiment(args.d, args.degree, args.k, args.polys, args.seed, timing=args.timing))


def cmd_lab_sign_flip(args) -> int:
    p = parse_poly(args.p)
    q = parse_poly(args.q, p.d)
    g = _rationals(args.g)
    rep = sign_flip_probability(p, q, g, parse_rational(args.delta), args.w, args.trials, args.seed, timing=args.timing)
    return _report(args, rep)


def cmd_lab_smoothed(args) -> int:
    dlt = parse_rational(args.delta)
    if args.verifier == "order-type":
        ver = OrderTypeVerifier(args.n)
        if args.points:
            g = [c for p in geo.read_points(_read(args.points)) for c in p]
            if len(g) != 2 * args.n:
                raise DomainError(f"--points has {len(g) // 2} points, --n says {args.n}")
        else:
            g = collinear_base(args.n, dlt)
    else:
        from .lab import AlgorithmProfile, ProgramVerifier

        program = parse_program(_read(args.program))
        prof = AlgorithmProfile(args.profile_d, args.profile_degree, 1, lambda n, c=args.profile_count: c)
        ver = ProgramVerifier(program, prof, cfg=MachineConfig(w=args.word_size, fuel=args.fuel))
        g = _rationals(args.g)
    return _report(args, smoothed_bit_experiment(ver, g, dlt, args.wmax, args.trials, args.seed, timing=args.timing))


def cmd_lab_bounds(args) -> int:
    out = {}
    if args.k is not None:
        out["hitting"] = hitting_bound(args.d, args.degree, args.k)
        out["recursion"] = recursion_bound(args.d, args.degree, args.k)
        out["intermediate"] = intermediate_bound(args.d, args.degree, args.k)
    if args.delta is not None:
        dlt = parse_rational(args.delta)
        out["expected_bits"] = expected_bit_bound(args.d, args.degree, args.count, dlt)
        if args.w is not None:
            out["sign_flip"] = float(sign_flip_bound(args.d, args.degree, args.w, dlt))
    _emit(args, out)
    return 0


# ---------------------------------------------------------------- geo

def cmd_geo_order_type(args) -> int:
    chi = geo.order_type(geo.read_points(_read(args.points)))
    text = geo.chirotope_text(chi)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_geo_disk_graph(args) -> int:
    edges = geo.unit_disk_graph(geo.read_points(_read(args.points)), parse_rational(args.radius))
    for i, j in sorted(edges):
        print(i, j)
    return 0


def cmd_geo_rotate(args) -> int:
    a, b = _rationals(args.target)
    rot = geo.rational_rotation((a, b), args.w, detail=True)
    x, y = rot.point
    print(f"{format_rational(x)} {format_rational(y)}")
    return 0


def cmd_geo_pack_shift(args) -> int:
    packing = geo.read_packing(_read(args.packing))
    res = geo.pack_shift(packing, parse_rational(args.eps))
    text = geo.write_packing(res.packing)
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    sep = res.separation_after2
    print(f"# separation^2 >= {format_rational(sep) if sep is not None else 'n/a'}; grid {format_rational(res.grid)}")
    return 0


def cmd_geo_inflate(args) -> int:
    vals = _rationals(args.polygon if args.polygon else _read(args.polygon_file))
    poly = geo.ConvexPolygon(tuple(zip(vals[::2], vals[1::2])))
    res = geo.edge_inflate(poly, parse_rational(args.alpha), w=args.w)
    print(" ".join(format_rational(c) for v in res.polygon.vertices for c in v))
    if res.rationalized:
        print("# some edge normals were rationalized")
    return 0


# ---------------------------------------------------------------- parser

def _machine_flags(p):
    p.add_argument("--program", required=True, help="assembly file, or - for stdin")
    p.add_argument("--input", help="input file with header 'n m w'")
    p.add_argument("--reals", help="space separated rational inputs")
    p.add_argument("--words", help="space separated word inputs")
    p.add_argument("--word-size", type=int)
    p.add_argument("--fuel", type=int, default=10**6)
    p.add_argument("--memory", type=int)


def _compile_flags(p, required=True):
    p.add_argument("--program", required=required)
    p.add_argument("--instance", default="", help="space separated instance words")
    p.add_argument("--word-size", type=int, required=required)
    p.add_argument("--steps", type=int, required=required)
    p.add_argument("--memory", type=int)
    p.add_argument("--collapse-frames", action="store_true")


def _lab_flags(p):
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out")
    p.add_argument("--timing", action="store_true", help="record wall_ms (breaks byte-identical output)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="realram", description=__doc__.splitlines()[0])
    top = ap.add_subparsers(dest="group", required=True)

    ram = top.add_parser("ram").add_subparsers(dest="cmd", required=True)
    for name, fn in (("run", cmd_ram_run), ("trace", cmd_ram_trace), ("bit", cmd_ram_bit)):
        p = ram.add_parser(name)
        _machine_flags(p)
        if name == "bit":
            p.add_argument("--wmax", type=int, default=64)
        p.set_defaults(fn=fn)

    etr = top.add_parser("etr").add_subparsers(dest="cmd", required=True)
    p = etr.add_parser("compile")
    _compile_flags(p)
    p.add_argument("--reals", help="real certificate")
    p.add_argument("--words", help="word certificate")
    p.add_argument("--check-witness", action="store_true")
    p.add_argument("--formula-out")
    p.add_argument("--witness-out")
    p.set_defaults(fn=cmd_etr_compile)
    p = etr.add_parser("check-witness")
    p.add_argument("--formula", required=True)
    p.add_argument("--witness", required=True)
    p.set_defaults(fn=cmd_etr_check_witness)
    for name, fn in (("export-smt", cmd_etr_export_smt), ("stats", cmd_etr_stats)):
        p = etr.add_parser(name)
        _compile_flags(p, required=False)
        p.add_argument("--formula", help="formula text file instead of compiling")
        p.add_argument("--out")
        p.set_defaults(fn=fn)

    lab = top.add_parser("lab").add_subparsers(dest="cmd", required=True)
    p = lab.add_parser("hitting-cubes")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--degree", type=int, default=1)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--polys", type=int, default=100)
    p.add_argument("--poly", help="count one polynomial instead of random ones")
    _lab_flags(p)
    p.set_defaults(fn=cmd_lab_hitting)
    p = lab.add_parser("sign-flip")
    p.add_argument("--p", required=True)
    p.add_argument("--q", default="1")
    p.add_argument("--g", required=True)
    p.add_argument("--delta", required=True)
    p.add_argument("--w", type=int, required=True)
    p.add_argument("--trials", type=int, default=10**4)
    _lab_flags(p)
    p.set_defaults(fn=cmd_lab_sign_flip)
    p = lab.add_parser("smoothed-bit")
    p.add_argument("--verifier", choices=("order-type", "program"), default="order-type")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--points", help="base point file (default: collinear points)")
    p.add_argument("--program")
    p.add_argument("--g", help="base input for --verifier program")
    p.add_argument("--word-size", type=int, default=8)
    p.add_argument("--fuel", type=int, default=10**5)
    p.add_argument("--profile-d", type=int, default=1)
    p.add_argument("--profile-degree", type=int, default=1)
    p.add_argument("--profile-count", type=int, default=1)
    p.add_argument("--delta", required=True)
    p.add_argument("--wmax", type=int, default=64)
    p.add_argument("--trials", type=int, default=200)
    _lab_flags(p)
    p.set_defaults(fn=cmd_lab_smoothed)
    p = lab.add_parser("bounds")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--degree", type=int, required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--count", type=int, default=1, help="polynomial count C(n)")
    p.add_argument("--delta")
    p.add_argument("--w", type=int)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_lab_bounds)

    g = top.add_parser("geo").add_subparsers(dest="cmd", required=True)
    p = g.add_parser("order-type")
    p.add_argument("--points", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_geo_order_type)
    p = g.add_parser("disk-graph")
    p.add_argument("--points", required=True)
    p.add_argument("--radius", required=True)
    p.set_defaults(fn=cmd_geo_disk_graph)
    p = g.add_parser("rotate")
    p.add_argument("--target", required=True, help="'a b'")
    p.add_argument("--w", type=int, required=True)
    p.set_defaults(fn=cmd_geo_rotate)
    p = g.add_parser("pack-shift")
    p.add_argument("--packing", required=True)
    p.add_argument("--eps", required=True)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_geo_pack_shift)
    p = g.add_parser("inflate")
    p.add_argument("--polygon", help="'x1 y1 x2 y2 ...' counterclockwise")
    p.add_argument("--polygon-file")
    p.add_argument("--alpha", required=True)
    p.add_argument("--w", type=int, default=32)
    p.set_defaults(fn=cmd_geo_inflate)
    return ap


DOMAIN_ERRORS = (MachineError, ParseError, ValueError, ArithmeticError, DomainError, OSError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.group == "lab" and args.cmd == "smoothed-bit" and args.verifier == "program" and not (args.program and args.g):
        parser.error("--verifier program needs --program and --g")
    if args.group == "geo" and args.cmd == "inflate" and not (args.polygon or args.polygon_file):
        parser.error("inflate needs --polygon or --polygon-file")
    try:
        return args.fn(args)
    except DOMAIN_ERRORS as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
