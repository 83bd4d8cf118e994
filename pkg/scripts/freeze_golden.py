"""Recompute formula sizes for the fixture suite and write tests/golden/formula_sizes.json.

Run only after a verified change to the compiler; the acceptance suite compares
against the frozen file so that size changes never pass silently.
"""
import argparse
import json
from fractions import Fraction
from pathlib import Path

from realram.etr.compiler import CompileBudget, roundtrip
from realram.machine import parse_program

ROOT = Path(__file__).resolve().parents[1]

# (fixture, w, T, instance, real certificate, word certificate)
SUITE = [
    ("eq.rram", 3, 4, [3, 3], [], []),
    ("eq.rram", 3, 4, [3, 4], [], []),
    ("line_test.rram", 3, 8, [], ["1/5", "4/5"], []),
    ("line_test.rram", 3, 8, [], ["1/2", "3/2"], []),
    ("third.rram", 2, 8, [], ["1/3"], []),
    ("even_interval.rram", 3, 32, [4], ["5/2"], []),
    ("even_interval.rram", 3, 32, [4], ["7/2"], []),
    ("sum_loop.rram", 8, 12, [2], ["1/2", "1/3"], []),
]


def law(w: int, T: int, L: int) -> int:
    return 2**w * (T + w) + T * L * w


def measure() -> list[dict]:
    rows = []
    for name, w, T, inst, reals, words in SUITE:
        prog = parse_program((ROOT / "fixtures" / name).read_text())
        cert = ([Fraction(r) for r in reals], words)
        rt = roundtrip(prog, inst, cert, CompileBudget(w=w, T=T, n_real=len(reals), n_word=len(inst) + len(words)))
        rows.append({
            "fixture": name, "w": w, "T": T, "L": len(prog), "instance": inst, "reals": reals, "words": words,
            "outcome": rt.outcome.value, "value": rt.value, "variables": rt.variables, "nodes": rt.nodes,
            "law": law(w, T, len(prog)),
        })
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=str(ROOT / "tests" / "golden" / "formula_sizes.json"))
    ap.add_argument("--dry-run", action="store_true")
    args = ap.parse_args()
    rows = measure()
    for r in rows:
        print(f"{r['fixture']:20} w={r['w']} T={r['T']:2} {r['outcome']:14} vars={r['variables']:6} "
              f"nodes={r['nodes']:8} ratio={r['variables'] / r['law']:.3f}")
    if not args.dry_run:
        Path(args.out).write_text(json.dumps(rows, indent=2) + "\n")


if __name__ == "__main__":
    main()
