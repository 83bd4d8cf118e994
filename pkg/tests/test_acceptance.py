"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""
import json
import math
import random
import time
from fractions import Fraction

import pytest
import sympy

from realram.etr.compiler import CompileBudget, roundtrip
from realram.exact import bit_length_rational, derive_rng
from realram.geometry import pack_shift, random_packing, rational_rotation
from realram.lab import (
    OrderTypeVerifier,
    collinear_base,
    count_intersected_cubes,
    expected_bit_bound,
    hitting_bound,
    random_poly,
    sign_flip_probability,
    smoothed_bit_experiment,
    tight_univariate,
)
from realram.machine import DivisionByZero, Outcome, parse_program, word_binop
from realram.poly import MultiPoly, parse_poly
from realram.randprog import ProgramShape, random_program, random_rational, random_words
from realram.shadow import check_monitor, fit_kappa1, monitor_cases

from conftest import ROOT

F = Fraction
pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")
        assert ok, detail

    return emit


def test_1_compile_roundtrip(report):
    rng = random.Random(2024)
    start = time.perf_counter()
    outcomes, bad, done = {}, 0, 0
    while done < 200:
        w = rng.randint(1, 4)
        L = rng.randint(2, 20)
        T = rng.randint(max(1, L // 2), 32)
        n, m = rng.randint(0, 3), rng.randint(0, 3)
        if n + m > 2**w:
            continue
        prog = random_program(rng, ProgramShape(length=L, memory=2**w, w=w))
        words = random_words(rng, m, w)
        k = rng.randint(0, m)
        reals = [random_rational(rng) for _ in range(n)]
        rt = roundtrip(prog, words[:k], (reals, words[k:]), CompileBudget(w=w, T=T, n_real=n, n_word=m))
        outcomes[rt.outcome.value] = outcomes.get(rt.outcome.value, 0) + 1
        bad += not rt.consistent
        done += 1
    secs = time.perf_counter() - start
    ok = bad == 0 and secs < 60 and outcomes.get("ACCEPT", 0) > 0
    report(1, ok, f"200 programs, {bad} inconsistent, outcomes {dict(sorted(outcomes.items()))}, {secs:.1f}s")


def test_2_formula_size_law(report):
    import importlib.util

    spec = importlib.util.spec_from_file_location("freeze_golden", ROOT / "scripts" / "freeze_golden.py")
    mod = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(mod)
    gold = json.loads((ROOT / "tests" / "golden" / "formula_sizes.json").read_text())
    now = mod.measure()
    same = now == gold
    kappa = max(F(r["variables"], r["law"]) for r in now)
    truthful = all(r["value"] == (r["outcome"] == "ACCEPT") for r in now)
    report(2, same and kappa <= 4 and truthful,
           f"{len(now)} fixture runs, fitted kappa = {float(kappa):.3f}, golden counts {'unchanged' if same else 'CHANGED'}")


def _sympy_unit_hits(p: MultiPoly, k: int) -> int:
    x = sympy.Symbol("x")
    expr = sum(sympy.Rational(c.numerator, c.denominator) * x ** e[0] for e, c in p.terms.items())
    roots = set(sympy.Poly(expr, x).real_roots())
    return sum(any(j <= r <= j + 1 for r in roots) for j in range(k))


def test_3_hitting_cubes(report):
    rng = random.Random(3)
    start = time.perf_counter()
    worst, mismatches, over = 0.0, 0, 0
    for _ in range(500):
        d = rng.randint(1, 3)
        delta = rng.randint(1, 4)
        k = rng.randint(2 * delta + 2, 16)
        p = random_poly(rng, d, delta)
        c = count_intersected_cubes(p, k)
        bound = hitting_bound(d, delta, k)
        over += c.count > bound
        worst = max(worst, c.count / bound)
        if d == 1:
            mismatches += not c.exact or c.count != _sympy_unit_hits(p, k)
    tight = all(count_intersected_cubes(tight_univariate(dl), 2 * dl + 2).count == dl for dl in range(1, 5))
    secs = time.perf_counter() - start
    ok = over == 0 and mismatches == 0 and tight and secs < 300
    report(3, ok, f"500 polynomials, {over} over bound, worst count/bound {worst:.3f}, "
                  f"d=1 oracle mismatches {mismatches}, tightness {'ok' if tight else 'FAILED'}, {secs:.1f}s")


SIGN_FLIP_EXTRA = [
    ("x1^2 - 1/4", "1", ["1/2"], 8),
    ("2*x1 - 1", "x1 + 1", ["1/2"], 8),
    ("x1 - x2", "1", ["1/2", "1/2"], 8),
    ("x1^2 + x2^2 - 1/4", "1", ["1/2", "0"], 8),
    ("x1 + x2 + x3 - 3/2", "1", ["1/2", "1/2", "1/2"], 6),
]


def test_4_sign_flip(report):
    p, q = parse_poly("2*x1 - 1"), MultiPoly.constant(1, 1)
    rep = sign_flip_probability(p, q, [F(1, 2)], F(1, 2), 10, 10**5, seed=41, timing=False)
    analytic = 2**-10 / 0.5
    sigma = math.sqrt(analytic * (1 - analytic) / rep.trials)
    main_ok = rep.ci_high <= 0.0469 and abs(rep.estimate - analytic) <= 4 * sigma
    extra = []
    for i, (pt, qt, g, w) in enumerate(SIGN_FLIP_EXTRA):
        pp = parse_poly(pt)
        r = sign_flip_probability(pp, parse_poly(qt, pp.d), [F(x) for x in g], F(1, 2), w, 10**4, seed=100 + i, timing=False)
        extra.append(r)
    ok = main_ok and all(r.passed for r in extra)
    detail = (f"linear case estimate {rep.estimate:.5f} (analytic {analytic:.5f}, "
              f"{abs(rep.estimate - analytic) / sigma:.2f} sigma), CI high {rep.ci_high:.5f} <= 0.0469; extra cases "
              + ", ".join(f"{r.ci_high:.4f}<={r.bound:.4f}" for r in extra))
    report(4, ok, detail)


def test_5_smoothed_order_type(report):
    cells, bad, jumps = [], 0, []
    for n in (4, 8, 16):
        v = OrderTypeVerifier(n)
        means = []
        for e in range(2, 7):
            dlt = F(1, 2**e)
            rep = smoothed_bit_experiment(v, collinear_base(n, dlt), dlt, 64, 200, seed=5000 + n * 10 + e, timing=False)
            bound = expected_bit_bound(6, 2, math.comb(n, 3), dlt)
            bad += rep.estimate > bound
            means.append(rep.estimate)
            cells.append(f"n={n} d=2^-{e}: {rep.estimate:.2f}<={bound}")
        jumps += [b - a for a, b in zip(means, means[1:])]
    ok = bad == 0 and max(jumps) <= 1.5
    report(5, ok, f"{len(cells)} cells, {bad} over bound, max growth per halving {max(jumps):.2f} bits")


def test_6_rotation(report):
    worked = rational_rotation((F(7071, 10000), F(7071, 10000)), 4) == (F(119, 169), F(120, 169))
    rng = random.Random(6)
    off_circle = far = wide = 0
    worst = 0.0
    for _ in range(1000):
        theta = rng.uniform(0, 2 * math.pi)
        target = (F(math.cos(theta)), F(math.sin(theta)))
        for w in (4, 8, 16, 32):
            x, y = rational_rotation(target, w)
            off_circle += x * x + y * y != 1
            dist = math.hypot(float(x - target[0]), float(y - target[1]))
            far += dist > 2.0 ** (1 - w)
            worst = max(worst, dist / 2.0 ** (1 - w))
            wide += max(bit_length_rational(x), bit_length_rational(y)) > 6 * w + 16
    ok = worked and off_circle == far == wide == 0
    report(6, ok, f"4000 rotations: {off_circle} off circle, {far} too far (worst {worst:.3f} of bound), "
                  f"{wide} too wide; worked example {'exact' if worked else 'WRONG'}")


def test_7_packing(report):
    bad = []
    worst_bits = 0.0
    for i in range(100):
        rng = derive_rng(7, "packing", i)
        n = rng.randint(1, 32)
        eps = F(1, 2 ** rng.randint(1, 6))
        pk = random_packing(rng, n, F(rng.randint(0, 4), 8))
        res = pack_shift(pk, eps)
        out = res.packing
        problems = []
        if len(out.pieces) != n:
            problems.append("lost pieces")
        if out.width != pk.width + eps or out.violations():
            problems.append("container or overlap")
        if n > 1 and res.separation_after2 < (eps / (2 * (n + 2))) ** 2:
            problems.append("separation")
        limit = 8 * math.log2(8 * (n + 2) / eps) + bit_length_rational(out.width)
        worst_bits = max(worst_bits, res.max_translation_bits / limit)
        if res.max_translation_bits > limit:
            problems.append("bits")
        if problems:
            bad.append((i, problems))
    report(7, not bad, f"100 packings, {len(bad)} failing {bad[:3]}, worst bits/limit {worst_bits:.3f}")


def _word_reference(op, y, z, w):
    m = 2**w
    if op in ("WDIV", "WMOD") and z == 0:
        return None
    return {
        "WADD": (y + z) % m,
        "WSUB": (y - z) % m,
        "WMULLO": (y * z) % m,
        "WMULHI": (y * z) // m,
        "WDIV": y // z if z else None,
        "WMOD": y % z if z else None,
        "WNAND": (m - 1) - (y & z),
    }[op]


def test_8_word_ops(report):
    ops = ("WADD", "WSUB", "WMULLO", "WMULHI", "WDIV", "WMOD", "WNAND")
    mismatches = 0
    for op in ops:
        for w in (1, 4, 8, 16):
            rng = random.Random(f"{op}/{w}")
            m = 2**w
            for _ in range(10**5):
                y, z = rng.randrange(m), rng.randrange(m)
                want = _word_reference(op, y, z, w)
                try:
                    got = word_binop(op, y, z, w)
                except DivisionByZero:
                    got = None
                mismatches += got != want
    report(8, mismatches == 0, f"{len(ops)} opcodes x 4 word sizes x 10^5 triples, {mismatches} mismatches")


def test_9_lemma_monitor(report):
    kappa1 = fit_kappa1(monitor_cases(seed=1, count=1000))
    fit = check_monitor(monitor_cases(seed=2, count=100), kappa1)
    report(9, fit.violations == 0,
           f"kappa0 = {fit.kappa0}, kappa1 = {fit.kappa1} (fitted on 1000 calibration programs), "
           f"{fit.violations} violations on {fit.cases} fresh programs, worst observed/bound {float(fit.worst_ratio):.2f}")
