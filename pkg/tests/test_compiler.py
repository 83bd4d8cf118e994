import itertools
import json
import random
import shutil
import subprocess
from fractions import Fraction

import pytest

from realram.etr.compiler import (
    BudgetExceeded,
    CompileBudget,
    TraceMismatch,
    active_guards,
    compile_program,
    gadget_equals,
    gadget_is_word,
    gadget_powers_of_two,
    roundtrip,
    witness_from_trace,
)
from realram.etr.formula import EtrFormula, and_, evaluate, export_smtlib, rename, var
from realram.machine import Outcome, execute, parse_program
from realram.randprog import ProgramShape, random_program, random_rational, random_words

from conftest import ROOT

F = Fraction


def _pow_env(w):
    return {("pow2", b): F(2**b) for b in range(w + 1)}


@pytest.mark.parametrize("w", [1, 2, 3, 4])
def test_is_word_exhaustive(w):
    x = var("x")
    f = EtrFormula.close(and_(gadget_powers_of_two(w), gadget_is_word(x, ("x",), w)))
    candidates = [F(k, 2) for k in range(-4, 2 ** (w + 1) + 4)]
    for value in candidates:
        sat = False
        for bits in itertools.product((0, 1), repeat=w):
            env = _pow_env(w) | {("x",): value} | {("bit", ("x",), b): F(bits[b]) for b in range(w)}
            sat |= evaluate(f, env)
        assert sat == (value.denominator == 1 and 0 <= value < 2**w)
    env = _pow_env(w) | {("x",): F(1)} | {("bit", ("x",), b): F(0) for b in range(w)}
    env[("bit", ("x",), 0)] = F(1, 2)
    assert not evaluate(f, env)


@pytest.mark.parametrize("w,j", [(3, 0), (3, 5), (4, 15), (1, 1)])
def test_gadget_equals(w, j):
    x = var("x")
    g = and_(gadget_powers_of_two(w), gadget_equals(x, j, w))
    for v in range(2**w):
        assert evaluate(g, _pow_env(w) | {("x",): F(v)}) == (v == j)
    with pytest.raises(ValueError):
        gadget_equals(x, 2**w, w)


@pytest.fixture
def eq_program(fixture_text):
    return parse_program(fixture_text("eq.rram"))


def test_eq_fixture_golden(eq_program):
    gold = json.loads((ROOT / "tests" / "golden" / "eq_w3_T4.json").read_text())
    budget = CompileBudget(w=gold["w"], T=gold["T"], n_word=2)
    for case in gold["cases"]:
        rt = roundtrip(eq_program, case["instance"], ([], []), budget)
        assert rt.consistent
        assert (rt.value, rt.variables, rt.nodes) == (case["value"], case["variables"], case["nodes"])


def test_eq_variable_count_by_hand():
    # pow2: w+1, W/R: 2*M*(T+1), input bits: M*w, pc: T+1
    w, T = 3, 4
    M = 2**w
    assert (w + 1) + 2 * M * (T + 1) + M * w + (T + 1) == 113


def test_accept_pads_program_counter(eq_program):
    budget = CompileBudget(w=3, T=4, n_word=2)
    outcome, tr = execute(eq_program, [], [3, 3], budget.machine_config)
    env = witness_from_trace(eq_program, [3, 3], ([], []), tr, budget)
    assert outcome is Outcome.ACCEPT
    assert [env[("pc", t)] for t in range(5)] == [1, 3, 0, 0, 0]
    f = compile_program(eq_program, [3, 3], budget)
    assert evaluate(f, env)
    bad = dict(env)
    bad[("pc", 4)] = F(3)
    assert not evaluate(f, bad)


def test_mul_lo_hi_temporaries():
    prog = parse_program("WMULLO 2 0 1\nACCEPT")
    budget = CompileBudget(w=3, T=3, n_word=2)
    _, tr = execute(prog, [], [5, 6], budget.machine_config)
    env = witness_from_trace(prog, [5, 6], ([], []), tr, budget)
    assert env[("u", 1, 1)] == 3 and env[("l", 1, 1)] == 6
    assert env[("W", 2, 1)] == 6
    assert evaluate(compile_program(prog, [5, 6], budget), env)


def test_frame_violation_detected(eq_program):
    budget = CompileBudget(w=3, T=4, n_word=2)
    _, tr = execute(eq_program, [], [3, 3], budget.machine_config)
    env = witness_from_trace(eq_program, [3, 3], ([], []), tr, budget)
    f = compile_program(eq_program, [3, 3], budget)
    env[("W", 5, 1)] = F(1)
    assert not evaluate(f, env)


def test_real_step_witness():
    prog = parse_program("RDIV 2 0 1\nRSQRT 3 2\nRJPOS 3 5\nREJECT\nACCEPT")
    budget = CompileBudget(w=3, T=6, n_real=2)
    rt = roundtrip(prog, [], ([F(9), F(4)], []), budget)
    assert rt.outcome is Outcome.ACCEPT and rt.value
    rt = roundtrip(prog, [], ([F(0), F(4)], []), budget)
    assert rt.outcome is Outcome.REJECT and not rt.value


def test_trace_mismatch(eq_program):
    budget = CompileBudget(w=3, T=4, n_word=2)
    _, tr = execute(eq_program, [], [3, 4], budget.machine_config)
    with pytest.raises(TraceMismatch):
        witness_from_trace(eq_program, [3, 3], ([], []), tr, budget)


def test_budget_exceeded(eq_program):
    with pytest.raises(BudgetExceeded):
        compile_program(eq_program, [3, 3], CompileBudget(w=3, T=4, node_cap=100))


def test_guards_mutually_exclusive():
    rng = random.Random(7)
    shape = ProgramShape(length=8, memory=4, w=2)
    for _ in range(20):
        prog = random_program(rng, shape)
        budget = CompileBudget(w=2, T=10, n_real=1, n_word=1, memory=4)
        reals = [random_rational(rng)]
        words = random_words(rng, 1, 2)
        _, tr = execute(prog, reals, words, budget.machine_config, raise_errors=False)
        env = witness_from_trace(prog, words, (reals, []), tr, budget)
        assert all(len(g) <= 1 for g in active_guards(prog, env, budget.T))


def test_random_roundtrips_small():
    rng = random.Random(11)
    done = 0
    while done < 25:
        w = rng.randint(2, 3)
        shape = ProgramShape(length=rng.randint(3, 10), memory=4, w=w)
        prog = random_program(rng, shape)
        n, m = rng.randint(0, 2), rng.randint(0, 2)
        if (n + m - 1).bit_length() > w:
            continue
        budget = CompileBudget(w=w, T=12, n_real=n, n_word=m, memory=4)
        reals = [random_rational(rng) for _ in range(n)]
        words = random_words(rng, m, w)
        assert roundtrip(prog, words, (reals, []), budget).consistent
        done += 1


@pytest.mark.skipif(shutil.which("z3") is None, reason="z3 not installed")
@pytest.mark.parametrize(
    "name,instance,w,T,want",
    [("eq.rram", [3, 3], 3, 4, "sat"), ("eq.rram", [3, 4], 3, 4, "unsat"), ("line_test.rram", [], 3, 8, "sat")],
)
def test_external_solver_agrees(fixture_text, tmp_path, name, instance, w, T, want):
    prog = parse_program(fixture_text(name))
    f = compile_program(prog, instance, CompileBudget(w=w, T=T))
    path = tmp_path / "f.smt2"
    path.write_text(export_smtlib(rename(f)))
    out = subprocess.run(["z3", "-T:60", str(path)], capture_output=True, text=True).stdout.strip()
    assert out == want
