import shutil
import subprocess
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from realram.etr.compiler import gadget_powers_of_two
from realram.etr.formula import (
    FALSE,
    ONE,
    ZERO,
    EtrFormula,
    UnboundVariable,
    add,
    and_,
    const,
    eq,
    evaluate,
    export_smtlib,
    formula_stats,
    implies,
    ite,
    le,
    lt,
    mul,
    not_,
    or_,
    parse_smtlib,
    parse_text,
    read_witness,
    rename,
    to_text,
    var,
    write_witness,
)

F = Fraction
x, y = var("x"), var("y")


def test_evaluate_simple():
    f = EtrFormula.close(and_(eq(mul(x, x), add(y, ONE)), lt(ZERO, x)))
    assert evaluate(f, {("x",): F(2), ("y",): F(3)})
    assert not evaluate(f, {("x",): F(-2), ("y",): F(3)})


def test_unbound_variable():
    f = EtrFormula.close(eq(x, y))
    with pytest.raises(UnboundVariable):
        evaluate(f, {("x",): F(1)})


def test_stats_of_false():
    assert formula_stats(EtrFormula.close(FALSE)) == {"variables": 0, "nodes": 3, "depth": 2}


def test_powers_of_two_gadget():
    g = gadget_powers_of_two(3)
    f = EtrFormula.close(g)
    assert len(f.variables) == 4
    assert evaluate(f, {("pow2", b): F(2**b) for b in range(4)})
    assert not evaluate(f, {("pow2", b): F(3**b) for b in range(4)})
    assert len(g) - 1 == 4
    assert len(gadget_powers_of_two(1)) - 1 == 2


@given(st.integers(0, 300))
def test_const_denotes_integer(n):
    assert evaluate(eq(const(n), const(n)), {})
    assert not evaluate(eq(const(n), const(n + 1)), {})


def test_derived_connectives():
    env = {("x",): F(0)}
    t, f = eq(x, ZERO), eq(x, ONE)
    assert evaluate(implies(f, f), env) and evaluate(implies(f, t), env) and not evaluate(implies(t, f), env)
    assert evaluate(ite(t, t, f), env) and not evaluate(ite(f, t, f), env)
    assert evaluate(or_(f, t), env) and evaluate(not_(f), env) and evaluate(le(x, ZERO), env)


def _sample():
    return EtrFormula.close(and_(eq(mul(x, x), add(ONE, ONE)), lt(ZERO, x), not_(eq(y, x))))


def test_text_roundtrip():
    f = rename(_sample())
    assert parse_text(to_text(f)) == f


def test_smtlib_roundtrip():
    f = rename(_sample())
    assert parse_smtlib(export_smtlib(f)) == f


def test_witness_io():
    env = {("x",): F(3, 2), ("y",): F(-1)}
    assert read_witness(write_witness(env)) == env


@pytest.mark.skipif(shutil.which("z3") is None, reason="z3 not installed")
def test_z3_accepts_export(tmp_path):
    p = tmp_path / "f.smt2"
    p.write_text(export_smtlib(_sample()))
    out = subprocess.run(["z3", str(p)], capture_output=True, text=True).stdout
    assert out.strip() == "sat"
