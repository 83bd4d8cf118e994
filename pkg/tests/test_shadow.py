from fractions import Fraction

import pytest

from realram.machine import MachineConfig, parse_program
from realram.shadow import RegShadow, SqrtNotSupportedInShadow, lemma_bound, lg, shadow_execute

F = Fraction


def test_product_of_inputs():
    rep = shadow_execute(parse_program("RMUL 2 0 1\nHALT"), [F(2, 3), F(5, 7)], cfg=MachineConfig(w=4))
    s = rep.registers[2]
    assert (s.degree, s.dimension, s.coefficient) == (2, 2, 1)


def test_copy_keeps_shadow():
    rep = shadow_execute(parse_program("RMOV 2 0\nHALT"), [F(2, 3)], cfg=MachineConfig(w=4))
    assert rep.registers[2] == RegShadow.variable(0)


def test_quotient_rule():
    rep = shadow_execute(parse_program("RADD 3 0 1\nRDIV 3 3 2\nHALT"), [F(1), F(2), F(3)], cfg=MachineConfig(w=4))
    s = rep.registers[3]
    assert (s.num_deg, s.den_deg, s.dimension) == (1, 1, 3)


def test_sqrt_refused():
    with pytest.raises(SqrtNotSupportedInShadow):
        shadow_execute(parse_program("RSQRT 1 0\nHALT"), [F(4)])


def test_bound_arithmetic():
    assert lg(1) == 1 and lg(2) == 1 and lg(3) == 2 and lg(8) == 3
    assert lemma_bound(10, 2, 4, 8) == 10 * 4 * 2 * 3


def test_shadow_monotone_under_ops():
    a = RegShadow.variable(0)
    b = RegShadow.variable(1).mul(RegShadow.variable(2))
    for op in (a.add, a.sub, a.mul, a.div):
        out = op(b)
        assert out.degree >= max(a.degree, b.degree)
        assert out.dimension >= max(a.dimension, b.dimension)
        assert out.coefficient >= max(a.coefficient, b.coefficient)
