import itertools
import json
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from realram.lab import (
    DegenerateDelta,
    DimensionTooLarge,
    OrderTypeVerifier,
    ProgramVerifier,
    ZeroPolynomial,
    ORDER_TYPE_PROFILE,
    collinear_base,
    count_intersected_cubes,
    expected_bit_bound,
    hitting_bound,
    hitting_cubes_experiment,
    intermediate_bound,
    random_poly,
    recursion_bound,
    sign_flip_bound,
    sign_flip_probability,
    smoothed_bit_experiment,
    tight_univariate,
    wilson_interval,
)
from realram.geometry import order_type
from realram.machine import parse_program
from realram.poly import MultiPoly, parse_poly

F = Fraction


@pytest.mark.parametrize("d,delta,k,want", [(1, 3, 8, 18), (2, 2, 6, 648), (1, 1, 4, 6)])
def test_hitting_bound_examples(d, delta, k, want):
    assert hitting_bound(d, delta, k) == want


def test_recursion_example():
    assert recursion_bound(2, 2, 6) == 72


def test_k_precondition():
    with pytest.raises(ValueError):
        hitting_bound(1, 3, 7)


@pytest.mark.parametrize("d", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("delta", [1, 2, 3, 5])
def test_recursion_below_closed_forms(d, delta):
    for k in range(2 * delta + 2, 2 * delta + 30):
        r = recursion_bound(d, delta, k)
        assert r <= intermediate_bound(d, delta, k) <= hitting_bound(d, delta, k)


def test_sign_flip_and_expected_bounds():
    assert sign_flip_bound(1, 1, 10, F(1, 2)) == F(48, 1024)
    assert expected_bit_bound(1, 1, 1, 1) == 6
    assert expected_bit_bound(6, 2, 4, F(1, 4)) == 30
    with pytest.raises(ValueError):
        expected_bit_bound(1, 1, 1, 0)


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 50), st.integers(1, 64))
def test_expected_bit_bound_monotone(d, delta, c, den):
    dlt = F(1, den)
    b = expected_bit_bound(d, delta, c, dlt)
    assert b <= expected_bit_bound(d + 1, delta, c, dlt)
    assert b <= expected_bit_bound(d, delta + 1, c, dlt)
    assert b <= expected_bit_bound(d, delta, c + 1, dlt)
    assert b <= expected_bit_bound(d, delta, c, dlt / 2)


def test_wilson_contains_estimate():
    lo, hi = wilson_interval(10, 1000)
    assert lo < 0.01 < hi
    assert wilson_interval(0, 100)[0] == 0.0


@pytest.mark.parametrize(
    "text,k,want",
    [("(2*x1-1)*(2*x1-3)", 4, 2), ("2*x1 - 2*x2 - 1", 2, 3)],
)
def test_cube_examples(text, k, want):
    if text.startswith("("):
        p = parse_poly("4*x1^2 - 8*x1 + 3")
    else:
        p = parse_poly(text)
    assert count_intersected_cubes(p, k).count == want


def test_sphere_against_corner_oracle():
    p = parse_poly("x1^2 + x2^2 + x3^2 - 4")
    k = 6
    want = 0
    for z in itertools.product(range(k), repeat=3):
        near = sum(c * c for c in z)
        far = sum((c + 1) ** 2 for c in z)
        want += near <= 4 <= far
    assert count_intersected_cubes(p, k).count == want == 10


def test_cube_errors():
    with pytest.raises(ZeroPolynomial):
        count_intersected_cubes(MultiPoly(2, {}), 4)
    with pytest.raises(DimensionTooLarge):
        count_intersected_cubes(MultiPoly.constant(4, 1), 4)


@pytest.mark.parametrize("delta", [1, 2, 3, 4])
def test_tightness_in_one_dimension(delta):
    k = 2 * delta + 2
    assert count_intersected_cubes(tight_univariate(delta), k).count == delta


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 2), st.integers(1, 3))
def test_random_polys_within_bound(seed, d, delta):
    k = 2 * delta + 2
    p = random_poly(random.Random(seed), d, delta)
    assert count_intersected_cubes(p, k).count <= hitting_bound(d, delta, k)


def test_exact_flag_one_dimensional():
    assert count_intersected_cubes(parse_poly("x1 - 1/2"), 4).exact


def test_hitting_experiment_deterministic():
    a = hitting_cubes_experiment(2, 2, 6, 5, seed=3, timing=False).to_json(timing=False)
    b = hitting_cubes_experiment(2, 2, 6, 5, seed=3, timing=False).to_json(timing=False)
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert a["wall_ms"] is None and a["pass"]


def test_sign_flip_far_from_variety_is_zero():
    p, q = parse_poly("x1 - 1/2"), MultiPoly.constant(1, 1)
    rep = sign_flip_probability(p, q, [0], F(1, 4), 10, 2000, seed=1, timing=False)
    assert rep.estimate == 0


def test_sign_flip_scaling_invariant():
    p, q = parse_poly("x1 - 1/2"), MultiPoly.constant(1, 1)
    a = sign_flip_probability(p, q, [F(1, 2)], F(1, 2), 6, 3000, seed=5, timing=False)
    b = sign_flip_probability(p * 7, q * 3, [F(1, 2)], F(1, 2), 6, 3000, seed=5, timing=False)
    assert a.details["flips"] == b.details["flips"]


def test_sign_flip_rejects_zero_q():
    with pytest.raises(ZeroPolynomial):
        sign_flip_probability(parse_poly("x1"), MultiPoly(1, {}), [0], F(1, 2), 4, 10, seed=0)


def test_smoothed_small_n_within_bound():
    v = OrderTypeVerifier(3)
    dlt = F(1, 4)
    rep = smoothed_bit_experiment(v, collinear_base(3, dlt), dlt, 40, 200, seed=2, timing=False)
    assert rep.estimate <= 6 and rep.passed


def test_smoothed_zero_delta_refused():
    with pytest.raises(DegenerateDelta):
        smoothed_bit_experiment(OrderTypeVerifier(3), [F(0)] * 6, 0, 10, 1, seed=0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 2**20), min_size=8, max_size=8), st.integers(1, 24))
def test_order_type_fast_path_matches_generic(ints, wmax):
    pt = [F(x, 2**20) for x in ints]
    v = OrderTypeVerifier(4)
    assert v.bit_complexity(pt, wmax) == v._bit_complexity_generic(pt, wmax)


def test_program_verifier_on_line_test(fixture_text):
    v = ProgramVerifier(parse_program(fixture_text("line_test.rram")), ORDER_TYPE_PROFILE, n=3)
    assert v.bit_complexity([F(1, 5), F(4, 5)], 10) <= 3


def test_collinear_base_is_collinear():
    pts = collinear_base(5, F(1, 8))
    pairs = list(zip(pts[0::2], pts[1::2]))
    assert set(order_type(pairs).values()) == {0}
