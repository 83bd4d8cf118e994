import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from realram.geometry import (
    ConvexPolygon,
    DegenerateTarget,
    GeometryError,
    InvalidInputPacking,
    NonConvexInput,
    OverlappingPieces,
    Packing,
    Piece,
    cardinal_order,
    check_order_on_line,
    choose_anchor,
    edge_inflate,
    order_type,
    pack_shift,
    quantile,
    random_packing,
    rational_rotation,
    read_packing,
    unit_disk_graph,
    write_packing,
)

F = Fraction


def square(x0=0, y0=0, s=1):
    return ConvexPolygon(((x0, y0), (x0 + s, y0), (x0 + s, y0 + s), (x0, y0 + s)))


def test_order_type_examples():
    assert order_type([(0, 0), (1, 0), (0, 1)]) == {(0, 1, 2): 1}
    assert order_type([(0, 0), (0, 1), (1, 0)]) == {(0, 1, 2): -1}
    assert order_type([(0, 0), (1, 1), (2, 2)]) == {(0, 1, 2): 0}
    with pytest.raises(GeometryError):
        order_type([(0, 0), (1, 1)])


pts = st.lists(
    st.tuples(st.fractions(0, 1, max_denominator=16), st.fractions(0, 1, max_denominator=16)),
    min_size=3,
    max_size=6,
)


@given(pts, st.randoms())
def test_order_type_relabeling(points, rnd):
    perm = list(range(len(points)))
    rnd.shuffle(perm)
    chi = order_type(points)
    moved = order_type([points[p] for p in perm])
    for (i, j, k), s in moved.items():
        a, b, c = perm[i], perm[j], perm[k]
        # parity of the sort permutation gives the sign change
        trip = [a, b, c]
        inv = sum(trip[x] > trip[y] for x in range(3) for y in range(x + 1, 3))
        assert s == chi[tuple(sorted(trip))] * (-1) ** inv


def test_disk_graph_touching_counts():
    assert unit_disk_graph([(0, 0), (2, 0)], 1) == {(0, 1)}
    assert unit_disk_graph([(0, 0), (F(201, 100), 0)], 1) == set()
    with pytest.raises(GeometryError):
        unit_disk_graph([(0, 0)], 0)


def test_rotation_worked_example():
    rot = rational_rotation((F(7071, 10000), F(7071, 10000)), 4, detail=True)
    assert rot.point == (F(119, 169), F(120, 169))
    assert rot.anchor == (1, 0) and rot.rounded == (F(11, 16), F(3, 4))


def test_rotation_axis_targets_fixed():
    assert rational_rotation((1, 0), 8) == (1, 0)
    assert rational_rotation((0, -1), 8) == (0, -1)


def test_rotation_degenerate():
    with pytest.raises(DegenerateTarget):
        rational_rotation((0, 0), 4)
    with pytest.raises(DegenerateTarget):
        rational_rotation((3, 0), 4)


def test_quantile_and_anchor():
    assert quantile(F(1), F(0)) == "right"
    assert choose_anchor(F(1), F(0)) == (-1, 0)
    assert quantile(F(1), F(1)) is None
    assert choose_anchor(F(-1), F(-1)) == (-1, 0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 2 * math.pi, allow_nan=False), st.sampled_from([4, 8, 16, 32]))
def test_rotation_properties(theta, w):
    target = (F(math.cos(theta)), F(math.sin(theta)))
    x, y = rational_rotation(target, w)
    assert x * x + y * y == 1
    assert math.hypot(float(x - target[0]), float(y - target[1])) <= 2.0 ** (1 - w)
    bits = max(c.numerator.bit_length() + c.denominator.bit_length() for c in (x, y))
    assert bits <= 6 * w + 16


def test_polygon_must_be_convex_ccw():
    with pytest.raises(NonConvexInput):
        ConvexPolygon(((0, 0), (0, 1), (1, 0)))


def _pinwheel():
    # three slanted pieces whose x-extents pairwise overlap
    a = ConvexPolygon(((0, 0), (2, 1), (2, 2), (0, 1)))
    b = ConvexPolygon(((F(5, 2), 0), (4, 0), (4, 3), (F(5, 2), 3)))
    c = ConvexPolygon(((0, F(5, 2)), (2, F(5, 2)), (2, 4), (0, 4)))
    return [a, b, c]


def test_cardinal_order_consistent_on_lines():
    polys = _pinwheel()
    order = cardinal_order(polys)
    for k in range(41):
        c = F(k, 10)
        assert check_order_on_line(order, polys, c, 0)
        assert check_order_on_line(order, polys, c, 1)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 9))
def test_cardinal_order_random(seed, n):
    rng = random.Random(seed)
    polys = random_packing(rng, n).placed()
    order = cardinal_order(polys)
    for _ in range(10):
        c = F(rng.randint(0, 64), 64)
        assert check_order_on_line(order, polys, c, 0) and check_order_on_line(order, polys, c, 1)


def test_overlap_rejected():
    with pytest.raises(OverlappingPieces):
        cardinal_order([square(), square(F(1, 2))])
    with pytest.raises(InvalidInputPacking):
        pack_shift(Packing(0, (Piece(square()), Piece(square(), (F(1, 2), 0)))), F(1, 2))


def test_pack_shift_single_square():
    res = pack_shift(Packing(0, (Piece(square()),)), F(3, 10))
    assert res.packing.pieces[0].translation == (F(1, 10), F(1, 10))
    assert res.packing.width == F(13, 10)


def test_pack_shift_touching_squares():
    half = square(s=F(1, 2))
    pk = Packing(0, (Piece(half), Piece(half, (F(1, 2), 0))))
    res = pack_shift(pk, F(1, 2))
    assert res.separation_before2 == res.separation_after2 == F(1, 64)
    assert not res.packing.violations()


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 12), st.integers(1, 5))
def test_pack_shift_random(seed, n, e):
    eps = F(1, 2**e)
    res = pack_shift(random_packing(random.Random(seed), n), eps)
    assert len(res.packing.pieces) == n and not res.packing.violations()
    if n > 1:
        assert res.separation_after2 >= (eps / (2 * (n + 2))) ** 2


def test_packing_file_roundtrip():
    pk = random_packing(random.Random(3), 5, F(1, 8))
    assert read_packing(write_packing(pk)) == pk


def test_inflate_square():
    inf = edge_inflate(square(), F(1, 10))
    assert inf.polygon.bbox() == (F(-1, 10), F(-1, 10), F(11, 10), F(11, 10))
    assert not inf.rationalized


def test_inflate_against_halfplane_oracle():
    tri = ConvexPolygon(((0, 0), (4, 0), (0, 3)))
    alpha = F(1, 2)
    inf = edge_inflate(tri, alpha)
    assert not inf.rationalized
    rng = random.Random(0)
    for _ in range(300):
        p = (F(rng.randint(-40, 80), 10), F(rng.randint(-40, 80), 10))
        want = all(
            u[0] * p[0] + u[1] * p[1] <= max(u[0] * x + u[1] * y for x, y in tri.vertices) + alpha
            for u in inf.normals
        )
        assert inf.polygon.contains(p) == want


def test_inflate_monotone_and_rationalized():
    poly = ConvexPolygon(((0, 0), (1, 0), (F(1, 3), 1)))
    small, big = edge_inflate(poly, F(1, 20)), edge_inflate(poly, F(1, 5))
    assert small.rationalized
    assert all(small.polygon.contains(v) for v in poly.vertices)
    assert all(big.polygon.contains(v) for v in small.polygon.vertices)
    assert edge_inflate(poly, 0).polygon == poly
