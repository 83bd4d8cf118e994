"""Geometric verification algorithms and resource-augmentation constructions.

Everything is exact over Fractions.  The packing helpers work with
translation-only placements: a piece is a CCW convex polygon in local
coordinates plus a translation vector.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Optional, Sequence

from .exact import bit_length_rational, format_rational, parse_rational

Point = tuple[Fraction, Fraction]


class GeometryError(ValueError):
    pass


class DegenerateTarget(GeometryError):
    pass


class NonConvexInput(GeometryError):
    pass


class OverlappingPieces(GeometryError):
    pass


class InvalidInputPacking(GeometryError):
    pass


class RotationalPlacementUnsupported(GeometryError):
    pass


def as_point(p) -> Point:
    return (parse_rational(p[0]), parse_rational(p[1]))


def orient(p: Point, q: Point, r: Point) -> Fraction:
    """Twice the signed area of (p, q, r); positive for a left turn."""
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def sign(x) -> int:
    return (x > 0) - (x < 0)


# ---------------------------------------------------------------- verifiers

def order_type(points: Sequence) -> dict[tuple[int, int, int], int]:
    """Orientation sign of every triple i < j < k."""
    pts = [as_point(p) for p in points]
    if len(pts) < 3:
        raise GeometryError("order type needs at least 3 points")
    return {(i, j, k): sign(orient(pts[i], pts[j], pts[k])) for i, j, k in combinations(range(len(pts)), 3)}


def chirotope_text(chi: dict) -> str:
    return "".join(f"{i} {j} {k} {s}\n" for (i, j, k), s in sorted(chi.items()))


def unit_disk_graph(centers: Sequence, r) -> set[tuple[int, int]]:
    """Edges between closed disks of radius r that touch or overlap."""
    r = parse_rational(r)
    if r <= 0:
        raise GeometryError("radius must be positive")
    pts = [as_point(p) for p in centers]
    reach = (2 * r) ** 2
    return {
        (i, j)
        for i, j in combinations(range(len(pts)), 2)
        if (pts[i][0] - pts[j][0]) ** 2 + (pts[i][1] - pts[j][1]) ** 2 <= reach
    }


# ---------------------------------------------------------------- rotation

AXES = {"right": (1, 0), "up": (0, 1), "left": (-1, 0), "down": (0, -1)}
OPPOSITE = {"right": "left", "left": "right", "up": "down", "down": "up"}


def quantile(a: Fraction, b: Fraction) -> Optional[str]:
    """Axis-centred sector strictly containing (a, b), or None on a diagonal."""
    if abs(b) < a:
        return "right"
    if abs(a) < b:
        return "up"
    if abs(b) < -a:
        return "left"
    if abs(a) < -b:
        return "down"
    return None


def choose_anchor(a: Fraction, b: Fraction) -> tuple[int, int]:
    q = quantile(a, b)
    if q is not None:
        return AXES[OPPOSITE[q]]
    # on a diagonal: first adjacent axis in the order right, up, left, down
    for name in ("right", "up", "left", "down"):
        ax, ay = AXES[name]
        if ax * a + ay * b > 0:
            return AXES[name]
    raise DegenerateTarget("zero target")


def second_intersection(anchor: Point, p: Point) -> Point:
    """Other intersection of the line through anchor (on the circle) and p with the unit circle."""
    ax, ay = anchor
    dx, dy = p[0] - ax, p[1] - ay
    dd = dx * dx + dy * dy
    if dd == 0:
        raise DegenerateTarget("rounded point coincides with the anchor")
    s = -2 * (ax * dx + ay * dy) / dd
    return (ax + s * dx, ay + s * dy)


@dataclass(frozen=True)
class Rotation:
    point: Point
    anchor: tuple[int, int]
    rounded: Optional[Point]

    @property
    def bits(self) -> int:
        return max(bit_length_rational(c) for c in self.point)


def rational_rotation(target, w: int, *, detail: bool = False):
    """Rational point on the unit circle within 2^(1-w) of a near-unit target.

    The target is rounded to a 2^-w grid point on or outside the circle and
    the line through that point and an axis anchor is intersected with the
    circle.  The anchor is itself a root of the line-circle quadratic, so the
    other root is rational and is obtained without a square root.
    """
    a, b = as_point(target)
    if w < 1:
        raise ValueError("w must be >= 1")
    if a == 0 and b == 0:
        raise DegenerateTarget("zero target")
    if abs(a * a + b * b - 1) > Fraction(1, 4):
        raise DegenerateTarget(f"target ({a}, {b}) is not near the unit circle")
    if (abs(a), abs(b)) in ((1, 0), (0, 1)):
        rot = Rotation((a, b), (int(a), int(b)), None)
        return rot if detail else rot.point
    anchor = choose_anchor(a, b)
    scale = 1 << w
    fx, fy = math.floor(a * scale), math.floor(b * scale)
    best = None
    for i in range(fx - 1, fx + 3):
        for j in range(fy - 1, fy + 3):
            p = (Fraction(i, scale), Fraction(j, scale))
            if p[0] ** 2 + p[1] ** 2 < 1 or p == anchor:
                continue
            x = second_intersection(anchor, p)
            err = (x[0] - a) ** 2 + (x[1] - b) ** 2
            key = (err, p)
            if best is None or key < best[0]:
                best = (key, p, x)
    if best is None:
        raise DegenerateTarget("no admissible grid point near the target")
    rot = Rotation(best[2], anchor, best[1])
    return rot if detail else rot.point


# ---------------------------------------------------------------- polygons

@dataclass(frozen=True)
class ConvexPolygon:
    vertices: tuple[Point, ...]

    def __post_init__(self):
        vs = tuple(as_point(v) for v in self.vertices)
        object.__setattr__(self, "vertices", vs)
        n = len(vs)
        if n < 3:
            raise NonConvexInput("a polygon needs at least 3 vertices")
        for i in range(n):
            if orient(vs[i], vs[(i + 1) % n], vs[(i + 2) % n]) <= 0:
                raise NonConvexInput("vertices must be strictly convex and counterclockwise")

    def translated(self, t) -> "ConvexPolygon":
        tx, ty = as_point(t)
        return ConvexPolygon(tuple((x + tx, y + ty) for x, y in self.vertices))

    def edges(self) -> Iterable[tuple[Point, Point]]:
        vs = self.vertices
        return ((vs[i], vs[(i + 1) % len(vs)]) for i in range(len(vs)))

    def bbox(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return min(xs), min(ys), max(xs), max(ys)

    def contains(self, p: Point) -> bool:
        return all(orient(a, b, p) >= 0 for a, b in self.edges())

    def chord(self, y: Fraction, axis: int = 1) -> Optional[tuple[Fraction, Fraction]]:
        """Intersection with the line coord[axis] = y, as an interval in the other coordinate."""
        o = 1 - axis
        hits = []
        for a, b in self.edges():
            if a[axis] == b[axis]:
                if a[axis] == y:
                    hits += [a[o], b[o]]
                continue
            lo, hi = sorted((a[axis], b[axis]))
            if lo <= y <= hi:
                s = (y - a[axis]) / (b[axis] - a[axis])
                hits.append(a[o] + s * (b[o] - a[o]))
        return (min(hits), max(hits)) if hits else None


def convex_hull(points: Iterable) -> list[Point]:
    """Monotone chain; CCW, collinear points dropped."""
    pts = sorted(set(as_point(p) for p in points))
    if len(pts) <= 2:
        return pts
    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and orient(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and orient(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _axes(poly: ConvexPolygon) -> list[Point]:
    return [(b[1] - a[1], a[0] - b[0]) for a, b in poly.edges()]


def _project(poly: ConvexPolygon, axis: Point) -> tuple[Fraction, Fraction]:
    vals = [axis[0] * x + axis[1] * y for x, y in poly.vertices]
    return min(vals), max(vals)


def interiors_disjoint(p: ConvexPolygon, q: ConvexPolygon) -> bool:
    """Separating-axis test; touching boundaries count as disjoint."""
    for axis in _axes(p) + _axes(q):
        a0, a1 = _project(p, axis)
        b0, b1 = _project(q, axis)
        if a1 <= b0 or b1 <= a0:
            return True
    return False


def _seg_dist2(p: Point, a: Point, b: Point) -> Fraction:
    dx, dy = b[0] - a[0], b[1] - a[1]
    px, py = p[0] - a[0], p[1] - a[1]
    dd = dx * dx + dy * dy
    s = (px * dx + py * dy) / dd if dd else Fraction(0)
    s = min(Fraction(1), max(Fraction(0), s))
    ex, ey = px - s * dx, py - s * dy
    return ex * ex + ey * ey


def distance2(p: ConvexPolygon, q: ConvexPolygon) -> Fraction:
    """Squared Euclidean distance between two convex polygons with disjoint interiors."""
    if not interiors_disjoint(p, q):
        return Fraction(0)
    best = None
    for u, v in ((p, q), (q, p)):
        for x in u.vertices:
            for a, b in v.edges():
                d = _seg_dist2(x, a, b)
                best = d if best is None or d < best else best
    return best


def _bbox_gap2(a: tuple, b: tuple) -> Fraction:
    dx = max(Fraction(0), b[0] - a[2], a[0] - b[2])
    dy = max(Fraction(0), b[1] - a[3], a[1] - b[3])
    return dx * dx + dy * dy


# ---------------------------------------------------------------- packings

@dataclass(frozen=True)
class Piece:
    shape: ConvexPolygon
    translation: Point = (Fraction(0), Fraction(0))
    rotation: Optional[Fraction] = None

    def placed(self) -> ConvexPolygon:
        return self.shape.translated(self.translation)


@dataclass(frozen=True)
class Packing:
    """Pieces inside the square container [0, 1 + alpha]^2."""

    alpha: Fraction
    pieces: tuple[Piece, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "alpha", parse_rational(self.alpha))
        object.__setattr__(self, "pieces", tuple(self.pieces))

    @property
    def width(self) -> Fraction:
        return 1 + self.alpha

    def placed(self) -> list[ConvexPolygon]:
        return [p.placed() for p in self.pieces]

    def violations(self) -> list[str]:
        out = []
        polys = self.placed()
        for i, poly in enumerate(polys):
            x0, y0, x1, y1 = poly.bbox()
            if x0 < 0 or y0 < 0 or x1 > self.width or y1 > self.width:
                out.append(f"piece {i} leaves the container")
        for i, j in combinations(range(len(polys)), 2):
            if not interiors_disjoint(polys[i], polys[j]):
                out.append(f"pieces {i} and {j} overlap")
        return out

    def min_separation2(self) -> Optional[Fraction]:
        polys = self.placed()
        boxes = [p.bbox() for p in polys]
        pairs = sorted((_bbox_gap2(boxes[i], boxes[j]), i, j) for i, j in combinations(range(len(polys)), 2))
        best = None
        # the box gap is a lower bound, so later pairs cannot beat the current best
        for gap, i, j in pairs:
            if best is not None and gap >= best:
                break
            d = distance2(polys[i], polys[j])
            best = d if best is None or d < best else best
        return best


@dataclass(frozen=True)
class CardinalOrder:
    pi_x: tuple[int, ...]
    pi_y: tuple[int, ...]

    def rank_x(self) -> dict[int, int]:
        return {p: r for r, p in enumerate(self.pi_x, 1)}

    def rank_y(self) -> dict[int, int]:
        return {p: r for r, p in enumerate(self.pi_y, 1)}


def _before(a: ConvexPolygon, b: ConvexPolygon, axis: int) -> Optional[bool]:
    """Whether a precedes b along coordinate ``axis`` (0 = x), None if unrelated."""
    o = 1 - axis
    ba, bb = a.bbox(), b.bbox()
    lo = max(ba[o], bb[o])
    hi = min(ba[o + 2], bb[o + 2])
    if lo < hi:
        c = (lo + hi) / 2
        ca, cb = a.chord(c, axis=o), b.chord(c, axis=o)
        return ca[1] <= cb[0]
    if ba[axis + 2] <= bb[axis]:
        return True
    if bb[axis + 2] <= ba[axis]:
        return False
    return None


def _toposort(n: int, polys: list[ConvexPolygon], axis: int) -> tuple[int, ...]:
    succ: dict[int, set[int]] = {i: set() for i in range(n)}
    indeg = [0] * n
    for i, j in combinations(range(n), 2):
        rel = _before(polys[i], polys[j], axis)
        if rel is None:
            continue
        u, v = (i, j) if rel else (j, i)
        if v not in succ[u]:
            succ[u].add(v)
            indeg[v] += 1
    key = lambda i: (polys[i].bbox()[axis], i)  # noqa: E731
    ready = sorted((i for i in range(n) if indeg[i] == 0), key=key)
    order = []
    while ready:
        u = ready.pop(0)
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                ready.append(v)
        ready.sort(key=key)
    if len(order) != n:
        raise GeometryError("precedence relation has a cycle")
    return tuple(order)


def cardinal_order(polys: Sequence[ConvexPolygon]) -> CardinalOrder:
    """Linear orders consistent with domination and with chord order on axis-parallel lines."""
    polys = list(polys)
    for i, j in combinations(range(len(polys)), 2):
        if not interiors_disjoint(polys[i], polys[j]):
            raise OverlappingPieces(f"pieces {i} and {j} overlap")
    n = len(polys)
    return CardinalOrder(_toposort(n, polys, 0), _toposort(n, polys, 1))


def check_order_on_line(order: CardinalOrder, polys: Sequence[ConvexPolygon], c: Fraction, axis: int) -> bool:
    """Chords of the pieces on the line coord[1-axis] = c appear in the order's sequence."""
    rank = order.rank_x() if axis == 0 else order.rank_y()
    chords = []
    for i, p in enumerate(polys):
        ch = p.chord(c, axis=1 - axis)
        if ch is not None:
            chords.append((ch, i))
    for (ca, i), (cb, j) in combinations(chords, 2):
        if ca[1] <= cb[0] and ca != cb and rank[i] > rank[j] and ca[0] < ca[1] and cb[0] < cb[1]:
            return False
        if cb[1] <= ca[0] and ca != cb and rank[j] > rank[i] and ca[0] < ca[1] and cb[0] < cb[1]:
            return False
    return True


def snap_to(x: Fraction, g: Fraction) -> Fraction:
    """Nearest multiple of g, ties upward."""
    return math.floor(x / g + Fraction(1, 2)) * g


@dataclass(frozen=True)
class ShiftResult:
    packing: Packing
    order: CardinalOrder
    grid: Fraction
    separation_before2: Optional[Fraction]
    separation_after2: Optional[Fraction]

    @property
    def max_translation_bits(self) -> int:
        return max(
            (bit_length_rational(c) for p in self.packing.pieces for c in p.translation),
            default=0,
        )


def pack_shift(packing: Packing, eps) -> ShiftResult:
    """Spread a valid packing at augmentation alpha into one at alpha + eps.

    The piece with ranks (i, j) in the cardinal orders moves by
    (i eps/(n+2), j eps/(n+2)); translations are then rounded to the grid of
    width eps/(8(n+2)).
    """
    eps = parse_rational(eps)
    if eps <= 0:
        raise GeometryError("eps must be positive")
    if any(p.rotation not in (None, 0) for p in packing.pieces):
        raise RotationalPlacementUnsupported("pack_shift handles translations only")
    bad = packing.violations()
    if bad:
        raise InvalidInputPacking("; ".join(bad))
    n = len(packing.pieces)
    grid = eps / (8 * (n + 2))
    polys = packing.placed()
    order = cardinal_order(polys)
    rx, ry = order.rank_x(), order.rank_y()
    step = eps / (n + 2)
    shifted = []
    rounded = []
    for idx, piece in enumerate(packing.pieces):
        tx = piece.translation[0] + rx[idx] * step
        ty = piece.translation[1] + ry[idx] * step
        shifted.append(Piece(piece.shape, (tx, ty)))
        rounded.append(Piece(piece.shape, (snap_to(tx, grid), snap_to(ty, grid))))
    before = Packing(packing.alpha + eps, tuple(shifted))
    after = Packing(packing.alpha + eps, tuple(rounded))
    return ShiftResult(after, order, grid, before.min_separation2(), after.min_separation2())


def random_packing(rng, n: int, alpha=Fraction(0), resolution: int = 8) -> Packing:
    """n convex pieces in distinct cells of a grid over [0, 1]^2.

    Roughly a quarter of the pieces fill their whole cell, so neighbours touch.
    Vertices lie on a grid of width 1/(m * resolution) for an m x m cell grid.
    """
    m = max(1, math.isqrt(n - 1) + 1) if n else 1
    cell = Fraction(1, m)
    unit = cell / resolution
    cells = rng.sample(range(m * m), n)
    pieces = []
    for c in cells:
        corner = ((c % m) * cell, (c // m) * cell)
        if rng.random() < 0.25:
            hull = [(Fraction(0), Fraction(0)), (cell, Fraction(0)), (cell, cell), (Fraction(0), cell)]
        else:
            hull = []
            while len(hull) < 3:
                pts = [(rng.randint(0, resolution) * unit, rng.randint(0, resolution) * unit) for _ in range(rng.randint(3, 7))]
                hull = convex_hull(pts)
        pieces.append(Piece(ConvexPolygon(tuple(hull)), corner))
    return Packing(alpha, tuple(pieces))


# ---------------------------------------------------------------- inflation

def exact_unit(v: Point, w: int = 32) -> tuple[Point, bool]:
    """Unit vector along v: exact when |v| is rational, else a rational rotation (flag False)."""
    x, y = v
    n2 = x * x + y * y
    if n2 == 0:
        raise DegenerateTarget("zero direction")
    num, den = n2.numerator, n2.denominator
    rn, rd = math.isqrt(num), math.isqrt(den)
    if rn * rn == num and rd * rd == den:
        norm = Fraction(rn, rd)
        return (x / norm, y / norm), True
    approx = math.hypot(float(x), float(y))
    target = (Fraction(float(x) / approx), Fraction(float(y) / approx))
    return rational_rotation(target, w), False


def clip(poly: list[Point], u: Point, h: Fraction) -> list[Point]:
    """Sutherland-Hodgman clip of a convex polygon to {p : u.p <= h}."""
    out: list[Point] = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        fp = u[0] * p[0] + u[1] * p[1] - h
        fq = u[0] * q[0] + u[1] * q[1] - h
        if fp <= 0:
            out.append(p)
        if (fp < 0 < fq) or (fq < 0 < fp):
            s = fp / (fp - fq)
            out.append((p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1])))
    return out


@dataclass(frozen=True)
class Inflation:
    polygon: ConvexPolygon
    normals: tuple[Point, ...]
    exact: tuple[bool, ...]

    @property
    def rationalized(self) -> bool:
        return not all(self.exact)


def edge_normals(poly: ConvexPolygon, w: int = 32) -> list[tuple[Point, bool]]:
    return [exact_unit((b[1] - a[1], a[0] - b[0]), w) for a, b in poly.edges()]


def edge_inflate(poly, alpha, w: int = 32) -> Inflation:
    """Intersection of the half-planes u.x <= h(u) + alpha over the edge normals u."""
    if not isinstance(poly, ConvexPolygon):
        poly = ConvexPolygon(tuple(poly))
    alpha = parse_rational(alpha)
    if alpha < 0:
        raise GeometryError("alpha must be >= 0")
    normals = edge_normals(poly, w)
    if alpha == 0:
        return Inflation(poly, tuple(u for u, _ in normals), tuple(e for _, e in normals))
    x0, y0, x1, y1 = poly.bbox()
    pad = (x1 - x0) + (y1 - y0) + 4 * alpha + 1
    region = [(x0 - pad, y0 - pad), (x1 + pad, y0 - pad), (x1 + pad, y1 + pad), (x0 - pad, y1 + pad)]
    for u, _ in normals:
        h = max(u[0] * x + u[1] * y for x, y in poly.vertices)
        region = clip(region, u, h + alpha)
    return Inflation(ConvexPolygon(tuple(convex_hull(region))), tuple(u for u, _ in normals), tuple(e for _, e in normals))


# ---------------------------------------------------------------- file formats

def _rationals(line: str) -> list[Fraction]:
    return [parse_rational(t) for t in line.split()]


def _lines(text: str) -> list[str]:
    out = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return out


def read_points(text: str) -> list[Point]:
    pts = []
    for line in _lines(text):
        vals = _rationals(line)
        if len(vals) != 2:
            raise GeometryError(f"expected 'x y', got {line!r}")
        pts.append((vals[0], vals[1]))
    return pts


def read_polygons(text: str) -> list[ConvexPolygon]:
    out = []
    for line in _lines(text):
        vals = _rationals(line)
        if len(vals) % 2:
            raise GeometryError(f"odd number of coordinates in {line!r}")
        out.append(ConvexPolygon(tuple(zip(vals[::2], vals[1::2]))))
    return out


def read_packing(text: str) -> Packing:
    """First line ``alpha <value>``; then ``tx ty | x1 y1 x2 y2 ...`` per piece."""
    lines = _lines(text)
    if not lines or not lines[0].startswith("alpha"):
        raise GeometryError("packing file must start with 'alpha <value>'")
    alpha = parse_rational(lines[0].split()[1])
    pieces = []
    for line in lines[1:]:
        head, _, body = line.partition("|")
        t = _rationals(head)
        vals = _rationals(body)
        if len(t) != 2 or len(vals) % 2:
            raise GeometryError(f"bad piece line {line!r}")
        pieces.append(Piece(ConvexPolygon(tuple(zip(vals[::2], vals[1::2]))), (t[0], t[1])))
    return Packing(alpha, tuple(pieces))


def write_packing(packing: Packing) -> str:
    rows = [f"alpha {format_rational(packing.alpha)}"]
    for p in packing.pieces:
        t = " ".join(format_rational(c) for c in p.translation)
        vs = " ".join(format_rational(c) for v in p.shape.vertices for c in v)
        rows.append(f"{t} | {vs}")
    return "\n".join(rows) + "\n"
