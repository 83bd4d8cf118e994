"""Bit-complexity experiments: hitting cubes, sign flips under snapping, smoothed snapping.

Reports are JSON-ready dataclasses.  Every trial draws from its own
generator derived from ``(master seed, experiment name, trial index)``.
"""
from __future__ import annotations

import itertools
import math
import statistics
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .exact import (
    SEED_SCHEME,
    PerturbationConfig,
    derive_rng,
    format_rational,
    parse_rational,
    sample_offset,
    snap,
)
from .machine import MachineConfig, Outcome, Program, execute
from .poly import MultiPoly, eval_poly, integer_scaled, unit_hits


class ZeroPolynomial(ValueError):
    pass


class DimensionTooLarge(ValueError):
    pass


class DegenerateDelta(ValueError):
    pass


# ---------------------------------------------------------------- closed-form bounds

def _check_k(d: int, delta: int, k: int) -> None:
    if d < 1 or delta < 1:
        raise ValueError("d and degree must be >= 1")
    if k < 2 * delta + 2:
        raise ValueError(f"k = {k} violates k >= 2*degree + 2 = {2 * delta + 2}")


def hitting_bound(d: int, delta: int, k: int) -> int:
    """k^(d-1) * Delta * 3^d * (d+1)!: cubes of C(d, k) a degree-Delta variety can meet."""
    _check_k(d, delta, k)
    return k ** (d - 1) * delta * 3**d * math.factorial(d + 1)


def recursion_bound(d: int, delta: int, k: int) -> int:
    """f(1) = Delta, f(d) = 2 f(d-1) d (k+1) + (2 Delta)^d."""
    _check_k(d, delta, k)
    f = delta
    for e in range(2, d + 1):
        f = 2 * f * e * (k + 1) + (2 * delta) ** e
    return f


def intermediate_bound(d: int, delta: int, k: int) -> int:
    """(k+1)^(d-1) * Delta * 2^d * (d+1)!, the closed form the recursion unrolls to."""
    _check_k(d, delta, k)
    return (k + 1) ** (d - 1) * delta * 2**d * math.factorial(d + 1)


def sign_flip_bound(d: int, delta: int, w: int, dlt) -> Fraction:
    """4 omega Delta 3^d (d+1)! / delta with omega = 2^-w."""
    dlt = parse_rational(dlt)
    return Fraction(4 * delta * 3**d * math.factorial(d + 1), 1 << w) / dlt


def expected_bit_bound(d: int, delta: int, c_n: int, dlt) -> int:
    """ceil(log2(3^d (d+1)! Delta C(n) / delta)) + 3, computed exactly."""
    dlt = parse_rational(dlt)
    if d < 1 or delta < 1 or c_n < 1 or dlt <= 0:
        raise ValueError("all parameters must be positive")
    x = Fraction(3**d * math.factorial(d + 1) * delta * c_n) / dlt
    return _ceil_log2(x) + 3


def _ceil_log2(x: Fraction) -> int:
    """Smallest integer e with 2^e >= x, for x > 0."""
    e = x.numerator.bit_length() - x.denominator.bit_length() - 1
    while Fraction(2) ** e < x:
        e += 1
    while Fraction(2) ** (e - 1) >= x:
        e -= 1
    return e


# ---------------------------------------------------------------- reports

def wilson_interval(successes: int, trials: int, confidence: float = 0.99) -> tuple[float, float]:
    if trials <= 0:
        return 0.0, 1.0
    z = statistics.NormalDist().inv_cdf(0.5 + confidence / 2)
    p = successes / trials
    denom = 1 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


@dataclass
class ExperimentReport:
    seed: int
    trials: int
    estimate: float
    ci_low: float
    ci_high: float
    bound: float
    passed: bool
    wall_ms: Optional[int] = None
    details: dict = field(default_factory=dict)

    def to_json(self, timing: bool = True) -> dict:
        out = {
            "seed_scheme": SEED_SCHEME,
            "seed": self.seed,
            "trials": self.trials,
            "estimate": self.estimate,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "bound": self.bound,
            "pass": self.passed,
        }
        out["wall_ms"] = self.wall_ms if timing else None
        out.update(self.details)
        return out


@dataclass(frozen=True)
class AlgorithmProfile:
    """Dimension, degree, coefficient bound and polynomial count C(n) of a verifier."""

    d: int
    degree: int
    coefficient: int
    count: Callable[[int], int]
    polynomial_count: bool = True


ORDER_TYPE_PROFILE = AlgorithmProfile(6, 2, 1, lambda n: math.comb(n, 3))
DISK_GRAPH_PROFILE = AlgorithmProfile(4, 2, 1, lambda n: math.comb(n, 2))


# ---------------------------------------------------------------- hitting cubes

@dataclass(frozen=True)
class CubeCount:
    count: int
    exact_edge_hits: int
    sampled_only_hits: int
    samples_per_unit: int
    exact: bool

    def as_dict(self) -> dict:
        return asdict(self)


def _line_hits(p: MultiPoly, k: int) -> dict:
    """For each axis and each integer setting of the other coordinates, unit_hits along the axis."""
    d = p.d
    out = {}
    for axis in range(d):
        others = [i for i in range(d) if i != axis]
        for fixed in itertools.product(range(k + 1), repeat=d - 1):
            q = p
            for i, v in zip(others, fixed):
                q = q.substitute(i, v)
            out[axis, fixed] = unit_hits(q.univariate(axis), k)
    return out


def _lattice_values(p: MultiPoly, k: int, s: int) -> np.ndarray:
    """Signs of p on the lattice (1/s) Z^d within [0, k]^d, exactly."""
    terms, _ = integer_scaled(p, s)
    n = s * k + 1
    coords = np.arange(n, dtype=np.int64)
    bound = sum(abs(c) for _, c in terms) * (n ** max(1, p.degree))
    dtype = np.int64 if bound < 2**62 else object
    grids = np.meshgrid(*([coords.astype(dtype)] * p.d), indexing="ij")
    total = np.zeros(grids[0].shape, dtype=dtype)
    for e, c in terms:
        term = np.full(grids[0].shape, c, dtype=dtype)
        for g, k_ in zip(grids, e):
            if k_:
                term = term * g**k_
        total = total + term
    return np.sign(total).astype(np.int8)


def count_intersected_cubes(p: MultiPoly, k: int, samples_per_unit: int = 4) -> CubeCount:
    """Cubes of C(d, k) whose closure meets V(p); a certified lower count for d >= 2.

    Every cube edge is checked exactly by Sturm counting; a cube whose edges
    miss V(p) is still counted when the lattice samples in its closure contain
    a zero or both signs.  Components strictly inside a cube that avoid every
    sample are missed.
    """
    if p.is_zero:
        raise ZeroPolynomial("the zero polynomial vanishes everywhere")
    if p.d > 3:
        raise DimensionTooLarge("hitting-cube counting is limited to d <= 3")
    if k < 1:
        raise ValueError("k must be >= 1")
    d = p.d
    lines = _line_hits(p, k)
    if d == 1:
        hits = lines[0, ()]
        n = sum(hits)
        return CubeCount(n, n, 0, 0, True)
    s = samples_per_unit
    signs = _lattice_values(p, k, s)
    edge_hit = 0
    sampled = 0
    for z in itertools.product(range(k), repeat=d):
        hit = False
        for axis in range(d):
            others = [i for i in range(d) if i != axis]
            for corner in itertools.product((0, 1), repeat=d - 1):
                fixed = tuple(z[i] + c for i, c in zip(others, corner))
                if lines[axis, fixed][z[axis]]:
                    hit = True
                    break
            if hit:
                break
        if hit:
            edge_hit += 1
            continue
        block = signs[tuple(slice(zi * s, zi * s + s + 1) for zi in z)]
        if block.min() <= 0 <= block.max():
            sampled += 1
    return CubeCount(edge_hit + sampled, edge_hit, sampled, s, False)


def random_poly(rng, d: int, degree: int, lo: int = -8, hi: int = 8, denominators=(1, 2, 3, 4)) -> MultiPoly:
    """Dense random polynomial of total degree exactly ``degree`` with coefficients in [lo, hi]."""
    terms = {}
    for e in itertools.product(range(degree + 1), repeat=d):
        if sum(e) <= degree:
            den = rng.choice(denominators)
            terms[e] = Fraction(rng.randint(lo * den, hi * den), den)
    top = [e for e in terms if sum(e) == degree]
    if all(terms[e] == 0 for e in top):
        terms[rng.choice(top)] = Fraction(rng.choice([-1, 1]) * rng.randint(1, hi))
    return MultiPoly(d, terms)


def tight_univariate(degree: int) -> MultiPoly:
    """prod_j (x - j - 1/2): one root in each of the first ``degree`` unit intervals."""
    p = MultiPoly.constant(1, 1)
    for j in range(degree):
        p = p * (MultiPoly.variable(1, 0) - MultiPoly.constant(1, Fraction(2 * j + 1, 2)))
    return p


def hitting_cubes_experiment(d: int, degree: int, k: int, polys: int, seed: int, timing: bool = True) -> ExperimentReport:
    start = time.perf_counter()
    bound = hitting_bound(d, degree, k)
    counts = []
    for i in range(polys):
        rng = derive_rng(seed, "hitting-cubes", d, degree, k, i)
        p = random_poly(rng, d, degree)
        counts.append(count_intersected_cubes(p, k).count)
    worst = max(counts, default=0)
    rep = ExperimentReport(
        seed=seed,
        trials=polys,
        estimate=worst,
        ci_low=min(counts, default=0),
        ci_high=worst,
        bound=bound,
        passed=worst <= bound,
        wall_ms=int((time.perf_counter() - start) * 1000) if timing else None,
        details={"d": d, "degree": degree, "k": k, "counts": counts},
    )
    return rep


# ---------------------------------------------------------------- sign flips

def _sign_token(p: MultiPoly, q: MultiPoly, x) -> Optional[int]:
    qv = eval_poly(q, x)
    if qv == 0:
        return None
    pv = eval_poly(p, x)
    return ((pv > 0) - (pv < 0)) * ((qv > 0) - (qv < 0))


def sign_flip_probability(
    p: MultiPoly,
    q: MultiPoly,
    g: Sequence,
    dlt,
    w: int,
    trials: int,
    seed: int,
    resolution: int = 64,
    timing: bool = True,
) -> ExperimentReport:
    """Rate at which snapping a perturbed point changes the sign of p/q.

    Points with q = 0 get an 'undefined' sign that differs from both signs.
    Trials whose snapped cell is not inside the perturbation box are
    reported separately as perimeter trials.
    """
    if p.d != q.d or len(g) != p.d:
        raise ValueError("p, q and g must share the dimension")
    if q.is_zero:
        raise ZeroPolynomial("q is identically zero")
    start = time.perf_counter()
    g = [parse_rational(x) for x in g]
    cfg = PerturbationConfig(dlt, resolution, seed)
    half = cfg.delta / 2
    omega = Fraction(1, 1 << w)
    flips = clamped = 0
    inner_trials = inner_flips = 0
    for t in range(trials):
        rng = derive_rng(seed, "sign-flip", t)
        x = []
        for gi in g:
            v = gi + sample_offset(cfg, rng)
            if v < 0 or v > 1:
                clamped += 1
                v = min(Fraction(1), max(Fraction(0), v))
            x.append(v)
        xs = [snap(v, w) for v in x]
        flip = _sign_token(p, q, x) != _sign_token(p, q, xs)
        flips += flip
        inner = all(gi - half <= s - omega / 2 and s + omega / 2 <= gi + half for gi, s in zip(g, xs))
        if inner:
            inner_trials += 1
            inner_flips += flip
    lo, hi = wilson_interval(flips, trials)
    degree = max(1, p.degree, q.degree)
    bound = sign_flip_bound(p.d, degree, w, cfg.delta)
    return ExperimentReport(
        seed=seed,
        trials=trials,
        estimate=flips / trials if trials else 0.0,
        ci_low=lo,
        ci_high=hi,
        bound=float(bound),
        passed=hi <= bound,
        wall_ms=int((time.perf_counter() - start) * 1000) if timing else None,
        details={
            "flips": flips,
            "clamped": clamped,
            "inner_trials": inner_trials,
            "inner_flips": inner_flips,
            "perimeter_trials": trials - inner_trials,
            "perimeter_flips": flips - inner_flips,
            "delta": format_rational(cfg.delta),
            "w": w,
            "degree": degree,
        },
    )


# ---------------------------------------------------------------- smoothed snapping

class OrderTypeVerifier:
    """Chirotope check of n points given as a flat coordinate vector (x1, y1, x2, y2, ...)."""

    name = "order-type"
    profile = ORDER_TYPE_PROFILE

    def __init__(self, n: int):
        if n < 3:
            raise ValueError("order type needs n >= 3")
        self.n = n
        tri = np.array(list(itertools.combinations(range(n), 3)), dtype=np.int64)
        self._i, self._j, self._k = tri[:, 0], tri[:, 1], tri[:, 2]

    @property
    def polynomial_count(self) -> int:
        return self.profile.count(self.n)

    def _signs_exact(self, xs: list[int], ys: list[int]) -> list[int]:
        out = []
        for i, j, k in zip(self._i.tolist(), self._j.tolist(), self._k.tolist()):
            v = (xs[j] - xs[i]) * (ys[k] - ys[i]) - (ys[j] - ys[i]) * (xs[k] - xs[i])
            out.append((v > 0) - (v < 0))
        return out

    def _signs_small(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        i, j, k = self._i, self._j, self._k
        v = (xs[j] - xs[i]) * (ys[k] - ys[i]) - (ys[j] - ys[i]) * (xs[k] - xs[i])
        return np.sign(v)

    def bit_complexity(self, point: Sequence[Fraction], wmax: int) -> Optional[int]:
        """Smallest w' <= wmax whose snap keeps every orientation sign."""
        den = 1
        for c in point:
            den = math.lcm(den, c.denominator)
        shift = max(0, den.bit_length() - 1)
        if den != 1 << shift:
            return self._bit_complexity_generic(point, wmax)
        ints = [c.numerator * ((1 << shift) // c.denominator) for c in point]
        xs, ys = ints[0::2], ints[1::2]
        truth = np.array(self._signs_exact(xs, ys), dtype=np.int64)
        for wp in range(1, wmax + 1):
            if wp >= shift:
                return wp if wp <= wmax else None
            drop = shift - wp
            half = 1 << (drop - 1)
            sx = [(x + half) >> drop for x in xs]
            sy = [(y + half) >> drop for y in ys]
            if wp <= 29:
                got = self._signs_small(np.array(sx, dtype=np.int64), np.array(sy, dtype=np.int64))
            else:
                got = np.array(self._signs_exact(sx, sy), dtype=np.int64)
            if np.array_equal(got, truth):
                return wp
        return None

    def _bit_complexity_generic(self, point, wmax):
        from .geometry import order_type

        pts = list(zip(point[0::2], point[1::2]))
        truth = order_type(pts)
        for wp in range(1, wmax + 1):
            if order_type([(snap(x, wp), snap(y, wp)) for x, y in pts]) == truth:
                return wp
        return None


class ProgramVerifier:
    """A real RAM program whose comparison signature defines equivalence."""

    name = "program"

    def __init__(self, program: Program, profile: AlgorithmProfile, words: Sequence[int] = (), cfg: Optional[MachineConfig] = None, n: int = 1):
        self.program = program
        self.profile = profile
        self.words = list(words)
        self.cfg = cfg or MachineConfig(w=8, fuel=10**5)
        self.n = n

    @property
    def polynomial_count(self) -> int:
        return self.profile.count(self.n)

    def bit_complexity(self, point, wmax):
        _, base = execute(self.program, point, self.words, self.cfg)
        target = base.signature()
        for wp in range(1, wmax + 1):
            _, tr = execute(self.program, [snap(x, wp) for x in point], self.words, self.cfg, raise_errors=False)
            if tr.outcome is not Outcome.ERROR and tr.signature() == target:
                return wp
        return None


def collinear_base(n: int, dlt) -> list[Fraction]:
    """n points on y = x/2 + 1/4 spread over [delta/2, 1 - delta/2]; flat coordinate list.

    x coordinates are snapped to the 2^-40 grid so that dyadic deltas give dyadic points.
    """
    dlt = parse_rational(dlt)
    out = []
    for i in range(n):
        x = snap(dlt / 2 + (1 - dlt) * Fraction(i, max(1, n - 1)), 40)
        out += [x, x / 2 + Fraction(1, 4)]
    return out


def smoothed_bit_experiment(
    verifier,
    g: Sequence,
    dlt,
    wmax: int,
    trials: int,
    seed: int,
    resolution: int = 64,
    timing: bool = True,
) -> ExperimentReport:
    """Mean snapped bit complexity of g + x over uniform x in [-delta/2, delta/2]^len(g)."""
    dlt = parse_rational(dlt)
    if dlt == 0:
        raise DegenerateDelta("delta = 0 gives no perturbation; smoothed bounds are vacuous")
    start = time.perf_counter()
    cfg = PerturbationConfig(dlt, resolution, seed)
    g = [parse_rational(x) for x in g]
    values = []
    censored = 0
    for t in range(trials):
        rng = derive_rng(seed, "smoothed-bit", t)
        x = [min(Fraction(1), max(Fraction(0), gi + sample_offset(cfg, rng))) for gi in g]
        b = verifier.bit_complexity(x, wmax)
        if b is None:
            censored += 1
            b = wmax
        values.append(b)
    mean = sum(values) / trials if trials else 0.0
    sd = statistics.pstdev(values) if len(values) > 1 else 0.0
    half = 2.576 * sd / math.sqrt(trials) if trials else 0.0
    prof = verifier.profile
    bound = expected_bit_bound(prof.d, prof.degree, verifier.polynomial_count, dlt)
    return ExperimentReport(
        seed=seed,
        trials=trials,
        estimate=mean,
        ci_low=mean - half,
        ci_high=mean + half,
        bound=bound,
        passed=mean <= bound,
        wall_ms=int((time.perf_counter() - start) * 1000) if timing else None,
        details={
            "verifier": verifier.name,
            "n": getattr(verifier, "n", None),
            "delta": format_rational(dlt),
            "max": max(values, default=0),
            "censored": censored,
        },
    )
