"""Multivariate polynomials with rational coefficients and univariate Sturm counting."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .exact import format_rational, parse_rational


class ArityMismatch(ValueError):
    pass


class PolySyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class MultiPoly:
    """Sparse polynomial in x1..xd; ``terms`` maps exponent tuples to nonzero coefficients."""

    d: int
    terms: Mapping[tuple, Fraction] = field(default_factory=dict)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        clean = {}
        for exps, c in self.terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.d or min(exps) < 0:
                raise ValueError(f"bad exponent vector {exps} for d={self.d}")
            c = Fraction(c)
            if c:
                clean[exps] = clean.get(exps, Fraction(0)) + c
        object.__setattr__(self, "terms", {e: c for e, c in clean.items() if c})

    @classmethod
    def constant(cls, d: int, c) -> "MultiPoly":
        return cls(d, {(0,) * d: parse_rational(c)})

    @classmethod
    def variable(cls, d: int, i: int) -> "MultiPoly":
        e = [0] * d
        e[i] = 1
        return cls(d, {tuple(e): Fraction(1)})

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    @property
    def max_coefficient(self) -> Fraction:
        return max((abs(c) for c in self.terms.values()), default=Fraction(0))

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def variables_used(self) -> set[int]:
        return {i for e in self.terms for i, k in enumerate(e) if k}

    def __call__(self, point: Sequence) -> Fraction:
        return eval_poly(self, point)

    def __add__(self, other: "MultiPoly") -> "MultiPoly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, Fraction(0)) + c
        return MultiPoly(self.d, out)

    def __neg__(self) -> "MultiPoly":
        return MultiPoly(self.d, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other: "MultiPoly") -> "MultiPoly":
        return self + (-other)

    def __mul__(self, other) -> "MultiPoly":
        if not isinstance(other, MultiPoly):
            return MultiPoly(self.d, {e: c * Fraction(other) for e, c in self.terms.items()})
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, Fraction(0)) + c1 * c2
        return MultiPoly(self.d, out)

    __rmul__ = __mul__

    def substitute(self, i: int, value) -> "MultiPoly":
        """Fix x_{i+1} = value; the result keeps dimension d with exponent i zeroed."""
        value = Fraction(value)
        out: dict = {}
        for e, c in self.terms.items():
            k = e[i]
            e2 = e[:i] + (0,) + e[i + 1 :]
            out[e2] = out.get(e2, Fraction(0)) + c * value**k
        return MultiPoly(self.d, out)

    def univariate(self, i: int) -> list[Fraction]:
        """Coefficients (low to high) in x_{i+1}; every other variable must be absent."""
        coeffs = [Fraction(0)] * (self.degree + 1)
        for e, c in self.terms.items():
            if any(k for j, k in enumerate(e) if j != i):
                raise ValueError(f"polynomial still depends on variables other than x{i + 1}")
            coeffs[e[i]] += c
        return _trim(coeffs)

    def to_text(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for e in sorted(self.terms, key=lambda e: (-sum(e), tuple(-k for k in e))):
            c = self.terms[e]
            mono = "*".join(f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            mag = abs(c)
            if mono:
                body = mono if mag == 1 else f"{format_rational(mag)}*{mono}"
            else:
                body = format_rational(mag)
            parts.append(("- " if c < 0 else "+ ") + body)
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]

    def __str__(self):
        return self.to_text()


def eval_poly(p: MultiPoly, point: Sequence) -> Fraction:
    if len(point) != p.d:
        raise ArityMismatch(f"point of length {len(point)} for a {p.d}-variate polynomial")
    xs = [parse_rational(x) for x in point]
    total = Fraction(0)
    for e, c in p.terms.items():
        term = c
        for x, k in zip(xs, e):
            if k:
                term *= x**k
        total += term
    return total


def parse_poly(text: str, d: int | None = None) -> MultiPoly:
    """Parse literals such as ``"2*x1^2*x2 - 1/3*x2 + 4"``.

    ``d`` defaults to the largest variable index that occurs (at least 1).
    """
    s = text.replace(" ", "")
    if not s:
        raise PolySyntaxError("empty polynomial")
    raw: list[tuple[Fraction, dict]] = []
    pos = 0
    while pos < len(s):
        sign = 1
        if s[pos] in "+-":
            sign = -1 if s[pos] == "-" else 1
            pos += 1
        end = pos
        while end < len(s) and s[end] not in "+-":
            end += 1
        chunk = s[pos:end]
        if not chunk:
            raise PolySyntaxError(f"dangling sign in {text!r}")
        coef = Fraction(sign)
        exps: dict[int, int] = {}
        for factor in chunk.split("*"):
            m = re.fullmatch(r"x(\d+)(?:\^(\d+))?", factor)
            if m:
                idx = int(m.group(1))
                if idx < 1:
                    raise PolySyntaxError("variables are numbered from x1")
                exps[idx] = exps.get(idx, 0) + int(m.group(2) or 1)
            else:
                try:
                    coef *= parse_rational(factor)
                except ValueError:
                    raise PolySyntaxError(f"bad factor {factor!r} in {text!r}") from None
        raw.append((coef, exps))
        pos = end
    top = max((i for _, ex in raw for i in ex), default=1)
    if d is None:
        d = top
    elif top > d:
        raise PolySyntaxError(f"x{top} used in a {d}-variate polynomial")
    terms: dict = {}
    for coef, ex in raw:
        e = tuple(ex.get(i + 1, 0) for i in range(d))
        terms[e] = terms.get(e, Fraction(0)) + coef
    return MultiPoly(d, terms)


# ---------------------------------------------------------------- univariate

def _trim(c: list) -> list:
    c = list(c)
    while c and c[-1] == 0:
        c.pop()
    return c


def _peval(c: Sequence, x):
    acc = 0
    for a in reversed(c):
        acc = acc * x + a
    return acc


def _deriv(c: Sequence[Fraction]) -> list[Fraction]:
    return _trim([i * c[i] for i in range(1, len(c))])


def _divmod(a: Sequence[Fraction], b: Sequence[Fraction]) -> tuple[list, list]:
    a = _trim(a)
    b = _trim(b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(0, len(a) - len(b) + 1)
    r = list(a)
    while len(r) >= len(b) and r:
        shift = len(r) - len(b)
        f = r[-1] / b[-1]
        q[shift] = f
        for i, bc in enumerate(b):
            r[shift + i] -= f * bc
        r = _trim(r)
    return q, r


def _gcd(a, b) -> list:
    a, b = _trim(a), _trim(b)
    while b:
        a, b = b, _divmod(a, b)[1]
    return [x / a[-1] for x in a] if a else a


def square_free(c: Sequence[Fraction]) -> list[Fraction]:
    c = _trim(c)
    if len(c) <= 2:
        return c
    g = _gcd(c, _deriv(c))
    return _divmod(c, g)[0] if len(g) > 1 else c


def sturm_sequence(c: Sequence[Fraction]) -> list[list[Fraction]]:
    p0 = _trim(c)
    seq = [p0, _deriv(p0)]
    while seq[-1]:
        r = _divmod(seq[-2], seq[-1])[1]
        if not r:
            break
        seq.append([-x for x in r])
    return [s for s in seq if s]


def _variations(seq, x: Fraction) -> int:
    signs = [v for v in (_peval(s, x) for s in seq) if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a < 0) != (b < 0))


def count_roots(c: Sequence[Fraction], lo, hi) -> int:
    """Number of distinct real roots in the closed interval [lo, hi]."""
    lo, hi = Fraction(lo), Fraction(hi)
    c = _trim(c)
    if not c:
        raise ValueError("zero polynomial has infinitely many roots")
    if len(c) == 1:
        return 0
    sf = square_free(c)
    seq = sturm_sequence(sf)
    # V(a) - V(b) counts roots in (a, b]
    n = _variations(seq, lo) - _variations(seq, hi)
    return n + (1 if _peval(sf, lo) == 0 else 0)


def _integral(c: Sequence[Fraction]) -> list[int]:
    """Positive multiple of c with integer coefficients (same signs everywhere)."""
    den = math.lcm(*(x.denominator for x in c)) if c else 1
    return [int(x * den) for x in c]


def unit_hits(c: Sequence[Fraction], k: int) -> list[bool]:
    """hits[j] is True iff the closed interval [j, j+1] contains a root, j < k."""
    c = _trim(c)
    if not c:
        return [True] * k
    if len(c) == 1:
        return [False] * k
    sf = square_free(c)
    seq = [_integral(s) for s in sturm_sequence(sf)]
    sf = seq[0]
    vals = [_peval(sf, j) for j in range(k + 1)]
    var = [_variations(seq, j) for j in range(k + 1)]
    return [vals[j] == 0 or vals[j + 1] == 0 or var[j] - var[j + 1] > 0 for j in range(k)]


def integer_scaled(p: MultiPoly, s: int) -> tuple[list[tuple[tuple, int]], int]:
    """Integer terms of P(X) = D * s^Delta * p(X / s) and the positive factor D * s^Delta."""
    den = math.lcm(*(c.denominator for c in p.terms.values())) if p.terms else 1
    deg = p.degree
    out = []
    for e, c in p.terms.items():
        out.append((e, int(c * den) * s ** (deg - sum(e))))
    return out, den * s**deg
