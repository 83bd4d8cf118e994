"""Exact rational substrate: bit lengths, dyadic snapping, perturbation sampling.

All real values in the package are :class:`fractions.Fraction` instances, which
are kept in lowest terms with a positive denominator.
"""
from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

Rational = Fraction
RationalLike = Union[Fraction, int, str]

SEED_SCHEME = "blake2b-64(master_seed, path...)"


def parse_rational(text: RationalLike) -> Fraction:
    """Parse ``"p/q"``, ``"p"`` or a decimal literal such as ``"0.375"`` exactly."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int):
        return Fraction(text)
    s = str(text).strip()
    if not s:
        raise ValueError("empty rational literal")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"bad rational literal {s!r}") from exc


def format_rational(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def bit_length_int(z: int) -> int:
    """Binary digits of |z|; zero counts as one digit."""
    return max(1, abs(int(z)).bit_length())


def bit_length_rational(r: Fraction) -> int:
    r = Fraction(r)
    return bit_length_int(r.numerator) + bit_length_int(r.denominator)


def bit_length_input(values: Iterable[RationalLike]) -> int:
    """Maximum bit length over a vector, 1 for an empty vector."""
    return max((bit_length_rational(parse_rational(v)) for v in values), default=1)


@dataclass(frozen=True)
class DyadicGrid:
    """The lattice 2^-w Z restricted to [0, 1]."""

    w: int

    def __post_init__(self):
        if self.w < 1:
            raise ValueError(f"grid exponent must be positive, got {self.w}")

    @property
    def spacing(self) -> Fraction:
        return Fraction(1, 1 << self.w)

    def snap(self, x: Fraction) -> Fraction:
        return snap(x, self.w)


def snap(x: RationalLike, w: int) -> Fraction:
    """Nearest multiple of 2^-w to ``x`` in [0, 1]; exact midpoints round up."""
    x = parse_rational(x)
    if x < 0 or x > 1:
        raise ValueError(f"snap input {x} outside [0, 1]")
    if w < 1:
        raise ValueError(f"grid exponent must be positive, got {w}")
    scale = 1 << w
    # floor(x * 2^w + 1/2) with integer arithmetic
    k = (2 * x.numerator * scale + x.denominator) // (2 * x.denominator)
    return Fraction(k, scale)


def snap_vector(xs: Sequence[RationalLike], w: int) -> tuple[Fraction, ...]:
    return tuple(snap(x, w) for x in xs)


def derive_seed(master: int, *path: int | str) -> int:
    """Deterministic 64-bit child seed for ``(master, path)``."""
    h = hashlib.blake2b(digest_size=8)
    h.update(int(master).to_bytes(16, "little", signed=True))
    for part in path:
        h.update(b"/")
        h.update(str(part).encode())
    return int.from_bytes(h.digest(), "little")


def derive_rng(master: int, *path: int | str) -> random.Random:
    return random.Random(derive_seed(master, *path))


@dataclass(frozen=True)
class PerturbationConfig:
    delta: Fraction
    resolution: int = 64
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "delta", parse_rational(self.delta))
        if not 0 <= self.delta <= 1:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")
        if self.resolution < 1:
            raise ValueError("resolution exponent must be >= 1")


def sample_offset(cfg: PerturbationConfig, rng: random.Random) -> Fraction:
    """Uniform dyadic sample k * 2^-kappa from [-delta/2, delta/2]."""
    scale = 1 << cfg.resolution
    half = cfg.delta / 2
    kmax = (half.numerator * scale) // half.denominator
    if kmax == 0:
        return Fraction(0)
    k = rng.randint(-kmax, kmax)
    return Fraction(k, scale)


def perturb(point: Sequence[Fraction], cfg: PerturbationConfig, rng: random.Random) -> tuple[Fraction, ...]:
    return tuple(Fraction(g) + sample_offset(cfg, rng) for g in point)
