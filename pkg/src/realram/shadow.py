"""Degree/dimension/coefficient bookkeeping for real registers.

Every real register holds a rational function p/q of the real inputs.  The
shadow tracks upper bounds on deg p, deg q, the set of input variables that
occur, and the largest integer coefficient of p and q, composing them with
the usual rules, e.g. p1/q1 + p2/q2 = (p1 q2 + p2 q1) / (q1 q2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .exact import bit_length_rational, parse_rational
from .machine import (
    Machine,
    MachineConfig,
    MachineError,
    Program,
    TERMINALS,
)


class SqrtNotSupportedInShadow(ValueError):
    pass


def _monomials(nvars: int, deg: int) -> int:
    return math.comb(nvars + deg, deg)


@dataclass(frozen=True)
class RegShadow:
    num_deg: int
    den_deg: int
    variables: frozenset
    num_coef: int
    den_coef: int
    den_one: bool = True
    # numerator is a single monomial, so products scale coefficients exactly
    monomial: bool = False

    @classmethod
    def constant(cls, value: int) -> "RegShadow":
        return cls(0, 0, frozenset(), abs(int(value)), 1, True, True)

    @classmethod
    def variable(cls, i: int) -> "RegShadow":
        return cls(1, 0, frozenset([i]), 1, 1, True, True)

    @property
    def degree(self) -> int:
        return max(self.num_deg, self.den_deg)

    @property
    def dimension(self) -> int:
        return len(self.variables)

    @property
    def coefficient(self) -> int:
        return max(1, self.num_coef, self.den_coef)

    def _prod_coef(self, c1: int, d1: int, c2: int, d2: int, nv: int) -> int:
        return c1 * c2 * min(_monomials(nv, d1), _monomials(nv, d2))

    def add(self, other: "RegShadow") -> "RegShadow":
        vs = self.variables | other.variables
        nv = len(vs)
        if self.den_one and other.den_one:
            return RegShadow(
                max(self.num_deg, other.num_deg), 0, vs, self.num_coef + other.num_coef, 1, True
            )
        c = self._prod_coef(self.num_coef, self.num_deg, other.den_coef, other.den_deg, nv) + self._prod_coef(
            other.num_coef, other.num_deg, self.den_coef, self.den_deg, nv
        )
        return RegShadow(
            max(self.num_deg + other.den_deg, other.num_deg + self.den_deg),
            self.den_deg + other.den_deg,
            vs,
            c,
            self._prod_coef(self.den_coef, self.den_deg, other.den_coef, other.den_deg, nv),
            False,
        )

    sub = add

    def mul(self, other: "RegShadow") -> "RegShadow":
        vs = self.variables | other.variables
        nv = len(vs)
        if self.monomial or other.monomial:
            num = self.num_coef * other.num_coef
        else:
            num = self._prod_coef(self.num_coef, self.num_deg, other.num_coef, other.num_deg, nv)
        return RegShadow(
            self.num_deg + other.num_deg,
            self.den_deg + other.den_deg,
            vs,
            num,
            self._prod_coef(self.den_coef, self.den_deg, other.den_coef, other.den_deg, nv),
            self.den_one and other.den_one,
            self.monomial and other.monomial,
        )

    def div(self, other: "RegShadow") -> "RegShadow":
        vs = self.variables | other.variables
        nv = len(vs)
        return RegShadow(
            self.num_deg + other.den_deg,
            self.den_deg + other.num_deg,
            vs,
            self._prod_coef(self.num_coef, self.num_deg, other.den_coef, other.den_deg, nv),
            self._prod_coef(self.den_coef, self.den_deg, other.num_coef, other.num_deg, nv),
            False,
        )


ZERO = RegShadow.constant(0)


def lg(x: int) -> int:
    """ceil(log2 x), clamped below at 1 so the bound never collapses to zero."""
    return max(1, math.ceil(math.log2(x))) if x > 1 else 1


def lemma_bound(p: int, degree: int, dimension: int, coefficient: int) -> int:
    """p * Delta^2 * lg d * lg c with unit constant."""
    return p * max(1, degree) ** 2 * lg(dimension) * lg(coefficient)


@dataclass
class ShadowReport:
    registers: dict[int, RegShadow]
    degree: int
    dimension: int
    coefficient: int
    input_bits: int
    max_observed_bits: int
    outcome: str
    steps: int
    history: list[tuple[int, RegShadow, int]] = field(default_factory=list, repr=False)

    @property
    def bound(self) -> int:
        return lemma_bound(self.input_bits, self.degree, self.dimension, self.coefficient)

    def as_dict(self) -> dict:
        return {
            "degree": self.degree,
            "dimension": self.dimension,
            "coefficient": self.coefficient,
            "input_bits": self.input_bits,
            "max_observed_bits": self.max_observed_bits,
            "bound": self.bound,
            "outcome": self.outcome,
            "steps": self.steps,
        }


def shadow_execute(
    program: Program,
    reals: Sequence,
    words: Sequence = (),
    cfg: MachineConfig | None = None,
) -> ShadowReport:
    """Run ``program`` and its degree shadow in lockstep along the concrete path.

    The control path of a real RAM depends on the input values, so the shadow
    follows the branches the machine actually takes on ``(reals, words)``.
    ``history`` records ``(t, shadow, bit length)`` for every real write.
    """
    if any(ins.op == "RSQRT" for ins in program.instructions):
        raise SqrtNotSupportedInShadow("square root is excluded from the degree shadow")
    if cfg is None:
        cfg = MachineConfig(w=8)
    reals = [parse_rational(a) for a in reals]
    m = Machine(program, cfg)
    m.load(reals, words)
    sh: dict[int, RegShadow] = {i: RegShadow.variable(i) for i in range(len(reals))}
    get = lambda i: sh.get(i, ZERO)  # noqa: E731
    history: list[tuple[int, RegShadow, int]] = []
    input_bits = max((bit_length_rational(a) for a in reals), default=1)
    observed = input_bits
    deg = max((s.degree for s in sh.values()), default=0)
    dim = max((s.dimension for s in sh.values()), default=0)
    coef = 1
    outcome = "FUEL_EXHAUSTED"
    t = 0
    try:
        for t in range(1, cfg.fuel + 1):
            ins = program[m.pc]
            op, a = ins.op, ins.args
            new = None
            if op in ("RZERO", "RONE", "RCONSTW", "RCASTW"):
                value = {"RZERO": 0, "RONE": 1}.get(op)
                if value is None:
                    value = a[1] if op == "RCONSTW" else m.W.get(a[1], 0)
                new = RegShadow.constant(value)
            elif op == "RMOV":
                new = get(a[1])
            elif op == "RSTORE":
                new = get(a[1])
            elif op == "RLOAD":
                new = get(m.W.get(a[1], 0))
            elif op == "RADD":
                new = get(a[1]).add(get(a[2]))
            elif op == "RSUB":
                new = get(a[1]).sub(get(a[2]))
            elif op == "RMUL":
                new = get(a[1]).mul(get(a[2]))
            elif op == "RDIV":
                new = get(a[1]).div(get(a[2]))
            step = m.step(t)
            for kind, idx, v in step.writes:
                if kind == "R":
                    bits = bit_length_rational(v)
                    observed = max(observed, bits)
                    sh[idx] = new
                    history.append((t, new, bits))
                    deg, dim, coef = max(deg, new.degree), max(dim, new.dimension), max(coef, new.coefficient)
            if op in TERMINALS:
                outcome = op
                break
    except MachineError as exc:
        outcome = f"ERROR:{type(exc).__name__}"
    return ShadowReport(sh, deg, dim, coef, input_bits, observed, outcome, t, history)


# ---------------------------------------------------------------- monitor

MONITOR_SHAPE_OPS = ("RZERO", "RONE", "RCONSTW", "RMOV", "RADD", "RSUB", "RMUL", "RDIV")


@dataclass(frozen=True)
class MonitorCase:
    program: Program
    reals: tuple
    report: ShadowReport


@dataclass(frozen=True)
class MonitorFit:
    kappa0: int
    kappa1: Fraction
    cases: int
    violations: int
    worst_ratio: Fraction

    def as_dict(self) -> dict:
        return {
            "kappa0": self.kappa0,
            "kappa1": str(self.kappa1),
            "cases": self.cases,
            "violations": self.violations,
            "worst_ratio": float(self.worst_ratio),
        }


def monitor_cases(seed: int, count: int, max_p: int = 16) -> list[MonitorCase]:
    """Random forward-only sqrt-free programs with rational inputs of bit length <= max_p."""
    from .exact import derive_rng
    from .randprog import ProgramShape, random_program, random_rational

    out = []
    for i in range(count):
        rng = derive_rng(seed, "lemma-monitor", i)
        # resample until the run reaches a terminal, so every case exercises its whole path
        while True:
            shape = ProgramShape(length=rng.randint(4, 20), memory=8, w=3, ops=MONITOR_SHAPE_OPS, forward_only=True)
            program = random_program(rng, shape)
            p = rng.randint(2, max_p)
            reals = tuple(random_rational(rng, max_bits=p // 2) for _ in range(rng.randint(1, 4)))
            rep = shadow_execute(program, reals, (), MachineConfig(w=3, fuel=100))
            if not rep.outcome.startswith("ERROR"):
                break
        out.append(MonitorCase(program, reals, rep))
    return out


def fit_kappa1(cases: Sequence[MonitorCase], kappa0: int = 4) -> Fraction:
    """Smallest multiple of 1/4 with observed <= kappa1 * bound + kappa0 on every case."""
    worst = max((Fraction(c.report.max_observed_bits - kappa0, c.report.bound) for c in cases), default=Fraction(0))
    return Fraction(math.ceil(max(worst, Fraction(0)) * 4), 4)


def check_monitor(cases: Sequence[MonitorCase], kappa1: Fraction, kappa0: int = 4) -> MonitorFit:
    violations = sum(c.report.max_observed_bits > kappa1 * c.report.bound + kappa0 for c in cases)
    worst = max((Fraction(c.report.max_observed_bits, c.report.bound) for c in cases), default=Fraction(0))
    return MonitorFit(kappa0, kappa1, len(cases), violations, worst)
