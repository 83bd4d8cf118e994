"""Compile a real RAM program plus a fixed word instance into an ETR formula.

The formula describes a complete execution history.  Register variables
``W(i,t)``, ``R(i,t)`` and ``pc(t)`` hold the machine state after ``t`` steps
(``pc(0) = 1``); the conjunct guarded by ``pc(t-1) = l`` forces step ``t`` to
be an execution of line ``l``.  Word registers are pinned to integers with
powers-of-two bit gadgets, since the formula language only has the
constants 0 and 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from ..machine import (
    COMPARISONS,
    OPCODES,
    TERMINALS,
    MachineConfig,
    Outcome,
    Program,
    execute,
)
from .formula import (
    FALSE,
    ONE,
    ZERO,
    EtrFormula,
    add,
    and_,
    const,
    eq,
    free_variables,
    implies,
    ite,
    le,
    lt,
    mul,
    not_,
    or_,
    var,
)

DEFAULT_NODE_CAP = 10**7


class BudgetExceeded(RuntimeError):
    pass


class UnsupportedInstruction(ValueError):
    pass


class TraceMismatch(ValueError):
    pass


@dataclass(frozen=True)
class CompileBudget:
    w: int
    T: int
    n_real: int = 0
    n_word: int = 0
    memory: Optional[int] = None
    node_cap: int = DEFAULT_NODE_CAP
    collapse_frames: bool = False

    def __post_init__(self):
        if self.w < 1:
            raise ValueError("w must be >= 1")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.memory is not None and not 1 <= self.memory <= (1 << self.w):
            raise ValueError("memory bound must lie in [1, 2^w]")

    @property
    def machine_config(self) -> MachineConfig:
        return MachineConfig(w=self.w, fuel=self.T, memory=self.memory)

    @property
    def M(self) -> int:
        return self.machine_config.memory_bound


# ------------------------------------------------------------------ gadgets

def pow2(b: int):
    return var("pow2", b)


def gadget_powers_of_two(w: int):
    """(pow2(0) = 1) and pow2(b) = pow2(b-1) + pow2(b-1) for b = 1..w."""
    if w < 1:
        raise ValueError("w must be >= 1")
    return and_(eq(pow2(0), ONE), *(eq(pow2(b), add(pow2(b - 1), pow2(b - 1))) for b in range(1, w + 1)))


def bit_var(owner: tuple, b: int):
    return var("bit", owner, b)


def gadget_is_word(x, owner: tuple, w: int):
    """X = sum_b bit_b * pow2(b) and bit_b * bit_b = bit_b for b < w.

    ``owner`` names the bit variables; each call site needs its own owner.
    """
    bits = [bit_var(owner, b) for b in range(w)]
    return and_(
        eq(x, add(*(mul(bits[b], pow2(b)) for b in range(w)))),
        *(eq(mul(bits[b], bits[b]), bits[b]) for b in range(w)),
    )


def gadget_equals(x, j: int, w: int):
    """X = sum of pow2(b) over the one bits of j; j = 0 gives X = 0."""
    if not 0 <= j < (1 << w):
        raise ValueError(f"{j} is not a {w}-bit word")
    return eq(x, add(*(pow2(b) for b in range(w) if (j >> b) & 1)))


# ------------------------------------------------------------------ naming

class _Names:
    def __init__(self, budget: CompileBudget, written_w: set, written_r: set, collapse: bool):
        self.collapse = collapse
        self.ww = written_w
        self.wr = written_r

    def W(self, i: int, t: int):
        if self.collapse and i not in self.ww:
            t = 0
        return var("W", i, t)

    def R(self, i: int, t: int):
        if self.collapse and i not in self.wr:
            t = 0
        return var("R", i, t)


def pc(t: int):
    return var("pc", t)


def _written_sets(program: Program, M: int) -> tuple[set, set]:
    ww, wr = set(), set()
    for ins in program.instructions:
        op = ins.op
        if op == "WSTORE":
            ww.update(range(M))
        elif op == "RSTORE":
            wr.update(range(M))
        elif op in TERMINALS or op in COMPARISONS or op == "GOTO":
            continue
        elif op.startswith("W"):
            ww.add(ins.args[0])
        elif op.startswith("R"):
            wr.add(ins.args[0])
    return ww, wr


def _frames(names: _Names, t: int, M: int, skip_w=(), skip_r=()):
    out = []
    for i in range(M):
        if i not in skip_w and not (names.collapse and i not in names.ww):
            out.append(eq(names.W(i, t), names.W(i, t - 1)))
    for i in range(M):
        if i not in skip_r and not (names.collapse and i not in names.wr):
            out.append(eq(names.R(i, t), names.R(i, t - 1)))
    return out


def _step(t: int):
    return eq(pc(t), add(pc(t - 1), ONE))


def update(program: Program, t: int, line: int, budget: CompileBudget, names: _Names):
    """Constraint forcing the state at time t to be line ``line`` applied to t-1."""
    ins = program[line]
    op, a = ins.op, ins.args
    w, M, T = budget.w, budget.M, budget.T
    W, R = names.W, names.R
    site = (t, line)
    step = _step(t)

    if op in ("REJECT", "HALT"):
        return FALSE
    if op == "ACCEPT":
        return and_(*(eq(pc(s), ZERO) for s in range(t, T + 1)), *_frames(names, t, M))
    if op == "GOTO":
        return and_(eq(pc(t), const(a[0])), *_frames(names, t, M))
    if op in ("WJEQ", "WJLT", "RJZ", "RJPOS"):
        if op == "WJEQ":
            cond = eq(W(a[0], t - 1), W(a[1], t - 1))
        elif op == "WJLT":
            cond = lt(W(a[0], t - 1), W(a[1], t - 1))
        elif op == "RJZ":
            cond = eq(R(a[0], t - 1), ZERO)
        else:
            cond = lt(ZERO, R(a[0], t - 1))
        return and_(ite(cond, eq(pc(t), const(a[-1])), step), *_frames(names, t, M))

    if op in ("WSTORE", "RSTORE"):
        arr = W if op == "WSTORE" else R
        cases = []
        for k in range(M):
            if op == "WSTORE":
                rest = _frames(names, t, M, skip_w={k}, skip_r=range(M))
            else:
                rest = _frames(names, t, M, skip_w=range(M), skip_r={k})
            cases.append(and_(gadget_equals(W(a[0], t - 1), k, w), eq(arr(k, t), arr(a[1], t - 1)), *rest))
        other = _frames(names, t, M, skip_w=range(M)) if op == "WSTORE" else _frames(names, t, M, skip_r=range(M))
        return and_(or_(*cases), step, *other)
    if op in ("WLOAD", "RLOAD"):
        arr = W if op == "WLOAD" else R
        cases = [
            and_(gadget_equals(W(a[1], t - 1), k, w), eq(arr(a[0], t), arr(k, t - 1)))
            for k in range(M)
        ]
        skip = ({a[0]}, ()) if op == "WLOAD" else ((), {a[0]})
        return and_(or_(*cases), step, *_frames(names, t, M, *skip))

    if op.startswith("W"):
        dst = W(a[0], t)
        frames = _frames(names, t, M, skip_w={a[0]})
        if op == "WCONST":
            core = [gadget_equals(dst, a[1], w)]
        elif op == "WMOV":
            core = [eq(dst, W(a[1], t - 1))]
        else:
            y, z = W(a[1], t - 1), W(a[2], t - 1)
            if op == "WADD":
                zt = var("z", *site)
                core = [eq(zt, add(y, z)), ite(lt(zt, pow2(w)), eq(dst, zt), eq(add(dst, pow2(w)), zt))]
            elif op == "WSUB":
                zt = var("z", *site)
                core = [eq(add(zt, z), y), ite(le(ZERO, zt), eq(dst, zt), eq(dst, add(zt, pow2(w))))]
            elif op in ("WMULLO", "WMULHI"):
                u, lo = var("u", *site), var("l", *site)
                core = [
                    gadget_is_word(u, ("u", *site), w),
                    gadget_is_word(lo, ("l", *site), w),
                    eq(dst, lo if op == "WMULLO" else u),
                    eq(add(mul(u, pow2(w)), lo), mul(y, z)),
                ]
            elif op in ("WDIV", "WMOD"):
                q, r = var("q", *site), var("r", *site)
                core = [
                    gadget_is_word(q, ("q", *site), w),
                    gadget_is_word(r, ("r", *site), w),
                    eq(dst, q if op == "WDIV" else r),
                    eq(add(r, mul(z, q)), y),
                    lt(r, z),
                ]
            elif op == "WNAND":
                ox, oy, oz = ("nx", *site), ("ny", *site), ("nz", *site)
                core = [
                    gadget_is_word(dst, ox, w),
                    gadget_is_word(y, oy, w),
                    gadget_is_word(z, oz, w),
                    *(
                        eq(add(bit_var(ox, b), mul(bit_var(oy, b), bit_var(oz, b))), ONE)
                        for b in range(w)
                    ),
                ]
            else:
                raise UnsupportedInstruction(op)
        return and_(*core, step, *frames)

    if op.startswith("R"):
        dst = R(a[0], t)
        frames = _frames(names, t, M, skip_r={a[0]})
        if op == "RZERO":
            core = [eq(dst, ZERO)]
        elif op == "RONE":
            core = [eq(dst, ONE)]
        elif op == "RCONSTW":
            core = [gadget_equals(dst, a[1], w)]
        elif op == "RCASTW":
            core = [eq(dst, W(a[1], t - 1))]
        elif op == "RMOV":
            core = [eq(dst, R(a[1], t - 1))]
        elif op == "RADD":
            core = [eq(dst, add(R(a[1], t - 1), R(a[2], t - 1)))]
        elif op == "RSUB":
            core = [eq(add(dst, R(a[2], t - 1)), R(a[1], t - 1))]
        elif op == "RMUL":
            core = [eq(dst, mul(R(a[1], t - 1), R(a[2], t - 1)))]
        elif op == "RDIV":
            core = [eq(mul(dst, R(a[2], t - 1)), R(a[1], t - 1)), not_(eq(R(a[2], t - 1), ZERO))]
        elif op == "RSQRT":
            core = [eq(mul(dst, dst), R(a[1], t - 1)), le(ZERO, dst)]
        else:
            raise UnsupportedInstruction(op)
        return and_(*core, step, *frames)
    raise UnsupportedInstruction(op)


def _node_count(node) -> int:
    from .formula import formula_stats

    return formula_stats(node)["nodes"]


def estimate_nodes(program: Program, budget: CompileBudget) -> int:
    names = _Names(budget, *_written_sets(program, budget.M), budget.collapse_frames)
    per_step = sum(_node_count(update(program, 1, ln, budget, names)) + 8 for ln in range(1, len(program) + 1))
    return per_step * budget.T + budget.M * (4 * budget.w + 4)


def compile_program(program: Program, instance: Sequence[int], budget: CompileBudget) -> EtrFormula:
    """PowersOf2 and FixInput and WordsAreWords and (pc(0)=1) and Execute and pc(T)=0."""
    for ins in program.instructions:
        if ins.op not in OPCODES:
            raise UnsupportedInstruction(ins.op)
    w, T, M = budget.w, budget.T, budget.M
    budget.machine_config  # validates memory against w
    if len(instance) > M:
        raise BudgetExceeded(f"instance of length {len(instance)} exceeds memory bound {M}")
    for x in instance:
        if not 0 <= int(x) < (1 << w):
            raise ValueError(f"instance entry {x} is not a {w}-bit word")
    if program.max_register() >= M:
        raise BudgetExceeded(f"register {program.max_register()} beyond memory bound {M}")
    if program.max_constant() >= (1 << w):
        raise ValueError(f"program constant {program.max_constant()} is not a {w}-bit word")
    est = estimate_nodes(program, budget)
    if est > budget.node_cap:
        raise BudgetExceeded(f"formula would have about {est} nodes, cap is {budget.node_cap}")

    names = _Names(budget, *_written_sets(program, M), budget.collapse_frames)
    parts = [gadget_powers_of_two(w)]
    parts += [gadget_equals(names.W(i, 0), int(x), w) for i, x in enumerate(instance)]
    parts += [gadget_is_word(names.W(i, 0), ("W", i, 0), w) for i in range(M)]
    parts.append(eq(pc(0), ONE))
    L = len(program)
    for t in range(1, T + 1):
        for line in range(1, L + 1):
            parts.append(implies(eq(pc(t - 1), const(line)), update(program, t, line, budget, names)))
    parts.append(eq(pc(T), ZERO))
    body = and_(*parts)
    return EtrFormula(tuple(free_variables(body)), body)


# ------------------------------------------------------------------ witnesses

def _bits(x: int, w: int) -> list[int]:
    return [(x >> b) & 1 for b in range(w)]


def witness_from_trace(
    program: Program,
    instance: Sequence[int],
    certificate: tuple[Sequence, Sequence],
    trace,
    budget: CompileBudget,
) -> dict:
    """Total assignment derived from an execution on ``(reals, instance + words)``."""
    reals, cwords = certificate
    words = [int(x) for x in instance] + [int(x) for x in cwords]
    cfg = budget.machine_config
    _, ref = execute(program, reals, words, cfg, raise_errors=False)
    mine = [(s.pc, s.instruction, s.branch, s.writes) for s in trace.steps[: budget.T]]
    theirs = [(s.pc, s.instruction, s.branch, s.writes) for s in ref.steps]
    if mine != theirs:
        raise TraceMismatch("trace does not match this program, instance and certificate")

    w, T, M = budget.w, budget.T, budget.M
    mod = 1 << w
    env: dict = {}
    for b in range(w + 1):
        env[("pow2", b)] = Fraction(1 << b)
    Wv = [0] * M
    Rv = [Fraction(0)] * M
    for i, x in enumerate(words):
        Wv[i] = x
    for i, x in enumerate(reals):
        Rv[i] = Fraction(x)

    def snapshot(t):
        for i in range(M):
            env[("W", i, t)] = Fraction(Wv[i])
            env[("R", i, t)] = Rv[i]

    snapshot(0)
    for i in range(M):
        for b, bit in enumerate(_bits(Wv[i], w)):
            env[("bit", ("W", i, 0), b)] = Fraction(bit)
    env[("pc", 0)] = Fraction(1)
    steps = ref.steps
    halted = False
    for t in range(1, T + 1):
        L = len(program)
        for line in range(1, L + 1):
            _zero_temporaries(env, program[line].op, (t, line), w)
        if t <= len(steps) and not halted:
            s = steps[t - 1]
            op, a = s.instruction.op, s.instruction.args
            before_w = list(Wv)
            for kind, idx, v in s.writes:
                if kind == "W":
                    Wv[idx] = v
                else:
                    Rv[idx] = v
            site = (t, s.pc)
            if op in ("WADD", "WSUB"):
                y, z = before_w[a[1]], before_w[a[2]]
                env[("z",) + site] = Fraction(y + z if op == "WADD" else y - z)
            elif op in ("WMULLO", "WMULHI"):
                y, z = before_w[a[1]], before_w[a[2]]
                hi, lo = divmod(y * z, mod)
                _set_word(env, ("u",) + site, hi, w)
                _set_word(env, ("l",) + site, lo, w)
            elif op in ("WDIV", "WMOD"):
                y, z = before_w[a[1]], before_w[a[2]]
                qv, rv = divmod(y, z) if z else (0, 0)
                _set_word(env, ("q",) + site, qv, w)
                _set_word(env, ("r",) + site, rv, w)
            elif op == "WNAND":
                for tag, val in (("nx", Wv[a[0]]), ("ny", before_w[a[1]]), ("nz", before_w[a[2]])):
                    for b, bit in enumerate(_bits(val, w)):
                        env[("bit", (tag,) + site, b)] = Fraction(bit)
            if t < len(steps):
                nxt = steps[t].pc
            elif op == "ACCEPT" or ref.outcome in (Outcome.REJECT, Outcome.HALT):
                nxt = 0
            else:
                nxt = _successor(program, s)
            env[("pc", t)] = Fraction(nxt)
            if op in ("ACCEPT", "REJECT", "HALT"):
                halted = True
        else:
            env[("pc", t)] = env[("pc", t - 1)] if not halted else Fraction(0)
        snapshot(t)
    return env


def _successor(program: Program, step) -> int:
    ins = step.instruction
    if ins.op == "GOTO":
        return ins.args[0]
    if step.branch:
        return ins.args[-1]
    return step.pc + 1


def _set_word(env: dict, tag: tuple, value: int, w: int) -> None:
    env[tag] = Fraction(value)
    for b, bit in enumerate(_bits(value, w)):
        env[("bit", tag, b)] = Fraction(bit)


def _zero_temporaries(env: dict, op: str, site: tuple, w: int) -> None:
    if op in ("WADD", "WSUB"):
        env[("z",) + site] = Fraction(0)
    elif op in ("WMULLO", "WMULHI", "WDIV", "WMOD"):
        for tag in (("u", "l") if op in ("WMULLO", "WMULHI") else ("q", "r")):
            _set_word(env, (tag,) + site, 0, w)
    elif op == "WNAND":
        for tag in ("nx", "ny", "nz"):
            for b in range(w):
                env[("bit", (tag,) + site, b)] = Fraction(0)


def active_guards(program: Program, assignment: dict, T: int) -> list[list[int]]:
    """Lines whose guard pc(t-1) = line holds, for each t = 1..T."""
    return [[ln for ln in range(1, len(program) + 1) if assignment[("pc", t - 1)] == ln] for t in range(1, T + 1)]


@dataclass(frozen=True)
class RoundTrip:
    outcome: Outcome
    value: bool
    variables: int
    nodes: int

    @property
    def consistent(self) -> bool:
        return self.value == (self.outcome is Outcome.ACCEPT)


def roundtrip(program: Program, instance: Sequence[int], certificate, budget: CompileBudget) -> RoundTrip:
    """Run, compile, build the trace witness and evaluate the formula under it."""
    from .formula import evaluate, formula_stats

    reals, cwords = certificate
    words = list(instance) + list(cwords)
    outcome, trace = execute(program, reals, words, budget.machine_config, raise_errors=False)
    formula = compile_program(program, instance, budget)
    env = witness_from_trace(program, instance, certificate, trace, budget)
    stats = formula_stats(formula)
    return RoundTrip(outcome, evaluate(formula, env), stats["variables"], stats["nodes"])
