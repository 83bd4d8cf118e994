"""Real RAM virtual machine with word and exact-real register files.

Programs are written in a small assembly language, one instruction per line::

    # comments start with '#'
    .name sum
    loop: WJLT 1 0 body
          HALT

Jump targets are 1-based instruction indices or labels.  Inputs are loaded as
``R[0..n-1] = reals`` and ``W[0..m-1] = words``; every other register starts
at zero.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .exact import bit_length_int, format_rational, parse_rational, snap_vector

# opcode -> operand kinds: "r" register index, "c" word constant, "l" jump target
OPCODES: dict[str, str] = {
    "WCONST": "rc",
    "WMOV": "rr",
    "WSTORE": "rr",
    "WLOAD": "rr",
    "WADD": "rrr",
    "WSUB": "rrr",
    "WMULLO": "rrr",
    "WMULHI": "rrr",
    "WDIV": "rrr",
    "WMOD": "rrr",
    "WNAND": "rrr",
    "RZERO": "r",
    "RONE": "r",
    "RCONSTW": "rc",
    "RCASTW": "rr",
    "RMOV": "rr",
    "RSTORE": "rr",
    "RLOAD": "rr",
    "RADD": "rrr",
    "RSUB": "rrr",
    "RMUL": "rrr",
    "RDIV": "rrr",
    "RSQRT": "rr",
    "WJEQ": "rrl",
    "WJLT": "rrl",
    "RJZ": "rl",
    "RJPOS": "rl",
    "GOTO": "l",
    "HALT": "",
    "ACCEPT": "",
    "REJECT": "",
}

WORD_ARITH = ("WADD", "WSUB", "WMULLO", "WMULHI", "WDIV", "WMOD", "WNAND")
REAL_ARITH = ("RADD", "RSUB", "RMUL", "RDIV")
COMPARISONS = ("WJEQ", "WJLT", "RJZ", "RJPOS")
TERMINALS = ("HALT", "ACCEPT", "REJECT")

DEFAULT_FUEL = 10**6
MAX_MEMORY = 1 << 16


class MachineError(Exception):
    """Base class for runtime faults of the real RAM."""


class DivisionByZero(MachineError):
    pass


class AddressOutOfRange(MachineError):
    pass


class UnsupportedExactRoot(MachineError):
    pass


class NegativeSquareRoot(MachineError):
    pass


class ConstantOutOfRange(MachineError):
    pass


class InvalidInput(MachineError):
    pass


class FuelExhausted(MachineError):
    pass


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Instruction:
    op: str
    args: tuple[int, ...] = ()
    source_line: int = 0

    def __str__(self):
        return " ".join([self.op, *map(str, self.args)])

    @property
    def target(self) -> Optional[int]:
        return self.args[-1] if "l" in OPCODES[self.op] else None


@dataclass(frozen=True)
class Program:
    instructions: tuple[Instruction, ...]
    labels: dict = field(default_factory=dict, compare=False)
    name: str = "program"
    n_reals: Optional[int] = None
    n_words: Optional[int] = None

    def __post_init__(self):
        L = len(self.instructions)
        if L == 0:
            raise ValueError("empty program")
        for pos, ins in enumerate(self.instructions, 1):
            if ins.op not in OPCODES:
                raise ValueError(f"instruction {pos}: unknown opcode {ins.op}")
            if len(ins.args) != len(OPCODES[ins.op]):
                raise ValueError(f"instruction {pos}: {ins.op} takes {len(OPCODES[ins.op])} operands")
            t = ins.target
            if t is not None and not 1 <= t <= L:
                raise ValueError(f"instruction {pos}: jump target {t} outside [1, {L}]")
        # control may never run past line L
        if self.instructions[-1].op not in (*TERMINALS, "GOTO"):
            raise ValueError(f"last instruction must be HALT, ACCEPT, REJECT or GOTO, got {self.instructions[-1].op}")

    def __len__(self):
        return len(self.instructions)

    def __getitem__(self, pc: int) -> Instruction:
        return self.instructions[pc - 1]

    def to_text(self) -> str:
        return "\n".join(str(ins) for ins in self.instructions) + "\n"

    def max_register(self) -> int:
        m = 0
        for ins in self.instructions:
            for kind, a in zip(OPCODES[ins.op], ins.args):
                if kind == "r":
                    m = max(m, a)
        return m

    def max_constant(self) -> int:
        m = 0
        for ins in self.instructions:
            for kind, a in zip(OPCODES[ins.op], ins.args):
                if kind == "c":
                    m = max(m, a)
        return m


_LABEL = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*):\s*(.*)$")


def parse_program(text: str, name: str = "program") -> Program:
    """Parse assembly text.  Raises :class:`ParseError` naming the offending line."""
    rows: list[tuple[int, str, list[str]]] = []
    labels: dict[str, int] = {}
    meta: dict[str, object] = {"name": name}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        while True:
            m = _LABEL.match(line)
            if not m:
                break
            label = m.group(1)
            if label in labels:
                raise ParseError(lineno, f"duplicate label {label!r}")
            labels[label] = len(rows) + 1
            line = m.group(2).strip()
        if not line:
            continue
        if line.startswith("."):
            key, *rest = line.split()
            if key == ".name" and len(rest) == 1:
                meta["name"] = rest[0]
            elif key in (".reals", ".words") and len(rest) == 1 and rest[0].isdigit():
                meta[key[1:]] = int(rest[0])
            else:
                raise ParseError(lineno, f"bad directive {line!r}")
            continue
        op, *operands = line.split()
        op = op.upper()
        if op not in OPCODES:
            raise ParseError(lineno, f"unknown opcode {op!r}")
        if len(operands) != len(OPCODES[op]):
            raise ParseError(lineno, f"{op} expects {len(OPCODES[op])} operands, got {len(operands)}")
        rows.append((lineno, op, operands))

    if not rows:
        raise ParseError(max(1, len(text.splitlines())), "program has no instructions")
    L = len(rows)
    instructions = []
    for lineno, op, operands in rows:
        args = []
        for kind, tok in zip(OPCODES[op], operands):
            if kind == "l" and not tok.isdigit():
                if tok not in labels:
                    raise ParseError(lineno, f"undefined label {tok!r}")
                if labels[tok] > L:
                    raise ParseError(lineno, f"label {tok!r} points past the last instruction")
                args.append(labels[tok])
                continue
            try:
                v = int(tok)
            except ValueError:
                raise ParseError(lineno, f"operand {tok!r} is not a non-negative integer") from None
            if v < 0:
                raise ParseError(lineno, f"operand {tok!r} is negative")
            if kind == "l" and not 1 <= v <= L:
                raise ParseError(lineno, f"jump target {v} outside [1, {L}]")
            args.append(v)
        instructions.append(Instruction(op, tuple(args), lineno))
    if instructions[-1].op not in (*TERMINALS, "GOTO"):
        raise ParseError(rows[-1][0], "program must end with HALT, ACCEPT, REJECT or GOTO")
    return Program(
        tuple(instructions),
        labels=labels,
        name=str(meta["name"]),
        n_reals=meta.get("reals"),
        n_words=meta.get("words"),
    )


@dataclass(frozen=True)
class MachineConfig:
    w: int
    fuel: int = DEFAULT_FUEL
    memory: Optional[int] = None

    def __post_init__(self):
        if self.w < 1:
            raise ValueError("word size must be >= 1")
        if self.fuel < 1:
            raise ValueError("fuel must be >= 1")
        if self.memory is not None and not 1 <= self.memory <= (1 << self.w):
            raise ValueError("memory bound must lie in [1, 2^w]")

    @property
    def memory_bound(self) -> int:
        return self.memory if self.memory is not None else min(1 << self.w, MAX_MEMORY)

    @property
    def modulus(self) -> int:
        return 1 << self.w


class Outcome(str, Enum):
    ACCEPT = "ACCEPT"
    REJECT = "REJECT"
    HALT = "HALT"
    FUEL_EXHAUSTED = "FUEL_EXHAUSTED"
    ERROR = "ERROR"


@dataclass(frozen=True)
class Step:
    t: int
    pc: int
    instruction: Instruction
    branch: Optional[bool]
    writes: tuple[tuple[str, int, object], ...]


@dataclass
class ExecutionTrace:
    steps: list[Step]
    outcome: Outcome
    final_words: dict[int, int]
    final_reals: dict[int, Fraction]
    error: Optional[MachineError] = None

    def __len__(self):
        return len(self.steps)

    def signature(self) -> tuple[bool, ...]:
        return tuple(s.branch for s in self.steps if s.branch is not None)

    def to_text(self) -> str:
        lines = []
        for s in self.steps:
            row = f"{s.t} {s.pc} {s.instruction.op}"
            if s.branch is not None:
                row += f" branch={int(s.branch)}"
            lines.append(row)
        return "\n".join(lines) + ("\n" if lines else "")

    def register_values(self) -> Iterable[object]:
        for s in self.steps:
            for _, _, v in s.writes:
                yield v


def word_binop(op: str, y: int, z: int, w: int) -> int:
    """Semantics of the word arithmetic and boolean instructions, all mod 2^w."""
    mod = 1 << w
    if op == "WADD":
        return (y + z) % mod
    if op == "WSUB":
        return (y - z) % mod
    if op == "WMULLO":
        return (y * z) % mod
    if op == "WMULHI":
        return (y * z) >> w
    if op == "WDIV":
        if z == 0:
            raise DivisionByZero("word division by zero")
        return y // z
    if op == "WMOD":
        if z == 0:
            raise DivisionByZero("word remainder by zero")
        return y % z
    if op == "WNAND":
        return (mod - 1) ^ (y & z)
    raise ValueError(f"not a word arithmetic opcode: {op}")


def exact_sqrt(y: Fraction) -> Fraction:
    if y < 0:
        raise NegativeSquareRoot(f"square root of negative value {y}")
    p, q = y.numerator, y.denominator
    rp, rq = math.isqrt(p), math.isqrt(q)
    if rp * rp != p or rq * rq != q:
        raise UnsupportedExactRoot(f"square root of {format_rational(y)} is not rational")
    return Fraction(rp, rq)


def real_binop(op: str, y: Fraction, z: Fraction) -> Fraction:
    if op == "RADD":
        return y + z
    if op == "RSUB":
        return y - z
    if op == "RMUL":
        return y * z
    if op == "RDIV":
        if z == 0:
            raise DivisionByZero("real division by zero")
        return y / z
    raise ValueError(f"not a real arithmetic opcode: {op}")


def _check_program(program: Program, cfg: MachineConfig) -> None:
    if program.max_register() >= cfg.memory_bound:
        raise AddressOutOfRange(
            f"register {program.max_register()} beyond memory bound {cfg.memory_bound}"
        )
    if program.max_constant() >= cfg.modulus:
        raise ConstantOutOfRange(f"constant {program.max_constant()} is not a {cfg.w}-bit word")


def _check_input(reals: Sequence, words: Sequence, cfg: MachineConfig, program: Program) -> None:
    n, m = len(reals), len(words)
    if program.n_reals is not None and program.n_reals != n:
        raise InvalidInput(f"{program.name} expects {program.n_reals} reals, got {n}")
    if program.n_words is not None and program.n_words != m:
        raise InvalidInput(f"{program.name} expects {program.n_words} words, got {m}")
    if n + m > 1 and cfg.w < math.ceil(math.log2(n + m)):
        raise InvalidInput(f"word size {cfg.w} violates w >= ceil(log2({n + m}))")
    if max(n, m) > cfg.memory_bound:
        raise InvalidInput("input longer than the register file")
    for b in words:
        if not 0 <= int(b) < cfg.modulus:
            raise InvalidInput(f"input word {b} is not a {cfg.w}-bit word")


class Machine:
    """Single-threaded interpreter; create one per run."""

    def __init__(self, program: Program, cfg: MachineConfig):
        _check_program(program, cfg)
        self.program = program
        self.cfg = cfg
        self.W: dict[int, int] = {}
        self.R: dict[int, Fraction] = {}
        self.pc = 1

    def load(self, reals: Sequence, words: Sequence) -> None:
        _check_input(reals, words, self.cfg, self.program)
        self.W = {i: int(b) for i, b in enumerate(words) if int(b)}
        self.R = {i: parse_rational(a) for i, a in enumerate(reals) if parse_rational(a)}
        self.pc = 1

    def _addr(self, a: int) -> int:
        if not 0 <= a < self.cfg.memory_bound:
            raise AddressOutOfRange(f"address {a} beyond memory bound {self.cfg.memory_bound}")
        return a

    def step(self, t: int) -> Step:
        ins = self.program[self.pc]
        op, a = ins.op, ins.args
        W, R = self.W, self.R
        pc = self.pc
        branch = None
        writes: list[tuple[str, int, object]] = []
        next_pc = pc + 1

        def setw(i, v):
            W[i] = v
            writes.append(("W", i, v))

        def setr(i, v):
            R[i] = v
            writes.append(("R", i, v))

        if op == "WCONST":
            setw(a[0], a[1])
        elif op == "WMOV":
            setw(a[0], W.get(a[1], 0))
        elif op == "WSTORE":
            setw(self._addr(W.get(a[0], 0)), W.get(a[1], 0))
        elif op == "WLOAD":
            setw(a[0], W.get(self._addr(W.get(a[1], 0)), 0))
        elif op in WORD_ARITH:
            setw(a[0], word_binop(op, W.get(a[1], 0), W.get(a[2], 0), self.cfg.w))
        elif op == "RZERO":
            setr(a[0], Fraction(0))
        elif op == "RONE":
            setr(a[0], Fraction(1))
        elif op == "RCONSTW":
            setr(a[0], Fraction(a[1]))
        elif op == "RCASTW":
            setr(a[0], Fraction(W.get(a[1], 0)))
        elif op == "RMOV":
            setr(a[0], R.get(a[1], Fraction(0)))
        elif op == "RSTORE":
            setr(self._addr(W.get(a[0], 0)), R.get(a[1], Fraction(0)))
        elif op == "RLOAD":
            setr(a[0], R.get(self._addr(W.get(a[1], 0)), Fraction(0)))
        elif op in REAL_ARITH:
            setr(a[0], real_binop(op, R.get(a[1], Fraction(0)), R.get(a[2], Fraction(0))))
        elif op == "RSQRT":
            setr(a[0], exact_sqrt(R.get(a[1], Fraction(0))))
        elif op == "WJEQ":
            branch = W.get(a[0], 0) == W.get(a[1], 0)
        elif op == "WJLT":
            branch = W.get(a[0], 0) < W.get(a[1], 0)
        elif op == "RJZ":
            branch = R.get(a[0], Fraction(0)) == 0
        elif op == "RJPOS":
            branch = R.get(a[0], Fraction(0)) > 0
        elif op == "GOTO":
            next_pc = a[0]
        elif op in TERMINALS:
            next_pc = 0
        if branch:
            next_pc = a[-1]
        self.pc = next_pc
        return Step(t, pc, ins, branch, tuple(writes))


def execute(
    program: Program,
    reals: Sequence = (),
    words: Sequence = (),
    cfg: Optional[MachineConfig] = None,
    *,
    raise_errors: bool = True,
) -> tuple[Outcome, ExecutionTrace]:
    """Run ``program`` exactly.

    Running out of fuel is reported as :attr:`Outcome.FUEL_EXHAUSTED`.  Other
    machine faults raise unless ``raise_errors`` is false, in which case they
    are recorded on the trace with outcome :attr:`Outcome.ERROR`.
    """
    if cfg is None:
        cfg = MachineConfig(w=max(8, math.ceil(math.log2(max(2, len(reals) + len(words))))))
    m = Machine(program, cfg)
    m.load(reals, words)
    steps: list[Step] = []
    outcome = Outcome.FUEL_EXHAUSTED
    error = None
    try:
        for t in range(1, cfg.fuel + 1):
            op = program[m.pc].op
            steps.append(m.step(t))
            if op in TERMINALS:
                outcome = Outcome(op)
                break
    except MachineError as exc:
        if raise_errors:
            raise
        outcome, error = Outcome.ERROR, exc
    trace = ExecutionTrace(steps, outcome, dict(m.W), dict(m.R), error)
    return outcome, trace


def comparison_signature(trace: ExecutionTrace) -> tuple[bool, ...]:
    return trace.signature()


def equivalent(program: Program, inp1, inp2, cfg: MachineConfig) -> bool:
    """Whether two ``(reals, words)`` inputs agree at every executed comparison."""
    _, t1 = execute(program, *inp1, cfg)
    _, t2 = execute(program, *inp2, cfg)
    return t1.signature() == t2.signature()


def snapped_bit_complexity(
    program: Program,
    g: Sequence,
    words: Sequence = (),
    cfg: Optional[MachineConfig] = None,
    wmax: int = 64,
) -> Optional[int]:
    """Smallest grid exponent w' <= wmax whose snap of ``g`` is equivalent to ``g``.

    This is an upper bound on the input bit complexity, not the infimum over
    all equivalent rational inputs.  Snapped inputs that fault count as
    non-equivalent; a fault on ``g`` itself propagates.
    """
    if wmax < 1:
        raise ValueError("wmax must be >= 1")
    _, base = execute(program, g, words, cfg)
    target = base.signature()
    for wp in range(1, wmax + 1):
        _, trace = execute(program, snap_vector(g, wp), words, cfg, raise_errors=False)
        if trace.outcome is not Outcome.ERROR and trace.signature() == target:
            return wp
    return None


def max_register_bits(trace: ExecutionTrace, reals: Sequence = ()) -> int:
    """Largest bit length of any real value seen (inputs and writes)."""
    from .exact import bit_length_rational

    best = max((bit_length_rational(parse_rational(a)) for a in reals), default=1)
    for kind, _, v in (w for s in trace.steps for w in s.writes):
        if kind == "R":
            best = max(best, bit_length_rational(v))
        else:
            best = max(best, bit_length_int(v))
    return best


def read_input_file(text: str) -> tuple[list[Fraction], list[int], int]:
    """Parse ``"n m w"`` followed by n rationals and m words (whitespace separated)."""
    toks = text.split()
    if len(toks) < 3:
        raise ValueError("input file needs a header 'n m w'")
    try:
        n, m, w = (int(t) for t in toks[:3])
    except ValueError:
        raise ValueError("input header must be three integers 'n m w'") from None
    body = toks[3:]
    if len(body) != n + m:
        raise ValueError(f"input file declares {n}+{m} values but has {len(body)}")
    reals = [parse_rational(t) for t in body[:n]]
    words = [int(t) for t in body[n:]]
    return reals, words, w
