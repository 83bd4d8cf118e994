"""Random real RAM programs and inputs for differential and property tests."""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .machine import OPCODES, TERMINALS, Instruction, Program

ALL_OPS = tuple(OPCODES)
SQRT_FREE_REAL_OPS = ("RZERO", "RONE", "RCONSTW", "RCASTW", "RMOV", "RADD", "RSUB", "RMUL", "RDIV")


@dataclass(frozen=True)
class ProgramShape:
    length: int = 12
    memory: int = 16
    w: int = 4
    ops: tuple = ALL_OPS
    forward_only: bool = False
    accept_bias: float = 0.5


def _operand(kind: str, shape: ProgramShape, rng: random.Random, line: int) -> int:
    if kind == "r":
        return rng.randrange(shape.memory)
    if kind == "c":
        return rng.randrange(1 << shape.w)
    lo = line + 1 if shape.forward_only else 1
    return rng.randint(min(lo, shape.length), shape.length)


def random_program(rng: random.Random, shape: ProgramShape) -> Program:
    """``shape.length`` instructions; the last one is a terminal."""
    body = []
    for line in range(1, shape.length):
        op = rng.choice(shape.ops)
        if op == "GOTO" and shape.forward_only and line == shape.length - 1:
            op = "HALT"
        args = tuple(_operand(k, shape, rng, line) for k in OPCODES[op])
        body.append(Instruction(op, args, line))
    last = "ACCEPT" if rng.random() < shape.accept_bias else rng.choice(TERMINALS)
    body.append(Instruction(last, (), shape.length))
    return Program(tuple(body), {}, name="random")


def random_rational(rng: random.Random, max_bits: int = 4, signed: bool = True) -> Fraction:
    num = rng.randrange(1 << max_bits)
    den = rng.randrange(1, 1 << max_bits)
    x = Fraction(num, den)
    return -x if signed and rng.random() < 0.5 else x


def random_words(rng: random.Random, count: int, w: int) -> list[int]:
    return [rng.randrange(1 << w) for _ in range(count)]
