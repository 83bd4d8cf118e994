"""Exact real RAM interpreter, ETR compiler and bit-complexity experiments."""
from .exact import Rational, bit_length_int, bit_length_rational, parse_rational, snap
from .machine import MachineConfig, Outcome, Program, execute, parse_program

__all__ = [
    "MachineConfig",
    "Outcome",
    "Program",
    "Rational",
    "bit_length_int",
    "bit_length_rational",
    "execute",
    "parse_program",
    "parse_rational",
    "snap",
]

__version__ = "0.1.0"
