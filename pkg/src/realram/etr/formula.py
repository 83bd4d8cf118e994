"""Quantifier-free ETR formulas over {0, 1, +, *, =, <=, <, and, or, not}.

Nodes are plain tuples ``(tag, *children)`` so that formulas with hundreds of
thousands of nodes stay cheap to build and walk:

    ("0",) ("1",)            constants
    ("v", name)              variable; ``name`` is a hashable tag tuple
    ("+", a, b, ...)         n-ary sum        ("*", a, b, ...) n-ary product
    ("=", a, b) ("<=", a, b) ("<", a, b)
    ("and", f, g, ...) ("or", f, g, ...) ("not", f)

n-ary nodes stand for the explicit left-nested binary chain; node counts are
reported for that binary form.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping

from ..exact import format_rational, parse_rational

ZERO = ("0",)
ONE = ("1",)
TRUE = ("=", ZERO, ZERO)
FALSE = ("=", ZERO, ONE)

TERM_OPS = ("+", "*")
REL_OPS = ("=", "<=", "<")
BOOL_OPS = ("and", "or", "not")


class UnboundVariable(KeyError):
    pass


class FormulaSyntaxError(ValueError):
    pass


def var(*tag) -> tuple:
    return ("v", tuple(tag))


def add(*xs):
    if not xs:
        return ZERO
    return xs[0] if len(xs) == 1 else ("+", *xs)


def mul(*xs):
    if len(xs) == 1:
        return xs[0]
    return ("*", *xs)


def eq(a, b):
    return ("=", a, b)


def le(a, b):
    return ("<=", a, b)


def lt(a, b):
    return ("<", a, b)


def and_(*fs):
    if not fs:
        return TRUE
    return fs[0] if len(fs) == 1 else ("and", *fs)


def or_(*fs):
    return fs[0] if len(fs) == 1 else ("or", *fs)


def not_(f):
    return ("not", f)


def implies(a, b):
    return or_(not_(a), b)


def ite(cond, then, other):
    """(A and B) or (not A and C)."""
    return or_(and_(cond, then), and_(not_(cond), other))


def const(n: int):
    """Integer literal built from 0, 1, + and * (binary Horner form)."""
    if n < 0:
        raise ValueError("ETR has no negative literals")
    if n <= 1:
        return ONE if n else ZERO
    two = ("+", ONE, ONE)
    hi = const(n >> 1)
    head = two if hi == ONE else ("*", two, hi)
    return ("+", head, ONE) if n & 1 else head


def var_name(tag: tuple) -> str:
    """Injective printable name: parts joined by '_', nested tags wrapped in '__'."""
    parts = []
    for p in tag:
        if isinstance(p, tuple):
            parts.append("__" + var_name(p) + "__")
        else:
            parts.append(str(p))
    return "_".join(parts)


def iter_nodes(node) -> Iterator[tuple]:
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if n[0] != "v":
            stack.extend(reversed(n[1:]))


def free_variables(node) -> list[tuple]:
    seen: dict[tuple, None] = {}
    for n in iter_nodes(node):
        if n[0] == "v":
            seen.setdefault(n[1], None)
    return list(seen)


@dataclass(frozen=True)
class EtrFormula:
    variables: tuple
    body: tuple

    @classmethod
    def close(cls, body) -> "EtrFormula":
        return cls(tuple(free_variables(body)), body)

    def __post_init__(self):
        names = set(self.variables)
        if len(names) != len(self.variables):
            raise ValueError("duplicate existential variable")

    def check(self) -> None:
        """Validate arities and that every body variable is quantified."""
        names = set(self.variables)
        for n in iter_nodes(self.body):
            tag = n[0]
            if tag == "v":
                if n[1] not in names:
                    raise ValueError(f"unquantified variable {var_name(n[1])}")
            elif tag in ("0", "1"):
                if len(n) != 1:
                    raise ValueError("constant with children")
            elif tag in REL_OPS:
                if len(n) != 3:
                    raise ValueError(f"{tag} needs two operands")
            elif tag == "not":
                if len(n) != 2:
                    raise ValueError("not needs one operand")
            elif tag in TERM_OPS or tag in ("and", "or"):
                if len(n) < 3:
                    raise ValueError(f"{tag} needs at least two operands")
            else:
                raise ValueError(f"unknown node {tag!r}")


def _term(node, env: Mapping) -> Fraction:
    tag = node[0]
    if tag == "v":
        try:
            return env[node[1]]
        except KeyError:
            raise UnboundVariable(var_name(node[1])) from None
    if tag == "0":
        return Fraction(0)
    if tag == "1":
        return Fraction(1)
    if tag == "+":
        total = Fraction(0)
        for c in node[1:]:
            total += _term(c, env)
        return total
    if tag == "*":
        prod = Fraction(1)
        for c in node[1:]:
            prod *= _term(c, env)
        return prod
    raise ValueError(f"not a term: {tag!r}")


def _truth(node, env: Mapping) -> bool:
    tag = node[0]
    if tag == "and":
        return all(_truth(c, env) for c in node[1:])
    if tag == "or":
        return any(_truth(c, env) for c in node[1:])
    if tag == "not":
        return not _truth(node[1], env)
    if tag == "=":
        return _term(node[1], env) == _term(node[2], env)
    if tag == "<=":
        return _term(node[1], env) <= _term(node[2], env)
    if tag == "<":
        return _term(node[1], env) < _term(node[2], env)
    raise ValueError(f"not a formula: {tag!r}")


def evaluate(formula, assignment: Mapping) -> bool:
    """Exact truth value of the body under ``assignment`` (tag -> Fraction)."""
    body = formula.body if isinstance(formula, EtrFormula) else formula
    if isinstance(formula, EtrFormula):
        missing = [v for v in formula.variables if v not in assignment]
        if missing:
            raise UnboundVariable(var_name(missing[0]))
    return _truth(body, assignment)


def formula_stats(formula) -> dict:
    """Variable count, node count (binary-expanded) and tree depth."""
    body = formula.body if isinstance(formula, EtrFormula) else formula
    nvars = len(formula.variables) if isinstance(formula, EtrFormula) else len(free_variables(body))
    nodes = 0
    depth = 0
    stack = [(body, 1)]
    while stack:
        n, d = stack.pop()
        depth = max(depth, d)
        if n[0] == "v" or n[0] in ("0", "1"):
            nodes += 1
            continue
        nodes += max(1, len(n) - 2)
        stack.extend((c, d + 1) for c in n[1:])
    return {"variables": nvars, "nodes": nodes, "depth": depth}


# ---------------------------------------------------------------- text formats

def _sexpr(node, out: list) -> None:
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, str):
            out.append(n)
            continue
        tag = n[0]
        if tag == "v":
            out.append(var_name(n[1]))
        elif tag in ("0", "1"):
            out.append(tag)
        else:
            stack.append(")")
            for c in reversed(n[1:]):
                stack.append(c)
            out.append("(" + tag)


def to_sexpr(node) -> str:
    out: list[str] = []
    _sexpr(node, out)
    text = " ".join(out)
    return text.replace("( ", "(").replace(" )", ")")


def to_text(formula: EtrFormula) -> str:
    names = " ".join(var_name(v) for v in formula.variables)
    return f"(exists ({names}) {to_sexpr(formula.body)})\n"


def _tokenize(text: str) -> list[str]:
    return text.replace("(", " ( ").replace(")", " ) ").split()


def _read(tokens: list[str], pos: int):
    tok = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while tokens[pos] != ")":
            item, pos = _read(tokens, pos)
            items.append(item)
        return items, pos + 1
    if tok == ")":
        raise FormulaSyntaxError("unexpected ')'")
    return tok, pos + 1


def read_sexprs(text: str) -> list:
    tokens = _tokenize(text)
    out, pos = [], 0
    try:
        while pos < len(tokens):
            item, pos = _read(tokens, pos)
            out.append(item)
    except IndexError:
        raise FormulaSyntaxError("unbalanced parentheses") from None
    return out


_SMT_ALIASES = {"0.0": "0", "1.0": "1"}


def _build(expr, lookup: Mapping[str, tuple]):
    if isinstance(expr, str):
        expr = _SMT_ALIASES.get(expr, expr)
        if expr in ("0", "1"):
            return (expr,)
        if expr not in lookup:
            raise FormulaSyntaxError(f"undeclared variable {expr!r}")
        return ("v", lookup[expr])
    if not expr:
        raise FormulaSyntaxError("empty application")
    head, *args = expr
    if head not in TERM_OPS + REL_OPS + BOOL_OPS:
        raise FormulaSyntaxError(f"unknown operator {head!r}")
    return (head, *(_build(a, lookup) for a in args))


def parse_text(text: str) -> EtrFormula:
    """Inverse of :func:`to_text`.  Variable tags come back as 1-tuples of names."""
    items = read_sexprs(text)
    if len(items) != 1 or not isinstance(items[0], list) or items[0][:1] != ["exists"] or len(items[0]) != 3:
        raise FormulaSyntaxError("expected (exists (vars...) body)")
    _, names, body = items[0]
    lookup = {n: (n,) for n in names}
    return EtrFormula(tuple(lookup[n] for n in names), _build(body, lookup))


def export_smtlib(formula: EtrFormula) -> str:
    lines = ["(set-logic QF_NRA)"]
    lines += [f"(declare-const {var_name(v)} Real)" for v in formula.variables]
    lines.append(f"(assert {to_sexpr(formula.body)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def parse_smtlib(text: str) -> EtrFormula:
    """Read back the subset of SMT-LIB2 emitted by :func:`export_smtlib`."""
    names: list[str] = []
    asserts = []
    for cmd in read_sexprs(text):
        if not isinstance(cmd, list) or not cmd:
            raise FormulaSyntaxError(f"bad command {cmd!r}")
        if cmd[0] == "declare-const":
            if len(cmd) != 3 or cmd[2] != "Real":
                raise FormulaSyntaxError(f"only Real constants are supported: {cmd}")
            names.append(cmd[1])
        elif cmd[0] == "declare-fun":
            if len(cmd) != 4 or cmd[2] != [] or cmd[3] != "Real":
                raise FormulaSyntaxError(f"only nullary Real functions are supported: {cmd}")
            names.append(cmd[1])
        elif cmd[0] == "assert":
            asserts.append(cmd[1])
        elif cmd[0] in ("set-logic", "check-sat", "set-info", "set-option", "exit", "get-model"):
            continue
        else:
            raise FormulaSyntaxError(f"unsupported command {cmd[0]!r}")
    lookup = {n: (n,) for n in names}
    bodies = [_build(a, lookup) for a in asserts]
    body = bodies[0] if len(bodies) == 1 else and_(*bodies)
    return EtrFormula(tuple(lookup[n] for n in names), body)


def rename(formula: EtrFormula) -> EtrFormula:
    """Replace structured tags by their printed names (as parse_text yields)."""
    def go(n):
        if n[0] == "v":
            return ("v", (var_name(n[1]),))
        if n[0] in ("0", "1"):
            return n
        return (n[0], *(go(c) for c in n[1:]))

    return EtrFormula(tuple((var_name(v),) for v in formula.variables), go(formula.body))


def write_witness(assignment: Mapping, variables=None) -> str:
    keys = variables if variables is not None else assignment.keys()
    return "".join(f"{var_name(k)} {format_rational(Fraction(assignment[k]))}\n" for k in keys)


def read_witness(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"witness line {lineno}: expected 'name value'")
        out[(parts[0],)] = parse_rational(parts[1])
    return out
