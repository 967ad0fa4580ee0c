"""A small arithmetic expression language.

Grammar, loosest binding first::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := primary ('^' unary)?          # right associative
    primary := NUMBER | NAME | NAME '(' args ')' | '(' expr ')'

so ``-2^2 == -4`` and ``2^3^2 == 512``.  Evaluation works on floats and on
numpy arrays alike, which lets a parsed expression act as a vectorized
coefficient function or cochain evaluator.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "ExprError",
    "ExprSyntaxError",
    "UnboundVariableError",
    "DomainError",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "parse",
    "evaluate",
    "to_string",
    "free_variables",
    "FUNCTIONS",
    "CONSTANTS",
]


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    """Syntax error at byte ``offset`` of the source text."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnboundVariableError(ExprError):
    pass


class DomainError(ExprError, ArithmeticError):
    """Argument outside the domain of an operation (log of <= 0, x / 0, ...)."""


@dataclass(frozen=True)
class Num:
    value: float
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Var:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    pos: int = field(default=0, compare=False)


Expr = Union[Num, Var, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}


def _check(cond, message):
    if np.any(cond):
        raise DomainError(message)


def _log(x):
    _check(np.less_equal(x, 0), "log of a nonpositive number")
    return np.log(x)


def _sqrt(x):
    _check(np.less(x, 0), "sqrt of a negative number")
    return np.sqrt(x)


def _pow(x, y):
    x_arr, y_arr = np.asarray(x), np.asarray(y)
    _check((x_arr < 0) & (y_arr != np.round(y_arr)), "negative base with non-integer exponent")
    _check((x_arr == 0) & (y_arr < 0), "zero raised to a negative power")
    return np.power(np.asarray(x, dtype=float), y)


FUNCTIONS = {
    "sin": (1, np.sin),
    "cos": (1, np.cos),
    "tan": (1, np.tan),
    "exp": (1, np.exp),
    "log": (1, _log),
    "sqrt": (1, _sqrt),
    "abs": (1, np.abs),
    "pow": (2, _pow),
    "atan2": (2, np.arctan2),
}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z0-9_]*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(src: str):
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            start = pos + (len(src[pos:]) - len(src[pos:].lstrip()))
            raise ExprSyntaxError(f"unexpected character {src[start]!r}", start)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(src)))
    return tokens


class _Parser:
    def __init__(self, src: str):
        self.tokens = _tokenize(src)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, pos = self.peek()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", pos)
        return self.take()

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            _, op, pos = self.take()
            node = BinOp(op, node, self.term(), pos)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            _, op, pos = self.take()
            node = BinOp(op, node, self.unary(), pos)
        return node

    def unary(self):
        kind, text, pos = self.peek()
        if kind == "op" and text == "-":
            self.take()
            return Neg(self.unary(), pos)
        if kind == "op" and text == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.primary()
        kind, text, pos = self.peek()
        if kind == "op" and text == "^":
            self.take()
            return BinOp("^", base, self.unary(), pos)
        return base

    def primary(self):
        kind, text, pos = self.take()
        if kind == "num":
            value = float(text)
            if not math.isfinite(value):
                raise ExprSyntaxError(f"number {text} overflows", pos)
            return Num(value, pos)
        if kind == "name":
            if self.peek()[0] == "op" and self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise ExprSyntaxError(f"unknown function {text!r}", pos)
                self.take()
                args = [self.expr()]
                while self.peek()[0] == "op" and self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                self.expect(")")
                arity = FUNCTIONS[text][0]
                if len(args) != arity:
                    raise ExprSyntaxError(f"{text} takes {arity} argument(s), got {len(args)}", pos)
                return Call(text, tuple(args), pos)
            return Var(text, pos)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", pos)


def parse(src: str) -> Expr:
    """Parse ``src`` into an expression tree."""
    if not src or not src.strip():
        raise ExprSyntaxError("empty expression", 0)
    p = _Parser(src)
    node = p.expr()
    kind, text, pos = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {text!r}", pos)
    return node


def evaluate(e: Expr, bindings=None):
    """Evaluate ``e`` with variable ``bindings`` (floats or numpy arrays)."""
    bindings = {} if bindings is None else bindings
    with np.errstate(all="ignore"):
        return _eval(e, bindings)


def _eval(e, env):
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        if e.name in env:
            return env[e.name]
        if e.name in CONSTANTS:
            return CONSTANTS[e.name]
        raise UnboundVariableError(f"unbound variable {e.name!r} at offset {e.pos}")
    if isinstance(e, Neg):
        return -_eval(e.operand, env)
    if isinstance(e, BinOp):
        a = _eval(e.left, env)
        b = _eval(e.right, env)
        if e.op == "+":
            return a + b
        if e.op == "-":
            return a - b
        if e.op == "*":
            return a * b
        if e.op == "/":
            _check(np.equal(b, 0), "division by zero")
            return np.true_divide(a, b) if isinstance(a, np.ndarray) or isinstance(b, np.ndarray) else a / b
        return _scalar(_pow(a, b))
    if isinstance(e, Call):
        args = [_eval(a, env) for a in e.args]
        return _scalar(FUNCTIONS[e.func][1](*args))
    raise TypeError(f"not an expression node: {e!r}")


def _scalar(x):
    if isinstance(x, np.ndarray) and x.ndim == 0:
        return float(x)
    if isinstance(x, np.generic):
        return x.item()
    return x


def to_string(e: Expr) -> str:
    """Canonical, fully parenthesized text form; ``parse(to_string(e)) == e``."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_string(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_string(e.left)} {e.op} {to_string(e.right)})"
    if isinstance(e, Call):
        return f"{e.func}({', '.join(to_string(a) for a in e.args)})"
    raise TypeError(f"not an expression node: {e!r}")


def free_variables(e: Expr) -> set[str]:
    """Names that must be bound before evaluation (constants excluded)."""
    if isinstance(e, Num):
        return set()
    if isinstance(e, Var):
        return set() if e.name in CONSTANTS else {e.name}
    if isinstance(e, Neg):
        return free_variables(e.operand)
    if isinstance(e, BinOp):
        return free_variables(e.left) | free_variables(e.right)
    return set().union(*(free_variables(a) for a in e.args))
