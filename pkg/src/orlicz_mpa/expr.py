"""A small arithmetic language for kernels, potentials and nonlinearities.

Grammar (loosest binding first)::

    expr   := expr ('+' | '-') expr
            | expr ('*' | '/') expr
            | '-' expr
            | atom '^' expr            (right associative, binds tighter than unary minus)
    atom   := number | name | name '(' args ')' | '(' expr ')' | '|' expr '|'

Names are the variables t, s, x, x1..x9 and the constant pi. Functions:
abs, log, sin, cos, sqrt, sign, exp. Builtins ``sum_cos2(x, n)`` and
``sum_sin2(x, n)`` stand for sum_{i<=n} cos^2(pi x_i) and sum_{i<=n} sin^2(pi x_i).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Union

import numpy as np

FUNCTIONS = ("abs", "log", "sin", "cos", "sqrt", "sign", "exp")
BUILTINS = ("sum_cos2", "sum_sin2")
DEFAULT_VARIABLES = frozenset(["t", "s", "x"] + [f"x{i}" for i in range(1, 10)])


class ExprSyntaxError(ValueError):
    def __init__(self, message, pos):
        super().__init__(f"{message} at position {pos}")
        self.pos = pos


class ExprDomainError(ArithmeticError):
    """Evaluation left the domain of a primitive (log, sqrt, power, division)."""


class UnboundVariable(KeyError):
    pass


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # "neg" or a name from FUNCTIONS
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Builtin:
    name: str
    var: str
    n: int


Node = Union[Const, Var, Unary, Binary, Builtin]

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(.))")

_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30


def _tokenize(src):
    out, pos = [], 0
    src = src.rstrip()
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        num, name, sym = m.groups()
        start = m.start(m.lastindex)
        if num is not None:
            out.append(("num", num, start))
        elif name is not None:
            out.append(("name", name, start))
        else:
            if sym not in "+-*/^()|,":
                raise ExprSyntaxError(f"unexpected character {sym!r}", start)
            out.append(("sym", sym, start))
        pos = m.end()
    out.append(("end", None, len(src)))
    return out


class _Parser:
    def __init__(self, src, variables):
        self.toks = _tokenize(src)
        self.i = 0
        self.variables = variables

    def peek(self):
        return self.toks[self.i]

    def advance(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, sym):
        kind, val, pos = self.advance()
        if kind != "sym" or val != sym:
            raise ExprSyntaxError(f"expected {sym!r}", pos)

    def expression(self, rbp=0):
        left = self.nud(self.advance())
        while True:
            kind, val, _ = self.peek()
            if kind != "sym" or val not in _BP or _BP[val] <= rbp:
                break
            self.advance()
            # '^' is right associative: parse its rhs one notch looser
            right = self.expression(_BP[val] - 1 if val == "^" else _BP[val])
            left = Binary(val, left, right)
        return left

    def nud(self, tok):
        kind, val, pos = tok
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            return self.name(val, pos)
        if kind == "sym":
            if val == "-":
                nxt = self.peek()
                operand = self.expression(_UNARY_BP)
                if nxt[0] == "num" and isinstance(operand, Const):
                    return Const(-operand.value)
                return Unary("neg", operand)
            if val == "(":
                inner = self.expression()
                self.expect(")")
                return inner
            if val == "|":
                inner = self.expression()
                self.expect("|")
                return Unary("abs", inner)
        raise ExprSyntaxError("unexpected token" if kind != "end" else "unexpected end of input", pos)

    def name(self, val, pos):
        if val in FUNCTIONS:
            self.expect("(")
            arg = self.expression()
            self.expect(")")
            return Unary(val, arg)
        if val in BUILTINS:
            self.expect("(")
            kind, var, vpos = self.advance()
            if kind != "name" or var != "x":
                raise ExprSyntaxError(f"{val} expects the vector variable x", vpos)
            self.expect(",")
            kind, n, npos = self.advance()
            if kind != "num" or not float(n).is_integer() or float(n) < 1:
                raise ExprSyntaxError(f"{val} expects a positive integer count", npos)
            self.expect(")")
            return Builtin(val, var, int(float(n)))
        if val == "pi":
            return Const(math.pi)
        if val not in self.variables:
            raise ExprSyntaxError(f"unknown identifier {val!r}", pos)
        return Var(val)


def parse(src: str, variables=DEFAULT_VARIABLES) -> Node:
    """Parse ``src`` into an AST; raises ExprSyntaxError with a position."""
    p = _Parser(src, frozenset(variables))
    node = p.expression()
    kind, val, pos = p.peek()
    if kind != "end":
        raise ExprSyntaxError(f"unexpected {val!r}", pos)
    return node


def variables_of(node: Node) -> set:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Builtin):
        return {node.var}
    if isinstance(node, Unary):
        return variables_of(node.arg)
    if isinstance(node, Binary):
        return variables_of(node.left) | variables_of(node.right)
    return set()


# printing

def _fmt(v: float) -> str:
    if v == math.pi:
        return "pi"
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _prec(node):
    if isinstance(node, Binary):
        return _BP[node.op]
    if isinstance(node, Unary) and node.op == "neg":
        return _UNARY_BP
    return 100


def to_string(node: Node) -> str:
    """Render with the minimum parentheses needed to parse back identically.

    Negative constants are always parenthesised, and a negated positive
    literal prints as ``-(c)`` so the parser does not fold it on the way back.
    """
    if isinstance(node, Const):
        return f"({_fmt(node.value)})" if node.value < 0 else _fmt(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Builtin):
        return f"{node.name}({node.var},{node.n})"
    if isinstance(node, Unary):
        inner = to_string(node.arg)
        if node.op == "neg":
            arg = node.arg
            if (_prec(arg) < _BP["^"] and isinstance(arg, Binary)) or (
                    isinstance(arg, Const) and arg.value >= 0):
                inner = f"({inner})"
            return f"-{inner}"
        if node.op == "abs":
            return f"|{inner}|"
        return f"{node.op}({inner})"
    op, lp = node.op, _BP[node.op]
    left, right = to_string(node.left), to_string(node.right)
    if op == "^":
        if _prec(node.left) <= lp:
            left = f"({left})"
        if _prec(node.right) < lp:
            right = f"({right})"
    else:
        if _prec(node.left) < lp:
            left = f"({left})"
        if _prec(node.right) <= lp:
            right = f"({right})"
    return f"{left}{op}{right}"


# evaluation

def _lookup(name, bindings):
    if name in bindings:
        return np.asarray(bindings[name], dtype=float)
    m = re.fullmatch(r"x(\d)", name)
    if m and "x" in bindings:
        return np.asarray(bindings["x"], dtype=float)[..., int(m.group(1)) - 1]
    raise UnboundVariable(name)


def evaluate(node: Node, bindings: Mapping[str, object]):
    """Vectorised evaluation; raises ExprDomainError outside primitive domains."""
    if isinstance(node, Const):
        return np.float64(node.value)
    if isinstance(node, Var):
        return _lookup(node.name, bindings)
    if isinstance(node, Builtin):
        x = np.asarray(bindings["x"], dtype=float) if "x" in bindings else np.stack(
            [_lookup(f"x{i}", bindings) for i in range(1, node.n + 1)], axis=-1)
        if x.shape[-1] < node.n:
            raise ExprDomainError(f"{node.name} needs {node.n} coordinates, got {x.shape[-1]}")
        trig = np.cos if node.name == "sum_cos2" else np.sin
        return np.sum(trig(np.pi * x[..., : node.n]) ** 2, axis=-1)
    if isinstance(node, Unary):
        a = evaluate(node.arg, bindings)
        op = node.op
        if op == "neg":
            return -a
        if op == "abs":
            return np.abs(a)
        if op == "sign":
            return np.sign(a)
        if op == "log":
            if np.any(a <= 0):
                raise ExprDomainError("log of a non-positive value")
            return np.log(a)
        if op == "sqrt":
            if np.any(a < 0):
                raise ExprDomainError("sqrt of a negative value")
            return np.sqrt(a)
        return getattr(np, op)(a)
    a = evaluate(node.left, bindings)
    b = evaluate(node.right, bindings)
    op = node.op
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if np.any(b == 0):
            raise ExprDomainError("division by zero")
        return a / b
    a, b = np.broadcast_arrays(a, b)
    if np.any((a < 0) & (b != np.round(b))):
        raise ExprDomainError("negative base raised to a non-integer power")
    if np.any((a == 0) & (b < 0)):
        raise ExprDomainError("division by zero (zero raised to a negative power)")
    return np.power(a, b)


def compile_expr(node: Node, names=("t",)):
    """Positional callable f(*arrays) for the given variable order."""
    def fn(*args):
        return evaluate(node, dict(zip(names, args)))
    fn.__doc__ = to_string(node)
    return fn


# differentiation with constant folding

def _num(node):
    return node.value if isinstance(node, Const) else None


def add(a, b):
    if _num(a) is not None and _num(b) is not None:
        return Const(a.value + b.value)
    if _num(a) == 0:
        return b
    if _num(b) == 0:
        return a
    return Binary("+", a, b)


def sub(a, b):
    if _num(a) is not None and _num(b) is not None:
        return Const(a.value - b.value)
    if _num(b) == 0:
        return a
    if _num(a) == 0:
        return neg(b)
    return Binary("-", a, b)


def mul(a, b):
    if _num(a) is not None and _num(b) is not None:
        return Const(a.value * b.value)
    if _num(a) == 0 or _num(b) == 0:
        return Const(0.0)
    if _num(a) == 1:
        return b
    if _num(b) == 1:
        return a
    if _num(b) is not None:
        a, b = b, a
    return Binary("*", a, b)


def div(a, b):
    if _num(a) is not None and _num(b) not in (None, 0):
        return Const(a.value / b.value)
    if _num(a) == 0:
        return Const(0.0)
    if _num(b) == 1:
        return a
    return Binary("/", a, b)


def power(a, b):
    if _num(b) == 0:
        return Const(1.0)
    if _num(b) == 1:
        return a
    if _num(a) is not None and _num(b) is not None and (a.value > 0 or float(b.value).is_integer()):
        return Const(a.value ** b.value)
    return Binary("^", a, b)


def neg(a):
    if _num(a) is not None:
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def differentiate(node: Node, var: str) -> Node:
    """Symbolic partial derivative; d|u| = sign(u) du with sign(0) = 0."""
    d = lambda n: differentiate(n, var)
    if isinstance(node, Const):
        return Const(0.0)
    if isinstance(node, Var):
        return Const(1.0 if node.name == var else 0.0)
    if isinstance(node, Builtin):
        m = re.fullmatch(r"x(\d)", var)
        if not m or int(m.group(1)) > node.n:
            return Const(0.0)
        # d/dx_i cos^2(pi x_i) = -pi sin(2 pi x_i), and the opposite sign for sin^2
        inner = Unary("sin", mul(Const(2 * math.pi), Var(var)))
        term = mul(Const(math.pi), inner)
        return neg(term) if node.name == "sum_cos2" else term
    if isinstance(node, Unary):
        u, du = node.arg, d(node.arg)
        if _num(du) == 0:
            return Const(0.0)
        op = node.op
        if op == "neg":
            return neg(du)
        if op == "abs":
            return mul(Unary("sign", u), du)
        if op == "sign":
            return Const(0.0)
        if op == "log":
            return div(du, u)
        if op == "sin":
            return mul(Unary("cos", u), du)
        if op == "cos":
            return neg(mul(Unary("sin", u), du))
        if op == "sqrt":
            return div(du, mul(Const(2.0), node))
        if op == "exp":
            return mul(node, du)
    a, b = node.left, node.right
    da, db = d(a), d(b)
    op = node.op
    if op == "+":
        return add(da, db)
    if op == "-":
        return sub(da, db)
    if op == "*":
        return add(mul(da, b), mul(a, db))
    if op == "/":
        return div(sub(mul(da, b), mul(a, db)), power(b, Const(2.0)))
    if _num(db) == 0:
        if _num(b) is not None:
            return mul(mul(b, power(a, Const(b.value - 1.0))), da)
        return mul(mul(b, power(a, sub(b, Const(1.0)))), da)
    # general u^v = exp(v log u)
    return mul(node, add(mul(db, Unary("log", a)), div(mul(b, da), a)))
