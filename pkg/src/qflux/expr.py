"""Symbol expressions over x1, x2, xi1, xi2.

Grammar (whitespace ignored)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | NAME '(' args ')' | '(' expr ')'
    args   := expr ((';' | ',') expr)*

Names: x1 x2 xi1 xi2 (x and xi alias the first axis), pi, e; chart expressions
use s1 s2 instead.
Functions: exp cos sin sqrt abs, bump(r; c, w) (peak-one bump of half-width w
centred at c), step(s) (the reference smooth step: 0 for s <= -1, 1 for s >= 0).
'^' is right associative and binds tighter than unary minus, so -x^2 = -(x^2).
"""
from __future__ import annotations

import re

import numpy as np

from .core import SymbolFn
from .profiles import bump, bump_step

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)|([A-Za-z_][A-Za-z_0-9]*)|(.))")

_VARS = {"x1": ("x", 0), "x2": ("x", 1), "x": ("x", 0), "xi1": ("xi", 0), "xi2": ("xi", 1), "xi": ("xi", 0),
         "s1": ("s", 0), "s2": ("s", 1)}
_CONST = {"pi": np.pi, "e": np.e}
_FUNCS = {
    "exp": (1, np.exp),
    "cos": (1, np.cos),
    "sin": (1, np.sin),
    "sqrt": (1, lambda a: np.sqrt(a + 0j) if np.any(np.asarray(a) < 0) else np.sqrt(a)),
    "abs": (1, np.abs),
    "step": (1, bump_step),
    "bump": (3, bump),
}


class ExprError(ValueError):
    pass


def _tokenize(s: str):
    out = []
    pos = 0
    s = s.strip()
    while pos < len(s):
        m = _TOKEN.match(s, pos)
        if not m or m.end() == pos:
            break
        num, name, op = m.groups()
        if num is not None:
            out.append(("num", float(num)))
        elif name is not None:
            out.append(("name", name))
        elif op is not None:
            if op.isspace():
                pos = m.end()
                continue
            if op not in "+-*/^(),;":
                raise ExprError(f"unexpected character {op!r} at {m.start(3)}")
            out.append(("op", op))
        pos = m.end()
    out.append(("end", None))
    return out


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0
        self.used = set()

    def peek(self):
        return self.toks[self.i]

    def take(self, kind=None, val=None):
        t = self.toks[self.i]
        if kind is not None and (t[0] != kind or (val is not None and t[1] != val)):
            want = val if val is not None else kind
            raise ExprError(f"expected {want!r}, found {t[1]!r}")
        self.i += 1
        return t

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            raise ExprError(f"trailing input at token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            node = (op, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            node = (op, node, rhs)
        return node

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return ("neg", self.unary())
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            return ("^", base, self.unary())
        return base

    def atom(self):
        kind, val = self.peek()
        if kind == "num":
            self.take()
            return ("num", val)
        if kind == "op" and val == "(":
            self.take()
            node = self.expr()
            self.take("op", ")")
            return node
        if kind == "name":
            self.take()
            if self.peek() == ("op", "("):
                if val not in _FUNCS:
                    raise ExprError(f"unknown function {val!r}")
                self.take()
                args = [self.expr()]
                while self.peek() in (("op", ","), ("op", ";")):
                    self.take()
                    args.append(self.expr())
                self.take("op", ")")
                arity = _FUNCS[val][0]
                if len(args) != arity:
                    raise ExprError(f"{val} takes {arity} argument(s), got {len(args)}")
                return ("call", val, args)
            if val in _VARS:
                self.used.add(val if val not in ("x", "xi") else val + "1")
                return ("var", _VARS[val])
            if val in _CONST:
                return ("num", _CONST[val])
            raise ExprError(f"unknown name {val!r}")
        raise ExprError(f"unexpected token {val!r}")


def _eval(node, x, xi, s=()):
    tag = node[0]
    if tag == "num":
        return node[1]
    if tag == "var":
        which, ax = node[1]
        arr = {"x": x, "xi": xi, "s": s}[which]
        if ax >= len(arr):
            raise ExprError(f"axis {ax + 1} not available in dimension {len(arr)}")
        return arr[ax]
    if tag == "neg":
        return -_eval(node[1], x, xi, s)
    if tag == "call":
        fn = _FUNCS[node[1]][1]
        return fn(*[_eval(a, x, xi, s) for a in node[2]])
    a = _eval(node[1], x, xi, s)
    b = _eval(node[2], x, xi, s)
    if tag == "+":
        return a + b
    if tag == "-":
        return a - b
    if tag == "*":
        return a * b
    if tag == "/":
        return a / b
    if tag == "^":
        return np.power(a, b)
    raise ExprError(f"bad node {tag}")


def parse_param_expr(text: str):
    """Expression in chart parameters s1, s2 only; returns f(s_list) -> array."""
    p = _Parser(text)
    tree = p.parse()
    bad = [v for v in p.used if not v.startswith("s")]
    if bad:
        raise ExprError(f"chart expressions may only use s1, s2; found {sorted(bad)}")

    def ev(s):
        val = _eval(tree, (), (), s)
        return np.broadcast_to(np.asarray(val, dtype=float), np.broadcast_shapes(*[np.shape(a) for a in s])) + 0.0

    return ev


def parse_symbol(text: str) -> SymbolFn:
    p = _Parser(text)
    tree = p.parse()
    used = p.used
    if any(v.startswith("s") for v in used):
        raise ExprError("symbols may not use chart parameters s1, s2")
    has_x = any(v.startswith("x") and not v.startswith("xi") for v in used)
    has_xi = any(v.startswith("xi") for v in used)

    def ev(x, xi):
        val = _eval(tree, x, xi)
        shape = np.broadcast_shapes(*[np.shape(a) for a in list(x) + list(xi)])
        return np.broadcast_to(np.asarray(val), shape) + 0.0

    return SymbolFn(ev, x_only=not has_xi, xi_only=has_xi and not has_x, label=text)
