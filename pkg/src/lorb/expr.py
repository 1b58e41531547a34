"""Tiny expression language for compactly supported test functions.

Functions are written over named coordinates (``t, x1..xk, v`` for the
curved model, or ``u1..un`` for flat space) with the usual arithmetic
operators, a handful of analytic unary functions, and a mandatory
``bump(...)`` factor that makes compact support a structural property
instead of something we would have to prove about arbitrary expressions.

``bump(z)`` is exp(-1/(1-z^2)) for |z| < 1 and exactly 0 otherwise, so it
is smooth and vanishes with all derivatives at the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "ExprError",
    "ExprFn",
    "parse",
    "pretty",
    "eval_expr",
    "bump",
]

_UNARY_FUNCS = ("exp", "sin", "cos", "sinh", "cosh", "bump")


class ExprError(ValueError):
    """Parse or validation failure, carrying a 1-based line:column position."""

    def __init__(self, message, line=1, col=1):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


# --- AST --------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # 'neg' or a function name
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*', '/'
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Power:
    base: "Node"
    exponent: int  # literal nonnegative integer


Node = Union[Const, Var, Unary, BinOp, Power]


def bump(z):
    """Smooth cutoff exp(-1/(1-z^2)) for |z|<1, zero outside."""
    z = np.asarray(z, dtype=float)
    inside = np.abs(z) < 1.0
    out = np.zeros_like(z)
    if np.any(inside):
        zi = np.where(inside, z, 0.0)
        out = np.where(inside, np.exp(-1.0 / np.maximum(1.0 - zi * zi, 1e-300)), 0.0)
    return out if out.ndim else float(out)


# --- tokenizer --------------------------------------------------------------

@dataclass
class _Tok:
    kind: str  # 'num', 'name', 'op'
    text: str
    line: int
    col: int


def _tokenize(src: str) -> list[_Tok]:
    toks = []
    line, col = 1, 1
    i = 0
    n = len(src)
    while i < n:
        c = src[i]
        if c == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        start_col = col
        if c.isdigit() or (c == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (src[j].isdigit() or (src[j] == "." and not seen_dot)):
                if src[j] == ".":
                    seen_dot = True
                j += 1
            if j < n and src[j] in "eE":
                k = j + 1
                if k < n and src[k] in "+-":
                    k += 1
                if k < n and src[k].isdigit():
                    j = k
                    while j < n and src[j].isdigit():
                        j += 1
            toks.append(_Tok("num", src[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (src[j].isalnum() or src[j] == "_"):
                j += 1
            toks.append(_Tok("name", src[i:j], line, start_col))
            col += j - i
            i = j
            continue
        if c in "+-*/^()":
            toks.append(_Tok("op", c, line, start_col))
            i += 1
            col += 1
            continue
        raise ExprError(f"unexpected character {c!r}", line, start_col)
    return toks


# --- parser (precedence climbing: ^  >  unary -  >  * /  >  + -) ------------

class _Parser:
    def __init__(self, toks: list[_Tok], var_index: dict[str, int]):
        self.toks = toks
        self.pos = 0
        self.var_index = var_index

    def _peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else None

    def _next(self):
        tok = self._peek()
        if tok is not None:
            self.pos += 1
        return tok

    def _error(self, message, tok=None):
        if tok is None:
            if self.toks:
                last = self.toks[-1]
                raise ExprError(message, last.line, last.col + len(last.text))
            raise ExprError(message)
        raise ExprError(message, tok.line, tok.col)

    def _expect_op(self, text):
        tok = self._next()
        if tok is None or tok.kind != "op" or tok.text != text:
            self._error(f"expected {text!r}", tok)

    def parse(self) -> Node:
        node = self._sum()
        tok = self._peek()
        if tok is not None:
            self._error(f"unexpected token {tok.text!r}", tok)
        return node

    def _sum(self) -> Node:
        node = self._product()
        while (tok := self._peek()) is not None and tok.kind == "op" and tok.text in "+-":
            self._next()
            rhs = self._product()
            node = BinOp(tok.text, node, rhs)
        return node

    def _product(self) -> Node:
        node = self._unary()
        while (tok := self._peek()) is not None and tok.kind == "op" and tok.text in "*/":
            self._next()
            rhs = self._unary()
            node = BinOp(tok.text, node, rhs)
        return node

    def _unary(self) -> Node:
        tok = self._peek()
        if tok is not None and tok.kind == "op" and tok.text == "-":
            self._next()
            return Unary("neg", self._unary())
        return self._power()

    def _power(self) -> Node:
        base = self._atom()
        tok = self._peek()
        if tok is not None and tok.kind == "op" and tok.text == "^":
            self._next()
            exp_tok = self._next()
            if exp_tok is None or exp_tok.kind != "num" or "." in exp_tok.text or "e" in exp_tok.text.lower():
                self._error("exponent must be a literal nonnegative integer", exp_tok)
            return Power(base, int(exp_tok.text))
        return base

    def _atom(self) -> Node:
        tok = self._next()
        if tok is None:
            self._error("unexpected end of input")
        if tok.kind == "num":
            return Const(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            node = self._sum()
            self._expect_op(")")
            return node
        if tok.kind == "name":
            if tok.text in _UNARY_FUNCS:
                self._expect_op("(")
                arg = self._sum()
                self._expect_op(")")
                return Unary(tok.text, arg)
            if tok.text in self.var_index:
                return Var(self.var_index[tok.text], tok.text)
            self._error(f"unknown identifier {tok.text!r}", tok)
        self._error(f"unexpected token {tok.text!r}", tok)


def _variable_names(dimension: int) -> tuple[dict[str, int], dict[str, int]]:
    """Curved-model names (t, x1..x_{d-2}, v) and flat names (u1..ud)."""
    curved = {"t": 0, "v": dimension - 1}
    for i in range(1, dimension - 1):
        curved[f"x{i}"] = i
    flat = {f"u{i}": i - 1 for i in range(1, dimension + 1)}
    return curved, flat


# --- compact-support validation ---------------------------------------------

def _const_value(node: Node):
    """Fold a constant subexpression to a float, or return None."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Unary) and node.op == "neg":
        v = _const_value(node.arg)
        return None if v is None else -v
    if isinstance(node, BinOp):
        a = _const_value(node.left)
        b = _const_value(node.right)
        if a is None or b is None:
            return None
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
    if isinstance(node, Power):
        v = _const_value(node.base)
        return None if v is None else v ** node.exponent
    return None


def _square_term(node: Node):
    """Recognize a*(var - center)^2 (a > 0); return (index, center, a) or None."""
    scale = 1.0
    while True:
        if isinstance(node, BinOp) and node.op == "*":
            cv = _const_value(node.left)
            if cv is not None:
                scale *= cv
                node = node.right
                continue
            cv = _const_value(node.right)
            if cv is not None:
                scale *= cv
                node = node.left
                continue
        if isinstance(node, BinOp) and node.op == "/":
            cv = _const_value(node.right)
            if cv is not None and cv != 0:
                scale /= cv
                node = node.left
                continue
        break
    if not (isinstance(node, Power) and node.exponent == 2):
        return None
    base = node.base
    if isinstance(base, Var):
        return (base.index, 0.0, scale) if scale > 0 else None
    if isinstance(base, BinOp) and base.op in "+-":
        if isinstance(base.left, Var):
            c = _const_value(base.right)
            if c is not None:
                center = c if base.op == "-" else -c
                return (base.left.index, center, scale) if scale > 0 else None
    return None


def _quadratic_bound(node: Node, dimension: int):
    """If node is a positive combination of squares of every coordinate
    (optionally divided by a constant), return per-coordinate (center, radius).
    The bump factor then vanishes outside the box |coord_i - center_i| < radius_i.
    """
    divisor = 1.0
    while isinstance(node, BinOp) and node.op == "/":
        cv = _const_value(node.right)
        if cv is None or cv <= 0:
            return None
        divisor *= cv
        node = node.left
    terms = []
    stack = [node]
    while stack:
        cur = stack.pop()
        if isinstance(cur, BinOp) and cur.op == "+":
            stack.append(cur.left)
            stack.append(cur.right)
            continue
        terms.append(cur)
    bounds = {}
    for term in terms:
        sq = _square_term(term)
        if sq is None:
            return None
        idx, center, scale = sq
        if idx in bounds:
            return None
        bounds[idx] = (center, math.sqrt(divisor / scale))
    if set(bounds) != set(range(dimension)):
        return None
    return bounds


def _find_support(node: Node, dimension: int):
    """Search multiplicative factors of the expression for a valid bump factor."""
    factors = []
    stack = [node]
    while stack:
        cur = stack.pop()
        if isinstance(cur, BinOp) and cur.op == "*":
            stack.append(cur.left)
            stack.append(cur.right)
        elif isinstance(cur, BinOp) and cur.op == "/":
            stack.append(cur.left)
        elif isinstance(cur, Unary) and cur.op == "neg":
            stack.append(cur.arg)
        else:
            factors.append(cur)
    for factor in factors:
        if isinstance(factor, Unary) and factor.op == "bump":
            bounds = _quadratic_bound(factor.arg, dimension)
            if bounds is not None:
                centers = np.array([bounds[i][0] for i in range(dimension)])
                radii = np.array([bounds[i][1] for i in range(dimension)])
                return float(np.linalg.norm(centers) + radii.max())
    return None


def _check_divisions(node: Node):
    """Denominators must be constant: division by a vanishing expression would
    break the structural guarantee that a zero bump factor zeroes the product."""
    if isinstance(node, BinOp):
        if node.op == "/" and _const_value(node.right) is None:
            raise ExprError("division is only allowed by constant expressions")
        if node.op == "/" and _const_value(node.right) == 0:
            raise ExprError("division by zero")
        _check_divisions(node.left)
        _check_divisions(node.right)
    elif isinstance(node, Unary):
        _check_divisions(node.arg)
    elif isinstance(node, Power):
        _check_divisions(node.base)


# --- evaluation --------------------------------------------------------------

def _eval_node(node: Node, coords: np.ndarray):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return coords[..., node.index]
    if isinstance(node, Unary):
        a = _eval_node(node.arg, coords)
        if node.op == "neg":
            return -a
        if node.op == "bump":
            return bump(a)
        return getattr(np, node.op)(a)
    if isinstance(node, Power):
        return _eval_node(node.base, coords) ** node.exponent
    a = _eval_node(node.left, coords)
    b = _eval_node(node.right, coords)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    return a / b


@dataclass(frozen=True)
class ExprFn:
    """A parsed test function with a structurally guaranteed support radius.

    Callable on arrays of shape (..., dimension); vanishes identically
    outside the ball of radius ``support_radius`` around the origin.
    """

    ast: Node
    dimension: int
    support_radius: float
    source: str = ""

    def __call__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.shape[-1] != self.dimension:
            raise ValueError(
                f"point dimension {pts.shape[-1]} != expression dimension {self.dimension}"
            )
        out = _eval_node(self.ast, pts)
        return np.broadcast_to(np.asarray(out, dtype=float), pts.shape[:-1]).copy()

    def eval(self, point):
        return float(self(np.asarray(point, dtype=float)))


def eval_expr(f: ExprFn, point):
    return f.eval(point)


def parse(src: str, dimension: int) -> ExprFn:
    """Parse ``src`` over ``dimension`` coordinates; reject expressions
    without a recognizable compact-support bump factor."""
    if dimension < 1:
        raise ValueError("dimension must be >= 1")
    toks = _tokenize(src)
    curved, flat = _variable_names(dimension)
    used = {t.text for t in toks if t.kind == "name" and t.text not in _UNARY_FUNCS}
    if used & set(flat) and used & set(curved):
        raise ExprError("cannot mix u-style and t/x/v-style coordinate names")
    names = flat if used & set(flat) else curved
    node = _Parser(toks, names).parse()
    _check_divisions(node)
    radius = _find_support(node, dimension)
    if radius is None:
        raise ExprError(
            "no compact-support factor: multiply by "
            "bump((sum of squared coordinates)/R^2) covering every coordinate"
        )
    return ExprFn(ast=node, dimension=dimension, support_radius=radius, source=src)


# --- pretty printer -----------------------------------------------------------

def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return 1 if node.op in "+-" else 2
    if isinstance(node, Unary) and node.op == "neg":
        return 3
    return 4


def pretty(node: Node) -> str:
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Unary):
        if node.op == "neg":
            inner = pretty(node.arg)
            if _prec(node.arg) < 3:
                inner = f"({inner})"
            return f"-{inner}"
        return f"{node.op}({pretty(node.arg)})"
    if isinstance(node, Power):
        inner = pretty(node.base)
        if _prec(node.base) < 4:
            inner = f"({inner})"
        return f"{inner}^{node.exponent}"
    lhs = pretty(node.left)
    rhs = pretty(node.right)
    my = _prec(node)
    if _prec(node.left) < my:
        lhs = f"({lhs})"
    # right operand of - and / needs parens at equal precedence too
    if _prec(node.right) < my or (node.op in "-/" and _prec(node.right) == my):
        rhs = f"({rhs})"
    return f"{lhs} {node.op} {rhs}"
