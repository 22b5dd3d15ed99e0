"""Expression language for symbols p(x, xi) on T^n x Z^n.

Symbols are specified analytically so that frequency shifts (needed by the
difference calculus) can be evaluated at any xi in Z^n, including outside any
truncation box, and so that x-derivatives can be taken exactly.

Grammar
-------
    atoms      numbers, `i`, `pi`, x1..x3, xi1..xi3, `xi` (the whole
               frequency vector), named parameters
    functions  exp, sin, cos, log, bracket, abs     (all unary)
    operators  + - * / ^   with ^ tightest and right-associative,
               unary minus between * and ^

`bracket(e)` is (1 + |e|^2)^(1/2) and `abs(e)` is |e|; both accept the bare
vector `xi` or any scalar subexpression.  `^` on a complex base uses the
principal branch.  `i` is reserved and cannot be shadowed by a parameter.

Evaluation wraps each x_j into [0, 1) (points on the torus are identified
with their fundamental-domain representatives) and broadcasts over numpy
arrays, so a whole grid-by-lattice sampling is a single tree walk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DslError, TableRangeError, ValidationError

FUNCTIONS = ("exp", "sin", "cos", "log", "bracket", "abs")
MAX_DIM = 3

# ---------------------------------------------------------------------------
# Tokens
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Token:
    kind: str  # number | ident | op | paren | comma
    lexeme: str
    position: int


def tokenize(source: str) -> list:
    """Lex an expression string; errors carry the offending offset."""
    tokens = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            if j < n and source[j] == ".":
                j += 1
                while j < n and source[j].isdigit():
                    j += 1
            if j < n and source[j] in "eE":
                exp_start = j + 1
                k = exp_start
                if k < n and source[k] in "+-":
                    k += 1
                if k >= n or not source[k].isdigit():
                    raise DslError("malformed number literal", exp_start)
                while k < n and source[k].isdigit():
                    k += 1
                j = k
            tokens.append(Token("number", source[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(Token("ident", source[i:j], i))
            i = j
            continue
        if c in "+-*/^":
            tokens.append(Token("op", c, i))
            i += 1
            continue
        if c in "()":
            tokens.append(Token("paren", c, i))
            i += 1
            continue
        if c == ",":
            tokens.append(Token("comma", c, i))
            i += 1
            continue
        raise DslError(f"unknown character {c!r}", i)
    return tokens


# ---------------------------------------------------------------------------
# Expression nodes
# ---------------------------------------------------------------------------
# Positions are metadata for error reporting and never take part in equality.


@dataclass(frozen=True)
class Const:
    value: complex
    name: str = field(default=None, compare=False)
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Param:
    name: str
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class XVar:
    axis: int  # zero-based
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class XiVar:
    axis: int
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class XiVec:
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Neg:
    operand: object
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * / ^
    left: object
    right: object
    pos: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object
    pos: int = field(default=0, compare=False)


SymbolExpr = (Const, Param, XVar, XiVar, XiVec, Neg, BinOp, Call)

_BP = {"+": 10, "-": 10, "*": 20, "/": 20, "^": 40}
_UNARY_BP = 30
_RIGHT_ASSOC = {"^"}


# ---------------------------------------------------------------------------
# Parser (precedence climbing)
# ---------------------------------------------------------------------------


class _Stream:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            pos = last.position + len(last.lexeme) if last else 0
            raise DslError("unexpected end of input", pos)
        self.i += 1
        return tok


def parse_tokens(tokens: list):
    if not tokens:
        raise DslError("empty expression", 0)
    stream = _Stream(tokens)
    expr = _parse_expr(stream, 0)
    trailing = stream.peek()
    if trailing is not None:
        raise DslError(f"unexpected token {trailing.lexeme!r}", trailing.position)
    return expr


def parse(source: str):
    return parse_tokens(tokenize(source))


def _parse_expr(stream, min_bp):
    lhs = _parse_atom(stream)
    while True:
        tok = stream.peek()
        if tok is None or tok.kind != "op":
            break
        bp = _BP[tok.lexeme]
        if bp < min_bp:
            break
        stream.next()
        # right-assoc recurses at equal bp, left-assoc one above
        rhs = _parse_expr(stream, bp if tok.lexeme in _RIGHT_ASSOC else bp + 1)
        lhs = BinOp(tok.lexeme, lhs, rhs, pos=tok.position)
    return lhs


def _parse_atom(stream):
    tok = stream.next()
    if tok.kind == "number":
        return Const(complex(float(tok.lexeme)), pos=tok.position)
    if tok.kind == "op" and tok.lexeme == "-":
        return Neg(_parse_expr(stream, _UNARY_BP), pos=tok.position)
    if tok.kind == "paren" and tok.lexeme == "(":
        inner = _parse_expr(stream, 0)
        closing = stream.peek()
        if closing is None or closing.lexeme != ")":
            raise DslError("unbalanced parentheses", tok.position)
        stream.next()
        return inner
    if tok.kind == "ident":
        return _ident_atom(stream, tok)
    raise DslError(f"unexpected token {tok.lexeme!r}", tok.position)


def _ident_atom(stream, tok):
    name = tok.lexeme
    nxt = stream.peek()
    if nxt is not None and nxt.lexeme == "(":
        if name not in FUNCTIONS:
            raise DslError(f"unknown function {name!r}", tok.position)
        stream.next()
        arg = _parse_expr(stream, 0)
        closing = stream.peek()
        if closing is not None and closing.kind == "comma":
            raise DslError(f"{name} takes exactly one argument", closing.position)
        if closing is None or closing.lexeme != ")":
            raise DslError("unbalanced parentheses", tok.position)
        stream.next()
        return Call(name, arg, pos=tok.position)
    if name in FUNCTIONS:
        raise DslError(f"{name} requires an argument list", tok.position)
    if name == "i":
        return Const(1j, name="i", pos=tok.position)
    if name == "pi":
        return Const(complex(math.pi), name="pi", pos=tok.position)
    if name == "xi":
        return XiVec(pos=tok.position)
    if name.startswith("xi") and name[2:].isdigit():
        axis = int(name[2:])
        if not 1 <= axis <= MAX_DIM:
            raise DslError(f"frequency variable index {axis} out of range", tok.position)
        return XiVar(axis - 1, pos=tok.position)
    if name.startswith("x") and name[1:].isdigit():
        axis = int(name[1:])
        if not 1 <= axis <= MAX_DIM:
            raise DslError(f"space variable index {axis} out of range", tok.position)
        return XVar(axis - 1, pos=tok.position)
    return Param(name, pos=tok.position)


# ---------------------------------------------------------------------------
# Canonical printer
# ---------------------------------------------------------------------------


def _fmt_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def to_source(expr) -> str:
    """Canonical text form; parse(to_source(t)) reproduces t for parser output."""
    return _print(expr, 0)


def _print(node, ctx):
    if isinstance(node, Const):
        if node.name is not None:
            return node.name
        v = node.value
        if v.imag == 0:
            return _fmt_number(v.real)
        # parser-level complex constants only arise as i itself
        return f"({_fmt_number(v.real)}+{_fmt_number(v.imag)}*i)"
    if isinstance(node, Param):
        return node.name
    if isinstance(node, XVar):
        return f"x{node.axis + 1}"
    if isinstance(node, XiVar):
        return f"xi{node.axis + 1}"
    if isinstance(node, XiVec):
        return "xi"
    if isinstance(node, Call):
        return f"{node.fn}({_print(node.arg, 0)})"
    if isinstance(node, Neg):
        body = f"-{_print(node.operand, _UNARY_BP)}"
        return f"({body})" if ctx > _UNARY_BP else body
    if isinstance(node, BinOp):
        bp = _BP[node.op]
        if node.op in _RIGHT_ASSOC:
            body = f"{_print(node.left, bp + 1)}{node.op}{_print(node.right, bp)}"
        else:
            body = f"{_print(node.left, bp)}{node.op}{_print(node.right, bp + 1)}"
        return f"({body})" if ctx > bp else body
    raise TypeError(f"not a symbol expression node: {node!r}")


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


class _VecVal:
    """Value of the bare `xi` vector; only abs/bracket may consume it."""

    def __init__(self, components):
        self.components = components


def _normalize_point(v):
    if np.isscalar(v):
        return (np.asarray(v, dtype=float),)
    if isinstance(v, np.ndarray) and v.ndim <= 1 and v.dtype != object:
        return tuple(np.asarray(c, dtype=float) for c in np.atleast_1d(v))
    return tuple(np.asarray(c, dtype=float) for c in v)


def eval_expr(expr, x, xi, params=None):
    """Evaluate p(x, xi).

    ``x`` and ``xi`` are scalars (n = 1), coordinate sequences, or tuples of
    broadcastable arrays of per-axis components.  Returns a complex scalar
    for scalar inputs, otherwise a complex array.  x is wrapped into [0, 1).
    """
    xs = _normalize_point(x)
    xis = _normalize_point(xi)
    xs = tuple(c - np.floor(c) for c in xs)
    out = _eval(expr, xs, xis, params or {})
    if isinstance(out, _VecVal):
        raise DslError("expression evaluates to the bare frequency vector", getattr(expr, "pos", 0))
    arr = np.asarray(out, dtype=np.complex128)
    shape = np.broadcast_shapes(*[c.shape for c in xs + xis])
    if shape == ():
        return complex(arr)
    # constants broadcast up to the common input shape
    return np.broadcast_to(arr, shape) if arr.shape != shape else arr


def _eval(node, xs, xis, params):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Param):
        if node.name not in params:
            raise DslError(f"unbound parameter {node.name!r}", node.pos)
        return complex(params[node.name])
    if isinstance(node, XVar):
        if node.axis >= len(xs):
            raise DslError(f"x{node.axis + 1} out of range for dimension {len(xs)}", node.pos)
        return xs[node.axis].astype(np.complex128)
    if isinstance(node, XiVar):
        if node.axis >= len(xis):
            raise DslError(f"xi{node.axis + 1} out of range for dimension {len(xis)}", node.pos)
        return xis[node.axis].astype(np.complex128)
    if isinstance(node, XiVec):
        return _VecVal(xis)
    if isinstance(node, Neg):
        return -_scalar(_eval(node.operand, xs, xis, params), node)
    if isinstance(node, BinOp):
        a = _scalar(_eval(node.left, xs, xis, params), node)
        b = _scalar(_eval(node.right, xs, xis, params), node)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            if np.any(b == 0):
                raise DslError("division by zero", node.pos)
            return a / b
        if node.op == "^":
            return _power(a, b)
    if isinstance(node, Call):
        v = _eval(node.arg, xs, xis, params)
        if node.fn == "bracket":
            if isinstance(v, _VecVal):
                sq = sum(np.asarray(c, dtype=float) ** 2 for c in v.components)
                return np.sqrt(1.0 + sq).astype(np.complex128)
            mag2 = np.asarray(v * np.conj(v)).real
            return np.sqrt(1.0 + mag2).astype(np.complex128)
        if node.fn == "abs":
            if isinstance(v, _VecVal):
                sq = sum(np.asarray(c, dtype=float) ** 2 for c in v.components)
                return np.sqrt(sq).astype(np.complex128)
            return np.abs(v).astype(np.complex128)
        v = _scalar(v, node)
        if node.fn == "exp":
            return np.exp(v)
        if node.fn == "sin":
            return np.sin(v)
        if node.fn == "cos":
            return np.cos(v)
        if node.fn == "log":
            if np.any(v == 0):
                raise DslError("log of zero", node.pos)
            return np.log(v)
    raise TypeError(f"not a symbol expression node: {node!r}")


def _scalar(v, node):
    if isinstance(v, _VecVal):
        raise DslError("the bare vector `xi` may only appear inside abs() or bracket()", node.pos)
    return v


def _power(a, b):
    # principal branch throughout; integer exponents short-circuit so that
    # negative real bases stay exact
    if np.isscalar(b) or (isinstance(b, complex)):
        bb = complex(b)
        if bb.imag == 0 and bb.real == int(bb.real) and abs(bb.real) <= 64:
            return np.asarray(a, dtype=np.complex128) ** int(bb.real)
    a = np.asarray(a, dtype=np.complex128)
    # a signed zero in the imaginary part must not flip the branch cut
    a = np.where(a.imag == 0.0, a.real.astype(np.complex128), a)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.power(a, b)


def depends_on_x(expr, axis=None) -> bool:
    if isinstance(expr, XVar):
        return axis is None or expr.axis == axis
    if isinstance(expr, Neg):
        return depends_on_x(expr.operand, axis)
    if isinstance(expr, BinOp):
        return depends_on_x(expr.left, axis) or depends_on_x(expr.right, axis)
    if isinstance(expr, Call):
        return depends_on_x(expr.arg, axis)
    return False


def depends_on_xi(expr) -> bool:
    if isinstance(expr, (XiVar, XiVec)):
        return True
    if isinstance(expr, Neg):
        return depends_on_xi(expr.operand)
    if isinstance(expr, BinOp):
        return depends_on_xi(expr.left) or depends_on_xi(expr.right)
    if isinstance(expr, Call):
        return depends_on_xi(expr.arg)
    return False


# ---------------------------------------------------------------------------
# Exact x-differentiation
# ---------------------------------------------------------------------------

_ZERO = Const(0j)
_ONE = Const(complex(1.0))


def _is_const(node, value=None):
    return isinstance(node, Const) and (value is None or node.value == value)


def _add(a, b):
    if _is_const(a, 0):
        return b
    if _is_const(b, 0):
        return a
    return BinOp("+", a, b)


def _mul(a, b):
    if _is_const(a, 0) or _is_const(b, 0):
        return _ZERO
    if _is_const(a, 1):
        return b
    if _is_const(b, 1):
        return a
    return BinOp("*", a, b)


def _div(a, b):
    if _is_const(a, 0):
        return _ZERO
    return BinOp("/", a, b)


def diff_x(expr, axis: int):
    """Exact partial derivative with respect to x_{axis+1}.

    Works on any expression tree; `abs` of an x-dependent argument is the
    one unsupported case (no complex derivative exists).
    """
    if isinstance(expr, (Const, Param, XiVar, XiVec)):
        return _ZERO
    if isinstance(expr, XVar):
        return _ONE if expr.axis == axis else _ZERO
    if isinstance(expr, Neg):
        d = diff_x(expr.operand, axis)
        return _ZERO if _is_const(d, 0) else Neg(d)
    if isinstance(expr, BinOp):
        u, v = expr.left, expr.right
        du, dv = diff_x(u, axis), diff_x(v, axis)
        if expr.op == "+":
            return _add(du, dv)
        if expr.op == "-":
            if _is_const(dv, 0):
                return du
            return BinOp("-", du, dv)
        if expr.op == "*":
            return _add(_mul(du, v), _mul(u, dv))
        if expr.op == "/":
            num = BinOp("-", _mul(du, v), _mul(u, dv))
            return _div(num, _mul(v, v))
        if expr.op == "^":
            if _is_const(dv, 0):
                # d(u^c) = c * u^(c-1) * u'
                if _is_const(du, 0):
                    return _ZERO
                cm1 = BinOp("-", v, _ONE)
                return _mul(_mul(v, BinOp("^", u, cm1)), du)
            if _is_const(du, 0):
                return _mul(BinOp("^", u, v), _mul(dv, Call("log", u)))
            inner = _add(_mul(dv, Call("log", u)), _mul(v, _div(du, u)))
            return _mul(BinOp("^", u, v), inner)
    if isinstance(expr, Call):
        du = diff_x(expr.arg, axis)
        if _is_const(du, 0):
            return _ZERO
        u = expr.arg
        if expr.fn == "exp":
            return _mul(Call("exp", u), du)
        if expr.fn == "sin":
            return _mul(Call("cos", u), du)
        if expr.fn == "cos":
            return Neg(_mul(Call("sin", u), du))
        if expr.fn == "log":
            return _div(du, u)
        if expr.fn == "bracket":
            return _div(_mul(u, du), Call("bracket", u))
        if expr.fn == "abs":
            raise DslError("abs() of an x-dependent argument is not differentiable", expr.pos)
    raise TypeError(f"not a symbol expression node: {expr!r}")


def diff_x_multi(expr, beta):
    """Iterated exact x-derivative for a multi-index beta."""
    out = expr
    for axis, order in enumerate(beta):
        for _ in range(int(order)):
            out = diff_x(out, axis)
    return out


def bind(expr, params):
    """Substitute parameter values into the tree, yielding a closed expression."""
    if isinstance(expr, Param):
        if expr.name not in params:
            raise DslError(f"unbound parameter {expr.name!r}", expr.pos)
        return Const(complex(params[expr.name]), pos=expr.pos)
    if isinstance(expr, Neg):
        return replace(expr, operand=bind(expr.operand, params))
    if isinstance(expr, BinOp):
        return replace(expr, left=bind(expr.left, params), right=bind(expr.right, params))
    if isinstance(expr, Call):
        return replace(expr, arg=bind(expr.arg, params))
    return expr


# ---------------------------------------------------------------------------
# Built-in families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolFamily:
    """A named symbol with bound parameters and its nominal class triple."""

    name: str
    parameters: dict
    expr: object
    order: float
    rho: float
    delta: float

    def eval(self, x, xi):
        return eval_expr(self.expr, x, xi, self.parameters)

    def label(self) -> str:
        args = ", ".join(f"{v:g}" for v in self.parameters.values())
        return f"{self.name}({args})"


_BESSEL_EXPR = parse("bracket(xi)^m")
_WAINGER_EXPR = parse("exp(i*abs(xi)^a)*bracket(xi)^(-b)")
_EXOTIC_EXPR = parse("bracket(xi)^m*exp(i*c*x1*bracket(xi)^d)")


def bessel(m: float) -> SymbolFamily:
    """bracket(xi)^m, nominal class (m, rho=1, delta=0)."""
    return SymbolFamily("bessel", {"m": float(m)}, _BESSEL_EXPR, float(m), 1.0, 0.0)


def wainger(a: float, b: float) -> SymbolFamily:
    """exp(i |xi|^a) bracket(xi)^(-b), nominal class (-b, 1-a, 0); 0 < a < 1."""
    if not 0 < a < 1:
        raise ValidationError(f"wainger exponent a={a:g} must lie in (0, 1)")
    return SymbolFamily(
        "wainger", {"a": float(a), "b": float(b)}, _WAINGER_EXPR, -float(b), 1.0 - float(a), 0.0
    )


def exotic(m: float, d: float, c: float) -> SymbolFamily:
    """bracket(xi)^m exp(i c x1 bracket(xi)^d), nominal class (m, 1-d, d); 0 <= d < 1."""
    if not 0 <= d < 1:
        raise ValidationError(f"exotic exponent d={d:g} must lie in [0, 1)")
    return SymbolFamily(
        "exotic",
        {"m": float(m), "d": float(d), "c": float(c)},
        _EXOTIC_EXPR,
        float(m),
        1.0 - float(d),
        float(d),
    )


FAMILY_BUILDERS = {"bessel": bessel, "wainger": wainger, "exotic": exotic}


def family_from_text(text: str):
    """Parse 'name(a, b, ...)' into a SymbolFamily, or return None if no match."""
    text = text.strip()
    for name, builder in FAMILY_BUILDERS.items():
        if text.startswith(name + "(") and text.endswith(")"):
            body = text[len(name) + 1 : -1]
            try:
                args = [float(part) for part in body.split(",")] if body.strip() else []
            except ValueError:
                raise ValidationError(f"bad arguments in family spec {text!r}")
            try:
                return builder(*args)
            except TypeError:
                raise ValidationError(f"wrong argument count in family spec {text!r}")
    return None


# ---------------------------------------------------------------------------
# Table-backed symbols
# ---------------------------------------------------------------------------


class TableSymbol:
    """Symbol stored as samples over grid x lattice.

    Difference operators may only step within the stored frequency box;
    anything else raises TableRangeError.
    """

    def __init__(self, spec, lattice, values):
        values = np.asarray(values, dtype=np.complex128)
        expected = tuple(spec.sizes) + tuple(lattice.sizes)
        if values.shape != expected:
            raise ValidationError(f"table shape {values.shape} != grid x lattice {expected}")
        self.spec = spec
        self.lattice = lattice
        self.values = values

    def eval(self, x, xi):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        xi = np.atleast_1d(np.asarray(xi, dtype=int))
        gi = []
        for ax, n in enumerate(self.spec.sizes):
            k = x[ax] * n
            if abs(k - round(k)) > 1e-9:
                raise ValidationError(f"x[{ax}]={x[ax]:g} is not a grid point")
            gi.append(int(round(k)) % n)
        li = []
        for ax, n in enumerate(self.lattice.sizes):
            v = int(xi[ax])
            if not -(n // 2) <= v < n // 2:
                raise TableRangeError(
                    f"xi[{ax}]={v} outside stored box [{-(n // 2)}, {n // 2 - 1}]"
                )
            li.append(v + n // 2)
        return complex(self.values[tuple(gi) + tuple(li)])
