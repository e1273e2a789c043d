"""Scalar expressions over named variables.

Expressions are parsed from a small arithmetic grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-'? power
    power  := atom ('^' integer)?
    atom   := number | ident | ident '(' expr ')' | '(' expr ')'

The only functions are ``exp``, ``sin`` and ``cos``, and powers take
non-negative integer literals, so every expression is smooth away from the
poles of ``/`` and the class is closed under differentiation.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from itertools import product
from typing import Mapping, Sequence

__all__ = [
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Func",
    "Expression",
    "ExpressionError",
    "ParseError",
    "NonFiniteError",
    "parse",
    "evaluate",
    "differentiate",
    "taylor_coefficients",
    "polynomial",
    "MAX_TAYLOR_ORDER",
]

MAX_TAYLOR_ORDER = 5
FUNCTIONS = ("exp", "sin", "cos")


class ExpressionError(ValueError):
    pass


class ParseError(ExpressionError):
    """Syntax error; ``offset`` is the UTF-8 byte offset into the source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte offset {offset})")
        self.offset = offset


class NonFiniteError(ExpressionError, ArithmeticError):
    pass


# -- AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Func:
    name: str
    arg: "Node"


Node = Const | Var | Neg | BinOp | Pow | Func

ZERO = Const(0.0)
ONE = Const(1.0)


def _is_const(node, value=None):
    return isinstance(node, Const) and (value is None or node.value == value)


# Smart constructors.  They fold literal zeros/ones and constant subtrees;
# nothing else is simplified.


def add(a, b):
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return BinOp("+", a, b)


def sub(a, b):
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    return BinOp("-", a, b)


def mul(a, b):
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    return BinOp("*", a, b)


def div(a, b):
    if _is_const(b, 1.0):
        return a
    if _is_const(a, 0.0) and not _is_const(b, 0.0):
        return ZERO
    return BinOp("/", a, b)


def neg(a):
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(base, k: int):
    if k == 0:
        return ONE
    if k == 1:
        return base
    if _is_const(base):
        return Const(_safe_pow(base.value, k))
    return Pow(base, k)


# -- numerics with IEEE semantics ---------------------------------------------


def _safe_div(a: float, b: float) -> float:
    if b == 0.0:
        if a == 0.0 or math.isnan(a):
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)
    return a / b


def _safe_pow(a: float, k: int) -> float:
    try:
        return a**k
    except OverflowError:
        return math.copysign(math.inf, a) if k % 2 else math.inf


def _safe_exp(a: float) -> float:
    try:
        return math.exp(a)
    except OverflowError:
        return math.inf


def _safe_trig(fn, a: float) -> float:
    try:
        return fn(a)
    except ValueError:
        return math.nan


def _eval(node, x) -> float:
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x[node.index]
    if isinstance(node, Neg):
        return -_eval(node.arg, x)
    if isinstance(node, BinOp):
        a = _eval(node.left, x)
        b = _eval(node.right, x)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        return _safe_div(a, b)
    if isinstance(node, Pow):
        return _safe_pow(_eval(node.base, x), node.exponent)
    if isinstance(node, Func):
        a = _eval(node.arg, x)
        if node.name == "exp":
            return _safe_exp(a)
        return _safe_trig(math.sin if node.name == "sin" else math.cos, a)
    raise TypeError(f"not an expression node: {node!r}")


def _diff(node, var: int):
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.index == var else ZERO
    if isinstance(node, Neg):
        return neg(_diff(node.arg, var))
    if isinstance(node, BinOp):
        da = _diff(node.left, var)
        db = _diff(node.right, var)
        if node.op == "+":
            return add(da, db)
        if node.op == "-":
            return sub(da, db)
        if node.op == "*":
            return add(mul(da, node.right), mul(node.left, db))
        # quotient rule
        num = sub(mul(da, node.right), mul(node.left, db))
        return div(num, power(node.right, 2))
    if isinstance(node, Pow):
        k = node.exponent
        if k == 0:
            return ZERO
        return mul(mul(Const(float(k)), power(node.base, k - 1)), _diff(node.base, var))
    if isinstance(node, Func):
        du = _diff(node.arg, var)
        if node.name == "exp":
            outer = node
        elif node.name == "sin":
            outer = Func("cos", node.arg)
        else:
            outer = neg(Func("sin", node.arg))
        return mul(outer, du)
    raise TypeError(f"not an expression node: {node!r}")


def _uses(node, acc: set):
    if isinstance(node, Var):
        acc.add(node.index)
    elif isinstance(node, (Neg, Func)):
        _uses(node.arg, acc)
    elif isinstance(node, BinOp):
        _uses(node.left, acc)
        _uses(node.right, acc)
    elif isinstance(node, Pow):
        _uses(node.base, acc)
    return acc


# -- printing -----------------------------------------------------------------
#
# Output is fully parenthesised so that parse(str(e)) rebuilds an expression
# that evaluates bit-identically.


def _fmt_number(v: float) -> str:
    if not math.isfinite(v):
        raise ExpressionError(f"cannot print non-finite constant {v!r}")
    text = repr(abs(v))
    return f"(-{text})" if math.copysign(1.0, v) < 0 else text


def _to_text(node, names) -> str:
    if isinstance(node, Const):
        return _fmt_number(node.value)
    if isinstance(node, Var):
        return names[node.index]
    if isinstance(node, Neg):
        return f"(-{_to_text(node.arg, names)})"
    if isinstance(node, BinOp):
        return f"({_to_text(node.left, names)} {node.op} {_to_text(node.right, names)})"
    if isinstance(node, Pow):
        base = _to_text(node.base, names)
        # '^' is right-associative, so a power base needs its own parentheses
        if isinstance(node.base, Pow):
            base = f"({base})"
        return f"{base}^{node.exponent}"
    if isinstance(node, Func):
        return f"{node.name}({_to_text(node.arg, names)})"
    raise TypeError(node)


def _to_source(node, vec: str) -> str:
    """Python/numba source; variables become ``vec[i]``."""
    if isinstance(node, Const):
        return f"({node.value!r})"
    if isinstance(node, Var):
        return f"{vec}[{node.index}]"
    if isinstance(node, Neg):
        return f"(-{_to_source(node.arg, vec)})"
    if isinstance(node, BinOp):
        return f"({_to_source(node.left, vec)} {node.op} {_to_source(node.right, vec)})"
    if isinstance(node, Pow):
        return f"({_to_source(node.base, vec)} ** {node.exponent})"
    if isinstance(node, Func):
        return f"math.{node.name}({_to_source(node.arg, vec)})"
    raise TypeError(node)


# -- Expression ---------------------------------------------------------------


@dataclass(frozen=True)
class Expression:
    """An immutable AST together with its declared variable list."""

    root: Node
    variables: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        bad = [i for i in _uses(self.root, set()) if not 0 <= i < len(self.variables)]
        if bad:
            raise ExpressionError(f"variable index {bad[0]} out of range for arity {self.arity}")

    @property
    def arity(self) -> int:
        return len(self.variables)

    def __str__(self) -> str:
        return _to_text(self.root, self.variables)

    def to_source(self, vec: str = "x") -> str:
        return _to_source(self.root, vec)

    @cached_property
    def free_variables(self) -> frozenset[int]:
        return frozenset(_uses(self.root, set()))

    def evaluate(self, point: Sequence[float]) -> float:
        return evaluate(self, point)

    def __call__(self, *point: float) -> float:
        return evaluate(self, point)

    def differentiate(self, var: int | str) -> "Expression":
        return differentiate(self, var)

    def taylor_coefficients(self, center, order: int) -> dict[tuple[int, ...], float]:
        return taylor_coefficients(self, center, order)


def evaluate(e: Expression, point: Sequence[float]) -> float:
    """Evaluate in binary64.

    Division by zero, overflow and trig of infinities give inf/nan instead of
    raising; callers that need finite values check the result.
    """
    if len(point) != e.arity:
        raise ExpressionError(f"point has length {len(point)}, expression arity is {e.arity}")
    return float(_eval(e.root, [float(v) for v in point]))


def _var_index(e: Expression, var: int | str) -> int:
    if isinstance(var, str):
        try:
            return e.variables.index(var)
        except ValueError:
            raise ExpressionError(f"unknown variable {var!r}") from None
    if not 0 <= var < e.arity:
        raise ExpressionError(f"variable index {var} out of range for arity {e.arity}")
    return var


def differentiate(e: Expression, var: int | str) -> Expression:
    """Exact symbolic partial derivative."""
    return Expression(_diff(e.root, _var_index(e, var)), e.variables)


def taylor_coefficients(e: Expression, center, order: int) -> dict[tuple[int, ...], float]:
    """Taylor coefficients of total degree <= ``order`` about ``center``.

    Keys are multi-indices (one exponent per variable); exact zeros are left
    out.  Each coefficient is the mixed partial derivative at ``center``
    divided by the multi-index factorial.
    """
    if not 0 <= order <= MAX_TAYLOR_ORDER:
        raise ExpressionError(f"Taylor order must be in [0, {MAX_TAYLOR_ORDER}], got {order}")
    center = [float(c) for c in center]
    if len(center) != e.arity:
        raise ExpressionError(f"center has length {len(center)}, expression arity is {e.arity}")
    n = e.arity
    used = e.free_variables
    derivs: dict[tuple[int, ...], Node] = {(0,) * n: e.root}
    out: dict[tuple[int, ...], float] = {}
    for degree in range(order + 1):
        for alpha in _multi_indices(n, degree):
            if any(a and i not in used for i, a in enumerate(alpha)):
                continue
            if degree:
                # differentiate the parent obtained by lowering the last nonzero slot
                i = max(j for j, a in enumerate(alpha) if a)
                parent = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1 :]
                node = derivs.get(parent)
                if node is None:
                    continue
                node = _diff(node, i)
                if _is_const(node, 0.0):
                    continue
                derivs[alpha] = node
            value = _eval(derivs[alpha], center)
            if not math.isfinite(value):
                raise NonFiniteError(f"derivative {alpha} is not finite at {center}")
            if value != 0.0:
                out[alpha] = value / math.prod(math.factorial(a) for a in alpha)
    return out


def _multi_indices(n: int, degree: int):
    for alpha in product(range(degree + 1), repeat=n):
        if sum(alpha) == degree:
            yield alpha


def polynomial(coefficients: Sequence[float], variables: Sequence[str], var: int = 0) -> Expression:
    """Build ``sum_j coefficients[j] * x_var**j`` as an expression."""
    x = Var(var)
    root = ZERO
    for j, c in enumerate(coefficients):
        if c != 0.0:
            root = add(root, mul(Const(float(c)), power(x, j)))
    return Expression(root, tuple(variables))


# -- parser -------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[^\W\d]\w*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE | re.UNICODE,
)


class _Parser:
    def __init__(self, text: str, variables: Sequence[str], parameters: Mapping[str, float]):
        self.text = text
        self.names = {name: i for i, name in enumerate(variables)}
        self.parameters = parameters
        self.tokens = self._tokenize()
        self.pos = 0

    def _offset(self, char_pos: int) -> int:
        return len(self.text[:char_pos].encode("utf-8"))

    def _tokenize(self):
        tokens = []
        i = 0
        while i < len(self.text):
            m = _TOKEN.match(self.text, i)
            if not m:
                raise ParseError(f"unexpected character {self.text[i]!r}", self._offset(i))
            if m.lastgroup != "ws":
                tokens.append((m.lastgroup, m.group(), i))
            i = m.end()
        tokens.append(("end", "", len(self.text)))
        return tokens

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ParseError(message, self._offset(tok[2]))

    def expect(self, value):
        tok = self.peek()
        if tok[1] != value or tok[0] == "end":
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {value!r}, found {what}")
        return self.take()

    def parse(self):
        if self.peek()[0] == "end":
            raise self.error("empty expression")
        node = self.expr()
        if self.peek()[0] != "end":
            raise self.error(f"unexpected {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        if self.peek()[1] == "-" and self.peek()[0] == "op":
            self.take()
            return Neg(self.power())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[1] == "^":
            self.take()
            return Pow(base, self.integer())
        return base

    def integer(self) -> int:
        tok = self.peek()
        if tok[0] != "number" or not tok[1].isdigit():
            raise self.error("exponent must be a non-negative integer literal")
        self.take()
        k = int(tok[1])
        if self.peek()[1] == "^":  # right-associative: x^2^3 == x^8
            self.take()
            k = k ** self.integer()
        return k

    def atom(self):
        tok = self.peek()
        kind, value, _ = tok
        if kind == "number":
            self.take()
            return Const(float(value))
        if kind == "ident":
            self.take()
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Func(value, arg)
            if value in self.names:
                return Var(self.names[value])
            if value in self.parameters:
                return Const(float(self.parameters[value]))
            raise self.error(f"unknown identifier {value!r}", tok)
        if value == "(":
            self.take()
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(value)
        raise self.error(f"expected a number, name or '(', found {what}")


def parse(
    text: str,
    variables: Sequence[str],
    parameters: Mapping[str, float] | None = None,
) -> Expression:
    """Parse ``text`` over the ordered ``variables``.

    ``parameters`` maps extra identifiers to numeric constants that are
    substituted at parse time.
    """
    variables = tuple(variables)
    if not variables:
        raise ExpressionError("at least one variable must be declared")
    if len(set(variables)) != len(variables):
        raise ExpressionError(f"duplicate variable names in {variables}")
    for name in variables:
        if not name.isidentifier() or name in FUNCTIONS:
            raise ExpressionError(f"invalid variable name {name!r}")
    root = _Parser(text, variables, parameters or {}).parse()
    return Expression(root, variables)
