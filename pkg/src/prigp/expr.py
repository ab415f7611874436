"""A small arithmetic expression language for prior mean functions.

Agents' priors are given in configuration files as strings like
``"sin(2*x)"`` or ``"-10*sin(z) - 10*x - 0.5/(1 + exp(-x*y/10))"``.  The
grammar covers numbers, variables (``x, y, z`` or ``x1..xm``), unary minus,
``+ - * / ^`` (``^`` binds tightest, all binaries left-associative) and the
calls ``sin cos exp log abs sqrt``.  A built-in catalog maps stable names
(``prior.sin2x``, ``prior.lorenz_f``, ...) to the expressions used by the
shipped benchmark configurations.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, InputError, NumericError

# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


Node = Const | Var | Neg | BinOp | Call

FUNCTIONS = ("sin", "cos", "exp", "log", "abs", "sqrt")

_SCALAR_FN = {"sin": math.sin, "cos": math.cos, "exp": math.exp,
              "log": math.log, "abs": abs, "sqrt": math.sqrt}
_ARRAY_FN = {"sin": np.sin, "cos": np.cos, "exp": np.exp,
             "log": np.log, "abs": np.abs, "sqrt": np.sqrt}


def to_source(node):
    """Fully parenthesized source; parse(to_source(a)) evaluates like ``a``."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    return f"{node.fn}({to_source(node.arg)})"


def max_var_index(node):
    """Largest variable index used, or -1 for constant expressions."""
    if isinstance(node, Const):
        return -1
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Neg):
        return max_var_index(node.operand)
    if isinstance(node, BinOp):
        return max(max_var_index(node.left), max_var_index(node.right))
    return max_var_index(node.arg)


# ---------------------------------------------------------------------------
# Tokenizer / recursive-descent parser
# ---------------------------------------------------------------------------


class ExprSyntaxError(InputError):
    """Parse failure; carries byte offset and the expected-token set."""

    def __init__(self, message, position, expected=()):
        self.position = position
        self.expected = tuple(expected)
        hint = f" (expected one of: {', '.join(expected)})" if expected else ""
        super().__init__(f"{message} at offset {position}{hint}")


_TOKEN_RE = re.compile(r"""
    (?P<num>(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^()])
  | (?P<ws>\s+)
""", re.VERBOSE)

_VAR_RE = re.compile(r"^x([1-9]\d*)$")
_VAR_LETTERS = {"x": 0, "y": 1, "z": 2}


def _tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {source[pos]!r}", pos)
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source):
        self.source = source
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected):
        kind, text, pos = self.peek()
        what = "end of input" if kind == "eof" else repr(text)
        raise ExprSyntaxError(f"unexpected {what}", pos, expected)

    # expr := term (('+'|'-') term)*
    def expr(self):
        node = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    # term := unary (('*'|'/') unary)*
    def term(self):
        node = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.advance()[1]
            node = BinOp(op, node, self.unary())
        return node

    # unary := '-' unary | power
    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Neg(self.unary())
        return self.power()

    # power := atom ('^' exponent)*   (left-associative chain)
    def power(self):
        node = self.atom()
        while self.peek()[:2] == ("op", "^"):
            self.advance()
            node = BinOp("^", node, self.exponent())
        return node

    # exponent := '-' exponent | atom   (allows 2^-3 without re-entering ^)
    def exponent(self):
        if self.peek()[:2] == ("op", "-"):
            self.advance()
            return Neg(self.exponent())
        return self.atom()

    def atom(self):
        kind, text, pos = self.peek()
        if kind == "num":
            self.advance()
            return Const(float(text))
        if kind == "ident":
            self.advance()
            if text in FUNCTIONS:
                if self.peek()[:2] != ("op", "("):
                    self.fail(("(",))
                self.advance()
                arg = self.expr()
                if self.peek()[:2] != ("op", ")"):
                    self.fail((")",))
                self.advance()
                return Call(text, arg)
            if text in _VAR_LETTERS:
                return Var(_VAR_LETTERS[text], text)
            m = _VAR_RE.match(text)
            if m:
                return Var(int(m.group(1)) - 1, text)
            raise ExprSyntaxError(f"unknown identifier {text!r}", pos,
                                  ("x", "y", "z", "x<k>") + FUNCTIONS)
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            if self.peek()[:2] != ("op", ")"):
                self.fail((")",))
            self.advance()
            return node
        self.fail(("number", "identifier", "(", "-"))


def parse(source):
    """Parse ``source`` into an AST; raises ExprSyntaxError with offset."""
    if not source or not source.strip():
        raise ExprSyntaxError("empty expression", 0,
                              ("number", "identifier", "(", "-"))
    p = _Parser(source)
    node = p.expr()
    if p.peek()[0] != "eof":
        p.fail(("end of input", "operator"))
    return node


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def _guard_scalar(value, node):
    if not math.isfinite(value):
        raise NumericError(f"non-finite value in {to_source(node)}")
    return value


def evaluate(node, point):
    """Evaluate at a single point (sequence of reals); guarded arithmetic."""
    point = np.atleast_1d(np.asarray(point, dtype=float))
    if max_var_index(node) >= point.size:
        raise InputError(f"expression uses dimension {max_var_index(node) + 1}, "
                         f"point has {point.size}")
    return _eval_scalar(node, point)


def _eval_scalar(node, point):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return float(point[node.index])
    if isinstance(node, Neg):
        return -_eval_scalar(node.operand, point)
    if isinstance(node, Call):
        arg = _eval_scalar(node.arg, point)
        if node.fn == "log" and arg <= 0.0:
            raise NumericError(f"log of nonpositive value in {to_source(node)}")
        if node.fn == "sqrt" and arg < 0.0:
            raise NumericError(f"sqrt of negative value in {to_source(node)}")
        try:
            return _guard_scalar(_SCALAR_FN[node.fn](arg), node)
        except (ValueError, OverflowError) as exc:
            raise NumericError(f"{exc} in {to_source(node)}") from exc
    left = _eval_scalar(node.left, point)
    right = _eval_scalar(node.right, point)
    if node.op == "/" and right == 0.0:
        raise NumericError(f"division by zero in {to_source(node)}")
    try:
        if node.op == "+":
            value = left + right
        elif node.op == "-":
            value = left - right
        elif node.op == "*":
            value = left * right
        elif node.op == "/":
            value = left / right
        else:
            value = math.pow(left, right)
    except (ValueError, OverflowError) as exc:
        raise NumericError(f"{exc} in {to_source(node)}") from exc
    return _guard_scalar(value, node)


def evaluate_many(node, X):
    """Vectorized evaluation over the rows of ``X`` (shape (n, m)); same guards."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if max_var_index(node) >= X.shape[1]:
        raise InputError(f"expression uses dimension {max_var_index(node) + 1}, "
                         f"points have {X.shape[1]}")
    with np.errstate(all="ignore"):
        out = _eval_array(node, X)
    return out


def _guard_array(values, node):
    if not np.isfinite(values).all():
        raise NumericError(f"non-finite value in {to_source(node)}")
    return values


def _eval_array(node, X):
    if isinstance(node, Const):
        return np.full(X.shape[0], node.value)
    if isinstance(node, Var):
        return X[:, node.index].copy()
    if isinstance(node, Neg):
        return -_eval_array(node.operand, X)
    if isinstance(node, Call):
        arg = _eval_array(node.arg, X)
        if node.fn == "log" and np.any(arg <= 0.0):
            raise NumericError(f"log of nonpositive value in {to_source(node)}")
        if node.fn == "sqrt" and np.any(arg < 0.0):
            raise NumericError(f"sqrt of negative value in {to_source(node)}")
        return _guard_array(_ARRAY_FN[node.fn](arg), node)
    left = _eval_array(node.left, X)
    right = _eval_array(node.right, X)
    if node.op == "/" and np.any(right == 0.0):
        raise NumericError(f"division by zero in {to_source(node)}")
    ops = {"+": np.add, "-": np.subtract, "*": np.multiply,
           "/": np.divide, "^": np.power}
    return _guard_array(ops[node.op](left, right), node)


# ---------------------------------------------------------------------------
# Lipschitz estimation (max gradient norm on a grid, central differences)
# ---------------------------------------------------------------------------

LIPSCHITZ_FLOOR = 1e-12
LIPSCHITZ_SAFETY = 1.1


def lipschitz_estimate(node, box, per_dim=50, cap=100_000):
    """Estimated Lipschitz constant of the expression over a box domain.

    Max gradient norm over a uniform grid, central finite differences with
    step 1e-5 of the box width per dimension, times a 1.1 safety factor.
    """
    grid = box.grid(per_dim=per_dim, cap=cap)
    steps = 1e-5 * box.widths
    sq = np.zeros(grid.shape[0])
    for j in range(box.dim):
        hi = grid.copy()
        lo = grid.copy()
        hi[:, j] += steps[j]
        lo[:, j] -= steps[j]
        dj = (evaluate_many(node, hi) - evaluate_many(node, lo)) / (2 * steps[j])
        sq += dj * dj
    return max(float(np.sqrt(sq.max())) * LIPSCHITZ_SAFETY, LIPSCHITZ_FLOOR)


# ---------------------------------------------------------------------------
# PriorMeanFunction + catalog
# ---------------------------------------------------------------------------


class PriorMeanFunction:
    """A parsed prior mean: callable on points, with batch and Lipschitz helpers."""

    def __init__(self, source, dim):
        self.source = source
        self.ast = parse(source)
        if max_var_index(self.ast) >= dim:
            raise ConfigError(f"prior {source!r} uses dimension "
                              f"{max_var_index(self.ast) + 1}, domain has {dim}")
        self.dim = dim

    def __call__(self, point):
        return _eval_scalar(self.ast, np.atleast_1d(np.asarray(point, dtype=float)))

    def evaluate_batch(self, X):
        return evaluate_many(self.ast, X)

    def lipschitz(self, box):
        return lipschitz_estimate(self.ast, box)

    def __repr__(self):
        return f"PriorMeanFunction({self.source!r}, dim={self.dim})"


#: named priors used by the shipped benchmark configurations
CATALOG = {
    "prior.zero": "0",
    "prior.neg_one": "-1",
    "prior.sin2x": "sin(2*x)",
    "prior.cos2x": "cos(2*x)",
    "prior.lorenz_f": "-10*sin(z) - 10*x - 0.5/(1 + exp(-x*y/10))",
    "prior.lorenz_sin": "-10*sin(z)",
    "prior.lorenz_xlin": "-10*x",
    "prior.lorenz_ymix": "10*y - 0.5/(1 + exp(-x*y/10))",
    "prior.lorenz_logistic": "-0.5/(1 + exp(-x*y/10))",
    "prior.lorenz_cos": "-10*cos(z)",
}


def resolve_prior(spec, dim):
    """Build a PriorMeanFunction from a catalog name or an inline expression."""
    if spec.startswith("prior."):
        try:
            source = CATALOG[spec]
        except KeyError:
            raise ConfigError(f"unknown catalog prior {spec!r}; "
                              f"known: {sorted(CATALOG)}") from None
        return PriorMeanFunction(source, dim)
    return PriorMeanFunction(spec, dim)
