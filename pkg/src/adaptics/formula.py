"""Arithmetic formula language for adaptive tacton fields.

Formulas combine external parameter names and numeric constants with
``+ - * /``, unary minus, and parentheses.  Identifiers are
``[A-Za-z_][A-Za-z0-9_]*``; arbitrary parameter names (anything except a
backtick) can be written backtick-quoted, e.g. ``` `heart rate` * 2 ```.
The grammar is part of the ``.adaptics`` format contract and is documented
in ``docs/adaptics-format.md``.

Evaluation is total: parameters missing from the environment read as 0,
and a non-finite final result (division by zero, inf - inf, ...) is
sanitized to 0 with a warning flag.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Iterator, Mapping, Union

__all__ = [
    "Const",
    "Param",
    "Neg",
    "BinOp",
    "Expr",
    "FormulaError",
    "parse_formula",
    "eval_formula",
    "eval_formula_ex",
    "referenced_params",
    "compile_expr",
    "count_operations",
    "is_valid_param_name",
    "format_param_ref",
]

_INF = math.inf


class FormulaError(ValueError):
    """Syntax error with character position and the tokens that were expected."""

    def __init__(self, message: str, position: int, expected: frozenset[str] = frozenset()):
        super().__init__(f"{message} at position {position}")
        self.position = position
        self.expected = expected


@dataclass(frozen=True, slots=True)
class Const:
    value: float


@dataclass(frozen=True, slots=True)
class Param:
    name: str


@dataclass(frozen=True, slots=True)
class Neg:
    child: "Expr"


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


Expr = Union[Const, Param, Neg, BinOp]

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<number>\d+(?:\.\d*)?(?:[eE][+-]?\d+)? | \.\d+(?:[eE][+-]?\d+)?)
      | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
      | (?P<quoted>`[^`]*`)
      | (?P<op>[-+*/()])
    """,
    re.VERBOSE,
)

_VALUE_EXPECTED = frozenset({"number", "parameter", "(", "-"})
_AFTER_VALUE = frozenset({"+", "-", "*", "/"})


def is_valid_param_name(name: str) -> bool:
    """A parameter is referencable if nonempty and free of backticks."""
    return isinstance(name, str) and name != "" and "`" not in name


def format_param_ref(name: str) -> str:
    """Render a parameter name as it appears in formula source."""
    if _IDENT_RE.fullmatch(name):
        return name
    return f"`{name}`"


def _tokenize(text: str) -> Iterator[tuple[str, str, int]]:
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            if text[pos] == "`":
                raise FormulaError("unterminated quoted parameter", pos)
            raise FormulaError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            yield kind, m.group(), pos
        pos = m.end()
    yield "end", "", n


class _Parser:
    def __init__(self, text: str):
        self._tokens = list(_tokenize(text))
        self._i = 0

    @property
    def _tok(self) -> tuple[str, str, int]:
        return self._tokens[self._i]

    def _advance(self) -> None:
        self._i += 1

    def parse(self) -> Expr:
        node = self._expr()
        kind, text, pos = self._tok
        if kind != "end":
            raise FormulaError(f"unexpected {text!r}", pos, _AFTER_VALUE)
        return node

    def _expr(self) -> Expr:
        node = self._term()
        while self._tok[0] == "op" and self._tok[1] in "+-":
            op = self._tok[1]
            self._advance()
            node = BinOp(op, node, self._term())
        return node

    def _term(self) -> Expr:
        node = self._factor()
        while self._tok[0] == "op" and self._tok[1] in "*/":
            op = self._tok[1]
            self._advance()
            node = BinOp(op, node, self._factor())
        return node

    def _factor(self) -> Expr:
        kind, text, pos = self._tok
        if kind == "op" and text == "-":
            self._advance()
            return Neg(self._factor())
        return self._primary()

    def _primary(self) -> Expr:
        kind, text, pos = self._tok
        if kind == "number":
            value = float(text)
            if not math.isfinite(value):
                raise FormulaError("number literal overflows", pos)
            self._advance()
            return Const(value)
        if kind == "ident":
            self._advance()
            return Param(text)
        if kind == "quoted":
            name = text[1:-1]
            if name == "":
                raise FormulaError("empty parameter name", pos)
            self._advance()
            return Param(name)
        if kind == "op" and text == "(":
            self._advance()
            node = self._expr()
            kind, text, pos = self._tok
            if not (kind == "op" and text == ")"):
                raise FormulaError(
                    "expected ')'", pos, frozenset({")"}) | _AFTER_VALUE
                )
            self._advance()
            return node
        shown = text if text else "end of formula"
        raise FormulaError(f"expected a value, found {shown!r}", pos, _VALUE_EXPECTED)


def parse_formula(text: str) -> Expr:
    """Parse formula source into an expression tree.

    Standard precedence (``* /`` bind tighter than ``+ -``), left
    associativity, parentheses, unary minus.  Raises FormulaError with a
    character position on bad input.
    """
    return _Parser(text).parse()


def _ieee_div(a: float, b: float) -> float:
    # Python float division raises on b == +-0.0; formulas follow IEEE instead.
    if b != 0.0:
        return a / b
    if a != a or a == 0.0:
        return math.nan
    if (math.copysign(1.0, a) < 0.0) != (math.copysign(1.0, b) < 0.0):
        return -_INF
    return _INF


def _ev(node: Expr, env: Mapping[str, float]) -> float:
    t = node.__class__
    if t is BinOp:
        a = _ev(node.left, env)
        b = _ev(node.right, env)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        return _ieee_div(a, b)
    if t is Const:
        return node.value
    if t is Param:
        return env.get(node.name, 0.0)
    return -_ev(node.child, env)


def eval_formula_ex(e: Expr, env: Mapping[str, float]) -> tuple[float, bool]:
    """Evaluate; returns (value, warned).

    ``warned`` is True when the raw result was non-finite and got
    sanitized to 0.
    """
    v = _ev(e, env)
    if -_INF < v < _INF:
        return v, False
    return 0.0, True


def eval_formula(e: Expr, env: Mapping[str, float]) -> float:
    """Evaluate to a float; always finite (non-finite results become 0)."""
    v = _ev(e, env)
    if -_INF < v < _INF:
        return v
    return 0.0


def referenced_params(e: Expr) -> frozenset[str]:
    """Exact set of parameter names appearing in the tree."""
    out: set[str] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        t = node.__class__
        if t is Param:
            out.add(node.name)
        elif t is BinOp:
            stack.append(node.left)
            stack.append(node.right)
        elif t is Neg:
            stack.append(node.child)
    return frozenset(out)


def count_operations(e: Expr) -> int:
    """Number of operator nodes (binary ops and negations)."""
    n = 0
    stack = [e]
    while stack:
        node = stack.pop()
        t = node.__class__
        if t is BinOp:
            n += 1
            stack.append(node.left)
            stack.append(node.right)
        elif t is Neg:
            n += 1
            stack.append(node.child)
    return n


def _gen(node: Expr) -> str:
    t = node.__class__
    if t is Const:
        return repr(node.value)
    if t is Param:
        return f"e.get({node.name!r},0.0)"
    if t is Neg:
        return f"(-{_gen(node.child)})"
    if node.op == "/":
        return f"_d({_gen(node.left)},{_gen(node.right)})"
    return f"({_gen(node.left)}{node.op}{_gen(node.right)})"


def compile_expr(e: Expr) -> Callable[[Mapping[str, float]], float]:
    """Compile a tree into a fast raw evaluator.

    The returned callable performs the identical arithmetic as _ev but as
    straight-line bytecode; the result is NOT sanitized (callers on the
    hot path do their own finite check so they can count warnings).
    """
    src = f"lambda e: ({_gen(e)})"
    return eval(compile(src, "<formula>", "eval"), {"__builtins__": {}, "_d": _ieee_div})
