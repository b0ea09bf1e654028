"""Tiny scalar-field expression language over chart coordinates x1..x9.

Grammar (highest precedence first):

    power   :  ^  (right-associative)
    unary   :  -
    term    :  *  /
    sum     :  +  -

with functions sin, cos, exp, log, sqrt, parentheses, decimal literals and
positional variables x1..x9.  No implicit multiplication.  Parsed trees are
immutable; evaluation works over floats or Jet2 coordinates alike.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

from . import jets
from .jets import Jet2, JetDomainError

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__("%s at offset %d" % (message, position))
        self.position = position


class EvalError(ValueError):
    """Domain error during evaluation, carrying the offending node's source offset."""

    def __init__(self, message: str, position: int):
        super().__init__("%s (at offset %d)" % (message, position))
        self.position = position


@dataclass(frozen=True)
class Lit:
    value: float
    pos: int = 0


@dataclass(frozen=True)
class Var:
    index: int  # zero-based
    pos: int = 0


@dataclass(frozen=True)
class Unary:
    op: str  # "neg"
    child: "Expr"
    pos: int = 0


@dataclass(frozen=True)
class Binary:
    op: str  # add sub mul div pow
    left: "Expr"
    right: "Expr"
    pos: int = 0


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"
    pos: int = 0


Expr = Union[Lit, Var, Unary, Binary, Call]


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.i = 0

    def error(self, msg):
        raise ParseError(msg, self.i)

    def skip_ws(self):
        while self.i < len(self.text) and self.text[self.i].isspace():
            self.i += 1

    def peek(self):
        self.skip_ws()
        return self.text[self.i] if self.i < len(self.text) else ""

    def parse(self) -> Expr:
        e = self.parse_sum()
        if self.peek():
            self.error("unexpected trailing input")
        return e

    def parse_sum(self) -> Expr:
        left = self.parse_term()
        while True:
            c = self.peek()
            if not c or c not in "+-":
                return left
            pos = self.i
            self.i += 1
            right = self.parse_term()
            left = Binary("add" if c == "+" else "sub", left, right, pos)

    def parse_term(self) -> Expr:
        left = self.parse_unary()
        while True:
            c = self.peek()
            if not c or c not in "*/":
                return left
            pos = self.i
            self.i += 1
            right = self.parse_unary()
            left = Binary("mul" if c == "*" else "div", left, right, pos)

    def parse_unary(self) -> Expr:
        if self.peek() == "-":
            pos = self.i
            self.i += 1
            return Unary("neg", self.parse_unary(), pos)
        return self.parse_power()

    def parse_power(self) -> Expr:
        base = self.parse_atom()
        if self.peek() == "^":
            pos = self.i
            self.i += 1
            # right-associative; allow a unary minus in the exponent
            exponent = self.parse_unary_power()
            return Binary("pow", base, exponent, pos)
        return base

    def parse_unary_power(self) -> Expr:
        if self.peek() == "-":
            pos = self.i
            self.i += 1
            return Unary("neg", self.parse_unary_power(), pos)
        return self.parse_power()

    def parse_atom(self) -> Expr:
        c = self.peek()
        pos = self.i
        if c == "(":
            self.i += 1
            e = self.parse_sum()
            if self.peek() != ")":
                self.error("expected ')'")
            self.i += 1
            return e
        if c.isdigit() or c == ".":
            return self.parse_number()
        if c.isalpha():
            return self.parse_ident()
        self.error("expected a number, variable, function or '('")

    def parse_number(self) -> Lit:
        pos = self.i
        j = self.i
        text = self.text
        while j < len(text) and (text[j].isdigit() or text[j] == "."):
            j += 1
        if j < len(text) and text[j] in "eE":
            k = j + 1
            if k < len(text) and text[k] in "+-":
                k += 1
            if k < len(text) and text[k].isdigit():
                while k < len(text) and text[k].isdigit():
                    k += 1
                j = k
        token = text[pos:j]
        try:
            value = float(token)
        except ValueError:
            self.error("malformed number %r" % token)
        self.i = j
        return Lit(value, pos)

    def parse_ident(self) -> Expr:
        pos = self.i
        j = self.i
        text = self.text
        while j < len(text) and (text[j].isalnum() or text[j] == "_"):
            j += 1
        name = text[pos:j]
        self.i = j
        if len(name) == 2 and name[0] == "x" and name[1].isdigit() and name[1] != "0":
            return Var(int(name[1]) - 1, pos)
        if name in FUNCTIONS:
            if self.peek() != "(":
                self.error("function %r requires parenthesized argument" % name)
            self.i += 1
            arg = self.parse_sum()
            if self.peek() != ")":
                self.error("expected ')' closing call to %r" % name)
            self.i += 1
            return Call(name, arg, pos)
        self.error("unknown identifier %r" % name)


def parse(text: str) -> Expr:
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    return _Parser(text).parse()


def eval_jet(e: Expr, coords):
    """Evaluate an expression at seeded coordinates (Jet2 or plain floats)."""
    if isinstance(e, Lit):
        if coords and isinstance(coords[0], Jet2):
            return Jet2.constant(e.value, coords[0].dim)
        return e.value
    if isinstance(e, Var):
        if e.index >= len(coords):
            raise EvalError("variable x%d exceeds chart dimension %d"
                            % (e.index + 1, len(coords)), e.pos)
        return coords[e.index]
    if isinstance(e, Unary):
        return -eval_jet(e.child, coords)
    if isinstance(e, Binary):
        a = eval_jet(e.left, coords)
        b = eval_jet(e.right, coords)
        try:
            return jets.jet_binary(e.op, a, b)
        except JetDomainError as err:
            raise EvalError(str(err), e.pos) from err
    if isinstance(e, Call):
        a = eval_jet(e.arg, coords)
        try:
            return jets.jet_unary(e.func, a)
        except JetDomainError as err:
            raise EvalError("%s in call to %s" % (err, e.func), e.pos) from err
    raise TypeError("not an expression node: %r" % (e,))


_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2, "pow": 4}
_SYM = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}


def to_text(e: Expr, _parent_prec: int = 0) -> str:
    """Canonical printer; ``parse(to_text(parse(s)))`` equals ``parse(s)``
    up to source offsets."""
    if isinstance(e, Lit):
        s = repr(e.value)
        return s[:-2] if s.endswith(".0") else s
    if isinstance(e, Var):
        return "x%d" % (e.index + 1)
    if isinstance(e, Unary):
        inner = to_text(e.child, 3)
        s = "-" + inner
        return "(" + s + ")" if _parent_prec > 3 else s
    if isinstance(e, Binary):
        prec = _PREC[e.op]
        # print left/right with a bump where associativity demands parens
        ls = to_text(e.left, prec if e.op != "pow" else prec + 1)
        rs = to_text(e.right, prec + 1 if e.op != "pow" else prec)
        s = "%s %s %s" % (ls, _SYM[e.op], rs) if e.op != "pow" \
            else "%s^%s" % (ls, rs)
        return "(" + s + ")" if prec < _parent_prec else s
    if isinstance(e, Call):
        return "%s(%s)" % (e.func, to_text(e.arg))
    raise TypeError("not an expression node: %r" % (e,))


def max_var_index(e: Expr) -> int:
    """Highest zero-based variable index used, or -1 for constants."""
    if isinstance(e, Var):
        return e.index
    if isinstance(e, Unary):
        return max_var_index(e.child)
    if isinstance(e, Binary):
        return max(max_var_index(e.left), max_var_index(e.right))
    if isinstance(e, Call):
        return max_var_index(e.arg)
    return -1
