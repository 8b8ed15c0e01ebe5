"""Recursive-descent parser for the constraint DSL.

Surface syntax, one constraint per line:

    # comments run to end of line
    open_le_total: F[open_acc] <= F[total_acc]
    F[grade] in {0, 1, 3}
    (F[debt] < F[income]) or (F[age] >= 30)
    F[total] = F[a] + F[b]

Features are written ``F[name]``, original values ``X0[name]``. Arithmetic
uses ``+ - * /`` with the usual precedence, comparisons ``< <= = == != >= >``
(=/== are synonyms), boolean connectives ``and`` / ``or`` (``and`` binds
tighter), and membership ``in {e1, e2, ...}``. A line may start with an
optional ``name:`` label; unlabeled constraints are auto-named ``c1, c2, ...``
in file order.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from tabattack.constraints import sets
from tabattack.constraints.expr import (
    And,
    Binary,
    Compare,
    Constant,
    ConstraintExpr,
    Feature,
    Membership,
    NumericExpr,
    Or,
    OriginalValue,
    is_constraint,
    is_numeric,
)
from tabattack.data.schema import Schema
from tabattack.exceptions import ConstraintSyntaxError, UnknownFeatureError

_TOKEN_RE = re.compile(
    r"""
      (?P<NUMBER>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)
    | (?P<NAME>[A-Za-z_][A-Za-z_0-9]*)
    | (?P<OP><=|>=|==|!=|[<>=+\-*/(){}\[\],:])
    | (?P<WS>[ \t]+)
    """,
    re.VERBOSE,
)

_KEYWORDS = {"and", "or", "in"}


@dataclass(frozen=True)
class _Token:
    kind: str  # NUMBER | NAME | OP | EOL
    text: str
    line: int
    column: int


def _tokenize_line(text: str, line_no: int) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(text):
        if text[pos] == "#":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ConstraintSyntaxError(f"unexpected character {text[pos]!r}", line_no, pos + 1)
        kind = m.lastgroup or ""
        if kind != "WS":
            tokens.append(_Token(kind, m.group(), line_no, pos + 1))
        pos = m.end()
    tokens.append(_Token("EOL", "", line_no, len(text) + 1))
    return tokens


class _LineParser:
    """Parses a single tokenized line into one constraint expression."""

    def __init__(self, tokens: list[_Token], schema: Schema):
        self.tokens = tokens
        self.pos = 0
        self.schema = schema

    # token access ---------------------------------------------------------

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOL":
            self.pos += 1
        return tok

    def expect_op(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind == "EOL":
            raise ConstraintSyntaxError(
                f"expected {text!r} but reached end-of-input", tok.line, tok.column
            )
        if tok.kind != "OP" or tok.text != text:
            raise ConstraintSyntaxError(f"expected {text!r}, found {tok.text!r}", tok.line, tok.column)
        return self.advance()

    def error_here(self, message: str) -> ConstraintSyntaxError:
        tok = self.peek()
        if tok.kind == "EOL":
            return ConstraintSyntaxError(f"{message} at end-of-input", tok.line, tok.column)
        return ConstraintSyntaxError(f"{message}, found {tok.text!r}", tok.line, tok.column)

    # kind checks -----------------------------------------------------------

    def _numeric(self, node, tok: _Token) -> NumericExpr:
        if not is_numeric(node):
            raise ConstraintSyntaxError(
                "expected a numeric expression, found a constraint", tok.line, tok.column
            )
        return node

    def _constraint(self, node, tok: _Token) -> ConstraintExpr:
        if not is_constraint(node):
            raise ConstraintSyntaxError(
                "expected a constraint (comparison or membership), found a bare numeric expression",
                tok.line,
                tok.column,
            )
        return node

    # grammar ---------------------------------------------------------------

    def parse_line(self) -> ConstraintExpr:
        start = self.peek()
        node = self.parse_or()
        node = self._constraint(node, start)
        tail = self.peek()
        if tail.kind != "EOL":
            raise ConstraintSyntaxError(f"unexpected trailing {tail.text!r}", tail.line, tail.column)
        return node

    def parse_or(self):
        start = self.peek()
        node = self.parse_and()
        while self.peek().kind == "NAME" and self.peek().text == "or":
            self.advance()
            rhs_start = self.peek()
            rhs = self.parse_and()
            node = Or(self._constraint(node, start), self._constraint(rhs, rhs_start))
        return node

    def parse_and(self):
        start = self.peek()
        node = self.parse_comparison()
        while self.peek().kind == "NAME" and self.peek().text == "and":
            self.advance()
            rhs_start = self.peek()
            rhs = self.parse_comparison()
            node = And(self._constraint(node, start), self._constraint(rhs, rhs_start))
        return node

    def parse_comparison(self):
        start = self.peek()
        node = self.parse_sum()
        tok = self.peek()
        if tok.kind == "OP" and tok.text in ("<", "<=", "=", "==", "!=", ">=", ">"):
            self.advance()
            op = "=" if tok.text == "==" else tok.text
            rhs_start = self.peek()
            rhs = self._numeric(self.parse_sum(), rhs_start)
            node = Compare(op, self._numeric(node, start), rhs)
            after = self.peek()
            if after.kind == "OP" and after.text in ("<", "<=", "=", "==", "!=", ">=", ">"):
                raise ConstraintSyntaxError(
                    "chained comparisons are not supported", after.line, after.column
                )
            return node
        if tok.kind == "NAME" and tok.text == "in":
            self.advance()
            self.expect_op("{")
            choices = [self._parse_set_element()]
            while self.peek().kind == "OP" and self.peek().text == ",":
                self.advance()
                choices.append(self._parse_set_element())
            self.expect_op("}")
            return Membership(self._numeric(node, start), tuple(choices))
        return node

    def _parse_set_element(self) -> NumericExpr:
        start = self.peek()
        return self._numeric(self.parse_sum(), start)

    def parse_sum(self):
        start = self.peek()
        node = self.parse_term()
        while self.peek().kind == "OP" and self.peek().text in ("+", "-"):
            op = self.advance().text
            rhs_start = self.peek()
            rhs = self._numeric(self.parse_term(), rhs_start)
            node = Binary(op, self._numeric(node, start), rhs)
        return node

    def parse_term(self):
        start = self.peek()
        node = self.parse_unary()
        while self.peek().kind == "OP" and self.peek().text in ("*", "/"):
            op = self.advance().text
            rhs_start = self.peek()
            rhs = self._numeric(self.parse_unary(), rhs_start)
            node = Binary(op, self._numeric(node, start), rhs)
        return node

    def parse_unary(self):
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "-":
            self.advance()
            operand_start = self.peek()
            operand = self._numeric(self.parse_unary(), operand_start)
            if isinstance(operand, Constant):
                return Constant(-operand.value)
            return Binary("-", Constant(0.0), operand)
        return self.parse_atom()

    def parse_atom(self):
        tok = self.peek()
        if tok.kind == "EOL":
            raise ConstraintSyntaxError("expected an expression at end-of-input", tok.line, tok.column)
        if tok.kind == "NUMBER":
            self.advance()
            return Constant(float(tok.text))
        if tok.kind == "NAME" and tok.text in ("F", "X0"):
            self.advance()
            self.expect_op("[")
            name_tok = self.peek()
            if name_tok.kind != "NAME":
                raise self.error_here("expected a feature name")
            self.advance()
            self.expect_op("]")
            index = self.schema.index_of.get(name_tok.text)
            if index is None:
                raise UnknownFeatureError(name_tok.text, name_tok.line, name_tok.column)
            if tok.text == "F":
                return Feature(index, name_tok.text)
            return OriginalValue(index, name_tok.text)
        if tok.kind == "OP" and tok.text == "(":
            self.advance()
            node = self.parse_or()
            self.expect_op(")")
            return node
        raise self.error_here("expected an expression")


def parse_expression(text: str, schema: Schema, line_no: int = 1) -> ConstraintExpr:
    """Parse a single constraint expression (no name label)."""
    tokens = _tokenize_line(text, line_no)
    return _LineParser(tokens, schema).parse_line()


def _split_label(tokens: list[_Token]) -> tuple[str | None, list[_Token]]:
    if (
        len(tokens) >= 3
        and tokens[0].kind == "NAME"
        and tokens[0].text not in _KEYWORDS
        and tokens[0].text not in ("F", "X0")
        and tokens[1].kind == "OP"
        and tokens[1].text == ":"
    ):
        return tokens[0].text, tokens[2:]
    return None, tokens


def parse_constraints(text: str, schema: Schema, tau: float = sets.DEFAULT_TAU,
                      satisfaction_tol: float = sets.DEFAULT_SATISFACTION_TOL) -> "sets.ConstraintSet":
    """Parse DSL source into a linked constraint set.

    Empty and comment-only lines are skipped; an empty source yields a
    constraint set with zero constraints.
    """
    named: list[tuple[str | None, ConstraintExpr]] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        tokens = _tokenize_line(line, line_no)
        label, body = _split_label(tokens)
        if body[0].kind == "EOL":
            if label is not None:
                raise ConstraintSyntaxError(
                    "label without a constraint", body[0].line, body[0].column
                )
            continue
        expr = _LineParser(body, schema).parse_line()
        named.append((label, expr))
    auto = 0
    resolved: list[tuple[str, ConstraintExpr]] = []
    for label, expr in named:
        if label is None:
            auto += 1
            label = f"c{auto}"
        resolved.append((label, expr))
    return sets.link(resolved, schema, tau=tau, satisfaction_tol=satisfaction_tol)
