"""Text grammar for expressions: rendering and recursive-descent parsing.

One expression per line. Binary applications are infix and parenthesized,
unary applications use call syntax:

    ((inv(r) + -0.99950946) * ((0.8855752 * dy) + (1.8560125 * dx))) + 0.031805687

The parser additionally accepts unparenthesized chains of a single repeated
binary operator (``r*r*r``); mixing different operators requires parentheses.
Variables are ``x0..x{d-1}`` or declared column names; constants are decimal,
optionally with a leading ``-``.
"""

from __future__ import annotations

import re
from typing import Sequence

from .errors import ParseError
from .expr import Apply, Constant, Expression, Node, Variable
from .operators import ARITIES, CATALOG, OperatorSet

_NUMBER_RE = re.compile(r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_VAR_INDEX_RE = re.compile(r"^x(\d+)$")


def _format_constant(v: float) -> str:
    # 17 significant digits round-trip any IEEE double exactly.
    return f"{v:.17g}"


def _render_node(node: Node) -> str:
    if isinstance(node, Constant):
        return _format_constant(node.value)
    if isinstance(node, Variable):
        return node.name
    if node.op.arity == 1:
        return f"{node.op.name}({_render_node(node.children[0])})"
    left, right = node.children
    return f"({_render_node(left)} {node.op.name} {_render_node(right)})"


def render(expr: Expression) -> str:
    """Render an expression; parse(render(e)) is structurally identical to e."""
    return _render_node(expr.root)


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self):
        self._skip_ws()
        if self.pos >= len(self.text):
            return ("eof", "", self.pos)
        ch = self.text[self.pos]
        if ch in "()+-*":
            return (ch, ch, self.pos)
        m = _NUMBER_RE.match(self.text, self.pos)
        if m:
            return ("number", m.group(), self.pos)
        m = _NAME_RE.match(self.text, self.pos)
        if m:
            return ("name", m.group(), self.pos)
        raise ParseError(f"unexpected character {ch!r}", self.pos)

    def take(self):
        kind, value, offset = self.peek()
        self.pos = offset + len(value)
        return kind, value, offset

    def expect(self, kind: str):
        got, value, offset = self.take()
        if got != kind:
            raise ParseError(f"expected {kind!r}, found {value or 'end of input'!r}", offset)
        return value


class _Parser:
    def __init__(self, text: str, variables: Sequence[str] | None, ops: OperatorSet | None):
        self.toks = _Tokenizer(text)
        self.variables = list(variables) if variables is not None else None
        self.ops = ops

    def _operator(self, name: str, offset: int):
        if self.ops is not None and name in self.ops:
            return self.ops.get(name)
        if name in CATALOG:
            return CATALOG[name]
        raise ParseError(f"unknown operator {name!r}", offset)

    def _variable(self, name: str, offset: int) -> Variable:
        if self.variables is not None:
            if name in self.variables:
                return Variable(self.variables.index(name), name)
            raise ParseError(f"unknown variable {name!r}", offset)
        m = _VAR_INDEX_RE.match(name)
        if m:
            return Variable(int(m.group(1)), name)
        raise ParseError(
            f"unknown variable {name!r} (declare column names or use x0..)", offset
        )

    def parse_expr(self) -> Node:
        node = self.parse_primary()
        kind, _, _ = self.toks.peek()
        if kind not in ("+", "-", "*"):
            return node
        op_name = kind
        op = self._operator(op_name, self.toks.peek()[2])
        while True:
            kind, value, offset = self.toks.peek()
            if kind in ("+", "-", "*"):
                if kind != op_name:
                    raise ParseError(
                        f"mixed operators {op_name!r} and {kind!r} require parentheses",
                        offset,
                    )
                self.toks.take()
                # a leading '-' of a negative constant binds to the number
                node = Apply(op, (node, self.parse_primary()))
            else:
                return node

    def parse_primary(self) -> Node:
        kind, value, offset = self.toks.take()
        if kind == "number":
            return Constant(float(value))
        if kind == "-":
            num = self.toks.expect("number")
            return Constant(-float(num))
        if kind == "(":
            node = self.parse_expr()
            self.toks.expect(")")
            return node
        if kind == "name":
            nxt, _, _ = self.toks.peek()
            if nxt == "(":
                if value not in ARITIES or ARITIES[value] != 1:
                    raise ParseError(f"unknown operator {value!r}", offset)
                op = self._operator(value, offset)
                self.toks.take()
                arg = self.parse_expr()
                self.toks.expect(")")
                return Apply(op, (arg,))
            return self._variable(value, offset)
        raise ParseError(f"expected an expression, found {value or 'end of input'!r}", offset)


def parse(text: str, variables: Sequence[str] | None = None,
          ops: OperatorSet | None = None) -> Expression:
    """Parse one expression.

    ``variables`` maps column names to indices by position; without it only
    ``x<k>`` names are accepted. ``ops`` supplies the operator instances to
    attach (catalog defaults otherwise).
    """
    parser = _Parser(text, variables, ops)
    node = parser.parse_expr()
    kind, value, offset = parser.toks.peek()
    if kind != "eof":
        raise ParseError(f"trailing input {value!r}", offset)
    return Expression(node)
