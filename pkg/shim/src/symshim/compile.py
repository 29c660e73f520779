"""Compile expression text to batched torch evaluation.

Accepts the toolkit's expression grammar: decimal constants (optional
leading ``-``), variables ``x0..x{d-1}`` or declared column names, unary
calls like ``inv(r)``, parenthesized infix binaries, and unparenthesized
chains of one repeated binary operator. Evaluation is protected: any
non-finite intermediate becomes NaN for the affected rows, matching the
fitting side's semantics.
"""

from __future__ import annotations

import re
from typing import Callable, Sequence

import torch

Compiled = Callable[[torch.Tensor], torch.Tensor]


class BankParseError(ValueError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


_NUMBER_RE = re.compile(r"\d+(?:\.\d*)?(?:[eE][+-]?\d+)?")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_VAR_INDEX_RE = re.compile(r"^x(\d+)$")

# unary kernels and whether their output needs NaN sanitization
# (sin/cos of a finite-or-NaN input stays finite-or-NaN)
_UNARY = {
    "inv": (torch.reciprocal, True),
    "sin": (torch.sin, False),
    "cos": (torch.cos, False),
    "exp": (torch.exp, True),
    "log": (torch.log, True),
    "sqrt": (torch.sqrt, True),
    "square": (lambda t: t * t, True),
}
_BINARY = {
    "+": torch.add,
    "-": torch.sub,
    "*": torch.mul,
}


def _sanitize(t: torch.Tensor) -> torch.Tensor:
    return torch.where(torch.isfinite(t), t,
                       torch.full_like(t, float("nan")))


def _const(value: float) -> Compiled:
    def run(X):
        return torch.full((X.shape[0],), value, dtype=X.dtype, device=X.device)
    return run


def _var(index: int) -> Compiled:
    def run(X):
        if index >= X.shape[1]:
            raise ValueError(
                f"expression references column {index}, batch has {X.shape[1]}"
            )
        return X[:, index]
    return run


def _apply_unary(name: str, child: Compiled) -> Compiled:
    fn, needs = _UNARY[name]

    def run(X):
        out = fn(child(X))
        return _sanitize(out) if needs else out
    return run


def _apply_binary(name: str, left: Compiled, right: Compiled) -> Compiled:
    fn = _BINARY[name]

    def run(X):
        return _sanitize(fn(left(X), right(X)))
    return run


class _Parser:
    def __init__(self, text: str, input_names: Sequence[str] | None):
        self.text = text
        self.pos = 0
        self.names = list(input_names) if input_names is not None else None

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
        raise BankParseError(f"unexpected character {ch!r}", self.pos)

    def take(self):
        kind, value, offset = self.peek()
        self.pos = offset + len(value)
        return kind, value, offset

    def expect(self, kind: str):
        got, value, offset = self.take()
        if got != kind:
            raise BankParseError(f"expected {kind!r}, found {value!r}", offset)

    def parse_expr(self) -> Compiled:
        node = self.parse_primary()
        kind, _, _ = self.peek()
        if kind not in _BINARY:
            return node
        op_name = kind
        while True:
            kind, _, offset = self.peek()
            if kind in _BINARY:
                if kind != op_name:
                    raise BankParseError(
                        f"mixed operators {op_name!r} and {kind!r} require parentheses",
                        offset,
                    )
                self.take()
                node = _apply_binary(op_name, node, self.parse_primary())
            else:
                return node

    def parse_primary(self) -> Compiled:
        kind, value, offset = self.take()
        if kind == "number":
            return _const(float(value))
        if kind == "-":
            got, num, num_offset = self.take()
            if got != "number":
                raise BankParseError("expected a number after '-'", num_offset)
            return _const(-float(num))
        if kind == "(":
            node = self.parse_expr()
            self.expect(")")
            return node
        if kind == "name":
            nxt, _, _ = self.peek()
            if nxt == "(":
                if value not in _UNARY:
                    raise BankParseError(f"unknown operator {value!r}", offset)
                self.take()
                arg = self.parse_expr()
                self.expect(")")
                return _apply_unary(value, arg)
            return self._variable(value, offset)
        raise BankParseError(f"expected an expression, found {value!r}", offset)

    def _variable(self, name: str, offset: int) -> Compiled:
        if self.names is not None and name in self.names:
            return _var(self.names.index(name))
        m = _VAR_INDEX_RE.match(name)
        if m:
            return _var(int(m.group(1)))
        raise BankParseError(f"unknown variable {name!r}", offset)


def compile_expression(text: str, input_names: Sequence[str] | None = None) -> Compiled:
    """Compile one expression line to a function of an (n, d) batch tensor."""
    parser = _Parser(text, input_names)
    node = parser.parse_expr()
    kind, value, offset = parser.peek()
    if kind != "eof":
        raise BankParseError(f"trailing input {value!r}", offset)
    return node
