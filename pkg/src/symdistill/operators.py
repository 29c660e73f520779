"""Operator definitions and operator-set configuration.

Complexity accounting is weight-per-operator: the cost of an expression is
the sum of node weights, with constants and variables always costing 1.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import ConfigError, ExpressionError

# Fixed arities of the supported operator names.
ARITIES: dict[str, int] = {
    "+": 2,
    "-": 2,
    "*": 2,
    "inv": 1,
    "sin": 1,
    "cos": 1,
    "exp": 1,
    "log": 1,
    "sqrt": 1,
    "square": 1,
}

# Weight defaults: everything costs 1 except the transcendentals sin/exp.
DEFAULT_COMPLEXITY: dict[str, int] = {"sin": 3, "exp": 3}


@dataclass(frozen=True)
class Operator:
    """A named operator with its complexity weight and optional argument cap.

    ``arg_complexity_limit`` caps the weighted complexity of any direct
    argument subtree; search never builds expressions that violate it.
    """

    name: str
    arity: int
    node_complexity: int = 1
    arg_complexity_limit: int | None = None

    def __post_init__(self):
        if self.name not in ARITIES:
            raise ExpressionError(f"unknown operator name {self.name!r}")
        if self.arity != ARITIES[self.name]:
            raise ExpressionError(
                f"operator {self.name!r} has arity {ARITIES[self.name]}, got {self.arity}"
            )
        if self.node_complexity < 1:
            raise ExpressionError(
                f"node_complexity must be >= 1, got {self.node_complexity}"
            )
        if self.arg_complexity_limit is not None and self.arg_complexity_limit < 1:
            raise ExpressionError(
                f"arg_complexity_limit must be >= 1, got {self.arg_complexity_limit}"
            )


def make_operator(
    name: str,
    node_complexity: int | None = None,
    arg_complexity_limit: int | None = None,
) -> Operator:
    """Build an operator by name, using catalog defaults for the weight."""
    if name not in ARITIES:
        raise ExpressionError(f"unknown operator name {name!r}")
    if node_complexity is None:
        node_complexity = DEFAULT_COMPLEXITY.get(name, 1)
    return Operator(name, ARITIES[name], node_complexity, arg_complexity_limit)


# Catalog of every supported operator with default weights.
CATALOG: dict[str, Operator] = {name: make_operator(name) for name in ARITIES}


@dataclass(frozen=True)
class OperatorSet:
    """The operators available to search and complexity accounting."""

    operators: tuple[Operator, ...]

    def __post_init__(self):
        names = [op.name for op in self.operators]
        if len(set(names)) != len(names):
            raise ConfigError(f"duplicate operator names: {names}")
        if not any(op.arity == 2 for op in self.operators):
            raise ConfigError("operator set needs at least one binary operator")
        object.__setattr__(self, "_by_name", {op.name: op for op in self.operators})

    def __iter__(self):
        return iter(self.operators)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def get(self, name: str) -> Operator:
        try:
            return self._by_name[name]
        except KeyError:
            raise ExpressionError(f"operator {name!r} is not in the operator set")

    @property
    def binary(self) -> tuple[Operator, ...]:
        return tuple(op for op in self.operators if op.arity == 2)

    @property
    def unary(self) -> tuple[Operator, ...]:
        return tuple(op for op in self.operators if op.arity == 1)

    def with_limits(self, limits: dict[str, int]) -> "OperatorSet":
        """Return a copy with argument-complexity caps applied by name."""
        ops = []
        for op in self.operators:
            if op.name in limits:
                ops.append(replace(op, arg_complexity_limit=limits[op.name]))
            else:
                ops.append(op)
        return OperatorSet(tuple(ops))


def operator_set(names, complexities: dict[str, int] | None = None,
                 limits: dict[str, int] | None = None) -> OperatorSet:
    """Build an OperatorSet from names, with optional weight/limit overrides."""
    complexities = complexities or {}
    limits = limits or {}
    ops = tuple(
        make_operator(n, complexities.get(n), limits.get(n)) for n in names
    )
    return OperatorSet(ops)


def default_operator_set() -> OperatorSet:
    """The default search vocabulary: +, *, inv, sin, exp."""
    return operator_set(["+", "*", "inv", "sin", "exp"])


def catalog_set() -> OperatorSet:
    """Every supported operator, with default weights."""
    return OperatorSet(tuple(CATALOG.values()))
