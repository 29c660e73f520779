"""Expression trees: representation, batch evaluation, complexity, simplification.

Evaluation is total: domain violations (1/0, log of a nonpositive, sqrt of a
negative, overflow) produce NaN for the affected rows instead of raising.
Trees are immutable; every rewrite builds new nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ExpressionError
from .operators import Operator, OperatorSet


@dataclass(frozen=True)
class Constant:
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not np.isfinite(v):
            raise ExpressionError(f"constants must be finite, got {self.value!r}")
        object.__setattr__(self, "value", v)


@dataclass(frozen=True)
class Variable:
    index: int
    name: str = ""

    def __post_init__(self):
        if self.index < 0:
            raise ExpressionError(f"variable index must be >= 0, got {self.index}")
        if not self.name:
            object.__setattr__(self, "name", f"x{self.index}")


@dataclass(frozen=True)
class Apply:
    op: Operator
    children: tuple["Node", ...]

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))
        if len(self.children) != self.op.arity:
            raise ExpressionError(
                f"{self.op.name!r} takes {self.op.arity} arguments, got {len(self.children)}"
            )


Node = Union[Constant, Variable, Apply]


@dataclass(frozen=True)
class Expression:
    """An immutable expression tree, the unit of search."""

    root: Node

    def __str__(self) -> str:
        from .grammar import render
        return render(self)


# Elementwise kernels, each paired with whether its output needs non-finite
# values replaced by NaN (sin/cos of a finite-or-NaN input already is).
_KERNELS = {
    "+": (np.add, True),
    "-": (np.subtract, True),
    "*": (np.multiply, True),
    "inv": (lambda a: np.divide(1.0, a), True),
    "sin": (np.sin, False),
    "cos": (np.cos, False),
    "exp": (np.exp, True),
    "log": (np.log, True),
    "sqrt": (np.sqrt, True),
    "square": (lambda a: np.multiply(a, a), True),
}


def _eval_node(node: Node, X: np.ndarray) -> np.ndarray:
    t = type(node)
    if t is Apply:
        kernel, sanitize = _KERNELS[node.op.name]
        if len(node.children) == 2:
            out = kernel(_eval_node(node.children[0], X),
                         _eval_node(node.children[1], X))
        else:
            out = kernel(_eval_node(node.children[0], X))
        if sanitize:
            finite = np.isfinite(out)
            if not finite.all():
                out[~finite] = np.nan
        return out
    if t is Variable:
        return X[:, node.index]
    out = np.empty(X.shape[0])
    out.fill(node.value)
    return out


def variable_indices(expr: Expression) -> set[int]:
    """All variable indices referenced by the expression."""
    out: set[int] = set()
    stack: list[Node] = [expr.root]
    while stack:
        node = stack.pop()
        if isinstance(node, Variable):
            out.add(node.index)
        elif isinstance(node, Apply):
            stack.extend(node.children)
    return out


def variable_names(expr: Expression) -> set[str]:
    return {
        n.name
        for n in iter_nodes(expr.root)
        if isinstance(n, Variable)
    }


def iter_nodes(node: Node):
    """Preorder traversal of a subtree."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, Apply):
            stack.extend(reversed(n.children))


def eval_batch(expr: Expression, X) -> np.ndarray:
    """Evaluate an expression on every row of X (n x d), returning n values.

    Rows hitting a domain violation evaluate to NaN; no row contaminates
    another. Identical (expr, X) pairs produce bitwise identical output.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ExpressionError(f"X must be 2-D (n rows x d columns), got shape {X.shape}")
    d = X.shape[1]
    try:
        with np.errstate(all="ignore"):
            out = _eval_node(expr.root, X)
    except IndexError:
        bad = max((i for i in variable_indices(expr) if i >= d), default=None)
        if bad is None:
            raise
        raise ExpressionError(
            f"expression references variable index {bad} but data has {d} columns"
        ) from None
    # bare-variable roots would otherwise hand back a view into X
    return out.copy() if out.base is not None else out


def _node_complexity(node: Node, ops: OperatorSet) -> int:
    if type(node) is not Apply:
        return 1
    total = ops.get(node.op.name).node_complexity
    for c in node.children:
        total += _node_complexity(c, ops)
    return total


def complexity(expr: Expression, ops: OperatorSet) -> int:
    """Weighted node count: leaves cost 1, operators cost their set weight."""
    return _node_complexity(expr.root, ops)


def _unit_complexity(node: Node) -> int:
    return sum(1 for _ in iter_nodes(node))


def _fold_constant(node: Apply) -> Node:
    """Fold an all-constant Apply into a Constant when the value is finite."""
    with np.errstate(all="ignore"):
        vals = [np.array([c.value]) for c in node.children]
        out = _KERNELS[node.op.name][0](*vals)
    v = float(out[0])
    if np.isfinite(v):
        return Constant(v)
    return node


def _flatten_chain(node: Node, name: str) -> list[Node]:
    """Flatten nested applications of one commutative binary operator."""
    if isinstance(node, Apply) and node.op.name == name:
        out: list[Node] = []
        for c in node.children:
            out.extend(_flatten_chain(c, name))
        return out
    return [node]


def _rebuild_chain(op: Operator, terms: list[Node]) -> Node:
    node = terms[0]
    for t in terms[1:]:
        node = Apply(op, (node, t))
    return node


def _coeff_core(term: Node) -> tuple[float, Node]:
    """Split a term into (coefficient, core) so 2*x and x share a core."""
    if isinstance(term, Apply) and term.op.name == "*":
        a, b = term.children
        if isinstance(a, Constant) and not isinstance(b, Constant):
            return a.value, b
        if isinstance(b, Constant) and not isinstance(a, Constant):
            return b.value, a
    return 1.0, term


def _simplify_sum(node: Apply, star: Operator | None) -> Node:
    terms = _flatten_chain(node, "+")
    const = 0.0
    groups: list[list] = []  # [core, coefficient], first-occurrence order
    for t in terms:
        if isinstance(t, Constant):
            const += t.value
            continue
        coeff, core = _coeff_core(t) if star is not None else (1.0, t)
        for g in groups:
            if g[0] == core:
                g[1] += coeff
                break
        else:
            groups.append([core, coeff])
    if not np.isfinite(const) or not all(np.isfinite(g[1]) for g in groups):
        return node
    rebuilt: list[Node] = []
    if const != 0.0:
        rebuilt.append(Constant(const))
    for core, coeff in groups:
        if coeff == 0.0:
            continue
        if coeff == 1.0:
            rebuilt.append(core)
        else:
            rebuilt.append(Apply(star, (Constant(coeff), core)))
    if not rebuilt:
        return Constant(0.0)
    if len(rebuilt) == 1:
        return rebuilt[0]
    return _rebuild_chain(node.op, rebuilt)


def _simplify_product(node: Apply) -> Node:
    factors = _flatten_chain(node, "*")
    const = 1.0
    rest: list[Node] = []
    for f in factors:
        if isinstance(f, Constant):
            const *= f.value
        else:
            rest.append(f)
    if not np.isfinite(const):
        return node
    if const == 0.0:
        return Constant(0.0)
    rebuilt: list[Node] = []
    if const != 1.0 or not rest:
        rebuilt.append(Constant(const))
    rebuilt.extend(rest)
    if len(rebuilt) == 1:
        return rebuilt[0]
    return _rebuild_chain(node.op, rebuilt)


def _simplify_node(node: Node, star: Operator | None) -> Node:
    if not isinstance(node, Apply):
        return node
    children = tuple(_simplify_node(c, star) for c in node.children)
    node = Apply(node.op, children)
    if all(isinstance(c, Constant) for c in children):
        folded = _fold_constant(node)
        if isinstance(folded, Constant):
            return folded
    name = node.op.name
    if name == "inv":
        (child,) = children
        if isinstance(child, Apply) and child.op.name == "inv":
            return child.children[0]
        return node
    if name == "+":
        return _simplify_sum(node, star)
    if name == "*":
        return _simplify_product(node)
    if name == "-":
        a, b = children
        if isinstance(b, Constant) and b.value == 0.0:
            return a
        return node
    return node


def simplify(expr: Expression, ops: OperatorSet | None = None) -> Expression:
    """Rewrite to an equivalent expression of no greater complexity.

    Performs constant folding, merging of constants inside +/* chains,
    repeated-term collection (x+x+x -> 3*x), identity elimination (e+0,
    e*1, e*0 -> 0) and inv(inv(e)) -> e. Pointwise values agree with the
    input within 1e-12 relative tolerance wherever both are finite.
    """
    star: Operator | None = None
    if ops is None:
        from .operators import CATALOG
        star = CATALOG["*"]
    elif "*" in ops:
        star = ops.get("*")
    out = Expression(_simplify_node(expr.root, star))
    if ops is not None:
        if complexity(out, ops) > complexity(expr, ops):
            return expr
    elif _unit_complexity(out.root) > _unit_complexity(expr.root):
        return expr
    return out


def substitute_constants(expr: Expression, values) -> Expression:
    """Replace the expression's constants, in preorder, with new values."""
    values = list(values)
    it = iter(values)

    def rebuild(node: Node) -> Node:
        if isinstance(node, Constant):
            return Constant(float(next(it)))
        if isinstance(node, Apply):
            return Apply(node.op, tuple(rebuild(c) for c in node.children))
        return node

    out = rebuild(expr.root)
    try:
        next(it)
    except StopIteration:
        return Expression(out)
    raise ExpressionError("more constant values than constants in the expression")


def constant_values(expr: Expression) -> list[float]:
    """The expression's constants in preorder."""
    out = []

    def walk(node: Node):
        if isinstance(node, Constant):
            out.append(node.value)
        elif isinstance(node, Apply):
            for c in node.children:
                walk(c)

    walk(expr.root)
    return out
