"""Random expression-tree generator shared by the grammar/simplify tests."""

import numpy as np

from symdistill.expr import Apply, Constant, Expression, Variable
from symdistill.operators import CATALOG

ALL_OPS = list(CATALOG.values())


def random_tree(rng: np.random.Generator, var_names, max_depth: int = 8) -> Expression:
    def build(depth):
        if depth >= max_depth or (depth > 0 and rng.random() < 0.35):
            if rng.random() < 0.5:
                i = int(rng.integers(len(var_names)))
                return Variable(i, var_names[i])
            # mix of round and awkward constants to exercise formatting
            if rng.random() < 0.3:
                return Constant(float(rng.integers(-5, 6)))
            return Constant(float(rng.normal() * 10.0))
        op = ALL_OPS[int(rng.integers(len(ALL_OPS)))]
        return Apply(op, tuple(build(depth + 1) for _ in range(op.arity)))

    return Expression(build(0))
