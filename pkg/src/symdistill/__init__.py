"""Symbolic distillation toolkit.

Fits closed-form expressions to recorded input/output behavior via
multi-population genetic search, selects best equations from a Pareto front,
explains local behavior with weighted symbolic surrogates, and provides the
PCA reduction and pruning utilities needed to make wide blocks tractable.
"""

__version__ = "0.1.0"

from .bench import ForceLaw, gen_heat, gen_pairwise, heat_profile
from .distill import (
    PruneSchedule,
    distill,
    get_importance,
    load_front,
    prune_mask,
    save_front,
)
from .errors import (
    ConfigError,
    DataError,
    ExpressionError,
    ParseError,
    SymDistillError,
)
from .expr import (
    Apply,
    Constant,
    Expression,
    Variable,
    complexity,
    eval_batch,
    simplify,
)
from .grammar import parse, render
from .operators import (
    Operator,
    OperatorSet,
    catalog_set,
    default_operator_set,
    make_operator,
    operator_set,
)
from .pca import (
    PCAModel,
    explained_variance_ratio,
    load_pca,
    pca_fit,
    project,
    reconstruct,
    save_pca,
)
from .search import (
    FitResult,
    ParetoEntry,
    ParetoFront,
    SRConfig,
    accept,
    crossover,
    evolve,
    front_scores,
    mutate,
    optimize_constants,
    penalized_loss,
    select_best,
    tournament_select,
)
from .slime import SlimeParams, build_locale, slime_fit
from .table import IOTable, VariableTransform, apply_transforms, load_table, save_table

__all__ = [
    "__version__",
    "Apply",
    "Constant",
    "ConfigError",
    "DataError",
    "Expression",
    "ExpressionError",
    "FitResult",
    "ForceLaw",
    "IOTable",
    "Operator",
    "OperatorSet",
    "ParetoEntry",
    "ParetoFront",
    "ParseError",
    "PCAModel",
    "PruneSchedule",
    "SRConfig",
    "SlimeParams",
    "SymDistillError",
    "Variable",
    "VariableTransform",
    "accept",
    "apply_transforms",
    "build_locale",
    "catalog_set",
    "complexity",
    "crossover",
    "default_operator_set",
    "distill",
    "eval_batch",
    "evolve",
    "explained_variance_ratio",
    "front_scores",
    "gen_heat",
    "gen_pairwise",
    "get_importance",
    "heat_profile",
    "load_front",
    "load_pca",
    "load_table",
    "make_operator",
    "mutate",
    "operator_set",
    "optimize_constants",
    "parse",
    "pca_fit",
    "penalized_loss",
    "project",
    "prune_mask",
    "reconstruct",
    "render",
    "save_front",
    "save_pca",
    "save_table",
    "select_best",
    "simplify",
    "slime_fit",
    "tournament_select",
]
