"""Summability methods for sequences of fuzzy numbers."""

from .analysis import SummabilityReport, classify, consistency_violations, detect_limit
from .fuzzy_core import (
    DEFAULT_M,
    FuzzyError,
    FuzzyNumber,
    GridMismatchError,
    InvalidFuzzyNumberError,
    InvalidInputError,
    add,
    crisp,
    from_alpha_cuts,
    metric_D,
    norm,
    scalar_mul,
    triangular,
)
from .seqlang import EvaluationError, ParseError, parse
from .sequences import BUILTINS, FuzzySequence, builtin, from_seqdef
from .transforms import (
    TransformParams,
    abel_eval,
    borel_eval,
    cauchy_product,
    cesaro_means,
    euler_means,
    partial_sums,
)

__version__ = "0.1.0"

__all__ = [
    "BUILTINS",
    "DEFAULT_M",
    "EvaluationError",
    "FuzzyError",
    "FuzzyNumber",
    "FuzzySequence",
    "GridMismatchError",
    "InvalidFuzzyNumberError",
    "InvalidInputError",
    "ParseError",
    "SummabilityReport",
    "TransformParams",
    "abel_eval",
    "add",
    "borel_eval",
    "builtin",
    "cauchy_product",
    "cesaro_means",
    "classify",
    "consistency_violations",
    "crisp",
    "detect_limit",
    "euler_means",
    "from_alpha_cuts",
    "from_seqdef",
    "metric_D",
    "norm",
    "parse",
    "partial_sums",
    "scalar_mul",
    "triangular",
]
