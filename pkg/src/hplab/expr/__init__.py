"""Expression trees over ``eta`` and ``t``: parse, print, differentiate,
simplify and evaluate."""

from .calculus import UnsupportedDerivative, diff, hyperbolic_laplacian
from .evaluate import (
    DomainError,
    EvalPoint,
    UnboundParameterError,
    compile_expr,
    evaluate,
    evaluate_grid,
)
from .nodes import (
    ETA,
    ETA_VAR,
    T,
    T_VAR,
    Add,
    Const,
    Expr,
    Fun,
    Mul,
    Neg,
    Pow,
    Var,
    as_expr,
    depends_on,
    free_vars,
    substitute,
    to_str,
)
from .parser import ParseError, UnknownIdentifierError, parse
from .simplify import simplify

__all__ = [
    "Add", "Const", "DomainError", "ETA", "ETA_VAR", "EvalPoint", "Expr", "Fun",
    "Mul", "Neg", "ParseError", "Pow", "T", "T_VAR", "UnboundParameterError",
    "UnknownIdentifierError", "UnsupportedDerivative", "Var", "as_expr",
    "compile_expr", "depends_on", "diff", "evaluate", "evaluate_grid",
    "free_vars", "hyperbolic_laplacian", "parse", "simplify", "substitute",
    "to_str",
]
