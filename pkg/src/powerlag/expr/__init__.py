"""Expression DSL: nodes, parsing, printing, evaluation and calculus."""
import sys

from .nodes import *  # noqa: F401,F403
from .nodes import __all__ as _nodes_all
from .evaluate import (DomainError, EvaluationError, UnboundSymbolError,
                       evaluate)
from .parser import ParseContext, ParseError, parse
from .printing import format_expr
from .calculus import (OrderOverflowError, free_symbols, max_order, partial,
                       regularize_sgn, substitute, total_time_derivative)
from .codegen import lambdify
from .normal import normalize, poly_difference

# symbolic passes recurse along expression depth
if sys.getrecursionlimit() < 20000:
    sys.setrecursionlimit(20000)

__all__ = list(_nodes_all) + [
    "DomainError", "EvaluationError", "UnboundSymbolError", "evaluate",
    "ParseContext", "ParseError", "parse", "format_expr",
    "OrderOverflowError", "free_symbols", "max_order", "partial",
    "regularize_sgn", "substitute", "total_time_derivative", "lambdify",
    "normalize", "poly_difference",
]
