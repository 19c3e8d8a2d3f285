"""MSOL to QBF: grounding, Tseitin conversion, QDIMACS and solving."""

from .circuit import FALSE, TRUE, Circuit
from .external import ExternalResult, external_solve
from .ground import DEFAULT_CLAUSE_CAP, GroundingCapExceeded, ground, merge_blocks
from .problem import QbfProblem, QdimacsError, emit_qdimacs, normalize_prefix, parse_qdimacs
from .solve import (
    DEFAULT_FULL_EXPANSION_CAP,
    DEFAULT_VARIABLE_CAP,
    SolveResult,
    SolverCapExceeded,
    SolverTimeout,
    cegar_solve,
    expand_solve,
    naive_solve,
)
from .tseitin import tseitin


def decide(sentence, structure, fixed_sets=None, timeout=None, **kw) -> bool:
    """Truth of an expanded MSOL sentence in ``structure`` via grounding."""
    q = ground(sentence, structure, fixed_sets=fixed_sets, **kw)
    return naive_solve(q, timeout=timeout).sat


__all__ = [
    "Circuit", "TRUE", "FALSE", "ExternalResult", "external_solve", "DEFAULT_CLAUSE_CAP",
    "GroundingCapExceeded", "ground", "merge_blocks", "QbfProblem", "QdimacsError",
    "emit_qdimacs", "normalize_prefix", "parse_qdimacs", "DEFAULT_FULL_EXPANSION_CAP",
    "DEFAULT_VARIABLE_CAP", "SolveResult", "SolverCapExceeded", "SolverTimeout",
    "cegar_solve", "expand_solve", "naive_solve", "tseitin", "decide",
]
