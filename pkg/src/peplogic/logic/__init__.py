from .ast import (
    FALSE,
    TRUE,
    And,
    Bottom,
    Const,
    Disjoint,
    Eq,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    IsEmpty,
    Member,
    Not,
    Or,
    Pred,
    SetEq,
    SetVar,
    SortError,
    Subset,
    Top,
    UnionEq,
    Var,
    conj,
    disj,
    free_vars,
    neg,
    rename_apart,
    substitute,
)
from .define import Definition, DefinitionError, ExpansionDepthError, Theory
from .evaluate import Evaluator, evaluate
from .normal import CnfMatrix, Literal, PrenexForm, UnboundVariableError, nnf, to_cnf, to_prenex
from .sexpr import SexprError, dumps, loads
