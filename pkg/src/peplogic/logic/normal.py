"""Negation, prenex and conjunctive normal forms.

Prenexing assumes every first-order sort is inhabited, which is the usual
convention; callers working with possibly empty sorts specialise those
quantifiers away first (see ``drop_empty_sorts``).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

from .ast import (
    ATOMIC,
    FALSE,
    TRUE,
    And,
    Bottom,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    Top,
    SetVar,
    Var,
    conj,
    disj,
    free_vars,
    rename_apart,
)


class UnboundVariableError(ValueError):
    pass


def nnf(f: Formula, positive: bool = True) -> Formula:
    """Negation normal form without implications or biconditionals."""
    if isinstance(f, Top):
        return TRUE if positive else FALSE
    if isinstance(f, Bottom):
        return FALSE if positive else TRUE
    if isinstance(f, ATOMIC):
        return f if positive else Not(f)
    if isinstance(f, Not):
        return nnf(f.body, not positive)
    if isinstance(f, And):
        parts = [nnf(a, positive) for a in f.args]
        return conj(*parts) if positive else disj(*parts)
    if isinstance(f, Or):
        parts = [nnf(a, positive) for a in f.args]
        return disj(*parts) if positive else conj(*parts)
    if isinstance(f, Implies):
        return nnf(Or((Not(f.left), f.right)), positive)
    if isinstance(f, Iff):
        both = And((Implies(f.left, f.right), Implies(f.right, f.left)))
        return nnf(both, positive)
    if isinstance(f, Exists):
        q = Exists if positive else Forall
        return q(f.var, nnf(f.body, positive))
    if isinstance(f, Forall):
        q = Forall if positive else Exists
        return q(f.var, nnf(f.body, positive))
    raise TypeError(f"not a formula: {f!r}")


@dataclass(frozen=True)
class PrenexForm:
    prefix: tuple  # of ("E" | "A", variable)
    matrix: Formula

    def __post_init__(self):
        names = [v for _, v in self.prefix]
        if len(set(names)) != len(names):
            raise ValueError("prefix variables must be distinct")
        for g in _walk(self.matrix):
            if isinstance(g, (Exists, Forall)):
                raise ValueError("matrix contains a quantifier")

    def to_formula(self) -> Formula:
        body = self.matrix
        for q, v in reversed(self.prefix):
            body = (Exists if q == "E" else Forall)(v, body)
        return body

    def blocks(self) -> list:
        """Maximal runs of equal quantifiers as ``(q, [vars])``."""
        out: list = []
        for q, v in self.prefix:
            if out and out[-1][0] == q:
                out[-1][1].append(v)
            else:
                out.append((q, [v]))
        return out


def _walk(f):
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(g.children())


def merge_prefixes(prefixes: list) -> list:
    """Interleave prefixes keeping each one's order, existential runs first."""
    queues = [list(p) for p in prefixes if p]
    out: list = []
    if not queues:
        return out
    q = "E" if any(p[0][0] == "E" for p in queues) else "A"
    while queues:
        for p in queues:
            while p and p[0][0] == q:
                out.append(p.pop(0))
        queues = [p for p in queues if p]
        q = "A" if q == "E" else "E"
    return out


def _pull(f: Formula):
    if isinstance(f, (Exists, Forall)):
        prefix, matrix = _pull(f.body)
        return [("E" if isinstance(f, Exists) else "A", f.var)] + prefix, matrix
    if isinstance(f, (And, Or)):
        pulled = [_pull(a) for a in f.args]
        prefix = merge_prefixes([p for p, _ in pulled])
        join = conj if isinstance(f, And) else disj
        return prefix, join(*[m for _, m in pulled])
    return [], f


def to_prenex(f: Formula) -> PrenexForm:
    unbound = free_vars(f)
    if unbound:
        names = ", ".join(sorted(v.name for v in unbound))
        raise UnboundVariableError(f"unbound variable(s): {names}")
    g = rename_apart(nnf(f), only_clashes=True)
    prefix, matrix = _pull(g)
    return PrenexForm(tuple(prefix), matrix)


@dataclass(frozen=True)
class Literal:
    atom: Formula
    positive: bool = True

    def negated(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    def to_formula(self) -> Formula:
        return self.atom if self.positive else Not(self.atom)

    def __str__(self):
        return str(self.atom) if self.positive else f"(not {self.atom})"


@dataclass(frozen=True)
class CnfMatrix:
    clauses: tuple  # of tuples of Literal

    def to_formula(self) -> Formula:
        return conj(*[disj(*[l.to_formula() for l in c]) for c in self.clauses])

    def __len__(self):
        return len(self.clauses)


def _clause(lits) -> tuple | None:
    seen: dict = {}
    for lit in lits:
        if isinstance(lit.atom, Top):
            if lit.positive:
                return None
            continue
        if isinstance(lit.atom, Bottom):
            if not lit.positive:
                return None
            continue
        if lit.negated() in seen:
            return None
        seen.setdefault(lit, None)
    return tuple(seen)


def _cnf(f: Formula) -> list:
    if isinstance(f, Top):
        return []
    if isinstance(f, Bottom):
        return [()]
    if isinstance(f, ATOMIC):
        return [(Literal(f),)]
    if isinstance(f, Not):
        if not isinstance(f.body, ATOMIC):
            raise TypeError("to_cnf expects negation normal form")
        return [(Literal(f.body, False),)]
    if isinstance(f, And):
        return [c for a in f.args for c in _cnf(a)]
    if isinstance(f, Or):
        result = [()]
        for a in f.args:
            part = _cnf(a)
            merged = []
            for left, right in product(result, part):
                c = _clause(left + right)
                if c is not None:
                    merged.append(c)
            result = merged
            if not result:
                break
        return result
    raise TypeError(f"to_cnf expects a quantifier-free formula, got {type(f).__name__}")


def to_cnf(matrix: Formula) -> CnfMatrix:
    """Distribute a quantifier-free formula into CNF, dropping tautologies."""
    out: dict = {}
    for c in _cnf(nnf(matrix)):
        c = _clause(c)
        if c is not None:
            out.setdefault(frozenset(c), c)
    return CnfMatrix(tuple(out.values()))


def drop_empty_sorts(f: Formula, sizes: dict) -> Formula:
    """Replace quantifiers over empty first-order sorts by their vacuous value."""

    def go(g):
        if isinstance(g, (Exists, Forall)):
            v = g.var
            if isinstance(v, Var) and sizes.get(v.sort, 1) == 0:
                return FALSE if isinstance(g, Exists) else TRUE
            return type(g)(v, go(g.body))
        if isinstance(g, ATOMIC):
            return g
        if isinstance(g, Not):
            return Not(go(g.body))
        if isinstance(g, (And, Or)):
            return type(g)(tuple(go(a) for a in g.args))
        return type(g)(go(g.left), go(g.right))

    return go(f)


def miniscope(f: Formula) -> Formula:
    """Push quantifiers of a negation-normal formula as far inward as possible.

    Vacuous first-order quantifiers are kept, since their sort may be empty.
    """
    fv_cache: dict = {}

    def fv(g):
        key = id(g)
        hit = fv_cache.get(key)
        if hit is None:
            hit = (free_vars(g), g)
            fv_cache[key] = hit
        return hit[0]

    def push(q, v, body):
        join_same = Or if q is Exists else And  # distributes through the quantifier
        join_other = And if q is Exists else Or  # splits off independent parts
        if v not in fv(body):
            return body if isinstance(v, SetVar) else q(v, body)
        if isinstance(body, join_same):
            return (disj if q is Exists else conj)(*[push(q, v, a) for a in body.args])
        if isinstance(body, join_other):
            dep = [a for a in body.args if v in fv(a)]
            indep = [a for a in body.args if v not in fv(a)]
            join = conj if q is Exists else disj
            if indep:
                return join(*indep, push(q, v, join(*dep)))
            if len(dep) == 1:
                return push(q, v, dep[0])
        return q(v, body)

    def go(g):
        if isinstance(g, (Exists, Forall)):
            return push(type(g), g.var, go(g.body))
        if isinstance(g, And):
            return conj(*[go(a) for a in g.args])
        if isinstance(g, Or):
            return disj(*[go(a) for a in g.args])
        if isinstance(g, (Implies, Iff)):
            raise TypeError("miniscope expects negation normal form")
        return g

    return go(f)
