"""Grounding MSOL sentences over a finite structure into QBF.

First-order quantifiers expand into conjunctions and disjunctions over the
domain. Each set quantifier occurrence gets one propositional variable per
atom, quantified in the prefix after the sets it depends on. Sibling
subformulas contribute their prefixes in existential-first interleaving.
"""

from __future__ import annotations

from ..logic.ast import (
    And,
    Bottom,
    Const,
    Disjoint,
    Eq,
    Exists,
    Forall,
    Formula,
    IsEmpty,
    Member,
    Not,
    Or,
    Pred,
    SetEq,
    SetVar,
    Subset,
    Top,
    UnionEq,
    Var,
    free_vars,
)
from ..logic.normal import miniscope, nnf
from ..structure import FolStructure
from .circuit import FALSE, TRUE, Circuit
from .problem import QbfProblem, normalize_prefix

DEFAULT_CLAUSE_CAP = 10_000_000


class GroundingCapExceeded(RuntimeError):
    pass


def merge_blocks(prefixes: list) -> list:
    """Interleave block lists keeping each one's order, existential runs first."""
    queues = [list(p) for p in prefixes if p]
    out: list = []
    if not queues:
        return out
    q = "e" if any(p[0][0] == "e" for p in queues) else "a"
    while queues:
        run: list = []
        for p in queues:
            while p and p[0][0] == q:
                run.extend(p.pop(0)[1])
        if run:
            out.append((q, run))
        queues = [p for p in queues if p]
        q = "a" if q == "e" else "e"
    return out


class Grounder:
    def __init__(self, structure: FolStructure, fold: bool = True,
                 clause_cap: int = DEFAULT_CLAUSE_CAP, fixed_sets: dict | None = None,
                 scoping: bool = True):
        self.s = structure
        self.scoping = scoping
        self.n = structure.domain_size
        self.fold = fold
        self.clause_cap = clause_cap
        self.c = Circuit()
        self.var_map: dict = {}
        self.facts: dict = {}
        self.instances = 0
        self.fixed = {}
        for x, members in (fixed_sets or {}).items():
            self.fixed[x] = tuple(TRUE if i in members else FALSE for i in range(self.n))
        self._memo: dict = {}
        self._fv: dict = {}

    # ---- helpers ----

    def _check_cap(self):
        if self.c.literal_count + len(self.c.gates) > self.clause_cap:
            raise GroundingCapExceeded(f"grounding exceeds {self.clause_cap} clauses")

    def _free(self, f):
        hit = self._fv.get(id(f))
        if hit is None:
            hit = (tuple(sorted(free_vars(f), key=lambda v: (v.sort, v.name))), f)
            self._fv[id(f)] = hit
        return hit[0]

    def _val(self, t, env):
        return t.value if isinstance(t, Const) else env[t]

    def _fact(self, name, args) -> int:
        truth = self.s.holds(name, args)
        if self.fold:
            return TRUE if truth else FALSE
        key = ("fact", name, args)
        v = self.var_map.get(key)
        if v is None:
            v = self.c.new_input()
            self.var_map[key] = v
            self.facts[v] = truth
        return v

    def _range(self, v: Var):
        return range(self.s.sort_size(v.sort))

    # ---- main recursion ----

    def ground(self, sentence: Formula) -> QbfProblem:
        f = nnf(sentence)
        if self.scoping:
            f = miniscope(f)
        lit, blocks = self.g(f, {})
        if not self.fold and self.facts:
            fixed = [v if val else -v for v, val in self.facts.items()]
            lit = self.c.AND([lit, *fixed])
            blocks = [("e", list(self.facts))] + blocks
        self._check_cap()
        seen: set = set()
        unique = []
        for q, vs in blocks:
            keep = []
            for v in vs:
                if v not in seen:
                    seen.add(v)
                    keep.append(v)
            unique.append((q, keep))
        return QbfProblem(normalize_prefix(unique), self.c, lit, var_map=dict(self.var_map))

    def g(self, f, env):
        if isinstance(f, (Exists, Forall, And, Or)):
            key = (id(f), tuple(env[v] for v in self._free(f) if v in env))
            hit = self._memo.get(key)
            if hit is not None:
                return hit
            result = self._g(f, env)
            self._memo[key] = result
            return result
        return self._atom(f, env), []

    def _g(self, f, env):
        if isinstance(f, (And, Or)):
            is_and = isinstance(f, And)
            lits, prefixes = [], []
            for a in f.args:
                lit, blocks = self.g(a, env)
                if lit == (FALSE if is_and else TRUE):
                    return lit, []
                lits.append(lit)
                prefixes.append(blocks)
            out = self.c.AND(lits) if is_and else self.c.OR(lits)
            self._check_cap()
            return out, merge_blocks(prefixes)
        is_exists = isinstance(f, Exists)
        v = f.var
        if isinstance(v, SetVar):
            self.instances += 1
            ids = []
            for i in range(self.n):
                x = self.c.new_input()
                self.var_map[("set", v.name, self.instances, i)] = x
                ids.append(x)
            inner = dict(env)
            inner[v] = tuple(ids)
            lit, blocks = self.g(f.body, inner)
            return lit, [("e" if is_exists else "a", ids)] + blocks
        lits, prefixes = [], []
        inner = dict(env)
        for value in self._range(v):
            inner[v] = value
            lit, blocks = self.g(f.body, inner)
            if lit == (TRUE if is_exists else FALSE):
                return lit, []
            lits.append(lit)
            prefixes.append(blocks)
        out = self.c.OR(lits) if is_exists else self.c.AND(lits)
        self._check_cap()
        return out, merge_blocks(prefixes)

    def _set(self, x, env):
        if x in env:
            return env[x]
        if x in self.fixed:
            return self.fixed[x]
        raise ValueError(f"unbound set variable {x}")

    def _atom(self, f, env) -> int:
        c = self.c
        if isinstance(f, Top):
            return TRUE
        if isinstance(f, Bottom):
            return FALSE
        if isinstance(f, Not):
            return -self._atom(f.body, env)
        if isinstance(f, Pred):
            if any(isinstance(a, SetVar) for a in f.args):
                raise ValueError(f"undefined set predicate {f.name}; expand definitions first")
            return self._fact(f.name, tuple(self._val(a, env) for a in f.args))
        if isinstance(f, Eq):
            return TRUE if self._val(f.left, env) == self._val(f.right, env) else FALSE
        if isinstance(f, Member):
            return self._set(f.set, env)[self._val(f.elem, env)]
        if isinstance(f, IsEmpty):
            return c.AND(-x for x in self._set(f.set, env))
        a = self._set(f.left, env)
        b = self._set(f.right, env)
        if isinstance(f, Subset):
            return c.AND(c.OR((-x, y)) for x, y in zip(a, b))
        if isinstance(f, SetEq):
            return c.AND(c.IFF(x, y) for x, y in zip(a, b))
        if isinstance(f, Disjoint):
            return c.AND(-c.AND((x, y)) for x, y in zip(a, b))
        if isinstance(f, UnionEq):
            w = self._set(f.whole, env)
            return c.AND(c.IFF(c.OR((x, y)), z) for x, y, z in zip(a, b, w))
        raise TypeError(f"cannot ground {f!r}")


def ground(sentence: Formula, structure: FolStructure, fold: bool = True,
           clause_cap: int = DEFAULT_CLAUSE_CAP, fixed_sets: dict | None = None,
           scoping: bool = True) -> QbfProblem:
    """Ground a closed MSOL sentence (definitions already expanded).

    With ``fold`` structure predicates become constants; without it each
    ground fact is an outermost existential variable pinned by a unit clause.
    ``fixed_sets`` gives values to free set variables. ``scoping`` pushes
    quantifiers inward first, which shrinks both prefix and matrix.
    """
    return Grounder(structure, fold, clause_cap, fixed_sets, scoping).ground(sentence)
