"""Direct evaluation of formulas by enumerating quantifier ranges.

First-order variables range over the atoms (or block ids) of a structure, set
variables over all subsets of the atoms, encoded as bitmasks. Results of
subformulas are memoised on the values of their free variables, which keeps
conjunctions of independent existentials from multiplying out.
"""

from __future__ import annotations

import time

from ..structure import FolStructure
from .ast import (
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
    Subset,
    Top,
    UnionEq,
    free_vars,
)


class EvaluationBudgetExceeded(RuntimeError):
    pass


class Evaluator:
    def __init__(self, structure: FolStructure, deadline: float | None = None, max_subset_atoms: int = 16):
        self.s = structure
        self.deadline = deadline
        self.max_subset_atoms = max_subset_atoms
        self._fv: dict[int, tuple] = {}
        self._memo: dict = {}
        self._keep: list = []
        self._ticks = 0

    def _free(self, f) -> tuple:
        key = id(f)
        fv = self._fv.get(key)
        if fv is None:
            fv = tuple(sorted(free_vars(f), key=lambda v: (v.sort, v.name)))
            self._fv[key] = fv
            self._keep.append(f)
        return fv

    def _val(self, t, env):
        return t.value if isinstance(t, Const) else env[t]

    def _range(self, v):
        if isinstance(v, SetVar):
            n = self.s.domain_size
            if n > self.max_subset_atoms:
                raise EvaluationBudgetExceeded(f"set quantifier over {n} atoms")
            return range(1 << n)
        return range(self.s.sort_size(v.sort))

    def holds(self, f: Formula, env: dict | None = None) -> bool:
        return self._eval(f, dict(env or {}))

    def _eval(self, f, env) -> bool:
        if isinstance(f, Top):
            return True
        if isinstance(f, Bottom):
            return False
        if isinstance(f, Pred):
            return self.s.holds(f.name, tuple(self._val(a, env) for a in f.args))
        if isinstance(f, Eq):
            return self._val(f.left, env) == self._val(f.right, env)
        if isinstance(f, Member):
            return bool((env[f.set] >> self._val(f.elem, env)) & 1)
        if isinstance(f, Subset):
            return env[f.left] & ~env[f.right] == 0
        if isinstance(f, SetEq):
            return env[f.left] == env[f.right]
        if isinstance(f, Disjoint):
            return env[f.left] & env[f.right] == 0
        if isinstance(f, UnionEq):
            return env[f.left] | env[f.right] == env[f.whole]
        if isinstance(f, IsEmpty):
            return env[f.set] == 0
        if isinstance(f, Not):
            return not self._eval(f.body, env)
        if isinstance(f, And):
            return all(self._eval(a, env) for a in f.args)
        if isinstance(f, Or):
            return any(self._eval(a, env) for a in f.args)
        if isinstance(f, Implies):
            return not self._eval(f.left, env) or self._eval(f.right, env)
        if isinstance(f, Iff):
            return self._eval(f.left, env) == self._eval(f.right, env)
        if isinstance(f, (Exists, Forall)):
            key = (id(f), tuple(env[v] for v in self._free(f)))
            hit = self._memo.get(key)
            if hit is not None:
                return hit
            self._tick()
            want = isinstance(f, Exists)
            v = f.var
            saved = env.get(v, _MISSING)
            result = not want
            for value in self._range(v):
                env[v] = value
                if self._eval(f.body, env) == want:
                    result = want
                    break
            if saved is _MISSING:
                env.pop(v, None)
            else:
                env[v] = saved
            self._memo[key] = result
            return result
        raise TypeError(f"not a formula: {f!r}")

    def _tick(self):
        self._ticks += 1
        if self.deadline is not None and self._ticks & 1023 == 0 and time.monotonic() > self.deadline:
            raise EvaluationBudgetExceeded("evaluation deadline passed")


_MISSING = object()


def evaluate(f: Formula, structure: FolStructure, env: dict | None = None, timeout: float | None = None) -> bool:
    deadline = None if timeout is None else time.monotonic() + timeout
    return Evaluator(structure, deadline).holds(f, env)
