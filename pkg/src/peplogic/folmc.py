"""Model checking prenex-CNF sentences on finite (augmented) structures.

The search follows four steps at every node:

1. substitute the current assignment and drop false ground literals; an
   emptied clause refutes the branch,
2. drop clauses that became true,
3. use clauses left with a single free variable to filter that variable's
   candidates (a universal variable with a failing element refutes at once),
4. branch on the variable of the outermost quantifier block with the fewest
   remaining candidates (ties go to prefix order).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from .blocks import DEFAULT_FRAGMENT_LIMIT, FragmentLimitExceeded, compute_building_blocks
from .logic.ast import Const, Eq, Formula, Pred, Var
from .logic.normal import CnfMatrix, PrenexForm, drop_empty_sorts, to_cnf, to_prenex
from .structure import FolStructure

DEFAULT_TIMEOUT = 30.0
DEFAULT_NODE_CAP = 5_000_000

__all__ = [
    "CheckCapExceeded",
    "CheckResult",
    "CheckTask",
    "CheckTimeout",
    "FragmentLimitExceeded",
    "check",
    "compile_sentence",
    "compute_building_blocks",
    "verify_augmentation",
]


class CheckTimeout(RuntimeError):
    pass


class CheckCapExceeded(RuntimeError):
    pass


@dataclass(frozen=True)
class CheckResult:
    value: Optional[bool]
    reason: Optional[str] = None
    nodes: int = 0

    @property
    def ok(self) -> bool:
        return self.value is not None


@dataclass
class CheckTask:
    prefix: tuple
    cnf: CnfMatrix
    structure: FolStructure
    timeout: Optional[float] = DEFAULT_TIMEOUT
    node_cap: Optional[int] = DEFAULT_NODE_CAP
    heuristic: bool = True

    @classmethod
    def from_prenex(cls, p: PrenexForm, structure: FolStructure, **kw) -> "CheckTask":
        return cls(p.prefix, to_cnf(p.matrix), structure, **kw)


def compile_sentence(sentence: Formula, structure: FolStructure) -> tuple:
    """Prenex/CNF form of a FOL sentence, with empty sorts specialised away."""
    sizes = {"atom": structure.domain_size, "block": structure.sort_size("block")}
    p = to_prenex(drop_empty_sorts(sentence, sizes))
    return p.prefix, to_cnf(p.matrix)


class _Lit:
    __slots__ = ("positive", "args", "vars", "value")

    def __init__(self, positive, ext, nullary, eq, args):
        self.positive = positive
        self.args = args  # tuple of ("v", index) or ("c", value)
        self.vars = frozenset(x for k, x in args if k == "v")
        self.value = _compile(positive, ext, nullary, eq, args)


def _compile(pos, ext, nullary, eq, args):
    """A closure giving the literal's truth under an assignment list."""
    if not args:
        return lambda a: nullary == pos
    getters = []
    for k, x in args:
        getters.append((lambda a, x=x: x) if k == "c" else (lambda a, x=x: a[x]))
    if len(args) == 1:
        (k, x), = args
        if k == "v":
            return lambda a: (a[x] in ext) == pos
        return lambda a: (x in ext) == pos
    (k1, x1), (k2, x2) = args
    if k1 == "v" and k2 == "v":
        if eq:
            return lambda a: (a[x1] == a[x2]) == pos
        return lambda a: ((a[x1], a[x2]) in ext) == pos
    g1, g2 = getters
    if eq:
        return lambda a: (g1(a) == g2(a)) == pos
    return lambda a: ((g1(a), g2(a)) in ext) == pos


class _Checker:
    def __init__(self, task: CheckTask):
        s = task.structure
        self.s = s
        self.heuristic = task.heuristic
        self.node_cap = task.node_cap
        self.deadline = None if task.timeout is None else time.monotonic() + task.timeout
        self.nodes = 0
        self.vars = [v for _, v in task.prefix]
        self.quant = [q for q, _ in task.prefix]
        index = {v: i for i, v in enumerate(self.vars)}
        # block number of each variable in the prefix
        self.level = []
        lvl = 0
        for i, q in enumerate(self.quant):
            if i and q != self.quant[i - 1]:
                lvl += 1
            self.level.append(lvl)
        self.ranges = [tuple(range(s.sort_size(v.sort))) for v in self.vars]
        self.clauses = []
        for clause in task.cnf.clauses:
            self.clauses.append(tuple(self._lit(l, index) for l in clause))

    def _lit(self, lit, index) -> _Lit:
        atom = lit.atom
        if isinstance(atom, Eq):
            args = (self._arg(atom.left, index), self._arg(atom.right, index))
            return _Lit(lit.positive, None, False, True, args)
        if not isinstance(atom, Pred):
            raise TypeError(f"unsupported literal {atom} in a first-order matrix")
        args = tuple(self._arg(a, index) for a in atom.args)
        if not args:
            return _Lit(lit.positive, None, self.s.holds(atom.name, ()), False, ())
        ext = self.s.unary_ext(atom.name) if len(args) == 1 else self.s.binary_ext(atom.name)
        return _Lit(lit.positive, ext, False, False, args)

    @staticmethod
    def _arg(t, index):
        if isinstance(t, Const):
            return ("c", t.value)
        if isinstance(t, Var):
            if t not in index:
                raise ValueError(f"unbound variable {t}")
            return ("v", index[t])
        raise TypeError(f"set argument {t} in a first-order matrix")

    def _tick(self):
        self.nodes += 1
        if self.node_cap is not None and self.nodes > self.node_cap:
            raise CheckCapExceeded(f"more than {self.node_cap} search nodes")
        if self.deadline is not None and self.nodes & 255 == 0 and time.monotonic() > self.deadline:
            raise CheckTimeout("model checking timed out")

    def run(self) -> bool:
        assign = [None] * len(self.vars)
        clauses = []
        for c in self.clauses:
            reduced = self._reduce((c, None), assign)
            if reduced is None:
                continue
            if not reduced[0]:
                return False
            clauses.append(reduced)
        cands = [None] * len(self.vars)
        return self._solve(clauses, assign, cands)

    @staticmethod
    def _reduce(clause, assign):
        """Steps 1-2: None if satisfied, else the open literals and their free variables."""
        rest = []
        free = set()
        for lit in clause[0]:
            open_ = [x for x in lit.vars if assign[x] is None]
            if open_:
                rest.append(lit)
                free.update(open_)
            elif lit.value(assign):
                return None
        return tuple(rest), frozenset(free)

    def _solve(self, clauses, assign, cands) -> bool:
        self._tick()
        if not clauses:
            return True
        # step 3: single-variable clauses
        singles: dict[int, list] = {}
        multi = []
        for c in clauses:
            if len(c[1]) == 1:
                singles.setdefault(next(iter(c[1])), []).append(c[0])
            else:
                multi.append(c)
        cands = list(cands)
        for v, group in singles.items():
            pool = cands[v] if cands[v] is not None else self.ranges[v]
            keep = []
            for value in pool:
                assign[v] = value
                good = all(any(lit.value(assign) for lit in c) for c in group)
                if good:
                    keep.append(value)
                elif self.quant[v] == "A":
                    assign[v] = None
                    return False
            assign[v] = None
            if self.quant[v] == "E" and not keep:
                return False
            cands[v] = tuple(keep)
        if not multi:
            # every remaining clause was single-variable and has been discharged
            return True
        # step 4: branch within the outermost open block
        open_vars = set()
        for c in multi:
            open_vars |= c[1]
        top = min(self.level[v] for v in open_vars)
        block = sorted(v for v in open_vars if self.level[v] == top)
        if self.heuristic:
            v = min(block, key=lambda x: (len(cands[x]) if cands[x] is not None else len(self.ranges[x]), x))
        else:
            v = block[0]
        pool = cands[v] if cands[v] is not None else self.ranges[v]
        want = self.quant[v] == "E"
        for value in pool:
            assign[v] = value
            sub = []
            dead = False
            for c in multi:
                if v in c[1]:
                    r = self._reduce(c, assign)
                    if r is None:
                        continue
                    if not r[0]:
                        dead = True
                        break
                    sub.append(r)
                else:
                    sub.append(c)
            result = False if dead else self._solve(sub, assign, cands)
            assign[v] = None
            if result == want:
                return want
        return not want


def check(task: CheckTask) -> CheckResult:
    checker = _Checker(task)
    try:
        value = checker.run()
    except CheckTimeout:
        return CheckResult(None, "timeout", checker.nodes)
    except CheckCapExceeded:
        return CheckResult(None, "cap", checker.nodes)
    return CheckResult(value, None, checker.nodes)


# ---- augmentation audit against the MSOL definitions ----

@dataclass
class AugmentationReport:
    blocks: int
    issues: list = field(default_factory=list)

    @property
    def consistent(self) -> bool:
        return not self.issues


def verify_augmentation(structure: FolStructure, oracle=None) -> AugmentationReport:
    """Check computed blocks against the MSOL block definitions.

    ``oracle(sentence, structure, fixed_sets) -> bool`` decides an MSOL
    sentence whose free set variables are fixed by ``fixed_sets``; the default
    grounds to QBF and solves it with the built-in solver.
    """
    from .logic.sexpr import loads
    from .logic.ast import SetVar, conj, disj, SetEq, Forall, Implies, Pred as P
    from .theory import theory

    if oracle is None:
        from .qbf import decide

        oracle = decide
    cat = theory()
    blocks = structure.blocks
    report = AugmentationReport(len(blocks))
    carbons = structure.unary_ext("C")
    X, K = SetVar("X"), SetVar("K")
    scope = {"X": X, "K": K}
    connected = cat.msol.expand(P("CarbonConnected", (K,)))
    closed = loads(
        "(forall ((x atom) (y atom)) (implies (and (in x K) (C y) (Bond x y)) (in y K)))", scope
    )
    members = loads(
        "(forall ((x atom)) (iff (in x X) (or (in x K)"
        " (and (not (C x)) (exists ((y atom)) (and (in y K) (Bond x y)))))))",
        scope,
    )
    is_block = cat.msol.expand(P("BuildingBlock", (X,)))
    for k, block in enumerate(blocks):
        core = frozenset(block & carbons)
        env = {X: block, K: core}
        if not core:
            report.issues.append(f"block {k}: no carbon")
            continue
        if not oracle(connected, structure, env):
            report.issues.append(f"block {k}: carbons not connected")
        if not oracle(closed, structure, env):
            report.issues.append(f"block {k}: maximality violation")
        if not oracle(members, structure, env):
            report.issues.append(f"block {k}: heteroatom membership mismatch")
        if not oracle(is_block, structure, {X: block}):
            report.issues.append(f"block {k}: not a building block")
    named = [SetVar(f"B{k}") for k in range(len(blocks))]
    Y = SetVar("Y")
    complete = Forall(Y, Implies(
        cat.msol.expand(P("BuildingBlock", (Y,))),
        disj(*[SetEq(Y, b) for b in named]),
    ))
    if not oracle(complete, structure, dict(zip(named, blocks))):
        report.issues.append("some building block is missing from the extension")
    return report
