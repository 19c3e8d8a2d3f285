"""Built-in QBF decision procedures for desk-scale instances.

Small problems are decided by plain recursive assignment over the prefix.
Larger ones use counterexample-guided abstraction refinement in the style of
RAReQS: each player proposes a move from an abstraction built out of the
opponent's earlier counter-moves, with a SAT solver at the innermost level.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

from pysat.solvers import Solver

from .circuit import FALSE, TRUE, Circuit
from .problem import QbfProblem, normalize_prefix

DEFAULT_FULL_EXPANSION_CAP = 40
DEFAULT_VARIABLE_CAP = 2_200  # quantified variables, auxiliaries excluded


class SolverCapExceeded(RuntimeError):
    pass


class SolverTimeout(RuntimeError):
    pass


@dataclass(frozen=True)
class SolveResult:
    sat: bool
    method: str
    iterations: int = 0

    def __str__(self):
        return "sat" if self.sat else "unsat"


# ---- full expansion ----

def _assign(clauses, lit):
    out = []
    for c in clauses:
        if lit in c:
            continue
        if -lit in c:
            c = tuple(l for l in c if l != -lit)
            if not c:
                return None
        out.append(c)
    return out


def _expand(order, clauses):
    if clauses is None:
        return False
    if not clauses:
        return True
    if not order:
        return False
    (q, v), rest = order[0], order[1:]
    if q == "e":
        return _expand(rest, _assign(clauses, v)) or _expand(rest, _assign(clauses, -v))
    return _expand(rest, _assign(clauses, v)) and _expand(rest, _assign(clauses, -v))


def expand_solve(q: QbfProblem) -> bool:
    """Exact truth by recursive assignment, variable by variable."""
    order = [(kind, v) for kind, vs in normalize_prefix(q.prefix) for v in vs]
    bound = {v for _, v in order}
    clauses = [tuple(c) for c in q.cnf]
    free = sorted({abs(l) for c in clauses for l in c} - bound)
    # free variables are read existentially, outermost
    order = [("e", v) for v in free] + order
    return _expand(order, clauses)


# ---- abstraction refinement ----

class _Sat:
    """Incremental Tseitin encoding of circuit literals into a SAT solver."""

    def __init__(self, circuit: Circuit):
        self.c = circuit
        self.solver = Solver(name="cadical153")
        self.ids: dict[int, int] = {}
        self.top = 0

    def var(self, node):
        v = self.ids.get(node)
        if v is None:
            self.top += 1
            v = self.top
            self.ids[node] = v
        return v

    def lit(self, l):
        node = abs(l)
        if node == TRUE:
            v = self.ids.get(TRUE)
            if v is None:
                v = self.var(TRUE)
                self.solver.add_clause([v])
            return v if l > 0 else -v
        if node in self.c.gates and node not in self.ids:
            for g in self.c.cone(node):
                if g in self.ids:
                    continue
                t = self.var(g)
                kids = [self.lit(k) for k in self.c.gates[g]]
                for k in kids:
                    self.solver.add_clause([-t, k])
                self.solver.add_clause([t] + [-k for k in kids])
        v = self.var(node)
        return v if l > 0 else -v

    def assert_lit(self, l):
        self.solver.add_clause([self.lit(l)])

    def model(self, nodes):
        m = self.solver.get_model() or []
        pos = {x for x in m if x > 0}
        return {n: (n in self.ids and self.ids[n] in pos) for n in nodes}

    def delete(self):
        self.solver.delete()


class _Context:
    def __init__(self, circuit, deadline):
        self.c = circuit
        self.deadline = deadline
        self.iterations = 0

    def tick(self):
        self.iterations += 1
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise SolverTimeout("QBF solving timed out")


class _Game:
    """The player owning ``blocks[0]`` tries to make ``target`` true.

    ``blocks`` alternate between this player and the opponent.
    """

    def __init__(self, ctx: _Context, blocks: list, target: int):
        self.ctx = ctx
        self.blocks = [list(vs) for vs in blocks]
        self.target = target
        if len(self.blocks) == 1:
            self.sat = _Sat(ctx.c)
            self.sat.assert_lit(target)
            self.abstraction = None
        else:
            # the opponent's block is substituted away; the rest keeps alternating
            self.sat = None
            shape = [list(self.blocks[0])] + [[] for _ in self.blocks[3:]]
            self.abstraction = _Game(ctx, shape, TRUE)

    def refine(self, conjunct: int, new_vars: list):
        """Conjoin ``conjunct`` whose fresh variables are ``new_vars`` per level.

        The abstraction is left alone: it stays weaker than the refined game,
        and later counter-moves are copied from the strengthened target.
        """
        self.target = self.ctx.c.AND((self.target, conjunct))
        for i, vs in enumerate(new_vars):
            self.blocks[i].extend(vs)
        if self.sat is not None:
            self.sat.assert_lit(conjunct)
        elif new_vars and new_vars[0]:
            self.abstraction._extend_mine(new_vars[0])

    def _extend_mine(self, vs):
        # moves proposed by the abstraction must cover every variable we own
        self.blocks[0].extend(vs)
        if self.abstraction is not None:
            self.abstraction._extend_mine(vs)

    def close(self):
        if self.sat is not None:
            self.sat.delete()
        else:
            self.abstraction.close()

    def solve(self):
        """A winning move for the first block, or None when the opponent wins."""
        c = self.ctx.c
        if self.sat is not None:
            self.ctx.tick()
            if not self.sat.solver.solve():
                return None
            return self.sat.model(self.blocks[0])
        mine, theirs, deeper = self.blocks[0], self.blocks[1], self.blocks[2:]
        while True:
            self.ctx.tick()
            move = self.abstraction.solve()
            if move is None:
                return None
            move = {v: move.get(v, False) for v in mine}
            fixed = c.substitute(self.target, {v: TRUE if b else FALSE for v, b in move.items()})
            if fixed == TRUE:
                return move
            if fixed == FALSE:
                counter = {}
            else:
                reply = _Game(self.ctx, _compact([theirs] + deeper), -fixed)
                try:
                    counter = reply.solve()
                finally:
                    reply.close()
                if counter is None:
                    return move
            mapping = {v: TRUE if counter.get(v, False) else FALSE for v in theirs}
            fresh = []
            for vs in deeper:
                level = []
                for v in vs:
                    x = c.new_input()
                    mapping[v] = x
                    level.append(x)
                fresh.append(level)
            conjunct = c.substitute(self.target, mapping)
            if not fresh:
                fresh = [[]]
            self.abstraction.refine(conjunct, fresh)


def _compact(blocks):
    """Drop trailing empty levels; inner empty levels are kept for alternation."""
    out = [list(vs) for vs in blocks]
    while len(out) > 1 and not out[-1]:
        out.pop()
    return out


def cegar_solve(prefix: list, circuit: Circuit, root: int, timeout: float | None = None):
    """Decide a prenex circuit QBF; returns ``(value, iterations)``."""
    blocks = normalize_prefix(prefix)
    if root in (TRUE, FALSE):
        return root == TRUE, 0
    bound = {v for _, vs in blocks for v in vs}
    free = sorted(circuit.support(root) - bound)
    if free:
        if blocks and blocks[0][0] == "e":
            blocks[0] = ("e", free + blocks[0][1])
        else:
            blocks.insert(0, ("e", free))
    if not blocks:
        return circuit.evaluate(root, {}), 0
    deadline = None if timeout is None else time.monotonic() + timeout
    ctx = _Context(circuit, deadline)
    first = blocks[0][0]
    game = _Game(ctx, [vs for _, vs in blocks], root if first == "e" else -root)
    try:
        won = game.solve() is not None
    finally:
        game.close()
    return (won if first == "e" else not won), ctx.iterations


def detect_gates(prefix: list, cnf) -> dict:
    """AND definitions ``t <-> (k1 & ... & kn)`` among innermost existentials.

    A variable qualifies when its clauses include ``(-t, ki)`` for every
    ``ki`` and ``(t, -k1, ..., -kn)``. Returns ``t -> (children, clause
    indices)``; definitions that would form a cycle are left out.
    """
    blocks = normalize_prefix(prefix)
    if not blocks or blocks[-1][0] != "e":
        return {}
    inner = set(blocks[-1][1])
    binary: dict[int, dict[int, int]] = {}
    long: dict[int, list] = {}
    for i, cl in enumerate(cnf):
        if len(cl) == 2:
            a, b = cl
            if -a in inner:
                binary.setdefault(-a, {})[b] = i
            if -b in inner:
                binary.setdefault(-b, {})[a] = i
        for l in cl:
            if l > 0 and l in inner:
                long.setdefault(l, []).append(i)
    gates = {}
    for t, kids in binary.items():
        for i in long.get(t, ()):
            rest = [-l for l in cnf[i] if l != t]
            if rest and len(rest) == len(cnf[i]) - 1 and all(k in kids for k in rest):
                gates[t] = (tuple(rest), [i] + [kids[k] for k in rest])
                break
    # drop gates on cycles so substitution terminates
    state: dict[int, int] = {}

    def acyclic(t):
        s = state.get(t)
        if s is not None:
            return s == 2
        state[t] = 1
        ok = all(abs(k) not in gates or acyclic(abs(k)) for k in gates[t][0])
        state[t] = 2 if ok else 3
        return ok

    return {t: g for t, g in gates.items() if acyclic(t)}


def _circuit_of(q: QbfProblem):
    c = Circuit()
    ids = {}
    gates = detect_gates(q.prefix, q.cnf)
    for _, vs in q.prefix:
        for v in vs:
            if v not in gates:
                ids[v] = c.new_input()

    def node(l):
        v = abs(l)
        if v not in ids:
            if v in gates:
                ids[v] = c.AND(node(k) for k in gates[v][0])
            else:
                ids[v] = c.new_input()
        return ids[v] if l > 0 else -ids[v]

    dropped = {i for _, idx in gates.values() for i in idx}
    root = c.AND(c.OR(node(l) for l in cl) for i, cl in enumerate(q.cnf) if i not in dropped)
    prefix = [(kind, [ids[v] for v in vs if v not in gates]) for kind, vs in q.prefix]
    return prefix, c, root


def naive_solve(q: QbfProblem, full_expansion_cap: int = DEFAULT_FULL_EXPANSION_CAP,
                variable_cap: int = DEFAULT_VARIABLE_CAP, timeout: float | None = None) -> SolveResult:
    """Exact truth of ``q``: full expansion when small, block-wise search above.

    Accepts the circuit form produced by grounding or a CNF problem.
    """
    if q.cnf is not None:
        count = max(q.num_vars, sum(len(vs) for _, vs in q.prefix))
        if count <= full_expansion_cap:
            return SolveResult(expand_solve(q), "expansion")
        if count - q.aux_count > variable_cap:
            raise SolverCapExceeded(f"{count} variables exceed the cap of {variable_cap}")
        prefix, c, root = _circuit_of(q)
    else:
        prefix, c, root = q.prefix, q.circuit, q.root
        count = sum(len(vs) for _, vs in prefix)
        if count > variable_cap:
            raise SolverCapExceeded(f"{count} variables exceed the cap of {variable_cap}")
    value, iterations = cegar_solve(prefix, c, root, timeout)
    return SolveResult(value, "cegar", iterations)
