"""MONA program emission and a driver for the external MONA binary.

A program fixes the molecule as set constants and asks for a model of the
query, so MONA's "satisfiable" answer means the molecule belongs to the
class. All quantifiers are relativised to ``Atom`` because ws2s variables
range over an infinite tree.

Unary predicates become second-order constants (``O = {5,6};``). The bond
relation is one neighbour set per atom (``Adj_i``) and ``Bond(u,v)`` is a
case split over ``u``; other binary relations and nullary facts are spelled
out as predicates over their known extensions.
"""

from __future__ import annotations

import os
import re
import resource
import subprocess
import tempfile
from dataclasses import dataclass

from .logic.ast import (
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
    Var,
    free_vars,
    subformulas,
)
from .logic.define import Theory
from .structure import FolStructure

MONA_ENV = "PEPLOGIC_MONA"

KEYWORDS = frozenset("""
    all0 all1 all2 allpos assert const defaultwhere empty ex0 ex1 ex2 export
    false import in include inter lastpos let0 let1 let2 m2l-str m2l-tree macro
    max min notin pred restrict root sub true tree union var0 var1 var2 where
    ws1s ws2s guide universe variant succ type
""".split())


class MonaError(ValueError):
    pass


@dataclass(frozen=True)
class MonaProgram:
    declarations: tuple   # "var2 ...;" lines
    structure_facts: tuple  # set equalities and relation predicates
    predicate_defs: tuple   # "pred ...;" lines from the theory
    goal: tuple             # assumptions on free query variables, then the query
    declared: frozenset
    referenced: frozenset

    def text(self) -> str:
        lines = ["ws2s;", *self.declarations, *self.structure_facts, *self.predicate_defs, *self.goal]
        return "\n".join(lines) + "\n"

    def to_bytes(self) -> bytes:
        return self.text().encode("ascii")

    def lint(self) -> list:
        """Names used by the query or its definitions that nothing declares."""
        return sorted(self.referenced - self.declared)


def _ident(name: str, taken) -> str:
    out = re.sub(r"[^A-Za-z0-9_]", "_", name)
    if not out or not out[0].isalpha():
        out = "v" + out
    while out in KEYWORDS or out in taken:
        out += "_"
    return out


def _set_literal(members) -> str:
    members = sorted(members)
    return "{" + ",".join(map(str, members)) + "}" if members else "empty"


class _Writer:
    def __init__(self, theory: Theory, structure: FolStructure, globals_: set):
        self.theory = theory
        self.s = structure
        self.globals = globals_

    def formula(self, f: Formula, names: dict) -> str:
        w = self.formula
        if isinstance(f, Top):
            return "true"
        if isinstance(f, Bottom):
            return "false"
        if isinstance(f, Not):
            body = w(f.body, names)
            compound = isinstance(f.body, (And, Or, Implies, Iff, Exists, Forall))
            return f"~{body}" if compound else f"~({body})"
        if isinstance(f, (And, Or)):
            op = " & " if isinstance(f, And) else " | "
            return "(" + op.join(w(a, names) for a in f.args) + ")"
        if isinstance(f, (Implies, Iff)):
            op = " => " if isinstance(f, Implies) else " <=> "
            return f"({w(f.left, names)}{op}{w(f.right, names)})"
        if isinstance(f, (Exists, Forall)):
            v = f.var
            if isinstance(v, Var) and v.sort != "atom":
                raise MonaError(f"MONA programs have no {v.sort} sort")
            inner = dict(names)
            inner[v] = _ident(v.name, self.globals | set(names.values()))
            x = inner[v]
            level = "2" if isinstance(v, SetVar) else "1"
            guard = f"{x} sub Atom" if level == "2" else f"{x} in Atom"
            if isinstance(f, Exists):
                return f"(ex{level} {x}: {guard} & {w(f.body, inner)})"
            return f"(all{level} {x}: {guard} => {w(f.body, inner)})"
        t = lambda a: self.term(a, names)
        if isinstance(f, Pred):
            args = [t(a) for a in f.args]
            if f.name in self.theory or len(args) != 1:
                return f"{f.name}({', '.join(args)})" if args else f.name
            return f"{args[0]} in {f.name}"
        if isinstance(f, Eq):
            return f"{t(f.left)} = {t(f.right)}"
        if isinstance(f, Member):
            return f"{t(f.elem)} in {t(f.set)}"
        if isinstance(f, Subset):
            return f"{t(f.left)} sub {t(f.right)}"
        if isinstance(f, SetEq):
            return f"{t(f.left)} = {t(f.right)}"
        if isinstance(f, Disjoint):
            return f"{t(f.left)} inter {t(f.right)} = empty"
        if isinstance(f, UnionEq):
            return f"{t(f.left)} union {t(f.right)} = {t(f.whole)}"
        if isinstance(f, IsEmpty):
            return f"{t(f.set)} = empty"
        raise TypeError(f"cannot emit {f!r}")

    def term(self, a, names) -> str:
        if isinstance(a, Const):
            if a.sort != "atom":
                raise MonaError(f"MONA programs have no {a.sort} sort")
            return str(a.value)
        try:
            return names[a]
        except KeyError:
            raise MonaError(f"unbound variable {a}") from None


def _used(f: Formula) -> set:
    return {g.name for g in subformulas(f) if isinstance(g, Pred)}


def emit_program(goal: Formula, structure: FolStructure, theory: Theory | None = None) -> MonaProgram:
    """Build the program asking MONA whether ``goal`` has a model in the molecule.

    Defined predicates reachable from ``goal`` are emitted as ``pred`` lines
    in dependency order; free set variables of ``goal`` become declared
    second-order variables ranging over subsets of ``Atom``.
    """
    theory = theory if theory is not None else Theory()
    for v in free_vars(goal):
        if not isinstance(v, SetVar):
            raise MonaError(f"free first-order variable {v.name} in goal")
    defined: list[str] = []
    for name in sorted(_used(goal)):
        if name in theory:
            for d in theory.dependencies(name):
                if d not in defined:
                    defined.append(d)
    defined = [d.name for d in theory if d.name in defined]  # theory order
    used = set(_used(goal))
    for name in defined:
        used |= _used(theory[name].body)
    primitive = sorted(used - set(theory.names()))
    n = structure.domain_size

    unary, binary, nullary = [], [], []
    for name in primitive:
        arity = _arity(name, goal, theory, defined)
        {0: nullary, 1: unary, 2: binary}.get(arity, binary).append(name)
        if arity not in (0, 1, 2):
            raise MonaError(f"predicate {name} has unsupported arity {arity}")

    adj = [f"Adj_{i}" for i in range(n)] if "Bond" in binary else []
    free = sorted(v.name for v in free_vars(goal))
    taken = {"Atom", *unary, *binary, *nullary, *adj, *defined}
    free_ids = {SetVar(x): _ident(x, taken) for x in free}
    var2 = ["Atom", *unary, *adj, *free_ids.values()]
    declarations = ("var2 " + ", ".join(var2) + ";",)

    facts = [f"Atom = {_set_literal(range(n))};"]
    for name in unary:
        facts.append(f"{name} = {_set_literal(structure.unary_ext(name))};")
    for i, name in enumerate(adj):
        facts.append(f"{name} = {_set_literal(j for j in range(n) if structure.holds('Bond', (i, j)))};")
    for name in binary:
        if name == "Bond":
            cases = [f"(u = {i} & v in Adj_{i})" for i in range(n)]
        else:
            pairs = sorted(structure.binary_ext(name))
            cases = [f"(u = {i} & v = {j})" for i, j in pairs]
        body = " | ".join(cases) if cases else "false"
        facts.append(f"pred {name}(var1 u, var1 v) = {body};")
    for name in nullary:
        facts.append(f"pred {name} = {'true' if structure.holds(name, ()) else 'false'};")

    writer = _Writer(theory, structure, taken | set(free_ids.values()))
    preds = []
    for name in defined:
        d = theory[name]
        names, params = {}, []
        for p in d.params:
            if isinstance(p, Var) and p.sort != "atom":
                raise MonaError(f"{name}: MONA programs have no {p.sort} sort")
            x = _ident(p.name, writer.globals | set(names.values()))
            names[p] = x
            params.append(("var2 " if isinstance(p, SetVar) else "var1 ") + x)
        head = f"{name}({', '.join(params)})" if params else name
        preds.append(f"pred {head} = {writer.formula(d.body, names)};")

    goal_lines = [f"{x} sub Atom;" for x in free_ids.values()]
    goal_lines.append(writer.formula(goal, dict(free_ids)) + ";")
    declared = frozenset(["Atom", *unary, *binary, *nullary, *defined])
    return MonaProgram(declarations, tuple(facts), tuple(preds), tuple(goal_lines),
                       declared, frozenset(used))


def _arity(name, goal, theory, defined) -> int:
    found = set()
    for f in [goal, *(theory[d].body for d in defined)]:
        for g in subformulas(f):
            if isinstance(g, Pred) and g.name == name:
                found.add(len(g.args))
    if len(found) != 1:
        raise MonaError(f"predicate {name} used with arities {sorted(found)}")
    return found.pop()


def emit_mona(goal: Formula, structure: FolStructure, theory: Theory | None = None) -> bytes:
    program = emit_program(goal, structure, theory)
    missing = program.lint()
    if missing:
        raise MonaError(f"undeclared names: {', '.join(missing)}")
    return program.to_bytes()


# ---- driver ----

@dataclass(frozen=True)
class MonaResult:
    status: str  # "valid", "invalid" or "failure"
    reason: str = ""
    transcript: str = ""

    @property
    def holds(self):
        return {"valid": True, "invalid": False}.get(self.status)

    def __str__(self):
        return f"failure({self.reason})" if self.status == "failure" else self.status


_RESOURCE = re.compile(r"out of memory|bad_alloc|memory exhausted|cannot allocate|"
                       r"too large|limit exceeded|killed", re.I)


def parse_transcript(text: str, returncode: int = 0) -> MonaResult:
    """Read MONA's verdict; a satisfying example counts as the query holding."""
    if _RESOURCE.search(text) or returncode in (-9, 137):
        return MonaResult("failure", "resource", text)
    if "Formula is valid" in text or "A satisfying example" in text:
        return MonaResult("valid", transcript=text)
    if "Formula is unsatisfiable" in text:
        return MonaResult("invalid", transcript=text)
    return MonaResult("failure", "unparseable", text)


def run_mona(program, binary: str | None = None, timeout: float | None = 60.0,
             memory_limit: int | None = None, args=("-q",)) -> MonaResult:
    """Run MONA on ``program`` (text, bytes or MonaProgram).

    ``memory_limit`` is an address-space cap in bytes for the child.
    """
    binary = binary or os.environ.get(MONA_ENV, "mona")
    if isinstance(program, MonaProgram):
        program = program.to_bytes()
    elif isinstance(program, str):
        program = program.encode("ascii")

    def limit():
        if memory_limit:
            resource.setrlimit(resource.RLIMIT_AS, (memory_limit, memory_limit))

    with tempfile.TemporaryDirectory(prefix="peplogic-") as tmp:
        path = os.path.join(tmp, "query.mona")
        with open(path, "wb") as fh:
            fh.write(program)
        try:
            proc = subprocess.run([binary, *args, path], capture_output=True, timeout=timeout,
                                  preexec_fn=limit if memory_limit else None)
        except subprocess.TimeoutExpired:
            return MonaResult("failure", "timeout")
        except OSError:
            return MonaResult("failure", "spawn")
    text = proc.stdout.decode("utf-8", "replace") + proc.stderr.decode("utf-8", "replace")
    return parse_transcript(text, proc.returncode)
