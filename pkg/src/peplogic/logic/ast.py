"""Formula trees shared by the MSOL and FOL layers.

Three sorts exist: ``atom`` and ``block`` for first-order terms, and ``set``
for monadic second-order variables (sets of atoms). Nodes are immutable and
hashable; sort errors are raised when a node is built.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Union

FO_SORTS = ("atom", "block")
SORTS = FO_SORTS + ("set",)


class SortError(TypeError):
    pass


@dataclass(frozen=True, slots=True)
class Var:
    name: str
    sort: str = "atom"

    def __post_init__(self):
        if self.sort not in FO_SORTS:
            raise SortError(f"first-order variable {self.name} has sort {self.sort!r}")

    def __str__(self):
        return self.name


@dataclass(frozen=True, slots=True)
class Const:
    value: int
    sort: str = "atom"

    def __post_init__(self):
        if self.sort not in FO_SORTS:
            raise SortError(f"constant {self.value} has sort {self.sort!r}")

    def __str__(self):
        return f"#{self.value}" if self.sort == "atom" else f"#b{self.value}"


@dataclass(frozen=True, slots=True)
class SetVar:
    name: str

    @property
    def sort(self):
        return "set"

    def __str__(self):
        return self.name


Term = Union[Var, Const]
Arg = Union[Var, Const, SetVar]


def _fo(t, where):
    if not isinstance(t, (Var, Const)):
        raise SortError(f"{where} expects a first-order term, got {t!r}")
    return t


def _set(s, where):
    if not isinstance(s, SetVar):
        raise SortError(f"{where} expects a set variable, got {s!r}")
    return s


def _formula(f, where):
    if not isinstance(f, Formula):
        raise SortError(f"{where} expects a formula, got {f!r}")
    return f


class Formula:
    __slots__ = ()

    def children(self) -> tuple:
        return ()

    def __str__(self):
        from .sexpr import dumps

        return dumps(self)


@dataclass(frozen=True, slots=True)
class Top(Formula):
    pass


@dataclass(frozen=True, slots=True)
class Bottom(Formula):
    pass


TRUE = Top()
FALSE = Bottom()


@dataclass(frozen=True, slots=True)
class Pred(Formula):
    """Predicate application; primitive or a defined name resolved by expansion."""

    name: str
    args: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(self.args))
        for a in self.args:
            if not isinstance(a, (Var, Const, SetVar)):
                raise SortError(f"predicate {self.name} argument {a!r} is not a term")


@dataclass(frozen=True, slots=True)
class Eq(Formula):
    left: Term
    right: Term

    def __post_init__(self):
        _fo(self.left, "=")
        _fo(self.right, "=")
        if self.left.sort != self.right.sort:
            raise SortError(f"= compares sorts {self.left.sort} and {self.right.sort}")


@dataclass(frozen=True, slots=True)
class Member(Formula):
    elem: Term
    set: SetVar

    def __post_init__(self):
        _fo(self.elem, "membership")
        _set(self.set, "membership")
        if self.elem.sort != "atom":
            raise SortError("only atoms can be set members")


@dataclass(frozen=True, slots=True)
class Subset(Formula):
    left: SetVar
    right: SetVar

    def __post_init__(self):
        _set(self.left, "subset")
        _set(self.right, "subset")


@dataclass(frozen=True, slots=True)
class SetEq(Formula):
    left: SetVar
    right: SetVar

    def __post_init__(self):
        _set(self.left, "set equality")
        _set(self.right, "set equality")


@dataclass(frozen=True, slots=True)
class Disjoint(Formula):
    left: SetVar
    right: SetVar

    def __post_init__(self):
        _set(self.left, "disjoint")
        _set(self.right, "disjoint")


@dataclass(frozen=True, slots=True)
class UnionEq(Formula):
    """``left ∪ right = whole``."""

    left: SetVar
    right: SetVar
    whole: SetVar

    def __post_init__(self):
        for s in (self.left, self.right, self.whole):
            _set(s, "union")


@dataclass(frozen=True, slots=True)
class IsEmpty(Formula):
    set: SetVar

    def __post_init__(self):
        _set(self.set, "emptiness")


@dataclass(frozen=True, slots=True)
class Not(Formula):
    body: Formula

    def __post_init__(self):
        _formula(self.body, "not")

    def children(self):
        return (self.body,)


@dataclass(frozen=True, slots=True)
class And(Formula):
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(_formula(a, "and") for a in self.args))

    def children(self):
        return self.args


@dataclass(frozen=True, slots=True)
class Or(Formula):
    args: tuple

    def __post_init__(self):
        object.__setattr__(self, "args", tuple(_formula(a, "or") for a in self.args))

    def children(self):
        return self.args


@dataclass(frozen=True, slots=True)
class Implies(Formula):
    left: Formula
    right: Formula

    def __post_init__(self):
        _formula(self.left, "implies")
        _formula(self.right, "implies")

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True, slots=True)
class Iff(Formula):
    left: Formula
    right: Formula

    def __post_init__(self):
        _formula(self.left, "iff")
        _formula(self.right, "iff")

    def children(self):
        return (self.left, self.right)


@dataclass(frozen=True, slots=True)
class Exists(Formula):
    var: Union[Var, SetVar]
    body: Formula

    def __post_init__(self):
        if not isinstance(self.var, (Var, SetVar)):
            raise SortError(f"cannot quantify over {self.var!r}")
        _formula(self.body, "exists")

    def children(self):
        return (self.body,)


@dataclass(frozen=True, slots=True)
class Forall(Formula):
    var: Union[Var, SetVar]
    body: Formula

    def __post_init__(self):
        if not isinstance(self.var, (Var, SetVar)):
            raise SortError(f"cannot quantify over {self.var!r}")
        _formula(self.body, "forall")

    def children(self):
        return (self.body,)


ATOMIC = (Top, Bottom, Pred, Eq, Member, Subset, SetEq, Disjoint, UnionEq, IsEmpty)
QUANTIFIERS = (Exists, Forall)


def conj(*args: Formula) -> Formula:
    flat = []
    for a in args:
        if isinstance(a, And):
            flat.extend(a.args)
        elif isinstance(a, Bottom):
            return FALSE
        elif not isinstance(a, Top):
            flat.append(a)
    if not flat:
        return TRUE
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def disj(*args: Formula) -> Formula:
    flat = []
    for a in args:
        if isinstance(a, Or):
            flat.extend(a.args)
        elif isinstance(a, Top):
            return TRUE
        elif not isinstance(a, Bottom):
            flat.append(a)
    if not flat:
        return FALSE
    return flat[0] if len(flat) == 1 else Or(tuple(flat))


def neg(f: Formula) -> Formula:
    if isinstance(f, Top):
        return FALSE
    if isinstance(f, Bottom):
        return TRUE
    if isinstance(f, Not):
        return f.body
    return Not(f)


def exists(vars_, body: Formula) -> Formula:
    for v in reversed(list(vars_)):
        body = Exists(v, body)
    return body


def forall(vars_, body: Formula) -> Formula:
    for v in reversed(list(vars_)):
        body = Forall(v, body)
    return body


def term_args(f: Formula) -> tuple:
    """Terms and set variables occurring directly in an atomic formula."""
    if isinstance(f, Pred):
        return f.args
    if isinstance(f, (Eq, Subset, SetEq, Disjoint)):
        return (f.left, f.right)
    if isinstance(f, Member):
        return (f.elem, f.set)
    if isinstance(f, UnionEq):
        return (f.left, f.right, f.whole)
    if isinstance(f, IsEmpty):
        return (f.set,)
    return ()


def free_vars(f: Formula) -> frozenset:
    out: set = set()

    def walk(g, bound):
        if isinstance(g, QUANTIFIERS):
            walk(g.body, bound | {g.var})
            return
        for a in term_args(g):
            if isinstance(a, (Var, SetVar)) and a not in bound:
                out.add(a)
        for c in g.children():
            walk(c, bound)

    walk(f, frozenset())
    return frozenset(out)


def subformulas(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        stack.extend(reversed(g.children()))


def pred_names(f: Formula) -> set:
    return {g.name for g in subformulas(f) if isinstance(g, Pred)}


def substitute(f: Formula, mapping: dict) -> Formula:
    """Replace free variables by terms (or set variables by set variables).

    A binder that would capture a substituted variable is renamed first.
    """
    if not mapping:
        return f
    incoming = {r for r in mapping.values() if not isinstance(r, Const)}

    def sub(a):
        r = mapping.get(a, a)
        if isinstance(a, SetVar) != isinstance(r, SetVar):
            raise SortError(f"cannot substitute {r!r} for {a!r}")
        if isinstance(a, Var) and r.sort != a.sort:
            raise SortError(f"cannot substitute {r!r} for {a!r}")
        return r

    def go(g):
        if isinstance(g, Pred):
            return Pred(g.name, tuple(sub(a) for a in g.args)) if g.args else g
        if isinstance(g, Eq):
            return Eq(sub(g.left), sub(g.right))
        if isinstance(g, Member):
            return Member(sub(g.elem), sub(g.set))
        if isinstance(g, (Subset, SetEq, Disjoint)):
            return type(g)(sub(g.left), sub(g.right))
        if isinstance(g, UnionEq):
            return UnionEq(sub(g.left), sub(g.right), sub(g.whole))
        if isinstance(g, IsEmpty):
            return IsEmpty(sub(g.set))
        if isinstance(g, Not):
            return Not(go(g.body))
        if isinstance(g, (And, Or)):
            return type(g)(tuple(go(a) for a in g.args))
        if isinstance(g, (Implies, Iff)):
            return type(g)(go(g.left), go(g.right))
        if isinstance(g, QUANTIFIERS):
            inner = {k: v for k, v in mapping.items() if k != g.var}
            if g.var in incoming:
                taken = {v.name for v in free_vars(g.body)} | {v.name for v in incoming}
                name = g.var.name + "'"
                while name in taken:
                    name += "'"
                nv = SetVar(name) if isinstance(g.var, SetVar) else Var(name, g.var.sort)
                return type(g)(nv, substitute(substitute(g.body, {g.var: nv}), inner))
            if len(inner) != len(mapping):
                return type(g)(g.var, substitute(g.body, inner))
            return type(g)(g.var, go(g.body))
        return g

    return go(f)


class Renamer:
    """Deterministic fresh-name supply."""

    def __init__(self, tag: str = "_"):
        self.tag = tag
        self.count = 0

    def fresh(self, v):
        self.count += 1
        name = f"{v.name.split('~')[0]}~{self.count}"
        return SetVar(name) if isinstance(v, SetVar) else Var(name, v.sort)


def rename_apart(f: Formula, renamer: Renamer | None = None, only_clashes: bool = False) -> Formula:
    """Give every binder a unique name so each variable is bound once.

    With ``only_clashes`` a binder keeps its name unless that name was already
    used (bound earlier or free), which leaves well-formed input untouched.
    """
    renamer = renamer or Renamer()
    used = {v.name for v in free_vars(f)}

    def go(g, env):
        if isinstance(g, QUANTIFIERS):
            if only_clashes and g.var.name not in used:
                nv = g.var
            else:
                nv = renamer.fresh(g.var)
                while nv.name in used:
                    nv = renamer.fresh(g.var)
            used.add(nv.name)
            return type(g)(nv, go(g.body, {**env, g.var: nv}))
        if isinstance(g, ATOMIC):
            return substitute(g, env) if env else g
        if isinstance(g, Not):
            return Not(go(g.body, env))
        if isinstance(g, (And, Or)):
            return type(g)(tuple(go(a, env) for a in g.args))
        return type(g)(go(g.left, env), go(g.right, env))

    return go(f, {})


def size(f: Formula) -> int:
    return sum(1 for _ in subformulas(f))
