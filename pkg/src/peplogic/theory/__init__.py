"""The peptide class axioms: loading, FOL derivation and class labels."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Optional, Union

from ..logic.ast import (
    ATOMIC,
    TRUE,
    And,
    Eq,
    Exists,
    Forall,
    Formula,
    Iff,
    Implies,
    Member,
    Not,
    Or,
    Pred,
    SetEq,
    SetVar,
    Var,
)
from ..logic.define import Definition, Theory
from ..logic.sexpr import SexprError, parse_binders, read_lists, to_formula

CLASS_LABELS = (
    "peptide",
    "dipeptide",
    "tripeptide",
    "tetrapeptide",
    "pentapeptide",
    "oligopeptide",
    "polypeptide",
    "peptide_anion",
    "peptide_cation",
    "peptide_zwitterion",
    "dipeptide_zwitterion",
    "tripeptide_zwitterion",
    "diketopiperazines_2_5",
    "emericellamide",
)

ALGORITHMIC = "primitive/algorithmic"
BLOCK_GUARDS = frozenset({"BuildingBlock", "AAR"})
MSOL_ONLY = frozenset({"CarbonConnected"})


class TranslationError(ValueError):
    pass


@dataclass(frozen=True)
class TheoryEntry:
    name: str
    params: tuple
    msol_body: Formula
    fol_body: Union[Formula, str, None]
    fixed_size: Optional[int] = None

    @property
    def sorts(self) -> tuple:
        return tuple(p.sort for p in self.params)


@dataclass(frozen=True)
class Catalogue:
    version: int
    entries: dict
    classes: dict  # label -> nullary definition name
    msol: Theory
    fol: Theory

    def __iter__(self):
        return iter(self.entries.values())

    def __getitem__(self, name: str) -> TheoryEntry:
        return self.entries[name]

    def class_name(self, label: str) -> str:
        try:
            return self.classes[label]
        except KeyError:
            raise KeyError(f"unknown class label {label!r}; expected one of {', '.join(CLASS_LABELS)}") from None


def _block(v):
    return Var(v.name, "block") if isinstance(v, SetVar) else v


def _conjuncts(f: Formula):
    while isinstance(f, Exists):
        f = f.body
    if isinstance(f, And):
        for a in f.args:
            yield from _conjuncts(a)
    else:
        yield f


def _guarded(x: SetVar, body: Formula) -> bool:
    for c in _conjuncts(body):
        if isinstance(c, Pred) and c.name in BLOCK_GUARDS and x in c.args:
            return True
        if isinstance(c, Or) and c.args and all(
            isinstance(a, SetEq) and x in (a.left, a.right) for a in c.args
        ):
            return True
        if isinstance(c, SetEq) and x in (c.left, c.right):
            return True
    return False


def to_fol(f: Formula) -> Formula:
    """Rewrite block-guarded set variables as block-sorted first-order ones."""
    if isinstance(f, Member):
        if not isinstance(f.set, SetVar):
            raise TranslationError(f"unexpected membership {f}")
        return Pred("InBlock", (f.elem, _block(f.set)))
    if isinstance(f, SetEq):
        return Eq(_block(f.left), _block(f.right))
    if isinstance(f, Pred):
        if f.name in MSOL_ONLY:
            raise TranslationError(f"{f.name} has no first-order form")
        return Pred(f.name, tuple(_block(a) for a in f.args))
    if isinstance(f, ATOMIC):
        if any(isinstance(getattr(f, k, None), SetVar) for k in ("set", "left", "right", "whole")):
            raise TranslationError(f"set relation {f} has no first-order form")
        return f
    if isinstance(f, Not):
        return Not(to_fol(f.body))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(to_fol(a) for a in f.args))
    if isinstance(f, (Implies, Iff)):
        return type(f)(to_fol(f.left), to_fol(f.right))
    if isinstance(f, (Exists, Forall)):
        if isinstance(f.var, SetVar):
            if isinstance(f, Forall) or not _guarded(f.var, f.body):
                raise TranslationError(f"set variable {f.var} is not guarded by a building block")
        return type(f)(_block(f.var), to_fol(f.body))
    raise TypeError(f"not a formula: {f!r}")


def parse_theory(text: str) -> Catalogue:
    msol = Theory()
    fixed: dict[str, int] = {}
    classes: dict[str, str] = {}
    version = 0
    for item in read_lists(text):
        if not isinstance(item, list) or not item:
            raise SexprError(f"unexpected top-level item {item!r}")
        head = item[0]
        if head == "version":
            version = int(item[1])
        elif head == "define":
            if len(item) != 4:
                raise SexprError(f"malformed define {item[:2]!r}")
            params = parse_binders(item[2])
            body = to_formula(item[3], {p.name: p for p in params})
            msol.define(item[1], params, body)
        elif head == "fixed-size":
            fixed[item[1]] = int(item[2])
        elif head == "class":
            classes[item[1]] = item[2]
        else:
            raise SexprError(f"unknown top-level form {head!r}")
    if set(classes) != set(CLASS_LABELS):
        missing = set(CLASS_LABELS) ^ set(classes)
        raise SexprError(f"class table mismatch: {sorted(missing)}")
    for name in classes.values():
        if name not in msol or msol[name].params:
            raise SexprError(f"class sentence {name} must be a nullary definition")

    fol = Theory()
    entries = {}
    for d in msol:
        if d.name in MSOL_ONLY:
            fol_body = None
        elif d.name == "BuildingBlock":
            fol_body = ALGORITHMIC
            fol.add(Definition(d.name, tuple(_block(p) for p in d.params), TRUE))
        else:
            fol_body = to_fol(d.body)
            fol.add(Definition(d.name, tuple(_block(p) for p in d.params), fol_body, fixed.get(d.name)))
        entries[d.name] = TheoryEntry(d.name, d.params, d.body, fol_body, fixed.get(d.name))
    msol = Theory(Definition(d.name, d.params, d.body, fixed.get(d.name)) for d in msol)
    return Catalogue(version, entries, classes, msol, fol)


def theory_text() -> str:
    return resources.files(__package__).joinpath("theory.sexp").read_text(encoding="utf-8")


@lru_cache(maxsize=1)
def theory() -> Catalogue:
    return parse_theory(theory_text())
