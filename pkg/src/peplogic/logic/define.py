"""Named predicate definitions and their capture-avoiding expansion."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .ast import (
    ATOMIC,
    QUANTIFIERS,
    And,
    Formula,
    Iff,
    Implies,
    Not,
    Or,
    Pred,
    Renamer,
    SortError,
    free_vars,
    rename_apart,
    substitute,
)

MAX_EXPANSION_DEPTH = 64


class DefinitionError(ValueError):
    pass


class ExpansionDepthError(DefinitionError):
    pass


@dataclass(frozen=True)
class Definition:
    name: str
    params: tuple
    body: Formula
    fixed_size: Optional[int] = None

    @property
    def sorts(self) -> tuple:
        return tuple(p.sort for p in self.params)


class Theory:
    """A registry of definitions; insertion order is kept for emitters."""

    def __init__(self, definitions: Iterable[Definition] = ()):
        self._defs: dict[str, Definition] = {}
        for d in definitions:
            self.add(d)

    def define(self, name: str, params, body: Formula, fixed_size: Optional[int] = None) -> Definition:
        return self.add(Definition(name, tuple(params), body, fixed_size))

    def add(self, d: Definition) -> Definition:
        if d.name in self._defs:
            raise DefinitionError(f"{d.name} is already defined")
        if len(set(d.params)) != len(d.params):
            raise DefinitionError(f"{d.name} has repeated parameters")
        leak = free_vars(d.body) - set(d.params)
        if leak:
            names = ", ".join(sorted(v.name for v in leak))
            raise DefinitionError(f"free variable(s) {names} in body of {d.name}")
        self._defs[d.name] = d
        return d

    def __contains__(self, name: str) -> bool:
        return name in self._defs

    def __getitem__(self, name: str) -> Definition:
        return self._defs[name]

    def __iter__(self):
        return iter(self._defs.values())

    def __len__(self):
        return len(self._defs)

    def names(self) -> list[str]:
        return list(self._defs)

    def dependencies(self, name: str) -> list[str]:
        """Defined names reachable from ``name``, callees before callers."""
        seen: list[str] = []

        def visit(n, depth):
            if depth > MAX_EXPANSION_DEPTH:
                raise ExpansionDepthError(f"definition cycle through {n}")
            for g in _preds(self._defs[n].body):
                if g in self._defs and g not in seen:
                    visit(g, depth + 1)
            if n not in seen:
                seen.append(n)

        visit(name, 0)
        return seen

    def expand(self, f: Formula, keep: frozenset = frozenset(), renamer: Renamer | None = None) -> Formula:
        """Inline every defined predicate except the names in ``keep``."""
        renamer = renamer or Renamer()

        def go(g, depth):
            if isinstance(g, Pred):
                d = self._defs.get(g.name)
                if d is None or g.name in keep:
                    return g
                if depth >= MAX_EXPANSION_DEPTH:
                    raise ExpansionDepthError(f"expansion of {g.name} exceeds depth {MAX_EXPANSION_DEPTH}")
                if len(g.args) != len(d.params):
                    raise SortError(f"{g.name} takes {len(d.params)} argument(s), got {len(g.args)}")
                for p, a in zip(d.params, g.args):
                    if p.sort != a.sort:
                        raise SortError(f"{g.name}: parameter {p.name} has sort {p.sort}, got {a}")
                body = substitute(rename_apart(d.body, renamer), dict(zip(d.params, g.args)))
                return go(body, depth + 1)
            if isinstance(g, ATOMIC):
                return g
            if isinstance(g, Not):
                return Not(go(g.body, depth))
            if isinstance(g, (And, Or)):
                return type(g)(tuple(go(a, depth) for a in g.args))
            if isinstance(g, (Implies, Iff)):
                return type(g)(go(g.left, depth), go(g.right, depth))
            if isinstance(g, QUANTIFIERS):
                return type(g)(g.var, go(g.body, depth))
            raise TypeError(f"not a formula: {g!r}")

        return go(f, 0)


def _preds(f: Formula):
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Pred):
            yield g.name
        stack.extend(g.children())
