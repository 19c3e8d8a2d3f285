"""S-expression text form for formulas.

Grammar::

    formula  := true | false
              | (not F) | (and F...) | (or F...) | (implies F F) | (iff F F)
              | (exists (BINDER...) F) | (forall (BINDER...) F)
              | (= T T) | (in T S) | (subset S S) | (seteq S S)
              | (disjoint S S) | (union S S S) | (empty S)
              | (NAME ARG...)
    BINDER   := (name atom) | (name block) | (name set)
    T        := variable name | #N (atom constant) | #bN (block constant)

``(union A B X)`` reads A ∪ B = X. Comments run from ``;`` to end of line.
"""

from __future__ import annotations

import re

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
    Subset,
    Top,
    UnionEq,
    Var,
)

KEYWORDS = frozenset(
    "not and or implies iff exists forall = in subset seteq disjoint union empty true false".split()
)
_TOKEN = re.compile(r"[()]|[^\s()]+")
_COMMENT = re.compile(r";[^\n]*")


class SexprError(ValueError):
    pass


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(_COMMENT.sub(" ", text))


def read_lists(text: str) -> list:
    """Parse text into nested Python lists of string atoms."""
    tokens = tokenize(text)
    out, stack = [], []
    for tok in tokens:
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if not stack:
                raise SexprError("unbalanced ')'")
            item = stack.pop()
            (stack[-1] if stack else out).append(item)
        else:
            (stack[-1] if stack else out).append(tok)
    if stack:
        raise SexprError("unbalanced '('")
    return out


def parse_binders(spec) -> list:
    if not isinstance(spec, list):
        raise SexprError(f"expected binder list, got {spec!r}")
    result = []
    for b in spec:
        if not (isinstance(b, list) and len(b) == 2 and all(isinstance(x, str) for x in b)):
            raise SexprError(f"malformed binder {b!r}")
        name, sort = b
        if sort == "set":
            result.append(SetVar(name))
        elif sort in ("atom", "block"):
            result.append(Var(name, sort))
        else:
            raise SexprError(f"unknown sort {sort!r}")
    return result


def _arg(tok, scope):
    if isinstance(tok, list):
        raise SexprError(f"expected a term, got {tok!r}")
    if tok.startswith("#b"):
        return Const(int(tok[2:]), "block")
    if tok.startswith("#"):
        return Const(int(tok[1:]), "atom")
    if tok not in scope:
        raise SexprError(f"unbound variable {tok!r}")
    return scope[tok]


def to_formula(sx, scope: dict | None = None) -> Formula:
    scope = dict(scope or {})
    if isinstance(sx, str):
        if sx == "true":
            return TRUE
        if sx == "false":
            return FALSE
        raise SexprError(f"bare symbol {sx!r} is not a formula")
    if not sx:
        raise SexprError("empty list")
    head, rest = sx[0], sx[1:]
    if isinstance(head, list):
        raise SexprError(f"list head must be a symbol: {sx!r}")
    arg = lambda t: _arg(t, scope)
    sub = lambda t: to_formula(t, scope)
    if head == "not":
        _arity(sx, 1)
        return Not(sub(rest[0]))
    if head in ("and", "or"):
        return (And if head == "and" else Or)(tuple(sub(r) for r in rest))
    if head in ("implies", "iff"):
        _arity(sx, 2)
        return (Implies if head == "implies" else Iff)(sub(rest[0]), sub(rest[1]))
    if head in ("exists", "forall"):
        _arity(sx, 2)
        binders = parse_binders(rest[0])
        inner = dict(scope)
        for v in binders:
            inner[v.name] = v
        body = to_formula(rest[1], inner)
        q = Exists if head == "exists" else Forall
        for v in reversed(binders):
            body = q(v, body)
        return body
    if head == "=":
        _arity(sx, 2)
        return Eq(arg(rest[0]), arg(rest[1]))
    if head == "in":
        _arity(sx, 2)
        return Member(arg(rest[0]), arg(rest[1]))
    if head in ("subset", "seteq", "disjoint"):
        _arity(sx, 2)
        cls = {"subset": Subset, "seteq": SetEq, "disjoint": Disjoint}[head]
        return cls(arg(rest[0]), arg(rest[1]))
    if head == "union":
        _arity(sx, 3)
        return UnionEq(arg(rest[0]), arg(rest[1]), arg(rest[2]))
    if head == "empty":
        _arity(sx, 1)
        return IsEmpty(arg(rest[0]))
    if head in KEYWORDS:
        raise SexprError(f"keyword {head!r} used as a predicate")
    return Pred(head, tuple(arg(r) for r in rest))


def _arity(sx, n):
    if len(sx) != n + 1:
        raise SexprError(f"{sx[0]} takes {n} argument(s): {sx!r}")


def loads(text: str, scope: dict | None = None) -> Formula:
    items = read_lists(text)
    if len(items) != 1:
        raise SexprError(f"expected one formula, found {len(items)}")
    return to_formula(items[0], scope)


def _binder(v) -> str:
    return f"({v.name} {v.sort})"


def dumps(f: Formula) -> str:
    if isinstance(f, Top):
        return "true"
    if isinstance(f, Bottom):
        return "false"
    if isinstance(f, Pred):
        return "(" + " ".join([f.name, *map(str, f.args)]) + ")"
    if isinstance(f, Eq):
        return f"(= {f.left} {f.right})"
    if isinstance(f, Member):
        return f"(in {f.elem} {f.set})"
    if isinstance(f, Subset):
        return f"(subset {f.left} {f.right})"
    if isinstance(f, SetEq):
        return f"(seteq {f.left} {f.right})"
    if isinstance(f, Disjoint):
        return f"(disjoint {f.left} {f.right})"
    if isinstance(f, UnionEq):
        return f"(union {f.left} {f.right} {f.whole})"
    if isinstance(f, IsEmpty):
        return f"(empty {f.set})"
    if isinstance(f, Not):
        return f"(not {dumps(f.body)})"
    if isinstance(f, (And, Or)):
        head = "and" if isinstance(f, And) else "or"
        return "(" + " ".join([head, *map(dumps, f.args)]) + ")"
    if isinstance(f, (Implies, Iff)):
        head = "implies" if isinstance(f, Implies) else "iff"
        return f"({head} {dumps(f.left)} {dumps(f.right)})"
    if isinstance(f, (Exists, Forall)):
        q = type(f)
        binders = []
        g = f
        while isinstance(g, q):
            binders.append(g.var)
            g = g.body
        head = "exists" if q is Exists else "forall"
        return f"({head} (" + " ".join(map(_binder, binders)) + f") {dumps(g)})"
    raise TypeError(f"not a formula: {f!r}")
