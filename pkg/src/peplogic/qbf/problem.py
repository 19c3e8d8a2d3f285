"""Quantified boolean problems and their QDIMACS text form."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .circuit import Circuit


@dataclass
class QbfProblem:
    """A prenex QBF.

    ``prefix`` is a list of ``(q, [var ids])`` blocks with ``q`` in ``"ea"``.
    Before Tseitin conversion the matrix is ``circuit``/``root``; afterwards
    ``cnf`` holds integer clauses over variables ``1..num_vars``.
    """

    prefix: list
    circuit: Optional[Circuit] = None
    root: Optional[int] = None
    cnf: Optional[list] = None
    num_vars: int = 0
    var_map: dict = field(default_factory=dict)
    aux_count: int = 0

    @property
    def is_cnf(self) -> bool:
        return self.cnf is not None

    @property
    def stats(self) -> dict:
        return {
            "variables": self.num_vars,
            "clauses": len(self.cnf) if self.cnf is not None else None,
            "auxiliaries": self.aux_count,
            "quantified": sum(len(vs) for _, vs in self.prefix) - self.aux_count,
        }


def normalize_prefix(blocks) -> list:
    """Drop empty blocks and merge neighbours with the same quantifier."""
    out: list = []
    for q, vs in blocks:
        if not vs:
            continue
        if out and out[-1][0] == q:
            out[-1] = (q, out[-1][1] + list(vs))
        else:
            out.append((q, list(vs)))
    return out


def emit_qdimacs(q: QbfProblem) -> bytes:
    if q.cnf is None:
        raise ValueError("QDIMACS needs a CNF problem; run tseitin first")
    lines = [f"p cnf {q.num_vars} {len(q.cnf)}"]
    for kind, vs in normalize_prefix(q.prefix):
        lines.append(f"{kind} " + " ".join(map(str, vs)) + " 0")
    for clause in q.cnf:
        lines.append(" ".join(map(str, clause)) + (" 0" if clause else "0"))
    return ("\n".join(lines) + "\n").encode("ascii")


class QdimacsError(ValueError):
    pass


def parse_qdimacs(data) -> QbfProblem:
    """Strict reader: header first, prefix before clauses, 0-terminated lines."""
    text = data.decode("ascii") if isinstance(data, (bytes, bytearray)) else data
    lines = [l for l in text.splitlines() if l.strip() and not l.startswith("c")]
    if not lines or not lines[0].startswith("p cnf "):
        raise QdimacsError("missing 'p cnf' header")
    parts = lines[0].split()
    if len(parts) != 4:
        raise QdimacsError(f"malformed header {lines[0]!r}")
    try:
        nv, nc = int(parts[2]), int(parts[3])
    except ValueError:
        raise QdimacsError(f"malformed header {lines[0]!r}") from None
    prefix, clauses, bound = [], [], set()
    in_prefix = True
    for n, line in enumerate(lines[1:], start=2):
        tok = line.split()
        if tok[-1] != "0":
            raise QdimacsError(f"line {n} is not 0-terminated")
        if tok[0] in ("e", "a"):
            if not in_prefix:
                raise QdimacsError(f"quantifier line {n} after clauses")
            vs = [int(t) for t in tok[1:-1]]
            if not vs or any(not 1 <= v <= nv or v in bound for v in vs):
                raise QdimacsError(f"bad quantifier line {n}")
            if prefix and prefix[-1][0] == tok[0]:
                raise QdimacsError(f"line {n} repeats the previous quantifier")
            bound.update(vs)
            prefix.append((tok[0], vs))
            continue
        in_prefix = False
        try:
            lits = [int(t) for t in tok[:-1]]
        except ValueError:
            raise QdimacsError(f"non-integer literal on line {n}") from None
        if any(l == 0 or abs(l) > nv for l in lits):
            raise QdimacsError(f"literal out of range on line {n}")
        clauses.append(lits)
    if len(clauses) != nc:
        raise QdimacsError(f"header announces {nc} clauses, found {len(clauses)}")
    return QbfProblem(prefix, cnf=clauses, num_vars=nv)
