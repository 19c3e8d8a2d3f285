"""Tseitin conversion of a circuit matrix into prenex CNF."""

from __future__ import annotations

from .circuit import FALSE, TRUE
from .problem import QbfProblem, normalize_prefix


def tseitin(q: QbfProblem) -> QbfProblem:
    """Equisatisfiable CNF; auxiliaries join the innermost existential block.

    Quantified variables are renumbered ``1..P`` in prefix order and the
    auxiliaries follow in order of first use. A top-level conjunction becomes
    one clause per conjunct and a top-level disjunction a single clause, so an
    input already in CNF needs no auxiliaries.
    """
    if q.cnf is not None:
        return q
    c, root = q.circuit, q.root
    prefix = normalize_prefix(q.prefix)
    number: dict[int, int] = {}
    for _, vs in prefix:
        for v in vs:
            if v in number:
                raise ValueError(f"variable {v} is quantified twice")
            number[v] = len(number) + 1
    quantified = len(number)
    clauses: list[list[int]] = []
    aux: dict[int, int] = {}
    aux_order: list[int] = []

    def lit(l: int) -> int:
        node = abs(l)
        if node in c.gates:
            t = aux.get(node)
            if t is None:
                t = quantified + len(aux) + 1
                aux[node] = t
                aux_order.append(node)
            return t if l > 0 else -t
        if node not in number:
            raise ValueError(f"input {node} is not quantified in the prefix")
        return number[node] if l > 0 else -number[node]

    def clause_of(l: int):
        """Literals of a disjunction, or None when ``l`` is a conjunction."""
        if l < 0 and -l in c.gates:
            return [-x for x in c.gates[-l]]
        if l > 0 and l in c.gates:
            return None
        return [l]

    if root == TRUE:
        pass
    elif root == FALSE:
        clauses.append([])
    else:
        stack = [root]
        top = []
        while stack:
            l = stack.pop()
            if l > 0 and l in c.gates:
                stack.extend(reversed(c.gates[l]))
            else:
                top.append(l)
        for l in top:
            parts = clause_of(l)
            clauses.append([lit(x) for x in parts])
        done = 0
        while done < len(aux_order):
            g = aux_order[done]
            done += 1
            t = aux[g]
            kids = [lit(x) for x in c.gates[g]]
            for k in kids:
                clauses.append([-t, k])
            clauses.append([t] + [-k for k in kids])
    aux_vars = [quantified + i + 1 for i in range(len(aux))]
    new_prefix = [(kind, [number[v] for v in vs]) for kind, vs in prefix]
    if aux_vars:
        if new_prefix and new_prefix[-1][0] == "e":
            new_prefix[-1] = ("e", new_prefix[-1][1] + aux_vars)
        else:
            new_prefix.append(("e", aux_vars))
    var_map = {}
    for key, v in q.var_map.items():
        if v in number:
            var_map[key] = number[v]
    for g, t in aux.items():
        var_map[("aux", g)] = t
    return QbfProblem(new_prefix, cnf=clauses, num_vars=quantified + len(aux),
                      var_map=var_map, aux_count=len(aux))
