"""Hash-consed and-inverter circuits with n-ary AND gates.

Nodes are positive integers; a literal is a signed node id. Node 1 is the
constant true, so ``TRUE == 1`` and ``FALSE == -1``.
"""

from __future__ import annotations

from typing import Iterable

TRUE = 1
FALSE = -1


class Circuit:
    def __init__(self):
        self.next_id = 2
        self.inputs: list[int] = []
        self.gates: dict[int, tuple] = {}
        self._cons: dict[tuple, int] = {}
        self.literal_count = 0

    def new_input(self) -> int:
        i = self.next_id
        self.next_id += 1
        self.inputs.append(i)
        return i

    def is_gate(self, lit: int) -> bool:
        return abs(lit) in self.gates

    def AND(self, lits: Iterable[int]) -> int:
        seen = set()
        for l in lits:
            if l == TRUE:
                continue
            if l == FALSE or -l in seen:
                return FALSE
            seen.add(l)
        if not seen:
            return TRUE
        if len(seen) == 1:
            return next(iter(seen))
        key = tuple(sorted(seen))
        g = self._cons.get(key)
        if g is None:
            g = self.next_id
            self.next_id += 1
            self.gates[g] = key
            self._cons[key] = g
            self.literal_count += len(key)
        return g

    def OR(self, lits: Iterable[int]) -> int:
        return -self.AND(-l for l in lits)

    def IFF(self, a: int, b: int) -> int:
        if a == b:
            return TRUE
        if a == -b:
            return FALSE
        return self.OR((self.AND((a, b)), self.AND((-a, -b))))

    def IMPLIES(self, a: int, b: int) -> int:
        return self.OR((-a, b))

    def cone(self, root: int) -> list[int]:
        """Gate ids reachable from ``root``, children before parents."""
        order, seen = [], set()
        stack = [(abs(root), False)]
        while stack:
            node, done = stack.pop()
            if node not in self.gates:
                continue
            if done:
                order.append(node)
                continue
            if node in seen:
                continue
            seen.add(node)
            stack.append((node, True))
            for c in self.gates[node]:
                if abs(c) in self.gates and abs(c) not in seen:
                    stack.append((abs(c), False))
        return order

    def support(self, root: int) -> set[int]:
        out = set()
        for g in self.cone(root):
            for c in self.gates[g]:
                if abs(c) not in self.gates and abs(c) != TRUE:
                    out.add(abs(c))
        if abs(root) not in self.gates and abs(root) != TRUE:
            out.add(abs(root))
        return out

    def evaluate(self, root: int, assignment: dict) -> bool:
        """Value of ``root`` under a total assignment of its support."""
        values = {TRUE: True}
        for g in self.cone(root):
            values[g] = all(values[abs(c)] == (c > 0) if abs(c) in values else assignment[abs(c)] == (c > 0)
                            for c in self.gates[g])
        node = abs(root)
        v = values[node] if node in values else assignment[node]
        return v if root > 0 else not v

    def substitute(self, root: int, mapping: dict) -> int:
        """Replace inputs by literals (or constants) and rebuild, hash-consed."""
        memo: dict[int, int] = {}

        def lit(l):
            node = abs(l)
            if node in memo:
                r = memo[node]
            elif node in self.gates:
                r = memo[node]
            else:
                r = mapping.get(node, node)
            return r if l > 0 else -r

        for g in self.cone(root):
            memo[g] = self.AND(lit(c) for c in self.gates[g])
        return lit(root)
