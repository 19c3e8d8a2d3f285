"""Building blocks: carbon-connected fragments plus their bonded heteroatoms."""

from __future__ import annotations

from .structure import FolStructure

DEFAULT_FRAGMENT_LIMIT = 10_000


class FragmentLimitExceeded(RuntimeError):
    def __init__(self, count: int, limit: int):
        super().__init__(f"{count} carbon-connected fragments exceed the limit of {limit}")
        self.count = count
        self.limit = limit

    def __reduce__(self):
        return type(self), (self.count, self.limit)


def carbon_components(n: int, is_carbon, neighbors) -> list[list[int]]:
    """Connected components of the carbon-only subgraph, ordered by lowest index."""
    seen = [False] * n
    comps = []
    for start in range(n):
        if seen[start] or not is_carbon(start):
            continue
        seen[start] = True
        stack, comp = [start], []
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in neighbors(i):
                if not seen[j] and is_carbon(j):
                    seen[j] = True
                    stack.append(j)
        comps.append(sorted(comp))
    return comps


def building_blocks(n: int, is_carbon, neighbors, fragment_limit: int = DEFAULT_FRAGMENT_LIMIT) -> list[frozenset]:
    comps = carbon_components(n, is_carbon, neighbors)
    if fragment_limit is not None and len(comps) > fragment_limit:
        raise FragmentLimitExceeded(len(comps), fragment_limit)
    blocks = []
    for comp in comps:
        members = set(comp)
        for i in comp:
            members.update(j for j in neighbors(i) if not is_carbon(j))
        blocks.append(frozenset(members))
    return blocks


def compute_building_blocks(structure: FolStructure, fragment_limit: int = DEFAULT_FRAGMENT_LIMIT) -> FolStructure:
    """Return ``structure`` augmented with BuildingBlock and InBlock."""
    carbons = structure.unary_ext("C")
    adj: dict[int, list[int]] = {}
    for i, j in structure.binary_ext("Bond"):
        adj.setdefault(i, []).append(j)
    blocks = building_blocks(
        structure.domain_size,
        carbons.__contains__,
        lambda i: adj.get(i, ()),
        fragment_limit,
    )
    return structure.with_blocks(blocks)
