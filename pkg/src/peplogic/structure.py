"""Finite first-order structures built from molecular graphs."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .mol import MolecularGraph

CHARGE_PREDICATES = ("Neutral", "Anion", "Cation", "Zwitterion")
BOND_PREDICATES = ("Bond", "DoubleBond", "TripleBond", "AromaticBond")
_EMPTY: frozenset = frozenset()


@dataclass(frozen=True)
class FolStructure:
    """Domain ``0..domain_size-1`` plus predicate extensions.

    ``augmented_sets`` holds computed set-valued extensions (``BuildingBlock``).
    Block ids form a second sort whose size is the number of building blocks;
    the ``InBlock`` binary predicate relates atoms to block ids.
    """

    domain_size: int
    unary: Mapping[str, frozenset] = field(default_factory=dict)
    binary: Mapping[str, frozenset] = field(default_factory=dict)
    nullary: Mapping[str, bool] = field(default_factory=dict)
    augmented_sets: Mapping[str, tuple] = field(default_factory=dict)

    def __post_init__(self):
        n = self.domain_size
        for name, ext in self.unary.items():
            if any(not 0 <= i < n for i in ext):
                raise ValueError(f"unary extension {name} leaves the domain")
        for name, ext in self.binary.items():
            if name == "InBlock":
                if any(not 0 <= i < n for i, _ in ext):
                    raise ValueError("InBlock leaves the domain")
                continue
            if any(not (0 <= i < n and 0 <= j < n) for i, j in ext):
                raise ValueError(f"binary extension {name} leaves the domain")
        for blocks in self.augmented_sets.values():
            for block in blocks:
                if any(not 0 <= i < n for i in block):
                    raise ValueError("augmented set leaves the domain")

    @property
    def blocks(self) -> tuple:
        return self.augmented_sets.get("BuildingBlock", ())

    def sort_size(self, sort: str) -> int:
        if sort == "atom":
            return self.domain_size
        if sort == "block":
            return len(self.blocks)
        raise ValueError(f"unknown sort {sort!r}")

    def unary_ext(self, name: str) -> frozenset:
        return self.unary.get(name, _EMPTY)

    def binary_ext(self, name: str) -> frozenset:
        return self.binary.get(name, _EMPTY)

    def holds(self, name: str, args: tuple) -> bool:
        """Truth of a primitive predicate on domain elements."""
        if not args:
            return bool(self.nullary.get(name, False))
        if len(args) == 1:
            return args[0] in self.unary.get(name, _EMPTY)
        if len(args) == 2:
            return args in self.binary.get(name, _EMPTY)
        raise KeyError(f"no primitive predicate {name}/{len(args)}")

    def with_blocks(self, blocks) -> "FolStructure":
        blocks = tuple(frozenset(b) for b in blocks)
        binary = dict(self.binary)
        binary["InBlock"] = frozenset((i, k) for k, b in enumerate(blocks) for i in b)
        augmented = dict(self.augmented_sets)
        augmented["BuildingBlock"] = blocks
        return FolStructure(self.domain_size, self.unary, binary, self.nullary, augmented)


def charge_class(mol: MolecularGraph) -> str:
    pos = any(a.formal_charge > 0 for a in mol.atoms)
    neg = any(a.formal_charge < 0 for a in mol.atoms)
    net = mol.net_charge
    if not pos and not neg:
        return "Neutral"
    if net < 0:
        return "Anion"
    if net > 0:
        return "Cation"
    return "Zwitterion"


def to_fol_structure(mol: MolecularGraph) -> FolStructure:
    unary: dict[str, set] = {}
    for atom in mol.atoms:
        unary.setdefault(atom.element, set()).add(atom.index)
        if atom.formal_charge > 0:
            unary.setdefault("PosCharge", set()).add(atom.index)
        elif atom.formal_charge < 0:
            unary.setdefault("NegCharge", set()).add(atom.index)
        if atom.aromatic:
            unary.setdefault("Aromatic", set()).add(atom.index)
    binary: dict[str, set] = {"Bond": set()}
    refinement = {"double": "DoubleBond", "triple": "TripleBond", "aromatic": "AromaticBond"}
    for bond in mol.bonds:
        pairs = {(bond.a, bond.b), (bond.b, bond.a)}
        binary["Bond"] |= pairs
        if bond.order in refinement:
            binary.setdefault(refinement[bond.order], set()).update(pairs)
    cls = charge_class(mol)
    nullary = {name: name == cls for name in CHARGE_PREDICATES}
    return FolStructure(
        len(mol.atoms),
        {k: frozenset(v) for k, v in unary.items()},
        {k: frozenset(v) for k, v in binary.items()},
        nullary,
        {},
    )
