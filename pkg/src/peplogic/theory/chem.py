"""Direct computation of the theory's chemical patterns on one molecule.

These functions mirror the definitions in ``theory.sexp`` with plain graph
code. They back the algorithmic classifier and the residue reports.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Union

import networkx as nx

from ..blocks import DEFAULT_FRAGMENT_LIMIT, building_blocks
from ..mol import MolecularGraph, parse_smiles
from ..structure import FolStructure, charge_class

_STRONG = ("double", "triple")


@dataclass
class MolView:
    """Flat per-atom arrays shared by the pattern code."""

    elem: list
    nbrs: list
    order: dict
    negative: set
    aromatic: set
    charge_class: str

    @property
    def n(self) -> int:
        return len(self.elem)

    def bond(self, i: int, j: int):
        return self.order.get((i, j) if i < j else (j, i))

    @classmethod
    def from_graph(cls, mol: MolecularGraph) -> "MolView":
        return cls(
            [a.element for a in mol.atoms],
            [mol.neighbors(i) for i in range(len(mol.atoms))],
            {b.endpoints: b.order for b in mol.bonds},
            {a.index for a in mol.atoms if a.formal_charge < 0},
            {a.index for a in mol.atoms if a.aromatic},
            charge_class(mol),
        )

    @classmethod
    def from_structure(cls, s: FolStructure) -> "MolView":
        n = s.domain_size
        elem = [""] * n
        for name, ext in s.unary.items():
            if name not in ("PosCharge", "NegCharge", "Aromatic"):
                for i in ext:
                    elem[i] = name
        nbrs = [[] for _ in range(n)]
        order = {}
        for i, j in s.binary_ext("Bond"):
            nbrs[i].append(j)
            if i < j:
                order[(i, j)] = "single"
        for name, kind in (("DoubleBond", "double"), ("TripleBond", "triple"), ("AromaticBond", "aromatic")):
            for i, j in s.binary_ext(name):
                if i < j:
                    order[(i, j)] = kind
        cls_name = next((k for k in ("Neutral", "Anion", "Cation", "Zwitterion") if s.nullary.get(k)), "Neutral")
        return cls(
            elem,
            [tuple(sorted(x)) for x in nbrs],
            order,
            set(s.unary_ext("NegCharge")),
            set(s.unary_ext("Aromatic")),
            cls_name,
        )


def as_view(obj: Union[MolecularGraph, FolStructure, MolView]) -> MolView:
    if isinstance(obj, MolView):
        return obj
    if isinstance(obj, MolecularGraph):
        return MolView.from_graph(obj)
    return MolView.from_structure(obj)


def amino_residues(v: MolView) -> list[int]:
    out = []
    for a, e in enumerate(v.elem):
        if e != "N" or a in v.negative or a in v.aromatic:
            continue
        if any(v.bond(a, z) in _STRONG for z in v.nbrs[a]):
            continue
        if any(v.elem[y] == "C" for y in v.nbrs[a]):
            out.append(a)
    return out


def _carbonyls(v: MolView):
    for c1, e in enumerate(v.elem):
        if e != "C":
            continue
        for c2 in v.nbrs[c1]:
            if v.elem[c2] == "O" and v.bond(c1, c2) == "double":
                yield c1, c2


def carboxy_residues(v: MolView) -> list[tuple]:
    out = []
    for c1, c2 in _carbonyls(v):
        for c3 in v.nbrs[c1]:
            if v.elem[c3] in ("O", "N") and v.bond(c1, c3) not in _STRONG:
                out.append((c1, c2, c3))
    return out


def amide_bonds(v: MolView) -> list[tuple]:
    out = []
    for b1, b2 in _carbonyls(v):
        for b3 in v.nbrs[b1]:
            if v.elem[b3] == "N" and v.bond(b1, b3) not in _STRONG:
                out.append((b1, b2, b3))
    return out


def esters(v: MolView) -> list[tuple]:
    out = []
    for e1, e2 in _carbonyls(v):
        for e3 in v.nbrs[e1]:
            if v.elem[e3] != "O" or v.bond(e1, e3) == "double":
                continue
            for e4 in v.nbrs[e3]:
                if e4 != e1 and v.elem[e4] == "C":
                    out.append((e1, e2, e3, e4))
    return out


def chemical_predicates(structure) -> dict:
    """Ground extensions of the atom-level functional-group predicates."""
    v = as_view(structure)
    return {
        "AminoResidue": {(a,) for a in amino_residues(v)},
        "CarboxyResidue": set(carboxy_residues(v)),
        "AmideBond": set(amide_bonds(v)),
        "Ester": set(esters(v)),
    }


def blocks_of(v: MolView, fragment_limit: int = DEFAULT_FRAGMENT_LIMIT) -> list[frozenset]:
    return building_blocks(v.n, lambda i: v.elem[i] == "C", lambda i: v.nbrs[i], fragment_limit)


@dataclass
class ResidueAnalysis:
    blocks: list
    aar: list  # block ids that are amino acid residues
    witnesses: dict  # block id -> (a, c1, c2, c3)
    links: set  # directed (k, l): carbonyl carbon in k, amide N in l
    components: list  # AAR block ids grouped by amide connectivity
    amide: list
    ester: list

    @property
    def residue_count(self) -> int:
        return max((len(c) for c in self.components), default=0)


def analyse(obj, fragment_limit: int = DEFAULT_FRAGMENT_LIMIT) -> ResidueAnalysis:
    v = as_view(obj)
    blocks = blocks_of(v, fragment_limit)
    membership: dict[int, list[int]] = {}
    for k, b in enumerate(blocks):
        for i in b:
            membership.setdefault(i, []).append(k)
    amino = amino_residues(v)
    carboxy = carboxy_residues(v)
    witnesses = {}
    for k, b in enumerate(blocks):
        for a in amino:
            if a not in b:
                continue
            hit = next((t for t in carboxy if t[0] in b and t[1] in b and t[2] in b and t[2] != a
                        and t[0] not in v.nbrs[a]), None)
            if hit:
                witnesses[k] = (a, *hit)
                break
    aar = sorted(witnesses)
    amide = amide_bonds(v)
    links = set()
    for b1, _, b3 in amide:
        for k in membership.get(b1, ()):
            for l in membership.get(b3, ()):
                if k != l:
                    links.add((k, l))
    graph = nx.Graph()
    graph.add_nodes_from(aar)
    graph.add_edges_from((k, l) for k, l in links if k in witnesses and l in witnesses)
    components = sorted((sorted(c) for c in nx.connected_components(graph)), key=lambda c: c[0])
    return ResidueAnalysis(blocks, aar, witnesses, links, components, amide, esters(v))


def count_residues(structure, fragment_limit: int = DEFAULT_FRAGMENT_LIMIT) -> int:
    """Size of the largest amide-connected set of pairwise disjoint residues.

    Residue witnesses are whole building blocks and distinct blocks never share
    a carbon, so disjoint witness sets are sets of distinct blocks and the
    maximum is the largest connected component of the residue link graph.
    """
    return analyse(structure, fragment_limit).residue_count


def has_dkp_ring(v: MolView) -> bool:
    """Six-membered N1-C2(=O)-C3-N4-C5(=O)-C6 ring."""
    elem, nbrs = v.elem, v.nbrs
    carbonyl_o = _carbonyl_pairs(v)
    for n1, e in enumerate(elem):
        if e != "N":
            continue
        for c2 in nbrs[n1]:
            if elem[c2] != "C" or c2 not in carbonyl_o:
                continue
            for c3 in nbrs[c2]:
                if elem[c3] != "C" or c3 == c2:
                    continue
                for n4 in nbrs[c3]:
                    if elem[n4] != "N" or n4 == n1:
                        continue
                    for c5 in nbrs[n4]:
                        if elem[c5] != "C" or c5 in (c2, c3) or c5 not in carbonyl_o:
                            continue
                        if not any(o2 != o5 for o2 in carbonyl_o[c2] for o5 in carbonyl_o[c5]):
                            continue
                        for c6 in nbrs[c5]:
                            if elem[c6] == "C" and c6 not in (c2, c3, c5) and n1 in nbrs[c6]:
                                return True
    return False


def _carbonyl_pairs(v: MolView) -> dict:
    out: dict = {}
    for c1, c2 in _carbonyls(v):
        out.setdefault(c1, []).append(c2)
    return out


def has_emericellamide_scaffold(v: MolView, ra: ResidueAnalysis) -> bool:
    aar = set(ra.aar)
    membership: dict[int, list[int]] = {}
    for k, b in enumerate(ra.blocks):
        for i in b:
            membership.setdefault(i, []).append(k)
    for e1, _, _, e4 in ra.ester:
        for x in membership.get(e1, ()):
            if x not in aar:
                continue
            for y in membership.get(e4, ()):
                if y == x:
                    continue
                if any(k == y and l in aar and l != y for k, l in ra.links):
                    return True
    return False


# ---- proteinogenic residue identification ----

def _side_chain_graph(v: MolView, block: frozenset, a: int, c1: int, ca: int):
    side = set()
    stack = [x for x in v.nbrs[ca] if x not in (a, c1) and x in block]
    while stack:
        i = stack.pop()
        if i in side:
            continue
        side.add(i)
        stack.extend(j for j in v.nbrs[i] if j in block and j not in side and j not in (a, c1, ca))
    nodes = side | {ca, a}
    g = nx.Graph()
    for i in nodes:
        if i == ca:
            label = "CA"
        elif i == a:
            label = "NA"
        else:
            label = f"{v.elem[i]}{len(v.nbrs[i])}"
        g.add_node(i, label=label)
    for i in nodes:
        for j in v.nbrs[i]:
            if j in nodes and i < j:
                g.add_edge(i, j)
    return g


def _side_chains(v: MolView, block: frozenset):
    """Side-chain graphs for every amino N, carbonyl and shared alpha carbon in ``block``."""
    carboxy = [t for t in carboxy_residues(v) if set(t) <= block]
    for a in amino_residues(v):
        if a not in block:
            continue
        for c1, _, c3 in carboxy:
            if c3 == a:
                continue
            for ca in v.nbrs[a]:
                if v.elem[ca] == "C" and ca in block and ca in v.nbrs[c1]:
                    yield _side_chain_graph(v, block, a, c1, ca)


@lru_cache(maxsize=1)
def proteinogenic_templates() -> tuple:
    table = json.loads(resources.files("peplogic.data").joinpath("proteinogenic.json").read_text())
    out = []
    for name, smiles in table.items():
        v = MolView.from_graph(parse_smiles(smiles))
        g = next(g for b in blocks_of(v) for g in _side_chains(v, b))
        out.append((name, nx.weisfeiler_lehman_graph_hash(g, node_attr="label"), g))
    return tuple(out)


def _match(g) -> str:
    h = nx.weisfeiler_lehman_graph_hash(g, node_attr="label")
    same_label = nx.algorithms.isomorphism.categorical_node_match("label", None)
    for name, th, tg in proteinogenic_templates():
        if th == h and nx.is_isomorphic(g, tg, node_match=same_label):
            return name
    return None


def residue_name(v: MolView, block: frozenset) -> str:
    # several witness choices can exist; the smallest matching name keeps
    # the answer independent of atom numbering
    names = {_match(g) for g in _side_chains(v, block)} - {None}
    return min(names) if names else "nonstandard"


def proteinogenic_residues(structure, ra: ResidueAnalysis | None = None) -> Counter:
    """Multiset of standard amino-acid identities over the counted residues.

    Among equally long residue groups the one with the smallest sorted name
    list is reported.
    """
    v = as_view(structure)
    ra = ra or analyse(v)
    size = ra.residue_count
    best = None
    for comp in ra.components:
        if len(comp) != size:
            continue
        names = tuple(sorted(residue_name(v, ra.blocks[k]) for k in comp))
        if best is None or names < best:
            best = names
    return Counter(best or ())
