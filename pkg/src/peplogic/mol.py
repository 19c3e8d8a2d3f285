"""Hydrogen-suppressed molecular graphs and a SMILES reader.

Supported SMILES grammar
------------------------

==================  ===========================================================
feature             handling
==================  ===========================================================
organic subset      ``B C N O P S F Cl Br I`` and aromatic ``b c n o p s``
bracket atoms       ``[isotope? symbol chirality? Hn? charge? :class?]``
bonds               ``-  =  #  :`` plus ``/`` and ``\\`` (read as single)
branches            ``( ... )``
ring closures       ``0-9`` and ``%nn``
fragments           ``.`` keeps all fragments in one graph
stereo, isotopes    parsed and discarded
wildcard ``*``      rejected
quadruple ``$``     rejected
==================  ===========================================================

Explicit hydrogens are folded into ``implicit_hydrogens`` of their heavy
neighbour, so ``C[H]`` and ``C`` give the same one-atom graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import networkx as nx

BOND_ORDERS = ("single", "double", "triple", "aromatic")
_ORDER_VALUE = {"single": 1, "double": 2, "triple": 3}

ELEMENTS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn "
    "Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce "
    "Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn "
    "Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl "
    "Mc Lv Ts Og"
).split()
_ELEMENT_SET = frozenset(ELEMENTS)

ORGANIC_SUBSET = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")
AROMATIC_ORGANIC = {"b": "B", "c": "C", "n": "N", "o": "O", "p": "P", "s": "S"}
AROMATIC_BRACKET = {"se": "Se", "as": "As", "te": "Te", **AROMATIC_ORGANIC}

_DEFAULT_VALENCES = {
    "B": (3,), "C": (4,), "N": (3, 5), "O": (2,), "P": (3, 5), "S": (2, 4, 6),
    "F": (1,), "Cl": (1, 3, 5, 7), "Br": (1, 3, 5), "I": (1, 3, 5, 7),
    "Se": (2, 4, 6), "As": (3, 5), "Te": (2, 4, 6), "Si": (4,),
}


class MoleculeError(ValueError):
    """Base class for parse and validation failures."""


class SmilesSyntaxError(MoleculeError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.message = message
        self.position = position

    def __reduce__(self):
        return type(self), (self.message, self.position)


class ValenceError(MoleculeError):
    pass


class UnsupportedFeatureError(MoleculeError):
    pass


def allowed_valences(element: str, charge: int = 0) -> tuple[int, ...]:
    """Valence states for ``element`` shifted by its formal charge."""
    base = _DEFAULT_VALENCES.get(element)
    if base is None:
        return ()
    if element == "C" or element == "Si":
        return (4 - abs(charge),)
    if element == "B":
        return (3 - charge,)
    return tuple(v + charge for v in base if v + charge >= 0)


@dataclass(frozen=True)
class Atom:
    index: int
    element: str
    formal_charge: int = 0
    implicit_hydrogens: int = 0
    aromatic: bool = False

    def __post_init__(self):
        if self.element not in _ELEMENT_SET or self.element == "H":
            raise MoleculeError(f"unsupported element {self.element!r}")
        if not -4 <= self.formal_charge <= 4:
            raise MoleculeError(f"formal charge {self.formal_charge} out of range")
        if self.implicit_hydrogens < 0:
            raise MoleculeError("negative hydrogen count")


@dataclass(frozen=True)
class Bond:
    a: int
    b: int
    order: str = "single"

    def __post_init__(self):
        if self.a == self.b:
            raise MoleculeError("bond endpoints must differ")
        if self.order not in BOND_ORDERS:
            raise MoleculeError(f"unknown bond order {self.order!r}")
        if self.a > self.b:
            lo, hi = self.b, self.a
            object.__setattr__(self, "a", lo)
            object.__setattr__(self, "b", hi)

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.a, self.b)


@dataclass(frozen=True)
class MolecularGraph:
    atoms: tuple[Atom, ...]
    bonds: tuple[Bond, ...]
    _adjacency: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)
    _orders: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.atoms)
        adjacency: list[list[int]] = [[] for _ in range(n)]
        orders = {}
        for atom_pos, atom in enumerate(self.atoms):
            if atom.index != atom_pos:
                raise MoleculeError("atom indices must be 0-based and contiguous")
        for bond in self.bonds:
            if bond.b >= n:
                raise MoleculeError(f"bond {bond.endpoints} out of atom range")
            if bond.endpoints in orders:
                raise MoleculeError(f"duplicate bond between atoms {bond.endpoints}")
            orders[bond.endpoints] = bond.order
            adjacency[bond.a].append(bond.b)
            adjacency[bond.b].append(bond.a)
        object.__setattr__(self, "_adjacency", tuple(tuple(sorted(x)) for x in adjacency))
        object.__setattr__(self, "_orders", orders)

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def net_charge(self) -> int:
        return sum(a.formal_charge for a in self.atoms)

    def neighbors(self, i: int) -> tuple[int, ...]:
        return self._adjacency[i]

    def bond_order(self, i: int, j: int) -> str | None:
        return self._orders.get((i, j) if i < j else (j, i))

    def fragments(self) -> list[list[int]]:
        """Connected components as sorted index lists."""
        seen = [False] * len(self.atoms)
        out = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            seen[start] = True
            stack, comp = [start], []
            while stack:
                i = stack.pop()
                comp.append(i)
                for j in self._adjacency[i]:
                    if not seen[j]:
                        seen[j] = True
                        stack.append(j)
            out.append(sorted(comp))
        return out

    @property
    def is_multi_fragment(self) -> bool:
        return len(self.fragments()) > 1

    def permuted(self, perm: Sequence[int]) -> "MolecularGraph":
        """Relabel atom ``i`` as ``perm[i]``."""
        atoms = [None] * len(self.atoms)
        for atom in self.atoms:
            j = perm[atom.index]
            atoms[j] = Atom(j, atom.element, atom.formal_charge, atom.implicit_hydrogens, atom.aromatic)
        bonds = sorted(
            (Bond(perm[b.a], perm[b.b], b.order) for b in self.bonds), key=lambda b: b.endpoints
        )
        return MolecularGraph(tuple(atoms), tuple(bonds))


# --------------------------------------------------------------------------
# shared construction: hydrogen folding, kekulization, hydrogen counts
# --------------------------------------------------------------------------

@dataclass
class RawAtom:
    element: str
    charge: int = 0
    hcount: int | None = None  # None: derive from valence rules
    aromatic: bool = False


def build_graph(raw_atoms: Sequence[RawAtom], raw_bonds: Iterable[tuple[int, int, str]],
                strict_valence: bool = True) -> MolecularGraph:
    """Fold explicit hydrogens, kekulize aromatic systems and count hydrogens.

    ``raw_bonds`` holds ``(i, j, order)`` with order in ``BOND_ORDERS``.
    """
    is_h = [a.element == "H" for a in raw_atoms]
    new_index = {}
    for i, atom in enumerate(raw_atoms):
        if not is_h[i]:
            new_index[i] = len(new_index)
    heavy = [raw_atoms[i] for i in sorted(new_index, key=new_index.get)]
    extra_h = [0] * len(heavy)
    bonds: dict[tuple[int, int], str] = {}
    for i, j, order in raw_bonds:
        if i == j:
            raise MoleculeError(f"atom {i} bonded to itself")
        if is_h[i] or is_h[j]:
            if is_h[i] and is_h[j]:
                continue
            h, other = (i, j) if is_h[i] else (j, i)
            extra_h[new_index[other]] += 1
            continue
        a, b = sorted((new_index[i], new_index[j]))
        if (a, b) in bonds:
            raise MoleculeError(f"more than one bond between atoms {i} and {j}")
        bonds[(a, b)] = order

    n = len(heavy)
    adjacency: list[list[int]] = [[] for _ in range(n)]
    for a, b in bonds:
        adjacency[a].append(b)
        adjacency[b].append(a)

    def explicit_h(i: int) -> int:
        return (heavy[i].hcount or 0) + extra_h[i]

    def needs_double(i: int) -> bool:
        atom = heavy[i]
        vals = allowed_valences(atom.element, atom.charge)
        if not vals:
            return False
        fixed = 0
        n_arom = 0
        for j in adjacency[i]:
            order = bonds[(min(i, j), max(i, j))]
            if order == "aromatic":
                n_arom += 1
            else:
                fixed += _ORDER_VALUE[order]
        return vals[0] - explicit_h(i) - fixed - n_arom >= 1

    aromatic_edges = [e for e, o in bonds.items() if o == "aromatic"]
    unresolved: set[int] = set()
    if aromatic_edges:
        system = nx.Graph()
        system.add_edges_from(aromatic_edges)
        for comp in sorted(nx.connected_components(system), key=min):
            needy = sorted(i for i in comp if needs_double(i))
            sub = nx.Graph()
            sub.add_nodes_from(needy)
            sub.add_edges_from(
                e for e in aromatic_edges if e[0] in comp and e[0] in sub and e[1] in sub
            )
            matching = nx.max_weight_matching(sub, maxcardinality=True)
            matched = {tuple(sorted(e)) for e in matching}
            if 2 * len(matched) == len(needy):
                for e in aromatic_edges:
                    if e[0] in comp:
                        bonds[e] = "double" if e in matched else "single"
            else:
                unresolved.update(comp)

    atoms = []
    for i, raw in enumerate(heavy):
        heavy_sum = 0.0
        n_arom = 0
        for j in adjacency[i]:
            order = bonds[(min(i, j), max(i, j))]
            if order == "aromatic":
                n_arom += 1
            else:
                heavy_sum += _ORDER_VALUE[order]
        vals = allowed_valences(raw.element, raw.charge)
        if raw.hcount is not None:
            total_h = raw.hcount + extra_h[i]
            used = heavy_sum + n_arom + total_h
            if strict_valence and vals and used > max(vals) + (1 if i in unresolved else 0):
                raise ValenceError(f"atom {i} ({raw.element}) exceeds its valence")
        else:
            used = heavy_sum + n_arom + extra_h[i] + (1 if i in unresolved and needs_double(i) else 0)
            target = next((v for v in vals if v >= used), None)
            if target is None:
                if strict_valence and vals:
                    raise ValenceError(f"atom {i} ({raw.element}) exceeds its valence")
                target = used
            total_h = int(target - heavy_sum - n_arom - (1 if i in unresolved and needs_double(i) else 0))
            total_h = max(total_h, extra_h[i])
        atoms.append(Atom(i, raw.element, raw.charge, int(total_h), raw.aromatic))
    bond_objs = tuple(Bond(a, b, o) for (a, b), o in sorted(bonds.items()))
    return MolecularGraph(tuple(atoms), bond_objs)


# --------------------------------------------------------------------------
# SMILES
# --------------------------------------------------------------------------

_BOND_SYMBOLS = {"-": "single", "=": "double", "#": "triple", ":": "aromatic", "/": "single", "\\": "single"}


class _SmilesReader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.atoms: list[RawAtom] = []
        self.bonds: list[tuple[int, int, str | None]] = []
        self.rings: dict[int, tuple[int, str | None, int]] = {}

    def error(self, message: str, pos: int | None = None):
        raise SmilesSyntaxError(message, self.pos if pos is None else pos)

    def parse(self) -> MolecularGraph:
        text = self.text
        prev: int | None = None
        stack: list[int | None] = []
        pending_bond: str | None = None
        while self.pos < len(text):
            ch = text[self.pos]
            if ch == "(":
                if prev is None:
                    self.error("branch without preceding atom")
                stack.append(prev)
                self.pos += 1
            elif ch == ")":
                if not stack:
                    self.error("unbalanced ')'")
                if pending_bond is not None:
                    self.error("bond symbol before ')'")
                prev = stack.pop()
                self.pos += 1
            elif ch in _BOND_SYMBOLS:
                if pending_bond is not None or prev is None:
                    self.error(f"misplaced bond symbol {ch!r}")
                pending_bond = _BOND_SYMBOLS[ch]
                self.pos += 1
            elif ch == "$":
                raise UnsupportedFeatureError(f"quadruple bonds are not supported (at position {self.pos})")
            elif ch == ".":
                if pending_bond is not None or prev is None:
                    self.error("misplaced '.'")
                prev = None
                self.pos += 1
            elif ch.isdigit() or ch == "%":
                if prev is None:
                    self.error("ring closure without preceding atom")
                start = self.pos
                if ch == "%":
                    digits = text[self.pos + 1:self.pos + 3]
                    if len(digits) != 2 or not digits.isdigit():
                        self.error("'%' must be followed by two digits")
                    num = int(digits)
                    self.pos += 3
                else:
                    num = int(ch)
                    self.pos += 1
                self._ring(num, prev, pending_bond, start)
                pending_bond = None
            elif ch == "*":
                raise UnsupportedFeatureError(f"wildcard atoms are not supported (at position {self.pos})")
            else:
                idx = self._atom()
                if prev is not None:
                    self.bonds.append((prev, idx, pending_bond))
                elif pending_bond is not None:
                    self.error("bond symbol without preceding atom")
                pending_bond = None
                prev = idx
        if stack:
            self.error("unclosed branch '('")
        if pending_bond is not None:
            self.error("dangling bond symbol")
        if self.rings:
            num, (_, _, at) = next(iter(self.rings.items()))
            self.error(f"unclosed ring bond {num}", at)
        if not self.atoms:
            self.error("no atoms", 0)
        resolved = []
        for i, j, order in self.bonds:
            if order is None:
                both = self.atoms[i].aromatic and self.atoms[j].aromatic
                order = "aromatic" if both else "single"
            resolved.append((i, j, order))
        return build_graph(self.atoms, resolved)

    def _ring(self, num, atom, bond, at):
        if num in self.rings:
            other, other_bond, _ = self.rings.pop(num)
            if other == atom:
                self.error("ring closure to the same atom", at)
            if bond and other_bond and bond != other_bond:
                self.error(f"conflicting bond orders for ring closure {num}", at)
            self.bonds.append((other, atom, bond or other_bond))
        else:
            self.rings[num] = (atom, bond, at)

    def _atom(self) -> int:
        text = self.text
        ch = text[self.pos]
        if ch == "[":
            return self._bracket()
        for sym in ORGANIC_SUBSET:
            if text.startswith(sym, self.pos):
                self.pos += len(sym)
                self.atoms.append(RawAtom(sym))
                return len(self.atoms) - 1
        if ch in AROMATIC_ORGANIC:
            self.pos += 1
            self.atoms.append(RawAtom(AROMATIC_ORGANIC[ch], aromatic=True))
            return len(self.atoms) - 1
        self.error(f"unexpected character {ch!r}")

    def _bracket(self) -> int:
        text = self.text
        start = self.pos
        end = text.find("]", start)
        if end < 0:
            self.error("unterminated bracket atom")
        body = text[start + 1:end]
        k = 0
        while k < len(body) and body[k].isdigit():
            k += 1  # isotope, discarded
        rest = body[k:]
        if rest.startswith("*"):
            raise UnsupportedFeatureError(f"wildcard atoms are not supported (at position {start})")
        element = None
        aromatic = False
        for size in (2, 1):
            cand = rest[:size]
            if len(cand) != size:
                continue
            if cand in _ELEMENT_SET:
                element = cand
            elif cand in AROMATIC_BRACKET:
                element, aromatic = AROMATIC_BRACKET[cand], True
            else:
                continue
            rest = rest[size:]
            break
        if element is None:
            self.error(f"unknown element in bracket atom [{body}]", start)
        # chirality, discarded
        if rest.startswith("@"):
            rest = rest.lstrip("@")
            m = 0
            while m < len(rest) and rest[m].isalpha() and rest[m] != "H":
                m += 1
            if m:
                m2 = m
                while m2 < len(rest) and rest[m2].isdigit():
                    m2 += 1
                rest = rest[m2:]
        hcount = 0
        if rest.startswith("H"):
            m = 1
            while m < len(rest) and rest[m].isdigit():
                m += 1
            hcount = int(rest[1:m]) if m > 1 else 1
            rest = rest[m:]
        charge = 0
        if rest[:1] in ("+", "-"):
            sign = 1 if rest[0] == "+" else -1
            m = 1
            while m < len(rest) and rest[m] == rest[0]:
                m += 1
            if m > 1:
                charge = sign * m
                rest = rest[m:]
            else:
                m = 1
                while m < len(rest) and rest[m].isdigit():
                    m += 1
                charge = sign * (int(rest[1:m]) if m > 1 else 1)
                rest = rest[m:]
        if rest.startswith(":"):
            if not rest[1:].isdigit():
                self.error(f"malformed atom class in [{body}]", start)
            rest = ""
        if rest:
            self.error(f"malformed bracket atom [{body}]", start)
        if not -4 <= charge <= 4:
            self.error(f"formal charge {charge} out of range", start)
        self.pos = end + 1
        self.atoms.append(RawAtom(element, charge, hcount, aromatic))
        return len(self.atoms) - 1


def parse_smiles(text: str) -> MolecularGraph:
    """Parse a SMILES string into a hydrogen-suppressed graph.

    Raises ``SmilesSyntaxError`` (with ``position``), ``ValenceError`` or
    ``UnsupportedFeatureError``.
    """
    text = text.strip()
    if not text:
        raise SmilesSyntaxError("empty SMILES", 0)
    return _SmilesReader(text).parse()
