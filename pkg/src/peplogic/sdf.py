"""Streaming reader for MDL SDF (V2000) files."""

from __future__ import annotations

import io
from typing import BinaryIO, Iterator, TextIO, Union

from .mol import MolecularGraph, MoleculeError, RawAtom, build_graph

_SDF_CHARGE = {0: 0, 1: 3, 2: 2, 3: 1, 4: 0, 5: -1, 6: -2, 7: -3}
_SDF_BOND = {1: "single", 2: "double", 3: "triple", 4: "aromatic"}
MAX_V2000_COUNT = 999


class SdfRecordError(MoleculeError):
    pass


def _records(lines: Iterator[str]) -> Iterator[list[str]]:
    record: list[str] = []
    for line in lines:
        line = line.rstrip("\r\n")
        if line.strip() == "$$$$":
            yield record
            record = []
        else:
            record.append(line)
    if any(l.strip() for l in record):
        yield record


def parse_molblock(lines: list[str]) -> MolecularGraph:
    if len(lines) < 4:
        raise SdfRecordError("truncated record: missing header or counts line")
    counts = lines[3]
    if "V3000" in counts:
        raise SdfRecordError("V3000 records are not supported")
    try:
        n_atoms = int(counts[0:3])
        n_bonds = int(counts[3:6])
    except ValueError:
        raise SdfRecordError(f"malformed counts line {counts!r}") from None
    if n_atoms < 0 or n_bonds < 0:
        raise SdfRecordError(f"malformed counts line {counts!r}")
    if n_atoms > MAX_V2000_COUNT or n_bonds > MAX_V2000_COUNT:
        raise SdfRecordError("atom count overflow")
    block = lines[4:]
    if len(block) < n_atoms + n_bonds:
        raise SdfRecordError("truncated record: atom/bond block shorter than counts line")
    atoms = []
    for k in range(n_atoms):
        line = block[k]
        symbol = line[31:34].strip()
        if not symbol:
            raise SdfRecordError(f"malformed atom line {k + 1}")
        try:
            code = int(line[36:39]) if line[36:39].strip() else 0
        except ValueError:
            raise SdfRecordError(f"malformed charge field on atom line {k + 1}") from None
        atoms.append(RawAtom(symbol, _SDF_CHARGE.get(code, 0)))
    bonds = []
    for k in range(n_bonds):
        line = block[n_atoms + k]
        try:
            i, j, kind = int(line[0:3]), int(line[3:6]), int(line[6:9])
        except ValueError:
            raise SdfRecordError(f"malformed bond line {k + 1}") from None
        if not (1 <= i <= n_atoms and 1 <= j <= n_atoms):
            raise SdfRecordError(f"bond line {k + 1} references atom outside 1..{n_atoms}")
        if kind not in _SDF_BOND:
            raise SdfRecordError(f"unsupported bond type {kind} on bond line {k + 1}")
        bonds.append((i - 1, j - 1, _SDF_BOND[kind]))
    charges_reset = False
    for line in block[n_atoms + n_bonds:]:
        if line.startswith("M  END"):
            break
        if line.startswith("M  CHG"):
            if not charges_reset:
                for a in atoms:
                    a.charge = 0
                charges_reset = True
            fields = line[6:].split()
            try:
                entries = int(fields[0])
                for e in range(entries):
                    idx, chg = int(fields[1 + 2 * e]), int(fields[2 + 2 * e])
                    atoms[idx - 1].charge = chg
            except (ValueError, IndexError):
                raise SdfRecordError(f"malformed M  CHG line {line!r}") from None
    return build_graph(atoms, bonds, strict_valence=False)


def read_sdf(stream: Union[BinaryIO, TextIO]) -> Iterator[tuple[str, Union[MolecularGraph, MoleculeError]]]:
    """Yield ``(record_id, graph or error)`` per record without loading the file.

    The record id is the title line, or ``record-N`` (1-based) when it is blank.
    """
    if isinstance(stream, io.TextIOBase):
        lines = iter(stream)
    else:
        lines = (raw.decode("utf-8", errors="replace") for raw in stream)
    for n, record in enumerate(_records(lines), start=1):
        title = record[0].strip() if record else ""
        rid = title or f"record-{n}"
        try:
            yield rid, parse_molblock(record)
        except MoleculeError as exc:
            yield rid, exc


def write_molblock(mol: MolecularGraph, title: str = "") -> str:
    """Minimal V2000 writer (zero coordinates), used for fixtures and synthetic corpora."""
    out = [title, "  peplogic", "", f"{len(mol.atoms):3d}{len(mol.bonds):3d}  0  0  0  0  0  0  0  0999 V2000"]
    inv = {v: k for k, v in _SDF_CHARGE.items() if k != 4}
    for atom in mol.atoms:
        code = inv.get(atom.formal_charge, 0)
        out.append(f"{0:10.4f}{0:10.4f}{0:10.4f} {atom.element:<3} 0{code:3d}  0  0  0  0  0  0  0  0  0  0")
    orders = {v: k for k, v in _SDF_BOND.items()}
    for bond in mol.bonds:
        out.append(f"{bond.a + 1:3d}{bond.b + 1:3d}{orders[bond.order]:3d}  0  0  0  0")
    charged = [a for a in mol.atoms if a.formal_charge]
    for start in range(0, len(charged), 8):
        chunk = charged[start:start + 8]
        out.append("M  CHG" + f"{len(chunk):3d}" + "".join(f" {a.index + 1:3d} {a.formal_charge:3d}" for a in chunk))
    out.append("M  END")
    out.append("$$$$")
    return "\n".join(out) + "\n"
