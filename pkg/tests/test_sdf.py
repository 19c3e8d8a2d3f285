import io

from peplogic.mol import MoleculeError, parse_smiles
from peplogic.sdf import SdfRecordError, parse_molblock, read_sdf, write_molblock

ETHANE = """ethane
  hand

  2  1  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    1.5000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
  1  2  1  0  0  0  0
M  END
$$$$
"""

BROKEN = """broken
  hand

  x  1  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
M  END
$$$$
"""

WITH_H = """methanol
  hand

  3  2  0  0  0  0  0  0  0  0999 V2000
    0.0000    0.0000    0.0000 C   0  0  0  0  0  0  0  0  0  0  0  0
    1.0000    0.0000    0.0000 O   0  0  0  0  0  0  0  0  0  0  0  0
    2.0000    0.0000    0.0000 H   0  0  0  0  0  0  0  0  0  0  0  0
  1  2  1  0  0  0  0
  2  3  1  0  0  0  0
M  END
$$$$
"""


def records(text):
    return list(read_sdf(io.BytesIO(text.encode())))


def test_ethane_record():
    [(rid, m)] = records(ETHANE)
    assert rid == "ethane"
    assert [a.element for a in m.atoms] == ["C", "C"]
    assert [b.order for b in m.bonds] == ["single"]


def test_empty_stream():
    assert records("") == []


def test_corrupted_middle_record():
    out = records(ETHANE + BROKEN + ETHANE)
    assert [isinstance(m, MoleculeError) for _, m in out] == [False, True, False]
    assert isinstance(out[1][1], SdfRecordError)


def test_explicit_hydrogen_folded():
    [(_, m)] = records(WITH_H)
    assert [a.element for a in m.atoms] == ["C", "O"]
    assert m.atoms[1].implicit_hydrogens == 1


def test_text_stream_and_blank_title():
    out = list(read_sdf(io.StringIO("\n" + ETHANE.split("\n", 1)[1])))
    assert out[0][0] == "record-1"


def test_truncated_record():
    lines = ETHANE.splitlines()[:5]
    try:
        parse_molblock(lines)
    except SdfRecordError as e:
        assert "truncated" in str(e)
    else:
        raise AssertionError("expected an error")


def test_charge_block_round_trip():
    m = parse_smiles("[NH3+]CC(=O)NCC([O-])=O")
    [(rid, back)] = records(write_molblock(m, "zw"))
    assert rid == "zw"
    assert [(a.element, a.formal_charge) for a in back.atoms] == [(a.element, a.formal_charge) for a in m.atoms]
    assert [(b.endpoints, b.order) for b in back.bonds] == [(b.endpoints, b.order) for b in m.bonds]


def test_reader_is_lazy():
    def lines():
        yield from io.BytesIO(ETHANE.encode())
        raise AssertionError("read past the first record")

    it = read_sdf(lines())
    rid, m = next(it)
    assert rid == "ethane"
