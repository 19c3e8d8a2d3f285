import pytest
from hypothesis import given, settings

from peplogic.blocks import FragmentLimitExceeded, building_blocks, compute_building_blocks
from peplogic.folmc import CheckTask, check, compile_sentence, verify_augmentation
from peplogic.logic.evaluate import evaluate
from peplogic.logic.sexpr import loads
from peplogic.mol import parse_smiles
from peplogic.structure import to_fol_structure
from peplogic.theory import theory

from strategies import structure_and_sentence


def _check(sentence, structure, **kw):
    prefix, cnf = compile_sentence(sentence, structure)
    return check(CheckTask(prefix, cnf, structure, **kw))


def _augmented(smiles):
    return compute_building_blocks(to_fol_structure(parse_smiles(smiles)))


@settings(max_examples=300)
@given(structure_and_sentence(allow_sets=False))
def test_agrees_with_direct_evaluation(case):
    s, f = case
    expected = evaluate(f, s)
    for heuristic in (True, False):
        r = _check(f, s, heuristic=heuristic)
        assert r.ok and r.value == expected


def test_blocks_of_glycylglycine():
    s = _augmented("NCC(=O)NCC(=O)O")
    # N0 C1 C2 O3 N4 C5 C6 O7 O8
    assert sorted(sorted(b) for b in s.blocks) == [[0, 1, 2, 3, 4], [4, 5, 6, 7, 8]]


def test_fragment_limit():
    s = to_fol_structure(parse_smiles("COC"))
    assert len(compute_building_blocks(s, 2).blocks) == 2
    with pytest.raises(FragmentLimitExceeded):
        compute_building_blocks(s, 1)
    with pytest.raises(FragmentLimitExceeded):
        building_blocks(3, lambda i: i != 1, lambda i: [1] if i != 1 else [0, 2], 1)


@pytest.mark.parametrize("name, expected", [
    ("Peptide", True), ("ResidueChain3", False), ("PeptideZwitterion", False), ("DKP_2_5", False),
])
def test_theory_leaves_on_glycylglycine(name, expected):
    s = _augmented("NCC(=O)NCC(=O)O")
    sentence = theory().fol.expand(loads(f"({name})"))
    on, off = _check(sentence, s), _check(sentence, s, heuristic=False)
    assert on.value is expected and off.value is expected


def test_timeout_and_cap_reported():
    s = _augmented("NCC(=O)NCC(=O)NCC(=O)NCC(=O)O")
    sentence = theory().fol.expand(loads("(ResidueChain5)"))
    r = _check(sentence, s, timeout=1e-9)
    assert r.value is None and r.reason == "timeout"
    r = _check(sentence, s, node_cap=3)
    assert r.value is None and r.reason == "cap"


def test_augmentation_consistent():
    report = verify_augmentation(_augmented("NC(CS)C(=O)O"))
    assert report.blocks == 1 and report.consistent


def test_augmentation_mutation_detected():
    s = _augmented("NCC(=O)NCC(=O)O")
    first, second = s.blocks
    # drop the shared amide nitrogen from the second block
    broken = s.with_blocks([first, second - {4}])
    report = verify_augmentation(broken)
    assert not report.consistent
    assert any("block 1" in i for i in report.issues)


def test_augmentation_missing_block_detected():
    s = _augmented("NCC(=O)NCC(=O)O")
    report = verify_augmentation(s.with_blocks(s.blocks[:1]))
    assert report.issues == ["some building block is missing from the extension"]
