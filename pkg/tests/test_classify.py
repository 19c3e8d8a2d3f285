import itertools
import random

import pytest
from hypothesis import assume, given, settings, strategies as st

from peplogic.blocks import compute_building_blocks
from peplogic.classify import (
    BatchSummary,
    classify,
    classify_batch,
    hierarchy_violations,
    labels_from_facts,
)
from peplogic.logic.evaluate import evaluate
from peplogic.logic.sexpr import loads
from peplogic.mol import MoleculeError, parse_smiles
from peplogic.structure import to_fol_structure
from peplogic.theory import CLASS_LABELS, theory
from peplogic.theory.chem import as_view, chemical_predicates, count_residues, has_dkp_ring, proteinogenic_residues

from strategies import molecule_smiles

GLY_GLY = "NCC(=O)NCC(=O)O"
CYS = "N[C@@H](CS)C(=O)O"
GLY_GLY_ZW = "[NH3+]CC(=O)NCC([O-])=O"


def _true(outcome):
    return {k for k, v in outcome.labels.items() if v}


def _parse(text):
    try:
        return parse_smiles(text)
    except MoleculeError:
        return None


def _chain_length_by_enumeration(smiles):
    """Longest residue chain, read off the theory sentences by direct evaluation."""
    s = compute_building_blocks(to_fol_structure(parse_smiles(smiles)))
    fol = theory().fol
    aar = fol.expand(loads("(exists ((X block)) (AAR X))"))
    if not evaluate(aar, s):
        return 0
    if not evaluate(fol.expand(loads("(PeptideCore)")), s):
        return 1
    n = 2
    while n < 10 and evaluate(fol.expand(loads(f"(ResidueChain{n + 1})")), s):
        n += 1
    return n


def test_catalogue_has_the_labels():
    assert len(CLASS_LABELS) == 14
    assert set(theory().classes) == set(CLASS_LABELS)


def test_extensions_of_examples():
    cys = chemical_predicates(to_fol_structure(parse_smiles(CYS)))
    assert cys["AminoResidue"] == {(0,)} and cys["AmideBond"] == set()
    assert cys["CarboxyResidue"] == {(4, 5, 6)}
    gg = chemical_predicates(to_fol_structure(parse_smiles(GLY_GLY)))
    assert gg["AmideBond"] == {(2, 3, 4)}
    benzene = chemical_predicates(to_fol_structure(parse_smiles("c1ccccc1")))
    assert all(not benzene[k] for k in ("AminoResidue", "CarboxyResidue", "AmideBond"))


@pytest.mark.parametrize("smiles", [GLY_GLY, CYS, "O=C1CNC(=O)CN1", "CC(N)C(=O)NCC(=O)O",
                                    "NCC(=O)NCC(=O)NCC(=O)O", "c1ccccc1", "NC(=O)N"])
def test_residue_count_matches_enumeration(smiles):
    assert count_residues(to_fol_structure(parse_smiles(smiles))) == _chain_length_by_enumeration(smiles)


def test_residue_counts_and_rings():
    assert count_residues(to_fol_structure(parse_smiles(GLY_GLY))) == 2
    assert count_residues(to_fol_structure(parse_smiles(CYS))) == 1
    dkp = parse_smiles("O=C1CNC(=O)CN1")
    assert count_residues(to_fol_structure(dkp)) == 2
    assert has_dkp_ring(as_view(dkp))
    assert "diketopiperazines_2_5" in _true(classify(dkp))


@pytest.mark.parametrize("smiles, expected", [
    (GLY_GLY, {"glycine": 2}),
    ("CC(N)C(=O)NCC(=O)O", {"alanine": 1, "glycine": 1}),
    ("NC(C[SeH])C(=O)O", {"nonstandard": 1}),
])
def test_proteinogenic(smiles, expected):
    assert dict(proteinogenic_residues(to_fol_structure(parse_smiles(smiles)))) == expected


def test_glycylglycine():
    out = classify(parse_smiles(GLY_GLY))
    assert out.ok and out.residue_count == 2
    assert _true(out) == {"peptide", "dipeptide", "oligopeptide"}


def test_cysteine():
    out = classify(parse_smiles(CYS))
    assert out.ok and out.residue_count == 1 and not _true(out)


def test_zwitterion():
    out = classify(parse_smiles(GLY_GLY_ZW))
    assert _true(out) == {"peptide_zwitterion", "dipeptide_zwitterion"}


def test_polypeptide_boundary():
    nine = "NCC(=O)" * 8 + "NCC(=O)O"
    ten = "NCC(=O)" * 9 + "NCC(=O)O"
    assert _true(classify(parse_smiles(nine))) == {"peptide", "oligopeptide"}
    assert _true(classify(parse_smiles(ten))) == {"peptide", "polypeptide"}


def test_fragment_limit_failure():
    out = classify(parse_smiles("C.C.C"), fragment_limit=2)
    assert out.status_text == "failure(fragment-limit)"
    assert not any(out.labels.values())


def _records(*smiles):
    for k, text in enumerate(smiles):
        try:
            yield (f"m{k}", parse_smiles(text))
        except MoleculeError as e:
            yield (f"m{k}", e)


def test_batch_summary():
    run = classify_batch(_records(GLY_GLY, CYS, GLY_GLY_ZW))
    assert [rid for rid, _ in run] == ["m0", "m1", "m2"]
    assert dict(run.summary.label_counts) == {
        "peptide": 1, "dipeptide": 1, "oligopeptide": 1,
        "peptide_zwitterion": 1, "dipeptide_zwitterion": 1,
    }
    assert run.summary.total == 3 and run.summary.failure_count == 0


def test_batch_empty_and_parse_error():
    run = classify_batch(iter(()))
    assert list(run) == [] and run.summary == BatchSummary()
    run = classify_batch(_records(GLY_GLY, "C1CC(", CYS))
    out = list(run)
    assert [o.status_text for _, o in out] == ["ok", "failure(parse)", "ok"]
    assert run.summary.failure_count == 1 and run.summary.label_counts["peptide"] == 1


def test_batch_workers_keep_order():
    smiles = [GLY_GLY, CYS, GLY_GLY_ZW, "C(", "O=C1CNC(=O)CN1"] * 7
    serial = [(rid, o.labels, o.status) for rid, o in classify_batch(_records(*smiles))]
    run = classify_batch(_records(*smiles), workers=2)
    run.chunk_size = 3
    parallel = [(rid, o.labels, o.status) for rid, o in run]
    assert parallel == serial


def test_summary_merge_is_associative():
    outs = [classify(parse_smiles(s)) for s in (GLY_GLY, CYS, GLY_GLY_ZW)]
    parts = []
    for o in outs:
        b = BatchSummary()
        b.add(o)
        parts.append(b)
    left = parts[0].merge(parts[1]).merge(parts[2])
    right = parts[2].merge(parts[0].merge(parts[1]))
    assert left == right


@pytest.mark.parametrize("charge", ["Neutral", "Anion", "Cation", "Zwitterion"])
def test_label_rule_respects_hierarchy(charge):
    for count, dkp, scaffold in itertools.product(range(13), (False, True), (False, True)):
        assert hierarchy_violations(labels_from_facts(charge, count, dkp, scaffold)) == []


def test_hierarchy_checker_flags():
    labels = {k: False for k in CLASS_LABELS}
    labels.update(dipeptide=True, polypeptide=True, peptide_anion=True, peptide_cation=True)
    assert set(hierarchy_violations(labels)) == {
        "dipeptide without oligopeptide", "polypeptide without peptide", "more than one charge family",
    }


@settings(max_examples=500)
@given(molecule_smiles())
def test_hierarchy_fuzz(text):
    m = _parse(text)
    assume(m is not None)
    out = classify(m)
    assert out.ok
    assert hierarchy_violations(out.labels) == []


@settings(max_examples=150)
@given(molecule_smiles(), st.randoms(use_true_random=False))
def test_permutation_invariance(text, rnd):
    m = _parse(text)
    assume(m is not None)
    perm = list(range(len(m.atoms)))
    rnd.shuffle(perm)
    a, b = classify(m), classify(m.permuted(perm))
    assert a.labels == b.labels
    assert a.residue_count == b.residue_count and a.proteinogenic == b.proteinogenic


def test_corpus_is_permutation_invariant(corpus_mols):
    rnd = random.Random(7)
    for rid, _, m in corpus_mols:
        perm = list(range(len(m.atoms)))
        rnd.shuffle(perm)
        assert classify(m).labels == classify(m.permuted(perm)).labels, rid
