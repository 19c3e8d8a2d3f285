import itertools
import os
import sys

import pytest
from hypothesis import given, settings, strategies as st

from peplogic.logic.ast import Exists, Pred, SetVar, Var
from peplogic.logic.evaluate import evaluate
from peplogic.mol import parse_smiles
from peplogic.qbf import (
    FALSE,
    TRUE,
    Circuit,
    GroundingCapExceeded,
    QbfProblem,
    QdimacsError,
    SolverCapExceeded,
    SolverTimeout,
    cegar_solve,
    emit_qdimacs,
    expand_solve,
    external_solve,
    ground,
    merge_blocks,
    naive_solve,
    parse_qdimacs,
    tseitin,
)
from peplogic.qbf.solve import detect_gates
from peplogic.structure import to_fol_structure
from peplogic.theory import theory

from conftest import STUBS
from oracles import brute, circuit_truth
from strategies import circuit_problems, structure_and_sentence

STUB = f"{sys.executable} {os.path.join(STUBS, 'qbf_stub.py')}"


def test_circuit_hash_consing_and_constants():
    c = Circuit()
    a, b = c.new_input(), c.new_input()
    assert c.AND((a, b)) == c.AND((b, a))
    assert c.AND((a, -a)) == FALSE
    assert c.OR((a, TRUE)) == TRUE
    assert c.AND(()) == TRUE
    assert c.evaluate(c.IFF(a, b), {a: True, b: True})


def test_tseitin_small_example():
    c = Circuit()
    a, b, d = c.new_input(), c.new_input(), c.new_input()
    q = QbfProblem([("e", [a, b, d])], c, c.OR((a, c.AND((b, d)))))
    t = tseitin(q)
    assert t.aux_count == 1 and len(t.cnf) == 4
    assert t.prefix == [("e", [1, 2, 3, 4])]
    assert brute(t)


def test_qdimacs_round_trip():
    q = QbfProblem([("e", [1]), ("a", [2, 3])], cnf=[[1, 2], [-1, 3], []], num_vars=3)
    text = emit_qdimacs(q)
    assert text == b"p cnf 3 3\ne 1 0\na 2 3 0\n1 2 0\n-1 3 0\n0\n"
    back = parse_qdimacs(text)
    assert back.prefix == q.prefix and back.cnf == q.cnf


@pytest.mark.parametrize("text", [
    "e 1 0\n",
    "p cnf 2 1\n1 2\n",
    "p cnf 2 1\n1 0\ne 2 0\n",
    "p cnf 2 1\ne 3 0\n1 0\n",
    "p cnf 2 2\n1 0\n",
    "p cnf 2 1\ne 1 0\ne 2 0\n1 0\n",
    "p cnf 2 1\n1 x 0\n",
])
def test_strict_qdimacs_reader(text):
    with pytest.raises(QdimacsError):
        parse_qdimacs(text)


def test_merge_blocks_existential_first():
    assert merge_blocks([[("a", [1])], [("e", [2]), ("a", [3])]]) == [("e", [2]), ("a", [1, 3])]


def test_grounding_folds_constants():
    s = to_fol_structure(parse_smiles("CO"))
    x = Var("x")
    q = ground(Exists(x, Pred("O", (x,))), s)
    assert q.root == TRUE
    q = ground(Exists(x, Pred("N", (x,))), s)
    assert q.root == FALSE


def test_empty_set_exists():
    X = SetVar("X")
    from peplogic.logic.ast import IsEmpty
    q = ground(Exists(X, IsEmpty(X)), to_fol_structure(parse_smiles("CCO")))
    assert naive_solve(tseitin(q)).sat


def test_unfolded_grounding_pins_facts():
    s = to_fol_structure(parse_smiles("CO"))
    x = Var("x")
    q = ground(Exists(x, Pred("O", (x,))), s, fold=False)
    assert q.prefix[0][0] == "e"
    assert naive_solve(q).sat and brute(tseitin(q))


def test_clause_cap():
    cat = theory()
    s = to_fol_structure(parse_smiles("NCC(=O)NCC(=O)O"))
    with pytest.raises(GroundingCapExceeded):
        ground(cat.msol.expand(Pred("Peptide", ())), s, fold=False, scoping=False, clause_cap=1000)


def test_variable_cap_and_timeout():
    c = Circuit()
    xs = [c.new_input() for _ in range(60)]
    root = c.AND(c.OR((a, b)) for a, b in zip(xs, xs[1:]))
    q = QbfProblem([("e", xs[:30]), ("a", xs[30:])], c, root)
    with pytest.raises(SolverCapExceeded):
        naive_solve(q, variable_cap=50)
    assert not naive_solve(q).sat


def test_timeout_raises():
    c = Circuit()
    xs = [c.new_input() for _ in range(40)]
    ys = [c.new_input() for _ in range(40)]
    # every x must be matched by a y: one refinement per universal move, 2^40 of them
    root = c.AND(c.IFF(a, b) for a, b in zip(xs, ys))
    q = QbfProblem([("a", xs), ("e", ys)], c, root)
    with pytest.raises(SolverTimeout):
        naive_solve(q, timeout=0.5)


def test_gate_detection_recovers_tseitin_definitions():
    c = Circuit()
    a, b, d = c.new_input(), c.new_input(), c.new_input()
    q = tseitin(QbfProblem([("a", [a]), ("e", [b, d])], c, c.OR((c.AND((a, b)), c.AND((-a, d))))))
    gates = detect_gates(q.prefix, q.cnf)
    assert len(gates) == q.aux_count == 2
    assert naive_solve(q, full_expansion_cap=0).sat == brute(q) is True


@settings(max_examples=300)
@given(st.data())
def test_solvers_agree_on_random_cnf(data):
    n = data.draw(st.integers(1, 7))
    lit = st.integers(1, n).flatmap(lambda v: st.sampled_from([v, -v]))
    cnf = data.draw(st.lists(st.lists(lit, min_size=1, max_size=3), max_size=10))
    kinds = data.draw(st.lists(st.sampled_from("ea"), min_size=n, max_size=n))
    prefix = [(k, [v + 1]) for v, k in enumerate(kinds)]
    q = QbfProblem(prefix, cnf=cnf, num_vars=n)
    want = brute(q)
    assert expand_solve(q) == want
    assert naive_solve(q, full_expansion_cap=0).sat == want


@settings(max_examples=300)
@given(structure_and_sentence(max_atoms=3, depth=3))
def test_grounding_matches_evaluator(case):
    s, f = case
    want = evaluate(f, s)
    for fold, scoping in itertools.product((True, False), repeat=2):
        q = ground(f, s, fold=fold, scoping=scoping)
        assert naive_solve(q).sat == want
        t = tseitin(q)
        assert naive_solve(t, full_expansion_cap=0).sat == want
        assert parse_qdimacs(emit_qdimacs(t)).cnf == [list(c) for c in t.cnf]


@settings(max_examples=300)
@given(circuit_problems())
def test_tseitin_equisatisfiable(q):
    want = circuit_truth(q)
    t = tseitin(q)
    assert brute(t) == want
    assert naive_solve(q, full_expansion_cap=0).sat == want


def test_cegar_on_prenex_circuit():
    c = Circuit()
    x, y = c.new_input(), c.new_input()
    # forall x exists y. x xor y
    root = -c.IFF(x, y)
    assert cegar_solve([("a", [x]), ("e", [y])], c, root)[0]
    assert not cegar_solve([("e", [y]), ("a", [x])], c, root)[0]


# ---- external solver driver ----

def _problem(sat):
    cnf = [[1, 2], [-1]] if sat else [[1], [-1]]
    return QbfProblem([("e", [1, 2])], cnf=cnf, num_vars=2)


@pytest.mark.parametrize("sat", [True, False])
def test_external_exit_codes(sat):
    r = external_solve(_problem(sat), STUB + " {input}")
    assert r.sat is sat


def test_external_stdin_and_result_line(monkeypatch):
    monkeypatch.setenv("STUB_MODE", "sline")
    assert external_solve(_problem(True), STUB).sat is True


def test_external_preprocessor(monkeypatch):
    r = external_solve(_problem(False), STUB + " {input}", preprocessor=f"{STUB} {{input}}")
    assert r.sat is False  # the stub preprocessor decides and exits 20
    monkeypatch.setenv("STUB_MODE", "copy")
    r = external_solve(_problem(True), [sys.executable, "-c",
                                         "import sys; sys.exit(10 if sys.stdin.read().startswith('p cnf') else 1)"],
                       preprocessor=STUB + " {input}")
    assert r.sat is True


def test_external_failures(monkeypatch):
    assert str(external_solve(_problem(True), "/nonexistent/solver")) == "failure(spawn)"
    monkeypatch.setenv("STUB_MODE", "garbage")
    assert external_solve(_problem(True), STUB).reason == "unparseable"
    monkeypatch.setenv("STUB_MODE", "sleep")
    assert external_solve(_problem(True), STUB, timeout=1).reason == "timeout"
