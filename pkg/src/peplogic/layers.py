"""Classification through the logic layers: FOL model checking, QBF and MONA.

Class sentences are boolean combinations of nullary definitions (a dipeptide
is a peptide without a three-residue chain). Those combinations are
evaluated directly and each remaining quantified sentence is decided once
per molecule by the layer's backend, so shared parts such as the peptide
core are not decided again for every label.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Optional

from .blocks import DEFAULT_FRAGMENT_LIMIT, FragmentLimitExceeded, compute_building_blocks
from .classify import ClassificationOutcome, classify
from .folmc import DEFAULT_NODE_CAP, DEFAULT_TIMEOUT, CheckTask, check, compile_sentence
from .logic.ast import And, Bottom, Formula, Iff, Implies, Not, Or, Pred, Top
from .logic.define import Theory
from .mol import MolecularGraph
from .structure import FolStructure, to_fol_structure
from .theory import CLASS_LABELS, theory

QBF_TIMEOUT = 60.0


@dataclass(frozen=True)
class LayerOptions:
    fragment_limit: int = DEFAULT_FRAGMENT_LIMIT
    fol_timeout: float = DEFAULT_TIMEOUT
    node_cap: int = DEFAULT_NODE_CAP
    heuristic: bool = True
    qbf_timeout: float = QBF_TIMEOUT
    qbf_variable_cap: Optional[int] = None
    clause_cap: Optional[int] = None
    qbf_solver: Optional[str] = None      # external command template
    qbf_preprocessor: Optional[str] = None
    mona_binary: Optional[str] = None
    mona_timeout: float = 60.0
    mona_memory: Optional[int] = None


class LayerFailure(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class SentenceEvaluator:
    """Evaluates nullary definitions, sending quantified leaves to ``decide``."""

    def __init__(self, defs: Theory, structure: FolStructure, decide: Callable[[Formula], bool]):
        self.defs = defs
        self.structure = structure
        self.decide = decide
        self.cache: dict[str, bool] = {}
        self.leaves = 0

    def name(self, name: str) -> bool:
        hit = self.cache.get(name)
        if hit is None:
            hit = self.formula(self.defs[name].body)
            self.cache[name] = hit
        return hit

    def formula(self, f: Formula) -> bool:
        if isinstance(f, Top):
            return True
        if isinstance(f, Bottom):
            return False
        if isinstance(f, Pred) and not f.args:
            return self.name(f.name) if f.name in self.defs else self.structure.holds(f.name, ())
        if isinstance(f, Not):
            return not self.formula(f.body)
        if isinstance(f, And):
            return all(self.formula(a) for a in f.args)
        if isinstance(f, Or):
            return any(self.formula(a) for a in f.args)
        if isinstance(f, Implies):
            return not self.formula(f.left) or self.formula(f.right)
        if isinstance(f, Iff):
            return self.formula(f.left) == self.formula(f.right)
        self.leaves += 1
        return self.decide(self.defs.expand(f))


def _labels(ev: SentenceEvaluator, labels) -> dict:
    cat = theory()
    return {label: ev.name(cat.class_name(label)) for label in labels}


def _remaining(deadline):
    left = deadline - time.monotonic()
    if left <= 0:
        raise LayerFailure("timeout")
    return left


def classify_fol(mol: MolecularGraph, opts: LayerOptions = LayerOptions(), labels=CLASS_LABELS):
    """FOL layer: building blocks computed algorithmically, then model checking.

    The timeout covers the whole molecule.
    """
    start = time.perf_counter()
    deadline = time.monotonic() + opts.fol_timeout if opts.fol_timeout is not None else None
    try:
        structure = compute_building_blocks(to_fol_structure(mol), opts.fragment_limit)

        def decide(sentence):
            timeout = None if deadline is None else _remaining(deadline)
            prefix, cnf = compile_sentence(sentence, structure)
            r = check(CheckTask(prefix, cnf, structure, timeout, opts.node_cap, opts.heuristic))
            if not r.ok:
                raise LayerFailure(r.reason)
            return r.value

        out = _labels(SentenceEvaluator(theory().fol, structure, decide), labels)
    except FragmentLimitExceeded:
        return ClassificationOutcome.failure("fragment-limit", "fol", time.perf_counter() - start)
    except LayerFailure as e:
        return ClassificationOutcome.failure(e.reason, "fol", time.perf_counter() - start)
    return ClassificationOutcome(out, None, Counter(), "fol", "ok", None, time.perf_counter() - start)


def classify_qbf(mol: MolecularGraph, opts: LayerOptions = LayerOptions(), labels=CLASS_LABELS):
    """QBF layer: ground the MSOL sentences and decide them.

    Uses the built-in solver unless an external solver command is set.
    """
    from .qbf import (DEFAULT_CLAUSE_CAP, DEFAULT_VARIABLE_CAP, GroundingCapExceeded,
                      SolverCapExceeded, SolverTimeout, external_solve, ground, naive_solve, tseitin)

    start = time.perf_counter()
    deadline = time.monotonic() + opts.qbf_timeout if opts.qbf_timeout is not None else None
    structure = to_fol_structure(mol)
    clause_cap = opts.clause_cap or DEFAULT_CLAUSE_CAP
    var_cap = opts.qbf_variable_cap or DEFAULT_VARIABLE_CAP

    def decide(sentence):
        timeout = None if deadline is None else _remaining(deadline)
        try:
            q = ground(sentence, structure, clause_cap=clause_cap)
            if opts.qbf_solver:
                r = external_solve(tseitin(q), opts.qbf_solver, opts.qbf_preprocessor, timeout)
                if r.sat is None:
                    raise LayerFailure(r.reason)
                return r.sat
            return naive_solve(q, variable_cap=var_cap, timeout=timeout).sat
        except (GroundingCapExceeded, SolverCapExceeded):
            raise LayerFailure("cap") from None
        except SolverTimeout:
            raise LayerFailure("timeout") from None

    try:
        out = _labels(SentenceEvaluator(theory().msol, structure, decide), labels)
    except LayerFailure as e:
        return ClassificationOutcome.failure(e.reason, "qbf", time.perf_counter() - start)
    return ClassificationOutcome(out, None, Counter(), "qbf", "ok", None, time.perf_counter() - start)


def classify_mona(mol: MolecularGraph, opts: LayerOptions = LayerOptions(), labels=CLASS_LABELS):
    """MONA layer: one program per quantified leaf, run by the external binary."""
    from .mona import emit_program, run_mona

    start = time.perf_counter()
    structure = to_fol_structure(mol)
    cat = theory()

    def decide(sentence):
        r = run_mona(emit_program(sentence, structure, cat.msol), opts.mona_binary,
                     opts.mona_timeout, opts.mona_memory)
        if r.holds is None:
            raise LayerFailure(r.reason)
        return r.holds

    # leaves are emitted unexpanded so the program keeps the pred definitions
    ev = SentenceEvaluator(cat.msol, structure, decide)
    ev.defs = _NoExpand(cat.msol)
    try:
        out = _labels(ev, labels)
    except LayerFailure as e:
        return ClassificationOutcome.failure(e.reason, "mona", time.perf_counter() - start)
    return ClassificationOutcome(out, None, Counter(), "mona", "ok", None, time.perf_counter() - start)


class _NoExpand:
    def __init__(self, defs: Theory):
        self._defs = defs

    def __contains__(self, name):
        return name in self._defs

    def __getitem__(self, name):
        return self._defs[name]

    def expand(self, f):
        return f


def classify_layer(mol: MolecularGraph, layer: str = "algorithmic", opts: LayerOptions = LayerOptions()):
    if layer == "algorithmic":
        return classify(mol, opts.fragment_limit)
    if layer == "fol":
        return classify_fol(mol, opts)
    if layer == "qbf":
        return classify_qbf(mol, opts)
    if layer == "mona":
        return classify_mona(mol, opts)
    raise ValueError(f"unknown layer {layer!r}")
