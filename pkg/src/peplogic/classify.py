"""The fully algorithmic classification layer and its batch driver."""

from __future__ import annotations

import time
from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from .blocks import DEFAULT_FRAGMENT_LIMIT, FragmentLimitExceeded
from .mol import MolecularGraph, MoleculeError
from .theory import CLASS_LABELS
from .theory.chem import MolView, analyse, has_dkp_ring, has_emericellamide_scaffold, proteinogenic_residues

LAYERS = ("algorithmic", "fol", "qbf", "mona")

# (a, b): a implies b
IMPLICATIONS = (
    ("dipeptide", "oligopeptide"),
    ("tripeptide", "oligopeptide"),
    ("tetrapeptide", "oligopeptide"),
    ("pentapeptide", "oligopeptide"),
    ("oligopeptide", "peptide"),
    ("polypeptide", "peptide"),
    ("dipeptide_zwitterion", "peptide_zwitterion"),
    ("tripeptide_zwitterion", "peptide_zwitterion"),
)
EXCLUSIONS = (("oligopeptide", "polypeptide"),)
CHARGE_FAMILIES = ("peptide", "peptide_anion", "peptide_cation", "peptide_zwitterion")


def hierarchy_violations(labels: dict) -> list[str]:
    out = [f"{a} without {b}" for a, b in IMPLICATIONS if labels.get(a) and not labels.get(b)]
    out += [f"{a} with {b}" for a, b in EXCLUSIONS if labels.get(a) and labels.get(b)]
    if sum(bool(labels.get(k)) for k in CHARGE_FAMILIES) > 1:
        out.append("more than one charge family")
    return out


@dataclass
class ClassificationOutcome:
    labels: dict
    residue_count: Optional[int] = None
    proteinogenic: Counter = field(default_factory=Counter)
    layer: str = "algorithmic"
    status: str = "ok"
    reason: Optional[str] = None
    elapsed: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def status_text(self) -> str:
        return "ok" if self.ok else f"failure({self.reason})"

    @classmethod
    def failure(cls, reason: str, layer: str = "algorithmic", elapsed: float = 0.0) -> "ClassificationOutcome":
        return cls({k: False for k in CLASS_LABELS}, None, Counter(), layer, "failure", reason, elapsed)


def labels_from_facts(charge: str, count: int, dkp: bool, scaffold: bool) -> dict:
    core = count >= 2
    peptide = charge == "Neutral" and core
    zwit = charge == "Zwitterion" and core
    return {
        "peptide": peptide,
        "dipeptide": peptide and count == 2,
        "tripeptide": peptide and count == 3,
        "tetrapeptide": peptide and count == 4,
        "pentapeptide": peptide and count == 5,
        "oligopeptide": peptide and count < 10,
        "polypeptide": peptide and count >= 10,
        "peptide_anion": charge == "Anion" and core,
        "peptide_cation": charge == "Cation" and core,
        "peptide_zwitterion": zwit,
        "dipeptide_zwitterion": zwit and count == 2,
        "tripeptide_zwitterion": zwit and count == 3,
        "diketopiperazines_2_5": dkp,
        "emericellamide": charge == "Neutral" and count >= 5 and scaffold,
    }


def classify(mol: MolecularGraph, fragment_limit: int = DEFAULT_FRAGMENT_LIMIT) -> ClassificationOutcome:
    start = time.perf_counter()
    v = MolView.from_graph(mol)
    try:
        ra = analyse(v, fragment_limit)
    except FragmentLimitExceeded:
        return ClassificationOutcome.failure("fragment-limit", elapsed=time.perf_counter() - start)
    count = ra.residue_count
    scaffold = count >= 5 and has_emericellamide_scaffold(v, ra)
    labels = labels_from_facts(v.charge_class, count, has_dkp_ring(v), scaffold)
    residues = proteinogenic_residues(v, ra)
    return ClassificationOutcome(labels, count, residues, "algorithmic", "ok", None, time.perf_counter() - start)


@dataclass
class BatchSummary:
    """Associative aggregate over outcomes: label counts and failures."""

    total: int = 0
    label_counts: Counter = field(default_factory=Counter)
    failures: Counter = field(default_factory=Counter)

    def add(self, outcome: ClassificationOutcome) -> None:
        self.total += 1
        if outcome.ok:
            self.label_counts.update(k for k, v in outcome.labels.items() if v)
        else:
            self.failures[outcome.reason] += 1

    def merge(self, other: "BatchSummary") -> "BatchSummary":
        return BatchSummary(
            self.total + other.total,
            self.label_counts + other.label_counts,
            self.failures + other.failures,
        )

    @property
    def failure_count(self) -> int:
        return sum(self.failures.values())


def _classify_record(item, layer, options):
    rid, mol, *rest = item
    if isinstance(mol, MoleculeError):
        outcome = ClassificationOutcome.failure("parse", layer)
    elif layer == "algorithmic" and options is None:
        outcome = classify(mol)
    else:
        from .layers import LayerOptions, classify_layer
        outcome = classify_layer(mol, layer, options or LayerOptions())
    return (rid, outcome, *rest)


def _classify_chunk(chunk, layer, options):
    return [_classify_record(item, layer, options) for item in chunk]


class BatchRun:
    """Ordered outcome stream; ``summary`` is complete once iteration ends.

    Items are ``(id, graph or MoleculeError, *extra)`` and come back as
    ``(id, outcome, *extra)`` in input order. At most ``max_pending`` chunks
    are in flight, so the source is read only as fast as workers drain it.
    """

    def __init__(self, source: Iterable, workers: int = 1, fragment_limit: int = DEFAULT_FRAGMENT_LIMIT,
                 chunk_size: int = 64, max_pending: int | None = None, layer: str = "algorithmic",
                 options=None):
        if layer not in LAYERS:
            raise ValueError(f"unknown layer {layer!r}")
        if options is None and fragment_limit != DEFAULT_FRAGMENT_LIMIT:
            from .layers import LayerOptions
            options = LayerOptions(fragment_limit=fragment_limit)
        self.source = source
        self.workers = max(1, workers)
        self.layer = layer
        self.options = options
        self.chunk_size = chunk_size if layer == "algorithmic" else 1
        self.max_pending = max_pending or 4 * self.workers
        self.summary = BatchSummary()

    def _chunks(self):
        chunk = []
        for item in self.source:
            chunk.append(item)
            if len(chunk) >= self.chunk_size:
                yield chunk
                chunk = []
        if chunk:
            yield chunk

    def __iter__(self) -> Iterator[tuple]:
        if self.workers == 1:
            for item in self.source:
                out = _classify_record(item, self.layer, self.options)
                self.summary.add(out[1])
                yield out
            return
        with ProcessPoolExecutor(self.workers) as pool:
            pending: deque = deque()
            for chunk in self._chunks():
                pending.append(pool.submit(_classify_chunk, chunk, self.layer, self.options))
                if len(pending) >= self.max_pending:
                    yield from self._drain(pending.popleft())
            while pending:
                yield from self._drain(pending.popleft())

    def _drain(self, future):
        for out in future.result():
            self.summary.add(out[1])
            yield out


def classify_batch(source: Iterable, workers: int = 1, fragment_limit: int = DEFAULT_FRAGMENT_LIMIT,
                   layer: str = "algorithmic", options=None) -> BatchRun:
    return BatchRun(source, workers, fragment_limit, layer=layer, options=options)
