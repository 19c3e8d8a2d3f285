"""Batch I/O behind the command line: readers, row writers, layer alignment,
problem export and label statistics.

Output rows have a fixed column order (``COLUMNS``, versioned by
``OUTPUT_VERSION``). Inputs are streamed; SDF files are never read whole.
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
from dataclasses import dataclass, field
from itertools import islice
from typing import Callable, Iterable, Iterator, Optional, TextIO

from .classify import LAYERS, BatchRun, ClassificationOutcome
from .layers import LayerOptions, classify_layer
from .mol import MoleculeError, parse_smiles
from .sdf import read_sdf
from .theory import CLASS_LABELS, theory

OUTPUT_VERSION = 1
COLUMNS = ("id", "smiles", *CLASS_LABELS, "residue_count", "proteinogenic", "status", "elapsed")
FORMATS = ("smiles", "sdf")
# most expressive first; alignment compares every layer against the first requested one
EXPRESSIVENESS = ("mona", "qbf", "fol", "algorithmic")


class HarnessError(Exception):
    """An I/O-level problem: unreadable input, unknown format and the like."""


# ---- input ----

def guess_format(path: str) -> str:
    return "sdf" if path.lower().endswith((".sdf", ".sd", ".mol")) else "smiles"


def read_smiles_lines(lines: Iterable[str]) -> Iterator[tuple]:
    """``SMILES [id]`` per line; blank lines and ``#`` comments are skipped.

    Records without an id are named ``line-N``.
    """
    for n, line in enumerate(lines, start=1):
        text = line.strip()
        if not text or text.startswith("#"):
            continue
        parts = text.split(None, 1)
        smiles = parts[0]
        rid = parts[1].strip() if len(parts) > 1 else f"line-{n}"
        try:
            yield rid, parse_smiles(smiles), smiles
        except MoleculeError as exc:
            yield rid, exc, smiles


def read_records(paths, fmt: Optional[str] = None, skip: int = 0) -> Iterator[tuple]:
    """Stream ``(id, graph or MoleculeError, smiles echo)`` over all inputs."""
    if fmt is not None and fmt not in FORMATS:
        raise HarnessError(f"unknown format {fmt!r}; expected smiles or sdf")
    for path in paths:
        if not os.path.isfile(path) or not os.access(path, os.R_OK):
            raise HarnessError(f"cannot read {path}")

    def gen():
        for path in paths:
            kind = fmt or guess_format(path)
            try:
                if kind == "sdf":
                    with open(path, "rb") as fh:
                        for rid, mol in read_sdf(fh):
                            yield rid, mol, ""
                else:
                    with open(path, encoding="utf-8", errors="replace") as fh:
                        yield from read_smiles_lines(fh)
            except OSError as exc:
                raise HarnessError(f"cannot read {path}: {exc.strerror}") from None

    return islice(gen(), skip, None)


# ---- output rows ----

def proteinogenic_text(counts) -> str:
    return ",".join(f"{name}:{n}" for name, n in sorted(counts.items()))


def outcome_row(rid: str, smiles: str, outcome: ClassificationOutcome, timing: bool = True) -> dict:
    row = {"id": rid, "smiles": smiles}
    for label in CLASS_LABELS:
        row[label] = bool(outcome.labels.get(label, False))
    row["residue_count"] = outcome.residue_count
    row["proteinogenic"] = proteinogenic_text(outcome.proteinogenic)
    row["status"] = outcome.status_text
    if timing:
        row["elapsed"] = round(outcome.elapsed, 6)
    return row


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value).replace("\t", " ").replace("\n", " ")


class RowWriter:
    def __init__(self, out: TextIO, fmt: str = "tsv", timing: bool = True):
        if fmt not in ("tsv", "jsonl"):
            raise HarnessError(f"unknown output format {fmt!r}; expected tsv or jsonl")
        self.out = out
        self.fmt = fmt
        self.columns = COLUMNS if timing else COLUMNS[:-1]
        self.timing = timing
        if fmt == "tsv":
            out.write("\t".join(self.columns) + "\n")

    def write(self, rid, smiles, outcome):
        row = outcome_row(rid, smiles, outcome, self.timing)
        if self.fmt == "tsv":
            self.out.write("\t".join(_cell(row[c]) for c in self.columns) + "\n")
        else:
            self.out.write(json.dumps(row, sort_keys=False) + "\n")


def run_classify(paths, out: TextIO, fmt: Optional[str] = None, layer: str = "algorithmic",
                 options: Optional[LayerOptions] = None, workers: int = 1, output_format: str = "tsv",
                 timing: bool = True, skip: int = 0) -> BatchRun:
    """Classify every record into ``out``; returns the finished run for its summary."""
    records = read_records(paths, fmt, skip)
    run = BatchRun(records, workers, layer=layer, options=options)
    writer = RowWriter(out, output_format, timing)
    for rid, outcome, smiles in run:
        writer.write(rid, smiles, outcome)
    return run


# ---- alignment ----

@dataclass
class LayerStats:
    failure_rate: float = 0.0
    mean_time: float = 0.0
    disagreements: list = field(default_factory=list)  # (id, reference labels, layer labels)
    failures: dict = field(default_factory=dict)


@dataclass
class AlignmentReport:
    reference: str
    layers: dict  # layer -> LayerStats
    corpus_size: int

    @property
    def aligned(self) -> bool:
        return all(not s.disagreements for s in self.layers.values())

    def table(self) -> str:
        head = ("Layer", "Failure rate", f"Different to {self.reference}", "Time/molecule (s)")
        rows = [head]
        for name, s in self.layers.items():
            diff = "-" if name == self.reference else str(len(s.disagreements))
            rows.append((name, f"{100 * s.failure_rate:.1f}%", diff, f"{s.mean_time:.4f}"))
        widths = [max(len(r[i]) for r in rows) for i in range(len(head))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        lines.append(f"molecules: {self.corpus_size}; aligned: {'yes' if self.aligned else 'no'}")
        for name, s in self.layers.items():
            for rid, ref, got in s.disagreements:
                changed = sorted(k for k in CLASS_LABELS if ref.get(k) != got.get(k))
                lines.append(f"  {name} differs on {rid}: {', '.join(changed)}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        return {
            "reference": self.reference,
            "corpus_size": self.corpus_size,
            "aligned": self.aligned,
            "layers": {
                name: {
                    "failure_rate": s.failure_rate,
                    "mean_time": s.mean_time,
                    "failures": s.failures,
                    "disagreements": [{"id": rid, "reference": ref, "layer": got}
                                      for rid, ref, got in s.disagreements],
                }
                for name, s in self.layers.items()
            },
        }


def align(records: Iterable, layers, options: LayerOptions = LayerOptions(),
          classifiers: Optional[dict] = None) -> AlignmentReport:
    """Run every layer on every record and compare labels where both are ok.

    ``classifiers`` may replace a layer's classification function.
    """
    layers = list(dict.fromkeys(layers))
    if len(layers) < 2:
        raise ValueError("alignment needs at least two layers")
    for name in layers:
        if name not in LAYERS:
            raise ValueError(f"unknown layer {name!r}")
    ordered = sorted(layers, key=EXPRESSIVENESS.index)
    reference = ordered[0]
    classifiers = classifiers or {}
    fns: dict[str, Callable] = {
        name: classifiers.get(name, lambda mol, _n=name: classify_layer(mol, _n, options)) for name in ordered
    }
    totals = {name: [0, 0.0, {}] for name in ordered}  # failures, time, reasons
    stats = {name: LayerStats() for name in ordered}
    n = 0
    for rid, mol, *_ in records:
        n += 1
        outcomes = {}
        for name in ordered:
            if isinstance(mol, MoleculeError):
                o = ClassificationOutcome.failure("parse", name)
            else:
                o = fns[name](mol)
            outcomes[name] = o
            t = totals[name]
            t[1] += o.elapsed
            if not o.ok:
                t[0] += 1
                t[2][o.reason] = t[2].get(o.reason, 0) + 1
        ref = outcomes[reference]
        for name in ordered[1:]:
            o = outcomes[name]
            if ref.ok and o.ok and ref.labels != o.labels:
                stats[name].disagreements.append((rid, dict(ref.labels), dict(o.labels)))
    for name in ordered:
        failures, elapsed, reasons = totals[name]
        stats[name].failure_rate = failures / n if n else 0.0
        stats[name].mean_time = elapsed / n if n else 0.0
        stats[name].failures = dict(sorted(reasons.items()))
    return AlignmentReport(reference, stats, n)


# ---- problem export ----

def emit_targets() -> tuple:
    """Names accepted by ``emit_problems``: the class labels, then theory entries."""
    return (*CLASS_LABELS, *(e.name for e in theory()))


def _goal(name: str, target: str):
    from .logic.ast import Exists, Pred, SetVar

    cat = theory()
    if name in CLASS_LABELS:
        name = cat.class_name(name)
    if name not in cat.entries:
        raise KeyError(name)
    params = cat[name].params
    goal = Pred(name, tuple(params))
    # atom parameters are closed existentially; MONA keeps set parameters free
    for p in reversed(params):
        if target == "qdimacs" or not isinstance(p, SetVar):
            goal = Exists(p, goal)
    return goal


def safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", text).strip("._") or "mol"


def problem_bytes(mol, name: str, target: str, fold: bool = True, scoping: bool = True) -> bytes:
    from .structure import to_fol_structure

    goal = _goal(name, target)
    structure = to_fol_structure(mol)
    cat = theory()
    if target == "qdimacs":
        from .qbf import emit_qdimacs, ground, tseitin

        return emit_qdimacs(tseitin(ground(cat.msol.expand(goal), structure, fold=fold, scoping=scoping)))
    if target == "mona":
        from .mona import emit_mona

        return emit_mona(goal, structure, cat.msol)
    raise ValueError(f"unknown target {target!r}; expected qdimacs or mona")


def emit_problems(records: Iterable, target: str, name: str, outdir: str,
                  fold: bool = True, scoping: bool = True) -> list:
    """Write one problem file per molecule; names are ``NNNNNN_<id>_<name>.<ext>``.

    Records that fail to parse are skipped and reported in the returned list
    as ``(id, None)``.
    """
    if name not in emit_targets():
        raise KeyError(name)
    ext = {"qdimacs": "qdimacs", "mona": "mona"}.get(target)
    if ext is None:
        raise ValueError(f"unknown target {target!r}; expected qdimacs or mona")
    os.makedirs(outdir, exist_ok=True)
    written = []
    for k, (rid, mol, *_) in enumerate(records, start=1):
        if isinstance(mol, MoleculeError):
            written.append((rid, None))
            continue
        path = os.path.join(outdir, f"{k:06d}_{safe_name(rid)}_{name}.{ext}")
        with open(path, "wb") as fh:
            fh.write(problem_bytes(mol, name, target, fold, scoping))
        written.append((rid, path))
    return written


# ---- statistics over classification output ----

_STATUS = re.compile(r"^(ok|failure\((.+)\))$")


@dataclass
class StatsReport:
    total: int = 0
    ok: int = 0
    counts: dict = field(default_factory=lambda: {k: 0 for k in CLASS_LABELS})
    failures: dict = field(default_factory=dict)
    overlap: dict = field(default_factory=lambda: {a: {b: 0 for b in CLASS_LABELS} for a in CLASS_LABELS})
    malformed: list = field(default_factory=list)  # (line number, message)

    def add(self, labels: dict, status: str):
        self.total += 1
        m = _STATUS.match(status)
        if m.group(2) is not None:
            self.failures[m.group(2)] = self.failures.get(m.group(2), 0) + 1
            return
        self.ok += 1
        on = [k for k in CLASS_LABELS if labels[k]]
        for a in on:
            self.counts[a] += 1
            for b in on:
                self.overlap[a][b] += 1

    def text(self) -> str:
        width = max(len(k) for k in CLASS_LABELS)
        top = max(self.counts.values()) or 1
        lines = [f"molecules: {self.total} (ok {self.ok}, failed {self.total - self.ok})"]
        for k in CLASS_LABELS:
            bar = "#" * round(40 * self.counts[k] / top)
            lines.append(f"{k.ljust(width)}  {self.counts[k]:>8}  {bar}".rstrip())
        for reason, n in sorted(self.failures.items()):
            lines.append(f"failure({reason}): {n}")
        for line, msg in self.malformed:
            lines.append(f"malformed row at line {line}: {msg}")
        return "\n".join(lines) + "\n"

    def histogram_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", "count"])
        for k in CLASS_LABELS:
            w.writerow([k, self.counts[k]])
        for reason, n in sorted(self.failures.items()):
            w.writerow([f"failure({reason})", n])
        return buf.getvalue()

    def overlap_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["label", *CLASS_LABELS])
        for a in CLASS_LABELS:
            w.writerow([a, *(self.overlap[a][b] for b in CLASS_LABELS)])
        return buf.getvalue()


_TRUE = {"1": True, "true": True, "0": False, "false": False}


def _parse_row(row: dict) -> tuple:
    labels = {}
    for k in CLASS_LABELS:
        v = row.get(k)
        if isinstance(v, bool):
            labels[k] = v
        elif isinstance(v, str) and v.lower() in _TRUE:
            labels[k] = _TRUE[v.lower()]
        else:
            raise ValueError(f"bad value {v!r} for {k}")
    status = row.get("status")
    if not isinstance(status, str) or not _STATUS.match(status):
        raise ValueError(f"bad status {status!r}")
    return labels, status


def read_stats(lines: Iterable[str]) -> StatsReport:
    """Aggregate a TSV or JSONL classification file, flagging bad rows."""
    report = StatsReport()
    header = None
    for n, line in enumerate(lines, start=1):
        text = line.rstrip("\r\n")
        if not text.strip():
            continue
        if text.lstrip().startswith("{"):
            try:
                row = json.loads(text)
                if not isinstance(row, dict):
                    raise ValueError("not an object")
                labels, status = _parse_row(row)
            except ValueError as exc:
                report.malformed.append((n, str(exc)))
                continue
            report.add(labels, status)
            continue
        cells = text.split("\t")
        if header is None:
            missing = [c for c in (*CLASS_LABELS, "status") if c not in cells]
            if missing:
                report.malformed.append((n, f"header lacks {', '.join(missing)}"))
                return report
            header = cells
            continue
        if len(cells) != len(header):
            report.malformed.append((n, f"expected {len(header)} fields, found {len(cells)}"))
            continue
        try:
            labels, status = _parse_row(dict(zip(header, cells)))
        except ValueError as exc:
            report.malformed.append((n, str(exc)))
            continue
        report.add(labels, status)
    return report
