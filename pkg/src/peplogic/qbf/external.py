"""Driving external QBF preprocessors and solvers as child processes."""

from __future__ import annotations

import os
import shlex
import subprocess
import tempfile
from dataclasses import dataclass

from .problem import QbfProblem, emit_qdimacs

SAT_EXIT = 10
UNSAT_EXIT = 20
SOLVER_ENV = "PEPLOGIC_QBF_SOLVER"
PREPROCESSOR_ENV = "PEPLOGIC_QBF_PREPROCESSOR"


@dataclass(frozen=True)
class ExternalResult:
    status: str  # "sat", "unsat" or "failure"
    reason: str = ""
    stdout: str = ""

    @property
    def sat(self):
        return {"sat": True, "unsat": False}.get(self.status)

    def __str__(self):
        return f"failure({self.reason})" if self.status == "failure" else self.status


def _command(template, path, timeout):
    if isinstance(template, str):
        template = shlex.split(template)
    secs = str(max(1, int(round(timeout)))) if timeout is not None else "0"
    return [t.replace("{input}", path).replace("{timeout}", secs) for t in template]


def _verdict(proc, exit_codes):
    status = exit_codes.get(proc.returncode)
    if status is not None:
        return status
    # fall back to the "s cnf 1/0" result line many solvers print
    for line in proc.stdout.splitlines():
        tok = line.split()
        if len(tok) >= 3 and tok[0] == "s" and tok[1] == "cnf":
            return {"1": "sat", "0": "unsat"}.get(tok[2])
    return None


def external_solve(q: QbfProblem, solver, preprocessor=None, timeout: float | None = 60.0,
                   exit_codes: dict | None = None) -> ExternalResult:
    """Solve ``q`` with an external binary.

    ``solver`` and ``preprocessor`` are command templates (string or argument
    list) where ``{input}`` is replaced by the QDIMACS path and ``{timeout}``
    by whole seconds. Without an ``{input}`` placeholder the file is read from
    standard input. The preprocessor must write QDIMACS to standard output.
    """
    codes = {SAT_EXIT: "sat", UNSAT_EXIT: "unsat"} if exit_codes is None else dict(exit_codes)
    data = emit_qdimacs(q)
    with tempfile.TemporaryDirectory(prefix="peplogic-") as tmp:
        path = os.path.join(tmp, "problem.qdimacs")
        with open(path, "wb") as fh:
            fh.write(data)
        try:
            if preprocessor:
                cmd = _command(preprocessor, path, timeout)
                pre = subprocess.run(cmd, input=None if "{input}" in str(preprocessor) else data,
                                     capture_output=True, timeout=timeout)
                decided = codes.get(pre.returncode)
                if decided is not None:
                    return ExternalResult(decided)
                if pre.returncode != 0:
                    return ExternalResult("failure", f"preprocessor exit {pre.returncode}")
                path = os.path.join(tmp, "preprocessed.qdimacs")
                with open(path, "wb") as fh:
                    fh.write(pre.stdout)
                data = pre.stdout
            cmd = _command(solver, path, timeout)
            proc = subprocess.run(cmd, input=None if "{input}" in str(solver) else data,
                                  capture_output=True, timeout=timeout)
        except subprocess.TimeoutExpired:
            return ExternalResult("failure", "timeout")
        except OSError:
            return ExternalResult("failure", "spawn")
    out = proc.stdout.decode("utf-8", "replace")
    status = _verdict(subprocess.CompletedProcess(proc.args, proc.returncode, out), codes)
    if status is None:
        return ExternalResult("failure", "unparseable", out)
    return ExternalResult(status, stdout=out)
