"""Stand-in for the MONA binary: prints a canned transcript chosen by MONA_STUB."""

import os
import sys
import time

TRANSCRIPTS = {
    "sat": "A satisfying example of least length (0) is:\nA = {}\n",
    "valid": "Formula is valid\n",
    "unsat": "Formula is unsatisfiable\n",
    "oom": "Error: out of memory\n",
    "garbage": "???\n",
}

mode = os.environ.get("MONA_STUB", "sat")
path = sys.argv[-1]
text = open(path).read()
if not text.startswith("ws2s;"):
    print("parse error")
    sys.exit(1)
if mode == "sleep":
    time.sleep(30)
if mode == "killed":
    os.kill(os.getpid(), 9)
sys.stdout.write(TRANSCRIPTS[mode])
