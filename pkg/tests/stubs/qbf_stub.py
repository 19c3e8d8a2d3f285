"""Stand-in for an external QBF solver or preprocessor.

Reads QDIMACS from the path in argv[1] (or stdin) and answers with the
built-in solver. STUB_MODE selects odd behaviour: sleep, garbage, sline,
copy (act as a preprocessor).
"""

import os
import sys
import time

from peplogic.qbf import naive_solve, parse_qdimacs

mode = os.environ.get("STUB_MODE", "exit")
data = open(sys.argv[1], "rb").read() if len(sys.argv) > 1 else sys.stdin.buffer.read()
if mode == "sleep":
    time.sleep(30)
if mode == "garbage":
    print("no idea")
    sys.exit(0)
if mode == "copy":
    sys.stdout.buffer.write(data)
    sys.exit(0)
sat = naive_solve(parse_qdimacs(data), variable_cap=10**9).sat
if mode == "sline":
    print("c stub")
    print(f"s cnf {1 if sat else 0}")
    sys.exit(0)
sys.exit(10 if sat else 20)
