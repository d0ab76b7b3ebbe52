"""Empirical cellwise breakdown of four location estimators (n=100, d=4, cells set to 500).

Usage: python3 repro/fig3.py [out_dir] [reps]
Writes fig3.csv, fig3.svg and fig3.json to out_dir (default: repro/out).
"""

import os
import sys

from cellwise.cli import run

out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "out")
reps = sys.argv[2] if len(sys.argv) > 2 else "200"
code = run(["repro", "fig3", "--out-dir", out, "--reps", reps, "--seed", "0"])
if code == 0:
    with open(os.path.join(out, "fig3.json")) as fh:
        print(fh.read())
sys.exit(code)
