"""DDC detection quality on the rho = -0.9 recipe (n=1000, d=10, 10% of cells set to 5).

Usage: python3 repro/table1_detect.py [out_dir]
"""

import json
import os
import sys

from cellwise.cli import run

out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "out")
code = run(["repro", "table1-detect", "--out-dir", out, "--reps", "10", "--seed", "0"])
if code == 0:
    with open(os.path.join(out, "table1_detect.json")) as fh:
        res = json.load(fh)["result"]
    print(f"recall {res['recall_mean']:.4f}  false-positive rate {res['fpr_mean']:.4f}")
sys.exit(code)
