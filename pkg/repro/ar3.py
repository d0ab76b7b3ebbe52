"""AR(3) with every 7th value set to 10: classical, two-step and pairwise fits over 20 seeds.

Usage: python3 repro/ar3.py [out_dir]
"""

import json
import os
import sys

from cellwise.cli import run

out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "out")
code = run(["repro", "ar3", "--out-dir", out, "--seeds", "20", "--seed", "0"])
if code == 0:
    with open(os.path.join(out, "ar3.json")) as fh:
        res = json.load(fh)["result"]
    print(f"design rows {res['design_rows']}, contaminated rows {res['contaminated_rows']}")
    for name, m in res["methods"].items():
        beta = ", ".join(f"{b:.3f}" for b in m["beta_mean"])
        print(f"{name:10s} beta = ({beta})  sigma = {m['sigma_mean']:.3f}")
sys.exit(code)
