#!/usr/bin/env python3
"""Run the guaranteed-contraction configuration and check its guarantees.

In this regime (a^2 >= (200 a2 + 3)(e^6 + 1)) every contraction ratio must
be <= 1/2 and the weighted field norm must stay below 16 a1.  The script
exits nonzero if either guarantee is violated.
"""

import json
import sys
from pathlib import Path

from vpme_scatter.cli import main

ROOT = Path(__file__).resolve().parent.parent


def run(out_dir: str = "out/theorem") -> int:
    config = ROOT / "configs" / "theorem.yaml"
    status = main(["run", str(config), "--out", out_dir])
    if status != 0:
        return status
    manifest = json.loads((Path(out_dir) / "manifest.json").read_text())
    contraction = manifest["contraction_pass"]
    print(f"contraction ratios <= 1/2: {'pass' if contraction else 'fail'}")
    print(f"final weighted norm: {manifest['final_norm']:.6e} (bound 16 a1 = 43.2)")
    ok = bool(contraction) and manifest["final_norm"] <= 43.2
    print(f"outputs in {out_dir}/")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(run(*sys.argv[1:]))
