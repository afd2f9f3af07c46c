#!/usr/bin/env python3
"""Run the exploratory configuration and print the headline diagnostics.

The field here is numerically visible (amplitude 0.05), so this is the run
to look at for the damping diagnostics: the fitted decay rate, the weak
homogenization gaps, and the reported (not guaranteed) contraction factor.
"""

import json
import sys
from pathlib import Path

from vpme_scatter.cli import main

ROOT = Path(__file__).resolve().parent.parent


def run(out_dir: str = "out/exploratory") -> int:
    config = ROOT / "configs" / "exploratory.yaml"
    status = main(["run", str(config), "--out", out_dir])
    if status != 0:
        return status
    manifest = json.loads((Path(out_dir) / "manifest.json").read_text())
    print(f"decay rate: {manifest['decay_rate']:.4f}")
    print(f"envelope 16 a1 e^(-a t): {'pass' if manifest['envelope_pass'] else 'fail'}")
    print(f"outputs in {out_dir}/")
    return 0


if __name__ == "__main__":
    sys.exit(run(*sys.argv[1:]))
