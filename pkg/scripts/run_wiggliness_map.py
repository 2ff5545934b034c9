#!/usr/bin/env python3
"""Full wiggliness-versus-regularity comparison at N=60: OTOC scan over all
1891 eigenstates plus the classical regularity curve at the same couplings.
Expect roughly an hour on a single core."""

import json
import os
import sys
import tempfile

from otoclab.cli import main

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIG = os.path.join(HERE, "..", "configs", "wiggliness_n60.json")

if __name__ == "__main__":
    args = sys.argv[1:]
    rc = main(["otoc", "--config", CONFIG] + args)
    if rc != 0:
        sys.exit(rc)
    # classical curve over the same energy span
    cfg = json.load(open(CONFIG))
    cfg["classical"] = {
        "xi_values": [cfg["model"]["xi"]],
        "epsilon": cfg["model"]["epsilon"],
        "energies": [round(-0.5 + 0.05 * k, 2) for k in range(23)],
        "n_cells": 60,
        "budget": 200,
        "traj_time": 1e4,
    }
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump(cfg, fh)
        tmp = fh.name
    try:
        sys.exit(main(["classical", "--config", tmp] + args))
    finally:
        os.unlink(tmp)
