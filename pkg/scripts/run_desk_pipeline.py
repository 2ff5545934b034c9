#!/usr/bin/env python3
"""Desk-scale pipeline: OTOC scan at N=20 plus classical regularity probes,
driven by a single config file.  Finishes in a few minutes on one core."""

import os
import sys

from otoclab.cli import main

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIG = os.path.join(HERE, "..", "configs", "desk.json")

if __name__ == "__main__":
    args = sys.argv[1:]
    for command in ("spectrum", "otoc", "classical"):
        rc = main([command, "--config", CONFIG] + args)
        if rc != 0:
            sys.exit(rc)
