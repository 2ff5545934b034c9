#!/usr/bin/env python3
"""Wiggliness size-scaling study: GOE baseline by default, or the u(3)
model with --config configs/... overrides.  The GOE run at the default
sizes takes a few minutes; u(3) at N up to 100 takes hours."""

import os
import sys

from otoclab.cli import main

HERE = os.path.dirname(os.path.abspath(__file__))
CONFIG = os.path.join(HERE, "..", "configs", "scaling_goe.json")

if __name__ == "__main__":
    sys.exit(main(["scaling", "--config", CONFIG] + sys.argv[1:]))
