"""Simulation study: ZINB-SBM vs ZIP-SBM on the two synthetic scenarios.

    python3 scripts/reproduce_sim.py            # desk scale, n=100, 10 replications
    python3 scripts/reproduce_sim.py --full     # n=150, 50 replications
"""

import sys

from blocksampler.cli import main

if __name__ == "__main__":
    sys.exit(main(["reproduce-sim", *sys.argv[1:]]))
