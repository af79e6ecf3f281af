"""Missing-link prediction: CZINB-SBM vs covariate-free ZINB-SBM.

Uses --adjacency/--covariates when given, otherwise a synthetic CZINB network.

    python3 scripts/reproduce_linkpred.py --replications 10
"""

import sys

from blocksampler.cli import main

if __name__ == "__main__":
    sys.exit(main(["reproduce-linkpred", *sys.argv[1:]]))
