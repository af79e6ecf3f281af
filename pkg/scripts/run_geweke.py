"""Getting-it-right checks: prior-forward draws against the Gibbs chain.

    python3 scripts/run_geweke.py --kind czinb --iterations 100000
"""

import argparse
import time

from blocksampler.geweke import GewekeConfig, run_geweke


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--kind", choices=("zinb", "czinb", "zip", "all"), default="all")
    ap.add_argument("--iterations", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    kinds = ("zinb", "czinb", "zip") if args.kind == "all" else (args.kind,)
    for kind in kinds:
        t0 = time.perf_counter()
        z = run_geweke(kind, GewekeConfig(iterations=args.iterations, seed=args.seed))
        worst = max(abs(v) for v in z.values())
        print(f"{kind}: max |z| = {worst:.2f} over {len(z)} test functions ({time.perf_counter() - t0:.0f} s)")
        for name, val in z.items():
            print(f"  {name:<14} {val:+.2f}")


if __name__ == "__main__":
    main()
