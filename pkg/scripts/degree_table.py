"""Degree sequences, dynamical degree estimates and 1-stability verdicts across the zoo.

    python3 scripts/degree_table.py --N 6
"""

import argparse

from greenlab import spectral
from greenlab import zoo


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--N", type=int, default=6)
    ap.add_argument("--skip", nargs="*", default=["secant-z3mz"], help="ids to leave out (slow exact sequences)")
    args = ap.parse_args()
    for eid in zoo.ids():
        if eid in args.skip:
            continue
        e = zoo.get(eid)
        rep = spectral.check_one_stability(e.map, N=args.N, params=e.numeric_params or None)
        print(f"{eid:20s} {str([d[0][0] if len(d) == 1 else d for d in rep.degrees]):40s} lambda1={rep.lambda1:.6g} "
              f"({rep.lambda1_method}) {rep.verdict}", flush=True)


if __name__ == "__main__":
    main()
