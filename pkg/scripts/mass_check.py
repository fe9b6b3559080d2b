"""Pullback mass lam^-n (f^n)^* omega ^ omega on P^2 for a zoo map, n = 1..n_max.

    python3 scripts/mass_check.py --map quad-a3 --grid 48 --n-max 4
"""

import argparse

from greenlab import grid_currents as gc
from greenlab import potentials as pt
from greenlab import spectral
from greenlab import surface_maps as sm
from greenlab import zoo


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--map", default="quad-a3")
    ap.add_argument("--grid", type=int, default=32)
    ap.add_argument("--n-max", type=int, default=4)
    args = ap.parse_args()
    e = zoo.get(args.map)
    nf = sm.NumericMap.from_map(e.map, e.numeric_params or None)
    data = pt.invariant_classes(e.map, e.inverse, e.numeric_params or None)
    degs = spectral.degree_sequence(e.map, args.n_max).scalars()
    print("n  expected  signed  clipped-positive  clipped  excluded-bound  seconds")
    for n in range(1, args.n_max + 1):
        expected = degs[n - 1] / data.lambda1**n
        poles = gc.iterated_indeterminacy(nf, data.I_plus, n)
        mc = gc.pullback_mass(nf, n, data.lambda1, expected, poles=poles, grid_n=args.grid)
        print(f"{n}  {expected:.4f}  {mc.signed:.4f}  {mc.included:.4f}  {mc.clipped:.4f}  "
              f"{mc.excluded_bound:.4f}  {mc.seconds:.1f}", flush=True)


if __name__ == "__main__":
    main()
