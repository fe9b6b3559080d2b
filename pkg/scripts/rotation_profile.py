"""Spherical means m-(t) around I+ for a rotation-family map against the Diophantine model.

    python3 scripts/rotation_profile.py --map quad-golden --theta golden
"""

import argparse

import numpy as np

from greenlab import diophantine as dp
from greenlab import energy as en
from greenlab import potentials as pt
from greenlab import zoo


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--map", default="quad-golden")
    ap.add_argument("--theta", default="golden")
    ap.add_argument("--t-min", type=float, default=-15.0)
    ap.add_argument("--t-max", type=float, default=-3.0)
    ap.add_argument("--dirs", type=int, default=256)
    args = ap.parse_args()
    e = zoo.get(args.map)
    data = pt.invariant_classes(e.map, e.inverse)
    ts = np.linspace(args.t_min, args.t_max, 25)
    meas = en.spherical_mean(data, data.I_plus[0], ts, n_dirs=args.dirs)
    model = dict(dp.mean_profile_model(args.theta, data.lambda1, ts))
    c = np.mean(np.array(meas["mean"]) - np.array([model[float(t)] for t in ts]))
    print(f"fitted constant {c:.6f}")
    print("t  measured  model+c  clamped")
    for t, m, cl in zip(ts, meas["mean"], meas["clamped_fraction"]):
        print(f"{t:.2f}  {m:.6f}  {model[float(t)] + c:.6f}  {cl:.3f}")


if __name__ == "__main__":
    main()
