"""Heads probability of the classical flip as the launch density widens."""

import argparse
import math

from pilotwave.classicalflip import LaunchDensity, heads_probability


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--v", type=float, default=2.4)
    ap.add_argument("--turns", type=int, default=18, help="whole turns at the density centre")
    ap.add_argument("--v-sd", type=float, default=0.01)
    ap.add_argument("--omega-sd", type=float, default=1.0)
    ap.add_argument("--scales", default="1,2,4,8,16")
    args = ap.parse_args()

    omega = 2 * math.pi * args.turns * 9.81 / (2 * args.v)
    base = LaunchDensity(args.v, args.v_sd, omega, args.omega_sd)
    print(f"centre v={args.v} omega={omega:.3f} (deep in a heads band)")
    for s in (float(x) for x in args.scales.split(",")):
        d = base.scaled(s)
        print(f"sd x{s:<4g} bands={d.bands_crossed():6.2f} P(heads)={heads_probability(d):.6f}")


if __name__ == "__main__":
    main()
