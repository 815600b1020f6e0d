"""Block frequencies of binary Champernowne prefixes against the 3-sigma band.

Concatenated binary numerals all start with a 1, so the ones-frequency of a
prefix converges to 1/2 only like 1/log2(N).  This prints how far the k=1
frequency sits from 1/2 in units of the disjoint-block threshold.
"""

import argparse

from pilotwave.randomness import borel_normality
from pilotwave.sampling import champernowne_prefix


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lengths", default="2000,10000,100000,1000000")
    ap.add_argument("--k-max", type=int, default=4)
    args = ap.parse_args()

    for n in (int(x) for x in args.lengths.split(",")):
        results = borel_normality(champernowne_prefix(2, n), args.k_max)
        r1 = results[0]
        p1 = r1.counts["1"] / r1.n_blocks
        z = abs(p1 - 0.5) / (r1.threshold / 3)
        passed = "".join("P" if r.passed else "F" for r in results)
        print(f"N={n:>8d} ones={p1:.5f} z={z:6.1f} k=1..{args.k_max}: {passed}")


if __name__ == "__main__":
    main()
