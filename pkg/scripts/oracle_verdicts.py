"""Toss the quantum coin with each oracle kind and print the randomness verdicts.

Deterministic oracles are refuted through the replay catalog entry; the
entropy oracle should come out consistent_with_randomness.
"""

import argparse

from pilotwave.cointoss import TossConfig, run_toss_sequence
from pilotwave.randomness import randomness_report
from pilotwave.sampling import ChampernowneOracle, ConstantOracle, EntropyOracle, PeriodicOracle, SeededPRNGOracle


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10_000)
    args = ap.parse_args()

    cfg = TossConfig()
    oracles = [
        ConstantOracle(0.3),
        PeriodicOracle("0110100"),
        ChampernowneOracle(10),
        SeededPRNGOracle(31337),
        EntropyOracle(),
    ]
    for oracle in oracles:
        seq = run_toss_sequence(cfg, oracle, args.n)
        rep = randomness_report(seq.bits, replay=[(cfg, seq.oracle)])
        kinds = sorted({w["test"] for w in rep.witnesses})
        print(f"{oracle.kind:13s} ones={seq.bits.mean():.4f} ratio={rep.compression_ratio:.3f} {rep.verdict} {kinds}")


if __name__ == "__main__":
    main()
