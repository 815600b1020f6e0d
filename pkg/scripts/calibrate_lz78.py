"""Regenerate tests/fixtures/lz78_calibration.json.

Measures the dictionary-compression ratio of fair random bits at a fixed
length over a batch of seeds and freezes a band of mean +- 20 sd (floored
at +-0.02) for the test suite.
"""

import argparse
import json
from pathlib import Path

import numpy as np

from pilotwave.randomness import lz78_bits

FIXTURE = Path(__file__).resolve().parents[1] / "tests" / "fixtures" / "lz78_calibration.json"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--out", type=Path, default=FIXTURE)
    args = ap.parse_args()

    ratios = np.array(
        [lz78_bits(np.random.default_rng(s).integers(0, 2, args.n)) / args.n for s in range(args.seeds)]
    )
    mean, sd = float(ratios.mean()), float(ratios.std(ddof=1))
    half = max(20 * sd, 0.02)
    out = {
        "n": args.n,
        "seeds": args.seeds,
        "mean": round(mean, 6),
        "sd": round(sd, 6),
        "band": [round(mean - half, 4), round(mean + half, 4)],
    }
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out))


if __name__ == "__main__":
    main()
