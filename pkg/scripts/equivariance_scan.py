"""KS distance between Born-sampled Bohmian ensembles and |psi_T|^2 as the ensemble grows."""

import argparse

from scipy import stats

from pilotwave.cointoss import TossConfig, coin_history, coin_sampler
from pilotwave.pilot import propagate_ensemble
from pilotwave.sampling import BornSampler, SeededPRNGOracle, sample_stream


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sizes", default="1000,3000,10000,30000")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = TossConfig()
    history = coin_history(cfg)
    final = BornSampler.from_wavefunction(history.wavefunction(-1))
    for n in (int(x) for x in args.sizes.split(",")):
        q0 = sample_stream(SeededPRNGOracle(args.seed), coin_sampler(cfg), n)
        ens = propagate_ensemble(history, q0)
        ks = stats.kstest(ens.positions, final.cdf).statistic
        print(f"n={n:>6d} KS={ks:.4f} 1.36/sqrt(n)={1.36 / n**0.5:.4f} flagged={int(ens.node_flags.sum())}")


if __name__ == "__main__":
    main()
