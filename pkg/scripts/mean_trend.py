"""Dyadic trend of the mean path length toward its n log n / H growth.

Prints H nu(n) / (n log n) along powers of two together with the increment
statistic of the deviation table f(n) = nu(n) - n log n / H, whose flatness
is what makes the second-order constant visible in variance fits.
"""

import argparse
import math

from trielab.exact_moments import compute_moment_table, error_term_table, mean_for_initial
from trielab.markov_source import MarkovChain, entropy_rate


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mu0", type=float, default=0.5)
    ap.add_argument("--p00", type=float, default=0.6)
    ap.add_argument("--p11", type=float, default=0.7)
    ap.add_argument("--n-max", type=int, default=8192)
    args = ap.parse_args()

    chain = MarkovChain(args.mu0, args.p00, args.p11)
    H, H0, H1 = entropy_rate(chain)
    table = compute_moment_table(chain, args.n_max)
    print(f"entropy rate H = {H:.6f} (per-state {H0:.6f}, {H1:.6f})")
    print(f"{'n':>8} {'nu(n)':>14} {'H nu/(n ln n)':>14}")
    k = 7
    while 2**k <= args.n_max:
        n = 2**k
        nu = mean_for_initial(chain, table, n)
        print(f"{n:>8} {nu:>14.2f} {H * nu / (n * math.log(n)):>14.6f}")
        k += 1
    if chain.is_asymmetric:
        err = error_term_table(chain, table, H)
        lo, hi = 64, min(4096, args.n_max)
        print(f"max one-step increment of f on [{lo}, {hi}]: "
              f"{err.window_max_increment(lo, hi):.4f}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
