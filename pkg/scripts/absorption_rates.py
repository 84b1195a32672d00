"""Convergence of bounded-B absorption far past n = 2^12.

Prints both error tracks and n * error, which levels off when the decay is O(1/n).
"""
import argparse

from sectorial.absorption import projection_thm_4_1, verify_absorption
from sectorial.generators import random_bounded_absorption, rng_for


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--problems", type=int, default=5)
    ap.add_argument("--d", type=int, default=4)
    ap.add_argument("--max-exp", type=int, default=24)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = rng_for(args.seed)
    schedule = [2 ** k for k in range(0, args.max_exp + 1, 2)]
    print("problem,n,err_resolvent,err_product,n*err_resolvent,n*err_product")
    for i in range(args.problems):
        p, _ = random_bounded_absorption(rng, args.d)
        rep = verify_absorption(p, projection_thm_4_1(p), 1.0, schedule)
        for n, _, er, ep in rep.rows():
            print(f"{i},{n},{er:.3e},{ep:.3e},{n * er:.3e},{n * ep:.3e}")
        print(f"# problem {i}: fitted rates {rep.resolvent.fitted_rate:.3f} / {rep.product.fitted_rate:.3f}")


if __name__ == "__main__":
    main()
