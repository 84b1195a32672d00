"""Strong resolvent errors of random form series per tail rule.

For the constant tail the error scales like 1/(n beta), beta the smallest
nonzero eigenvalue of Re b_N on D(a_N); the last column prints n * beta * error.
"""
import argparse

import numpy as np

from sectorial.forms import hermitian_parts, restrict
from sectorial.generators import TAILS, make_tail, random_sequence, rng_for
from sectorial.series import limit_graph_and_convergence


def smallest_gap(seq) -> float:
    aN = seq.head_sum
    w = np.linalg.eigvalsh(hermitian_parts(restrict(seq.head[-1], aN.domain).matrix)[0])
    w = w[w > 1e-10 * max(np.abs(w).max(initial=0.0), 1e-300)]
    return float(w.min()) if w.size else float("nan")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--max-exp", type=int, default=16)
    args = ap.parse_args()
    rng = rng_for(args.seed)
    schedule = [2 ** k for k in range(0, args.max_exp + 1, 2)]
    print("tail,instance,n,error,n*beta*error")
    for tail in TAILS:
        for i in range(args.count):
            d = int(rng.integers(2, 9))
            seq = random_sequence(rng, d, int(rng.integers(1, 6)), make_tail(tail))
            beta = smallest_gap(seq)
            _, rep = limit_graph_and_convergence(seq, schedule)
            for n, e in zip(rep.schedule, rep.errors):
                print(f"{tail},{i},{n},{e:.3e},{n * beta * e:.3e}")


if __name__ == "__main__":
    main()
