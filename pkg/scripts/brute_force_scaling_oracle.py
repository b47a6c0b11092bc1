#!/usr/bin/env python3
"""Brute-force cross-check of the conditioning-vs-delays scaling, written
against plain numpy only (no package imports) so it stays an independent
oracle for the vectorized library path.

Every trajectory matrix is built by literal repeated application of the
inverted shift matrix, every pair is scanned one by one, and eps is the
worst |ratio - 1| per draw. Expect a log-log slope of median eps against M
near -1/2 and strictly decreasing medians.

Usage: python scripts/brute_force_scaling_oracle.py [--draws 200] [--seed 7]
"""

import argparse
import itertools

import numpy as np

N = 256
M_LIST = [8, 16, 32, 64]


def shift_matrix(n):
    phi = np.zeros((n, n))
    for i in range(n - 1):
        phi[i, i + 1] = 1.0
    phi[n - 1, 0] = 1.0
    return phi


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--draws", type=int, default=200)
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    phi_inv = np.linalg.inv(shift_matrix(N))
    samples = [np.eye(N)[i] for i in range(N)]

    medians = []
    for m in M_LIST:
        gs = []
        for x in samples:
            rows = []
            cur = x.copy()
            for _ in range(m):
                rows.append(cur.copy())
                cur = phi_inv @ cur
            gs.append(np.array(rows))

        pairs = list(itertools.combinations(range(N), 2))
        denominators = np.array([np.sum((gs[i] - gs[j]) ** 2) for i, j in pairs])

        rng = np.random.default_rng(args.seed)
        eps_per_draw = []
        for _ in range(args.draws):
            alpha = rng.integers(0, 2, N) * 2.0 - 1.0
            numerators = np.array(
                [np.sum(((gs[i] - gs[j]) @ alpha) ** 2) for i, j in pairs]
            )
            eps_per_draw.append(np.max(np.abs(numerators / denominators - 1.0)))
        medians.append(float(np.median(eps_per_draw)))
        print(
            f"M={m:3d}  median eps={medians[-1]:.4f}  "
            f"q05={np.quantile(eps_per_draw, 0.05):.4f}  "
            f"q95={np.quantile(eps_per_draw, 0.95):.4f}  "
            f"max={np.max(eps_per_draw):.4f}"
        )

    slope, _ = np.polyfit(np.log(M_LIST), np.log(medians), 1)
    print(f"fitted slope = {slope:.4f}")
    print(f"medians strictly decreasing: {all(np.diff(medians) < 0)}")


if __name__ == "__main__":
    main()
