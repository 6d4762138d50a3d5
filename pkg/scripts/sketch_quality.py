#!/usr/bin/env python3
"""Sweep the sketch size and report basis quality on random constraint sums.

For each grid point p this draws fresh instances, builds the sampled
basis, and measures against the dense reference: the relative
projection residual ||A V V* - A||_F / ||A||_F, the orthonormality
defect ||V* V - I||_F, and the retained basis size.  Useful for picking
an operating point before committing to a long solver run.

Example:
    python3 scripts/sketch_quality.py --n 64 --grid 100 300 900 --trials 20
"""
from __future__ import annotations

import argparse

import numpy as np

from sdpsketch.instances import random_matrix_sum
from sdpsketch.oracle import dense_basis, dense_realize
from sdpsketch.rng import substream
from sdpsketch.sketch import SketchParams, build_sketch


def measure(n, tau, rank, p, gamma, trials, seed):
    proj, iso, kept = [], [], []
    for t in range(trials):
        ms = random_matrix_sum(n, tau=tau, rank=rank, rng=substream(seed, t, 1))
        a = dense_realize(ms)
        v = build_sketch(ms, SketchParams(p=p, gamma=gamma), substream(seed, t, 2, p))
        vd = dense_basis(v)
        proj.append(float(np.linalg.norm(a @ vd @ vd.conj().T - a) / np.linalg.norm(a)))
        iso.append(float(np.linalg.norm(vd.conj().T @ vd - np.eye(v.r_tilde))))
        kept.append(v.r_tilde)
    return np.median(proj), np.median(iso), np.median(kept)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=64, help="matrix dimension")
    ap.add_argument("--tau", type=int, default=2, help="number of summands")
    ap.add_argument("--rank", type=int, default=2, help="rank of each summand")
    ap.add_argument("--grid", type=int, nargs="+", default=[100, 200, 400, 800])
    ap.add_argument("--gamma", type=float, default=1e-4, help="singular-value filter")
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    print(f"n={args.n} tau={args.tau} rank={args.rank} gamma={args.gamma:g} "
          f"trials={args.trials} seed={args.seed}")
    print(f"{'p':>6}  {'proj residual':>14}  {'orthonormality':>14}  {'kept':>5}")
    for p in args.grid:
        mp, mi, mk = measure(
            args.n, args.tau, args.rank, p, args.gamma, args.trials, args.seed
        )
        print(f"{p:>6}  {mp:>14.4f}  {mi:>14.4f}  {mk:>5.0f}")


if __name__ == "__main__":
    main()
