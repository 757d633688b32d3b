"""Posterior mean and variance of a conditioned Gaussian random walk.

Writes ``walk_posterior.csv`` with one row per time step, for the walk
with no observations and with observations pinned at a few steps.

    python3 scripts/walk_figure.py [--n 100] [--out walk_posterior.csv]
"""

import argparse
import csv

import numpy as np

from exactcond.cli import walk_posterior

OBS = {20: 1.5, 40: -1.0, 60: 0.5, 80: 2.0}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--out", default="walk_posterior.csv")
    args = ap.parse_args()
    obs = {j: v for j, v in OBS.items() if j < args.n}
    prior, post = walk_posterior(args.n, {}), walk_posterior(args.n, obs)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["i", "prior_mean", "prior_var", "post_mean", "post_var", "observed"])
        for i in range(args.n):
            w.writerow([i, prior.b[i], prior.cov[i, i], post.b[i], post.cov[i, i], obs.get(i, "")])
    sd = np.sqrt(np.clip(np.diag(post.cov), 0, None))
    print(f"wrote {args.out}; max posterior sd {sd.max():.3f} at step {int(sd.argmax())}")
    for j, v in obs.items():
        print(f"  step {j}: mean {post.b[j]:+.6f} (observed {v:+.2f}), variance {post.cov[j, j]:.1e}")


if __name__ == "__main__":
    main()
