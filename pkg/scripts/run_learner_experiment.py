#!/usr/bin/env python3
"""Run tester-learner trials on a synthetic family and summarize.

Examples:
    python scripts/run_learner_experiment.py --marginal standard_gaussian \
        --noise massart --eta 0.1 --eps 0.05 --trials 20 --out results/massart
    python scripts/run_learner_experiment.py --marginal two_point_mass \
        --spread 10 --noise agnostic --eps 0.1 --trials 20 --out results/sound
"""

import argparse
import csv
import os
import sys
import time

import numpy as np

from halftest.distributions import (MarginalSpec, NoiseModel, empirical_error,
                                    label_dataset, sample_marginal)
from halftest.learner import LearnerConfig, SyntheticSource, \
    universal_tester_learner
from halftest.surrogate import PsgdConfig
from halftest.testers import TesterConfig


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--marginal", default="standard_gaussian")
    ap.add_argument("--dim", type=int, default=5)
    ap.add_argument("--spread", type=float, default=10.0)
    ap.add_argument("--nu", type=int, default=3)
    ap.add_argument("--noise", choices=["massart", "agnostic"], default="massart")
    ap.add_argument("--eta", type=float, default=0.1)
    ap.add_argument("--flip-width", type=float, default=0.06270677794321385)
    ap.add_argument("--eps", type=float, default=0.05)
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--iterations", type=int, default=400)
    ap.add_argument("--tester-lambda", type=float, default=3.0)
    ap.add_argument("--c1", type=float, default=3.0)
    ap.add_argument("--c-hyper", type=float, default=10.0)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", required=True)
    return ap.parse_args()


def main():
    args = parse_args()
    kwargs = {}
    if args.marginal == "two_point_mass":
        kwargs["spread"] = args.spread
    if args.marginal == "student_t":
        kwargs["nu"] = args.nu
    marginal = MarginalSpec(args.marginal, args.dim, **kwargs)
    w_star = np.zeros(args.dim)
    w_star[0] = 1.0
    if args.noise == "massart":
        noise = NoiseModel("massart", tuple(w_star), eta=args.eta)
        learner_noise = {"noise": "massart", "eta": args.eta}
    else:
        noise = NoiseModel("agnostic", tuple(w_star), rule="boundary_flip",
                           width=args.flip_width)
        learner_noise = {"noise": "agnostic"}
    cfg = LearnerConfig(
        lam=1.0, gamma=1.0, eps=args.eps,
        psgd=PsgdConfig(iterations=args.iterations, batch_size=None),
        tester=TesterConfig(lam=args.tester_lambda, gamma=1.0, delta=0.25,
                            c1=args.c1, c_hyper=args.c_hyper),
        n1=args.n, n2=args.n, **learner_noise)

    os.makedirs(args.out, exist_ok=True)
    rows = []
    for trial in range(args.trials):
        seed = args.seed + trial
        src = SyntheticSource(marginal, noise, seed=seed)
        t0 = time.time()
        out = universal_tester_learner(src, cfg, seed=seed)
        wall = time.time() - t0
        held_out = ""
        if out.accepted:
            pts = sample_marginal(marginal, args.n, seed=seed + 90_000,
                                  stream_id=55)
            ho = label_dataset(pts, noise, seed=seed + 90_000, stream_id=56)
            held_out = f"{empirical_error(out.w, ho):.5f}"
        rows.append([trial, int(out.accepted), out.stage,
                     "" if out.empirical_error is None
                     else f"{out.empirical_error:.5f}",
                     held_out,
                     "" if out.sigma_used is None else f"{out.sigma_used:.6g}",
                     f"{wall:.2f}"])
        with open(os.path.join(args.out, f"trial_{trial:03d}.json"), "w") as fh:
            fh.write(out.to_json())
        print(f"trial {trial}: {'accept' if out.accepted else 'reject'} "
              f"({out.stage}) {wall:.1f}s")
    with open(os.path.join(args.out, "aggregate.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trial", "accepted", "stage", "s2_error",
                         "held_out_error", "sigma", "wall_time"])
        writer.writerows(rows)
    accept_rate = sum(int(r[1]) for r in rows) / len(rows)
    print(f"accept rate: {accept_rate:.2f}  ({args.out}/aggregate.csv)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
