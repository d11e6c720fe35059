"""How often does ||X_t/t - mu||_inf exceed a tolerance with Pareto(alpha) legs?

Prints the simulated exceedance frequency over many seeds next to a
single-big-jump estimate: one leg of length > tol * t / |eta - mu| moves the
velocity by more than tol, and about t / E(T) legs are drawn, so

    P(fail) ~ (t / E T) * E_pi[ (|eta - mu|_inf / (tol t))^alpha ].

    python scripts/lln_failure_rate.py --seeds 400 --t 1e6 --tol 0.02
"""

import argparse

import numpy as np

from drwalk.directions import load_directions, stationary_distribution
from drwalk.limits import lln_error
from drwalk.rng import member_rng
from drwalk.walk import simulate
from drwalk.waiting import WaitingTimeModel

from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alpha", type=float, default=1.5)
    ap.add_argument("--t", type=float, default=1e6)
    ap.add_argument("--tol", type=float, default=0.02)
    ap.add_argument("--seeds", type=int, default=400)
    ap.add_argument("--master", type=int, default=7)
    args = ap.parse_args()
    dirs, kernel = load_directions(ROOT / "configs" / "reference_walk.json")
    law = stationary_distribution(kernel, dirs)
    model = WaitingTimeModel.pareto(args.alpha)
    dev = np.abs(dirs.vectors - law.drift).max(axis=1)
    est = args.t / model.mean * float(law.pi @ (dev / (args.tol * args.t)) ** args.alpha)
    errs = np.array([lln_error(simulate(dirs, kernel, model, args.t, member_rng(args.master, i)),
                               dirs, law.drift, [args.t])["velocity_error"][0]
                     for i in range(args.seeds)])
    frac = float(np.mean(errs >= args.tol))
    se = np.sqrt(frac * (1 - frac) / args.seeds)
    print(f"simulated failure rate {frac:.3f} +- {se:.3f} over {args.seeds} seeds")
    print(f"single-big-jump estimate {est:.3f}")
    print("error quantiles 50/90/95/99%:", np.quantile(errs, [0.5, 0.9, 0.95, 0.99]).round(4))


if __name__ == "__main__":
    main()
