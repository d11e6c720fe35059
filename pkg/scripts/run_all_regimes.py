"""Run every committed regime config and print one line per test.

    python scripts/run_all_regimes.py [--out results] [--threads 1]
"""

import argparse
import time
from pathlib import Path

from drwalk.experiment import load_config, run

ROOT = Path(__file__).resolve().parents[1]
ORDER = ["lln", "diffusive", "stable_1_2", "stable_alpha2", "ballistic", "lil", "lil_heavy"]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(ROOT / "results"))
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--only", nargs="*", default=None)
    args = ap.parse_args()
    for name in args.only or ORDER:
        cfg = load_config(ROOT / "configs" / f"{name}.json")
        t0 = time.perf_counter()
        status, summary = run(cfg, threads=args.threads, out_dir=Path(args.out) / name)
        print(f"{name:14s} exit={status} ({time.perf_counter() - t0:.1f}s)")
        for t in summary["tests"]:
            print(f"    {'PASS' if t['passed'] else 'FAIL'} {t['name']}: {t['statistic']:.5g}")


if __name__ == "__main__":
    main()
