"""Command-line entry point: ``drwalk {run,describe,dump-trajectory}``.

Exit codes: 0 all tests passed, 1 input/config error, 2 statistical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiment import ConfigError, describe, load_config, run
from .rng import member_rng
from .walk import simulate


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="drwalk", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in [("run", "simulate the ensemble and run the regime's tests"),
                        ("describe", "print derived quantities without simulating"),
                        ("dump-trajectory", "write one trajectory as CSV")]:
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--seed", type=int, default=None, help="override the master seed")
        if name != "describe":
            sp.add_argument("--out", default=None, help="output directory")
        if name == "run":
            sp.add_argument("--threads", type=int, default=1,
                            help="worker threads (affects wall time only)")
        if name == "dump-trajectory":
            sp.add_argument("--member", type=int, default=0)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config, seed=args.seed, out=getattr(args, "out", None))
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.command == "describe":
        print(describe(cfg))
        return 0

    if args.command == "dump-trajectory":
        traj = simulate(cfg.dirs, cfg.kernel, cfg.model, cfg.horizon, member_rng(cfg.seed, args.member))
        out = Path(cfg.out or ".")
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"trajectory_{args.member}.csv"
        traj.to_csv(path)
        print(path)
        return 0

    print(describe(cfg))
    status, summary = run(cfg, threads=max(1, args.threads))
    for t in summary["tests"]:
        mark = "PASS" if t["passed"] else "FAIL"
        print(f"{mark}  {t['name']}: statistic={t['statistic']:.6g}"
              + (f" p={t['p_value']:.4g}" if t["p_value"] is not None else ""))
    return status


if __name__ == "__main__":
    sys.exit(main())
