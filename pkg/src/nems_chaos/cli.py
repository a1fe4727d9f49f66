"""Command-line entry point ``nems-chaos``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import EXPERIMENTS, RunConfig, load_config, override
from .errors import ConfigError, DomainError, NumericalFailure
from .experiments import run_experiment

log = logging.getLogger("nems_chaos")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser():
    p = argparse.ArgumentParser(
        prog="nems-chaos",
        description="Kicked cantilever / NV spin chaos experiments; writes CSV files and a JSON manifest.",
    )
    p.add_argument("experiment", choices=EXPERIMENTS + ("all",), help="experiment to run ('all' runs every one)")
    p.add_argument("--config", help="YAML configuration file, or a manifest.json from an earlier run")
    p.add_argument("--K", type=float, action="append", help="stochasticity parameter (repeatable)")
    p.add_argument("--kicks", type=int, help="number of kicks")
    p.add_argument("--seed", type=int, action="append", help="initial-condition seed (repeatable)")
    p.add_argument("--out", help="output directory (default: $NEMS_OUT, then ./nems_out)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = override(cfg, K=args.K, n_kicks=args.kicks, seeds=args.seed, output_dir=args.out)
        names = EXPERIMENTS if args.experiment == "all" else (args.experiment,)
        for name in names:
            man = run_experiment(override(cfg, experiment=name))
            log.info("%s: %d files in %.2f s", name, len(man.files), man.duration_s)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalFailure, DomainError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
