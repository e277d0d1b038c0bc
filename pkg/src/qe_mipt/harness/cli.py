"""Command line entry point: ``qe-mipt <subcommand> --config FILE``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .runner import run_experiment

SUBCOMMANDS = {
    "scan": "scan",
    "collapse": "collapse",
    "purify": "purification",
    "estimate-noise": "noise_estimate",
    "unequal": "unequal_rates",
    "replica-verify": "replica_verify",
}

log = logging.getLogger("qe_mipt")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qe-mipt", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, exp in SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=f"run the {exp} experiment")
        sp.add_argument("--config", required=True, help="experiment config file")
        sp.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        sp.add_argument("--threads", default=None, help="worker processes or 'auto'")
        sp.add_argument("--out", default=None, help="output directory (overrides config)")
        sp.add_argument("-q", "--quiet", action="store_true", help="suppress progress lines")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(asctime)s %(message)s", stream=sys.stderr)
    experiment = SUBCOMMANDS[args.command]
    overrides = {"seed": args.seed, "threads": args.threads, "output": args.out}
    try:
        cfg = load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"qe-mipt: {exc}", file=sys.stderr)
        return 2
    if cfg.experiment != experiment:
        print(f"qe-mipt: config is for experiment '{cfg.experiment}', "
              f"but subcommand '{args.command}' runs '{experiment}'", file=sys.stderr)
        return 2
    rows = run_experiment(cfg, cfg.output, log=log.info)
    log.info("wrote %d rows to %s", len(rows), cfg.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
