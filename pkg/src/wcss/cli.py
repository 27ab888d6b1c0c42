"""Command-line entry point: ``wcss {weights,bound,mse-sweep,roc} --config FILE --out CSV``."""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from .harness import (
    ConfigError,
    emit_csv,
    load_config,
    run_bound_curve,
    run_mse_sweep,
    run_roc,
    run_weights,
)

log = logging.getLogger("wcss")

COMMANDS = {
    "weights": lambda cfg, workers: run_weights(cfg),
    "bound": lambda cfg, workers: run_bound_curve(cfg),
    "mse-sweep": run_mse_sweep,
    "roc": run_roc,
}


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed must fit in an unsigned 64-bit integer: {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wcss", description="Weighted compressive spectrum sensing experiments."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path, help="experiment config file")
        p.add_argument("--out", required=True, type=Path, help="CSV output path")
        p.add_argument("--seed", type=_u64, default=None, help="override master_seed")
        p.add_argument("--trials", type=int, default=None, help="override the trial count")
        p.add_argument("--workers", type=int, default=1, help="worker processes for Monte-Carlo trials")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    )
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.trials is not None:
            overrides["trials"] = args.trials
        if overrides:
            cfg = cfg.replace(**overrides)
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")

        resolved = cfg.to_ini()
        log.info("resolved configuration:\n%s", resolved)
        args.out.parent.mkdir(parents=True, exist_ok=True)
        Path(f"{args.out}.resolved.cfg").write_text(resolved)

        start = time.perf_counter()
        table = COMMANDS[args.command](cfg, args.workers)
        emit_csv(table, args.out)
        log.info("%s: %d rows -> %s (%.1fs)", args.command, len(table.rows), args.out,
                 time.perf_counter() - start)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"wcss {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
