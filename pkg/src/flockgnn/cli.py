"""Command-line entry point: ``flockgnn <command> [--config PATH] [--seed N] [--out DIR]``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import checks
from .errors import ConfigurationError
from .harness.config import ExperimentConfig, load_config
from .harness.experiments import evaluate, extended_run, reduced_radius_run, sweep, train_model

EXIT_OK, EXIT_CONFIG, EXIT_PROPERTY = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config")
    common.add_argument("--seed", type=int, help="master seed (overrides config)")
    common.add_argument("--out", help="output directory (overrides config)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="flockgnn", parents=[common])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="DAGGER-train the configured network")
    ev = sub.add_parser("evaluate", parents=[common], help="evaluate a model or the expert")
    ev.add_argument("--checkpoint")
    sub.add_parser("sweep", parents=[common], help="layers x width architecture sweep")
    ex = sub.add_parser("extended", parents=[common], help="evaluate over longer episodes")
    ex.add_argument("--checkpoint")
    ex.add_argument("--seconds", type=float, default=5.0)
    rr = sub.add_parser("reduced-radius", parents=[common], help="evaluate at a smaller radius")
    rr.add_argument("--checkpoint")
    rr.add_argument("--radius", type=float, default=0.8)
    sub.add_parser("selftest", parents=[common], help="run the property suites")
    return p


def _resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return cfg.with_overrides(seed=args.seed, out_dir=args.out,
                              checkpoint=getattr(args, "checkpoint", None))


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "selftest":
            results = checks.run_all()
            for r in results:
                print(r.line())
            return EXIT_OK if all(r.passed for r in results) else EXIT_PROPERTY
        cfg = _resolve(args)
        if args.command == "train":
            _, history = train_model(cfg)
            print(f"trained {cfg.model} L{cfg.layers} W{cfg.width}: "
                  f"final loss {history[-1]['mean_loss']:.4g} -> {cfg.out_dir}")
        elif args.command == "evaluate":
            s = evaluate(cfg)
            print(f"final mean velocity variance {s.final_mean:.6g} (std {s.final_std:.3g})")
        elif args.command == "extended":
            s = extended_run(cfg, seconds=args.seconds)
            print(f"final mean velocity variance {s.final_mean:.6g} at {args.seconds:g} s")
        elif args.command == "reduced-radius":
            s = reduced_radius_run(cfg, radius=args.radius)
            print(f"final mean velocity variance {s.final_mean:.6g} at C={args.radius:g}")
        elif args.command == "sweep":
            rows = sweep(cfg)
            print(f"{len(rows)} sweep cells written to {cfg.out_dir}/sweep.csv")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
