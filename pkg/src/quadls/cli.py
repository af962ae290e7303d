"""Command-line entry point.

Subcommands: train (one run), sweep (kinds x batch sizes x seeds), study
(step-size distribution at a fixed point), compare-exact (fits against a
golden-section baseline on one frozen batch). Flags override config-file
values which override defaults. Exit status 0 on success, 2 on bad
configuration or missing data.
"""

import argparse
import sys

from .harness import (COMMANDS, ConfigError, build_config, config_hash,
                      load_config_file, resolve_config, run_compare_exact,
                      run_study, run_sweep, run_train)

_RUNNERS = {"train": run_train, "sweep": run_sweep, "study": run_study,
            "compare-exact": run_compare_exact}


def _add_shared(parser):
    add = parser.add_argument
    add("--config", help="key=value config file; flags override it")
    add("--dataset", help="wdbc, mnist, or cifar10")
    add("--data-dir", dest="data_dir", help="directory holding raw data files")
    add("--regime", help="no-bounds, bounded, or fixed-batch")
    add("--kinds", help="comma-separated approximation kinds")
    add("--batch-sizes", dest="batch_sizes", help="comma-separated batch sizes")
    add("--seeds", help="comma-separated seeds")
    add("--budget", help="function evaluation budget per run")
    add("--n-fits", dest="n_fits", help="fits per distribution study")
    add("--iterations", help="iteration cap for compare-exact")
    add("--eval-every", dest="eval_every", help="error measurement cadence")
    add("--workers", help="parallel sweep processes")
    add("--flag", help="1 accepts extrapolated steps, 0 rejects them")
    add("--bounds", help="step bounds low,high or off")
    add("--out-dir", dest="out_dir", help="output directory")
    add("--paper-scale", dest="paper_scale", action="store_const", const="true",
        help="full-size networks and budgets (slow)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="quadls",
        description="quadratic-approximation line searches on sampled losses")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        _add_shared(sub.add_parser(name))
    return parser


def _cli_pairs(args):
    skip = ("command", "config")
    return {k: v for k, v in vars(args).items()
            if k not in skip and v is not None}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        file_pairs = load_config_file(args.config) if args.config else None
        cfg = resolve_config(build_config(args.command, file_pairs,
                                          _cli_pairs(args)))
        if cfg.paper_scale:
            print("paper-scale run: expect hours, not minutes", file=sys.stderr)
        status = _RUNNERS[cfg.command](cfg)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{cfg.command} done: results in {cfg.out_dir} "
          f"(config {config_hash(cfg)[:12]})")
    return status


if __name__ == "__main__":
    sys.exit(main())
