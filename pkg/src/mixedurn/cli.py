"""Command-line entry point: ``python -m mixedurn`` or ``mixedurn``."""

import argparse
import sys

from .errors import ParseError, ValidationError
from .experiment import EXIT_CONFIG, EXPERIMENTS, dumps_report, parse_config, run

# flag name -> config key
FLAGS = {
    "a": "params.a",
    "b": "params.b",
    "c": "params.c",
    "p": "params.p",
    "y1-0": "params.y1_0",
    "y2-0": "params.y2_0",
    "experiment": "experiment",
    "horizon": "horizon",
    "replicates": "replicates",
    "master-seed": "master_seed",
    "epsilon": "epsilon",
    "t-max": "t_max",
    "t-points": "t_points",
    "n-grid": "n_grid",
    "workers": "workers",
    "output": "output_path",
    "samples": "samples_path",
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mixedurn",
        description="Run one mixed-urn experiment and write a JSON report.",
    )
    parser.add_argument("--config", help="key = value config file; flags override it")
    for flag, key in FLAGS.items():
        kw = {"dest": key, "default": None, "help": f"config key {key}"}
        if flag == "experiment":
            kw["choices"] = EXPERIMENTS
        parser.add_argument(f"--{flag}", **kw)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k != "config"}
    try:
        cfg = parse_config(args.config, overrides)
    except (ParseError, ValidationError, OSError) as exc:
        print(f"mixedurn: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report, code = run(cfg)
    if not cfg.output_path:
        sys.stdout.write(dumps_report(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
