"""Command line entry point: ``csslab <experiment> [--key value ...]``.

Flags mirror the configuration keys (underscores may be written as dashes).
A config file given with ``--config`` is read first and flags override it.
Failures print a one-line JSON error record to stderr and exit with the
code of its category.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import EXPERIMENTS, SCHEMA, build_config, parse_config
from .errors import CSSLabError
from .run import exit_code, run


def build_parser():
    parser = argparse.ArgumentParser(prog="csslab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value file read before the flags")
        for key, (_, default, _, text) in SCHEMA.items():
            if key == "experiment":
                continue
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                           metavar="VALUE", help=f"{text} (default {default!r})".replace("%", "%%"))
    return parser


def _pairs(args):
    pairs = []
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            base = parse_config(fh.read() + f"\nexperiment={args.experiment}\n")
        pairs.extend((k, str(v)) for k, v in base.values.items())
    pairs.append(("experiment", args.experiment))
    for key in SCHEMA:
        value = getattr(args, key, None)
        if key != "experiment" and value is not None:
            pairs.append((key, value))
    return pairs


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(_pairs(args))
        status = run(cfg)
    except CSSLabError as err:
        print(json.dumps({"error": err.category, "message": str(err)}), file=sys.stderr)
        return exit_code(err)
    except OSError as err:
        print(json.dumps({"error": "io-error", "message": str(err)}), file=sys.stderr)
        return 1
    if status:
        print(json.dumps({"error": "run-failed", "status": status,
                          "output_dir": cfg.output_dir}), file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
