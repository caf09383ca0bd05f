"""Command-line interface.

Subcommands:
    generate   write dataset files + manifest from a config or preset
    run        run configured solvers against generated dataset files
    eval       correlation-error report of an estimate vs a truth matrix
    gcc        empirical correlation bounds + decay profile of a weight sample

Exit codes: 0 success, 1 validation error (bad config, bad values, a solver
refusing its preconditions), 2 runtime error or solver divergence, 3 I/O or
file-format error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, load_config, preset_config, validate_config
from .harness import evaluate, gcc_report, generate, run
from .matio import MatrixFormatError
from .solver import DivergenceError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
EXIT_IO = 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="andnmf",
        description="Staged pseudo-inverse/threshold NMF solver and experiment harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_ in (
        ("generate", "generate dataset files and a manifest"),
        ("run", "run configured solvers on a generated dataset"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="path to a JSON experiment config")
        p.add_argument("--preset", help="dataset preset (DIR, CTM, NEG, NOISE, BINARY, paper-scale)")
        p.add_argument("--out", help="output directory (falls back to the config's out_dir)")
        p.add_argument("--seed", type=int, default=None, help="override the dataset seed")
        if name == "run":
            p.add_argument("--jobs", type=int, default=1,
                           help="run independent solvers in parallel")

    p = sub.add_parser("eval", help="evaluate an estimate against a ground truth")
    p.add_argument("estimate", help="estimate matrix (.mat)")
    p.add_argument("truth", help="ground-truth matrix (.mat)")
    p.add_argument("--out", help="write the JSON report here instead of stdout")

    p = sub.add_parser("gcc", help="correlation bounds and decay profile of weights")
    p.add_argument("weights", help="weight sample matrix (.mat), D x n")
    p.add_argument("--out", help="write the JSON report here instead of stdout")
    return parser


def _load(args):
    if args.config:
        cfg = load_config(args.config, seed_override=args.seed)
    elif args.preset:
        cfg = validate_config(preset_config(args.preset), seed_override=args.seed)
    else:
        raise ConfigError("one of --config or --preset is required")
    out = args.out or cfg.out_dir
    if not out:
        raise ConfigError("no output directory: pass --out or set out_dir in the config")
    return cfg, out


def _emit(report, out_path):
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "generate":
            cfg, out = _load(args)
            generate(cfg, out)
            return EXIT_OK
        if args.command == "run":
            cfg, out = _load(args)
            summary = run(cfg, out, jobs=args.jobs)
            statuses = [s["status"] for s in summary["solvers"]]
            if any(s == "diverged" for s in statuses):
                return EXIT_RUNTIME
            if any(s == "refused" for s in statuses):
                return EXIT_VALIDATION
            return EXIT_OK
        if args.command == "eval":
            _emit(evaluate(args.estimate, args.truth), args.out)
            return EXIT_OK
        if args.command == "gcc":
            _emit(gcc_report(args.weights), args.out)
            return EXIT_OK
        raise AssertionError(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MatrixFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
