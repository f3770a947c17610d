"""Command-line entry point.

    metrocomp run --config cfg.json [--out DIR] [--seed S] [--jobs J]
    metrocomp selftest [--seed S]

Exit codes: 0 success, 2 validation error, 3 solver non-convergence, 4 I/O.
"""

import argparse
import json
import sys

from .errors import MetrocompError, ValidationError
from .experiments import ExperimentConfig, run_experiment
from .report import emit_report
from .selftest import run_selftest

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def build_parser():
    p = argparse.ArgumentParser(prog="metrocomp")
    sub = p.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a named experiment from a config file")
    run_p.add_argument("--config", required=True, help="path to a JSON config")
    run_p.add_argument("--out", default=None, help="output directory (default: config value or '.')")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--jobs", type=int, default=None, help="worker pool size for sweeps")
    st_p = sub.add_parser("selftest", help="run the library invariant suite")
    st_p.add_argument("--seed", type=int, default=0)
    return p


def _load_config(path, args):
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise MetrocompError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config is not valid JSON: {exc}") from exc
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.jobs is not None:
        raw["jobs"] = args.jobs
    if args.out is not None:
        raw["out"] = args.out
    return ExperimentConfig.from_dict(raw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "selftest":
        ok = run_selftest(seed=args.seed)
        print("selftest:", "PASS" if ok else "FAIL")
        return EXIT_OK if ok else EXIT_VALIDATION

    try:
        cfg = _load_config(args.config, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MetrocompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        record = run_experiment(cfg)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except MetrocompError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        record = {
            "experiment": cfg.experiment,
            "inputs": {"params": cfg.params, "seed": cfg.seed, "jobs": cfg.jobs},
            "summary": {"error": str(exc)},
            "raw": {"rows": [], "summary": {"error": str(exc)}},
            "csv_header": [],
            "failed": True,
            "library_version": "",
            "meta": {},
        }
        try:
            emit_report(record, cfg.out or ".")
        except MetrocompError:
            pass
        return EXIT_SOLVER

    try:
        paths = emit_report(record, cfg.out or ".")
    except MetrocompError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO

    print(json.dumps({"summary": record["summary"], "files": paths}, indent=2, sort_keys=True))
    return EXIT_SOLVER if record["failed"] else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
