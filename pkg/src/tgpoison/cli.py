"""Command-line surface: attack, baseline, audit, benchmark, catalog.

Exit codes: 0 success, 2 audit failure, 3 infeasible sampling, 4 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .audit import ALL_CHECKS, AuditThresholds, audit
from .errors import InfeasibleSamplingError, MalformedStreamError, TgPoisonError
from .graphs import parse_edge_stream, read_format
from .manifest import read_manifest
from .pipeline import AttackConfig, benchmark, catalog, run_attack, run_baseline

EXIT_OK = 0
EXIT_AUDIT_FAILED = 2
EXIT_INFEASIBLE = 3
EXIT_INPUT_ERROR = 4


def _add_config_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", type=Path, help="INI config file; flags override its values")
    sub.add_argument("--dataset", type=Path, help="CSV edge stream")
    sub.add_argument("--descriptor", type=Path, help="INI dataset descriptor")
    sub.add_argument("--outdir", type=Path)
    sub.add_argument("--strategy", help="strategy or baseline name (see catalog)")
    sub.add_argument("--p", type=float, help="perturbation rate in [0, 1]")
    sub.add_argument("--knowledge", type=float, help="visible fraction of the training stream")
    sub.add_argument("--seed", type=int)
    sub.add_argument("--alpha", type=float)
    sub.add_argument("--beta", type=float)
    sub.add_argument("--window", help="activity window in seconds, or preset short/long")
    sub.add_argument("--capacity", type=int)
    sub.add_argument("--max-attempts", dest="max_attempts", type=int)
    sub.add_argument("--draws-per-slot", dest="draws_per_slot", type=int)
    sub.add_argument("--topk", type=int)
    sub.add_argument("--combined-weight", dest="combined_weight", type=float)
    sub.add_argument("--ks-threshold", dest="ks_threshold", type=float)
    sub.add_argument(
        "--raw-snapshots", dest="raw_snapshots", action="store_true", default=None,
        help="rank drift/edge-rank strategies on raw (unnormalized) score snapshots",
    )
    sub.add_argument("--dump-timeline", dest="dump_timeline", action="store_true", default=None)


def _build_config(args: argparse.Namespace) -> AttackConfig:
    overrides = {}
    for key in (
        "dataset",
        "descriptor",
        "outdir",
        "strategy",
        "p",
        "knowledge",
        "seed",
        "alpha",
        "beta",
        "capacity",
        "max_attempts",
        "draws_per_slot",
        "topk",
        "combined_weight",
        "ks_threshold",
        "raw_snapshots",
        "dump_timeline",
    ):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "window", None) is not None:
        raw = args.window
        try:
            overrides["window"] = float(raw)
        except ValueError:
            overrides["window"] = raw
    if args.config:
        return AttackConfig.from_file(args.config, **overrides)
    if "dataset" not in overrides or "descriptor" not in overrides:
        raise MalformedStreamError("--dataset and --descriptor are required without --config")
    return AttackConfig(**overrides)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="tgpoison", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    p_attack = subs.add_parser("attack", help="run the two-phase attack")
    _add_config_flags(p_attack)

    p_base = subs.add_parser("baseline", help="run an ADD/REM heuristic baseline")
    p_base.add_argument("--mode", choices=("ADD", "REM"), required=True)
    _add_config_flags(p_base)

    p_audit = subs.add_parser("audit", help="verify constraints on a finished run")
    p_audit.add_argument("--original", type=Path, required=True, help="original training CSV")
    p_audit.add_argument("--poisoned", type=Path, required=True, help="poisoned training CSV")
    p_audit.add_argument("--manifest", type=Path, required=True)
    p_audit.add_argument("--descriptor", type=Path, required=True)
    p_audit.add_argument("--p", type=float)
    p_audit.add_argument("--budget", type=int)
    p_audit.add_argument("--window", type=float)
    p_audit.add_argument("--capacity", type=int, default=1)
    p_audit.add_argument("--ks-threshold", dest="ks_threshold", type=float, default=0.1)
    p_audit.add_argument("--checks", default=",".join(ALL_CHECKS), help="comma-separated subset")
    p_audit.add_argument("--json", action="store_true", help="print the machine report")

    p_bench = subs.add_parser("benchmark", help="scaling probe for the core stages")
    p_bench.add_argument("--sizes", required=True, help="comma-separated edge counts")
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--p", type=float, default=0.3)
    p_bench.add_argument("--window", type=float, default=2000.0)

    subs.add_parser("catalog", help="list registered strategies and baselines")

    args = parser.parse_args(argv)
    try:
        if args.command == "attack":
            result = run_attack(_build_config(args))
            sys.stdout.write(result.report.to_text())
            sys.stdout.write(f"outputs: {result.outdir}\n")
            return EXIT_OK if result.audit_passed else EXIT_AUDIT_FAILED
        if args.command == "baseline":
            result = run_baseline(_build_config(args), args.mode)
            sys.stdout.write(result.report.to_text())
            sys.stdout.write(f"outputs: {result.outdir}\n")
            return EXIT_OK if result.audit_passed else EXIT_AUDIT_FAILED
        if args.command == "audit":
            fmt = read_format(args.descriptor)
            with open(args.original) as fh:
                original = parse_edge_stream(fh, fmt)
            with open(args.poisoned) as fh:
                poisoned = parse_edge_stream(fh, fmt)
            removals, insertions = read_manifest(args.manifest)
            thresholds = AuditThresholds(
                p=args.p,
                budget=args.budget,
                ks_threshold=args.ks_threshold,
                window=args.window,
                capacity=args.capacity,
            )
            checks = tuple(c.strip() for c in args.checks.split(",") if c.strip())
            report = audit(original, poisoned, removals, insertions, thresholds, checks=checks)
            sys.stdout.write(report.to_json() if args.json else report.to_text())
            return EXIT_OK if report.passed else EXIT_AUDIT_FAILED
        if args.command == "benchmark":
            sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
            result = benchmark(sizes, seed=args.seed, p=args.p, window=args.window)
            sys.stdout.write(result.to_text())
            return EXIT_OK
        if args.command == "catalog":
            sys.stdout.write(json.dumps(catalog(), indent=2) + "\n")
            return EXIT_OK
        raise AssertionError(args.command)
    except InfeasibleSamplingError as exc:
        sys.stderr.write(f"infeasible sampling: {exc}\n")
        return EXIT_INFEASIBLE
    except (MalformedStreamError, FileNotFoundError, ValueError, TgPoisonError) as exc:
        sys.stderr.write(f"input error: {exc}\n")
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
