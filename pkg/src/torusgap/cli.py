"""Command-line driver.

Subcommands: run, sweep, analyze, verify-lemma, report.
Exit codes: 0 ok, 1 usage or config error, 2 numerical failure,
3 partial sweep failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

from .config import load_config
from .errors import ConfigError, TorusGapError
from .driver import RUN_RECORD, SWEEP_RECORD, analyze_path, run_experiment, sweep_experiment
from .lemma_lab import FAMILIES, verify_family
from .reports import write_report

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2
EXIT_PARTIAL = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="torusgap",
                     description="Energy-balance gap diagnostics on the periodic torus")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", parents=[], help="simulate one configuration")
    p_run.add_argument("--config", required=True, help="YAML experiment file")
    p_run.add_argument("--out", default="out", help="output directory")
    p_run.add_argument("--seed", type=int, default=None, help="override the random-IC seed")

    p_sweep = sub.add_parser("sweep", help="run the smoothing-index ladder")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out", default="out")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel sweep points")
    p_sweep.add_argument("--seed", type=int, default=None)

    p_an = sub.add_parser("analyze", help="gap/excursion/ledger reports and plots")
    p_an.add_argument("path", help="run or sweep directory")
    p_an.add_argument("--config", default=None, help="override the stored analysis spec")
    p_an.add_argument("--out", default=None, help="report directory (default: PATH/analysis)")

    p_vl = sub.add_parser("verify-lemma", help="verify a limit-lemma family")
    p_vl.add_argument("family", help=f"one of {sorted(FAMILIES)}")
    p_vl.add_argument("--out", default=None, help="write lemma_report.json here")
    p_vl.add_argument("--T", type=float, default=1.0, help="interval length")

    p_rep = sub.add_parser("report", help="summarize a run or sweep directory")
    p_rep.add_argument("path")
    return parser


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    record = run_experiment(cfg, args.out, seed_override=args.seed)
    print(f"run {record['config_hash'][:12]} -> {args.out} "
          f"({record['samples']} samples, m={record['m']})")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    record = sweep_experiment(cfg, args.out, jobs=args.jobs, seed_override=args.seed)
    for p in record["points"]:
        status = p["status"] if p["status"] == "ok" else f"failed: {p['error']}"
        print(f"  m={p['m']}: {status}")
    print(f"sweep {record['config_hash'][:12]} -> {args.out} "
          f"({record['n_ok']} ok, {record['n_failed']} failed)")
    if record["n_ok"] == 0:
        return EXIT_NUMERICAL
    if record["n_failed"]:
        return EXIT_PARTIAL
    return EXIT_OK


def _cmd_analyze(args) -> int:
    cfg = load_config(args.config) if args.config else None
    summary = analyze_path(args.path, out_dir=args.out, cfg=cfg)
    out = args.out or os.path.join(args.path, "analysis")
    if "gap_limits" in summary:
        for name, v in summary["gap_limits"].items():
            print(f"  {name}: limit {v['limit']:.6g} +- {v['error']:.3g}")
    print(f"analysis -> {out}")
    return EXIT_OK


def _cmd_verify_lemma(args) -> int:
    if args.family not in FAMILIES:
        print(f"unknown family {args.family!r}; available: {', '.join(sorted(FAMILIES))}",
              file=sys.stderr)
        return EXIT_USAGE
    report = verify_family(args.family, T=args.T)
    if report.get("hypothesis_violated"):
        print(f"{args.family}: HYPOTHESIS VIOLATED (conclusion not asserted)")
    else:
        verdict = "PASS" if report["passed"] else "FAIL"
        la = report["la"]
        print(f"{args.family}: {verdict} "
              f"(limit {la['value']:.6g} +- {la['error']:.3g}, target {la['target']:.6g})")
        for m, err in sorted(report["lp_errors"]["values"].items()):
            print(f"  m={m}: weighted L1 error {err:.6g}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_report({"lemma_report": report}, os.path.join(args.out, "lemma_report.json"))
        print(f"report -> {os.path.join(args.out, 'lemma_report.json')}")
    if report.get("hypothesis_violated"):
        return EXIT_OK  # the lab worked; the family fails its hypotheses
    return EXIT_OK if report["passed"] else EXIT_NUMERICAL


def _cmd_report(args) -> int:
    for record_name in (SWEEP_RECORD, RUN_RECORD):
        path = os.path.join(args.path, record_name)
        if os.path.isfile(path):
            with open(path, encoding="ascii") as fh:
                record = json.load(fh)
            print(json.dumps(record, indent=2))
            return EXIT_OK
    print(f"no run or sweep record under {args.path}", file=sys.stderr)
    return EXIT_USAGE


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "analyze": _cmd_analyze,
    "verify-lemma": _cmd_verify_lemma,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        code = _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TorusGapError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return code


if __name__ == "__main__":
    sys.exit(main())
