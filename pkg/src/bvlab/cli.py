"""Command line front end for the experiment catalog.

Four subcommands: ``run`` executes one experiment (config overrides from
JSON and/or --h), ``regress`` re-runs golden reports and diffs them,
``coverage`` prints the claim-to-experiment map and fails on gaps, and
``list`` shows the catalog.  Exit codes follow the runner contract: a
failed scientific check still exits 0 (the report records it); only
plumbing errors are nonzero.
"""
from __future__ import annotations

import argparse
import json
import sys

from . import experiments


def _parse_h(text: str) -> float:
    """Grid steps arrive as fractions ("1/512") or decimals."""
    if "/" in text:
        num, den = text.split("/", 1)
        return float(num) / float(den)
    return float(text)


def _fmt(v) -> str:
    if v is None:
        return "-"
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def _print_report(rep: experiments.Report) -> None:
    for c in rep.checks:
        status = "PASS" if c.passed else ("FAIL" if c.passed is False else "info")
        line = f"{status:4s}  {c.name:36s} lhs={_fmt(c.lhs):>12s} rhs={_fmt(c.rhs):>12s}"
        if c.constant is not None:
            line += f" C={_fmt(c.constant)}"
        print(line)
        if c.note:
            print(f"      {c.note}")
    n_fail = sum(1 for c in rep.checks if c.passed is False)
    print(f"{rep.experiment}: {len(rep.checks)} checks, {n_fail} failed")


def _cmd_run(args) -> int:
    overrides: dict = {}
    if args.config:
        with open(args.config) as f:
            overrides.update(json.load(f))
    if args.h is not None:
        overrides["h"] = args.h
    rep = experiments.run(args.experiment, overrides or None, out_dir=args.out)
    _print_report(rep)
    plumbing = any(c.claim == "plumbing" and c.passed is False for c in rep.checks)
    return 1 if plumbing else 0


def _cmd_regress(args) -> int:
    summary = experiments.regress(args.golden, names=args.only or None,
                                  out_dir=args.out)
    for d in summary["diffs"]:
        print(f"DIFF {d['experiment']}.{d['check']}.{d['field']}: "
              f"{_fmt(d.get('old'))} -> {_fmt(d.get('new'))}"
              + (f" (allowed {_fmt(d['allowed'])})" if "allowed" in d else ""))
    print(f"{summary['experiments']} reports, {summary['compared']} checks "
          f"compared, {len(summary['diffs'])} diffs")
    return 0 if summary["ok"] else 1


def _cmd_coverage(args) -> int:
    cov = experiments.coverage()
    width = max(len(c) for c in cov["by_claim"])
    for claim, names in sorted(cov["by_claim"].items()):
        print(f"{claim:{width}s}  {', '.join(names) if names else 'UNMAPPED'}")
    print(f"{cov['n_claims']} claims, {cov['n_experiments']} experiments, "
          f"{len(cov['unmapped'])} unmapped")
    return 0 if not cov["unmapped"] else 1


def _cmd_list(args) -> int:
    width = max(len(n) for n in experiments.EXPERIMENTS)
    for name, exp in sorted(experiments.EXPERIMENTS.items()):
        print(f"{name:{width}s}  {exp.summary}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bvlab",
        description="boundary-trace laboratory for BV functions on weighted grids")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment")
    p_run.add_argument("experiment", help="catalog name (see `bvlab list`)")
    p_run.add_argument("--config", help="JSON file with config overrides")
    p_run.add_argument("--h", type=_parse_h, default=None,
                       help="grid step, fraction (1/512) or decimal")
    p_run.add_argument("--out", default=None,
                       help="directory for the report JSON and CSV artifacts")
    p_run.set_defaults(func=_cmd_run)

    p_reg = sub.add_parser("regress", help="re-run golden reports and diff")
    p_reg.add_argument("golden", nargs="?", default="golden",
                       help="directory of *.report.json goldens (default: golden)")
    p_reg.add_argument("--only", nargs="*", default=None,
                       help="restrict to these experiment names")
    p_reg.add_argument("--out", default=None,
                       help="write fresh reports here while diffing")
    p_reg.set_defaults(func=_cmd_regress)

    p_cov = sub.add_parser("coverage", help="claim-to-experiment map; fails on gaps")
    p_cov.set_defaults(func=_cmd_coverage)

    p_list = sub.add_parser("list", help="show the experiment catalog")
    p_list.set_defaults(func=_cmd_list)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (KeyError, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
