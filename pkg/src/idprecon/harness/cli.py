"""Command-line entry point: ``idprecon <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import json
import math
import sys

from ..attacks import AttackError
from ..core import BudgetExhausted, SchemaError
from .experiments import ExperimentConfig, run_experiment
from .report import emit_report

SUBCOMMANDS = {
    "reconstruct": "reconstruct-dataset",
    "column": "reconstruct-column",
    "membership": "membership",
    "uniqueness": "uniqueness",
    "infer": "attribute-infer",
    "bdp-enum": "bdp-enumerate",
    "simulate": "decision-rule-sim",
    "negative-control": "negative-control",
}

EXIT_INGESTION, EXIT_APPLICABILITY, EXIT_BUDGET = 2, 3, 4


def _values(text: str | None) -> dict | None:
    if not text:
        return None
    out = {}
    for part in text.split(","):
        name, sep, value = part.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected name=value, got {part!r}")
        out[name.strip()] = value.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dataset", help="CSV file; omit for a synthetic dataset")
    common.add_argument("--schema", help="JSON schema config; defaults to the bundled banking schema")
    common.add_argument("--delimiter", help="CSV delimiter (sniffed from the header if omitted)")
    common.add_argument("--k", type=int, default=1, help="group size")
    common.add_argument("--eps-per-call", type=float, default=1e-10)
    common.add_argument("--eps-cap", type=float, default=math.inf)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--defense", default="plain",
                        help="plain | hardened | round-nearest | round-binary | none")
    common.add_argument("--detector", default="direct", help="direct | repeated[:m] | variance[:m]")
    common.add_argument("--n", type=int, default=200, help="synthetic dataset size")
    common.add_argument("--n-source", choices=("query", "public"), default="query",
                        help="how the attacker learns n: the size query or public knowledge")
    common.add_argument("--out", help="write the JSON report (and attribute table) here")

    parser = argparse.ArgumentParser(prog="idprecon", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("reconstruct", parents=[common], help="full dataset reconstruction")
    p.add_argument("--baseline", action="store_true", help="also run against unprotected answers")
    p = sub.add_parser("column", parents=[common], help="one column")
    p.add_argument("--attribute", required=True)
    for name in ("membership", "uniqueness"):
        p = sub.add_parser(name, parents=[common], help=f"{name} of one target")
        p.add_argument("--values", required=True, type=_values, help="attr=value,attr=value")
    p = sub.add_parser("infer", parents=[common], help="attribute inference for one target")
    p.add_argument("--values", required=True, type=_values)
    p.add_argument("--attribute", required=True)
    sub.add_parser("bdp-enum", parents=[common], help="distinct records under BDP")
    p = sub.add_parser("simulate", parents=[common], help="variance decision-rule accuracy")
    p.add_argument("--m", type=int, default=1000)
    p.add_argument("--trials", type=int, default=20000)
    sub.add_parser("negative-control", parents=[common], help="attack a true-DP custodian")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    attr = getattr(args, "attribute", None)
    if attr is not None and attr.isdigit():
        attr = int(attr)
    try:
        config = ExperimentConfig(
            dataset=args.dataset, schema=args.schema, k=args.k, eps_per_call=args.eps_per_call,
            eps_cap=args.eps_cap, seed=args.seed, defense=args.defense, detector=args.detector,
            attack=SUBCOMMANDS[args.command], attribute=attr, values=getattr(args, "values", None),
            m=getattr(args, "m", 1000), trials=getattr(args, "trials", 2000), n=args.n,
            baseline=getattr(args, "baseline", False), delimiter=args.delimiter,
            n_source=args.n_source,
        )
        report = run_experiment(config)
    except SchemaError as e:
        print(f"ingestion error: {e}", file=sys.stderr)
        return EXIT_INGESTION
    except BudgetExhausted as e:
        print(f"budget exhausted: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except (AttackError, ValueError) as e:
        print(f"not applicable: {e}", file=sys.stderr)
        return EXIT_APPLICABILITY
    if args.out:
        emit_report(report, args.out)
    summary = {k: v for k, v in report.to_dict().items() if k in ("exact", "accuracy", "error", "verdicts")}
    rec = report.reconstruction or {}
    for key in ("protected_queries", "unprotected_queries", "budget_spent"):
        if key in rec:
            summary[key] = rec[key]
    if report.result is not None and not isinstance(report.result, list):
        summary["result"] = report.result
    print(json.dumps(summary, indent=2, default=str))
    if report.error and args.command != "negative-control":
        return EXIT_BUDGET if "Budget" in report.error or "Partial" in report.error else EXIT_APPLICABILITY
    return 0


if __name__ == "__main__":
    sys.exit(main())
