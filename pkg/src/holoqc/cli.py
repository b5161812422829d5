"""Command-line front end: ``holoqc {gate,transfer,sweep,bounds,check}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .checks import run_checks
from .evolver import IntegrationError
from .report import ReportError, emit_report, provenance, summarize
from .scenario import (
    BOUND_COLUMNS,
    GATE_COLUMNS,
    TRANSFER_COLUMNS,
    Scenario,
    ScenarioError,
    load_scenario,
    parse_scenario,
    run_bounds,
    run_gate,
    run_transfer_mode,
    sweep,
)
from .schemes import EncodingError

SUMMARY_KEYS = {
    "gate": ("kind", "i", "j", "re", "im", "discrepancy"),
    "transfer": ("scheme", "gamma", "kappa", "T", "fidelity", "max_p1ph", "norm_loss"),
    "sweep": ("scheme", "gamma", "kappa", "T", "fidelity", "max_p1ph", "norm_loss"),
    "bounds": ("scheme", "bound", "T", "Delta", "analytic", "observed", "satisfied"),
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="holoqc", description=__doc__)
    ap.add_argument("--version", action="version", version=f"holoqc {__version__}")
    sub = ap.add_subparsers(dest="mode", required=True)
    for mode, text in [
        ("gate", "synthesize a loop and compare its holonomy with the target gate"),
        ("transfer", "run one state transfer"),
        ("sweep", "fidelity over a (gamma, kappa) grid"),
        ("bounds", "adiabatic bounds against simulation"),
        ("check", "run the invariant suite"),
    ]:
        p = sub.add_parser(mode, help=text)
        p.add_argument("--scenario", type=Path, help="JSON scenario file")
        p.add_argument("--out", type=Path, help="CSV output path")
        p.add_argument("--tol", type=float, help="integrator tolerance (overrides the scenario)")
        p.add_argument("--workers", type=int, default=1, help="parallel simulations for sweep and bounds")
        p.add_argument("--seed", type=int, help="accepted for interface compatibility; nothing is random")
    return ap


def _scenario(args) -> Scenario:
    if args.scenario is not None:
        sc = load_scenario(args.scenario, args.mode)
    else:
        sc = parse_scenario({}, mode=args.mode)
    if args.tol is not None:
        if args.tol <= 0:
            raise ScenarioError("--tol must be positive")
        sc.tol = args.tol
    return sc


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return 2
    try:
        sc = _scenario(args)
        if sc.mode == "check":
            rows = run_checks()
            for r in rows:
                print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['invariant']}: {r['detail']}")
            if args.out:
                emit_report(rows, args.out, header=provenance(sc.digest, sc.tol, mode="check"))
            return 0 if all(r["passed"] for r in rows) else 1
        if sc.mode == "gate":
            rows, cols = run_gate(sc), GATE_COLUMNS
        elif sc.mode == "transfer":
            rows, cols = run_transfer_mode(sc), TRANSFER_COLUMNS
        elif sc.mode == "sweep":
            rows, cols = sweep(sc, args.workers), TRANSFER_COLUMNS
        else:
            rows, cols = run_bounds(sc, args.workers), BOUND_COLUMNS
        header = provenance(sc.digest, sc.tol if sc.tol is not None else "scheme default", mode=sc.mode)
        text = emit_report(rows, args.out, cols, header)
    except (ScenarioError, EncodingError, ReportError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except IntegrationError as e:
        print(f"integration failed: {e}", file=sys.stderr)
        return 3
    print(summarize(rows, SUMMARY_KEYS[sc.mode]))
    if args.out is None:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
