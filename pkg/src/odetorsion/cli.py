"""Command-line front end.

    odetorsion analyze corpus/table1.straight --json
    odetorsion analyze --rhs "6*y^2 + x"

Exit codes: 0 when every entry matches its expectation (or has none),
1 on any mismatch, 2 on parse or validation errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from . import expr as ex
from .oracle import INCONCLUSIVE, NONZERO, ZERO, OracleConfig
from .parsing import (
    NOT_STRAIGHT,
    STRAIGHT,
    UNSPECIFIED,
    CorpusEntry,
    OdeSystem,
    ParseError,
    ValidationError,
    parse_corpus,
    parse_expr,
)
from .torsion import (
    FELS,
    QUARTIC,
    TRESSE,
    DimensionError,
    check_conserved,
    fels_torsion,
    is_straight,
    quartic_test,
    tresse_torsion,
)

_CLASSIFICATION = {ZERO: STRAIGHT, NONZERO: NOT_STRAIGHT, INCONCLUSIVE: "inconclusive"}


def _serialize_witness(witness) -> dict:
    return {str(ref): [value.real, value.imag] for ref, value in sorted(witness.items(), key=lambda kv: str(kv[0]))}


def analyze_entry(entry: CorpusEntry, cfg: OracleConfig, method: str = "auto") -> dict:
    """Run the classifiers on one corpus entry and build its record."""
    sys_ = entry.system
    started = time.perf_counter()
    if method == "auto":
        report = is_straight(sys_, cfg)
    elif method == TRESSE:
        report = tresse_torsion(sys_, cfg)
    elif method == FELS:
        report = fels_torsion(sys_, cfg)
    elif method == QUARTIC:
        report = quartic_test(sys_, cfg)
    else:
        raise ValueError(f"unknown method {method!r}")

    classification = _CLASSIFICATION[report.verdict.outcome]
    expected = entry.expect if entry.expect != UNSPECIFIED else None
    record = {
        "name": sys_.name,
        "n": sys_.n,
        "method": report.method,
        "classification": classification,
        "expected": expected,
        "match": None if expected is None else classification == expected,
        "seed": cfg.seed,
        "samples": cfg.samples,
        "expr_nodes": report.telemetry.get("expr_nodes", 0),
    }
    if report.verdict.witness is not None:
        record["witness"] = _serialize_witness(report.verdict.witness)
        record["witness_value"] = [report.verdict.value.real, report.verdict.value.imag]
    if report.verdict.entry is not None:
        record["witness_entry"] = list(report.verdict.entry)
    if report.verdict.reason:
        record["reason"] = report.verdict.reason
    if report.verdict.branch_limited:
        record["branch_limited"] = True

    if method == "auto":
        record["quartic"] = _CLASSIFICATION[quartic_test(sys_, cfg).verdict.outcome]
        if entry.conserved:
            record["conserved"] = [
                check_conserved(sys_, g, cfg).outcome for g in entry.conserved
            ]
    record["wall_ms"] = (time.perf_counter() - started) * 1000.0
    return record


def _load_entries(args) -> list[CorpusEntry]:
    if args.rhs:
        rhs = tuple(parse_expr(t) for t in args.rhs)
        from .expr import VarRef, free_vars
        from .parsing import GENERIC, ParamDecl

        params = sorted(
            {r.name for f in rhs for r in free_vars(f) if r.kind == VarRef.PARAM}
        )
        sys_ = OdeSystem(
            n=len(rhs),
            rhs=rhs,
            params=tuple(ParamDecl(p, GENERIC) for p in params),
            name="inline",
        )
        return [CorpusEntry(system=sys_)]
    entries: list[CorpusEntry] = []
    for path in args.files:
        with open(path, "r", encoding="utf-8") as fh:
            entries.extend(parse_corpus(fh.read()))
    return entries


def _text_row(r: dict) -> str:
    match = "n/a" if r["match"] is None else ("ok" if r["match"] else "MISMATCH")
    extra = ""
    if "witness_entry" in r:
        extra += f" entry={tuple(r['witness_entry'])}"
    if r.get("branch_limited"):
        extra += " branch-limited"
    if "reason" in r:
        extra += f" [{r['reason']}]"
    return (
        f"{r['name']:<24} n={r['n']:<2} {r['method']:<8} "
        f"{r['classification']:<13} expect={r['expected'] or '-':<13} {match:<8} "
        f"{r['wall_ms']:8.1f}ms{extra}"
    )


def cmd_analyze(args) -> int:
    try:
        entries = _load_entries(args)
    except (ParseError, ValidationError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    cfg = OracleConfig(samples=args.samples, seed=args.seed, rel_tol=args.tol)

    try:
        jobs = max(1, args.jobs)
        if jobs == 1 or len(entries) <= 1:
            records = [analyze_entry(e, cfg, args.method) for e in entries]
        else:
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                records = list(pool.map(lambda e: analyze_entry(e, cfg, args.method), entries))
    except (DimensionError, ValidationError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2

    if args.expect_invert:
        for r in records:
            if r["match"] is not None:
                r["match"] = not r["match"]

    if args.json:
        print(json.dumps(records, indent=2))
    else:
        for r in records:
            print(_text_row(r))

    mismatched = any(r["match"] is False for r in records)
    return 1 if mismatched else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odetorsion",
        description="Decide whether second-order complex-analytic ODE systems are straight.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    an = sub.add_parser("analyze", help="classify corpus files or an inline system")
    an.add_argument("files", nargs="*", help="corpus files")
    an.add_argument("--rhs", action="append", default=None, metavar="EXPR",
                    help="inline right-hand side; repeat for systems (f1, f2, ...)")
    an.add_argument("--seed", type=int, default=0, help="oracle seed (default 0)")
    an.add_argument("--samples", type=int, default=32, help="oracle samples per verdict (default 32)")
    an.add_argument("--tol", type=float, default=1e-9, help="relative zero tolerance (default 1e-9)")
    an.add_argument("--json", action="store_true", help="machine-readable output")
    an.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                    help="parallel corpus entries (default: logical cores)")
    an.add_argument("--method", choices=["auto", TRESSE, FELS, QUARTIC], default="auto",
                    help="invariant to use (default: auto dispatch on n)")
    an.add_argument("--expect-invert", action="store_true", help=argparse.SUPPRESS)
    an.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "analyze" and not args.files and not args.rhs:
        parser.error("need a corpus file or --rhs")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
