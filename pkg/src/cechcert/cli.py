"""Command-line front end.

Exit codes: 0 when every machine check passes, 1 when a check fails, 2 for
configuration or resource errors.  Reports go to --out, or into the directory
named by the CECHCERT_OUT environment variable (default: current directory).
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

from .errors import DomainError, ResourceError
from .report import emit_report
from .scenarios import ScenarioConfig, hessian_scan_rows, run_dim2, run_dimn, torus_rank_table

OUT_ENV = "CECHCERT_OUT"


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--r", type=float, default=4.0)
    p.add_argument("--step", type=float, default=None)
    p.add_argument("--delta", type=float, default=0.45)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--safety", type=float, default=0.5)
    p.add_argument("--tol-cocycle", type=float, default=1e-9)
    p.add_argument("--tol-chern", type=float, default=1e-6)
    p.add_argument("--budget-nodes", type=int, default=10_000_000)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--format", choices=("json", "text"), default="json")


def _config(args: argparse.Namespace) -> ScenarioConfig:
    return ScenarioConfig(
        n=args.n,
        epsilon=args.epsilon,
        r=args.r,
        step=args.step,
        delta=args.delta,
        samples=args.samples,
        seed=args.seed,
        safety=args.safety,
        tol_cocycle=args.tol_cocycle,
        tol_chern=args.tol_chern,
        budget_nodes=args.budget_nodes,
    )


def _out_path(args: argparse.Namespace, default_name: str) -> str:
    if args.out:
        return args.out
    return os.path.join(os.environ.get(OUT_ENV, "."), default_name)


def _finish(rep, args, default_name: str) -> int:
    path = _out_path(args, default_name)
    emit_report(rep, path, args.format)
    print(rep.to_text(), end="")
    print(f"report written to {path}")
    return 0 if rep.overall_pass else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="cechcert",
        description="Certificates for line bundles over explicit covers: "
        "cohomology of resolved nerves, gluing, and non-extension obstructions.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p2 = sub.add_parser("dim2", help="slab construction certificate")
    _common_flags(p2)

    pn = sub.add_parser("dimn", help="tube construction certificate")
    _common_flags(pn)

    pt = sub.add_parser("cohomology-torus", help="rank table of the sector cover")
    _common_flags(pt)
    pt.add_argument("--kmax", type=int, default=None)

    ph = sub.add_parser("hessian-scan", help="CSV sweep of the Hessian block forms")
    _common_flags(ph)
    ph.add_argument("--lo", type=float, default=0.5)
    ph.add_argument("--hi", type=float, default=3.5)
    ph.add_argument("--count", type=int, default=1000)

    ps = sub.add_parser("selftest", help="fast end-to-end smoke run")
    _common_flags(ps)

    args = parser.parse_args(argv)
    try:
        if args.cmd == "dim2":
            cfg = _config(args)
            cfg.n = 2
            return _finish(run_dim2(cfg), args, "dim2_report.json")
        if args.cmd == "dimn":
            return _finish(run_dimn(_config(args)), args, "dimn_report.json")
        if args.cmd == "cohomology-torus":
            rows = torus_rank_table(args.n, args.epsilon, args.kmax)
            path = _out_path(args, f"torus_ranks_n{args.n}.json")
            with open(path, "w") as fh:
                json.dump(rows, fh, sort_keys=True, indent=2)
                fh.write("\n")
            ok = all(row["rank"] == row["expected"] for row in rows)
            for row in rows:
                print(f"H^{row['k']}: rank {row['rank']} (expected {row['expected']})")
            print(f"table written to {path}")
            return 0 if ok else 1
        if args.cmd == "hessian-scan":
            rows = hessian_scan_rows(args.lo, args.hi, args.count)
            path = _out_path(args, "hessian_scan.csv")
            with open(path, "w", newline="") as fh:
                w = csv.DictWriter(fh, fieldnames=["modulus", "trace", "det", "definite"])
                w.writeheader()
                w.writerows(rows)
            print(f"scan written to {path}")
            return 0
        if args.cmd == "selftest":
            cfg = _config(args)
            cfg.n = 2
            cfg.samples = min(cfg.samples, 300)
            cfg.run_connectivity = False
            rep2 = run_dim2(cfg)
            repn = run_dimn(cfg)
            rows = torus_rank_table(2)
            ok = (
                rep2.overall_pass
                and repn.overall_pass
                and all(row["rank"] == row["expected"] for row in rows)
            )
            print(rep2.to_text(), end="")
            print(repn.to_text(), end="")
            print("torus ranks:", [row["rank"] for row in rows])
            print("selftest:", "PASS" if ok else "FAIL")
            return 0 if ok else 1
        parser.error(f"unknown command {args.cmd!r}")
    except (DomainError, ResourceError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
