"""Command line driver: ``fermitree verify | bounds | scaling``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Sequence

from . import suites
from .bounds import reports_to_csv
from .bounds.model import FIT_KEYS, ScaleModel, build_single_scale, power_counting_fit, synthetic_covariance
from .bounds.report import BoundReport


class UsageError(Exception):
    pass


def _dump_rows(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return "".join(json.dumps(r, sort_keys=True) + "\n" for r in rows)
    keys: list[str] = []
    for r in rows:
        keys += [k for k in r if k not in keys and k != "replay"]
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n", extrasaction="ignore")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: json.dumps(v) if isinstance(v, (list, dict)) else v for k, v in r.items()})
    return buf.getvalue()


def _summary_csv(rows: list[dict]) -> str:
    counts: dict[str, list[int]] = {}
    for r in rows:
        c = counts.setdefault(r.get("suite", "?"), [0, 0])
        c[0] += 1
        c[1] += not r.get("pass", True)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["suite", "instances", "failures"])
    for k, (n, f) in counts.items():
        w.writerow([k, n, f])
    return buf.getvalue()


def _emit(text: str, out: str | None, summary: str | None = None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        if summary is not None:
            with open(out + ".summary.csv", "w") as fh:
                fh.write(summary)
    else:
        sys.stdout.write(text)


def _suite_list(text: str | None) -> list[str]:
    if not text:
        raise UsageError("no suite selected")
    names = [s.strip() for s in text.split(",") if s.strip()]
    if names == ["all"]:
        return list(suites.SUITES)
    if not names:
        raise UsageError("no suite selected")
    bad = [s for s in names if s not in suites.SUITES]
    if bad:
        raise UsageError(f"unknown suite(s): {', '.join(bad)}; choose from {', '.join(suites.SUITES)}")
    return names


def cmd_verify(args) -> int:
    rows: list[dict] = []
    for name in _suite_list(args.suite):
        if name == "recursion":
            rows += suites.recursion_suite(args.seed, args.threads, m_max=args.m or 4, n_max=args.n_max,
                                           lattice=args.lattice or 8, configs=args.configs, tol=args.tol or 1e-10)
        elif name == "pfaffian":
            rows += suites.pfaffian_suite(args.seed, args.threads, tol=args.tol or 1e-10)
        elif name == "free-energy":
            rows += suites.free_energy_suite(args.seed, args.threads, tol=args.tol or 1e-8)
        elif name == "ibp":
            rows += suites.ibp_suite(args.seed, args.threads, tol=args.tol or 1e-12)
        else:
            rows += suites.RUNNERS[name](args.seed, args.threads)
    _emit(_dump_rows(rows, args.format), args.out, _summary_csv(rows))
    failures = sum(not r["pass"] for r in rows)
    print(f"{len(rows)} instances, {failures} failures", file=sys.stderr)
    return 1 if failures else 0


def cmd_bounds(args) -> int:
    legs = tuple(int(v) for v in args.legs.split(","))
    rows = suites.bounds_suite(args.seed, args.threads, m_max=args.m or 3, legs=legs, n_max=args.n_max,
                               branches=args.branches, caterpillars=args.caterpillar, lattice=args.lattice or 8,
                               nspin=args.nspin)
    if args.branches is not None:
        cor = suites.corollary_instance(suites.instance_rng(args.seed, "bounds", len(rows)), args.branches)
        cor["index"] = len(rows)
        rows.append(cor)
    if args.format == "csv":
        reports = [BoundReport.from_json({k: v for k, v in r.items() if k in BoundReport.__dataclass_fields__})
                   for r in rows if r.get("suite") == "bounds"]
        text = reports_to_csv(reports)
    else:
        text = _dump_rows(rows, "json")
    _emit(text, args.out, _summary_csv(rows))
    failures = sum(not r["pass"] for r in rows)
    print(f"{len(rows)} rows, {failures} domination failures", file=sys.stderr)
    return 1 if failures else 0


def cmd_scaling(args) -> int:
    js = list(range(args.j_min, args.j_max + 1))
    if len(js) < 3:
        raise UsageError("the j range needs at least three scales")
    if args.synthetic:
        fit = power_counting_fit(args.M, js, lambda j: synthetic_covariance(args.M, j), 1)
    else:
        resolution = args.lattice or 8
        for j in js:
            model = ScaleModel(args.M, j, args.d, resolution)
            try:
                build_single_scale(model)
            except ValueError as exc:
                raise UsageError(f"scale j={j}: {exc}") from exc
        fit = power_counting_fit(args.M, js, lambda j: build_single_scale(ScaleModel(args.M, j, args.d, resolution)),
                                 args.d)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["j"] + list(FIT_KEYS))
        for j, row in zip(js, fit.norms):
            w.writerow([j] + [repr(row[k]) for k in FIT_KEYS])
        text = buf.getvalue()
    else:
        data = fit.to_dict()
        # 95% intervals from the regression standard errors
        data["interval"] = {k: [fit.slopes[k] - 1.96 * fit.stderr[k], fit.slopes[k] + 1.96 * fit.stderr[k]]
                            for k in FIT_KEYS}
        text = json.dumps(data, sort_keys=True) + "\n"
    _emit(text, args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fermitree", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--tol", type=float, default=None)
        p.add_argument("--out", default=None, help="output file (default: stdout)")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--threads", type=int, default=None, help="worker threads (capped by FERMITREE_THREADS)")
        p.add_argument("--lattice", type=int, default=None,
                       help="torus length for desk instances; lattice points per M^-j for scaling")
        p.add_argument("--m", type=int, default=None, help="largest number of tree vertices")
        p.add_argument("--n-max", type=int, default=6, help="largest number of legs left after the tree lines")

    v = sub.add_parser("verify", help="run oracle suites")
    common(v)
    v.add_argument("--suite", default=None, help=f"comma list of {', '.join(suites.SUITES)} or 'all'")
    v.add_argument("--configs", type=int, default=20, help="momentum configurations per recursion instance")
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bounds", help="bound tables for a class of trees")
    common(b)
    b.add_argument("--branches", type=int, default=None, help="keep trees with at most this many branches")
    b.add_argument("--caterpillar", action="store_true", help="caterpillar trees on 2m+2 vertices")
    b.add_argument("--legs", default="2,3,4", help="allowed legs per vertex")
    b.add_argument("--nspin", type=int, choices=(1, 2), default=2)
    b.set_defaults(func=cmd_bounds)

    s = sub.add_parser("scaling", help="power counting of the single-scale covariance")
    common(s)
    s.add_argument("--M", type=float, default=2.0)
    s.add_argument("--j-min", type=int, default=2)
    s.add_argument("--j-max", type=int, default=5)
    s.add_argument("--d", type=int, default=1)
    s.add_argument("--synthetic", action="store_true", help="use the exactly scale-covariant family")
    s.set_defaults(func=cmd_scaling)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tol is not None and args.tol <= 0:
        parser.error("--tol must be positive")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fermitree: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
