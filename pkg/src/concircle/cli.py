"""Command-line interface: ``concircle analyze|compare-oracle|catalog``.

Exit codes: 0 clean run, 2 inconsistent cross-flag implications,
3 validation, argument or I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import catalog
from .errors import ConcircleError, ManifestError
from .manifest import Manifest, load_manifest
from .report import Options, canonical_json, run_analyze, run_compare_oracle, write_report

EXIT_OK, EXIT_INCONSISTENT, EXIT_INPUT = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _param(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected k=v, got {text!r}")
    k, v = text.split("=", 1)
    try:
        return k.strip(), float(v)
    except ValueError:
        return k.strip(), v


def _flag_tol(text: str):
    k, v = _param(text)
    if isinstance(v, str):
        raise argparse.ArgumentTypeError(f"flag tolerance must be numeric, got {text!r}")
    return k, v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="concircle", description="Concircular curvature diagnostics.")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, text in (("analyze", "full curvature report"),
                       ("compare-oracle", "warped-product formulas against the pipeline")):
        s = sub.add_parser(verb, help=text)
        s.add_argument("ref", help="manifest JSON path or catalog:<name>")
        s.add_argument("--points", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--tol", type=float)
        s.add_argument("--flag-tol", type=_flag_tol, action="append", default=[],
                       metavar="FLAG=T", help="per-verdict tolerance override")
        s.add_argument("--json", metavar="PATH", help="write the report as canonical JSON")
        s.add_argument("--param", type=_param, action="append", default=[], metavar="K=V")
    c = sub.add_parser("catalog", help="list entries or emit one as a manifest")
    c.add_argument("name", nargs="?", default="list")
    c.add_argument("--param", type=_param, action="append", default=[], metavar="K=V")
    c.add_argument("--json", metavar="PATH")
    return p


def resolve(ref: str, params: dict) -> Manifest:
    if ref.startswith("catalog:"):
        return catalog.build(ref[len("catalog:"):], params)
    if params:
        raise ConcircleError("--param only applies to catalog references")
    try:
        with open(ref, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise OSError(f"cannot read manifest {ref}: {exc.strerror or exc}") from None
    return load_manifest(text)


def _summary(report: dict) -> str:
    lines = [f"manifest {report['manifest']['name']} ({report['point_count']} points, "
             f"seed {report['seed']}, tol {report['tolerance']:g})"]
    for k, v in sorted(report.get("verdicts", {}).items()):
        if isinstance(v, dict):
            extra = ", ".join(f"{a}={b:.6g}" for a, b in v.items()
                              if a != "holds" and isinstance(b, float))
            lines.append(f"  {k}: {_fmt(v['holds'])}" + (f" ({extra})" if extra else ""))
        else:
            lines.append(f"  {k}: {_fmt(v)}")
    oa = report.get("oracle_agreement")
    if oa:
        lines.append(f"  oracle_agreement: {_fmt(oa['pass'])} (max defect {oa['max']:.3e})")
        for b, d in sorted(oa["blocks"].items()):
            lines.append(f"    {b}: {d:.3e}")
    bad = [k for k, v in report.get("implications", {}).items() if v == "violated"]
    lines.append("  consistent: " + ("yes" if report["consistent"] else "NO " + ", ".join(bad)))
    for w in report.get("warnings", []):
        lines.append(f"  warning: {w}")
    return "\n".join(lines)


def _fmt(v) -> str:
    return str(v).lower() if isinstance(v, bool) else str(v)


def _fail(message: str, kind: str, json_path: str | None, details=None) -> int:
    print(f"concircle: {message}", file=sys.stderr)
    if details:
        for d in details:
            print(f"  - {d}", file=sys.stderr)
    if json_path:
        payload = {"error": {"type": kind, "message": message, "details": list(details or [])}}
        try:
            write_report(payload, json_path)
        except OSError:
            pass
    return EXIT_INPUT


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    json_path = getattr(args, "json", None)
    try:
        params = dict(args.param)
        if args.verb == "catalog":
            return _catalog(args.name, params, json_path)
        m = resolve(args.ref, params)
        opts = Options(points=args.points, seed=args.seed, tol=args.tol,
                       flag_tol=dict(args.flag_tol))
        runner = run_analyze if args.verb == "analyze" else run_compare_oracle
        report = runner(m, opts)
        if json_path:
            write_report(report, json_path)
    except ManifestError as exc:
        return _fail("manifest validation failed", "validation", json_path, exc.errors)
    except ConcircleError as exc:
        return _fail(str(exc), type(exc).__name__, json_path)
    except OSError as exc:
        return _fail(str(exc), "io", json_path)
    if args.verb == "analyze":
        print(_summary(report))
        return EXIT_OK if report["consistent"] else EXIT_INCONSISTENT
    oa = report["oracle_agreement"]
    print(f"oracle agreement for {m.name}: {_fmt(oa['pass'])}")
    for b, d in sorted(oa["blocks"].items()):
        print(f"  {b}: {d:.3e}")
    return EXIT_OK


def _catalog(name: str, params: dict, json_path) -> int:
    if name == "list":
        for n in catalog.entry_names():
            e = catalog.ENTRIES[n]
            defaults = ", ".join(f"{k}={v}" for k, v in e.defaults.items())
            print(f"{n:22s} {e.help}" + (f"  [{defaults}]" if defaults else ""))
        return EXIT_OK
    m = catalog.build(name, params)
    doc = m.to_document()
    if json_path:
        write_report(doc, json_path)
    else:
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
