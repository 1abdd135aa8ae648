"""Command-line front end.

Exit codes: 0 success (classifier "false" verdicts included), 1 a universal
identity failed, an implication was violated or fuzzing found a
counterexample, 2 unreadable input, 3 unsupported request.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from . import __version__
from .catalog import CatalogError, build_entries, entry_names, load_catalog
from .errors import CapabilityError, GeometryParseError, InvariantViolation, SkewBianchiError
from .fuzz import FuzzFailure, fuzz_algebraic
from .geometry_io import dump_geometry, load_geometry
from .identities import (CLASSIFIERS, DEFAULT_TOLERANCE, REGISTRY, UNIVERSAL, _jsonable,
                         evaluate_identity, make_pack)
from .tensor_core import parse_rational

THREADS_ENV = "SKEWBIANCHI_THREADS"

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_CAPABILITY = 0, 1, 2, 3


def _rational_arg(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _add_input_options(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--catalog", metavar="NAME", help="catalog entry name, or 'all'")
    src.add_argument("--input", metavar="PATH", help="geometry JSON file")
    p.add_argument("--mode", choices=("auto", "exact", "float"), default="auto",
                   help="scalar system (auto: exact for Lie, float for charts)")
    p.add_argument("--tol", type=float, default=DEFAULT_TOLERANCE, help="float-mode tolerance")
    p.add_argument("--h", type=float, default=None, help="finite-difference step for charts")
    p.add_argument("--grid", default=None, help="JSON list of chart evaluation points")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.add_argument("--seed", type=int, default=0, help="recorded in the report")
    p.add_argument("--lam", type=_rational_arg, default=Fraction(1), help="catalog parameter lambda")
    p.add_argument("--t", type=_rational_arg, default=Fraction(1, 2), help="catalog parameter t")
    p.add_argument("--heis-torsion", default="e345", help="torsion of HEIS3_R3: e345, e124 or mixed")
    p.add_argument("--output", metavar="PATH", help="write the report here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="skewbianchi",
                                     description="Residual checks for connections with skew torsion.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="evaluate identities")
    _add_input_options(check)
    check.add_argument("--identities", default="all", help="'all' or a comma-separated list of ids")

    classify = sub.add_parser("classify", help="run all classifiers")
    _add_input_options(classify)

    fuzz = sub.add_parser("fuzz", help="exact random search for counterexamples")
    fuzz.add_argument("--seed", type=int, default=1)
    fuzz.add_argument("--count", type=int, default=200)
    fuzz.add_argument("--dims", default="3,5,6", help="e.g. 3..7 or 3,5,6")
    fuzz.add_argument("--families", default=None, help="comma-separated algebra families")
    fuzz.add_argument("--no-classify", action="store_true", help="skip the classifier implications")
    fuzz.add_argument("--format", choices=("json", "text"), default="json")
    fuzz.add_argument("--output", metavar="PATH")

    cat = sub.add_parser("catalog", help="list or export catalog entries")
    cat_sub = cat.add_subparsers(dest="catalog_command", required=True)
    cat_sub.add_parser("list", help="names, descriptions and expected verdicts")
    export = cat_sub.add_parser("export", help="write an entry as a geometry JSON document")
    export.add_argument("name")
    export.add_argument("--lam", type=_rational_arg, default=Fraction(1))
    export.add_argument("--t", type=_rational_arg, default=Fraction(1, 2))
    export.add_argument("--heis-torsion", default="e345")
    export.add_argument("--output", metavar="PATH")
    return parser


# input resolution --------------------------------------------------------------


def _resolve_geometries(args) -> list:
    mode = args.mode
    lie_mode = "float" if mode == "float" else "exact"
    if args.input:
        geos = [load_geometry(args.input, lie_mode)]
    else:
        params = dict(lam=args.lam, t=args.t, heis_torsion=args.heis_torsion, h=args.h or 1e-3)
        entries = load_catalog(lie_mode, **params)
        if args.catalog.lower() == "all":
            geos = [e.geometry for e in entries]
        else:
            key = args.catalog.upper()
            geos = [e.geometry for e in entries if e.name == key]
            if not geos:
                raise CatalogError(f"no catalog entry {args.catalog!r}; known: {', '.join(entry_names())}")
    if mode == "exact":
        charts = [g.name or "<input>" for g in geos if g.backend == "chart"]
        if charts:
            raise CapabilityError("exact mode needs the Lie backend; finite differences are float-only "
                                  f"(chart geometries: {', '.join(charts)})")
    out = []
    for g in geos:
        if g.backend == "chart":
            if args.h is not None and args.input:
                g = g.with_step(args.h)
            if args.grid is not None:
                g = g.with_grid(_grid(args.grid))
        out.append(g)
    return out


def _grid(text: str) -> list:
    try:
        grid = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GeometryParseError(f"grid is not valid JSON: {exc.msg}", "--grid") from None
    if not isinstance(grid, list) or not grid or not all(isinstance(x, list) for x in grid):
        raise GeometryParseError("grid must be a non-empty list of points", "--grid")
    return grid


def _config(args) -> dict:
    keep = ("command", "catalog", "input", "mode", "tol", "h", "grid", "seed", "lam", "t", "heis_torsion",
            "identities")
    return _jsonable({k: getattr(args, k) for k in keep if hasattr(args, k)})


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def _map(fn, items: list) -> list:
    """Order-preserving map, parallel when the thread variable asks for it."""
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _emit(doc: dict, args, text: str | None = None) -> None:
    out = text if (getattr(args, "format", "json") == "text" and text is not None) else \
        json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(out)
    else:
        sys.stdout.write(out)


# commands ----------------------------------------------------------------------


def _selected(text: str) -> list[str] | None:
    if text.strip().lower() == "all":
        return None
    ids = [s.strip().upper() for s in text.split(",") if s.strip()]
    unknown = [i for i in ids if i not in REGISTRY]
    if unknown:
        raise CapabilityError(f"unknown identities {unknown}; known: {', '.join(REGISTRY)}")
    return ids


def _check_one(geo, ids, tol) -> dict:
    explicit = ids is not None
    names = ids if explicit else list(REGISTRY)
    has_f = getattr(geo, "potential_fn", True) is not None
    pack = make_pack(geo)
    reports, skipped = [], []
    for name in names:
        if REGISTRY[name].needs_potential and not has_f:
            if explicit:
                raise CapabilityError(f"{name} needs a potential f; geometry {geo.name!r} supplies none")
            skipped.append(name)
            continue
        reports.append(evaluate_identity(name, geo, tolerance=tol, pack=pack).to_json())
    universal_ok = all(r["verdict"] == "pass" for r in reports if r["identity"] in UNIVERSAL)
    return {"name": geo.name, "backend": geo.backend, "dim": geo.dim,
            "mode": "exact" if geo.exact else "float", "reports": reports, "skipped": skipped,
            "universal_ok": universal_ok}


def cmd_check(args) -> int:
    ids = _selected(args.identities)
    geos = _resolve_geometries(args)
    results = _map(lambda g: _check_one(g, ids, args.tol), geos)
    ok = all(r["universal_ok"] for r in results)
    doc = {"tool": "skewbianchi", "version": __version__, "command": "check", "config": _config(args),
           "geometries": results, "status": "ok" if ok else "universal-identity-failure"}
    lines = []
    for r in results:
        lines.append(f"{r['name']} ({r['backend']}, {r['mode']})")
        for rep in r["reports"]:
            flag = " marginal" if rep["marginal"] else ""
            lines.append(f"  {rep['identity']:16s} {rep['kind']:11s} {str(rep['residual']):>24s} "
                         f"{rep['verdict']}{flag}")
    lines.append(f"status: {doc['status']}")
    _emit(doc, args, "\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def _classify_one(geo, tol) -> dict:
    out = {"name": geo.name, "backend": geo.backend, "dim": geo.dim,
           "mode": "exact" if geo.exact else "float", "classifiers": {}}
    has_f = getattr(geo, "potential_fn", True) is not None
    for name, fn in CLASSIFIERS.items():
        if name == "soliton" and not has_f:
            out["classifiers"][name] = {"classifier": name, "verdict": None,
                                        "notes": ["no potential f supplied"]}
            continue
        out["classifiers"][name] = fn(geo, None, tol).to_json()
    return out


def cmd_classify(args) -> int:
    geos = _resolve_geometries(args)
    results = _map(lambda g: _classify_one(g, args.tol), geos)
    doc = {"tool": "skewbianchi", "version": __version__, "command": "classify", "config": _config(args),
           "geometries": results, "status": "ok"}
    lines = []
    for r in results:
        lines.append(f"{r['name']} ({r['backend']}, {r['mode']})")
        for name, c in r["classifiers"].items():
            extra = ""
            payload = c.get("payload", {})
            if name == "nabla_einstein" and c["verdict"]:
                extra = f"  C={payload.get('C')}  B={payload.get('B')}"
            if name == "soliton" and "conditions" in payload:
                extra = "  " + " ".join(f"{k}={v}" for k, v in payload["conditions"].items())
            lines.append(f"  {name:15s} {c['verdict']}{extra}")
    _emit(doc, args, "\n".join(lines) + "\n")
    return EXIT_OK


def cmd_fuzz(args) -> int:
    families = [f.strip() for f in args.families.split(",")] if args.families else None
    try:
        report = fuzz_algebraic(args.seed, args.count, args.dims, classify=not args.no_classify,
                                families=families)
    except FuzzFailure as exc:
        doc = {"tool": "skewbianchi", "command": "fuzz", "verdict": "fail", "message": str(exc),
               "counterexample": exc.counterexample}
        _emit(doc, args, f"FAIL {exc}\n{json.dumps(exc.counterexample, sort_keys=True)}\n")
        return EXIT_FAIL
    doc = {"tool": "skewbianchi", "version": __version__, "command": "fuzz", **report.to_json()}
    _emit(doc, args, f"pass: {report.count} instances, {report.evaluations} exact evaluations\n")
    return EXIT_OK


def cmd_catalog(args) -> int:
    if args.catalog_command == "list":
        for e in build_entries():
            verdicts = " ".join(f"{k}={'T' if v else 'F'}" for k, v in e.verdicts.items())
            sys.stdout.write(f"{e.name:24s} {e.geometry.backend:5s} n={e.geometry.dim}  {e.description}\n"
                             f"{'':24s} {verdicts}\n")
        return EXIT_OK
    key = args.name.upper()
    entries = [e for e in build_entries(args.lam, args.t, True, args.heis_torsion) if e.name == key]
    if not entries:
        raise CatalogError(f"no catalog entry {args.name!r}; known: {', '.join(entry_names())}")
    doc = dump_geometry(entries[0].geometry)
    _emit(doc, args)
    return EXIT_OK


COMMANDS = {"check": cmd_check, "classify": cmd_classify, "fuzz": cmd_fuzz, "catalog": cmd_catalog}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except InvariantViolation as exc:
        sys.stderr.write(f"invariant violation: {exc}\n")
        return EXIT_FAIL
    except CapabilityError as exc:
        sys.stderr.write(f"unsupported: {exc}\n")
        return EXIT_CAPABILITY
    except GeometryParseError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_PARSE
    except SkewBianchiError as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
