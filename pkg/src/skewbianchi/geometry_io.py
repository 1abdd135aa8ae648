"""Geometry documents: parsing and export of the JSON schemas of both backends.

Lie documents::

    {"backend": "lie", "dim": 3,
     "c": [{"i": 1, "j": 2, "k": 3, "v": "1"}, ...],
     "T": [{"i": 1, "j": 2, "k": 3, "v": "-1/2"}, ...],
     "f": "0"}

Chart documents::

    {"backend": "chart", "dim": 4, "box": [[-1, 1], ...], "h": 1e-3,
     "grid": [[0.1, 0.2, -0.3, 0.4], ...],
     "g": [["exp(2*x1)", "0", ...], ...],
     "T": [{"i": 1, "j": 2, "k": 3, "expr": "1 + x4"}], "f": "0"}

Indices are 1-based.  Each antisymmetry orbit may be listed once: ``c`` is
antisymmetric in its first two slots, ``T`` in all three.
"""

from __future__ import annotations

import itertools
import json
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from .chart import ChartGeometry
from .errors import GeometryParseError, SkewBianchiError
from .lie import MAX_DIM, LieGeometry
from .tensor_core import QArray, format_rational, parse_rational, permutation_sign

Geometry = LieGeometry | ChartGeometry


def _require(doc: dict, key: str, where: str):
    if key not in doc:
        raise GeometryParseError(f"missing field {key!r}", where)
    return doc[key]


def _rational(value, where: str) -> Fraction:
    if isinstance(value, bool):
        raise GeometryParseError("expected a rational number", where)
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return parse_rational(value)
        except (ValueError, ZeroDivisionError):
            raise GeometryParseError(f"cannot read {value!r} as a rational number", where) from None
    raise GeometryParseError("rational values must be integers or strings like \"3/4\"", where)


def _index(entry: dict, key: str, n: int, where: str) -> int:
    value = _require(entry, key, where)
    if isinstance(value, bool) or not isinstance(value, int) or not 1 <= value <= n:
        raise GeometryParseError(f"index {key} must be an integer in 1..{n}", f"{where}.{key}")
    return value - 1


def _dim(doc: dict) -> int:
    n = _require(doc, "dim", "$")
    if isinstance(n, bool) or not isinstance(n, int) or not 2 <= n <= MAX_DIM:
        raise GeometryParseError(f"dim must be an integer in 2..{MAX_DIM}", "$.dim")
    return n


def _entries(doc: dict, key: str, where: str) -> list:
    value = doc.get(key, [])
    if not isinstance(value, list) or not all(isinstance(e, dict) for e in value):
        raise GeometryParseError("expected a list of component objects", where)
    return value


def _brackets(doc: dict, n: int) -> QArray:
    out = np.zeros((n, n, n), dtype=object)
    out[...] = Fraction(0)
    seen: dict[tuple, int] = {}
    for pos, entry in enumerate(_entries(doc, "c", "$.c")):
        where = f"$.c[{pos}]"
        i, j, k = (_index(entry, a, n, where) for a in "ijk")
        v = _rational(_require(entry, "v", where), f"{where}.v")
        if i == j:
            if v != 0:
                raise GeometryParseError("c_iik must vanish", where)
            continue
        orbit = (min(i, j), max(i, j), k)
        if orbit in seen:
            raise GeometryParseError(f"orbit already given at $.c[{seen[orbit]}]", where)
        seen[orbit] = pos
        out[i, j, k] = v
        out[j, i, k] = -v
    return QArray.from_values(out)


def _torsion_exact(doc: dict, n: int) -> QArray:
    out = np.zeros((n, n, n), dtype=object)
    out[...] = Fraction(0)
    seen: dict[tuple, int] = {}
    for pos, entry in enumerate(_entries(doc, "T", "$.T")):
        where = f"$.T[{pos}]"
        idx = tuple(_index(entry, a, n, where) for a in "ijk")
        v = _rational(_require(entry, "v", where), f"{where}.v")
        if len(set(idx)) < 3:
            if v != 0:
                raise GeometryParseError("a 3-form has no component with a repeated index", where)
            continue
        orbit = tuple(sorted(idx))
        if orbit in seen:
            raise GeometryParseError(f"orbit already given at $.T[{seen[orbit]}]", where)
        seen[orbit] = pos
        for perm in itertools.permutations(range(3)):
            out[tuple(idx[p] for p in perm)] = permutation_sign(perm) * v
    return QArray.from_values(out)


def parse_lie(doc: dict, mode: str = "exact", name: str = "") -> LieGeometry:
    n = _dim(doc)
    c = _brackets(doc, n)
    T = _torsion_exact(doc, n)
    f = _rational(doc.get("f", "0"), "$.f")
    try:
        geo = LieGeometry(c, T, f, name or str(doc.get("name", "")))
    except SkewBianchiError as exc:
        raise GeometryParseError(str(exc), "$.c") from None
    return geo if mode == "exact" else geo.to_float()


def _float_list(value, where: str, length: int | None = None) -> list:
    if not isinstance(value, list) or (length is not None and len(value) != length):
        raise GeometryParseError(f"expected a list of {length or 'some'} numbers", where)
    out = []
    for k, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise GeometryParseError("expected a number", f"{where}[{k}]")
        out.append(float(v))
    return out


def parse_chart(doc: dict, name: str = "") -> ChartGeometry:
    n = _dim(doc)
    box_doc = _require(doc, "box", "$")
    if not isinstance(box_doc, list) or len(box_doc) != n:
        raise GeometryParseError(f"box needs {n} [lo, hi] pairs", "$.box")
    box = [_float_list(b, f"$.box[{k}]", 2) for k, b in enumerate(box_doc)]
    grid_doc = _require(doc, "grid", "$")
    if not isinstance(grid_doc, list) or not grid_doc:
        raise GeometryParseError("grid must be a non-empty list of points", "$.grid")
    grid = [_float_list(x, f"$.grid[{k}]", n) for k, x in enumerate(grid_doc)]
    h = doc.get("h", 1e-3)
    if isinstance(h, bool) or not isinstance(h, (int, float)) or h <= 0:
        raise GeometryParseError("h must be a positive number", "$.h")
    g = _require(doc, "g", "$")
    if not isinstance(g, list) or len(g) != n or any(not isinstance(r, list) or len(r) != n for r in g):
        raise GeometryParseError(f"g must be an {n} x {n} table of expressions", "$.g")
    T = []
    seen: dict[tuple, int] = {}
    for pos, entry in enumerate(_entries(doc, "T", "$.T")):
        where = f"$.T[{pos}]"
        idx = tuple(_index(entry, a, n, where) for a in "ijk")
        expr = _require(entry, "expr", where)
        if len(set(idx)) < 3:
            raise GeometryParseError("a 3-form has no component with a repeated index", where)
        orbit = tuple(sorted(idx))
        if orbit in seen:
            raise GeometryParseError(f"orbit already given at $.T[{seen[orbit]}]", where)
        seen[orbit] = pos
        T.append({"i": idx[0] + 1, "j": idx[1] + 1, "k": idx[2] + 1, "expr": expr})
    f = doc.get("f")
    try:
        return ChartGeometry.from_expressions(n, g, T, f, box, grid, float(h),
                                              name or str(doc.get("name", "")))
    except GeometryParseError:
        raise
    except SkewBianchiError as exc:
        raise GeometryParseError(str(exc), "$") from None


def parse_geometry(doc: Any, mode: str = "exact", name: str = "") -> Geometry:
    """Build a geometry from a decoded JSON document.

    ``mode`` selects the scalar system of Lie geometries; charts are always float.
    """
    if not isinstance(doc, dict):
        raise GeometryParseError("a geometry document must be a JSON object", "$")
    backend = _require(doc, "backend", "$")
    if backend == "lie":
        return parse_lie(doc, mode, name)
    if backend == "chart":
        return parse_chart(doc, name)
    raise GeometryParseError(f"unknown backend {backend!r}", "$.backend")


def load_geometry(path: str | Path, mode: str = "exact") -> Geometry:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise GeometryParseError(f"cannot read {path}: {exc.strerror}", "$") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GeometryParseError(f"invalid JSON: {exc.msg}", f"line {exc.lineno} column {exc.colno}") from None
    return parse_geometry(doc, mode, Path(path).stem)


def _fmt_scalar(value) -> str:
    if isinstance(value, Fraction):
        return format_rational(value)
    return repr(float(value))


def dump_geometry(geo: Geometry) -> dict:
    """The JSON document of ``geo`` with one canonical entry per orbit."""
    if geo.backend == "lie":
        n = geo.dim
        c = geo.c.to_fractions() if geo.exact else np.asarray(geo.c)
        T = geo.T.to_fractions() if geo.exact else np.asarray(geo.T)
        doc = {"backend": "lie", "dim": n, "name": geo.name,
               "c": [{"i": i + 1, "j": j + 1, "k": k + 1, "v": _fmt_scalar(c[i, j, k])}
                     for i in range(n) for j in range(i + 1, n) for k in range(n) if c[i, j, k] != 0],
               "T": [{"i": i + 1, "j": j + 1, "k": k + 1, "v": _fmt_scalar(T[i, j, k])}
                     for i, j, k in itertools.combinations(range(n), 3) if T[i, j, k] != 0],
               "f": _fmt_scalar(geo.f)}
        return doc
    if geo.source is None:
        raise GeometryParseError("chart geometry was not built from expressions and cannot be exported", "$")
    doc = {"backend": "chart", "dim": geo.dim, "name": geo.name,
           "box": [list(b) for b in geo.box], "h": geo.h, "grid": [list(x) for x in geo.grid],
           "g": geo.source["g"], "T": geo.source["T"]}
    if geo.source.get("f") is not None:
        doc["f"] = geo.source["f"]
    return doc
