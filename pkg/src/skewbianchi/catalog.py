"""Built-in example geometries with oracle values and expected classifier verdicts.

Every entry carries closed-form oracle values; :func:`load_catalog` recomputes
them with the engine and refuses to return a catalog whose self-test fails.
The flat-torus entries model ``R^n`` pointwise; the lattice quotient plays no
role in pointwise residuals.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .chart import ChartGeometry
from .curvature import FieldPack
from .errors import SkewBianchiError
from .expr import compile_expression
from .lie import LieGeometry, abelian, heisenberg_plus_abelian, su2
from .tensor_core import QArray, basis_form, to_float

CATALOG_VERSION = "1"


class CatalogError(SkewBianchiError):
    """A catalog entry does not reproduce its oracle values."""


@dataclass(frozen=True)
class Oracle:
    """A closed-form value: ``extract(pack)`` must equal ``expected(pack)``."""

    name: str
    extract: Callable[[FieldPack], object]
    expected: Callable[[FieldPack], object]
    provenance: str = "derived"


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    geometry: object
    oracles: tuple = ()
    verdicts: dict = field(default_factory=dict)
    description: str = ""


# helpers ---------------------------------------------------------------------


def _eye(n: int, value, exact: bool):
    if exact:
        return QArray(np.eye(n, dtype=np.int64), value)
    return np.eye(n) * float(value)


def _diag(values, exact: bool):
    if exact:
        n = len(values)
        out = np.zeros((n, n), dtype=object)
        out[...] = Fraction(0)
        for k, v in enumerate(values):
            out[k, k] = Fraction(v)
        return QArray.from_values(out)
    return np.diag([float(v) for v in values])


def _const(value):
    return lambda p: value


def _lie(c: QArray, T: QArray, name: str, exact: bool, f=0) -> LieGeometry:
    geo = LieGeometry(c, T, f, name)
    return geo if exact else geo.to_float()


def _zero_T(geo):
    if geo.backend == "lie":
        return LieGeometry(geo.c, geo.T * 0, geo.f, geo.name + "_ZERO_T")
    src = dict(geo.source)
    return ChartGeometry.from_expressions(geo.dim, src["g"], [], src.get("f"), geo.box, geo.grid,
                                          geo.h, geo.name + "_ZERO_T")


# Lie entries -----------------------------------------------------------------


def flat_torus_3(lam=1, exact: bool = True) -> CatalogEntry:
    lam = Fraction(lam)
    geo = _lie(abelian(3), basis_form(3, [0, 1, 2], lam), "FLAT_TORUS_3", exact)
    q = lam * lam
    oracles = (
        Oracle("Ric", lambda p: p.Ric, _const(_eye(3, -q / 2, exact))),
        Oracle("Scal", lambda p: p.Scal, _const(-3 * q / 2)),
        Oracle("T2", lambda p: p.T2, _const(_eye(3, 2 * q, exact))),
        Oracle("normT", lambda p: p.normT, _const(6 * q)),
        Oracle("Scalg", lambda p: p.Scalg, _const(0)),
        Oracle("sigma", lambda p: p.sigma, _const(0)),
        Oracle("theta", lambda p: p.theta, _const(0)),
        Oracle("Theta", lambda p: p.Theta, _const(0)),
    )
    nonzero = lam != 0
    verdicts = {"first_bianchi": True, "pair_symmetry": True, "zz_flat": not nonzero,
                "nabla_einstein": True, "soliton": not nonzero}
    return CatalogEntry("FLAT_TORUS_3", geo, oracles, verdicts,
                        "abelian R^3 with T = lam e123")


def flat_torus_6(lam=1, exact: bool = True) -> CatalogEntry:
    lam = Fraction(lam)
    T = basis_form(6, [0, 1, 2], lam) + basis_form(6, [3, 4, 5], lam)
    geo = _lie(abelian(6), T, "FLAT_TORUS_6", exact)
    q = lam * lam
    oracles = (
        Oracle("T2", lambda p: p.T2, _const(_eye(6, 2 * q, exact))),
        Oracle("normT", lambda p: p.normT, _const(12 * q)),
        Oracle("Ric", lambda p: p.Ric, _const(_eye(6, -q / 2, exact))),
        Oracle("sigma", lambda p: p.sigma, _const(0)),
    )
    nonzero = lam != 0
    verdicts = {"first_bianchi": True, "pair_symmetry": True, "zz_flat": not nonzero,
                "nabla_einstein": True, "soliton": not nonzero}
    return CatalogEntry("FLAT_TORUS_6", geo, oracles, verdicts,
                        "abelian R^6 with T = lam (e123 + e456)")


def flat_torus_5(lam=1, exact: bool = True) -> CatalogEntry:
    lam = Fraction(lam)
    T = basis_form(5, [0, 1, 2], lam) + basis_form(5, [0, 3, 4], lam)
    geo = _lie(abelian(5), T, "FLAT_TORUS_5", exact)
    q = lam * lam
    oracles = (
        Oracle("T2", lambda p: p.T2, _const(_diag([4 * q, 2 * q, 2 * q, 2 * q, 2 * q], exact))),
        Oracle("normT", lambda p: p.normT, _const(12 * q)),
        Oracle("Ric", lambda p: p.Ric, _const(_diag([-q, -q / 2, -q / 2, -q / 2, -q / 2], exact))),
    )
    nonzero = lam != 0
    verdicts = {"first_bianchi": not nonzero, "pair_symmetry": True, "zz_flat": not nonzero,
                "nabla_einstein": not nonzero, "soliton": not nonzero}
    return CatalogEntry("FLAT_TORUS_5", geo, oracles, verdicts,
                        "abelian R^5 with the degenerate T = lam (e123 + e145)")


def _su2_entry(name: str, lam, t, exact: bool) -> CatalogEntry:
    lam, t = Fraction(lam), Fraction(t)
    geo = _lie(su2(lam), basis_form(3, [0, 1, 2], -t * lam), name, exact)
    q = lam * lam
    scal = Fraction(3, 2) * q * (1 - t * t)
    flat = t * t == 1 or lam == 0
    oracles = [
        Oracle("Ricg", lambda p: p.Ricg, _const(_eye(3, q / 2, exact))),
        Oracle("normT", lambda p: p.normT, _const(6 * q * t * t)),
        Oracle("Scal", lambda p: p.Scal, _const(scal)),
        Oracle("nablaT", lambda p: p.nablaT, _const(0)),
    ]
    if flat:
        oracles += [Oracle("Gamma", lambda p: p.G, _const(0)), Oracle("R", lambda p: p.R, _const(0))]
    verdicts = {"first_bianchi": True, "pair_symmetry": True, "zz_flat": flat, "nabla_einstein": True,
                "soliton": flat}
    return CatalogEntry(name, geo, tuple(oracles), verdicts,
                        f"su(2) with c = lam eps and T = -{t} lam eps")


def su2_cs(lam=1, exact: bool = True) -> CatalogEntry:
    return _su2_entry("SU2_CS", lam, 1, exact)


def su2_family(lam=1, t=Fraction(1, 2), exact: bool = True) -> CatalogEntry:
    return _su2_entry("SU2_FAMILY", lam, t, exact)


HEIS_TORSIONS = {
    "e345": [([2, 3, 4], 1)],
    "e124": [([0, 1, 3], 1)],
    "mixed": [([2, 3, 4], 1), ([0, 1, 5], Fraction(1, 2)), ([1, 3, 5], 3)],
}


def heis3_r3(torsion: str = "e345", lam=1, exact: bool = True) -> CatalogEntry:
    if torsion not in HEIS_TORSIONS:
        raise CatalogError(f"unknown HEIS3_R3 torsion {torsion!r}; choose from {sorted(HEIS_TORSIONS)}")
    lam = Fraction(lam)
    T = basis_form(6, [0, 1, 2], 0)
    for idx, v in HEIS_TORSIONS[torsion]:
        T = T + basis_form(6, idx, lam * Fraction(v))
    geo = _lie(heisenberg_plus_abelian(3), T, "HEIS3_R3", exact)
    h = Fraction(1, 2)
    oracles = (
        Oracle("Ricg", lambda p: p.Ricg, _const(_diag([-h, -h, h, 0, 0, 0], exact))),
        Oracle("Scalg", lambda p: p.Scalg, _const(-h)),
    )
    verdicts = {"first_bianchi": False, "pair_symmetry": False, "zz_flat": False,
                "nabla_einstein": False, "soliton": False}
    return CatalogEntry("HEIS3_R3", geo, oracles, verdicts,
                        f"h3 + R^3 with [e1, e2] = e3 and T = {torsion}")


# chart entries ---------------------------------------------------------------

CHART_BOX = [[-1.0, 1.0]] * 4
CHART_GRID = [[0.1, 0.2, -0.3, 0.4], [0.5, -0.2, 0.1, 0.0], [-0.4, 0.3, 0.2, -0.1]]
PHI = "1 + 0.5*sin(x1) + 0.3*cos(x4) + 0.2*x2*x3"
CONFORMAL_U = "0.25*sin(6*x1) + 0.15*cos(5*x2)*x3"
CONFORMAL_T = [{"i": 1, "j": 2, "k": 3, "expr": "1 + 0.5*sin(x1+x4)"},
               {"i": 2, "j": 3, "k": 4, "expr": "0.7*cos(2*x3)"}]


def _flat_metric(n: int) -> list:
    return [["1" if a == b else "0" for b in range(n)] for a in range(n)]


def chart_phi(h: float = 1e-3) -> CatalogEntry:
    geo = ChartGeometry.from_expressions(4, _flat_metric(4), [{"i": 1, "j": 2, "k": 3, "expr": PHI}], "0",
                                         CHART_BOX, CHART_GRID, h, "CHART_PHI")
    phi = compile_expression(PHI, 4)
    oracles = (
        Oracle("Ricg", lambda p: p.Ricg, _const(0)),
        Oracle("normT", lambda p: p.normT, lambda p: 6 * phi(p.X) ** 2),
    )
    verdicts = {"first_bianchi": False, "pair_symmetry": False, "zz_flat": False,
                "nabla_einstein": False, "soliton": False}
    return CatalogEntry("CHART_PHI", geo, oracles, verdicts, "flat R^4 with T = phi(x) e123")


def _conformal_scalar(p: FieldPack) -> np.ndarray:
    """Closed-form scalar curvature of ``exp(2u) delta`` in dimension 4, ``u`` differentiated by hand."""
    x1, x2, x3 = p.X[:, 0], p.X[:, 1], p.X[:, 2]
    u = 0.25 * np.sin(6 * x1) + 0.15 * np.cos(5 * x2) * x3
    du = np.stack([1.5 * np.cos(6 * x1), -0.75 * np.sin(5 * x2) * x3, 0.15 * np.cos(5 * x2),
                   np.zeros_like(x1)], axis=-1)
    lap = -9.0 * np.sin(6 * x1) - 3.75 * np.cos(5 * x2) * x3
    n = 4
    return -np.exp(-2 * u) * (2 * (n - 1) * lap + (n - 2) * (n - 1) * (du ** 2).sum(-1))


def chart_conformal(h: float = 1e-3) -> CatalogEntry:
    g = [[f"exp(2*({CONFORMAL_U}))" if a == b else "0" for b in range(4)] for a in range(4)]
    geo = ChartGeometry.from_expressions(4, g, CONFORMAL_T, "0.3*x1*x2 + 0.1*sin(x3)",
                                         CHART_BOX, CHART_GRID, h, "CHART_CONFORMAL")
    oracles = (Oracle("Scalg", lambda p: p.Scalg, _conformal_scalar),)
    verdicts = {"first_bianchi": False, "pair_symmetry": False, "zz_flat": False,
                "nabla_einstein": False, "soliton": False}
    return CatalogEntry("CHART_CONFORMAL", geo, oracles, verdicts,
                        "conformally flat R^4 with non-constant T and f")


def chart_flat_linear_f(h: float = 1e-3) -> CatalogEntry:
    geo = ChartGeometry.from_expressions(4, _flat_metric(4), [], "0.5*x1 - 0.25*x3",
                                         CHART_BOX, CHART_GRID, h, "CHART_FLAT_LINEAR_F")
    verdicts = {"first_bianchi": True, "pair_symmetry": True, "zz_flat": True,
                "nabla_einstein": True, "soliton": True}
    return CatalogEntry("CHART_FLAT_LINEAR_F", geo, (Oracle("R", lambda p: p.R, _const(0)),), verdicts,
                        "flat R^4, T = 0, linear potential (a non-compact soliton)")


# assembly --------------------------------------------------------------------


def _zero_t_entry(entry: CatalogEntry) -> CatalogEntry:
    geo = _zero_T(entry.geometry)
    oracles = (Oracle("T", lambda p: p.T, _const(0)),
               Oracle("RICS_zero", lambda p: p.Ric - p.Ricg, _const(0)))
    flat = entry.name.startswith("FLAT_TORUS") or entry.name == "CHART_PHI"
    einstein = flat or entry.name == "SU2_CS"
    verdicts = {"first_bianchi": True, "pair_symmetry": True, "zz_flat": flat,
                "nabla_einstein": einstein, "soliton": flat}
    return CatalogEntry(geo.name, geo, oracles, verdicts, entry.description + ", torsion removed")


def build_entries(lam=1, t=Fraction(1, 2), exact: bool = True, heis_torsion: str = "e345",
                  h: float = 1e-3) -> list[CatalogEntry]:
    base = [flat_torus_3(lam, exact), flat_torus_6(lam, exact), flat_torus_5(lam, exact),
            su2_cs(lam, exact), su2_family(lam, t, exact), heis3_r3(heis_torsion, lam, exact),
            chart_phi(h), chart_conformal(h), chart_flat_linear_f(h)]
    zero = [_zero_t_entry(e) for e in base if e.name in
            ("FLAT_TORUS_3", "FLAT_TORUS_6", "FLAT_TORUS_5", "SU2_CS", "HEIS3_R3", "CHART_PHI",
             "CHART_CONFORMAL")]
    return base + zero


def _close(a, b, exact: bool, tol: float) -> float | Fraction | None:
    """The defect ``|a - b|``; ``None`` when it is within tolerance."""
    if exact:
        av = a.to_fractions() if isinstance(a, QArray) else np.asarray(a, dtype=object)
        bv = b.to_fractions() if isinstance(b, QArray) else np.asarray(b, dtype=object)
        diff = np.asarray(np.abs(av - bv), dtype=object)
        d = max(diff.flat) if diff.size else Fraction(0)
        return None if d == 0 else d
    av = to_float(a) if isinstance(a, QArray) else np.asarray(a, dtype=float)
    bv = to_float(b) if isinstance(b, QArray) else np.asarray(b, dtype=float)
    d = float(np.max(np.abs(av - bv))) if np.size(av) else 0.0
    return None if d <= tol else d


def self_test(entry: CatalogEntry, tol: float = 1e-6) -> None:
    geo = entry.geometry
    pack = FieldPack(geo, None if geo.homogeneous else geo.points)
    for oracle in entry.oracles:
        defect = _close(oracle.extract(pack), oracle.expected(pack), geo.exact, tol)
        if defect is not None:
            raise CatalogError(f"{entry.name}: oracle {oracle.name} off by {defect}")


def load_catalog(mode: str = "exact", lam=1, t=Fraction(1, 2), heis_torsion: str = "e345",
                 h: float = 1e-3, check: bool = True) -> list[CatalogEntry]:
    """All entries, self-tested.  ``mode`` picks the scalar system of the Lie entries."""
    entries = build_entries(lam, t, mode == "exact", heis_torsion, h)
    if check:
        for e in entries:
            self_test(e, 1e-12 if e.geometry.homogeneous else 1e-6)
    return entries


def entry_names() -> list[str]:
    return [e.name for e in build_entries()]


def get_entry(name: str, mode: str = "exact", **params) -> CatalogEntry:
    key = name.upper()
    for e in load_catalog(mode, **params):
        if e.name == key:
            return e
    raise CatalogError(f"no catalog entry {name!r}; known: {', '.join(entry_names())}")
