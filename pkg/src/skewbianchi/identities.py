"""Registry of curvature/torsion identities as residual functionals, plus classifiers.

Every identity is assembled from :class:`~skewbianchi.curvature.FieldPack`
quantities.  A residual is the max-abs over free indices of ``LHS - RHS``;
exact geometries pass only when the residual is identically zero.

Identity kinds:

``universal``
    holds for every metric connection with skew torsion; a nonzero residual
    is an implementation error.
``conditional``
    holds when the antecedent named in the classifier holds.
``condition``
    a structural condition whose truth is the classification answer.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .curvature import FieldPack, Geometry
from .errors import CapabilityError, InvariantViolation
from .tensor_core import Array, QArray, einsum, format_rational, maxabs

DEFAULT_TOLERANCE = 1e-6

# Fourth derivatives by four nested stencils lose about eps / h^4 to roundoff;
# identities of that depth are evaluated with the step scaled by this factor.
DEEP_STEP_FACTOR = 10.0

# Deliberate-bug switches used to check that the suite is not vacuous.
MUTATIONS: set[str] = {m for m in os.environ.get("SKEWBIANCHI_MUTATIONS", "").split(",") if m}


def _p(A: Array, src: str, dst: str = "xyzv") -> Array:
    """Reindex: ``_p(A, "yzxv")[x, y, z, v] = A[y, z, x, v]``."""
    return einsum(f"...{src}->...{dst}", A)


def _cyclic_R(R: Array) -> Array:
    """``R(X,Y,Z,V) + R(Y,Z,X,V) + R(Z,X,Y,V)``."""
    return R + _p(R, "yzxv") + _p(R, "zxyv")


def _v_cyclic_R(R: Array) -> Array:
    """``R(V,X,Y,Z) + R(V,Y,Z,X) + R(V,Z,X,Y)``."""
    return _p(R, "vxyz") + _p(R, "vyzx") + _p(R, "vzxy")


def _nablaT_terms(nT: Array):
    """The four shuffled copies of ``nabla T`` appearing in the dT expansion."""
    a = nT                     # (nabla_X T)(Y,Z,V)
    b = _p(nT, "yzxv")         # (nabla_Y T)(Z,X,V)
    c = _p(nT, "zxyv")         # (nabla_Z T)(X,Y,V)
    d = _p(nT, "vxyz")         # (nabla_V T)(X,Y,Z)
    return a, b, c, d


def _trace_nablaT_T(p: FieldPack, nT: Array) -> Array:
    """``(nabla_a T)_bcj T_abc``."""
    return einsum("...abcj,...abc->...j", nT, p.T)


# residual builders -----------------------------------------------------------


def _dh(p):
    a, b, c, d = _nablaT_terms(p.nablaT)
    return [p.dT - (a + b + c + p.sigma * 2 - d)]


def _rics1(p):
    return [p.Ricg - p.Ric - p.deltaT * p.q(1, 2) - p.T2 * p.q(1, 4)]


def _rics2(p):
    return [p.Scalg - p.Scal - p.normT * p.q(1, 4)]


def _rics3(p):
    return [p.Ric - _swap(p.Ric) + p.deltaT]


def _swap(S: Array) -> Array:
    return einsum("...ij->...ji", S)


def _first_bianchi_t(p):
    d = _p(p.nablaT, "vxyz")
    return [_cyclic_R(p.R) - (p.dT - p.sigma + d)]


def _gen(p):
    sign = 1 if "gen-sigma-sign" in MUTATIONS else -1
    return [_cyclic_R(p.R) - _v_cyclic_R(p.R) - (p.dT * p.q(3, 2) + p.sigma * sign)]


def _bi1v(p):
    d = _p(p.nablaT, "vxyz")
    return [_v_cyclic_R(p.R) - (p.dT * p.q(-1, 2) + d)]


def _h_gh(p):
    out = []
    for t in (p.q(1, 3), p.q(1), p.q(2)):
        out.append(p.nablagT - p.nabla_t_T(t) - p.sigma * (t * p.q(1, 2)))
    return out


def _sigt(p):
    return [einsum("...abc,...abci->...i", p.T, p.sigma)]


def _ein10(p):
    return [p.div_deltaT * 2 - einsum("...ia,...iaj->...j", p.deltaT, p.T)]


def _e12(p):
    tg = _trace_nablaT_T(p, p.nablagT)
    tn = _trace_nablaT_T(p, p.nablaT)
    half_d = p.dnormT * p.q(1, 2)
    return [p.Theta + einsum("...abcj,...abc->...j", p.dT, p.T),
            p.Theta - (tg * -3 + half_d),
            p.Theta - (tn * -3 + half_d)]


def _ein5(p):
    first = einsum("...ssia,...iaj->...j", p.nablaT, p.T)
    middle = einsum("...siaj,...sia->...j", p.nablaT, p.T)
    middle_g = einsum("...siaj,...sia->...j", p.nablagT, p.T)
    return [p.theta + first,
            p.theta - (-p.divT2 + middle),
            p.theta - (-p.divgT2 + middle_g),
            p.theta - (-p.divgT2 - p.Theta * p.q(1, 3) + p.dnormT * p.q(1, 6))]


def _e13(p):
    lhs = p.theta * 3 + p.Theta
    return [lhs - (p.dnormT * p.q(1, 2) - p.divgT2 * 3),
            lhs - (p.dnormT * p.q(1, 2) - p.divT2 * 3)]


def _e1(p):
    return [p.dScal - p.divRic * 2 + p.dnormT * p.q(1, 6) + p.theta + p.Theta * p.q(1, 6)]


def _rt(p):
    torsion_ric = einsum("...xij,...ij->...x", p.T, p.Ric)
    cyc = einsum("...ijk,...xijk->...x", p.T, p.R) \
        + einsum("...ijk,...xjki->...x", p.T, p.R) \
        + einsum("...ijk,...xkij->...x", p.T, p.R)
    return [p.dScal - p.divRic * 2 - torsion_ric * 2 + cyc * p.q(1, 3)]


def _secb(p):
    nR = p.cov("R", 4)                            # [x, v, y, z, w] = (nabla_x R)_vyzw
    letters = "xvyzw"

    def sh(src):
        return einsum(f"...{src}->...{letters}", nR)

    def tr(a, b, c):
        # R(T(a, b), c, Z, W)
        return einsum(f"...{a}{b}s,...s{c}zw->...{letters}", p.T, p.R)

    return [sh("xvyzw") + sh("vyxzw") + sh("yxvzw") + tr("x", "v", "y") + tr("v", "y", "x")
            + tr("y", "x", "v")]


def _two_bi(p):
    tn = _trace_nablaT_T(p, p.nablaT)
    return [p.dScal - p.divRic * 2 + p.dnormT * p.q(1, 4) + p.theta - tn * p.q(1, 2)]


def _biii(p):
    tn = _trace_nablaT_T(p, p.nablaT)
    six = p.theta * 6 + p.Theta + p.dnormT
    four = p.theta * 4 + p.dnormT - tn * 2
    return [six - four * p.q(3, 2)]


def _biii_condition(p):
    return [p.theta * 6 + p.Theta + p.dnormT]


def _gein2_universal(p):
    H = p.hess_f
    return [H - _swap(H) + einsum("...s,...sij->...ij", p.df, p.T)]


def _rb(p):
    return [_cyclic_R(p.R)]


def _pair_sym(p):
    return [p.R - _p(p.R, "zvxy")]


def _fourf_a(p):
    return [p.nablaT + _p(p.nablaT, "yxzv")]


def _fourf_c(p):
    return [p.dT - p.nablagT * 4]


def _bsk(p):
    return [p.dT + p.nablaT * 2, p.dT - p.sigma * p.q(2, 3)]


def _nabla13(p):
    return [p.nabla_t_T(p.q(1, 3))]


def _zz(p):
    return [p.R - _p(p.R, "zyxv")]


def _zz1(p):
    return [p.dT * 3 - p.sigma * 2]


def _rb2(p):
    return [p.dScal - p.divRic * 2]


def _eqdt(p):
    return [p.dScal - p.divRic * 2 + p.dnormT * p.q(1, 6)]


def _t11(p):
    return [p.theta * 3 + p.Theta]


def _six_theta(p):
    return [p.theta * 6 + p.Theta]


def _identity_matrix(p):
    n = p.n
    eye = QArray(np.eye(n, dtype=np.int64)) if p.geo.exact else np.eye(n)
    return eye


def _scal_over_n_times_g(p):
    eye = _identity_matrix(p)
    if p.geo.exact:
        return eye * (p.Scal.item() / p.n)
    return np.einsum("...,ij->...ij", p.Scal / p.n, eye)


def _ein2(p):
    return [p.Ric - _scal_over_n_times_g(p) + p.deltaT * p.q(1, 2)]


def _ein3(p):
    return [p.divRic - p.dScal * p.q(1, p.n) - p.theta * p.q(1, 4)]


def _ein6(p):
    n = p.n
    return [p.dScal * p.q(n - 2, n) - p.divgT2 * p.q(1, 2) + p.dnormT * p.q(1, 4)]


def _ein7(p):
    n = p.n
    return [p.dScal - p.divRic * 2 + p.dnormT * p.q(1, 6),
            p.dScal * p.q(n - 2, n) + p.dnormT * p.q(1, 6)]


def _ein11(p):
    n = p.n
    tail = p.dScal * p.q(n - 2, n)
    return [tail + einsum("...ia,...iaj->...j", p.deltaT, p.T) * p.q(1, 2) + p.dnormT * p.q(1, 6)
            + p.Theta * p.q(1, 6),
            tail - p.divgT2 * p.q(1, 2) + p.dnormT * p.q(1, 4)]


def _ein8_local(p):
    n = p.n
    return [p.dScal * p.q(n - 2, n) + p.dnormT * p.q(1, 2)]


def _gein1(p):
    return [p.Ricg - p.T2 * p.q(1, 4) + p.hess_g_f,
            p.deltaT + einsum("...s,...sij->...ij", p.df, p.T),
            p.dT]


def _gein2(p):
    H = p.hess_f
    return [H - _swap(H) - p.deltaT]


def _gein3(p):
    return [p.Ric + p.hess_f, p.Scal - p.lap_f]


def _gein4(p):
    dlap = p.grad(lambda q: q.lap_f)
    return [dlap - p.divRic * 2 + einsum("...ab,...abj->...j", p.deltaT, p.T) + p.dnormT * p.q(1, 6)]


def _gein7a(p):
    dlap = p.grad(lambda q: q.lap_f)
    dnormdf = p.grad(lambda q: q.norm_df)
    return [-dlap - dnormdf + p.dnormT * p.q(1, 6),
            -dlap + einsum("...js,...s->...j", p.Ric, p.df) * 2 + p.dnormT * p.q(1, 6)]


def _gein7b(p):
    dlap = p.grad(lambda q: q.lap_f)
    triple = einsum("...iij->...j", p.nabla_hess_f)         # nabla_i nabla_i nabla_j f
    return [dlap + triple * 2 + p.dnormT * p.q(1, 6),
            dlap - p.divRic_first * 2 + p.dnormT * p.q(1, 6)]


def _lap(p, fn):
    """``Delta h = -(nabla_i nabla_i h)`` for the scalar field ``fn(pack)``."""
    if p.geo.homogeneous:
        return p.geo.zeros(())
    dh = p.grad(fn)
    ddh = p.grad(lambda q: q.grad(fn))
    return -(einsum("...ii->...", ddh) - einsum("...iis,...s->...", p.G, dh))


def _gein8_eq(p):
    sixth = p.q(1, 6)
    base = _lap(p, lambda q: q.lap_f - q.normT * sixth)
    ric_norm = einsum("...ij,...ij->...", p.Ric, p.Ric)
    dRic_df = einsum("...j,...j->...", p.divRic_first, p.df)
    plus = p.grad(lambda q: q.lap_f + q.normT * sixth)
    return [base + dRic_df * 2 + einsum("...js,...js->...", p.Ric, p.hess_f) * 2,
            base + dRic_df * 2 - ric_norm * 2,
            base + einsum("...j,...j->...", plus, p.df) - ric_norm * 2]


def ffinn_value(p):
    """Right side of the soliton inequality ``0 <= Delta(S - 5/12|T|^2) + <d(S - 1/12|T|^2), df>``."""
    lap_part = _lap(p, lambda q: q.Scalg - q.normT * p.q(5, 12))
    grad_part = p.grad(lambda q: q.Scalg - q.normT * p.q(1, 12))
    return lap_part + einsum("...j,...j->...", grad_part, p.df)


@dataclass(frozen=True)
class Identity:
    id: str
    anchor: str
    kind: str
    compute: Callable[[FieldPack], list]
    needs_potential: bool = False
    deep: bool = False


REGISTRY: dict[str, Identity] = {}


def _register(id, anchor, kind, compute, needs_potential=False, deep=False):
    REGISTRY[id] = Identity(id, anchor, kind, compute, needs_potential, deep)


_register("DH", "dT(X,Y,Z,V) = (nabla_X T)(Y,Z,V) + (nabla_Y T)(Z,X,V) + (nabla_Z T)(X,Y,V) "
          "+ 2 sigma(X,Y,Z,V) - (nabla_V T)(X,Y,Z)", "universal", _dh)
_register("RICS1", "Ric^g = Ric + 1/2 deltaT + 1/4 T^2", "universal", _rics1)
_register("RICS2", "Scal^g = Scal + 1/4 |T|^2", "universal", _rics2)
_register("RICS3", "Ric(X,Y) - Ric(Y,X) = -deltaT(X,Y)", "universal", _rics3)
_register("FIRST_BIANCHI_T", "cyclic_XYZ R(X,Y,Z,V) = dT(X,Y,Z,V) - sigma(X,Y,Z,V) "
          "+ (nabla_V T)(X,Y,Z)", "universal", _first_bianchi_t)
_register("GEN", "cyclic_XYZ R(X,Y,Z,V) - [R(V,X,Y,Z) + R(V,Y,Z,X) + R(V,Z,X,Y)] "
          "= 3/2 dT - sigma", "universal", _gen)
_register("BI1V", "R(V,X,Y,Z) + R(V,Y,Z,X) + R(V,Z,X,Y) = -1/2 dT(X,Y,Z,V) + (nabla_V T)(X,Y,Z)",
          "universal", _bi1v)
_register("H_GH", "nabla^g T = nabla^t T + t/2 sigma (t = 1/3, 1, 2)", "universal", _h_gh)
_register("SIGT", "T_abc sigma_abci = 0", "universal", _sigt)
_register("EIN10", "2 nabla_i deltaT_ij = deltaT_ia T_iaj", "universal", _ein10)
_register("E12", "Theta_j = -dT_abcj T_abc = -3 nabla_a T_bcj T_abc + 1/2 d|T|^2_j "
          "(Levi-Civita and torsion connection)", "universal", _e12)
_register("EIN5", "theta_j = -nabla_s T2_sj - 1/3 Theta_j + 1/6 d|T|^2_j (with intermediate forms)",
          "universal", _ein5)
_register("E13", "3 theta + Theta = 1/2 d|T|^2 - 3 nabla_s T2_sj (Levi-Civita and torsion connection)",
          "universal", _e13)
_register("E1", "d(Scal) - 2 (nabla_i Ric)(X,e_i) + 1/6 d|T|^2 + theta + 1/6 Theta = 0",
          "universal", _e1)
_register("RT", "d(Scal) - 2 (nabla_i Ric)(X,e_i) - 2 T(X,e_i,e_j) Ric_ij "
          "+ 1/3 T_ijk [R(X,i,j,k) + R(X,j,k,i) + R(X,k,i,j)] = 0", "universal", _rt)
_register("SECB", "cyclic_XVY [(nabla_X R)(V,Y,Z,W) + R(T(X,V),Y,Z,W)] = 0", "universal", _secb)
_register("TWO_BI", "d(Scal)_j - 2 nabla_s Ric_js + 1/4 d|T|^2_j + theta_j "
          "- 1/2 nabla_a T_bcj T_abc = 0", "universal", _two_bi)
_register("BIII", "6 theta + Theta + d|T|^2 = 3/2 (4 theta + d|T|^2 - 2 nabla_a T_bcj T_abc)",
          "universal", _biii)
_register("BIII_COND", "6 theta + Theta + d|T|^2 = 0", "condition", _biii_condition)
_register("GEIN2_ANTISYM", "nabla_i nabla_j f - nabla_j nabla_i f = -df_s T_sij", "universal",
          _gein2_universal, needs_potential=True)

_register("RB", "R(X,Y,Z,V) + R(Y,Z,X,V) + R(Z,X,Y,V) = 0", "condition", _rb)
_register("PAIR_SYM", "R(X,Y,Z,V) = R(Z,V,X,Y)", "condition", _pair_sym)
_register("FOURF_A", "(nabla_X T)(Y,Z,V) = -(nabla_Y T)(X,Z,V)", "condition", _fourf_a)
_register("FOURF_B", "R(X,Y,Z,V) = R(Z,V,X,Y)", "condition", _pair_sym)
_register("FOURF_C", "dT = 4 nabla^g T", "condition", _fourf_c)
_register("BSK", "dT = -2 nabla T = 2/3 sigma", "conditional", _bsk)
_register("NABLA13", "nabla^{1/3} T = 0", "conditional", _nabla13)
_register("ZZ", "R(X,Y,Z,V) = R(Z,Y,X,V)", "condition", _zz)
_register("ZZ1", "3 dT = 2 sigma", "conditional", _zz1)
_register("RB2", "d(Scal)(X) - 2 (nabla_i Ric)(X,e_i) = 0", "condition", _rb2)
_register("EQDT", "d(Scal)_j - 2 nabla_i Ric_ji + 1/6 d|T|^2_j = 0 (when 6 theta + Theta = 0)",
          "conditional", _eqdt)
_register("SIX_THETA", "6 theta + Theta = 0", "condition", _six_theta)
_register("T11", "3 theta + Theta = 0", "condition", _t11)
_register("EIN2", "Ric = Scal/n g - 1/2 deltaT", "condition", _ein2)
_register("EIN3", "nabla_i Ric_ji = d(Scal)_j / n + 1/4 theta_j", "conditional", _ein3)
_register("EIN6", "(n-2)/n d(Scal)_j - 1/2 nabla^g_s T2_sj + 1/4 d|T|^2_j = 0", "conditional", _ein6)
_register("EIN11", "(n-2)/n d(Scal)_j + 1/2 deltaT_ia T_iaj + 1/6 d|T|^2_j + 1/6 Theta_j = 0 "
          "(and its second form)", "conditional", _ein11)
_register("EIN7", "d(Scal) - 2 nabla_i Ric_ij + 1/6 d|T|^2 = d((n-2)/n Scal + 1/6 |T|^2) = 0",
          "conditional", _ein7)
_register("EIN8", "d((n-2)/n Scal + 1/2 |T|^2) = 0", "conditional", _ein8_local)
_register("GEIN1", "Ric^g = 1/4 T^2 - nabla^g nabla^g f, deltaT = -df_s T_sij, dT = 0", "condition",
          _gein1, needs_potential=True)
_register("GEIN2", "nabla_i nabla_j f - nabla_j nabla_i f = deltaT_ij", "conditional", _gein2,
          needs_potential=True)
_register("GEIN3", "Ric = -nabla nabla f, Scal = Delta f", "conditional", _gein3, needs_potential=True)
_register("GEIN4", "nabla_j Delta f - 2 nabla_i Ric_ji + deltaT_ab T_abj + 1/6 d|T|^2_j = 0",
          "conditional", _gein4, needs_potential=True)
_register("GEIN7A", "-d(Delta f) - d|df|^2 + 1/6 d|T|^2 = -d(Delta f) + 2 Ric_js df_s + 1/6 d|T|^2 = 0",
          "conditional", _gein7a, needs_potential=True)
_register("GEIN7B", "d(Delta f) + 2 nabla_i nabla_i nabla_j f + 1/6 d|T|^2 "
          "= d(Delta f) - 2 nabla_i Ric_ij + 1/6 d|T|^2 = 0", "conditional", _gein7b,
          needs_potential=True)
_register("GEIN8_EQ", "Delta(Delta f - 1/6|T|^2) + 2 nabla_j Ric_js df_s + 2 Ric_js nabla_j nabla_s f = 0 "
          "(three equivalent forms)", "conditional", _gein8_eq, needs_potential=True, deep=True)

UNIVERSAL = [k for k, v in REGISTRY.items() if v.kind == "universal"]
FUZZ_IDENTITIES = ["SIGT", "E13", "E12", "EIN5", "GEN", "DH", "RICS1", "RICS2", "RICS3", "BI1V",
                   "FIRST_BIANCHI_T", "EIN10", "E1", "H_GH", "TWO_BI", "BIII", "RT", "SECB"]


# reports ---------------------------------------------------------------------


def _fmt(value):
    if isinstance(value, Fraction):
        return format_rational(value)
    return float(value)


@dataclass
class ResidualReport:
    """Residual of one identity over the evaluation grid."""

    identity: str
    anchor: str
    kind: str
    exact: bool
    residuals: list
    points: list | None
    tolerance: float
    witness: tuple | None = None
    payload: dict = field(default_factory=dict)

    @property
    def max_residual(self):
        return max(self.residuals) if self.residuals else (Fraction(0) if self.exact else 0.0)

    @property
    def argmax(self) -> int:
        return int(np.argmax([float(r) for r in self.residuals])) if self.residuals else 0

    @property
    def verdict(self) -> bool:
        if self.exact:
            return self.max_residual == 0
        return self.max_residual <= self.tolerance

    @property
    def marginal(self) -> bool:
        if self.exact:
            return False
        r = self.max_residual
        return self.tolerance / 10 < r <= self.tolerance * 10

    def to_json(self) -> dict:
        out = {
            "identity": self.identity,
            "anchor": self.anchor,
            "kind": self.kind,
            "mode": "exact" if self.exact else "float",
            "residual": _fmt(self.max_residual),
            "tolerance": 0 if self.exact else self.tolerance,
            "verdict": "pass" if self.verdict else "fail",
            "marginal": self.marginal,
            "point_of_max": self.points[self.argmax] if self.points else None,
            "per_point": [_fmt(r) for r in self.residuals],
        }
        if self.witness is not None:
            out["witness_index"] = list(self.witness)
        if self.payload:
            out["payload"] = _jsonable(self.payload)
        return out


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, Fraction):
        return format_rational(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, QArray):
        return [_jsonable(v) for v in value.to_fractions().tolist()] if value.ndim else \
            format_rational(value.item())
    return value


def _per_point(arr: Array, batched: bool):
    """Per-point max-abs and the free-index tuple of the overall maximum."""
    if isinstance(arr, QArray):
        if arr.ndim == 0:
            return [abs(arr.item())], ()
        flat = np.abs(arr.ints).reshape(-1) if arr.ints.dtype != object else \
            np.array([abs(int(v)) for v in arr.ints.flat], dtype=object)
        k = int(np.argmax(flat)) if flat.size else 0
        return [arr.maxabs()], tuple(int(i) for i in np.unravel_index(k, arr.shape))
    a = np.abs(np.asarray(arr, dtype=float))
    if not batched:
        k = int(np.argmax(a)) if a.size else 0
        return [float(a.max()) if a.size else 0.0], tuple(int(i) for i in np.unravel_index(k, a.shape))
    P = a.shape[0]
    flat = a.reshape(P, -1)
    per = flat.max(axis=1) if flat.shape[1] else np.zeros(P)
    worst = int(np.argmax(per))
    k = int(np.argmax(flat[worst])) if flat.shape[1] else 0
    return [float(v) for v in per], tuple(int(i) for i in np.unravel_index(k, a.shape[1:]))


def _has_potential(geo: Geometry) -> bool:
    return getattr(geo, "potential_fn", True) is not None


def make_pack(geo: Geometry, grid=None, deep: bool = False) -> FieldPack:
    if geo.homogeneous:
        return FieldPack(geo, None)
    if deep:
        geo = geo.with_step(geo.h * DEEP_STEP_FACTOR)
    X = geo.points if grid is None else np.asarray(grid, dtype=float)
    return FieldPack(geo, X)


def evaluate_identity(identity: str, geo: Geometry, grid=None, tolerance: float | None = None,
                      pack: FieldPack | None = None) -> ResidualReport:
    """Residual of ``identity`` on ``geo`` over ``grid`` (Lie backend: the identity element)."""
    if identity not in REGISTRY:
        raise CapabilityError(f"unknown identity {identity!r}; known: {', '.join(REGISTRY)}")
    entry = REGISTRY[identity]
    if entry.needs_potential and not _has_potential(geo):
        raise CapabilityError(f"{identity} needs a potential f; the geometry supplies none")
    if pack is None or (entry.deep and not geo.homogeneous):
        pack = make_pack(geo, grid if pack is None else pack.X, entry.deep)
    tol = DEFAULT_TOLERANCE if tolerance is None else tolerance
    payload = {"step": pack.geo.h} if not geo.homogeneous else None
    return residual_report(identity, entry.anchor, entry.kind, pack, entry.compute(pack), tol, payload)


def residual_report(identity: str, anchor: str, kind: str, pack: FieldPack, arrays: Sequence[Array],
                    tol: float, payload: dict | None = None) -> ResidualReport:
    batched = not pack.geo.homogeneous
    exact = pack.geo.exact
    per = None
    witness = None
    best = None
    for arr in arrays:
        vals, wit = _per_point(arr, batched)
        if per is None:
            per = list(vals)
            witness, best = wit, max(vals)
        else:
            if max(vals) > best:
                witness, best = wit, max(vals)
            per = [max(a, b) for a, b in zip(per, vals)]
    points = None if pack.X is None else [list(map(float, x)) for x in pack.X]
    return ResidualReport(identity, anchor, kind, exact, per or [], points, tol, witness,
                          payload or {})


# classifiers -----------------------------------------------------------------


@dataclass
class Classification:
    name: str
    verdict: bool
    reports: dict
    payload: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "classifier": self.name,
            "verdict": self.verdict,
            "reports": {k: r.to_json() for k, r in self.reports.items()},
            "payload": _jsonable(self.payload),
            "notes": list(self.notes),
        }


def _require(report: ResidualReport, context: str) -> None:
    if not report.verdict:
        raise InvariantViolation(
            f"{context}: {report.identity} residual {_fmt(report.max_residual)} exceeds tolerance")


def _spread(values) -> float | Fraction:
    vals = list(values)
    return max(vals) - min(vals) if vals else 0


def _scalar_values(arr: Array, batched: bool) -> list:
    if isinstance(arr, QArray):
        return [arr.item()]
    a = np.asarray(arr, dtype=float)
    return [float(v) for v in a.reshape(-1)] if batched else [float(a)]


def _spread_report(name: str, anchor: str, pack: FieldPack, values: list, tol: float) -> ResidualReport:
    s = _spread(values)
    exact = pack.geo.exact
    points = None if pack.X is None else [list(map(float, x)) for x in pack.X]
    return ResidualReport(name, anchor, "conditional", exact, [s], points[:1] if points else None, tol,
                          payload={"values": values})


def classify_first_bianchi(geo: Geometry, grid=None, tolerance: float | None = None) -> Classification:
    """Riemannian first Bianchi identity and the consequences it forces."""
    tol = DEFAULT_TOLERANCE if tolerance is None else tolerance
    pack = make_pack(geo, grid)
    rb = evaluate_identity("RB", geo, tolerance=tol, pack=pack)
    reports = {"RB": rb}
    result = Classification("first_bianchi", rb.verdict, reports)
    if not rb.verdict:
        result.payload["witness"] = {"index": list(rb.witness or ()),
                                     "residual": _fmt(rb.max_residual)}
        return result
    for name in ("BSK", "NABLA13", "RB2"):
        rep = evaluate_identity(name, geo, tolerance=tol, pack=pack)
        reports[name] = rep
        _require(rep, "first Bianchi holds")
    norms = _scalar_values(pack.normT, not geo.homogeneous)
    spread = _spread_report("NORM_T_CONST", "|T|^2 constant across grid", pack, norms, tol)
    dnorm = residual_report("D_NORM_T", "d|T|^2 = 0", "conditional", pack, [pack.dnormT], tol)
    reports["NORM_T_CONST"] = spread
    reports["D_NORM_T"] = dnorm
    _require(spread, "first Bianchi holds")
    _require(dnorm, "first Bianchi holds")
    result.payload["normT"] = norms[0]
    return result


def classify_pair_symmetry(geo: Geometry, grid=None, tolerance: float | None = None) -> Classification:
    """The three equivalent conditions: nabla T a 4-form, pair symmetry, dT = 4 nabla^g T."""
    tol = DEFAULT_TOLERANCE if tolerance is None else tolerance
    pack = make_pack(geo, grid)
    reports = {name: evaluate_identity(name, geo, tolerance=tol, pack=pack)
               for name in ("FOURF_A", "FOURF_B", "FOURF_C")}
    flags = [reports[k].verdict for k in ("FOURF_A", "FOURF_B", "FOURF_C")]
    if len(set(flags)) != 1:
        raise InvariantViolation(f"pair-symmetry equivalences disagree: {flags} "
                                 f"(residuals {[_fmt(r.max_residual) for r in reports.values()]})")
    result = Classification("pair_symmetry", flags[0], reports, payload={"flags": flags})
    if flags[0]:
        dT = residual_report("DT_ZERO", "dT = 0", "condition", pack, [pack.dT], tol)
        reports["DT_ZERO"] = dT
        if dT.verdict:
            ng = residual_report("NABLA_G_T", "nabla^g T = 0", "conditional", pack, [pack.nablagT], tol)
            reports["NABLA_G_T"] = ng
            _require(ng, "pair symmetry with closed torsion")
    return result


def classify_zz_flat(geo: Geometry, grid=None, tolerance: float | None = None) -> Classification:
    """The curvature condition ``R(X,Y,Z,V) = R(Z,Y,X,V)``, which forces flatness."""
    tol = DEFAULT_TOLERANCE if tolerance is None else tolerance
    pack = make_pack(geo, grid)
    zz = evaluate_identity("ZZ", geo, tolerance=tol, pack=pack)
    reports = {"ZZ": zz}
    result = Classification("zz_flat", zz.verdict, reports)
    if not zz.verdict:
        result.payload["witness"] = {"index": list(zz.witness or ()), "residual": _fmt(zz.max_residual)}
        return result
    flat = residual_report("FLAT", "R = 0", "conditional", pack, [pack.R], tol)
    reports["FLAT"] = flat
    reports["ZZ1"] = evaluate_identity("ZZ1", geo, tolerance=tol, pack=pack)
    _require(flat, "zz condition holds")
    _require(reports["ZZ1"], "zz condition holds")
    return result


def classify_nabla_einstein(geo: Geometry, grid=None, tolerance: float | None = None) -> Classification:
    """Symmetric part of Ric proportional to g, and the constants it forces."""
    tol = DEFAULT_TOLERANCE if tolerance is None else tolerance
    pack = make_pack(geo, grid)
    n = geo.dim
    batched = not geo.homogeneous
    ein2 = evaluate_identity("EIN2", geo, tolerance=tol, pack=pack)
    reports = {"EIN2": ein2}
    scal = _scalar_values(pack.Scal, batched)
    factors = [s / n for s in scal]
    result = Classification("nabla_einstein", ein2.verdict, reports, payload={"einstein_factor": factors})
    if not ein2.verdict:
        result.payload["witness"] = {"index": list(ein2.witness or ()), "point": ein2.argmax}
        return result
    for name in ("EIN6", "EIN3"):
        rep = evaluate_identity(name, geo, tolerance=tol, pack=pack)
        reports[name] = rep
        _require(rep, "nabla-Einstein")
    if n == 2:
        result.payload["C"] = result.payload["B"] = "not applicable (n = 2)"
        return result
    norms = _scalar_values(pack.normT, batched)
    scalg = _scalar_values(pack.Scalg, batched)
    t11 = evaluate_identity("T11", geo, tolerance=tol, pack=pack)
    reports["T11"] = t11
    if t11.verdict:
        reports["EIN7"] = evaluate_identity("EIN7", geo, tolerance=tol, pack=pack)
        _require(reports["EIN7"], "nabla-Einstein with 3 theta + Theta = 0")
        k = Fraction(n, 6 * (n - 2)) if geo.exact else n / (6 * (n - 2))
        C = [s + k * t for s, t in zip(scal, norms)]
        rep = _spread_report("EIN9", "Scal + n/(6(n-2)) |T|^2 = C constant", pack, C, tol)
        reports["EIN9"] = rep
        _require(rep, "nabla-Einstein with 3 theta + Theta = 0")
        result.payload["C"] = C[0]
        kg = Fraction(n - 6, 12 * (n - 2)) if geo.exact else (n - 6) / (12 * (n - 2))
        result.payload["Scal_g_minus_formula"] = [sg - (kg * t + C[0]) for sg, t in zip(scalg, norms)]
        if n == 6:
            spread = _spread_report("SCAL_G_CONST", "Scal^g constant (n = 6)", pack, scalg, tol)
            reports["SCAL_G_CONST"] = spread
            _require(spread, "six-dimensional nabla-Einstein with 3 theta + Theta = 0")
    else:
        result.payload["C"] = "not determined (3 theta + Theta != 0)"
    pair = evaluate_identity("PAIR_SYM", geo, tolerance=tol, pack=pack)
    reports["PAIR_SYM"] = pair
    if pair.verdict:
        reports["EIN8"] = evaluate_identity("EIN8", geo, tolerance=tol, pack=pack)
        _require(reports["EIN8"], "nabla-Einstein with pair-symmetric curvature")
        k = Fraction(n, 2 * (n - 2)) if geo.exact else n / (2 * (n - 2))
        B = [s + k * t for s, t in zip(scal, norms)]
        rep = _spread_report("EIN8_CONST", "Scal + n/(2(n-2)) |T|^2 = B constant", pack, B, tol)
        reports["EIN8_CONST"] = rep
        _require(rep, "nabla-Einstein with pair-symmetric curvature")
        result.payload["B"] = B[0]
    else:
        result.payload["B"] = "not determined (curvature not pair symmetric)"
    return result


def classify_soliton(geo: Geometry, grid=None, tolerance: float | None = None) -> Classification:
    """Generalized gradient Ricci soliton (k = 0) and the four equivalent conditions.

    The equivalence of the four conditions needs compactness.  Lie-backend
    instances are homogeneous, so there it is enforced; on charts it is
    reported and a disagreement is only noted.
    """
    if not _has_potential(geo):
        raise CapabilityError("soliton classification needs a potential f")
    tol = DEFAULT_TOLERANCE if tolerance is None else tolerance
    pack = make_pack(geo, grid)
    batched = not geo.homogeneous
    gein1 = evaluate_identity("GEIN1", geo, tolerance=tol, pack=pack)
    reports = {"GEIN1": gein1}
    result = Classification("soliton", gein1.verdict, reports)

    norms = _scalar_values(pack.normT, batched)
    fvals = _scalar_values(pack.f, batched)
    scalg = _scalar_values(pack.Scalg, batched)
    conds = {
        "a_norm_T_constant": residual_report("D_NORM_T", "d|T|^2 = 0", "condition", pack,
                                             [pack.dnormT], tol).verdict and _spread(norms) <= tol,
        "b_f_constant": residual_report("DF", "df = 0", "condition", pack, [pack.df], tol).verdict
        and _spread(fvals) <= tol,
        "c_ricci_flat": residual_report("RIC", "Ric = 0", "condition", pack, [pack.Ric], tol).verdict,
        "d_scal_g_constant": residual_report("D_SCAL_G", "d(Scal^g) = 0", "condition", pack,
                                             [pack.dScalg], tol).verdict and _spread(scalg) <= tol,
    }
    result.payload["conditions"] = conds
    if not gein1.verdict:
        return result
    for name in ("GEIN2", "GEIN3", "GEIN4", "GEIN7A", "GEIN7B", "GEIN8_EQ"):
        rep = evaluate_identity(name, geo, tolerance=tol, pack=pack)
        reports[name] = rep
        _require(rep, "soliton equations hold")
    ff = ffinn_value(make_pack(geo, pack.X, deep=True))
    values = _scalar_values(ff, batched)
    slack = 0 if geo.exact else 10 * tol
    worst = min(values)
    ffinn = ResidualReport("FFINN", "0 <= Delta(Scal^g - 5/12|T|^2) + <d(Scal^g - 1/12|T|^2), df>",
                           "conditional", geo.exact, [max(-worst, 0 * worst)], None, slack if slack else tol,
                           payload={"values": values})
    reports["FFINN"] = ffinn
    if worst < -slack:
        raise InvariantViolation(f"soliton inequality violated: value {worst}")
    agree = len(set(conds.values())) == 1
    result.payload["conditions_agree"] = agree
    if not agree:
        if geo.homogeneous:
            raise InvariantViolation(f"soliton conditions disagree: {conds}")
        result.notes.append("conditions disagree; the equivalence requires a compact manifold")
    if any(conds.values()):
        harm = residual_report("HARMONIC", "dT = 0 and deltaT = 0", "conditional", pack,
                               [pack.dT, pack.deltaT], tol)
        reports["HARMONIC"] = harm
        if geo.homogeneous:
            _require(harm, "soliton condition holds")
        elif not harm.verdict:
            result.notes.append("torsion not harmonic; the implication requires a compact manifold")
    return result


CLASSIFIERS = {
    "first_bianchi": classify_first_bianchi,
    "pair_symmetry": classify_pair_symmetry,
    "zz_flat": classify_zz_flat,
    "nabla_einstein": classify_nabla_einstein,
    "soliton": classify_soliton,
}


def classify_all(geo: Geometry, grid=None, tolerance: float | None = None) -> dict:
    out = {}
    for name, fn in CLASSIFIERS.items():
        if name == "soliton" and not _has_potential(geo):
            continue
        out[name] = fn(geo, grid, tolerance)
    return out
