"""Connections, curvature and torsion-derived quantities at evaluation points.

:class:`FieldPack` is the single assembly point for every quantity the
identity suite consumes.  Quantities are lazily computed and cached per pack.
Derivatives of derived fields are obtained by building packs at the stencil
points and differentiating the derived field itself; on the Lie backend every
invariant field has constant components, so those derivatives vanish and only
the algebraic connection terms of covariant derivatives survive.

Conventions (orthonormal frame, repeated indices summed):

* torsion connection ``Gamma = Gamma^g + 1/2 T``; family ``Gamma^t = Gamma^g + t/2 T``
* ``R(X,Y)Z = [nabla_X, nabla_Y]Z - nabla_[X,Y] Z``, ``R_ijkl = g(R(e_i,e_j)e_k, e_l)``
* ``Ric_jk = R_ijki``, ``Scal = Ric_ii``
* ``dT`` in the determinant convention, ``(dT)_jk = -(nabla^g_a T)_ajk``
* ``T2_ij = T_iab T_jab``, ``|T|^2 = T_abc T_abc``
* ``theta_j = dT_ab T_jab``, ``Theta_j = T_abc dT_jabc``
* ``Delta h = -(nabla_i nabla_i h)``
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Callable, Union

import numpy as np

from .chart import ChartGeometry, _check_margin
from .frames import ConnectionCoeffs, covariant_derivative, frame_curvature, ricci, trace2
from .lie import LieGeometry
from .tensor_core import Array, einsum, sigma_form, zeros

Geometry = Union[LieGeometry, ChartGeometry]


class FieldPack:
    """All frame quantities of a geometry at one batch of points.

    ``X`` is ``None`` on the Lie backend and an array ``(P, n)`` on charts;
    chart quantities carry a leading point axis.
    """

    def __init__(self, geo: Geometry, X: np.ndarray | None = None):
        self.geo = geo
        self.X = X
        self.n = geo.dim
        self.q = geo.q

    # derivative plumbing ----------------------------------------------
    def grad(self, fn: Callable[["FieldPack"], Array]) -> Array:
        """Frame derivatives ``e_i`` of the field ``fn(pack)``; ``i`` follows the batch axes."""
        if self.geo.homogeneous:
            value = fn(self)
            return zeros((self.n,) + tuple(value.shape), self.geo.exact)
        geo = self.geo
        return geo.d(lambda Y: fn(FieldPack(geo, Y)), self.X)

    def grad_of(self, name: str) -> Array:
        return self.grad(lambda p: getattr(p, name))

    def _cov(self, gamma: Array, name: str, rank: int) -> Array:
        S = getattr(self, name)
        dS = None if self.geo.homogeneous else self.grad_of(name)
        if dS is None:
            if rank == 0:
                return zeros((self.n,), True) if self.geo.exact else np.zeros(self.n)
            return covariant_derivative(gamma, S, None, rank)
        if rank == 0:
            return dS
        return covariant_derivative(gamma, S, dS, rank)

    def cov(self, name: str, rank: int) -> Array:
        """Torsion-connection covariant derivative of a named tensor field."""
        return self._cov(self.G, name, rank)

    def cov_lc(self, name: str, rank: int) -> Array:
        return self._cov(self.Gg, name, rank)

    def connection(self, t) -> Array:
        return self.Gg + self.T * (self.q(1, 2) * t)

    def hessian(self, name: str, gamma: Array | None = None) -> Array:
        """``nabla_i nabla_j h`` of a scalar field, using ``gamma`` (default: torsion connection)."""
        gamma = self.G if gamma is None else gamma
        if self.geo.homogeneous:
            return zeros((self.n, self.n), self.geo.exact)
        dh = self.grad_of(name)
        ddh = self.grad(lambda p: p.grad_of(name))
        return ddh - einsum("...ijs,...s->...ij", gamma, dh)

    def laplacian(self, name: str) -> Array:
        return -trace2(self.hessian(name))

    # structure ---------------------------------------------------------
    @cached_property
    def T(self) -> Array:
        return self.geo.torsion(self.X)

    @cached_property
    def c(self) -> Array:
        return self.geo.brackets(self.X)

    @cached_property
    def Gg(self) -> Array:
        return self.geo.lc_gamma(self.X)

    @cached_property
    def G(self) -> Array:
        return self.connection(1)

    @cached_property
    def f(self) -> Array:
        return self.geo.potential(self.X)

    # torsion-derived ---------------------------------------------------
    @cached_property
    def dT(self) -> Array:
        return self.geo.torsion_exterior(self.X)

    @cached_property
    def nablaT(self) -> Array:
        return self.cov("T", 3)

    @cached_property
    def nablagT(self) -> Array:
        return self.cov_lc("T", 3)

    def nabla_t_T(self, t) -> Array:
        return self._cov(self.connection(t), "T", 3)

    @cached_property
    def deltaT(self) -> Array:
        return -einsum("...aajk->...jk", self.nablagT)

    @cached_property
    def sigma(self) -> Array:
        return sigma_form(self.T)

    @cached_property
    def T2(self) -> Array:
        return einsum("...iab,...jab->...ij", self.T, self.T)

    @cached_property
    def normT(self) -> Array:
        return einsum("...abc,...abc->...", self.T, self.T)

    @cached_property
    def theta(self) -> Array:
        return einsum("...ab,...jab->...j", self.deltaT, self.T)

    @cached_property
    def Theta(self) -> Array:
        return einsum("...abc,...jabc->...j", self.T, self.dT)

    @cached_property
    def dnormT(self) -> Array:
        return self._cov(self.G, "normT", 0)

    # curvature ---------------------------------------------------------
    def curvature_t(self, t) -> Array:
        if self.geo.homogeneous:
            return frame_curvature(self.connection(t), self.c)
        return self.geo.coordinate_curvature(self.X, t)

    @cached_property
    def R(self) -> Array:
        return self.curvature_t(1)

    @cached_property
    def Ric(self) -> Array:
        return ricci(self.R)

    @cached_property
    def Scal(self) -> Array:
        return trace2(self.Ric)

    @cached_property
    def Rg(self) -> Array:
        return self.curvature_t(0)

    @cached_property
    def Ricg(self) -> Array:
        return ricci(self.Rg)

    @cached_property
    def Scalg(self) -> Array:
        return trace2(self.Ricg)

    @cached_property
    def dScal(self) -> Array:
        return self._cov(self.G, "Scal", 0)

    @cached_property
    def dScalg(self) -> Array:
        return self._cov(self.G, "Scalg", 0)

    @cached_property
    def nablaRic(self) -> Array:
        return self.cov("Ric", 2)

    @cached_property
    def divRic(self) -> Array:
        """``(nabla_i Ric)_ji``: the divergence on the second slot."""
        return einsum("...iji->...j", self.nablaRic)

    @cached_property
    def divRic_first(self) -> Array:
        """``(nabla_i Ric)_ij``."""
        return einsum("...iij->...j", self.nablaRic)

    @cached_property
    def nablaT2(self) -> Array:
        return self.cov("T2", 2)

    @cached_property
    def nablagT2(self) -> Array:
        return self.cov_lc("T2", 2)

    @cached_property
    def divT2(self) -> Array:
        return einsum("...ssj->...j", self.nablaT2)

    @cached_property
    def divgT2(self) -> Array:
        return einsum("...ssj->...j", self.nablagT2)

    @cached_property
    def nabla_deltaT(self) -> Array:
        return self.cov("deltaT", 2)

    @cached_property
    def div_deltaT(self) -> Array:
        """``(nabla_i dT)_ij``."""
        return einsum("...iij->...j", self.nabla_deltaT)

    # potential ---------------------------------------------------------
    @cached_property
    def df(self) -> Array:
        return self._cov(self.G, "f", 0)

    @cached_property
    def hess_f(self) -> Array:
        return self.hessian("f")

    @cached_property
    def hess_g_f(self) -> Array:
        return self.hessian("f", self.Gg)

    @cached_property
    def lap_f(self) -> Array:
        return -trace2(self.hess_f)

    @cached_property
    def norm_df(self) -> Array:
        return einsum("...s,...s->...", self.df, self.df)

    @cached_property
    def nabla_hess_f(self) -> Array:
        """``(nabla_a H)_bc`` for ``H = nabla nabla f``."""
        return self.cov("hess_f", 2)


# public operations --------------------------------------------------------


@dataclass(frozen=True)
class CurvatureTensor:
    R: Array
    Ric: Array
    Scal: Any


@dataclass(frozen=True)
class DerivedTorsionPack:
    """Torsion-derived quantities at one evaluation point."""

    T: Array
    dT: Array
    deltaT: Array
    nablaT: Array
    nablagT: Array
    sigma: Array
    T2: Array
    normT: Any
    theta: Array
    Theta: Array

    def consistency_defect(self):
        """Recompute ``theta`` and ``Theta`` from the stored pieces."""
        from .tensor_core import maxabs

        th = einsum("ab,jab->j", self.deltaT, self.T)
        Th = einsum("abc,jabc->j", self.T, self.dT)
        return max(maxabs(th - self.theta), maxabs(Th - self.Theta))


def _pack_at(geo: Geometry, point) -> tuple[FieldPack, bool]:
    if geo.homogeneous:
        return FieldPack(geo, None), False
    x = np.asarray(point if point is not None else geo.points[0], dtype=float)
    if x.ndim == 1:
        _check_margin(x, geo.box, geo.h)
        return FieldPack(geo, x[None, :]), True
    return FieldPack(geo, x), False


def _one(value, single: bool):
    return value[0] if single else value


def torsion_connection(geo: Geometry, point=None, t=1) -> ConnectionCoeffs:
    """Frame coefficients ``Gamma^g + t/2 T`` of the connection with torsion ``t T``."""
    pack, single = _pack_at(geo, point)
    t = Fraction(t) if geo.exact else float(t)
    return ConnectionCoeffs(_one(pack.connection(t), single), t)


def curvature(conn: ConnectionCoeffs, geo: Geometry, point=None) -> CurvatureTensor:
    """Curvature, Ricci tensor and scalar curvature of ``conn``.

    The connection is identified through its parameter ``conn.t``; on charts the
    coordinate route recomputes it at stencil points.
    """
    pack, single = _pack_at(geo, point)
    if geo.homogeneous:
        R = frame_curvature(conn.gamma, pack.c)
    else:
        R = _one(pack.curvature_t(float(conn.t)), single)
    Ric = ricci(R)
    return CurvatureTensor(R, Ric, trace2(Ric))


def derived_pack(geo: Geometry, point=None) -> DerivedTorsionPack:
    pack, single = _pack_at(geo, point)
    names = ["T", "dT", "deltaT", "nablaT", "nablagT", "sigma", "T2", "normT", "theta", "Theta"]
    return DerivedTorsionPack(**{k: _one(getattr(pack, k), single) for k in names})


def riemannian_data(geo: Geometry, point=None):
    """``(Ric^g, Scal^g)`` from the Levi-Civita curvature itself."""
    pack, single = _pack_at(geo, point)
    return _one(pack.Ricg, single), _one(pack.Scalg, single)
