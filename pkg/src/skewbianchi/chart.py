"""Coordinate-chart geometries with finite-difference derivatives.

Component functions are vectorized: they map points ``X`` of shape ``(P, n)``
to arrays with a leading ``P`` axis.  Derivatives of derived fields are taken
by differentiating the derived field itself with the same 5-point stencil, so
stencils nest (and stay vectorized over all stencil points at once).

Frame data come from the Cholesky factor ``g = L L^T``: the frame vectors are
the columns of ``E = L^{-T}``, so ``E^T g E = I`` and ``e_i = E_ai d_a``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import CapabilityError, DomainError, NumericError, StructuralError
from .expr import compile_expression
from .frames import ConnectionCoeffs
from .lie import MAX_DIM

Field = Callable[[np.ndarray], np.ndarray]

# 5-point central stencils, 4th order accurate
_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_FIRST = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0
_SECOND_OFFSETS = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
_SECOND = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0

STENCIL_MARGIN = 4  # sample points keep this many steps from the box boundary


def fd_derivative(field: Callable, point, direction: int, order: int = 1, h: float = 1e-3,
                  box: Sequence[Sequence[float]] | None = None) -> float:
    """Central 5-point derivative of a scalar field along coordinate ``direction``.

    ``field`` takes an array of points ``(P, n)``.  ``direction`` is 0-based.
    """
    x = np.asarray(point, dtype=float)
    n = x.shape[-1]
    if not 0 <= direction < n:
        raise StructuralError(f"direction {direction} out of range for dimension {n}")
    if order not in (1, 2):
        raise StructuralError("order must be 1 or 2")
    if box is not None:
        _check_margin(x, box, h)
    e = np.zeros(n)
    e[direction] = 1.0
    if order == 1:
        pts = x[None, :] + _OFFSETS[:, None] * h * e[None, :]
        return float(_FIRST @ np.asarray(field(pts), dtype=float)) / h
    pts = x[None, :] + _SECOND_OFFSETS[:, None] * h * e[None, :]
    return float(_SECOND @ np.asarray(field(pts), dtype=float)) / h**2


def _check_margin(x: np.ndarray, box, h: float) -> None:
    box = np.asarray(box, dtype=float)
    lo, hi = box[:, 0], box[:, 1]
    margin = STENCIL_MARGIN * h
    if np.any(x - lo < margin - 1e-15) or np.any(hi - x < margin - 1e-15):
        raise DomainError(f"point {x.tolist()} is closer than {STENCIL_MARGIN}h to the box boundary")


@dataclass(frozen=True)
class ChartGeometry:
    """A single-chart geometry: metric, coordinate torsion 3-form and potential.

    ``metric(X) -> (P, n, n)``, ``torsion_coords(X) -> (P, n, n, n)`` and
    ``potential_fn(X) -> (P,)``.  ``source`` keeps the expression strings the
    geometry was built from (needed for export).
    """

    dim: int
    metric: Field
    torsion_coords: Field
    potential_fn: Field
    box: tuple
    grid: tuple
    h: float = 1e-3
    name: str = ""
    source: dict | None = field(default=None, repr=False, compare=False)

    homogeneous = False
    exact = False
    backend = "chart"

    def __post_init__(self):
        if not isinstance(self.dim, int) or not 2 <= self.dim <= MAX_DIM:
            raise StructuralError(f"dimension must be in [2, {MAX_DIM}]")
        box = np.asarray(self.box, dtype=float)
        if box.shape != (self.dim, 2) or np.any(box[:, 0] >= box[:, 1]):
            raise StructuralError("box must list one increasing [lo, hi] pair per coordinate")
        if self.h <= 0:
            raise StructuralError("step h must be positive")
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 2 or grid.shape[1] != self.dim or len(grid) == 0:
            raise StructuralError("grid must be a non-empty list of points")
        for x in grid:
            _check_margin(x, box, self.h)
        g = self.metric(grid)
        if not np.allclose(g, np.swapaxes(g, -1, -2), rtol=0, atol=1e-14):
            raise NumericError("metric is not symmetric at a sample point")
        try:
            np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise NumericError("metric is not positive definite at a sample point") from None

    @classmethod
    def from_expressions(cls, dim: int, g: Sequence[Sequence[str]], T: Sequence[dict], f: str | None,
                         box, grid, h: float = 1e-3, name: str = "") -> "ChartGeometry":
        """Build from expression strings (``T`` entries use 1-based ``i, j, k``)."""
        if len(g) != dim or any(len(row) != dim for row in g):
            raise StructuralError("metric must be an n x n table of expressions")
        g_fns = [[compile_expression(g[a][b], dim, f"g[{a}][{b}]") for b in range(dim)]
                 for a in range(dim)]
        t_fns = []
        for k, entry in enumerate(T):
            idx = (entry["i"] - 1, entry["j"] - 1, entry["k"] - 1)
            t_fns.append((idx, compile_expression(entry["expr"], dim, f"T[{k}].expr")))
        f_fn = None if f is None else compile_expression(f, dim, "f")

        def metric(X):
            out = np.empty(X.shape[:-1] + (dim, dim))
            for a in range(dim):
                for b in range(dim):
                    out[..., a, b] = g_fns[a][b](X)
            return out

        def torsion(X):
            out = np.zeros(X.shape[:-1] + (dim, dim, dim))
            for idx, fn in t_fns:
                v = fn(X)
                for perm, sign in _PERMS3:
                    out[(Ellipsis,) + tuple(idx[p] for p in perm)] += sign * v
            return out

        source = {"g": [list(row) for row in g], "T": [dict(e) for e in T], "f": f}
        potential = None if f_fn is None else (lambda X: f_fn(X))
        return cls(dim, metric, torsion, potential, tuple(map(tuple, box)),
                   tuple(map(tuple, grid)), h, name, source)

    # scalar-mode helpers ------------------------------------------------
    def q(self, num, den=1):
        return num / den

    def zeros(self, shape):
        return np.zeros(shape)

    @property
    def points(self) -> np.ndarray:
        return np.asarray(self.grid, dtype=float)

    def with_step(self, h: float) -> "ChartGeometry":
        return ChartGeometry(self.dim, self.metric, self.torsion_coords, self.potential_fn, self.box,
                             self.grid, h, self.name, self.source)

    def with_grid(self, grid) -> "ChartGeometry":
        return ChartGeometry(self.dim, self.metric, self.torsion_coords, self.potential_fn, self.box,
                             tuple(map(tuple, grid)), self.h, self.name, self.source)

    # derivatives -------------------------------------------------------
    def partial(self, F: Field, X: np.ndarray) -> np.ndarray:
        """Coordinate partials ``d_a F`` with ``a`` inserted after the point axis."""
        X = np.asarray(X, dtype=float)
        P, n = X.shape
        shifts = np.eye(n)[:, None, None, :] * (_OFFSETS * self.h)[None, :, None, None]
        Y = (X[None, None, :, :] + shifts).reshape(-1, n)
        V = np.asarray(F(Y))
        V = V.reshape((n, len(_OFFSETS), P) + V.shape[1:])
        D = np.tensordot(_FIRST, V, axes=([0], [1])) / self.h
        return np.moveaxis(D, 0, 1)

    def d(self, F: Field, X: np.ndarray) -> np.ndarray:
        """Frame derivatives ``e_i(F) = E_ai d_a F`` (index ``i`` after the point axis)."""
        return np.einsum("pai,pa...->pi...", self.frame(X), self.partial(F, X))

    # frame data --------------------------------------------------------
    def frame(self, X: np.ndarray) -> np.ndarray:
        g = self.metric(X)
        try:
            L = np.linalg.cholesky(g)
        except np.linalg.LinAlgError:
            raise NumericError("metric is not positive definite") from None
        return np.swapaxes(np.linalg.inv(L), -1, -2)

    def to_frame(self, S: np.ndarray, X: np.ndarray, rank: int, E: np.ndarray | None = None) -> np.ndarray:
        """Frame components of a covariant coordinate tensor of the given rank."""
        E = self.frame(X) if E is None else E
        out = S
        letters = "abcd"[:rank]
        for slot in range(rank):
            new = letters[:slot] + "z" + letters[slot + 1:]
            out = np.einsum(f"p{letters[slot]}z,p{letters}->p{new}", E, out)
        return out

    def christoffel_first(self, X: np.ndarray) -> np.ndarray:
        """``G_abc = g(nabla_a d_b, d_c) = 1/2 (d_a g_bc + d_b g_ac - d_c g_ab)``."""
        dg = self.partial(self.metric, X)
        return 0.5 * (dg + np.swapaxes(dg, 1, 2) - np.transpose(dg, (0, 2, 3, 1)))

    def christoffel(self, X: np.ndarray) -> np.ndarray:
        """``A[p, a, b, c]`` with ``nabla_a d_b = A_abc d_c`` for the Levi-Civita connection."""
        ginv = np.linalg.inv(self.metric(X))
        return np.einsum("pabd,pdc->pabc", self.christoffel_first(X), ginv)

    def connection_coords(self, X: np.ndarray, t: float = 0.0) -> np.ndarray:
        """Coordinate coefficients of ``nabla^t``: Christoffels plus ``t/2`` raised torsion."""
        A = self.christoffel(X)
        if t:
            ginv = np.linalg.inv(self.metric(X))
            A = A + 0.5 * t * np.einsum("pabd,pdc->pabc", self.torsion_coords(X), ginv)
        return A

    def lc_gamma(self, X: np.ndarray) -> np.ndarray:
        """Frame coefficients ``g(nabla^g_{e_i} e_j, e_k)``."""
        g = self.metric(X)
        E = self.frame(X)
        dE = self.partial(self.frame, X)          # [p, a, c, j] = d_a E_cj
        G1 = self.christoffel_first(X)            # [p, a, b, d]
        inner = np.einsum("pacj,pcd->pajd", dE, g) + np.einsum("pbj,pabd->pajd", E, G1)
        return np.einsum("pai,pajd,pdk->pijk", E, inner, E)

    def torsion(self, X: np.ndarray) -> np.ndarray:
        return self.to_frame(self.torsion_coords(X), X, 3)

    def brackets(self, X: np.ndarray) -> np.ndarray:
        G = self.lc_gamma(X)
        return G - np.swapaxes(G, -3, -2)

    def potential(self, X: np.ndarray) -> np.ndarray:
        if self.potential_fn is None:
            raise CapabilityError("this geometry supplies no potential f")
        return np.asarray(self.potential_fn(X), dtype=float)

    def torsion_exterior(self, X: np.ndarray) -> np.ndarray:
        return self.to_frame(coordinate_dT(self, X), X, 4)

    def coordinate_curvature(self, X: np.ndarray, t: float = 1.0) -> np.ndarray:
        """Curvature of ``nabla^t`` from coordinate connection partials, in the frame."""
        A = self.connection_coords(X, t)
        dA = self.partial(lambda Y: self.connection_coords(Y, t), X)   # [p, i, a, b, c]
        Rup = (dA - np.swapaxes(dA, 1, 2)
               + np.einsum("pjks,pism->pijkm", A, A)
               - np.einsum("piks,pjsm->pijkm", A, A))
        R = np.einsum("pijkm,pml->pijkl", Rup, self.metric(X))
        return self.to_frame(R, X, 4)


_PERMS3 = [((0, 1, 2), 1), ((1, 2, 0), 1), ((2, 0, 1), 1),
           ((1, 0, 2), -1), ((0, 2, 1), -1), ((2, 1, 0), -1)]


def coordinate_dT(geo: ChartGeometry, X: np.ndarray) -> np.ndarray:
    """``dT_abcd = d_a T_bcd - d_b T_acd + d_c T_abd - d_d T_abc`` (metric free)."""
    D = geo.partial(geo.torsion_coords, X)   # [p, a, b, c, d] = d_a T_bcd
    return (D
            - np.transpose(D, (0, 2, 1, 3, 4))
            + np.transpose(D, (0, 2, 3, 1, 4))
            - np.transpose(D, (0, 2, 3, 4, 1)))


def _points(geo: ChartGeometry, point) -> tuple[np.ndarray, bool]:
    if point is None:
        return geo.points, False
    x = np.asarray(point, dtype=float)
    if x.ndim == 1:
        _check_margin(x, geo.box, geo.h)
        return x[None, :], True
    for row in x:
        _check_margin(row, geo.box, geo.h)
    return x, False


def _squeeze(value: np.ndarray, single: bool) -> np.ndarray:
    return value[0] if single else value


def chart_lc_connection(geo: ChartGeometry, point=None) -> ConnectionCoeffs:
    """Levi-Civita connection at ``point`` (default: the sample grid), frame components."""
    X, single = _points(geo, point)
    return ConnectionCoeffs(_squeeze(geo.lc_gamma(X), single), 0.0)


def chart_dT(geo: ChartGeometry, point=None) -> np.ndarray:
    X, single = _points(geo, point)
    return _squeeze(geo.torsion_exterior(X), single)


def chart_deltaT(geo: ChartGeometry, point=None) -> np.ndarray:
    """``(dT)_jk = -g^ab (nabla^g_a T)_bjk`` in coordinates, then frame components."""
    X, single = _points(geo, point)
    nT = _coordinate_nablaT(geo, X, 0.0)
    ginv = np.linalg.inv(geo.metric(X))
    delta = -np.einsum("pab,pabjk->pjk", ginv, nT)
    return _squeeze(geo.to_frame(delta, X, 2), single)


def chart_nablaT(geo: ChartGeometry, point=None, t: float = 1.0) -> np.ndarray:
    """``nabla^t T`` computed in coordinates and converted to frame components."""
    X, single = _points(geo, point)
    return _squeeze(geo.to_frame(_coordinate_nablaT(geo, X, t), X, 4), single)


def _coordinate_nablaT(geo: ChartGeometry, X: np.ndarray, t: float) -> np.ndarray:
    A = geo.connection_coords(X, t)
    T = geo.torsion_coords(X)
    dT = geo.partial(geo.torsion_coords, X)
    return (dT
            - np.einsum("pabs,pscd->pabcd", A, T)
            - np.einsum("pacs,pbsd->pabcd", A, T)
            - np.einsum("pads,pbcs->pabcd", A, T))


def coordinate_riemann_lc(geo: ChartGeometry, point=None) -> np.ndarray:
    """Riemannian curvature from Christoffel partials (frame components)."""
    X, single = _points(geo, point)
    return _squeeze(geo.coordinate_curvature(X, 0.0), single)
