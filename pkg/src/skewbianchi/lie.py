"""Left-invariant geometry on Lie groups given by orthonormal structure constants.

On a Lie group with a left-invariant orthonormal frame every invariant tensor
has constant components, so derivatives reduce to algebra in the structure
constants ``c_ijk = g([e_i, e_j], e_k)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Union

import numpy as np

from .errors import StructuralError
from .frames import ConnectionCoeffs, covariant_derivative
from .tensor_core import (Array, QArray, alternation_defect, basis_form, einsum, is_zero,
                          maxabs, to_float, zeros)

MAX_DIM = 8


def _check_dim(n: int) -> None:
    if not isinstance(n, int) or not 2 <= n <= MAX_DIM:
        raise StructuralError(f"dimension must be an integer in [2, {MAX_DIM}], got {n!r}")


def jacobi_defect(c: Array) -> Array:
    """``sum_s c_ijs c_skl + c_jks c_sil + c_kis c_sjl`` for all ``i, j, k, l``."""
    return (einsum("ijs,skl->ijkl", c, c)
            + einsum("jks,sil->ijkl", c, c)
            + einsum("kis,sjl->ijkl", c, c))


@dataclass(frozen=True)
class LieGeometry:
    """A Lie algebra with orthonormal basis, constant torsion 3-form and potential.

    ``c`` and ``T`` are ``QArray`` in exact mode and float arrays otherwise.
    The potential ``f`` is a constant, since left-invariant functions are.
    """

    c: Array
    T: Array
    f: Union[Fraction, float] = 0
    name: str = ""
    validate: bool = field(default=True, repr=False, compare=False)

    homogeneous = True
    backend = "lie"

    def __post_init__(self):
        n = self.c.shape[0]
        _check_dim(n)
        if self.c.shape != (n, n, n) or self.T.shape != (n, n, n):
            raise StructuralError("structure constants and torsion must be n x n x n")
        if isinstance(self.c, QArray) != isinstance(self.T, QArray):
            raise StructuralError("structure constants and torsion must share one scalar mode")
        if self.exact:
            object.__setattr__(self, "f", Fraction(self.f))
        else:
            object.__setattr__(self, "f", float(self.f))
        if not self.validate:
            return
        tol = 0 if self.exact else 1e-12
        if not is_zero(self.c + self.c.transpose(1, 0, 2), tol):
            raise StructuralError("structure constants are not antisymmetric in the first two slots")
        if not is_zero(jacobi_defect(self.c), tol):
            raise StructuralError("structure constants violate the Jacobi identity")
        if alternation_defect(self.T) > tol:
            raise StructuralError("torsion is not a 3-form")

    @property
    def dim(self) -> int:
        return self.c.shape[0]

    @property
    def exact(self) -> bool:
        return isinstance(self.c, QArray)

    def q(self, num, den=1):
        """A scalar constant in this geometry's scalar mode."""
        return Fraction(num, den) if self.exact else num / den

    def zeros(self, shape) -> Array:
        return zeros(shape, self.exact)

    def to_float(self) -> "LieGeometry":
        if not self.exact:
            return self
        return LieGeometry(to_float(self.c), to_float(self.T), float(self.f), self.name)

    def with_torsion(self, T: Array, name: str | None = None) -> "LieGeometry":
        return LieGeometry(self.c, T, self.f, self.name if name is None else name)

    def scaled_torsion(self, s) -> "LieGeometry":
        return LieGeometry(self.c, self.T * s, self.f, self.name)

    # frame interface shared with the chart backend --------------------
    def lc_gamma(self, X=None) -> Array:
        return self._lc.gamma

    def torsion(self, X=None) -> Array:
        return self.T

    def brackets(self, X=None) -> Array:
        return self.c

    def potential(self, X=None):
        return QArray.scalar(self.f) if self.exact else np.asarray(self.f, dtype=float)

    def torsion_exterior(self, X=None) -> Array:
        return self._dT

    @cached_property
    def _lc(self) -> ConnectionCoeffs:
        return lc_connection(self)

    @cached_property
    def _dT(self) -> Array:
        return lie_dT(self)


def lc_connection(geo: LieGeometry) -> ConnectionCoeffs:
    """Levi-Civita coefficients ``1/2 (c_ijk - c_jki + c_kij)`` (Koszul formula)."""
    c = geo.c
    gamma = (c - einsum("jki->ijk", c) + einsum("kij->ijk", c)) * geo.q(1, 2)
    return ConnectionCoeffs(gamma, geo.q(0))


def lie_dT(geo: LieGeometry) -> Array:
    """Exterior derivative of the invariant 3-form ``T``.

    For invariant forms only the bracket terms of the invariant formula survive:
    ``dT(X0..X3) = sum_{a<b} (-1)^(a+b) T([Xa, Xb], ...)``.
    """
    c, T = geo.c, geo.T
    return (-einsum("ijs,skl->ijkl", c, T)
            + einsum("iks,sjl->ijkl", c, T)
            - einsum("ils,sjk->ijkl", c, T)
            - einsum("jks,sil->ijkl", c, T)
            + einsum("jls,sik->ijkl", c, T)
            - einsum("kls,sij->ijkl", c, T))


def lie_covariant_derivative(conn: ConnectionCoeffs, S: Array) -> Array:
    """Covariant derivative of a tensor with constant frame components."""
    return covariant_derivative(conn.gamma, S)


# named algebras ---------------------------------------------------------


def abelian(n: int, exact: bool = True) -> Array:
    _check_dim(n)
    return zeros((n, n, n), exact)


def su2(lam=1) -> QArray:
    """``c_ijk = lam * eps_ijk``."""
    return basis_form(3, [0, 1, 2], Fraction(lam))


def upper_triangular(m: int) -> QArray:
    """Strictly upper triangular ``m x m`` matrices with basis ``E_ab`` (a < b)."""
    pairs = [(a, b) for a in range(m) for b in range(a + 1, m)]
    index = {p: k for k, p in enumerate(pairs)}
    n = len(pairs)
    _check_dim(n)
    ints = np.zeros((n, n, n), dtype=np.int64)
    for (a, b), (cc, d) in itertools.product(pairs, pairs):
        i, j = index[(a, b)], index[(cc, d)]
        if b == cc:
            ints[i, j, index[(a, d)]] += 1
        if d == a:
            ints[i, j, index[(cc, b)]] -= 1
    return QArray(ints)


def direct_sum(*blocks: QArray) -> QArray:
    n = sum(b.shape[0] for b in blocks)
    out = np.zeros((n, n, n), dtype=object)
    off = 0
    for b in blocks:
        k = b.shape[0]
        out[off:off + k, off:off + k, off:off + k] = b.to_fractions()
        off += k
    return QArray.from_values(out)


def heisenberg_plus_abelian(extra: int = 3) -> QArray:
    """``h_3 + R^extra`` with ``[e1, e2] = e3``."""
    n = 3 + extra
    _check_dim(n)
    ints = np.zeros((n, n, n), dtype=np.int64)
    ints[0, 1, 2] = 1
    ints[1, 0, 2] = -1
    return QArray(ints)


def change_basis(tensor: QArray, Q) -> QArray:
    """Components in the basis ``e'_i = Q_ai e_a`` (one ``Q`` per slot)."""
    Q = Q if isinstance(Q, QArray) else QArray.from_values(Q)
    letters = "abcdefgh"[: tensor.ndim]
    out = tensor
    for slot in range(tensor.ndim):
        new = letters[:slot] + "z" + letters[slot + 1:]
        out = einsum(f"{letters[slot]}z,{letters}->{new}", Q, out)
    return out


def rescale_basis(c: QArray, s) -> QArray:
    """Structure constants after declaring ``s_i e_i`` orthonormal."""
    s = [Fraction(v) for v in s]
    n = len(s)
    w = QArray.from_values([[[s[i] * s[j] / s[k] for k in range(n)] for j in range(n)] for i in range(n)])
    return c * w


def is_orthogonal(Q: QArray) -> bool:
    n = Q.shape[0]
    return (einsum("ai,aj->ij", Q, Q) - QArray(np.eye(n, dtype=np.int64))).is_zero()


def metricity_ok(conn: ConnectionCoeffs, exact: bool) -> bool:
    d = conn.metricity_defect()
    return d == 0 if exact else d <= 1e-12


def torsion_free_defect(conn: ConnectionCoeffs, geo: LieGeometry):
    return maxabs(conn.torsion(geo.c))
