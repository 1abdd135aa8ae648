"""Connection coefficients in an orthonormal frame and the algebra built on them.

Both backends express everything in an orthonormal frame ``e_1..e_n``:

* ``gamma[..., i, j, k] = g(nabla_{e_i} e_j, e_k)``
* ``c[..., i, j, k] = g([e_i, e_j], e_k)``

Leading ``...`` axes are batch axes (sample points on the chart backend,
absent on the Lie backend).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .tensor_core import Array, QArray, einsum, maxabs

_SLOTS = "bcdefgh"


@dataclass(frozen=True)
class ConnectionCoeffs:
    """Frame components of a metric connection.

    ``t`` is the torsion-family parameter: the torsion of the connection is
    ``t * T`` (``t = 0`` is Levi-Civita, ``t = 1`` the torsion connection).
    """

    gamma: Array
    t: Union[Fraction, float] = 0

    @property
    def dim(self) -> int:
        return self.gamma.shape[-1]

    def metricity_defect(self):
        return maxabs(self.gamma + self.gamma.transpose(*_swap_last(self.gamma.ndim, 2, 1)))

    def torsion(self, brackets: Array) -> Array:
        """``gamma_ijk - gamma_jik - c_ijk``, i.e. the torsion 3-tensor."""
        return self.gamma - self.gamma.transpose(*_swap_last(self.gamma.ndim, 3, 2)) - brackets


def _swap_last(ndim: int, a: int, b: int) -> tuple:
    """Axes tuple exchanging the axes ``ndim - a`` and ``ndim - b``."""
    axes = list(range(ndim))
    axes[ndim - a], axes[ndim - b] = axes[ndim - b], axes[ndim - a]
    return tuple(axes)


def covariant_derivative(gamma: Array, S: Array, dS: Array | None = None, rank: int | None = None) -> Array:
    """``(nabla_i S)_{j1..jp} = e_i(S_{j1..jp}) - sum_r gamma_{i j_r s} S_{..s..}``.

    ``dS`` holds the frame derivatives ``e_i(S)`` with the derivative index
    right after the batch axes; ``None`` means the components are constant
    (left-invariant tensors).  ``rank`` is the tensor rank of ``S`` without
    batch axes; it defaults to ``S.ndim`` (no batch axes).
    """
    p = S.ndim if rank is None else rank
    letters = _SLOTS[:p]
    out = dS
    for r in range(p):
        src = letters[:r] + "z" + letters[r + 1:]
        term = einsum(f"...a{letters[r]}z,...{src}->...a{letters}", gamma, S)
        out = -term if out is None else out - term
    if out is None:  # rank-0 constant
        raise ValueError("a constant scalar has no algebraic covariant derivative to form")
    return out


def frame_curvature(gamma: Array, brackets: Array, dgamma: Array | None = None) -> Array:
    """Curvature ``R_ijkl = g(R(e_i, e_j) e_k, e_l)`` of a frame connection.

    ``R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``;
    ``dgamma[..., i, j, k, l] = e_i(gamma_jkl)`` (``None`` for constant coefficients).
    """
    R = (einsum("...jks,...isl->...ijkl", gamma, gamma)
         - einsum("...iks,...jsl->...ijkl", gamma, gamma)
         - einsum("...ijs,...skl->...ijkl", brackets, gamma))
    if dgamma is not None:
        nd = dgamma.ndim
        R = R + dgamma - dgamma.transpose(*_swap_last(nd, 4, 3))
    return R


def ricci(R: Array) -> Array:
    """``Ric(X, Y) = sum_i R(e_i, X, Y, e_i)``."""
    return einsum("...ijki->...jk", R)


def trace2(S: Array) -> Array:
    return einsum("...ii->...", S)


def is_exact_array(x) -> bool:
    return isinstance(x, QArray)
