"""Dense multilinear algebra over exact rationals or binary64 floats.

Two array kinds flow through the package:

* ``numpy.ndarray`` of float64 for the floating point mode, and
* :class:`QArray`, an exact rational array stored as ``scale * ints`` where
  ``scale`` is a :class:`fractions.Fraction` and ``ints`` an integer array.

``ints`` is kept as ``int64`` while every entry provably fits and is promoted
to Python integers (``dtype=object``) otherwise, so exact arithmetic never
overflows.  A computation never mixes the two kinds; :func:`einsum` refuses.

Forms are stored as fully antisymmetric component arrays over all index
tuples.  Wedge products use the determinant convention
``(a ^ b)(X, Y) = a(X) b(Y) - a(Y) b(X)``.
"""

from __future__ import annotations

import itertools
import math
import re
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import StructuralError

_I64_SAFE = 2**62

Number = Union[int, Fraction]


def _maxabs_int(ints: np.ndarray) -> int:
    if ints.size == 0:
        return 0
    if ints.dtype == object:
        return max(abs(int(v)) for v in ints.flat)
    return int(np.abs(ints).max())


def _as_object(ints: np.ndarray) -> np.ndarray:
    if ints.dtype == object:
        return ints
    out = np.empty(ints.shape, dtype=object)
    out.flat[:] = [int(v) for v in ints.flat]
    return out


def _shrink(ints: np.ndarray) -> np.ndarray:
    if ints.dtype == object and _maxabs_int(ints) < _I64_SAFE:
        return ints.astype(np.int64)
    return ints


def _gcd_all(ints: np.ndarray) -> int:
    if ints.size == 0:
        return 0
    if ints.dtype == object:
        return reduce(math.gcd, (int(v) for v in ints.flat), 0)
    return int(np.gcd.reduce(np.abs(ints).ravel()))


def _to_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (bool, np.bool_)):
        raise TypeError("booleans are not rational scalars")
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, str):
        return parse_rational(value)
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


_RATIONAL_RE = re.compile(r"^\s*[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?(\s*/\s*[+-]?\d+)?\s*$")


def parse_rational(text: str) -> Fraction:
    """Parse ``"3"``, ``"-1/2"`` or a decimal such as ``"0.25"`` exactly."""
    if not isinstance(text, str) or not _RATIONAL_RE.match(text):
        raise ValueError(f"not a rational literal: {text!r}")
    if "/" in text:
        num, den = text.split("/")
        den_f = Fraction(den.strip())
        if den_f == 0:
            raise ValueError(f"zero denominator in {text!r}")
        return Fraction(num.strip()) / den_f
    return Fraction(text.strip())


def format_rational(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


class QArray:
    """Exact rational dense array (``scale * ints``).

    Instances are immutable by convention: no method mutates ``ints`` in place.
    """

    __slots__ = ("ints", "scale")

    def __init__(self, ints, scale: Number = 1):
        ints = np.asarray(ints)
        if ints.dtype != object and ints.dtype.kind not in "iu":
            raise TypeError("QArray numerators must be integers")
        if ints.dtype.kind == "u":
            ints = ints.astype(object)
        scale = _to_fraction(scale)
        g = _gcd_all(ints)
        if g == 0:
            self.ints = np.zeros(ints.shape, dtype=np.int64)
            self.scale = Fraction(1)
            return
        if g != 1:
            ints = np.asarray(ints // g, dtype=ints.dtype)
            scale = scale * g
        self.ints = _shrink(ints)
        self.scale = scale

    # construction -----------------------------------------------------
    @classmethod
    def zeros(cls, shape) -> "QArray":
        return cls(np.zeros(shape, dtype=np.int64))

    @classmethod
    def from_values(cls, values) -> "QArray":
        """Build from a (nested) array of ints, Fractions or rational strings."""
        if isinstance(values, QArray):
            return values
        arr = np.asarray(values, dtype=object)
        fracs = [_to_fraction(v) for v in arr.flat]
        den = reduce(lambda a, b: a * b // math.gcd(a, b), (f.denominator for f in fracs), 1)
        ints = np.empty(arr.shape, dtype=object)
        ints.flat[:] = [int(f * den) for f in fracs]
        return cls(ints, Fraction(1, den))

    @classmethod
    def scalar(cls, value) -> "QArray":
        f = _to_fraction(value)
        return cls(np.array(f.numerator, dtype=object), Fraction(1, f.denominator))

    # numpy-like surface ------------------------------------------------
    @property
    def shape(self) -> tuple:
        return self.ints.shape

    @property
    def ndim(self) -> int:
        return self.ints.ndim

    @property
    def size(self) -> int:
        return self.ints.size

    def __len__(self) -> int:
        return len(self.ints)

    def __getitem__(self, idx) -> "QArray":
        return QArray(np.asarray(self.ints[idx]), self.scale)

    def transpose(self, *axes) -> "QArray":
        return QArray(self.ints.transpose(*axes), self.scale)

    def reshape(self, *shape) -> "QArray":
        return QArray(self.ints.reshape(*shape), self.scale)

    def sum(self, axis=None) -> "QArray":
        ints = self.ints if self.ints.dtype == object else _as_object(self.ints)
        return QArray(np.asarray(ints.sum(axis=axis)), self.scale)

    def item(self) -> Fraction:
        if self.size != 1:
            raise StructuralError("item() needs a single-element array")
        return self.scale * int(self.ints.reshape(-1)[0])

    def to_fractions(self) -> np.ndarray:
        out = np.empty(self.shape, dtype=object)
        out.flat[:] = [self.scale * int(v) for v in self.ints.flat]
        return out

    def to_float(self) -> np.ndarray:
        if self.ints.dtype != object and _maxabs_int(self.ints) < 2**53:
            return self.ints.astype(np.float64) * float(self.scale)
        out = np.empty(self.shape, dtype=np.float64)
        out.flat[:] = [float(self.scale * int(v)) for v in self.ints.flat]
        return out

    def is_zero(self) -> bool:
        return not np.any(self.ints)

    def maxabs(self) -> Fraction:
        return abs(self.scale) * _maxabs_int(self.ints)

    def __repr__(self) -> str:
        return f"QArray(shape={self.shape}, scale={self.scale}, ints={self.ints.tolist()!r})"

    # arithmetic --------------------------------------------------------
    def _combine(self, other: "QArray", sign: int) -> "QArray":
        if self.shape != other.shape:
            try:
                shape = np.broadcast_shapes(self.shape, other.shape)
            except ValueError as exc:
                raise StructuralError(f"shape mismatch {self.shape} vs {other.shape}") from exc
        a, b = self.scale, other.scale
        common = Fraction(math.gcd(a.numerator, b.numerator),
                          a.denominator * b.denominator // math.gcd(a.denominator, b.denominator))
        if common == 0:
            common = Fraction(1)
        ma = a / common
        mb = sign * b / common
        ma, mb = int(ma), int(mb)
        bound = abs(ma) * _maxabs_int(self.ints) + abs(mb) * _maxabs_int(other.ints)
        if bound < _I64_SAFE and self.ints.dtype != object and other.ints.dtype != object:
            ints = ma * self.ints + mb * other.ints
        else:
            ints = ma * _as_object(self.ints) + mb * _as_object(other.ints)
        return QArray(np.asarray(ints), common)

    def __add__(self, other):
        if isinstance(other, (int, Fraction)) and other == 0:
            return self
        if not isinstance(other, QArray):
            if isinstance(other, (int, Fraction)):
                other = QArray.scalar(other)
            else:
                return NotImplemented
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = QArray.scalar(other)
        if not isinstance(other, QArray):
            return NotImplemented
        return self._combine(other, -1)

    def __rsub__(self, other):
        return (-self) + other

    def __neg__(self) -> "QArray":
        return QArray(self.ints, -self.scale)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return QArray(self.ints, self.scale * other)
        if isinstance(other, QArray):
            return _elementwise_product(self, other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return QArray(self.ints, self.scale / other)
        return NotImplemented


def _elementwise_product(a: QArray, b: QArray) -> QArray:
    if _maxabs_int(a.ints) * _maxabs_int(b.ints) < _I64_SAFE and a.ints.dtype != object \
            and b.ints.dtype != object:
        ints = a.ints * b.ints
    else:
        ints = _as_object(a.ints) * _as_object(b.ints)
    return QArray(np.asarray(ints), a.scale * b.scale)


Array = Union[np.ndarray, QArray]


def is_exact(x) -> bool:
    return isinstance(x, QArray)


def _summed_term_count(subscripts: str, shapes: Sequence[tuple]) -> int:
    lhs, _, rhs = subscripts.replace(" ", "").partition("->")
    inputs = lhs.split(",")
    dims: dict[str, int] = {}
    for term, shape in zip(inputs, shapes):
        letters = term.replace("...", "")
        offset = len(shape) - len(letters)
        for k, ch in enumerate(letters):
            dims[ch] = shape[offset + k]
    summed = set("".join(inputs).replace("...", "")) - set(rhs)
    return math.prod(dims[ch] for ch in summed) if summed else 1


def einsum(subscripts: str, *operands: Array) -> Array:
    """Einstein summation on float arrays or on exact :class:`QArray` operands.

    The subscripts must contain an explicit ``->`` output.
    """
    if "->" not in subscripts:
        raise StructuralError("einsum subscripts need an explicit output")
    exact = [isinstance(op, QArray) for op in operands]
    if all(exact):
        count = _summed_term_count(subscripts, [op.shape for op in operands])
        bound = count * math.prod(_maxabs_int(op.ints) for op in operands)
        if bound < _I64_SAFE and all(op.ints.dtype != object for op in operands):
            ints = np.einsum(subscripts, *(op.ints for op in operands))
        else:
            ints = np.einsum(subscripts, *(_as_object(op.ints) for op in operands))
        scale = math.prod((op.scale for op in operands), start=Fraction(1))
        return QArray(np.asarray(ints), scale)
    if any(exact):
        raise StructuralError("cannot mix exact and float operands")
    return np.einsum(subscripts, *operands, optimize=len(operands) > 2)


def zeros(shape, exact: bool) -> Array:
    return QArray.zeros(shape) if exact else np.zeros(shape)


def zeros_like(x: Array) -> Array:
    return QArray.zeros(x.shape) if isinstance(x, QArray) else np.zeros_like(x)


def maxabs(x: Array):
    """Largest absolute component; a Fraction in exact mode, a float otherwise."""
    if isinstance(x, QArray):
        return x.maxabs()
    x = np.asarray(x)
    return float(np.abs(x).max()) if x.size else 0.0


def is_zero(x: Array, tol: float = 0.0) -> bool:
    """Exact arrays: identically zero.  Float arrays: max-abs at most ``tol``."""
    if isinstance(x, QArray):
        return x.is_zero()
    return maxabs(x) <= tol


def to_float(x: Array) -> np.ndarray:
    return x.to_float() if isinstance(x, QArray) else np.asarray(x, dtype=np.float64)


def transpose(x: Array, axes: Sequence[int]) -> Array:
    return x.transpose(*axes)


_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def contract(a: Array, b: Array | None = None, pairs: Iterable[tuple[int, int]] = ()) -> Array:
    """Sum over paired slots.

    With ``b is None`` each pair ``(i, j)`` traces slots ``i`` and ``j`` of ``a``.
    Otherwise a pair joins slot ``i`` of ``a`` with slot ``j`` of ``b``; the
    result carries the free slots of ``a`` followed by the free slots of ``b``.
    """
    pairs = list(pairs)
    if b is None:
        letters = list(_LETTERS[: a.ndim])
        used = set()
        for i, j in pairs:
            if not (0 <= i < a.ndim and 0 <= j < a.ndim) or i == j or {i, j} & used:
                raise StructuralError(f"invalid trace pairing {pairs} for rank {a.ndim}")
            if a.shape[i] != a.shape[j]:
                raise StructuralError("traced slots differ in dimension")
            used |= {i, j}
            letters[j] = letters[i]
        free = "".join(letters[k] for k in range(a.ndim) if k not in used)
        if not pairs:
            return a * 1 if isinstance(a, QArray) else np.array(a, copy=True)
        return einsum("".join(letters) + "->" + free, a)
    la = list(_LETTERS[: a.ndim])
    lb = list(_LETTERS[a.ndim: a.ndim + b.ndim])
    ua, ub = set(), set()
    for i, j in pairs:
        if not (0 <= i < a.ndim and 0 <= j < b.ndim) or i in ua or j in ub:
            raise StructuralError(f"invalid pairing {pairs} for ranks {a.ndim}, {b.ndim}")
        if a.shape[i] != b.shape[j]:
            raise StructuralError("paired slots differ in dimension")
        ua.add(i)
        ub.add(j)
        lb[j] = la[i]
    free = "".join(la[k] for k in range(a.ndim) if k not in ua) + \
        "".join(lb[k] for k in range(b.ndim) if k not in ub)
    return einsum("".join(la) + "," + "".join(lb) + "->" + free, a, b)


def permutation_sign(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    for i in range(len(perm)):
        while perm[i] != i:
            j = perm[i]
            perm[i], perm[j] = perm[j], perm[i]
            sign = -sign
    return sign


def alternate(t: Array, slots: Sequence[int] | None = None) -> Array:
    """Antisymmetrize over ``slots`` (default: all), normalized by ``1/p!``.

    The normalization makes this a projection, so alternating twice is a no-op.
    """
    slots = list(range(t.ndim)) if slots is None else list(slots)
    if len(set(slots)) != len(slots) or any(not 0 <= s < t.ndim for s in slots):
        raise StructuralError(f"invalid slots {slots} for rank {t.ndim}")
    if len({t.shape[s] for s in slots}) > 1:
        raise StructuralError("alternated slots differ in dimension")
    total = None
    for perm in itertools.permutations(range(len(slots))):
        axes = list(range(t.ndim))
        for k, p in enumerate(perm):
            axes[slots[k]] = slots[p]
        term = t.transpose(*axes)
        if permutation_sign(perm) < 0:
            term = -term
        total = term if total is None else total + term
    count = math.factorial(len(slots))
    if isinstance(t, QArray):
        return total / count
    return total / float(count)


def symmetric_part(t: Array) -> Array:
    half = Fraction(1, 2) if isinstance(t, QArray) else 0.5
    return (t + t.transpose(1, 0)) * half if isinstance(t, QArray) else (t + t.T) * half


def antisymmetric_part(t: Array) -> Array:
    if isinstance(t, QArray):
        return (t - t.transpose(1, 0)) * Fraction(1, 2)
    return (t - t.T) * 0.5


def alternation_defect(t: Array, slots: Sequence[int] | None = None):
    """Max-abs of ``t + t∘τ`` over every transposition τ of ``slots``."""
    slots = list(range(t.ndim)) if slots is None else list(slots)
    worst = 0
    for i, j in itertools.combinations(slots, 2):
        axes = list(range(t.ndim))
        axes[i], axes[j] = axes[j], axes[i]
        worst = max(worst, maxabs(t + t.transpose(*axes)))
    return worst


def symmetry_defect(r: Array, kind: str):
    """Residual of a declared Rank4 symmetry class.

    ``kind`` is one of ``none``, ``curvature`` (skew in slots 0-1 and 2-3),
    ``alt-last-3`` or ``alt-4``.
    """
    if kind == "none":
        return 0 if isinstance(r, QArray) else 0.0
    if kind == "curvature":
        return max(maxabs(r + r.transpose(1, 0, 2, 3)), maxabs(r + r.transpose(0, 1, 3, 2)))
    if kind == "alt-last-3":
        return alternation_defect(r, [1, 2, 3])
    if kind == "alt-4":
        return alternation_defect(r)
    raise StructuralError(f"unknown symmetry class {kind!r}")


def wedge(a: Array, b: Array) -> Array:
    """Wedge product of alternating forms (determinant convention)."""
    p, q = a.ndim, b.ndim
    outer = einsum(f"{_LETTERS[:p]},{_LETTERS[p:p + q]}->{_LETTERS[:p + q]}", a, b)
    coeff = math.factorial(p + q) // (math.factorial(p) * math.factorial(q))
    return alternate(outer) * coeff


def interior(v: Array, form: Array) -> Array:
    """Insert the vector ``v`` into the first slot of ``form``."""
    rest = _LETTERS[1:form.ndim]
    return einsum(f"a,a{rest}->{rest}", v, form)


def sigma_form(T: Array) -> Array:
    """The 4-form of a 3-form by its component formula.

    ``s_abcd = T_abs T_scd + T_bcs T_sad + T_cas T_sbd`` (summed over ``s``).
    Leading batch axes are allowed.
    """
    return (einsum("...abs,...scd->...abcd", T, T)
            + einsum("...bcs,...sad->...abcd", T, T)
            + einsum("...cas,...sbd->...abcd", T, T))


def sigma_form_wedge(T: Array) -> Array:
    """Same 4-form as :func:`sigma_form`, built as ``1/2 sum_j (e_j⌟T)^(e_j⌟T)``."""
    n = T.shape[0]
    total = None
    for j in range(n):
        w = wedge(T[j], T[j])
        total = w if total is None else total + w
    return total * (Fraction(1, 2) if isinstance(T, QArray) else 0.5)


def levi_civita_symbol(n: int) -> np.ndarray:
    eps = np.zeros((n,) * n, dtype=np.int64)
    for perm in itertools.permutations(range(n)):
        eps[perm] = permutation_sign(perm)
    return eps


def hodge_star(form: np.ndarray) -> np.ndarray:
    """Euclidean Hodge star of a p-form given in an orthonormal coframe.

    ``(*w)_J = (1/p!) w_I eps_IJ``; leading batch axes are not supported.
    """
    n = form.shape[0] if form.ndim else None
    if n is None:
        raise StructuralError("hodge_star needs at least a 1-form")
    p = form.ndim
    eps = levi_civita_symbol(n).astype(np.float64)
    idx_in = _LETTERS[:p]
    idx_out = _LETTERS[p:n]
    return np.einsum(f"{idx_in},{idx_in}{idx_out}->{idx_out}", form, eps) / math.factorial(p)


def basis_form(n: int, indices: Sequence[int], value: Number = 1, exact: bool = True) -> Array:
    """The form ``value * e^{i1...ip}`` (0-based indices) as a full component array."""
    p = len(indices)
    if len(set(indices)) != p:
        return zeros((n,) * p, exact)
    ints = np.zeros((n,) * p, dtype=np.int64)
    for perm in itertools.permutations(range(p)):
        ints[tuple(indices[k] for k in perm)] = permutation_sign(perm)
    if exact:
        return QArray(ints, value)
    return ints.astype(np.float64) * float(value)
