"""Seeded random search for counterexamples to the universal identities.

Instances are left-invariant geometries with rational data: a Lie algebra
that satisfies Jacobi by construction (abelian, su(2), strictly upper
triangular matrices, Heisenberg plus abelian, and direct sums), a random
rational orthogonal change of basis, an optional rescaling of the
orthonormal frame, and a random rational 3-form.  Everything is evaluated in
exact arithmetic, so a single nonzero residual is a counterexample.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InvariantViolation, StructuralError
from .geometry_io import dump_geometry
from .identities import FUZZ_IDENTITIES, CLASSIFIERS, evaluate_identity, make_pack
from .lie import (LieGeometry, abelian, change_basis, direct_sum, heisenberg_plus_abelian,
                  rescale_basis, su2, upper_triangular)
from .tensor_core import QArray, basis_form, format_rational

FUZZ_DIMS = range(3, 8)
_TRIPLES = [(3, 4, 5), (5, 12, 13), (8, 15, 17)]


class FuzzFailure(InvariantViolation):
    """An exact residual of a universal identity is nonzero on a fuzz instance."""

    def __init__(self, message: str, counterexample: dict):
        super().__init__(message)
        self.counterexample = counterexample


def _algebras(n: int) -> list[tuple[str, QArray]]:
    out = [("abelian", abelian(n))]
    if n == 3:
        out += [("su2", su2(1)), ("upper_triangular_3", upper_triangular(3))]
    if n >= 4:
        out.append((f"heisenberg+R{n - 3}", heisenberg_plus_abelian(n - 3)))
        out.append((f"su2+R{n - 3}", direct_sum(su2(1), QArray.zeros((n - 3,) * 3))))
    if n == 6:
        out += [("upper_triangular_4", upper_triangular(4)),
                ("su2+su2", direct_sum(su2(1), su2(2))),
                ("su2+upper_triangular_3", direct_sum(su2(1), upper_triangular(3)))]
    if n == 7:
        out.append(("upper_triangular_4+R", direct_sum(upper_triangular(4), QArray.zeros((1, 1, 1)))))
    return out


def algebra_families(n: int) -> list[str]:
    return [name for name, _ in _algebras(n)]


def random_orthogonal(n: int, rng: random.Random, rotations: int = 2) -> QArray:
    """Signed permutation composed with rational Givens rotations."""
    perm = list(range(n))
    rng.shuffle(perm)
    Q = np.zeros((n, n), dtype=object)
    Q[...] = Fraction(0)
    for i, p in enumerate(perm):
        Q[i, p] = Fraction(rng.choice((-1, 1)))
    for _ in range(rotations):
        a, b = rng.sample(range(n), 2)
        x, y, z = rng.choice(_TRIPLES)
        G = np.zeros((n, n), dtype=object)
        G[...] = Fraction(0)
        for k in range(n):
            G[k, k] = Fraction(1)
        c, s = Fraction(x, z), Fraction(y, z)
        G[a, a], G[a, b], G[b, a], G[b, b] = c, -s, s, c
        Q = Q.dot(G)
    return QArray.from_values(Q)


def random_three_form(n: int, rng: random.Random, density: float = 0.5) -> QArray:
    T = basis_form(n, [0, 1, 2], 0)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                if rng.random() < density:
                    v = Fraction(rng.randint(-3, 3), rng.choice((1, 2, 3)))
                    if v:
                        T = T + basis_form(n, [i, j, k], v)
    return T


def random_instance(n: int, rng: random.Random, families: Sequence[str] | None = None
                    ) -> tuple[str, LieGeometry]:
    pool = [a for a in _algebras(n) if families is None or a[0] in families]
    if not pool:
        raise StructuralError(f"no algebra family of dimension {n} among {list(families or [])}")
    name, c = rng.choice(pool)
    if name != "abelian":
        Q = random_orthogonal(n, rng)
        c = change_basis(c, Q)
        if rng.random() < 0.5:
            c = rescale_basis(c, [Fraction(rng.randint(1, 3), rng.randint(1, 2)) for _ in range(n)])
    T = random_three_form(n, rng)
    f = Fraction(rng.randint(-2, 2))
    return name, LieGeometry(c, T, f, f"fuzz-{name}")


@dataclass
class FuzzReport:
    seed: int
    count: int
    dims: list
    identities: list
    evaluations: int = 0
    instances: list = field(default_factory=list)
    classifier_counts: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"seed": self.seed, "count": self.count, "dims": list(self.dims),
                "identities": list(self.identities), "evaluations": self.evaluations,
                "verdict": "pass", "classifier_counts": self.classifier_counts,
                "instances": self.instances}


def _parse_dims(dims) -> list[int]:
    if isinstance(dims, str):
        if ".." in dims:
            lo, hi = dims.split("..")
            dims = list(range(int(lo), int(hi) + 1))
        else:
            dims = [int(d) for d in dims.split(",") if d]
    dims = sorted(set(int(d) for d in dims))
    if not dims or any(d not in FUZZ_DIMS for d in dims):
        raise StructuralError(f"fuzz dimensions must lie in {FUZZ_DIMS.start}..{FUZZ_DIMS.stop - 1}")
    return dims


def fuzz_algebraic(seed: int, count: int, dims: Sequence[int] | str = (3, 5, 6),
                   identities: Sequence[str] = tuple(FUZZ_IDENTITIES),
                   classify: bool = True, families: Sequence[str] | None = None) -> FuzzReport:
    """Evaluate universal identities exactly on ``count`` random instances.

    With ``classify`` the classifiers also run, so their theorem-level
    implications are exercised.  ``families`` restricts the algebras by name
    (see :func:`algebra_families`).  Raises :class:`FuzzFailure` on the first
    nonzero residual, carrying the serialized instance.
    """
    dims = _parse_dims(dims)
    rng = random.Random(seed)
    report = FuzzReport(seed, count, dims, list(identities))
    counts = {name: {"true": 0, "false": 0} for name in CLASSIFIERS}
    for k in range(count):
        n = dims[k % len(dims)]
        family, geo = random_instance(n, rng, families)
        pack = make_pack(geo)
        for name in identities:
            rep = evaluate_identity(name, geo, pack=pack)
            report.evaluations += 1
            if not rep.verdict:
                raise FuzzFailure(
                    f"{name} residual {format_rational(rep.max_residual)} on fuzz instance {k}",
                    {"instance": k, "seed": seed, "family": family, "identity": name,
                     "residual": format_rational(rep.max_residual),
                     "witness_index": list(rep.witness or ()), "geometry": dump_geometry(geo)})
        if classify:
            for name, fn in CLASSIFIERS.items():
                try:
                    verdict = fn(geo).verdict
                except InvariantViolation as exc:
                    raise FuzzFailure(f"{name} on fuzz instance {k}: {exc}",
                                      {"instance": k, "seed": seed, "family": family, "classifier": name,
                                       "geometry": dump_geometry(geo)}) from None
                counts[name]["true" if verdict else "false"] += 1
        report.instances.append({"index": k, "dim": n, "family": family})
    report.classifier_counts = counts if classify else {}
    return report
