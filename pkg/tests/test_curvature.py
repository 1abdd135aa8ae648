import itertools
import random
from fractions import Fraction

import numpy as np
import pytest

from skewbianchi.catalog import chart_conformal, chart_phi
from skewbianchi.curvature import (FieldPack, curvature, derived_pack, riemannian_data,
                                   torsion_connection)
from skewbianchi.frames import frame_curvature
from skewbianchi.fuzz import random_instance
from skewbianchi.lie import LieGeometry, abelian, su2, upper_triangular
from skewbianchi.tensor_core import QArray, basis_form

import oracles


def flat_torus(lam=Fraction(1)):
    return LieGeometry(abelian(3), basis_form(3, [0, 1, 2], lam))


def test_flat_torus_curvature_closed_form():
    lam = Fraction(3, 2)
    R = oracles.from_qarray(curvature(torsion_connection(flat_torus(lam)), flat_torus(lam)).R)
    for i, j, k, l in itertools.product(range(3), repeat=4):
        expected = lam**2 / 4 * ((j == l) * (k == i) - (i == l) * (k == j))
        assert R[i, j, k, l] == expected


def test_cartan_schouten_connection_is_flat():
    geo = LieGeometry(su2(1), basis_form(3, [0, 1, 2], -1))
    conn = torsion_connection(geo)
    assert conn.gamma.is_zero()
    assert curvature(conn, geo).R.is_zero()


def test_torsion_free_member_is_levi_civita():
    geo = LieGeometry(upper_triangular(4), basis_form(6, [0, 3, 5], 2))
    conn = torsion_connection(geo, t=0)
    assert (conn.gamma - geo.lc_gamma()).is_zero()
    R0 = curvature(conn, geo).R
    assert (R0 - FieldPack(geo).Rg).is_zero()


@pytest.mark.parametrize("n", [3, 5, 6])
def test_curvature_and_torsion_data_match_loop_oracles(n):
    rng = random.Random(100 + n)
    for _ in range(3):
        _, geo = random_instance(n, rng)
        c, T = oracles.from_qarray(geo.c), oracles.from_qarray(geo.T)
        G = oracles.torsion_connection(c, T, n)
        R = oracles.curvature(G, c, n)
        Ric = oracles.ricci(R, n)
        p = FieldPack(geo)
        assert oracles.from_qarray(p.R) == R
        assert oracles.from_qarray(p.Ric) == Ric
        assert p.Scal.item() == oracles.scal(Ric, n)
        assert oracles.from_qarray(p.T2) == oracles.t_squared(T, n)
        assert p.normT.item() == oracles.norm_sq(T, n)
        assert oracles.from_qarray(p.sigma) == oracles.sigma(T, n)
        Gg = oracles.levi_civita(c, n)
        delta = oracles.co_differential(Gg, T, n)
        assert oracles.from_qarray(p.deltaT) == delta
        assert oracles.from_qarray(p.nablaT) == oracles.cov_3form(G, T, n)
        theta = oracles.theta(delta, T, n)
        big = oracles.big_theta(oracles.lie_exterior(c, T, n), T, n)
        assert list(p.theta.to_fractions()) == theta
        assert list(p.Theta.to_fractions()) == big


def test_riemannian_ricci_of_su2():
    Ricg, Scalg = riemannian_data(LieGeometry(su2(2), basis_form(3, [0, 1, 2], 0)))
    assert (Ricg - QArray(np.eye(3, dtype=np.int64), 2)).is_zero()
    assert Scalg.item() == 6


def test_exact_and_float_agree():
    rng = random.Random(9)
    for n in (5, 6):
        _, geo = random_instance(n, rng)
        pe, pf = FieldPack(geo), FieldPack(geo.to_float())
        for name in ("R", "Ric", "Rg", "sigma", "deltaT", "dT", "theta", "Theta", "nablaT"):
            assert np.allclose(getattr(pe, name).to_float(), getattr(pf, name), atol=1e-12, rtol=0), name


def test_derived_pack_is_self_consistent():
    rng = random.Random(4)
    _, geo = random_instance(6, rng)
    assert derived_pack(geo).consistency_defect() == 0
    chart = chart_phi().geometry
    assert derived_pack(chart, chart.points[0]).consistency_defect() < 1e-12


def test_chart_frame_route_matches_coordinate_route():
    geo = chart_conformal().geometry
    p = FieldPack(geo, geo.points)
    dG = p.grad_of("G")
    R_frame = frame_curvature(p.G, p.c, dG)
    assert np.max(np.abs(R_frame - p.R)) < 1e-6


def test_conformal_scalar_curvature_closed_form():
    geo = chart_conformal().geometry
    X = geo.points
    _, Scalg = riemannian_data(geo, X)
    x1, x2, x3 = X[:, 0], X[:, 1], X[:, 2]
    u = 0.25 * np.sin(6 * x1) + 0.15 * np.cos(5 * x2) * x3
    grad = np.stack([1.5 * np.cos(6 * x1), -0.75 * np.sin(5 * x2) * x3, 0.15 * np.cos(5 * x2)], -1)
    lap = -9.0 * np.sin(6 * x1) - 3.75 * np.cos(5 * x2) * x3
    expected = -np.exp(-2 * u) * (6 * lap + 6 * (grad**2).sum(-1))
    assert np.max(np.abs(Scalg - expected)) < 1e-6


def test_chart_flat_metric_torsion_values():
    geo = chart_phi().geometry
    x = geo.points[1]
    d = derived_pack(geo, x)
    phi = 1 + 0.5 * np.sin(x[0]) + 0.3 * np.cos(x[3]) + 0.2 * x[1] * x[2]
    assert abs(float(d.normT) - 6 * phi**2) < 1e-12
    assert np.allclose(d.T2, np.diag([2, 2, 2, 0]) * phi**2, atol=1e-12)
    assert np.max(np.abs(d.sigma)) < 1e-12
