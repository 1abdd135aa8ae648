import numpy as np
import pytest

from skewbianchi.catalog import CHART_BOX, CHART_GRID, CONFORMAL_U, PHI
from skewbianchi.chart import ChartGeometry, chart_deltaT, chart_dT, fd_derivative
from skewbianchi.errors import CapabilityError, DomainError, GeometryParseError, NumericError, StructuralError
from skewbianchi.expr import compile_expression
from skewbianchi.tensor_core import hodge_star

FLAT = [["1" if a == b else "0" for b in range(4)] for a in range(4)]
X0 = np.array([0.1, 0.2, -0.3, 0.4])


def phi_geometry(h=1e-3):
    return ChartGeometry.from_expressions(4, FLAT, [{"i": 1, "j": 2, "k": 3, "expr": PHI}], "0",
                                          CHART_BOX, CHART_GRID, h)


def conformal_geometry():
    g = [[f"exp(2*({CONFORMAL_U}))" if a == b else "0" for b in range(4)] for a in range(4)]
    return ChartGeometry.from_expressions(4, g, [], "0", CHART_BOX, CHART_GRID)


def d_phi(x):
    x1, x2, x3, x4 = x
    return np.array([0.5 * np.cos(x1), 0.2 * x3, 0.2 * x2, -0.3 * np.sin(x4)])


def test_fd_derivative_examples():
    f = lambda P: np.sin(P[:, 0]) * P[:, 1] ** 2
    x = np.array([0.3, 0.7])
    assert abs(fd_derivative(f, x, 0) - np.cos(0.3) * 0.49) < 1e-11
    assert abs(fd_derivative(f, x, 1) - 2 * np.sin(0.3) * 0.7) < 1e-11
    assert abs(fd_derivative(f, x, 0, order=2) + np.sin(0.3) * 0.49) < 1e-7


def test_fd_derivative_is_exact_on_quartics():
    f = lambda P: P[:, 0] ** 4
    assert abs(fd_derivative(f, [0.5], 0, h=0.1) - 4 * 0.125) < 1e-12


def test_fd_derivative_rejects_bad_arguments():
    f = lambda P: P[:, 0]
    with pytest.raises(StructuralError):
        fd_derivative(f, [0.0, 0.0], 2)
    with pytest.raises(StructuralError):
        fd_derivative(f, [0.0], 0, order=3)
    with pytest.raises(DomainError):
        fd_derivative(f, [0.999], 0, box=[[-1, 1]])


def test_grid_point_too_close_to_boundary():
    with pytest.raises(DomainError):
        ChartGeometry.from_expressions(4, FLAT, [], "0", CHART_BOX, [[0.999, 0, 0, 0]])


def test_indefinite_metric_rejected():
    g = [row[:] for row in FLAT]
    g[0][0] = "-1"
    with pytest.raises(NumericError):
        ChartGeometry.from_expressions(4, g, [], "0", CHART_BOX, CHART_GRID)


def test_expression_errors_carry_location():
    with pytest.raises(GeometryParseError) as info:
        compile_expression("x1 ** x2", 4, "g[0][0]")
    assert "g[0][0]" in str(info.value)
    with pytest.raises(GeometryParseError):
        compile_expression("x9", 4)
    with pytest.raises(GeometryParseError):
        compile_expression("__import__('os')", 4)


def test_frame_is_orthonormal():
    geo = conformal_geometry()
    X = geo.points
    E = geo.frame(X)
    gram = np.einsum("pai,pab,pbj->pij", E, geo.metric(X), E)
    assert np.allclose(gram, np.eye(4), atol=1e-13)


def test_conformal_christoffel_is_gradient_of_u():
    geo = conformal_geometry()
    A = geo.christoffel(X0[None, :])[0]
    x1, x2, x3 = X0[:3]
    du1 = 1.5 * np.cos(6 * x1)
    du3 = 0.15 * np.cos(5 * x2)
    # Gamma^1_11 = d1 u, Gamma^1_33 = -d1 u, Gamma^3_13 = d1 u, Gamma^1_13 = d3 u
    assert abs(A[0, 0, 0] - du1) < 1e-8
    assert abs(A[2, 2, 0] + du1) < 1e-8
    assert abs(A[0, 2, 2] - du1) < 1e-8
    assert abs(A[0, 2, 0] - du3) < 1e-8


def test_codifferential_of_phi_e123():
    delta = chart_deltaT(phi_geometry(), X0)
    dp = d_phi(X0)
    assert abs(delta[1, 2] + dp[0]) < 1e-9
    assert abs(delta[0, 2] - dp[1]) < 1e-9
    assert abs(delta[0, 1] + dp[2]) < 1e-9
    assert abs(delta[0, 3]) < 1e-9


def test_exterior_derivative_of_phi_e123():
    dT = chart_dT(phi_geometry(), X0)
    assert abs(dT[3, 0, 1, 2] - d_phi(X0)[3]) < 1e-9
    assert abs(dT[0, 1, 2, 3] + d_phi(X0)[3]) < 1e-9


def test_codifferential_agrees_with_hodge_route():
    # on flat R^4, delta = (-1)^(n(p+1)+1) * d * on p-forms; for p = 3: delta = -*d*
    geo = phi_geometry()
    h = geo.h
    def star_T(x):
        return hodge_star(geo.torsion(x[None, :])[0])
    d_star = np.array([(8 * (star_T(X0 + h * e) - star_T(X0 - h * e))
                        - (star_T(X0 + 2 * h * e) - star_T(X0 - 2 * h * e))) / (12 * h)
                       for e in np.eye(4)])
    d_of_star = d_star - d_star.T
    via_hodge = -hodge_star(d_of_star)
    assert np.allclose(chart_deltaT(geo, X0), via_hodge, atol=1e-9)


def test_isometric_charts_give_same_scalars():
    # x -> (x2, x1, x3, x4) swaps coordinates; scalar invariants follow the map
    from skewbianchi.curvature import derived_pack
    swapped = "1 + 0.5*sin(x2) + 0.3*cos(x4) + 0.2*x1*x3"
    geo_b = ChartGeometry.from_expressions(4, FLAT, [{"i": 2, "j": 1, "k": 3, "expr": swapped}], "0",
                                           CHART_BOX, CHART_GRID)
    a = derived_pack(phi_geometry(), X0)
    b = derived_pack(geo_b, X0[[1, 0, 2, 3]])
    assert abs(float(a.normT) - float(b.normT)) < 1e-12
    assert np.allclose(np.sort(np.abs(a.dT).ravel()), np.sort(np.abs(b.dT).ravel()), atol=1e-9)


def test_missing_potential_is_a_capability_error():
    geo = ChartGeometry.from_expressions(4, FLAT, [], None, CHART_BOX, CHART_GRID)
    with pytest.raises(CapabilityError):
        geo.potential(geo.points)
