import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skewbianchi.errors import StructuralError
from skewbianchi.tensor_core import (QArray, alternate, alternation_defect, basis_form, contract,
                                     einsum, hodge_star, interior, parse_rational, permutation_sign,
                                     sigma_form, sigma_form_wedge, symmetry_defect, wedge)

import oracles

small = st.fractions(min_value=-3, max_value=3, max_denominator=4)


def q_array(shape):
    size = int(np.prod(shape))
    return st.lists(small, min_size=size, max_size=size).map(
        lambda vals: QArray.from_values(np.array(vals, dtype=object).reshape(shape)))


def three_forms(n):
    count = len(list(itertools.combinations(range(n), 3)))

    def build(vals):
        T = basis_form(n, [0, 1, 2], 0)
        for idx, v in zip(itertools.combinations(range(n), 3), vals):
            T = T + basis_form(n, list(idx), v)
        return T
    return st.lists(small, min_size=count, max_size=count).map(build)


def test_contract_trace_and_pairing():
    a = QArray.from_values([[1, 2], [3, 4]])
    assert contract(a, pairs=[(0, 1)]).item() == 5
    b = QArray.from_values([[Fraction(1, 2), 0], [0, 2]])
    prod = contract(a, b, pairs=[(1, 0)])
    assert np.array_equal(prod.to_fractions(), np.array([[Fraction(1, 2), 4], [Fraction(3, 2), 8]], dtype=object))


def test_contract_rejects_bad_pairs():
    a = QArray.zeros((2, 3))
    with pytest.raises(StructuralError):
        contract(a, pairs=[(0, 1)])
    with pytest.raises(StructuralError):
        contract(a, a, pairs=[(0, 1)])


def test_einsum_refuses_mixed_operands():
    with pytest.raises(StructuralError):
        einsum("ij,jk->ik", QArray.zeros((2, 2)), np.zeros((2, 2)))


def test_einsum_needs_explicit_output():
    with pytest.raises(StructuralError):
        einsum("ij,jk", np.zeros((2, 2)), np.zeros((2, 2)))


def test_overflow_promotes_to_python_ints():
    big = QArray(np.array([2**40, 3], dtype=np.int64))
    sq = einsum("i,i->", big, big)
    assert sq.item() == 2**80 + 9


def test_parse_rational():
    assert parse_rational("-3/4") == Fraction(-3, 4)
    assert parse_rational("0.25") == Fraction(1, 4)
    assert parse_rational(" 7 ") == 7
    for bad in ["1/0", "x", "1//2", ""]:
        with pytest.raises((ValueError, ZeroDivisionError)):
            parse_rational(bad)


def test_permutation_sign():
    assert permutation_sign([0, 1, 2]) == 1
    assert permutation_sign([1, 0, 2]) == -1
    assert permutation_sign([1, 2, 0]) == 1


def test_basis_form_components():
    w = basis_form(4, [0, 2, 3], Fraction(2))
    fr = w.to_fractions()
    assert fr[0, 2, 3] == 2 and fr[2, 0, 3] == -2 and fr[3, 2, 0] == -2
    assert alternation_defect(w) == 0


def test_symmetry_defect_kinds():
    R = basis_form(4, [0, 1, 2, 3])
    assert symmetry_defect(R, "curvature") == 0
    assert symmetry_defect(R, "alt-4") == 0
    with pytest.raises(StructuralError):
        symmetry_defect(R, "bogus")


@settings(max_examples=40, deadline=None)
@given(q_array((3, 3, 3)))
def test_alternate_is_a_projection(t):
    a = alternate(t)
    assert (alternate(a) - a).is_zero()
    assert alternation_defect(a) == 0


@settings(max_examples=40, deadline=None)
@given(q_array((3, 3)), q_array((3, 3)), small)
def test_contract_is_bilinear(a, b, s):
    c = QArray.from_values(np.eye(3, dtype=object))
    lhs = contract(a * s + b, c, pairs=[(1, 0)])
    rhs = contract(a, c, pairs=[(1, 0)]) * s + contract(b, c, pairs=[(1, 0)])
    assert (lhs - rhs).is_zero()


@settings(max_examples=30, deadline=None)
@given(three_forms(4))
def test_sigma_is_even_and_quadratic(T):
    assert (sigma_form(-T) - sigma_form(T)).is_zero()
    assert (sigma_form(T * 2) - sigma_form(T) * 4).is_zero()


@settings(max_examples=25, deadline=None)
@given(three_forms(5))
def test_sigma_component_formula_matches_wedge_definition(T):
    assert (sigma_form(T) - sigma_form_wedge(T)).is_zero()
    expected = oracles.sigma(oracles.from_qarray(T), 5)
    got = oracles.from_qarray(sigma_form(T))
    assert all(got[k] == expected[k] for k in expected)


@settings(max_examples=25, deadline=None)
@given(three_forms(5))
def test_sigma_is_a_four_form(T):
    assert alternation_defect(sigma_form(T)) == 0


@settings(max_examples=30, deadline=None)
@given(q_array((4,)), q_array((4,)))
def test_wedge_of_one_forms_is_graded_commutative(a, b):
    assert (wedge(a, b) + wedge(b, a)).is_zero()
    assert wedge(a, a).is_zero()


def test_wedge_determinant_convention():
    e1, e2 = basis_form(3, [0]), basis_form(3, [1])
    assert wedge(e1, e2).to_fractions()[0, 1] == 1


@settings(max_examples=30, deadline=None)
@given(q_array((4,)), three_forms(4))
def test_interior_twice_vanishes(v, T):
    assert interior(v, interior(v, T)).is_zero()


def test_hodge_star_examples():
    e12 = basis_form(3, [0, 1], exact=False)
    assert np.allclose(hodge_star(e12), [0, 0, 1])
    vol = basis_form(4, [0, 1, 2, 3], exact=False)
    assert np.isclose(hodge_star(vol), 1.0)
    rng = np.random.default_rng(0)
    w = alternate(rng.normal(size=(4, 4)))
    # ** = (-1)^(p(n-p)) on p-forms
    assert np.allclose(hodge_star(hodge_star(w)), w)


def test_float_and_exact_einsum_agree():
    rng = np.random.default_rng(3)
    ints = rng.integers(-5, 6, size=(3, 4, 4))
    a = QArray(ints, Fraction(1, 3))
    exact = einsum("iab,jab->ij", a, a).to_float()
    approx = np.einsum("iab,jab->ij", ints / 3, ints / 3)
    assert np.allclose(exact, approx, atol=1e-12)
