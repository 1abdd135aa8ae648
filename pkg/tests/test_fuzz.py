import pytest

from skewbianchi import identities
from skewbianchi.errors import StructuralError
from skewbianchi.fuzz import FuzzFailure, algebra_families, fuzz_algebraic


def test_fuzz_is_deterministic():
    a = fuzz_algebraic(3, 12).to_json()
    b = fuzz_algebraic(3, 12).to_json()
    assert a == b
    assert a["verdict"] == "pass"
    assert a["evaluations"] == 12 * len(identities.FUZZ_IDENTITIES)


def test_zero_count():
    rep = fuzz_algebraic(1, 0)
    assert rep.instances == [] and rep.evaluations == 0


def test_family_filter():
    rep = fuzz_algebraic(2, 50, dims=[6], families=["heisenberg+R3"], classify=False)
    assert {i["family"] for i in rep.instances} == {"heisenberg+R3"}


def test_all_dimensions():
    rep = fuzz_algebraic(5, 10, dims="3..7", classify=False)
    assert sorted({i["dim"] for i in rep.instances}) == [3, 4, 5, 6, 7]


def test_bad_dimensions_and_families():
    with pytest.raises(StructuralError):
        fuzz_algebraic(1, 1, dims="2..4")
    with pytest.raises(StructuralError):
        fuzz_algebraic(1, 1, dims=[3], families=["upper_triangular_4"])


def test_families_listed_per_dimension():
    assert "upper_triangular_3" in algebra_families(3)
    assert "su2+su2" in algebra_families(6)
    assert algebra_families(4)[0] == "abelian"


def test_sigma_sign_mutation_is_caught(monkeypatch):
    monkeypatch.setattr(identities, "MUTATIONS", {"gen-sigma-sign"})
    with pytest.raises(FuzzFailure) as info:
        fuzz_algebraic(1, 20)
    ce = info.value.counterexample
    assert ce["identity"] == "GEN" and ce["residual"] != "0"
    assert ce["geometry"]["backend"] == "lie"


def test_abelian_five_dimensional_sigma_trace():
    rep = fuzz_algebraic(1, 200, dims=[5], identities=["SIGT"], classify=False, families=["abelian"])
    assert rep.evaluations == 200


def test_randomized_heisenberg_basis_general_bianchi():
    rep = fuzz_algebraic(2, 50, dims=[6], identities=["GEN"], classify=False, families=["heisenberg+R3"])
    assert rep.evaluations == 50
