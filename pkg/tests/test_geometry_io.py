import json
from fractions import Fraction

import pytest

from skewbianchi.errors import GeometryParseError
from skewbianchi.geometry_io import dump_geometry, load_geometry, parse_geometry

SU2 = {"backend": "lie", "dim": 3,
       "c": [{"i": 1, "j": 2, "k": 3, "v": 1}, {"i": 2, "j": 3, "k": 1, "v": 1},
             {"i": 3, "j": 1, "k": 2, "v": 1}],
       "T": [{"i": 1, "j": 2, "k": 3, "v": "-1"}]}

CHART = {"backend": "chart", "dim": 3, "box": [[-1, 1]] * 3, "grid": [[0.1, 0.2, 0.3]],
         "g": [["1", "0", "0"], ["0", "1", "0"], ["0", "0", "1"]],
         "T": [{"i": 1, "j": 2, "k": 3, "expr": "1 + x1"}], "f": "x2"}


def location(doc):
    with pytest.raises(GeometryParseError) as info:
        parse_geometry(doc)
    return info.value.location


def edited(base, **changes):
    doc = json.loads(json.dumps(base))
    doc.update(changes)
    return doc


def test_parse_su2():
    geo = parse_geometry(SU2)
    assert geo.dim == 3 and geo.exact
    assert geo.c.to_fractions()[1, 0, 2] == -1
    assert geo.T.to_fractions()[2, 1, 0] == 1
    assert geo.f == 0


def test_float_mode():
    geo = parse_geometry(SU2, mode="float")
    assert not geo.exact


def test_rational_strings():
    doc = edited(SU2, T=[{"i": 3, "j": 1, "k": 2, "v": "3/4"}], f="-1/2")
    geo = parse_geometry(doc)
    assert geo.T.to_fractions()[0, 1, 2] == Fraction(3, 4)
    assert geo.f == Fraction(-1, 2)


def test_duplicate_orbit_location():
    doc = edited(SU2, T=[{"i": 1, "j": 2, "k": 3, "v": 1}, {"i": 2, "j": 1, "k": 3, "v": 1}])
    assert location(doc) == "$.T[1]"
    doc = edited(SU2, c=SU2["c"] + [{"i": 2, "j": 1, "k": 3, "v": -1}])
    assert location(doc) == "$.c[3]"


def test_error_locations():
    assert location(edited(SU2, dim=1)) == "$.dim"
    assert location(edited(SU2, backend="other")) == "$.backend"
    assert location(edited(SU2, T=[{"i": 1, "j": 2, "k": 4, "v": 1}])) == "$.T[0].k"
    assert location(edited(SU2, T=[{"i": 1, "j": 2, "k": 3, "v": "x"}])) == "$.T[0].v"
    assert location(edited(SU2, T=[{"i": 1, "j": 1, "k": 3, "v": 2}])) == "$.T[0]"
    assert location(edited(SU2, f=1.5)) == "$.f"
    assert location(edited(CHART, grid=[[0.1, 0.2]])) == "$.grid[0]"
    assert location(edited(CHART, h=-1)) == "$.h"
    assert location(edited(CHART, g=[["1"]])) == "$.g"
    assert location([1, 2]) == "$"


def test_jacobi_failure_is_a_parse_error():
    doc = edited(SU2, c=[{"i": 1, "j": 2, "k": 3, "v": 1}, {"i": 1, "j": 3, "k": 1, "v": 1}])
    assert location(doc) == "$.c"


def test_chart_round_trip(tmp_path):
    geo = parse_geometry(CHART)
    assert geo.potential(geo.points)[0] == pytest.approx(0.2)
    path = tmp_path / "chart.json"
    path.write_text(json.dumps(dump_geometry(geo)))
    again = load_geometry(path)
    assert dump_geometry(again)["T"] == CHART["T"]


def test_chart_without_potential():
    doc = edited(CHART)
    del doc["f"]
    geo = parse_geometry(doc)
    assert geo.potential_fn is None
    assert "f" not in dump_geometry(geo)


def test_load_errors(tmp_path):
    with pytest.raises(GeometryParseError):
        load_geometry(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(GeometryParseError) as info:
        load_geometry(bad)
    assert info.value.location.startswith("line 1")
