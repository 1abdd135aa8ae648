"""Acceptance criteria 1-10, one test each.

Every test records a ``criterion N: PASS|FAIL ...`` line (printed in the
terminal summary) before asserting.
"""

import itertools
import json
import random
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np

from conftest import ACCEPTANCE_LINES
from skewbianchi import identities
from skewbianchi.catalog import chart_conformal, load_catalog
from skewbianchi.curvature import FieldPack
from skewbianchi.fuzz import FuzzFailure, fuzz_algebraic, random_instance
from skewbianchi.identities import (classify_first_bianchi, classify_nabla_einstein, classify_pair_symmetry,
                                    classify_soliton, classify_zz_flat, evaluate_identity, make_pack)
from skewbianchi.lie import LieGeometry, abelian
from skewbianchi.tensor_core import basis_form, maxabs

import oracles

TOL = 1e-6
SEED, COUNT, DIMS = 1, 200, (3, 5, 6)
CRITERION_IDS = ["DH", "GEN", "BI1V", "RICS1", "RICS2", "RICS3", "SIGT", "EIN10", "E13", "E1"]


def record(k: int, ok: bool, detail: str) -> None:
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def fuzz_instances(seed=SEED, count=COUNT, dims=DIMS):
    """The instances ``fuzz_algebraic(seed, count, dims)`` visits, in order."""
    rng = random.Random(seed)
    return [random_instance(dims[k % len(dims)], rng)[1] for k in range(count)]


def all_instances():
    return [e.geometry for e in load_catalog("exact")] + fuzz_instances()


def test_criterion_1_universal_identities():
    start = time.perf_counter()
    worst_chart, exact_nonzero = 0.0, []
    for e in load_catalog("exact"):
        geo = e.geometry
        pack = make_pack(geo)
        for name in CRITERION_IDS:
            r = evaluate_identity(name, geo, pack=pack).max_residual
            if geo.exact and r != 0:
                exact_nonzero.append((e.name, name, r))
            if not geo.exact:
                worst_chart = max(worst_chart, r)
    ids = list(dict.fromkeys(CRITERION_IDS + identities.FUZZ_IDENTITIES))
    report = fuzz_algebraic(SEED, COUNT, DIMS, identities=ids, classify=False)
    elapsed = time.perf_counter() - start
    ok = not exact_nonzero and worst_chart <= TOL and elapsed <= 60 and report.evaluations == COUNT * len(ids)
    record(1, ok, f"lie exact nonzero={len(exact_nonzero)}, chart max={worst_chart:.2e}, "
                  f"fuzz {COUNT} instances x {len(ids)} ids exact zero, {elapsed:.1f}s")


def test_criterion_2_flat_torus_oracle():
    geo = LieGeometry(abelian(3), basis_form(3, [0, 1, 2], 1))
    p = FieldPack(geo)
    # brute-force loop oracle
    c, T = oracles.from_qarray(geo.c), oracles.from_qarray(geo.T)
    R = oracles.curvature(oracles.torsion_connection(c, T, 3), c, 3)
    Ric = oracles.ricci(R, 3)
    Rg = oracles.curvature(oracles.levi_civita(c, 3), c, 3)
    eye = {(i, j): Fraction(int(i == j)) for i in range(3) for j in range(3)}
    checks = {
        "oracle R": oracles.from_qarray(p.R) == R,
        "Ric": oracles.from_qarray(p.Ric) == {k: -v / 2 for k, v in eye.items()} == Ric,
        "Scal": p.Scal.item() == Fraction(-3, 2) == oracles.scal(Ric, 3),
        "T2": oracles.from_qarray(p.T2) == {k: 2 * v for k, v in eye.items()} == oracles.t_squared(T, 3),
        "normT": p.normT.item() == 6 == oracles.norm_sq(T, 3),
        "Scalg": p.Scalg.item() == 0 == oracles.scal(oracles.ricci(Rg, 3), 3),
        "sigma": p.sigma.is_zero() and oracles.max_abs(oracles.sigma(T, 3)) == 0,
        "theta": p.theta.is_zero(),
        "Theta": p.Theta.is_zero(),
    }
    bad = [k for k, v in checks.items() if not v]
    record(2, not bad, "Ric=-1/2 Id, Scal=-3/2, T2=2 Id, |T|^2=6, Scal^g=0, sigma=theta=Theta=0 exact"
           + (f"; mismatched: {bad}" if bad else ""))


def test_criterion_3_cartan_schouten():
    geo = next(e.geometry for e in load_catalog("exact") if e.name == "SU2_CS")
    p = FieldPack(geo)
    fb = classify_first_bianchi(geo)
    zz = classify_zz_flat(geo)
    sol = classify_soliton(geo)
    checks = {
        "Gamma=0": p.G.is_zero(),
        "R=0": p.R.is_zero(),
        "first_bianchi": fb.verdict and all(r.max_residual == 0 for k, r in fb.reports.items() if k != "RB"),
        "normT=6": fb.payload.get("normT") == 6,
        "zz_flat": zz.verdict,
        "soliton": sol.verdict and geo.f == 0 and all(sol.payload["conditions"].values()),
        "harmonic": p.dT.is_zero() and p.deltaT.is_zero() and sol.reports["HARMONIC"].verdict,
    }
    bad = [k for k, v in checks.items() if not v]
    record(3, not bad, f"{sum(checks.values())}/{len(checks)} checks" + (f"; failed: {bad}" if bad else ""))


def test_criterion_4_fourf_agreement():
    instances = all_instances()
    disagree = 0
    flags = {}
    for geo in instances:
        pack = make_pack(geo)
        v = tuple(evaluate_identity(k, geo, pack=pack).verdict for k in ("FOURF_A", "FOURF_B", "FOURF_C"))
        disagree += len(set(v)) != 1
        flags[geo.name] = v
        if len(set(v)) == 1:
            classify_pair_symmetry(geo)
    ok = disagree == 0 and flags["CHART_PHI"] == (False,) * 3 and flags["SU2_CS"] == (True,) * 3
    record(4, ok, f"{len(instances) - disagree}/{len(instances)} agree; CHART_PHI={flags['CHART_PHI']}, "
                  f"SU2_CS={flags['SU2_CS']}")


def test_criterion_5_zz_forces_flat():
    held, violations = 0, 0
    for geo in all_instances():
        zz = evaluate_identity("ZZ", geo)
        if zz.verdict:
            held += 1
            R = make_pack(geo).R
            violations += not (maxabs(R) == 0 if geo.exact else maxabs(R) <= TOL)
    torus = next(e.geometry for e in load_catalog("exact") if e.name == "FLAT_TORUS_3")
    w = classify_zz_flat(torus)
    ok = violations == 0 and not w.verdict and w.payload["witness"]["residual"] == "1/4"
    record(5, ok, f"zz held on {held} instances, flatness violations={violations}; "
                  f"FLAT_TORUS_3 witness residual {w.payload['witness']['residual']}")


def test_criterion_6_first_bianchi_chain():
    held, violations = 0, 0
    for geo in all_instances():
        pack = make_pack(geo)
        if not evaluate_identity("RB", geo, pack=pack).verdict:
            continue
        held += 1
        bad = [k for k in ("BSK", "RB2") if not evaluate_identity(k, geo, pack=pack).verdict]
        norms = np.atleast_1d(pack.normT.to_float() if geo.exact else pack.normT)
        spread = float(norms.max() - norms.min())
        violations += bool(bad) or spread > (0 if geo.exact else TOL) or maxabs(pack.dnormT) > (0 if geo.exact else TOL)
    record(6, violations == 0, f"RB held on {held} instances, implication violations={violations}")


def test_criterion_7_einstein_constants():
    cat = {e.name: e.geometry for e in load_catalog("exact")}
    out = {}
    for name in ("FLAT_TORUS_3", "SU2_CS"):
        res = classify_nabla_einstein(cat[name])
        out[name] = (res.verdict, res.reports["EIN9"].max_residual, res.reports["EIN8_CONST"].max_residual,
                     res.payload["C"], res.payload["B"])
    spreads_zero = all(v[0] and v[1] == 0 and v[2] == 0 for v in out.values())
    ok = spreads_zero and out["SU2_CS"][3] == 3
    record(7, ok, f"spreads exact 0: {spreads_zero}; SU2_CS C={out['SU2_CS'][3]} B={out['SU2_CS'][4]}; "
                  f"FLAT_TORUS_3 C={out['FLAT_TORUS_3'][3]} B={out['FLAT_TORUS_3'][4]}")


def test_criterion_8_chart_convergence():
    r = {h: evaluate_identity("FIRST_BIANCHI_T", chart_conformal(h).geometry).max_residual
         for h in (1e-3, 5e-4)}
    ratio = r[1e-3] / r[5e-4]
    record(8, ratio >= 12, f"residual {r[1e-3]:.3e} -> {r[5e-4]:.3e}, ratio {ratio:.1f} (need >= 12)")


def test_criterion_9_determinism():
    cmd = [sys.executable, "-m", "skewbianchi.cli", "check", "--catalog", "all", "--mode", "float", "--seed", "7"]
    runs = [subprocess.run(cmd, capture_output=True) for _ in range(2)]
    same = runs[0].stdout == runs[1].stdout and runs[0].returncode == runs[1].returncode == 0
    doc = json.loads(runs[0].stdout)
    record(9, same and doc["config"]["seed"] == 7,
           f"two runs byte-identical={same}, {len(runs[0].stdout)} bytes, status {doc['status']}")


def test_criterion_10_mutation_sensitivity(monkeypatch):
    monkeypatch.setattr(identities, "MUTATIONS", {"gen-sigma-sign"})
    caught = None
    try:
        fuzz_algebraic(SEED, COUNT, DIMS, identities=CRITERION_IDS, classify=False)
    except FuzzFailure as exc:
        caught = exc.counterexample
    ok = caught is not None and caught["identity"] == "GEN" and Fraction(caught["residual"]) != 0
    detail = (f"GEN residual {caught['residual']} on fuzz instance {caught['instance']} ({caught['family']})"
              if caught else "mutation not detected")
    record(10, ok, detail)
