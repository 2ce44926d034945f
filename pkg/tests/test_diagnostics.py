"""Diagnostics records, CSV schema, verdicts, and the inequality suite."""

import csv
import json

import numpy as np
import pytest

from relbgk import diagnostics as dg
from relbgk import phase_space as ps
from relbgk import relaxation as rx
from relbgk import solver as sv
from relbgk import specfun


def juttner(n, beta, u, grid):
    return rx.juttner_eval(rx.JuttnerParams(n, beta, np.asarray(u, float)),
                           grid)


def test_totals_closed_form(fine_grid):
    # homogeneous Juttner: mass = n u0 * length, energy from T^00
    n, beta = 1.0, 2.0
    u = np.array([0.3, 0.0, 0.0])
    u0 = float(np.sqrt(1.0 + u @ u))
    sp = ps.SpatialGrid("slab", 2.0, 4)
    vals = np.repeat(juttner(n, beta, u, fine_grid)[None], 4, axis=0)
    d = ps.Distribution(vals, fine_grid, sp)
    mass, mom, energy, entropy = dg.totals(d)
    assert mass == pytest.approx(2.0 * n * u0, rel=1e-6)
    e = n * specfun.psi(beta)
    p = n / beta
    # T^00 = (e+p) u0^2 - p
    assert energy == pytest.approx(2.0 * ((e + p) * u0**2 - p), rel=1e-5)
    assert mom[0] == pytest.approx(2.0 * (e + p) * u0 * u[0], rel=1e-5)


def test_csv_schema_and_determinism(tmp_path, small_grid):
    sp = ps.SpatialGrid()
    f0 = juttner(1.0, 2.0, [0.1, 0, 0], small_grid)[None]
    d = ps.Distribution(f0, small_grid, sp)
    cfg = sv.SolverConfig(dt=0.1, t_end=0.3)
    _, records, _ = sv.run(d, cfg)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    dg.write_csv(p1, records)
    _, records2, _ = sv.run(ps.Distribution(f0.copy(), small_grid, sp), cfg)
    dg.write_csv(p2, records2)
    assert p1.read_bytes() == p2.read_bytes()
    with open(p1) as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == dg.CSV_COLUMNS
    assert len(rows) == len(records) + 1


def test_h_theorem_verdict_flags_violation():
    class R:
        def __init__(self, h):
            self.entropy = h

    good = [R(0.0), R(-0.5), R(-0.7)]
    ok, idx = dg.h_theorem_verdict(good, slack=1e-12)
    assert ok and idx is None
    bad = [R(0.0), R(-0.5), R(-0.4999)]
    ok, idx = dg.h_theorem_verdict(bad, slack=1e-12)
    assert not ok and idx == 2
    # a rise below slack is tolerated
    ok, _ = dg.h_theorem_verdict(bad, slack=1e-3)
    assert ok


def test_lemma_suite_reports(tmp_path):
    grid = ps.build_grid("gauss-legendre-tensor", 8.0, 24, force=True)
    params = rx.TruncationParams(2.0)
    reports = dg.lemma_suite(trials=5, seed=11, params=params, grid=grid)
    assert [r.lemma for r in reports] == [
        "lipmoments", "lm:stab", "lm:", "lcomp", "l:5", "entropymin",
        "scalaruq", "Jtrick", "Huanho"]
    for r in reports:
        assert r.trials == 5 and r.seed == 11
        assert np.isfinite(r.worst_margin)
    path = tmp_path / "lemmas.json"
    dg.write_lemma_reports(path, reports)
    back = json.loads(path.read_text())
    assert back[0]["lemma"] == "lipmoments"


def test_lemma_suite_deterministic():
    grid = ps.build_grid("gauss-legendre-tensor", 8.0, 20, force=True)
    params = rx.TruncationParams(2.0)
    a = dg.lemma_suite(trials=3, seed=4, params=params, grid=grid)
    b = dg.lemma_suite(trials=3, seed=4, params=params, grid=grid)
    assert [r.worst_margin for r in a] == [r.worst_margin for r in b]


def test_sweep_csv_roundtrip(tmp_path):
    rows = [
        {"beta_sup": 2.0, "cauchy_l1": 0.1, "jtilde_vs_j": 0.2,
         "mass_defect": 1e-4, "energy_defect": 2e-4,
         "entropy_bound_cb": specfun.entropy_bound_cb(2.0)},
    ]
    path = tmp_path / "sweep.csv"
    dg.write_sweep_csv(path, rows)
    with open(path) as fh:
        got = list(csv.DictReader(fh))
    assert tuple(got[0]) == dg.SWEEP_COLUMNS
    assert float(got[0]["beta_sup"]) == 2.0
