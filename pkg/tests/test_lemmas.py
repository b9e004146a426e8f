import numpy as np
import pytest

from tricert import lemmas
from tricert.lemmas import available, format_table, run_all, run_sweep


def test_every_sweep_passes_on_small_budget():
    res = run_all(500, seed=3)
    assert [r.name for r in res] == available()
    for r in res:
        assert r.passed, r.name
        assert r.cases >= 500
    table = format_table(res)
    assert table.count("pass") == len(res)


def test_unknown_sweep():
    with pytest.raises(KeyError, match="available"):
        run_sweep("no-such-lemma")


def test_per_manifold_case_counts():
    r = run_sweep("chord-tangent", 2000, seed=1)
    assert set(r.per_manifold) == {"sphere(1)", "torus(2,1)", "circle(1)"}
    assert all(v["cases"] >= 2000 for v in r.per_manifold.values())


def test_cross_checks_run():
    for name in ("trilateration", "inverse-composition", "chord-tangent", "almost-identity", "degree-preimages"):
        r = run_sweep(name, 300, seed=0)
        assert r.cross_checked > 0 and r.route_mismatches == 0, name


def test_sweep_detects_a_weakened_bound(monkeypatch):
    """Halving the trilateration bound must produce violations: the sweep is not vacuous."""
    real = lemmas.trilateration_displacement_bound
    monkeypatch.setattr(lemmas, "trilateration_displacement_bound", lambda s, xi: 0.01 * real(s, xi))
    r = run_sweep("trilateration", 500, seed=0)
    assert not r.passed


def test_tally_bookkeeping():
    t = lemmas._Tally()
    t.add([0.5, 1.0, 1.0 + 1e-6], [1.0, 1.0, 1.0], "x")
    t.cross_check([1.0, 2.0], [1.0, 2.0 * (1 + 1e-6)])
    r = t.result("demo", "")
    assert r.violations == 1 and r.cases == 3 and r.route_mismatches == 1
    assert r.worst_ratio == pytest.approx(1 + 1e-6) and r.worst_slack == pytest.approx(-1e-6)
