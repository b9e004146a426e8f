"""Acceptance criteria 1-9 at their stated tolerances.

Each test carries a ``criterion`` marker; the terminal summary prints one
PASS/FAIL line per criterion with the measured values. The torus meshes
with millions of vertices are certified in a child process (see
``acceptance_torus.py``) and run first, while this process is still small.
"""
import json
import subprocess
import sys
import time
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fixtures import angle_doubling_map, brute_signed_preimages, identity_map
from tricert.atlas import analyse_stars
from tricert.certifier import Verdict, certify_submanifold, quality_criterion
from tricert.degree import degree_at_point, locally_constant_degree_scan
from tricert.distortion import compose_distortion, invert_distortion
from tricert.manifolds import Circle2D, SphereShell, Torus3D, dist_to_tangent_bounds_check
from tricert.meshgen import (FlipOrientation, Icosphere, MeshRecipe, PolyCircle, RogueVertex, Sliver,
                             TorusGrid, apply_mutation, generate)
from tricert.probe import injectivity_probe, keystone_check, surjectivity_probe
from tricert.simplex import batch_min_face_thickness, batch_quality

S2 = SphereShell(2, 3, 1.0)
ICO_EDGE = 4 / np.sqrt(10 + 2 * np.sqrt(5))          # edge of the inscribed icosahedron
HELPER = Path(__file__).with_name("acceptance_torus.py")

FINE_TORUS = (3.0, 1.0, "torusgrid:3538x1416:conformal:stagger")
FAT_TORUS = (1.5, 1.0, "torusgrid:2529x2530:conformal:stagger")
COARSE_TORUS = TorusGrid(1000, 400, "conformal", "stagger")


def crit(n, title):
    return pytest.mark.criterion(n, title)


def run_torus(R, r, recipe, *extra):
    proc = subprocess.run([sys.executable, str(HELPER), str(R), str(r), recipe, *extra],
                          capture_output=True, text=True, timeout=1800)
    assert proc.returncode == 0, proc.stderr[-2000:]
    return json.loads(proc.stdout.strip().splitlines()[-1])


@pytest.fixture(scope="module")
def fine_torus():
    return run_torus(*FINE_TORUS, "--probes", "100000", "10000")


@pytest.fixture(scope="module")
def fat_torus():
    return run_torus(*FAT_TORUS)


def by_prefix(rep: dict, prefix: str) -> dict:
    return next(c for c in rep["criteria"] + rep["consequences"] if c["name"].startswith(prefix))


def consequences_hold(rep: dict) -> bool:
    return len(rep["consequences"]) == 2 and all(c["holds"] for c in rep["consequences"])


# ---------------------------------------------------------------------------
# torus: local lfs constants versus the global reach (heavy, runs first)


@crit(9, "torus multi-chart: Lfs and Reach verdicts on refined TorusGrid meshes")
def test_torus_lfs_varies_by_position(record):
    T = Torus3D(1.5, 1.0)
    outer, inner = np.array([[2.5, 0, 0]]), np.array([[0.5, 0, 0]])
    assert T.lfs(outer)[0] == pytest.approx(1.0) and T.lfs(inner)[0] == pytest.approx(0.5)
    assert T.reach == pytest.approx(0.5)
    record("torus(1.5,1): lfs 1.0 on the outer equator, 0.5 on the inner equator, reach 0.5")


@crit(9, "torus multi-chart: Lfs and Reach verdicts on refined TorusGrid meshes")
def test_torus_verdicts_agree_when_fine(fine_torus, record):
    lfs, reach = fine_torus["lfs"], fine_torus["reach"]
    record(f"torus(3,1) {FINE_TORUS[2]} ({fine_torus['n_vertices']} vertices): lfs {lfs['verdict']}, "
           f"reach {reach['verdict']}, (b) eps0 {by_prefix(reach, '(b)')['lhs']:.6g} <= "
           f"lfs {by_prefix(lfs, '(b)')['rhs']:.6g} / reach {by_prefix(reach, '(b)')['rhs']:.6g}, "
           f"{fine_torus['seconds']:.0f} s, {fine_torus['max_rss_mb']:.0f} MB")
    assert lfs["verdict"] == reach["verdict"] == "Certified"
    assert consequences_hold(lfs) and consequences_hold(reach)


@crit(9, "torus multi-chart: Lfs and Reach verdicts on refined TorusGrid meshes")
def test_torus_verdicts_agree_when_coarse(record):
    T = Torus3D(3.0, 1.0)
    A = generate(MeshRecipe(T, COARSE_TORUS))
    batch = analyse_stars(T, A)
    reps = {mode: certify_submanifold(T, A, mode, batch=batch) for mode in ("lfs", "reach")}
    record(f"torus(3,1) 1000x400 ({A.n_vertices} vertices): lfs {reps['lfs'].verdict.value}, "
           f"reach {reps['reach'].verdict.value}")
    for rep in reps.values():
        assert rep.verdict == Verdict.Refuted
        assert [c.name[:3] for c in rep.failed] == ["(b)"]


@crit(9, "torus multi-chart: Lfs and Reach verdicts on refined TorusGrid meshes")
def test_torus_local_path_certifies_before_global(fat_torus, record):
    lfs, reach = fat_torus["lfs"], fat_torus["reach"]
    b_l, b_r = by_prefix(lfs, "(b)"), by_prefix(reach, "(b)")
    record(f"torus(1.5,1) {FAT_TORUS[2]} ({fat_torus['n_vertices']} vertices): lfs {lfs['verdict']} "
           f"({b_l['lhs']:.6g} <= {b_l['rhs']:.6g}), reach {reach['verdict']} "
           f"({b_r['lhs']:.6g} > {b_r['rhs']:.6g}), {fat_torus['seconds']:.0f} s, "
           f"{fat_torus['max_rss_mb']:.0f} MB")
    assert lfs["verdict"] == "Certified" and consequences_hold(lfs)
    assert reach["verdict"] == "Refuted" and not b_r["holds"]
    assert all(c["holds"] for c in reach["criteria"] if not c["name"].startswith("(b)"))


@crit(8, "homeomorphism probes on Certified meshes")
def test_probes_on_certified_torus(fine_torus, record):
    inj, sur = fine_torus["injectivity"], fine_torus["surjectivity"]
    record(f"torus(3,1) fine: injectivity {inj['pairs']} pairs, {inj['collisions']} collisions, "
           f"min |dH|/|dx| {inj['min_image_over_domain']:.4f}; surjectivity {sur['points']} points, "
           f"{sur['failures']} misses, max residual {sur['max_residual']:.2e}")
    assert fine_torus["reach"]["verdict"] == "Certified"
    assert inj["passed"] and inj["pairs"] >= 10**5 and inj["collisions"] == 0
    assert sur["passed"] and sur["points"] >= 10**4 and sur["max_residual"] <= 1e-7


# ---------------------------------------------------------------------------
# 1. lemma sweeps


SWEEP_COVERAGE = ["trilateration", "inverse-composition", "differential-spectrum", "chord-tangent",
                  "tangent-variation", "whitney-angle", "simplex-proximity", "simplex-tangent-angle",
                  "chart-projection", "simplex-projection", "projection-lipschitz",
                  "simplex-closest-point", "almost-identity"]


@crit(1, "lemma sweeps: zero violations over >= 1e4 cases each, under 60 s")
def test_lemma_sweeps(record):
    t = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "tricert", "lemma-check", "--lemma", "all", "-n", "10000",
                           "--json"], capture_output=True, text=True, timeout=600)
    wall = time.perf_counter() - t
    results = json.loads(proc.stdout)
    names = [r["name"] for r in results]
    worst = min(results, key=lambda r: r["worst_slack"])
    record(f"{sum(r['passed'] for r in results)}/{len(results)} sweeps pass, "
           f"{sum(r['cases'] for r in results)} cases, {wall:.1f} s wall; smallest slack "
           f"{worst['worst_slack']:.3g} ({worst['name']}), largest lhs/rhs "
           f"{max(r['worst_ratio'] for r in results):.6g}")
    assert proc.returncode == 0
    assert wall < 60
    assert set(SWEEP_COVERAGE) <= set(names)
    for r in results:
        assert r["passed"] and r["violations"] == 0 and r["cases"] >= 10**4, r["name"]
        for label, per in r["per_manifold"].items():
            assert per["cases"] >= 10**4 and per["violations"] == 0, (r["name"], label)
        if r["per_manifold"]:
            assert set(r["per_manifold"]) == {"sphere(1)", "torus(2,1)", "circle(1)"}


# ---------------------------------------------------------------------------
# 2. tightness of the chord-tangent bound on the unit sphere


@crit(2, "chord-tangent bound is an equality on the unit sphere (1e3 pairs, 1e-9)")
def test_sphere_chord_tangent_equality(record):
    rng = np.random.default_rng(2)
    X = S2.sample(rng, 1000)
    far = S2.sample(rng, 500)
    # half the partners are independent, half are close to x at scales down to 1e-5
    near = S2.project(X[500:] + 10.0 ** rng.uniform(-5, 0, (500, 1)) * rng.standard_normal((500, 3)))
    Y = np.concatenate([far, near])
    dev_tangent, dev_normal = 0.0, 0.0
    for x, y in zip(X, Y):
        sin_t, bound, _, _ = dist_to_tangent_bounds_check(S2, x, y)
        d = np.linalg.norm(x - y)
        # independent route: the unit normal at x is x itself
        sin_n = abs(np.dot(y - x, x)) / d
        dev_tangent = max(dev_tangent, abs(sin_t - d / 2))
        dev_normal = max(dev_normal, abs(sin_n - d / 2))
        assert bound == pytest.approx(d / 2, abs=1e-15)
    record(f"1000 pairs: max |sin - |x-y|/2| = {dev_tangent:.2e} (tangent basis), "
           f"{dev_normal:.2e} (normal route)")
    assert dev_tangent <= 1e-9 and dev_normal <= 1e-9


# ---------------------------------------------------------------------------
# 3. exact distortion calculus


def subset_sum_oracle(xs) -> float:
    """Sum over nonempty subsets of the product of their entries, exactly, rounded once."""
    fr = [Fraction(x) for x in xs]
    total = Fraction(0)
    for k in range(1, len(fr) + 1):
        for sub in combinations(fr, k):
            p = Fraction(1)
            for v in sub:
                p *= v
            total += p
    return float(total)


@crit(3, "exact distortion calculus")
def test_exact_examples(record):
    c, i = compose_distortion((0.1, 0.2)), invert_distortion(0.2)
    record(f"compose(0.1, 0.2) = {c!r}, invert(0.2) = {i!r}")
    assert c == 0.32 and i == 0.25


@crit(3, "exact distortion calculus")
@given(st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=6))
def test_compose_matches_subset_sum(xs):
    assert compose_distortion(xs) == subset_sum_oracle(xs)


@crit(3, "exact distortion calculus")
@given(st.floats(0, 1, exclude_max=True))
def test_invert_is_exact(xi):
    x = Fraction(xi)
    assert invert_distortion(xi) == float(x / (1 - x))


# ---------------------------------------------------------------------------
# 4. degree oracle


@crit(4, "degree oracle on the identity and angle-doubling fixtures")
def test_degree_values_and_brute_force(record):
    f, g = identity_map(), angle_doubling_map()
    rng = np.random.default_rng(4)
    queries = np.concatenate([rng.uniform(-1.3, 1.3, (300, 2)), [[0.13, 0.07], [3.0, 3.0]]])
    checked = 0
    for h in (f, g):
        for y in queries:
            r = degree_at_point(h, y)
            assert isinstance(r.value, int)
            assert r.value == brute_signed_preimages(h, r.query)[0]
            checked += 1
    assert degree_at_point(f, [0.13, 0.07]).value == 1
    assert degree_at_point(g, [0.13, 0.07]).value == 2
    assert degree_at_point(f, [3.0, 3.0]).value == 0 == degree_at_point(g, [3.0, 3.0]).value
    record(f"identity 1, doubling 2, outside 0; {checked} queries match brute-force enumeration")


@crit(4, "degree oracle on the identity and angle-doubling fixtures")
def test_degree_locally_constant(record):
    rep_f = locally_constant_degree_scan(identity_map())
    rep_g = locally_constant_degree_scan(angle_doubling_map())
    counts_f = sorted(c["counts"][0] for c in rep_f.components)
    counts_g = sorted(c["counts"][0] for c in rep_g.components)
    record(f"component counts: identity {counts_f}, doubling {counts_g}")
    assert rep_f.constant and rep_g.constant
    assert counts_f == [0, 1]
    # the doubled boundary is a self-crossing star: centre twice, nine petals once, outside zero
    assert counts_g == [0] + [1] * 9 + [2]


# ---------------------------------------------------------------------------
# 5. certification threshold along the icosphere family


@lru_cache(maxsize=None)
def icosphere_run(k):
    """(complex, star analysis, Reach report, seconds) for icosphere level k."""
    t = time.perf_counter()
    A = generate(MeshRecipe(S2, Icosphere(k)))
    batch = analyse_stars(S2, A)
    rep = certify_submanifold(S2, A, "reach", batch=batch)
    return A, batch, rep, time.perf_counter() - t


@crit(5, "icosphere family in Reach mode: threshold level k* <= 8, level 0 Refuted on (b)")
def test_icosphere_threshold(record):
    runs = {k: icosphere_run(k) for k in range(9)}
    verdicts = {k: runs[k][2].verdict for k in runs}
    certified = [k for k in runs if verdicts[k] == Verdict.Certified]
    k_star = min(k for k in runs if all(verdicts[j] == Verdict.Certified for j in range(k, 9))) \
        if verdicts[8] == Verdict.Certified else None
    total = sum(r[3] for r in runs.values())
    rep0 = runs[0][2]
    b0 = rep0.criterion("(b)")
    lines = [f"k* = {k_star}; Certified levels {certified}; {total:.1f} s total",
             f"level 0: eps0 {b0.lhs:.4f} > {b0.rhs:.5f} (t0 {rep0.constants['t0']:.4f}), "
             f"failed {[c.name[:3] for c in rep0.failed]}"]
    for k in certified:
        d, s = runs[k][2].consequences
        lines.append(f"level {k}: d_M/(eps0^2 rch) {d.lhs:.4f} <= 2, sin {s.lhs:.5f} <= {s.rhs:.5f}")
    for line in lines:
        record(line)
    assert k_star is not None and k_star <= 8
    assert rep0.verdict == Verdict.Refuted and [c.name[:3] for c in rep0.failed] == ["(b)"]
    assert b0.lhs == pytest.approx(ICO_EDGE, rel=1e-12) == pytest.approx(1.0515, abs=5e-5)
    assert rep0.constants["t0"] == pytest.approx(0.433, abs=5e-4)
    assert b0.rhs == pytest.approx(np.sqrt(rep0.constants["mu0"]) * rep0.constants["t0"] ** 2 / 16)
    for k in certified:
        assert len(runs[k][2].consequences) == 2 and all(c.holds for c in runs[k][2].consequences)
    assert total < 300


# ---------------------------------------------------------------------------
# 6. certified chart bound against measured chart distortion


@crit(6, "keystone: measured chart distortion within the certified bound on every chart")
def test_keystone_circle(record):
    C = Circle2D(1.0)
    A = generate(MeshRecipe(C, PolyCircle(200)))
    assert certify_submanifold(C, A, "reach").verdict == Verdict.Certified
    rep = keystone_check(C, A, pairs_per_simplex=1000)
    record(f"polycircle:200: {rep.n_charts} charts, {rep.pairs_per_simplex} pairs/simplex, "
           f"{len(rep.violations)} violations, worst measured/certified {rep.worst_ratio:.4f}")
    assert rep.passed and rep.n_charts == A.n_vertices and rep.pairs_per_simplex >= 1000
    assert rep.uncertified == 0 and not rep.violations


@crit(6, "keystone: measured chart distortion within the certified bound on every chart")
def test_keystone_icosphere(record):
    A, batch, cert, _ = icosphere_run(8)
    assert cert.verdict == Verdict.Certified
    rep = keystone_check(S2, A, pairs_per_simplex=1000, batch=batch)
    record(f"icosphere:8: {rep.n_charts} charts, {rep.n_corner_simplices} star simplices, "
           f"{rep.pairs_per_simplex} pairs/simplex, {len(rep.violations)} violations, "
           f"worst measured/certified {rep.worst_ratio:.4f}")
    assert rep.passed and rep.n_charts == A.n_vertices and rep.pairs_per_simplex >= 1000
    assert rep.uncertified == 0 and not rep.violations


# ---------------------------------------------------------------------------
# 7. adversarial mutations


def _seeded(seed, n_top, n=50):
    rng = np.random.default_rng(seed)
    return rng, rng.integers(0, n_top, n)


@crit(7, "adversarial mutations caught by the intended criterion (50 each)")
def test_sliver_caught_by_quality(record):
    A, batch, base, _ = icosphere_run(8)
    assert base.criterion("(b)").holds
    rng, tops = _seeded(71, A.n_top)
    caught = 0
    for i, t in enumerate(tops):
        mut = Sliver(int(t), float(rng.uniform(0.5, 0.95)), int(rng.integers(0, 3)))
        B = apply_mutation(A, S2, mut)
        # only the simplices around the moved vertex change shape
        moved = B.tops_of_vertex(int(A.simplices[mut.simplex][mut.corner]))
        top_L, top_t = batch.top_L.copy(), batch.top_t.copy()
        P = B.simplex_points(moved)
        top_L[moved], top_t[moved] = batch_quality(P)[0], batch_min_face_thickness(P)
        c, _ = quality_criterion(S2, B, "reach", top_L=top_L, top_t=top_t)
        if i == 0:
            full, _ = quality_criterion(S2, B, "reach")
            assert (full.lhs, full.rhs) == pytest.approx((c.lhs, c.rhs), rel=1e-12)
            end_to_end = certify_submanifold(S2, B, "reach", check_consequences=False)
            assert not end_to_end.criterion("(b)").holds
        caught += not c.holds
    record(f"sliver (severity 0.5-0.95) on icosphere:8: {caught}/50 fail (b)")
    assert caught == 50


@crit(7, "adversarial mutations caught by the intended criterion (50 each)")
@pytest.mark.parametrize("kind,prefix,seed", [("flip", "(a)", 72), ("rogue", "(c)", 73)])
def test_flip_and_rogue_caught(kind, prefix, seed, record):
    A = icosphere_run(5)[0]
    base = certify_submanifold(S2, A, "reach", check_consequences=False)
    assert base.criterion(prefix).holds
    rng, tops = _seeded(seed, A.n_top)
    caught = 0
    for t in tops:
        mut = FlipOrientation(int(t), int(rng.integers(0, 3))) if kind == "flip" else RogueVertex(int(t))
        rep = certify_submanifold(S2, apply_mutation(A, S2, mut), "reach", check_consequences=False)
        caught += rep.verdict == Verdict.Refuted and not rep.criterion(prefix).holds
    record(f"{kind} on icosphere:5: {caught}/50 fail {prefix}")
    assert caught == 50


# ---------------------------------------------------------------------------
# 8. homeomorphism probes on the sphere


@crit(8, "homeomorphism probes on Certified meshes")
def test_probes_on_certified_sphere(record):
    A, _, cert, _ = icosphere_run(8)
    assert cert.verdict == Verdict.Certified
    inj = injectivity_probe(S2, A, pairs=100_000)
    sur = surjectivity_probe(S2, A, points=10_000)
    record(f"icosphere:8: injectivity {inj.pairs} pairs, {len(inj.collisions)} collisions, "
           f"min |dH|/|dx| {inj.min_image_over_domain:.4f}; surjectivity {sur.points} points, "
           f"{len(sur.failures)} misses, max residual {sur.max_residual:.2e}")
    assert inj.passed and not inj.collisions
    assert sur.passed and sur.max_residual <= 1e-7
