from functools import lru_cache

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tricert.atlas import (AGGREGATE_CEILING, analyse_stars, build_chart, certified_chart_distortion,
                           chart_distortion_arrays, evaluate_Fp, vertex_sanity_check)
from tricert.complex import GeometricComplex
from tricert.errors import PreconditionViolated, ProjectedStarNotEmbedded, StarNotFull
from tricert.manifolds import GlobalReach, LocalLfs, SphereShell, Torus3D
from tricert.meshgen import FlipOrientation, Icosphere, MeshRecipe, RogueVertex, TorusGrid, apply_mutation, generate
from tricert.simplex import EuclideanSimplex, sample_barycentric, trilateration_displacement_bound

S2 = SphereShell(2, 3, 1.0)


@lru_cache(maxsize=None)
def ico(k):
    return generate(MeshRecipe(S2, Icosphere(k)))


def test_chart_at_north_pole():
    A = ico(3)
    p = int(np.argmax(A.vertices[:, 2] + 1e-9 * A.vertices[:, 0]))
    ch = build_chart(S2, A, p)
    assert len(ch.star_tops) in (5, 6) and ch.star_vertices[0] == p
    assert np.allclose(ch.p_hat, 0)
    assert ch.projected_star.is_full_star(0)


def test_flipped_star_and_boundary_star():
    A = ico(2)
    B = apply_mutation(A, S2, FlipOrientation(7))
    moved = int(np.flatnonzero(np.any(A.vertices != B.vertices, axis=1))[0])
    hit = [p for p in np.unique(B.simplices[B.tops_of_vertex(moved)]) if p != moved]
    with pytest.raises(ProjectedStarNotEmbedded):
        for p in hit:
            build_chart(S2, B, int(p))
    T = GeometricComplex(S2.project(np.array([[1, 0.1, 0], [1, 0, 0.1], [1, -0.1, -0.1]])), [[0, 1, 2]])
    with pytest.raises(StarNotFull):
        build_chart(S2, T, 0)


def test_Fp_fixes_vertices_and_trilateration():
    A = ico(7)
    ch = build_chart(S2, A, 17)
    V = ch.projected_star.vertices
    assert np.abs(evaluate_Fp(ch, S2, V) - V).max() <= 1e-13
    d = certified_chart_distortion(ch)
    for t in range(ch.projected_star.n_top):
        P = V[ch.projected_star.simplices[t]]
        b = P.mean(axis=0)
        disp = np.linalg.norm(evaluate_Fp(ch, S2, b) - b)
        assert disp <= trilateration_displacement_bound(EuclideanSimplex(P), d.xi_total.xi)


def test_certified_distortion_formulas():
    ch = build_chart(S2, ico(4), 0)
    t0 = 0.5
    d = certified_chart_distortion(ch, L0=t0 / 32, t0=t0, R_rch=1.0)
    assert d.q == pytest.approx(1 / 1024, rel=1e-14)
    assert d.xi_H.xi == pytest.approx(12 / 1024, rel=1e-14)
    assert d.xi_total.certified
    total = (1 + d.xi_phi_inv_hat.xi) * (1 + d.xi_H.xi) * (1 + d.xi_phi.xi) - 1
    assert d.xi_total.xi == pytest.approx(total, rel=1e-14)
    assert d.ceiling_19q == pytest.approx(AGGREGATE_CEILING / 1024)
    # q exactly 1/256 is admissible and the inverse term becomes (256/255) q
    d = certified_chart_distortion(ch, L0=1 / 32, t0=0.5, R_rch=1.0)
    assert d.q == 1 / 256
    assert d.xi_phi_inv_hat.xi == pytest.approx(256 / 255 / 256, rel=1e-14)
    with pytest.raises(PreconditionViolated) as e:
        certified_chart_distortion(ch, L0=0.1, t0=0.5, R_rch=1.0)
    assert e.value.inequality.startswith("q")
    z = certified_chart_distortion(ch, L0=0.0, t0=0.5, R_rch=1.0)
    assert z.xi_total.xi == 0


def test_chart_distortion_vanishes_in_the_limit():
    d = chart_distortion_arrays(np.array([1e-3, 1e-6, 1e-9]), 0.4, 1.0)
    assert (np.diff(d["xi_total"]) < 0).all() and d["xi_total"][-1] < 1e-10


def test_local_lfs_chart_radius_cap():
    T = Torus3D(1.5, 1)
    A = generate(MeshRecipe(T, TorusGrid(300, 300)))
    p = int(np.argmin(np.hypot(A.vertices[:, 0], A.vertices[:, 1])))     # on the inner equator
    ch = build_chart(T, A, p, LocalLfs())
    lfs = T.lfs(A.vertices[p][None])[0]
    assert lfs == pytest.approx(0.5) and ch.R_rch == pytest.approx((1 - 9 / 137) * 0.5)
    d = certified_chart_distortion(ch, T, L0=1e-3, t0=0.4, policy=LocalLfs())
    assert d.rho * ch.R_rch <= LocalLfs().eps * lfs
    with pytest.raises(PreconditionViolated):
        certified_chart_distortion(ch, T, policy=LocalLfs())          # this mesh is too coarse here


@given(st.floats(1e-6, 1.0), st.floats(0.01, 1.0), st.floats(0.1, 10.0))
def test_radius_cap_is_implied_by_the_q_ceiling(frac, t0, lfs):
    """With R = (1 - 9/137) lfs, q <= 1/256 already forces rho R <= (9/137) lfs."""
    eps = LocalLfs().eps
    R = (1 - eps) * lfs
    L0 = frac * t0 * R / 16                    # q = frac^2 / 256
    d = chart_distortion_arrays(L0, t0, R)
    assert d["q"] <= 1 / 256 * (1 + 1e-12)
    assert d["rho"] * R <= eps * lfs


def test_vertex_sanity_examples():
    A = ico(4)
    assert vertex_sanity_check(S2, A).passed
    B = apply_mutation(A, S2, RogueVertex(target=100))
    rep = vertex_sanity_check(S2, B)
    assert not rep.passed
    rogue = B.n_vertices - 1
    assert any(q == rogue for _, q in rep.violations)
    # neighbours always lie in the star and are never reported
    adj = {tuple(sorted(e)) for e in B.faces(1).tolist()}
    assert not any(tuple(sorted(v)) in adj for v in rep.violations)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_batch_and_single_chart_paths_agree(k):
    A = ico(k)
    batch = analyse_stars(S2, A)
    assert batch.embedded.all()
    rng = np.random.default_rng(k)
    for p in rng.choice(A.n_vertices, 12, replace=False):
        ch = build_chart(S2, A, int(p))
        assert batch.L0[p] == pytest.approx(ch.L0, rel=1e-12)
        assert batch.t0[p] == pytest.approx(ch.t0, rel=1e-12)
        assert batch.R_star[p] == pytest.approx(np.linalg.norm(ch.projected_star.vertices, axis=1).max(), rel=1e-12)


def test_batch_detects_flipped_star():
    A = ico(3)
    B = apply_mutation(A, S2, FlipOrientation(40))
    batch = analyse_stars(S2, B)
    bad = np.flatnonzero(~batch.embedded)
    assert bad.size
    for p in bad[:3]:
        with pytest.raises(ProjectedStarNotEmbedded):
            build_chart(S2, B, int(p))


@given(st.integers(0, 10**6))
def test_Fp_sampled_distortion_below_certified(seed):
    A = ico(7)
    rng = np.random.default_rng(seed)
    p = int(rng.integers(A.n_vertices))
    ch = build_chart(S2, A, p)
    xi = certified_chart_distortion(ch).xi_total.xi
    t = rng.integers(0, ch.projected_star.n_top, 400)
    X = np.einsum("nk,nkd->nd", sample_barycentric(rng, 400, 2), ch.projected_star.simplex_points(t))
    F = evaluate_Fp(ch, S2, X)
    i, j = rng.integers(0, 400, (2, 2000))
    dx = np.linalg.norm(X[i] - X[j], axis=1)
    df = np.linalg.norm(F[i] - F[j], axis=1)
    ok = dx > 1e-12
    assert (np.abs(df[ok] - dx[ok]) <= xi * dx[ok] + 1e-15).all()
