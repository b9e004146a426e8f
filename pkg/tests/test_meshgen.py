import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tricert.complex import GeometricComplex
from tricert.errors import BadRecipe, VerticesOffManifold
from tricert.manifolds import BiSphere, Circle2D, GlobalReach, LocalLfs, SphereShell, Torus3D
from tricert.meshgen import (FlipOrientation, Icosphere, MeshRecipe, PolyCircle, RogueVertex, Sliver,
                             TorusGrid, apply_mutation, generate, make_recipe, mesh_constants,
                             parse_mutation, parse_recipe)
from tricert.simplex import batch_signed_volume

S2 = SphereShell(2, 3, 1.0)
ICO_EDGE = 4 / np.sqrt(10 + 2 * np.sqrt(5))


def ico(level, M=S2):
    return generate(MeshRecipe(M, Icosphere(level)))


def outward_positive(A):
    """Every oriented triangle has its normal pointing away from the origin."""
    P = A.simplex_points()
    par = A.orientation()
    T = np.where(par[:, None, None] == 1, P[:, [0, 2, 1]], P)
    n = np.cross(T[:, 1] - T[:, 0], T[:, 2] - T[:, 0])
    return np.einsum("ij,ij->i", n, T.mean(axis=1))


def test_icosphere_level0():
    A = ico(0)
    assert (A.n_vertices, A.n_top) == (12, 20)
    c = mesh_constants(A, S2)
    assert c.eps0 == pytest.approx(ICO_EDGE, rel=1e-12) and ICO_EDGE == pytest.approx(1.0515, abs=1e-4)
    assert c.t0 == pytest.approx(np.sqrt(3) / 4, rel=1e-12)
    assert c.mu0 == pytest.approx(1.0)


@pytest.mark.parametrize("k", range(6))
def test_icosphere_counts_and_closure(k):
    A = ico(k)
    assert A.n_vertices == 10 * 4 ** k + 2 and A.n_top == 20 * 4 ** k
    assert A.is_manifold_complex().is_closed_manifold
    assert np.abs(np.linalg.norm(A.vertices, axis=1) - 1).max() <= 1e-15
    assert (outward_positive(A) > 0).all()


def test_icosphere_eps_roughly_halves():
    e = [mesh_constants(ico(k), S2).eps0 for k in range(7)]
    r = np.array(e[1:]) / np.array(e[:-1])
    assert ((r > 0.45) & (r < 0.62)).all()


def test_torusgrid_16x8():
    T = Torus3D(2, 1)
    A = generate(MeshRecipe(T, TorusGrid(16, 8)))
    assert (A.n_vertices, A.n_top) == (128, 256)
    r = A.is_manifold_complex()
    assert r.is_closed_manifold
    n_edges = len(A.faces(1))
    assert A.n_vertices - n_edges + A.n_top == 0          # Euler characteristic of the torus
    assert T.on_manifold(A.vertices).all()
    assert A.orientation() is not None


@pytest.mark.parametrize("opts", [":conformal", ":stagger", ":conformal:stagger"])
def test_torusgrid_variants_are_closed_tori(opts):
    T = Torus3D(3, 1)
    A = generate(MeshRecipe(T, parse_recipe("torusgrid:40x14" + opts)))
    assert A.is_manifold_complex().is_closed_manifold
    assert A.n_vertices - len(A.faces(1)) + A.n_top == 0
    assert T.on_manifold(A.vertices).all()


def test_polycircle():
    A = generate(MeshRecipe(Circle2D(1), PolyCircle(6)))
    c = mesh_constants(A, Circle2D(1))
    assert A.n_vertices == 6 and c.L_max == pytest.approx(1) and c.t0 == pytest.approx(1, abs=1e-12)
    for n in (3, 17, 200):
        c = mesh_constants(generate(MeshRecipe(Circle2D(1), PolyCircle(n))), Circle2D(1))
        assert c.eps0 == pytest.approx(2 * np.sin(np.pi / n), rel=1e-12) and c.t0 == pytest.approx(1, abs=1e-12)


def test_bisphere_icosphere_has_two_components():
    B = BiSphere(1.0, 2.0)
    A = ico(1, B)
    assert A.n_vertices == 84 and np.bincount(B.component_labels(A.vertices)).tolist() == [42, 42]


def test_parse_recipe_and_mutations():
    assert parse_recipe("icosphere:3") == Icosphere(3)
    assert parse_recipe("torusgrid:32x16:conformal:stagger") == TorusGrid(32, 16, "conformal", "stagger")
    assert parse_recipe("polycircle:8") == PolyCircle(8)
    for bad in ("icosphere", "icosphere:x", "torusgrid:32", "torusgrid:3x3:wobbly", "cube:3"):
        with pytest.raises(BadRecipe):
            parse_recipe(bad)
    assert parse_mutation("sliver:3:0.5") == Sliver(3, 0.5)
    assert parse_mutation("flip:4") == FlipOrientation(4)
    assert parse_mutation("rogue:1:7") == RogueVertex(1, 7)
    with pytest.raises(BadRecipe):
        parse_mutation("sliver:3")
    with pytest.raises(BadRecipe):
        make_recipe("sphere:2,3", "icosphere:1")
    with pytest.raises(BadRecipe):
        generate(make_recipe("torus:2,1", "icosphere:1"))


def test_mutations_keep_vertices_on_manifold():
    A = ico(3)
    for mut in (Sliver(10, 0.9), FlipOrientation(10), RogueVertex(5)):
        B = apply_mutation(A, S2, mut)
        assert S2.on_manifold(B.vertices).all()
    B = apply_mutation(A, S2, RogueVertex(5))
    assert B.n_vertices == A.n_vertices + 1 and B.n_top == A.n_top + 2
    with pytest.raises(BadRecipe):
        apply_mutation(A, S2, Sliver(10, 1.5))
    with pytest.raises(BadRecipe):
        apply_mutation(A, S2, FlipOrientation(10 ** 6))


def test_sliver_thins_and_flip_reverses():
    A = ico(3)
    base = mesh_constants(A, S2).t0
    B = apply_mutation(A, S2, Sliver(100, 0.95))
    assert mesh_constants(B, S2).t0 < 0.2 * base
    C = apply_mutation(A, S2, FlipOrientation(100))
    assert (outward_positive_raw(C) < 0).any()


def outward_positive_raw(A):
    P = A.simplex_points()
    par = ico(3).orientation()
    T = np.where(par[:, None, None] == 1, P[:, [0, 2, 1]], P)
    n = np.cross(T[:, 1] - T[:, 0], T[:, 2] - T[:, 0])
    return np.einsum("ij,ij->i", n, T.mean(axis=1))


def test_off_manifold_vertices_are_rejected():
    A = ico(2)
    with pytest.raises(VerticesOffManifold):
        mesh_constants(A.copy_with_vertices(A.vertices * 1.01), S2)


def test_lfs_constants_on_fat_torus():
    T = Torus3D(1.5, 1)
    A = generate(MeshRecipe(T, TorusGrid(60, 60)))
    g, l = mesh_constants(A, T, GlobalReach()), mesh_constants(A, T, LocalLfs())
    assert g.eps0 == pytest.approx(g.L_max / 0.5)
    assert l.eps0 < g.eps0                   # lfs exceeds the reach away from the inner equator


@given(st.integers(0, 3), st.floats(0.1, 10.0))
def test_constants_scale_with_radius(k, radius):
    M = SphereShell(2, 3, radius)
    c1, cr = mesh_constants(ico(k), S2), mesh_constants(ico(k, M), M)
    assert cr.eps0 == pytest.approx(c1.eps0, rel=1e-9) and cr.t0 == pytest.approx(c1.t0, rel=1e-9)
    assert cr.L_max == pytest.approx(radius * c1.L_max, rel=1e-9)
