import numpy as np
import pytest

from tricert.complex import GeometricComplex
from tricert.manifolds import Circle2D, SphereShell
from tricert.meshgen import Icosphere, MeshRecipe, PolyCircle, generate
from tricert.probe import injectivity_probe, keystone_check, surjectivity_probe

S2 = SphereShell(2, 3, 1.0)


def test_keystone_on_fine_polygon():
    C = Circle2D(1.0)
    A = generate(MeshRecipe(C, PolyCircle(200)))
    rep = keystone_check(C, A, pairs_per_simplex=1000)
    assert rep.passed and rep.n_charts == 200 and rep.pairs_per_simplex >= 1000
    assert 0 < rep.worst_ratio < 1


def test_keystone_flags_uncertified_charts():
    A = generate(MeshRecipe(S2, Icosphere(3)))          # too coarse for the chart hypotheses
    rep = keystone_check(S2, A, pairs_per_simplex=50)
    assert not rep.passed and rep.uncertified == A.n_vertices


def test_probes_on_icosphere():
    A = generate(MeshRecipe(S2, Icosphere(5)))
    inj = injectivity_probe(S2, A, pairs=20_000)
    assert inj.passed and inj.min_image_over_domain > 0.5
    sur = surjectivity_probe(S2, A, points=2000)
    assert sur.passed and sur.max_residual <= 1e-7


def test_surjectivity_probe_finds_a_hole():
    A = generate(MeshRecipe(S2, Icosphere(2)))
    holed = GeometricComplex(A.vertices, A.simplices[A.simplex_points().mean(axis=1)[:, 2] < 0.9])
    rep = surjectivity_probe(S2, holed, points=3000)
    assert not rep.passed
    assert all(np.array(y)[2] > 0.8 for y in rep.failures)
