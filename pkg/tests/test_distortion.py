from fractions import Fraction
from itertools import combinations

from math import prod

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tricert.distortion import (BoundKind, DistortionBound, SampledMap, compose_distortion,
                                distortion_from_spectrum_bound, invert_distortion, measure_distortion,
                                spectrum_from_distortion, strong_displacement_check)
from tricert.errors import (DegenerateDomain, SpectrumBoundViolated, StepTooSmall, VertexNotFixed,
                            XiNotLessThanOne)
from tricert.simplex import EuclideanSimplex

TRI = EuclideanSimplex([[0, 0], [1, 0], [0, 1]])


def lin(Amat, domain=TRI):
    Amat = np.asarray(Amat, float)
    return SampledMap(domain, lambda X: X @ Amat.T)


def subset_sum(xis):
    return sum(prod(xis[i] for i in W) for k in range(1, len(xis) + 1)
               for W in combinations(range(len(xis)), k))


def test_measure_examples():
    assert measure_distortion(lin(np.eye(2)), 500).xi == pytest.approx(0, abs=1e-15)
    d = measure_distortion(lin(1.1 * np.eye(2)), 500)
    assert d.xi == pytest.approx(0.1, abs=1e-12) and d.kind == BoundKind.EmpiricalLower
    c, s = np.cos(0.7), np.sin(0.7)
    assert measure_distortion(lin([[c, -s], [s, c]]), 500).xi == pytest.approx(0, abs=1e-12)
    with pytest.raises(DegenerateDomain):
        measure_distortion(SampledMap(np.zeros((3, 2)), lambda X: X), 10)


def test_measure_is_deterministic_and_monotone():
    f = SampledMap(TRI, lambda X: X + 0.1 * np.sin(3 * X))
    vals = [measure_distortion(f, n, seed=4).xi for n in (1, 100, 1024, 1500, 5000)]
    assert vals == sorted(vals)
    assert measure_distortion(f, 1500, seed=4).xi == vals[3]


def test_compose_and_invert_exact():
    assert compose_distortion((0.1, 0.2)) == 0.32
    assert compose_distortion((0,)) == 0
    assert compose_distortion((0.1, 0.1, 0.1)) == pytest.approx(0.331, abs=1e-15)
    assert compose_distortion(()) == 0
    assert invert_distortion(0) == 0
    assert invert_distortion(0.2) == 0.25
    assert invert_distortion(0.5) == 1.0
    with pytest.raises(XiNotLessThanOne):
        invert_distortion(1.0)
    with pytest.raises(ValueError):
        compose_distortion((-0.1,))


@given(st.lists(st.floats(0, 2), min_size=1, max_size=6))
def test_compose_equals_subset_sum(xis):
    """Exact equality with the nonempty subset-product sum evaluated in rationals."""
    exact = subset_sum([Fraction(x) for x in xis])
    assert compose_distortion(xis) == float(exact)
    assert compose_distortion(xis) == pytest.approx(subset_sum(xis), rel=1e-12, abs=1e-15)


def test_certified_kind_requires_analytic_route():
    assert not DistortionBound(0.1, BoundKind.EmpiricalLower).certified
    with pytest.raises(ValueError):
        DistortionBound(-1, BoundKind.CertifiedUpper)


def test_spectrum_examples():
    x = np.array([0.2, 0.3])
    assert np.allclose(spectrum_from_distortion(lin(1.1 * np.eye(2)), x).singular_values, 1.1, atol=1e-9)
    c, s = np.cos(1.0), np.sin(1.0)
    assert np.allclose(spectrum_from_distortion(lin([[c, -s], [s, c]]), x).singular_values, 1, atol=1e-9)
    assert np.allclose(spectrum_from_distortion(lin(np.diag([1.2, 0.9])), x).singular_values, [1.2, 0.9], atol=1e-9)
    with pytest.raises(StepTooSmall):
        spectrum_from_distortion(lin(np.eye(2)), x, h=1e-14)


def test_spectrum_bound_route():
    b = distortion_from_spectrum_bound(lin(np.diag([1.1, 0.9])), None, 0.1)
    assert b.certified and b.conditional and b.xi == 0.1
    assert distortion_from_spectrum_bound(lin(np.eye(2)), None, 0.0).xi == 0
    with pytest.raises(SpectrumBoundViolated):
        distortion_from_spectrum_bound(lin(np.diag([1.2, 1.0])), None, 0.1)


def test_smooth_perturbation_two_estimators_agree():
    f = SampledMap(TRI, lambda X: X + 0.05 * np.sin(np.pi * X))
    # |d/dx 0.05 sin(pi x)| <= 0.05 pi ~ 0.157
    b = distortion_from_spectrum_bound(f, None, 0.16, grid=300)
    assert b.certified
    assert measure_distortion(f, 20_000).xi <= b.xi + 1e-12


def test_strong_displacement_examples():
    assert strong_displacement_check(lin(np.eye(2)), TRI, 0, 0.0)
    p = TRI.vertices[1]
    xi = 0.05
    f = SampledMap(TRI, lambda X: p + (1 + xi) * (X - p))
    assert strong_displacement_check(f, TRI, 1, xi)
    assert not strong_displacement_check(f, TRI, 1, 0.04)
    bump = SampledMap(TRI, lambda X: X + 0.3 * X[:, :1] * X[:, 1:2] * np.array([1.0, 0.0]))
    assert not strong_displacement_check(bump, TRI, 0, 0.01)
    with pytest.raises(VertexNotFixed):
        strong_displacement_check(SampledMap(TRI, lambda X: X + 1), TRI, 0, 0.1)


@given(st.integers(0, 10**6), st.floats(0.01, 0.6))
def test_inverse_distortion_bracket(seed, xi):
    """A linear xi-distortion map has an inverse whose sampled distortion stays within xi/(1-xi)."""
    rng = np.random.default_rng(seed)
    U = np.linalg.qr(rng.standard_normal((2, 2)))[0]
    W = np.linalg.qr(rng.standard_normal((2, 2)))[0]
    s = rng.uniform(1 - xi, 1 + xi, 2)
    s[rng.integers(0, 2)] = 1 + xi * rng.choice([-1, 1])
    A = U @ np.diag(s) @ W.T
    fwd = measure_distortion(lin(A), 400, seed=seed).xi
    assert fwd <= xi + 1e-12
    image = (np.eye(2) @ TRI.vertices.T).T @ A.T
    inv = measure_distortion(lin(np.linalg.inv(A), EuclideanSimplex(image)), 400, seed=seed).xi
    assert inv <= invert_distortion(xi) + 1e-9


@given(st.integers(0, 10**6))
def test_linear_spectrum_deviation_below_pairwise(seed):
    rng = np.random.default_rng(seed)
    A = np.eye(3) + 0.2 * rng.standard_normal((3, 3))
    dom = EuclideanSimplex(rng.standard_normal((4, 3)))
    f = lin(A, dom)
    dev = np.abs(np.linalg.svd(A, compute_uv=False) - 1).max()
    sv = spectrum_from_distortion(f, dom.barycentre()).singular_values
    assert np.abs(sv - 1).max() == pytest.approx(dev, abs=1e-8)
    # for a linear map the pairwise supremum equals the spectral deviation
    assert measure_distortion(f, 4000, seed=seed).xi <= dev + 1e-12
