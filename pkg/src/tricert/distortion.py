"""Metric distortion of maps: measuring, composing, inverting, bounding.

A map F is a xi-distortion map when
``| |F(x)-F(y)| - |x-y| | <= xi |x-y|`` for all x, y in its domain.
Sampling can only produce lower bounds on the smallest such xi; certified
upper bounds come from analytic formulas and carry ``kind=CertifiedUpper``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import (DegenerateDomain, SpectrumBoundViolated, StepTooSmall,
                     VertexNotFixed, XiNotLessThanOne)
from .geom import LinearMapSpectrum, svd_spectrum
from .simplex import EuclideanSimplex, quality, sample_barycentric


class BoundKind(str, Enum):
    CertifiedUpper = "CertifiedUpper"
    EmpiricalLower = "EmpiricalLower"


@dataclass(frozen=True)
class DistortionBound:
    xi: float
    kind: BoundKind
    provenance: str = ""
    conditional: bool = False

    def __post_init__(self):
        if not self.xi >= 0:
            raise ValueError(f"distortion must be nonnegative, got {self.xi}")

    @property
    def certified(self) -> bool:
        return self.kind == BoundKind.CertifiedUpper


@dataclass
class SampledMap:
    """A map together with the domain it is sampled on.

    ``domain`` is an :class:`EuclideanSimplex` (sampled uniformly) or an
    array of points. ``evaluator`` maps an ``(n, d)`` array of points to an
    ``(n, d')`` array; set ``vectorized=False`` for a pointwise function.
    """

    domain: object
    evaluator: Callable
    vectorized: bool = True

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.vectorized:
            return np.asarray(self.evaluator(X), dtype=float).reshape(len(X), -1)
        return np.stack([np.asarray(self.evaluator(x), dtype=float).reshape(-1) for x in X])

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if isinstance(self.domain, EuclideanSimplex):
            lam = sample_barycentric(rng, n, self.domain.dim)
            return lam @ self.domain.vertices
        pts = np.atleast_2d(np.asarray(self.domain, dtype=float))
        return pts[rng.integers(0, len(pts), size=n)]


_BLOCK = 1024


def _check_domain(f: SampledMap):
    if isinstance(f.domain, EuclideanSimplex):
        s = f.domain
        if s.dim == 0 or quality(s).longest_edge_L == 0.0:
            raise DegenerateDomain("cannot sample pairs on a single point")
    else:
        pts = np.atleast_2d(np.asarray(f.domain, dtype=float))
        if len(pts) < 2 or np.ptp(pts, axis=0).max() == 0.0:
            raise DegenerateDomain("point set has fewer than two distinct points")


def pairwise_distortion(X, Y, FX, FY) -> np.ndarray:
    """|(|F(x)-F(y)| / |x-y|) - 1| for paired rows; NaN for coincident pairs."""
    d = np.linalg.norm(X - Y, axis=1)
    fd = np.linalg.norm(FX - FY, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.abs(fd / d - 1.0)
    r[d == 0] = np.nan
    return r


def measure_distortion(f: SampledMap, pairs: int, seed: int = 0) -> DistortionBound:
    """Largest relative change of distance over sampled pairs.

    Pairs are drawn in fixed blocks from independent child seeds, so the
    first k pairs do not depend on the total count and the result can only
    grow with ``pairs``.
    """
    if pairs < 1:
        raise ValueError("need at least one pair")
    _check_domain(f)
    ss = np.random.SeedSequence(seed)
    worst = 0.0
    nblocks = -(-pairs // _BLOCK)
    children = ss.spawn(nblocks)
    for b, child in enumerate(children):
        k = min(_BLOCK, pairs - b * _BLOCK)
        rng = np.random.default_rng(child)
        X = f.sample(rng, k)
        Y = f.sample(rng, k)
        r = pairwise_distortion(X, Y, f(X), f(Y))
        if np.isfinite(r).any():
            worst = max(worst, float(np.nanmax(r)))
    return DistortionBound(worst, BoundKind.EmpiricalLower, f"sampled {pairs} pairs, seed {seed}")


def compose_distortion(xis) -> float:
    """Distortion of a composition: prod(1 + xi_i) - 1.

    Evaluated exactly on the binary values of the inputs and rounded once,
    so the result is the correctly rounded subset-product sum.
    """
    xis = [float(x) for x in np.atleast_1d(np.asarray(xis, dtype=float))]
    if any(not x >= 0 for x in xis):
        raise ValueError("distortions must be nonnegative")
    if any(math.isinf(x) for x in xis):
        return math.inf
    out = Fraction(1)
    for x in xis:
        out *= 1 + Fraction(x)
    return float(out - 1)


def invert_distortion(xi: float) -> float:
    """Distortion of the inverse of a xi-distortion map: xi / (1 - xi), correctly rounded."""
    if not 0 <= xi < 1:
        raise XiNotLessThanOne(f"xi = {xi} must lie in [0, 1)")
    x = Fraction(float(xi))
    return float(x / (1 - x))


def jacobian_fd(f: SampledMap, x, h: float) -> np.ndarray:
    """Central-difference Jacobian of f at x (rows: outputs)."""
    x = np.asarray(x, dtype=float)
    scale = max(1.0, float(np.abs(x).max()))
    if h <= 0 or h < 1e-9 * scale:
        raise StepTooSmall(f"step {h:g} too small for coordinates of size {scale:g}")
    d = x.size
    E = np.eye(d) * h
    P = f(np.concatenate([x + E, x - E]))
    return ((P[:d] - P[d:]) / (2 * h)).T


def spectrum_from_distortion(f: SampledMap, x, h: float | None = None) -> LinearMapSpectrum:
    """Singular values of the finite-difference differential at x."""
    if h is None:
        h = 1e-5 * _domain_diameter(f)
    return svd_spectrum(jacobian_fd(f, x, h))


def _domain_diameter(f: SampledMap) -> float:
    if isinstance(f.domain, EuclideanSimplex):
        return max(quality(f.domain).longest_edge_L, 1e-300)
    pts = np.atleast_2d(np.asarray(f.domain, dtype=float))
    return max(float(np.linalg.norm(np.ptp(pts, axis=0))), 1e-300)


def distortion_from_spectrum_bound(f: SampledMap, domain, xi: float, grid: int = 200,
                                   seed: int = 0, h: float | None = None) -> DistortionBound:
    """Differential route to a distortion bound on a convex domain.

    Checks ``|s_i(dF) - 1| <= xi`` on a sample grid and, if it holds,
    returns xi flagged as conditional on the convexity and injectivity
    hypotheses (which the caller vouches for).
    """
    if not 0 <= xi < 1:
        raise XiNotLessThanOne(f"xi = {xi} must lie in [0, 1)")
    if domain is not None:
        f = SampledMap(domain, f.evaluator, f.vectorized)
    rng = np.random.default_rng(seed)
    pts = f.sample(rng, grid)
    if h is None:
        h = 1e-5 * _domain_diameter(f)
    worst = 0.0
    for x in pts:
        s = spectrum_from_distortion(f, x, h).singular_values
        dev = float(np.abs(s - 1.0).max())
        worst = max(worst, dev)
        if dev > xi + 1e-9:
            raise SpectrumBoundViolated(f"singular value deviation {dev:.4g} exceeds xi = {xi:.4g}")
    return DistortionBound(float(xi), BoundKind.CertifiedUpper,
                           f"differential bound on {grid} grid points (max deviation {worst:.3g})",
                           conditional=True)


def strong_displacement_check(f: SampledMap, s: EuclideanSimplex, p_index: int, xi: float,
                              samples: int = 1000, seed: int = 0) -> bool:
    """Whether |F(x) - x| <= xi |x - p| at sampled points of the simplex."""
    p = s.vertices[p_index]
    if np.linalg.norm(f(p[None])[0] - p) > 1e-9 * max(1.0, np.abs(p).max()):
        raise VertexNotFixed("the map does not fix the chosen vertex")
    rng = np.random.default_rng(seed)
    X = sample_barycentric(rng, samples, s.dim) @ s.vertices
    X = np.concatenate([X, s.vertices])
    disp = np.linalg.norm(f(X) - X, axis=1)
    return bool(np.all(disp <= xi * np.linalg.norm(X - p, axis=1) + 1e-9))
