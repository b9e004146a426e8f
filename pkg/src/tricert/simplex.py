"""Euclidean simplex geometry: altitudes, thickness, barycentric coordinates.

A j-simplex is given by j+1 vertices in R^N. The thickness is the smallest
altitude divided by ``j * L`` where ``L`` is the longest edge; 0-simplices
have thickness 1 by convention.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import (DegenerateSimplex, IndexOutOfRange, NotFullDimensional,
                     PointOffAffineHull, XiOutOfRange)
from .geom import TOL


@dataclass(frozen=True)
class EuclideanSimplex:
    vertices: np.ndarray = field(repr=False)

    def __post_init__(self):
        V = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "vertices", V)

    @property
    def dim(self) -> int:
        return self.vertices.shape[0] - 1

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    def edge_matrix(self) -> np.ndarray:
        """Edge vectors from vertex 0, as columns (N x j)."""
        return (self.vertices[1:] - self.vertices[0]).T

    def quality(self) -> "QualityMeasures":
        return quality(self)

    def barycentre(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def scaled(self, c: float) -> "EuclideanSimplex":
        return EuclideanSimplex(self.vertices * c)


@dataclass(frozen=True)
class QualityMeasures:
    longest_edge_L: float
    min_altitude_a: float
    thickness_t: float
    diameter: float
    per_vertex_altitudes: np.ndarray = field(repr=False)


def _dist_to_affine_hull(x: np.ndarray, pts: np.ndarray) -> float:
    if pts.shape[0] == 1:
        return float(np.linalg.norm(x - pts[0]))
    E = (pts[1:] - pts[0]).T
    coef, *_ = np.linalg.lstsq(E, x - pts[0], rcond=None)
    return float(np.linalg.norm(x - pts[0] - E @ coef))


def altitude(s: EuclideanSimplex, vertex_index: int) -> float:
    """Distance from a vertex to the affine hull of the opposite facet."""
    j = s.dim
    if j < 1:
        raise IndexOutOfRange("altitudes need a simplex of dimension >= 1")
    if not -j - 1 <= vertex_index <= j:
        raise IndexOutOfRange(f"vertex index {vertex_index} out of range for a {j}-simplex")
    i = vertex_index % (j + 1)
    others = np.delete(s.vertices, i, axis=0)
    return _dist_to_affine_hull(s.vertices[i], others)


def longest_edge(s: EuclideanSimplex) -> float:
    if s.dim < 1:
        return 0.0
    V = s.vertices
    return float(max(np.linalg.norm(V[a] - V[b]) for a, b in combinations(range(len(V)), 2)))


def quality(s: EuclideanSimplex) -> QualityMeasures:
    j = s.dim
    if j == 0:
        return QualityMeasures(0.0, 0.0, 1.0, 0.0, np.zeros(1))
    alts = np.array([altitude(s, i) for i in range(j + 1)])
    L = longest_edge(s)
    a = float(alts.min())
    t = a / (j * L) if L > 0 else 0.0
    return QualityMeasures(L, a, float(min(max(t, 0.0), 1.0)), L, alts)


def thickness(s: EuclideanSimplex) -> float:
    return quality(s).thickness_t


def barycentric_coordinates(s: EuclideanSimplex, x, strict: bool = False,
                            hull_tol: float = TOL.geometric) -> np.ndarray:
    """Barycentric coordinates of x with respect to the simplex.

    Off-hull points are projected onto the affine hull first, unless
    ``strict`` is set, in which case a distance above ``hull_tol`` raises.
    """
    x = np.asarray(x, dtype=float)
    j = s.dim
    if j == 0:
        return np.ones(1)
    if thickness(s) < TOL.degenerate_thickness:
        raise DegenerateSimplex("barycentric coordinates need a nondegenerate simplex")
    E = s.edge_matrix()
    coef, *_ = np.linalg.lstsq(E, x - s.vertices[0], rcond=None)
    if strict:
        off = np.linalg.norm(x - s.vertices[0] - E @ coef)
        if off > hull_tol * max(1.0, longest_edge(s)):
            raise PointOffAffineHull(f"point lies {off:.3e} away from the affine hull")
    return np.concatenate([[1.0 - coef.sum()], coef])


def trilateration_displacement_bound(s: EuclideanSimplex, xi: float) -> float:
    """Displacement bound 3*xi*L/t for a xi-distortion map fixing the vertices."""
    if s.dim != s.ambient_dim:
        raise NotFullDimensional("the bound is stated for full-dimensional simplices")
    if xi < 0 or xi > 1:
        raise XiOutOfRange(f"xi = {xi} must lie in [0, 1]")
    q = quality(s)
    return 3.0 * xi * q.longest_edge_L / q.thickness_t


def matrix_P_inverse_norm_check(s: EuclideanSimplex):
    """Operator norm of the inverse transpose edge matrix against its bound.

    With vertex 0 as origin and P the matrix of edge vectors (columns),
    returns ``(||(P^T)^{-1}||, 1 / (sqrt(m) t L))``.
    """
    m = s.dim
    if m != s.ambient_dim:
        raise NotFullDimensional("the check needs a full-dimensional simplex")
    q = quality(s)
    if q.thickness_t < TOL.degenerate_thickness:
        raise DegenerateSimplex("edge matrix is singular")
    P = s.edge_matrix()
    actual = 1.0 / np.linalg.svd(P, compute_uv=False).min()
    bound = 1.0 / (np.sqrt(m) * q.thickness_t * q.longest_edge_L)
    return float(actual), float(bound)


def sample_barycentric(rng: np.random.Generator, n: int, j: int) -> np.ndarray:
    """Uniform barycentric coordinates on a j-simplex (normalised exponentials)."""
    e = rng.standard_exponential((n, j + 1))
    return e / e.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# batched quality for stacks of simplices ``(n, j+1, N)``


def batch_edge_lengths(P: np.ndarray) -> np.ndarray:
    """All edge lengths, shape ``(n, j(j+1)/2)``."""
    k = P.shape[1]
    ia, ib = np.triu_indices(k, 1)
    return np.linalg.norm(P[:, ia] - P[:, ib], axis=-1)


def batch_altitudes(P: np.ndarray) -> np.ndarray:
    """Altitudes of every vertex, shape ``(n, j+1)``.

    The altitude of vertex i is ``1 / |grad lambda_i|``; the gradients come
    from the inverse Gram matrix of the edge vectors. Degenerate simplices
    get zero altitudes.
    """
    n, k, _ = P.shape
    j = k - 1
    if j == 0:
        return np.zeros((n, 1))
    E = P[:, 1:] - P[:, :1]                      # (n, j, N) rows are edges
    G = E @ np.swapaxes(E, 1, 2)                 # (n, j, j)
    det = np.linalg.det(G)
    scale = np.einsum("nii->n", G) ** j
    good = det > 1e-24 * np.maximum(scale, 1e-300)
    out = np.zeros((n, k))
    if not good.any():
        return out
    Gi = np.linalg.inv(G[good])
    diag = np.einsum("nii->ni", Gi)
    g0 = Gi.sum(axis=(1, 2))
    grad2 = np.concatenate([g0[:, None], diag], axis=1)
    out[good] = 1.0 / np.sqrt(np.maximum(grad2, 1e-300))
    return out


def batch_quality(P: np.ndarray):
    """Longest edge, minimum altitude and thickness for a stack of simplices."""
    j = P.shape[1] - 1
    if j == 0:
        n = P.shape[0]
        return np.zeros(n), np.zeros(n), np.ones(n)
    L = batch_edge_lengths(P).max(axis=1)
    a = batch_altitudes(P).min(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(L > 0, a / (j * L), 0.0)
    return L, a, np.clip(t, 0.0, 1.0)


def batch_min_face_thickness(P: np.ndarray) -> np.ndarray:
    """Minimum thickness over all faces of dimension >= 1 of each simplex."""
    k = P.shape[1]
    t = batch_quality(P)[2]
    for d in range(2, k - 1):
        for face in combinations(range(k), d + 1):
            t = np.minimum(t, batch_quality(P[:, face])[2])
    return t


def batch_barycentric(V: np.ndarray, y: np.ndarray):
    """Barycentric coordinates of points in full-dimensional simplices.

    ``V`` is ``(n, m+1, m)`` and ``y`` is ``(n, m)``. Returns ``(lam, ok)``
    where ``ok`` flags nondegenerate simplices; ``lam`` is NaN elsewhere.
    """
    n, k, m = V.shape
    A = np.swapaxes(V[:, 1:] - V[:, :1], 1, 2)   # (n, m, m) columns are edges
    if m == 1:
        det = A[:, 0, 0]
    elif m == 2:
        det = A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
    else:
        det = np.linalg.det(A)
    edge = np.abs(A).max(axis=(1, 2))
    ok = np.abs(det) > 1e-14 * np.maximum(edge, 1e-300) ** m
    lam = np.full((n, k), np.nan)
    if ok.any():
        rhs = (y - V[:, 0])[ok]
        if m == 1:
            c = rhs / A[ok, 0]
        elif m == 2:
            Ao, d = A[ok], det[ok]
            c = np.stack([(Ao[:, 1, 1] * rhs[:, 0] - Ao[:, 0, 1] * rhs[:, 1]) / d,
                          (-Ao[:, 1, 0] * rhs[:, 0] + Ao[:, 0, 0] * rhs[:, 1]) / d], axis=1)
        else:
            c = np.linalg.solve(A[ok], rhs[..., None])[..., 0]
        lam[ok] = np.concatenate([1.0 - c.sum(axis=1, keepdims=True), c], axis=1)
    return lam, ok


def batch_signed_volume(V: np.ndarray) -> np.ndarray:
    """Determinant of the edge matrix of full-dimensional simplices ``(n, m+1, m)``."""
    A = V[:, 1:] - V[:, :1]
    m = A.shape[-1]
    if m == 1:
        return A[:, 0, 0]
    if m == 2:
        return A[:, 0, 0] * A[:, 1, 1] - A[:, 0, 1] * A[:, 1, 0]
    return np.linalg.det(A)
