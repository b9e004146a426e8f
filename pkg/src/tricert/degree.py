"""Degree of piecewise-linear maps by signed preimage counting.

The source is a complex embedded in R^m (``N == m``) and the map is given
by the images of its vertices, extended linearly on each top simplex.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .complex import GeometricComplex
from .errors import (BadDimension, DegenerateImage, NotSimplexwisePositive,
                     PointOnSkeletonImage, SamplingFailed)
from .simplex import batch_barycentric, batch_signed_volume


@dataclass
class OrientedPLMap:
    source: GeometricComplex
    vertex_images: np.ndarray

    def __post_init__(self):
        self.vertex_images = np.asarray(self.vertex_images, dtype=float)
        m = self.source.dimension_m
        if self.source.ambient_N != m:
            raise BadDimension("the source complex must be full-dimensional (N == m)")
        if self.vertex_images.shape != (self.source.n_vertices, m):
            raise BadDimension("need one image point in R^m per source vertex")

    @property
    def m(self) -> int:
        return self.source.dimension_m

    def image_points(self) -> np.ndarray:
        return self.vertex_images[self.source.simplices]

    def signed_volumes(self):
        """(source determinant, image determinant) for every top simplex."""
        return (batch_signed_volume(self.source.simplex_points()),
                batch_signed_volume(self.image_points()))

    def __call__(self, X) -> np.ndarray:
        """Evaluate the map at points of the source carrier."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full_like(X, np.nan)
        Vs = self.source.simplex_points()
        Vi = self.image_points()
        todo = np.ones(len(X), dtype=bool)
        for t in range(len(Vs)):
            if not todo.any():
                break
            idx = np.flatnonzero(todo)
            lam, ok = batch_barycentric(np.repeat(Vs[t:t + 1], len(idx), 0), X[idx])
            inside = ok & (lam.min(axis=1) >= -1e-12)
            hit = idx[inside]
            out[hit] = lam[inside] @ Vi[t]
            todo[hit] = False
        return out


@dataclass
class DegreeResult:
    value: int
    preimage_points: list = field(default_factory=list)
    signs: list = field(default_factory=list)
    query: np.ndarray | None = None


@dataclass
class PositivityReport:
    passed: bool
    negative: list
    degenerate: list


def simplex_sign(f: OrientedPLMap, s, tol: float = 1e-12) -> int:
    """+1 if the map preserves the orientation of top simplex s, else -1."""
    if np.ndim(s) == 0:
        t = int(s)
    else:
        key = np.sort(np.asarray(s))
        hits = np.flatnonzero((f.source.simplices == key).all(axis=1))
        if hits.size == 0:
            raise BadDimension(f"{tuple(key)} is not a top simplex")
        t = int(hits[0])
    ds = batch_signed_volume(f.source.simplex_points([t]))[0]
    di = batch_signed_volume(f.image_points()[[t]])[0]
    scale = np.ptp(f.image_points()[t], axis=0).max() ** f.m
    if abs(di) <= tol * max(scale, 1e-300) or ds == 0:
        raise DegenerateImage(f"image of simplex {t} is degenerate")
    return int(np.sign(ds) * np.sign(di))


def check_simplexwise_positive(f: OrientedPLMap, tol: float = 1e-12) -> PositivityReport:
    ds, di = f.signed_volumes()
    P = f.image_points()
    scale = np.ptp(P, axis=1).max(axis=1) ** f.m
    degenerate = np.abs(di) <= tol * np.maximum(scale, 1e-300)
    negative = ~degenerate & (np.sign(ds) * np.sign(di) < 0)
    keys = [tuple(r) for r in f.source.simplices.tolist()]
    neg = [keys[i] for i in np.flatnonzero(negative)]
    deg = [keys[i] for i in np.flatnonzero(degenerate)]
    return PositivityReport(not neg and not deg, neg, deg)


# ---------------------------------------------------------------------------
# distances to image simplices


def point_simplex_distance(y: np.ndarray, V: np.ndarray) -> float:
    """Euclidean distance from y to the simplex with vertex rows V (any dimension)."""
    if len(V) == 1:
        return float(np.linalg.norm(y - V[0]))
    E = (V[1:] - V[0]).T
    coef, *_ = np.linalg.lstsq(E, y - V[0], rcond=None)
    lam = np.concatenate([[1 - coef.sum()], coef])
    rank = np.linalg.matrix_rank(E)
    if rank == len(V) - 1 and lam.min() >= 0:
        return float(np.linalg.norm(y - V[0] - E @ coef))
    return min(point_simplex_distance(y, np.delete(V, i, axis=0)) for i in range(len(V)))


def _segment_distances(Y: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Distances from each point in Y to each segment [A_k, B_k]; (len(Y), len(A))."""
    d = B - A
    dd = np.einsum("ij,ij->i", d, d)
    w = Y[:, None, :] - A[None]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.where(dd > 0, np.einsum("nkj,kj->nk", w, d) / dd, 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(w - t[..., None] * d[None], axis=-1)


def _facet_image_distance(f: OrientedPLMap, Y: np.ndarray, facets: np.ndarray) -> np.ndarray:
    """Distance from each query point to the union of the image facets."""
    Y = np.atleast_2d(Y)
    if len(facets) == 0:
        return np.full(len(Y), np.inf)
    Fi = f.vertex_images[facets]
    m = f.m
    if m == 1:
        return np.abs(Y[:, None, 0] - Fi[None, :, 0, 0]).min(axis=1)
    if m == 2:
        out = np.full(len(Y), np.inf)
        for c in range(0, len(Fi), 4096):
            out = np.minimum(out, _segment_distances(Y, Fi[c:c + 4096, 0], Fi[c:c + 4096, 1]).min(axis=1))
        return out
    return np.array([min(point_simplex_distance(y, V) for V in Fi) for y in Y])


def skeleton_distance(f: OrientedPLMap, Y) -> np.ndarray:
    """Distance from query points to the image of the (m-1)-skeleton."""
    return _facet_image_distance(f, np.atleast_2d(Y), f.source.facet_adjacency.facets)


def boundary_distance(f: OrientedPLMap, Y) -> np.ndarray:
    """Distance from query points to the image of the boundary complex."""
    fa = f.source.facet_adjacency
    return _facet_image_distance(f, np.atleast_2d(Y), fa.facets[fa.count == 1])


def _preimages(f: OrientedPLMap, y: np.ndarray, interior_tol: float = 1e-10):
    Vi = f.image_points()
    lam, ok = batch_barycentric(Vi, np.repeat(y[None], len(Vi), 0))
    inside = np.flatnonzero(ok & (lam.min(axis=1) > -interior_tol))
    Vs = f.source.simplex_points()
    ds, di = f.signed_volumes()
    pts = [lam[t] @ Vs[t] for t in inside]
    signs = [int(np.sign(ds[t]) * np.sign(di[t])) for t in inside]
    return pts, signs


def degree_at_point(f: OrientedPLMap, y, seed: int = 0, skeleton_tol: float = 1e-8,
                    jitter: float = 1e-7, attempts: int = 100) -> DegreeResult:
    """Signed count of preimages of y.

    A query that sits within ``skeleton_tol`` of the skeleton image is
    nudged by random offsets of size up to ``jitter``; after ``attempts``
    failures the query is rejected as ill-posed.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    rng = np.random.default_rng(seed)
    q = y.copy()
    tries = 0
    while skeleton_distance(f, q)[0] <= skeleton_tol:
        if tries == attempts:
            raise PointOnSkeletonImage(
                f"query stays within {skeleton_tol:g} of the skeleton image after {attempts} nudges")
        off = rng.standard_normal(y.shape)
        off *= jitter * rng.random() ** (1.0 / y.size) / np.linalg.norm(off)
        q = y + off
        tries += 1
    pts, signs = _preimages(f, q)
    return DegreeResult(int(sum(signs)), pts, signs, q)


def preimage_counts(f: OrientedPLMap, Y: np.ndarray) -> np.ndarray:
    """Unsigned number of top simplices whose image contains each query point."""
    Vi = f.image_points()
    counts = np.zeros(len(Y), dtype=np.int64)
    for t in range(len(Vi)):
        lam, ok = batch_barycentric(np.repeat(Vi[t:t + 1], len(Y), 0), Y)
        if ok[0]:
            counts += lam.min(axis=1) > 0
    return counts


@dataclass
class LocalConstancyReport:
    components: list
    constant: bool
    grid_shape: tuple


def locally_constant_degree_scan(f: OrientedPLMap, component_samples: int = 50,
                                 resolution: int | None = None, seed: int = 0) -> LocalConstancyReport:
    """Group grid points by component of the complement of the boundary image.

    Grid nodes within one grid spacing of the boundary image are blocked so
    that the flood fill cannot jump across it; inside each component the
    preimage counts of sampled nodes (kept off the skeleton image) must agree.
    """
    pos = check_simplexwise_positive(f)
    if not pos.passed:
        raise NotSimplexwisePositive(
            f"map folds or collapses simplices: {len(pos.negative)} negative, {len(pos.degenerate)} degenerate")
    m = f.m
    if resolution is None:
        resolution = {1: 2001, 2: 241}.get(m, 41)
    img = f.vertex_images
    lo, hi = img.min(axis=0), img.max(axis=0)
    pad = 0.15 * (hi - lo).max() + 1e-9
    axes = [np.linspace(lo[d] - pad, hi[d] + pad, resolution) for d in range(m)]
    spacing = max(a[1] - a[0] for a in axes)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, m)
    free = boundary_distance(f, grid) > 1.01 * spacing
    labels, ncomp = ndimage.label(free.reshape((resolution,) * m))
    labels = labels.reshape(-1)
    rng = np.random.default_rng(seed)
    comps = []
    constant = True
    for c in range(1, ncomp + 1):
        idx = np.flatnonzero(labels == c)
        pick = rng.choice(idx, size=min(component_samples, idx.size), replace=False)
        pts = grid[pick]
        pts = pts[skeleton_distance(f, pts) > 1e-8]
        if len(pts) == 0:
            continue
        counts = preimage_counts(f, pts)
        values = sorted(set(int(v) for v in counts))
        constant &= len(values) == 1
        comps.append({"label": c, "counts": values, "samples": int(len(pts)), "nodes": int(idx.size)})
    if not comps:
        raise SamplingFailed("could not place any samples off the skeleton image")
    return LocalConstancyReport(comps, bool(constant), (resolution,) * m)
