"""Analytic test submanifolds with closed-form projection, reach and lfs.

Every manifold exposes batched primitives on ``(n, N)`` arrays
(``project``, ``tangent_bases``, ``medial_distance``, ``local_reach``) and
pointwise wrappers that validate their input and raise the documented
errors. The geometric bound checks at the bottom of the module compare
measured quantities against the corresponding analytic bounds.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy import optimize

from .errors import (DegenerateSimplex, HypothesisViolated, OnMedialAxis,
                     PointNotOnManifold, SimplexLeavesTube)
from .geom import (TOL, Flat, batch_orthonormalize, batch_sin_largest_angle,
                   householder_complement, sin_angle_between_flats)
from .simplex import EuclideanSimplex, quality, sample_barycentric


@dataclass(frozen=True)
class ProjectionResult:
    point_on_M: np.ndarray
    distance: float
    inside_tube: bool


class TestManifold:
    """Base class; subclasses fill in the batched closed forms."""

    __test__ = False  # keep pytest from collecting the class
    m: int
    N: int

    # -- batched primitives (subclasses) ------------------------------------
    def project(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def medial_distance(self, X: np.ndarray) -> np.ndarray:
        """Distance from arbitrary points to the medial axis."""
        raise NotImplementedError

    def tangent_bases(self, P: np.ndarray) -> np.ndarray:
        """Orthonormal tangent bases ``(n, N, m)`` at points of M."""
        raise NotImplementedError

    def local_reach(self, P: np.ndarray) -> np.ndarray:
        """Distance to the medial axis measured along normal directions."""
        raise NotImplementedError

    def implicit(self, Y: np.ndarray) -> np.ndarray:
        """Defining equations ``(n, N-m)``, vanishing exactly on M."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def geodesic_chord_check(self, x, y):
        """Needs closed-form geodesic lengths; only the round spheres provide them."""
        raise NotImplementedError(f"geodesic lengths are not available on {self!r}")

    @property
    def reach(self) -> float:
        raise NotImplementedError

    @property
    def scale(self) -> float:
        return 1.0

    def component_labels(self, P: np.ndarray) -> np.ndarray:
        return np.zeros(len(np.atleast_2d(P)), dtype=np.int64)

    @property
    def n_components(self) -> int:
        return 1

    # -- derived ------------------------------------------------------------
    def lfs(self, P) -> np.ndarray:
        return self.medial_distance(np.atleast_2d(P))

    def distance(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.linalg.norm(X - self.project(X), axis=1)

    def normal_bases(self, P: np.ndarray) -> np.ndarray:
        T = self.tangent_bases(P)
        Q, _ = np.linalg.qr(np.concatenate([T, np.broadcast_to(np.eye(self.N), (len(T), self.N, self.N))], axis=2))
        return Q[:, :, self.m:self.N]

    def _tube_tol(self) -> float:
        return TOL.medial * max(1.0, self.scale)

    def on_manifold(self, P, tol: float = TOL.on_manifold) -> np.ndarray:
        return self.distance(P) <= tol * max(1.0, self.scale)

    def _require_on(self, p):
        p = np.asarray(p, dtype=float).reshape(-1)
        if p.size != self.N:
            raise PointNotOnManifold(f"expected a point of R^{self.N}")
        d = self.distance(p)[0]
        if not d <= TOL.on_manifold * max(1.0, self.scale):
            raise PointNotOnManifold(f"point is {d:.3e} away from the manifold")
        return p

    def closest_point(self, x) -> ProjectionResult:
        x = np.asarray(x, dtype=float).reshape(-1)
        if x.size != self.N or not np.all(np.isfinite(x)):
            raise ValueError("closest_point needs a finite point of the ambient space")
        if self.medial_distance(x[None])[0] <= self._tube_tol():
            raise OnMedialAxis("projection is ambiguous: point lies on the medial axis")
        p = self.project(x[None])[0]
        return ProjectionResult(p, float(np.linalg.norm(x - p)), True)

    def tangent_flat(self, p) -> Flat:
        p = self._require_on(p)
        return Flat(p, self.tangent_bases(p[None])[0])

    def normal_flat(self, p) -> Flat:
        p = self._require_on(p)
        return Flat(p, self.normal_bases(p[None])[0])

    def reach_and_lfs(self) -> "ReachInfo":
        return ReachInfo(self.reach, lambda y: float(self.lfs(np.asarray(y)[None])[0]),
                         lambda c, r: local_reach_lower_bound(self, c, r))


# ---------------------------------------------------------------------------


class SphereShell(TestManifold):
    """Round m-sphere of the given radius in the first m+1 coordinates of R^N."""

    def __init__(self, m: int = 2, N: int = 3, radius: float = 1.0):
        if m < 1 or N < m + 1:
            raise ValueError(f"need 1 <= m and N >= m + 1, got m={m}, N={N}")
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.m, self.N, self.radius = int(m), int(N), float(radius)

    def __repr__(self):
        return f"SphereShell(m={self.m}, N={self.N}, radius={self.radius})"

    @property
    def scale(self):
        return self.radius

    @property
    def reach(self):
        return self.radius

    def project(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        k = self.m + 1
        out = np.zeros_like(X)
        nrm = np.linalg.norm(X[:, :k], axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            out[:, :k] = self.radius * X[:, :k] / nrm
        return out

    def medial_distance(self, X):
        return np.linalg.norm(np.atleast_2d(X)[:, :self.m + 1], axis=1)

    def tangent_bases(self, P):
        P = np.atleast_2d(P)
        k = self.m + 1
        u = P[:, :k] / np.linalg.norm(P[:, :k], axis=1, keepdims=True)
        T = np.zeros((len(P), self.N, self.m))
        T[:, :k, :] = householder_complement(u)
        return T

    def normal_bases(self, P):
        P = np.atleast_2d(P)
        k = self.m + 1
        B = np.zeros((len(P), self.N, self.N - self.m))
        B[:, :k, 0] = P[:, :k] / np.linalg.norm(P[:, :k], axis=1, keepdims=True)
        for j in range(k, self.N):
            B[:, j, j - k + 1] = 1.0
        return B

    def local_reach(self, P):
        return np.full(len(np.atleast_2d(P)), self.radius)

    def implicit(self, Y):
        Y = np.atleast_2d(Y)
        k = self.m + 1
        g = (np.einsum("ij,ij->i", Y[:, :k], Y[:, :k]) - self.radius ** 2) / (2 * self.radius)
        return np.concatenate([g[:, None], Y[:, k:]], axis=1)

    def sample(self, rng, n):
        G = rng.standard_normal((n, self.m + 1))
        out = np.zeros((n, self.N))
        out[:, :self.m + 1] = self.radius * G / np.linalg.norm(G, axis=1, keepdims=True)
        return out

    def geodesic_distance(self, x, y) -> float:
        x, y = np.asarray(x, float), np.asarray(y, float)
        c = np.clip(x @ y / self.radius ** 2, -1.0, 1.0)
        return float(self.radius * np.arccos(c))

    def geodesic_chord_check(self, x, y):
        """(chord, 2R sin(l / 2R)) for the geodesic length l; equal on the sphere."""
        x = self._require_on(x)
        y = self._require_on(y)
        ell = self.geodesic_distance(x, y)
        return float(np.linalg.norm(x - y)), float(2 * self.radius * np.sin(ell / (2 * self.radius)))


class Circle2D(SphereShell):
    def __init__(self, radius: float = 1.0):
        super().__init__(1, 2, radius)

    def __repr__(self):
        return f"Circle2D(radius={self.radius})"


class Torus3D(TestManifold):
    """Torus of revolution about the z-axis: major radius R, tube radius r."""

    m, N = 2, 3

    def __init__(self, R_major: float = 2.0, r_minor: float = 1.0):
        if not (R_major > 0 and r_minor > 0):
            raise ValueError("torus radii must be positive")
        if not R_major > r_minor:
            raise ValueError("need R_major > r_minor for an embedded torus")
        self.R, self.r = float(R_major), float(r_minor)

    def __repr__(self):
        return f"Torus3D(R_major={self.R}, r_minor={self.r})"

    @property
    def scale(self):
        return self.R + self.r

    @property
    def reach(self):
        return min(self.r, self.R - self.r)

    def angles(self, P):
        P = np.atleast_2d(P)
        u = np.arctan2(P[:, 1], P[:, 0])
        rho = np.hypot(P[:, 0], P[:, 1])
        v = np.arctan2(P[:, 2], rho - self.R)
        return u, v

    def point(self, u, v):
        u, v = np.asarray(u, float), np.asarray(v, float)
        w = self.R + self.r * np.cos(v)
        return np.stack([w * np.cos(u), w * np.sin(u), self.r * np.sin(v)], axis=-1)

    def project(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        rho = np.hypot(X[:, 0], X[:, 1])
        with np.errstate(invalid="ignore", divide="ignore"):
            c = np.zeros_like(X)
            c[:, 0] = self.R * X[:, 0] / rho
            c[:, 1] = self.R * X[:, 1] / rho
            w = X - c
            return c + self.r * w / np.linalg.norm(w, axis=1, keepdims=True)

    def medial_distance(self, X):
        X = np.atleast_2d(X)
        rho = np.hypot(X[:, 0], X[:, 1])
        core = np.hypot(rho - self.R, X[:, 2])
        return np.minimum(core, rho)

    def tangent_bases(self, P):
        u, v = self.angles(P)
        tu = np.stack([-np.sin(u), np.cos(u), np.zeros_like(u)], axis=1)
        tv = np.stack([-np.sin(v) * np.cos(u), -np.sin(v) * np.sin(u), np.cos(v)], axis=1)
        return np.stack([tu, tv], axis=2)

    def normal_bases(self, P):
        u, v = self.angles(P)
        n = np.stack([np.cos(v) * np.cos(u), np.cos(v) * np.sin(u), np.sin(v)], axis=1)
        return n[:, :, None]

    def local_reach(self, P):
        _, v = self.angles(P)
        cv = np.cos(v)
        with np.errstate(divide="ignore"):
            outer = np.where(cv < 0, self.R / np.abs(cv) - self.r, np.inf)
        return np.minimum(self.r, outer)

    def implicit(self, Y):
        Y = np.atleast_2d(Y)
        rho = np.hypot(Y[:, 0], Y[:, 1])
        return (((rho - self.R) ** 2 + Y[:, 2] ** 2 - self.r ** 2) / (2 * self.r))[:, None]

    def sample(self, rng, n):
        # area element is proportional to R + r cos v: rejection on v
        out = np.empty((0, 3))
        while len(out) < n:
            k = 2 * (n - len(out)) + 16
            u = rng.uniform(-np.pi, np.pi, k)
            v = rng.uniform(-np.pi, np.pi, k)
            keep = rng.uniform(0, self.R + self.r, k) < self.R + self.r * np.cos(v)
            out = np.concatenate([out, self.point(u[keep], v[keep])])
        return out[:n]


class BiSphere(TestManifold):
    """Two disjoint round 2-spheres in R^3 with centres on the x-axis."""

    m, N = 2, 3

    def __init__(self, radius: float = 1.0, gap: float = 2.0):
        if not (radius > 0 and gap > 0):
            raise ValueError("radius and gap must be positive")
        self.radius, self.gap = float(radius), float(gap)
        off = radius + gap / 2
        self.centres = np.array([[-off, 0.0, 0.0], [off, 0.0, 0.0]])

    def __repr__(self):
        return f"BiSphere(radius={self.radius}, gap={self.gap})"

    @property
    def scale(self):
        return self.radius

    @property
    def reach(self):
        return min(self.radius, self.gap / 2)

    @property
    def n_components(self):
        return 2

    def component_labels(self, P):
        return (np.atleast_2d(P)[:, 0] > 0).astype(np.int64)

    def project(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        c = self.centres[self.component_labels(X)]
        w = X - c
        with np.errstate(invalid="ignore", divide="ignore"):
            return c + self.radius * w / np.linalg.norm(w, axis=1, keepdims=True)

    def medial_distance(self, X):
        X = np.atleast_2d(X)
        d0 = np.linalg.norm(X - self.centres[0], axis=1)
        d1 = np.linalg.norm(X - self.centres[1], axis=1)
        return np.minimum(np.minimum(d0, d1), np.abs(X[:, 0]))

    def _unit_normals(self, P):
        P = np.atleast_2d(P)
        w = P - self.centres[self.component_labels(P)]
        return w / np.linalg.norm(w, axis=1, keepdims=True)

    def tangent_bases(self, P):
        return householder_complement(self._unit_normals(P))

    def normal_bases(self, P):
        return self._unit_normals(P)[:, :, None]

    def local_reach(self, P):
        P = np.atleast_2d(P)
        n = self._unit_normals(P)
        # outward normal line x + s n meets the bisector plane at s = -x0 / n0
        with np.errstate(divide="ignore", invalid="ignore"):
            s = -P[:, 0] / n[:, 0]
        s = np.where(np.isfinite(s) & (s > 0), s, np.inf)
        return np.minimum(self.radius, s)

    def implicit(self, Y):
        Y = np.atleast_2d(Y)
        c = self.centres[self.component_labels(Y)]
        w = Y - c
        return ((np.einsum("ij,ij->i", w, w) - self.radius ** 2) / (2 * self.radius))[:, None]

    def sample(self, rng, n):
        G = rng.standard_normal((n, 3))
        side = rng.integers(0, 2, n)
        return self.centres[side] + self.radius * G / np.linalg.norm(G, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# parsing, reach policies


def parse_manifold(spec: str) -> TestManifold:
    """Build a manifold from strings like ``sphere:2,3,1.0`` or ``torus:2,1``."""
    if not isinstance(spec, str) or ":" not in spec:
        raise ValueError(f"manifold spec {spec!r} must look like kind:params")
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    try:
        vals = [float(v) for v in rest.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"manifold parameters {rest!r} are not numbers") from None
    arity = {"sphere": 3, "torus": 2, "circle": 1, "bisphere": 2}
    if kind not in arity:
        raise ValueError(f"unknown manifold kind {kind!r}; expected one of {sorted(arity)}")
    if len(vals) != arity[kind]:
        raise ValueError(f"{kind} takes {arity[kind]} parameters, got {len(vals)}")
    if kind == "sphere":
        m, N, r = vals
        if m != int(m) or N != int(N):
            raise ValueError("sphere dimensions must be integers")
        return SphereShell(int(m), int(N), r)
    if kind == "torus":
        return Torus3D(*vals)
    if kind == "circle":
        return Circle2D(vals[0])
    return BiSphere(*vals)


@dataclass(frozen=True)
class ReachInfo:
    reach_global: float
    lfs_at: Callable
    local_reach_lower: Callable


def local_reach_lower_bound(M: TestManifold, centre, radius: float) -> float:
    """Lower bound on the local reach over B(centre, radius) from 1-Lipschitz lfs."""
    c = np.asarray(centre, dtype=float).reshape(1, -1)
    return float(max(M.reach, M.medial_distance(c)[0] - radius))


@dataclass(frozen=True)
class GlobalReach:
    """Use the global reach as the local-reach bound everywhere."""

    def R_rch(self, M: TestManifold, P) -> np.ndarray:
        return np.full(len(np.atleast_2d(P)), M.reach)

    def chart_radius_cap(self, M: TestManifold, P) -> np.ndarray:
        return self.R_rch(M, P)

    def describe(self) -> str:
        return "GlobalReach"


@dataclass(frozen=True)
class LocalLfs:
    """R_rch = (1 - eps) lfs(p) on the ball B(p, eps lfs(p))."""

    eps: float = 9.0 / 137.0

    def __post_init__(self):
        if not 0 < self.eps <= 0.5:
            raise ValueError("eps must lie in (0, 1/2]")

    def R_rch(self, M: TestManifold, P) -> np.ndarray:
        return (1.0 - self.eps) * M.lfs(P)

    def chart_radius_cap(self, M: TestManifold, P) -> np.ndarray:
        return self.eps * M.lfs(P)

    def describe(self) -> str:
        return f"LocalLfs(eps={self.eps:.6g})"


# ---------------------------------------------------------------------------
# implicit-equation cross-check


def newton_closest_point(M: TestManifold, x, starts: int = 8, seed: int = 0) -> np.ndarray:
    """Closest point by constrained minimisation from several starting points.

    Does not use the closed-form projection; the starts are the sampled
    manifold points nearest to x.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    rng = np.random.default_rng(seed)
    pool = M.sample(rng, 400 * starts)
    order = np.argsort(np.linalg.norm(pool - x, axis=1))[:starts]
    best, best_d = None, np.inf
    for y0 in pool[order]:
        res = optimize.minimize(lambda y: 0.5 * np.sum((y - x) ** 2), y0, jac=lambda y: y - x,
                                constraints=[{"type": "eq", "fun": lambda y: M.implicit(y[None])[0]}],
                                method="SLSQP", options={"ftol": 1e-15, "maxiter": 200})
        y = res.x
        if np.abs(M.implicit(y[None])).max() > 1e-9:
            continue
        d = np.linalg.norm(y - x)
        if d < best_d:
            best, best_d = y, d
    if best is None:
        raise RuntimeError("no start converged onto the manifold")
    return best


# ---------------------------------------------------------------------------
# bound checks


def dist_to_tangent_bounds_check(M: TestManifold, x, y):
    """(sin angle([x,y], T_x), |x-y| / 2rch(x), dist(y, T_x), |x-y|^2 / 2rch(x))."""
    x = M._require_on(x)
    y = M._require_on(y)
    d = np.linalg.norm(y - x)
    if d == 0:
        return 0.0, 0.0, 0.0, 0.0
    T = M.tangent_bases(x[None])[0]
    w = y - x
    resid = w - T @ (T.T @ w)
    rch = M.local_reach(x[None])[0]
    return float(np.linalg.norm(resid) / d), float(d / (2 * rch)), float(np.linalg.norm(resid)), float(d * d / (2 * rch))


class TangentVariation(NamedTuple):
    sin_angle: float
    sin_bound: float
    angle: float
    angle_bound: float


def _ball_hypothesis(M: TestManifold, centre, radius: float, R_rch: float):
    if not radius < R_rch:
        raise HypothesisViolated(f"ball radius {radius:.4g} is not below R_rch = {R_rch:.4g}")
    if M.medial_distance(np.asarray(centre)[None])[0] < radius:
        raise HypothesisViolated("ball is not contained in the tubular neighbourhood")
    if R_rch > local_reach_lower_bound(M, centre, radius) * (1 + 1e-12):
        raise HypothesisViolated("R_rch exceeds the local reach on the ball")


def tangent_variation_check(M: TestManifold, x, y, R_rch: float, centre=None,
                            radius: float | None = None) -> TangentVariation:
    """Angle between tangent spaces at x and y against |x-y| / R_rch.

    The default ball is centred at the midpoint with radius |x-y|/2.
    """
    x = M._require_on(x)
    y = M._require_on(y)
    d = float(np.linalg.norm(y - x))
    if centre is None:
        centre = 0.5 * (x + y)
    if radius is None:
        radius = 0.5 * d
    _ball_hypothesis(M, centre, radius, R_rch)
    if d == 0:
        return TangentVariation(0.0, 0.0, 0.0, 0.0)
    Tx, Ty = M.tangent_flat(x), M.tangent_flat(y)
    s = sin_angle_between_flats(Tx, Ty)
    from .geom import angle_between_flats
    return TangentVariation(s, d / R_rch, angle_between_flats(Tx, Ty), np.pi * d / (2 * R_rch))


def whitney_angle_bound_check(s: EuclideanSimplex, K: Flat):
    """(sin angle(aff s, K), 2 eta / (t L)) with eta the largest vertex distance to K."""
    q = quality(s)
    if s.dim > K.dim:
        raise ValueError("simplex dimension exceeds the flat dimension")
    if s.dim == 0:
        return 0.0, 0.0
    if q.thickness_t < TOL.degenerate_thickness:
        raise DegenerateSimplex("Whitney's bound needs a nondegenerate simplex")
    D = s.vertices - K.base
    eta = float(np.linalg.norm(D - (D @ K.basis) @ K.basis.T, axis=1).max())
    sin = sin_angle_between_flats(Flat.through(s.vertices), K)
    return sin, 2 * eta / (q.thickness_t * q.longest_edge_L)


@dataclass
class ProximityReport:
    max_dist_to_M: float
    dist_bound: float
    max_dist_to_tangent: float
    max_vertex_to_projection: float
    vertex_bound: float

    @property
    def holds(self) -> bool:
        return (self.max_dist_to_M <= self.dist_bound and self.max_dist_to_tangent <= self.dist_bound
                and self.max_vertex_to_projection <= self.vertex_bound)


def _simplex_samples(s: EuclideanSimplex, samples: int, seed: int):
    rng = np.random.default_rng(seed)
    X = sample_barycentric(rng, samples, s.dim) @ s.vertices
    return np.concatenate([X, s.vertices, s.barycentre()[None]])


def simplex_manifold_proximity(M: TestManifold, s: EuclideanSimplex, R_rch: float,
                               samples: int = 200, seed: int = 0) -> ProximityReport:
    """Sampled distances of a simplex to M and to the tangent spaces at projections."""
    for v in s.vertices:
        M._require_on(v)
    if s.dim == 0:
        return ProximityReport(0.0, 0.0, 0.0, 0.0, 0.0)
    L = quality(s).longest_edge_L
    X = _simplex_samples(s, samples, seed)
    if (M.medial_distance(X) <= M._tube_tol()).any():
        raise SimplexLeavesTube("simplex reaches the medial axis")
    P = M.project(X)
    T = M.tangent_bases(P)
    dM = np.linalg.norm(X - P, axis=1)
    # distance of every vertex to each tangent space T_{x check}; affine, so vertices suffice
    W = s.vertices[None, :, :] - P[:, None, :]
    resid = W - np.einsum("nij,nkj->nki", T, np.einsum("nki,nij->nkj", W, T))
    dT = np.linalg.norm(resid, axis=2).max()
    vp = np.linalg.norm(s.vertices[None, :, :] - P[:, None, :], axis=2).max()
    return ProximityReport(float(dM.max()), 2 * L * L / R_rch, float(dT), float(vp), 2 * L)


def simplex_tangent_angle(M: TestManifold, s: EuclideanSimplex, p_index: int = 0,
                          mode: str = "at_vertex", R_rch: float | None = None,
                          samples: int = 200, seed: int = 0):
    """(measured sin angle, bound) between a simplex and nearby tangent spaces.

    ``at_vertex`` compares aff(s) with T_p against L / (t rch(p)).
    ``along_projection`` takes the worst T at projections of sampled points
    against 3L / (t R_rch) and checks the ball hypothesis with the ball
    centred at p.
    """
    for v in s.vertices:
        M._require_on(v)
    q = quality(s)
    if s.dim == 0:
        return 0.0, 0.0
    if q.thickness_t < TOL.degenerate_thickness:
        raise DegenerateSimplex("simplex is degenerate")
    p = s.vertices[p_index]
    B = batch_orthonormalize((s.vertices[1:] - s.vertices[0]).T[None])
    if mode == "at_vertex":
        T = M.tangent_bases(p[None])
        sin = float(batch_sin_largest_angle(B, T)[0])
        return sin, q.longest_edge_L / (q.thickness_t * M.local_reach(p[None])[0])
    if mode != "along_projection":
        raise ValueError(f"unknown mode {mode!r}")
    if R_rch is None:
        raise HypothesisViolated("along_projection needs R_rch")
    X = _simplex_samples(s, samples, seed)
    if (M.medial_distance(X) <= M._tube_tol()).any():
        raise HypothesisViolated("simplex reaches the medial axis")
    P = M.project(X)
    radius = float(np.linalg.norm(P - p, axis=1).max())
    _ball_hypothesis(M, p, radius, R_rch)
    T = M.tangent_bases(P)
    sin = float(batch_sin_largest_angle(np.broadcast_to(B, (len(P),) + B.shape[1:]), T).max())
    return sin, 3 * q.longest_edge_L / (q.thickness_t * R_rch)
