"""Randomised sweeps of the quantitative geometric bounds.

Every sweep draws at least ``n`` cases (per test manifold where a
manifold is involved), evaluates the left- and right-hand sides of one
inequality in vectorised form, and reports violations together with the
worst ratio lhs/rhs and the smallest slack rhs - lhs. A case violates the
bound when ``lhs > rhs + 1e-9``.

The default manifolds are the unit sphere in R^3, the torus with radii
(2, 1) and the unit circle in the plane.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .complex import GeometricComplex
from .degree import OrientedPLMap, degree_at_point, preimage_counts
from .distortion import (SampledMap, compose_distortion, invert_distortion, spectrum_from_distortion,
                         strong_displacement_check)
from .geom import Flat, batch_orthonormalize, batch_sin_largest_angle
from .manifolds import (Circle2D, SphereShell, TestManifold, Torus3D, dist_to_tangent_bounds_check,
                        tangent_variation_check, whitney_angle_bound_check)
from .simplex import (EuclideanSimplex, batch_altitudes, batch_quality, sample_barycentric,
                      trilateration_displacement_bound)

VIOLATION_TOL = 1e-9
CROSS_CHECK_RTOL = 1e-8
CROSS_CHECK_CASES = 50


def default_manifolds():
    return [SphereShell(2, 3, 1.0), Torus3D(2.0, 1.0), Circle2D(1.0)]


@dataclass
class LemmaResult:
    name: str
    description: str
    cases: int
    violations: int
    worst_ratio: float
    worst_slack: float
    seconds: float = 0.0
    per_manifold: dict = field(default_factory=dict)
    cross_checked: int = 0
    route_mismatches: int = 0

    @property
    def passed(self) -> bool:
        return self.violations == 0 and self.route_mismatches == 0 and self.cases > 0

    def to_dict(self) -> dict:
        return {"name": self.name, "description": self.description, "cases": self.cases,
                "violations": self.violations, "worst_ratio": self.worst_ratio,
                "worst_slack": self.worst_slack, "seconds": self.seconds, "passed": self.passed,
                "cross_checked": self.cross_checked, "route_mismatches": self.route_mismatches,
                "per_manifold": self.per_manifold}


class _Tally:
    """Accumulates lhs/rhs arrays over several batches."""

    def __init__(self):
        self.cases = 0
        self.violations = 0
        self.ratio = 0.0
        self.slack = np.inf
        self.per = {}
        self.cross = 0
        self.mismatch = 0

    def cross_check(self, batch_vals, scalar_vals, rtol=CROSS_CHECK_RTOL):
        """Compare vectorised values with an independent scalar computation."""
        a = np.asarray(batch_vals, dtype=float).ravel()
        b = np.asarray(scalar_vals, dtype=float).ravel()
        self.cross += a.size
        self.mismatch += int((~np.isclose(a, b, rtol=rtol, atol=1e-12)).sum())

    def add(self, lhs, rhs, label: str | None = None, count=None, primary: bool = True):
        lhs, rhs = np.broadcast_arrays(np.asarray(lhs, dtype=float), np.asarray(rhs, dtype=float))
        lhs, rhs = lhs.ravel(), rhs.ravel()
        ncase = lhs.size if count is None else int(count)
        bad = int((lhs > rhs + VIOLATION_TOL).sum())
        self.cases += ncase
        self.violations += bad
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(rhs > 0, lhs / rhs, np.where(lhs > VIOLATION_TOL, np.inf, 0.0))
        if r.size and primary:
            self.ratio = max(self.ratio, float(r.max()))
            self.slack = min(self.slack, float((rhs - lhs).min()))
        if label is not None:
            d = self.per.setdefault(label, {"cases": 0, "violations": 0})
            d["cases"] += ncase
            d["violations"] += bad

    def result(self, name, description) -> LemmaResult:
        return LemmaResult(name, description, self.cases, self.violations, self.ratio,
                           self.slack if np.isfinite(self.slack) else 0.0, per_manifold=self.per,
                           cross_checked=self.cross, route_mismatches=self.mismatch)


def _label(M: TestManifold) -> str:
    if isinstance(M, Torus3D):
        return f"torus({M.R:g},{M.r:g})"
    if isinstance(M, Circle2D):
        return f"circle({M.radius:g})"
    return f"sphere({M.radius:g})"


# ---------------------------------------------------------------------------
# shared samplers


def _random_dirs(rng, n, d):
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def _near_points(M: TestManifold, rng, P, dist):
    """Points of M obtained by projecting random offsets of length ``dist`` (< reach)."""
    off = _random_dirs(rng, len(P), M.N) * np.asarray(dist)[:, None]
    T = M.tangent_bases(P)
    off = np.einsum("nij,nj->ni", T, np.einsum("nij,ni->nj", T, off))   # tangential offsets
    nrm = np.linalg.norm(off, axis=1, keepdims=True)
    off = np.where(nrm > 0, off / np.maximum(nrm, 1e-300), 0) * np.asarray(dist)[:, None]
    return M.project(P + off)


def _simplices_on(M: TestManifold, rng, n, L_scale, dim=None, thin_fraction=0.2):
    """Random simplices of dimension ``dim`` (default m) with vertices on M near a base vertex.

    Returns vertex stacks ``(n, dim+1, N)``; vertex 0 is the base point p.
    """
    m = M.m if dim is None else dim
    P0 = M.sample(rng, n)
    T = M.tangent_bases(P0)
    coef = rng.standard_normal((n, m, M.m))
    thin = rng.random(n) < thin_fraction
    if m >= 1:
        squash = np.where(thin, 10.0 ** rng.uniform(-2, -0.5, n), 1.0)
        coef[:, -1, :] = np.where(thin[:, None], coef[:, 0, :] + squash[:, None] * coef[:, -1, :], coef[:, -1, :])
    coef /= np.linalg.norm(coef, axis=2, keepdims=True).max(axis=1, keepdims=True)
    off = np.einsum("nij,nkj->nki", T, coef) * np.asarray(L_scale)[:, None, None]
    Q = M.project((P0[:, None, :] + off).reshape(-1, M.N)).reshape(n, m, M.N)
    return np.concatenate([P0[:, None, :], Q], axis=1)


def _simplex_basis(P):
    return batch_orthonormalize(np.swapaxes(P[:, 1:] - P[:, :1], 1, 2))


def _nondegenerate(P, tmin=1e-6):
    L, _, t = batch_quality(P)
    return (t > tmin) & (L > 0)


# ---------------------------------------------------------------------------
# the sweeps; each returns a _Tally


def sweep_trilateration(n, rng, manifolds):
    """|x - F(x)| <= 3 xi L / t for vertex-fixing xi-distortion maps of an m-simplex (xi <= 1)."""
    tally = _Tally()
    for m in (1, 2, 3):
        k = -(-n // 3)
        V = rng.standard_normal((k, m + 1, m))
        thin = rng.random(k) < 0.3
        V[thin, -1] = V[thin, 0] + 10.0 ** rng.uniform(-2, 0, (thin.sum(), 1)) * (V[thin, -1] - V[thin, 0])
        L, _, t = batch_quality(V)
        good = t > 1e-4
        V, L, t = V[good], L[good], t[good]
        # F(x) = x + delta * prod(lambda) * u fixes the vertices; the gradient of prod(lambda)
        # is sum_i prod_{j != i} lambda_j grad lambda_i, and prod_{j != i} lambda_j <= m^-m
        lip = (1.0 / m) ** m * (1.0 / batch_altitudes(V)).sum(axis=1)
        xi = rng.uniform(0.01, 1.0, len(V))
        delta = xi / lip
        u = _random_dirs(rng, len(V), m)
        s = 24
        lam = sample_barycentric(rng, len(V) * s, m).reshape(len(V), s, m + 1)
        lam = np.concatenate([np.broadcast_to(np.eye(m + 1), (len(V), m + 1, m + 1)), lam], axis=1)
        X = np.einsum("nsk,nkd->nsd", lam, V)
        F = X + (delta[:, None] * lam.prod(axis=2))[..., None] * u[:, None, :]
        disp = np.linalg.norm(F - X, axis=2).max(axis=1)
        bound = 3 * xi * L / t
        tally.add(disp, bound)
        # the sampled distortion never exceeds the analytic one
        ia, ib = np.triu_indices(X.shape[1], 1)
        dx = np.linalg.norm(X[:, ia] - X[:, ib], axis=2)
        df = np.linalg.norm(F[:, ia] - F[:, ib], axis=2)
        with np.errstate(invalid="ignore", divide="ignore"):
            xi_meas = np.nanmax(np.where(dx > 0, np.abs(df - dx) / dx, 0.0), axis=1)
        tally.add(xi_meas, xi, count=0, primary=False)
        idx = np.arange(min(CROSS_CHECK_CASES, len(V)))
        tally.cross_check(bound[idx], [trilateration_displacement_bound(EuclideanSimplex(V[i]), xi[i]) for i in idx])
    return tally


def _random_linear(rng, n, d, xi):
    """Linear maps U diag(s) V^T with singular values in [1 - xi, 1 + xi], one hitting an end."""
    U = np.linalg.qr(rng.standard_normal((n, d, d)))[0]
    W = np.linalg.qr(rng.standard_normal((n, d, d)))[0]
    s = 1 + xi[:, None] * rng.uniform(-1, 1, (n, d))
    s[:, 0] = 1 + xi * np.where(rng.random(n) < 0.5, -1.0, 1.0)
    return U @ (s[..., None] * np.swapaxes(W, 1, 2))


def _linear_distortion(A):
    s = np.linalg.svd(A, compute_uv=False)
    return np.abs(s - 1).max(axis=1)


def sweep_inverse_composition(n, rng, manifolds):
    """Inverse of a xi-distortion map is xi/(1-xi); compositions are prod(1+xi_i) - 1."""
    tally = _Tally()
    d = rng.integers(2, 5)
    xi = rng.uniform(0, 0.95, n)
    A = _random_linear(rng, n, d, xi)
    tally.add(_linear_distortion(np.linalg.inv(A)), xi / (1 - xi))
    k = 3
    xis = rng.uniform(0, 0.5, (n, k))
    prod = np.broadcast_to(np.eye(d), (n, d, d)).copy()
    for i in range(k):
        prod = _random_linear(rng, n, d, xis[:, i]) @ prod
    tally.add(_linear_distortion(prod), np.prod(1 + xis, axis=1) - 1)
    # the closed forms agree with the nonempty-subset sum and the scalar helpers
    for row in xis[:CROSS_CHECK_CASES]:
        subset = sum(np.prod([row[i] for i in W]) for r in range(1, k + 1) for W in combinations(range(k), r))
        tally.cross_check([np.prod(1 + row) - 1, row[0] / (1 - row[0])],
                          [compose_distortion(row), invert_distortion(row[0])])
        tally.cross_check([subset], [compose_distortion(row)])
    return tally


def sweep_differential_spectrum(n, rng, manifolds):
    """|s_i(dF_x) - 1| <= xi for a differentiable xi-distortion map (sampled xi)."""
    tally = _Tally()
    m = 2
    A = _random_linear(rng, n, m, rng.uniform(0, 0.3, n))
    W = rng.standard_normal((n, m, m))
    b = rng.uniform(0, 2 * np.pi, (n, m))
    eps = rng.uniform(0, 0.1, n)

    def F(X):          # X (n, s, m)
        return np.einsum("nij,nsj->nsi", A, X) + eps[:, None, None] * np.sin(np.einsum("nij,nsj->nsi", W, X) + b[:, None, :])

    x0 = rng.uniform(-1, 1, (n, m))
    J = A + eps[:, None, None] * np.cos(np.einsum("nij,nj->ni", W, x0) + b)[..., None] * W
    _, s, Vt = np.linalg.svd(J)
    h = 1e-6
    probes = [x0[:, None, :]]
    probes += [x0[:, None, :] + h * Vt[:, i][:, None, :] for i in range(m)]
    X = np.concatenate(probes + [rng.uniform(-1, 1, (n, 16, m))], axis=1)
    FX = F(X)
    ia, ib = np.triu_indices(X.shape[1], 1)
    dx = np.linalg.norm(X[:, ia] - X[:, ib], axis=2)
    df = np.linalg.norm(FX[:, ia] - FX[:, ib], axis=2)
    xi = (np.abs(df - dx) / dx).max(axis=1)
    # a finite-difference probe of length h agrees with the differential to O(h |d2F|)
    curv = eps * np.linalg.norm(W, axis=(1, 2)) ** 2
    tally.add(np.abs(s - 1).max(axis=1), xi + h * curv)
    # finite-difference spectrum of the same map agrees with the analytic differential
    for i in range(min(CROSS_CHECK_CASES, n)):
        def f(Z, i=i):
            return Z @ A[i].T + eps[i] * np.sin(Z @ W[i].T + b[i])
        fd = spectrum_from_distortion(SampledMap(x0[i][None], f), x0[i], h=1e-5).singular_values
        tally.cross_check(s[i], fd, rtol=1e-6)
    return tally


def sweep_chord_tangent(n, rng, manifolds):
    """sin angle([x,y], T_x) <= |x-y| / (2 rch(x)) and dist(y, T_x) <= |x-y|^2 / (2 rch(x))."""
    tally = _Tally()
    for M in manifolds:
        X = M.sample(rng, n)
        near = rng.random(n) < 0.6
        dist = M.reach * 10.0 ** rng.uniform(-3, -0.05, n)
        Y = M.sample(rng, n)
        Y[near] = _near_points(M, rng, X[near], dist[near])
        w = Y - X
        d = np.linalg.norm(w, axis=1)
        keep = d > 1e-12
        X, w, d = X[keep], w[keep], d[keep]
        T = M.tangent_bases(X)
        resid = w - np.einsum("nij,nj->ni", T, np.einsum("nij,ni->nj", T, w))
        r = np.linalg.norm(resid, axis=1)
        rch = M.local_reach(X)
        tally.add(r / d, d / (2 * rch), _label(M))
        tally.add(r, d * d / (2 * rch), _label(M), count=0)
        Yk = Y[keep]
        for i in range(min(CROSS_CHECK_CASES, len(X))):
            tally.cross_check([r[i] / d[i], d[i] / (2 * rch[i]), r[i], d[i] ** 2 / (2 * rch[i])],
                              dist_to_tangent_bounds_check(M, X[i], Yk[i]))
    return tally


def sweep_tangent_variation(n, rng, manifolds):
    """sin angle(T_x, T_y) <= |x-y| / R_rch and angle <= pi |x-y| / (2 R_rch) on a ball of radius < R_rch."""
    tally = _Tally()
    for M in manifolds:
        X = M.sample(rng, n)
        dist = M.reach * 10.0 ** rng.uniform(-3, np.log10(0.9), n)
        Y = _near_points(M, rng, X, dist)
        c = 0.5 * (X + Y)
        r = 0.5 * np.linalg.norm(Y - X, axis=1)
        md = M.medial_distance(c)
        R = np.maximum(M.reach, md - r)
        ok = (md >= r) & (r < R)
        X, Y, R = X[ok], Y[ok], R[ok]
        d = np.linalg.norm(Y - X, axis=1)
        s = batch_sin_largest_angle(M.tangent_bases(X), M.tangent_bases(Y))
        tally.add(s, d / R, _label(M))
        tally.add(np.arcsin(np.clip(s, 0, 1)), np.pi * d / (2 * R), _label(M), count=0)
        for i in range(min(CROSS_CHECK_CASES, len(X))):
            tv = tangent_variation_check(M, X[i], Y[i], R[i])
            tally.cross_check([s[i], d[i] / R[i]], [tv.sin_angle, tv.sin_bound])
    return tally


def sweep_whitney_angle(n, rng, manifolds):
    """sin angle(sigma, K) <= 2 eta / (t L) for a j-simplex within eta of a k-flat, j <= k."""
    tally = _Tally()
    for N in (3, 4, 5):
        k_cases = -(-n // 3)
        kdim = int(rng.integers(1, N))
        j = int(rng.integers(1, kdim + 1))
        BK = np.linalg.qr(rng.standard_normal((k_cases, N, kdim)))[0]
        base = rng.standard_normal((k_cases, N))
        coef = rng.standard_normal((k_cases, j + 1, kdim))
        thin = rng.random(k_cases) < 0.3
        coef[thin, -1] = coef[thin, 0] + 10.0 ** rng.uniform(-2, 0, (thin.sum(), 1)) * (coef[thin, -1] - coef[thin, 0])
        eta_scale = 10.0 ** rng.uniform(-4, -0.5, k_cases)
        P = base[:, None, :] + np.einsum("nij,nkj->nki", BK, coef)
        P = P + eta_scale[:, None, None] * rng.standard_normal((k_cases, j + 1, N))
        L, _, t = batch_quality(P)
        good = t > 1e-3
        P, L, t, BK, base = P[good], L[good], t[good], BK[good], base[good]
        D = P - base[:, None, :]
        resid = D - np.einsum("nij,nkj->nki", BK, np.einsum("nki,nij->nkj", D, BK))
        eta = np.linalg.norm(resid, axis=2).max(axis=1)
        s = batch_sin_largest_angle(_simplex_basis(P), BK)
        tally.add(s, 2 * eta / (t * L))
        for i in range(min(CROSS_CHECK_CASES, len(P))):
            tally.cross_check([s[i], 2 * eta[i] / (t[i] * L[i])],
                              whitney_angle_bound_check(EuclideanSimplex(P[i]), Flat(base[i], BK[i])))
    return tally


def sweep_simplex_proximity(n, rng, manifolds):
    """d_M(x) < 2 L^2 / R_rch, dist(y, T_x_check) < 2 L^2 / R_rch and |p - x_check| < 2L."""
    tally = _Tally()
    for M in manifolds:
        R = M.reach
        L_scale = R * 10.0 ** rng.uniform(-3, np.log10(0.4), n)
        P = _simplices_on(M, rng, n, L_scale)
        L = batch_quality(P)[0]
        ok = L < M.lfs(P[:, 0]) * 0.999
        P, L = P[ok], L[ok]
        lam = sample_barycentric(rng, len(P), M.m)
        X = np.einsum("nk,nkd->nd", lam, P)
        Xc = M.project(X)
        dM = np.linalg.norm(X - Xc, axis=1)
        T = M.tangent_bases(Xc)
        W = P - Xc[:, None, :]
        resid = W - np.einsum("nij,nkj->nki", T, np.einsum("nki,nij->nkj", W, T))
        dT = np.linalg.norm(resid, axis=2).max(axis=1)
        tally.add(dM, 2 * L * L / R, _label(M))
        tally.add(dT, 2 * L * L / R, _label(M), count=0)
        tally.add(np.linalg.norm(W, axis=2).max(axis=1), 2 * L, _label(M), count=0)
    return tally


def sweep_simplex_tangent_angle(n, rng, manifolds):
    """sin angle(sigma, T_p) <= L / (t rch(p)); with the ball hypothesis sin angle(sigma, T_x_check) <= 3L / (t R_rch)."""
    tally = _Tally()
    for M in manifolds:
        L_scale = M.reach * 10.0 ** rng.uniform(-3, np.log10(0.2), n)
        P = _simplices_on(M, rng, n, L_scale)
        L, _, t = batch_quality(P)
        good = t > 1e-4
        P, L, t = P[good], L[good], t[good]
        B = _simplex_basis(P)
        p = P[:, 0]
        s1 = batch_sin_largest_angle(B, M.tangent_bases(p))
        tally.add(s1, L / (t * M.local_reach(p)), _label(M))
        lam = sample_barycentric(rng, len(P), M.m)
        Xc = M.project(np.einsum("nk,nkd->nd", lam, P))
        # ball centred at p through every projection of the simplex: |p - x_check| < 2L
        r = 2 * L
        R = np.maximum(M.reach, M.medial_distance(p) - r)
        ok = (M.medial_distance(p) >= r) & (r < R)
        s2 = batch_sin_largest_angle(B[ok], M.tangent_bases(Xc[ok]))
        tally.add(s2, 3 * L[ok] / (t[ok] * R[ok]), _label(M), count=0)
    return tally


def sweep_chart_projection(n, rng, manifolds):
    """Orthogonal projection to T_p restricted to B(p, rho R_rch) on M distorts by at most 4 rho^2."""
    tally = _Tally()
    for M in manifolds:
        R = M.reach
        p = M.sample(rng, n)
        rho = rng.uniform(0.001, 0.499, n)
        r = rho * R

        def inside(k):
            dist = r * np.sqrt(rng.uniform(0, 1, n)) * 0.999
            Q = _near_points(M, rng, p, dist)
            return Q, np.linalg.norm(Q - p, axis=1) <= r

        X, okx = inside(0)
        Y, oky = inside(1)
        ok = okx & oky
        T = M.tangent_bases(p[ok])
        dx = np.linalg.norm(X[ok] - Y[ok], axis=1)
        dp = np.linalg.norm(np.einsum("nij,ni->nj", T, X[ok] - Y[ok]), axis=1)
        keep = dx > 1e-12
        tally.add(np.abs(dp - dx)[keep] / dx[keep], 4 * rho[ok][keep] ** 2, _label(M))
    return tally


def sweep_simplex_projection(n, rng, manifolds):
    """Projection to T_p restricted to sigma distorts by at most (L / (t rch(p)))^2 when L < t rch(p)."""
    tally = _Tally()
    for M in manifolds:
        L_scale = M.reach * 10.0 ** rng.uniform(-3, np.log10(0.3), n)
        P = _simplices_on(M, rng, n, L_scale)
        L, _, t = batch_quality(P)
        rch = M.local_reach(P[:, 0])
        ok = (t > 1e-4) & (L < t * rch)
        P, L, t, rch = P[ok], L[ok], t[ok], rch[ok]
        # exact distortion of the linear map aff(sigma) -> T_p: 1 - smallest singular value
        B = _simplex_basis(P)
        T = M.tangent_bases(P[:, 0])
        s = np.linalg.svd(np.einsum("nij,nik->njk", T, B), compute_uv=False)
        exact = 1 - s.min(axis=1)
        tally.add(exact, (L / (t * rch)) ** 2, _label(M))
        # sampled pairs never exceed the exact value
        lam = sample_barycentric(rng, 2 * len(P), M.m).reshape(len(P), 2, -1)
        X = np.einsum("nsk,nkd->nsd", lam, P)
        w = X[:, 0] - X[:, 1]
        dx = np.linalg.norm(w, axis=1)
        dp = np.linalg.norm(np.einsum("nij,ni->nj", T, w), axis=1)
        keep = dx > 1e-12
        tally.add(np.abs(dp - dx)[keep] / dx[keep], exact[keep] + 1e-12, _label(M), count=0, primary=False)
    return tally


def _tube_points(M, rng, n, a_frac):
    """Points at distance <= a from M along random normal directions, with their feet."""
    F = M.sample(rng, n)
    T = M.tangent_bases(F)
    g = rng.standard_normal((n, M.N))
    nrm = g - np.einsum("nij,nj->ni", T, np.einsum("nij,ni->nj", T, g))
    nrm /= np.linalg.norm(nrm, axis=1, keepdims=True)
    a = a_frac * M.reach
    return F + (a * rng.uniform(-1, 1, n))[:, None] * nrm, F


def sweep_projection_lipschitz(n, rng, manifolds):
    """|y_check - x_check| <= |y - x| / (1 - a / R_rch) for points within a < R_rch of M."""
    tally = _Tally()
    for M in manifolds:
        a_frac = rng.uniform(0.0, 0.95, n)
        X, Fx = _tube_points(M, rng, n, a_frac)
        near = rng.random(n) < 0.7
        Y, Fy = _tube_points(M, rng, n, a_frac)
        step = M.reach * 10.0 ** rng.uniform(-4, 0, n)
        Y[near] = X[near] + step[near, None] * _random_dirs(rng, near.sum(), M.N)
        Xc, Yc = M.project(X), M.project(Y)
        a = np.maximum(np.linalg.norm(X - Xc, axis=1), np.linalg.norm(Y - Yc, axis=1))
        R = np.minimum(M.local_reach(Xc), M.local_reach(Yc))
        ok = a < R
        dxy = np.linalg.norm(Y - X, axis=1)
        tally.add(np.linalg.norm(Yc - Xc, axis=1)[ok], (dxy / (1 - a / R))[ok], _label(M))
    return tally


def sweep_simplex_closest_point(n, rng, manifolds):
    """pi_M restricted to sigma distorts by at most 12 L^2 / (t^2 R_rch^2) when L < t R_rch / 3."""
    tally = _Tally()
    for M in manifolds:
        L_scale = M.reach * 10.0 ** rng.uniform(-3, np.log10(0.25), n)
        P = _simplices_on(M, rng, n, L_scale)
        L, _, t = batch_quality(P)
        p = P[:, 0]
        r = 2 * L                               # every projection lies within 2L of p
        R = np.maximum(M.reach, M.medial_distance(p) - r)
        ok = (t > 1e-4) & (L < t * R / 3) & (r < R) & (M.medial_distance(p) >= r)
        P, L, t, R = P[ok], L[ok], t[ok], R[ok]
        s = 6
        lam = sample_barycentric(rng, len(P) * s, M.m).reshape(len(P), s, -1)
        X = np.einsum("nsk,nkd->nsd", lam, P)
        Xc = M.project(X.reshape(-1, M.N)).reshape(X.shape)
        ia, ib = np.triu_indices(s, 1)
        dx = np.linalg.norm(X[:, ia] - X[:, ib], axis=2)
        dc = np.linalg.norm(Xc[:, ia] - Xc[:, ib], axis=2)
        with np.errstate(invalid="ignore", divide="ignore"):
            xi = np.nanmax(np.where(dx > 1e-12, np.abs(dc - dx) / dx, 0.0), axis=1)
        tally.add(xi, 12 * L ** 2 / (t ** 2 * R ** 2), _label(M))
    return tally


def sweep_almost_identity(n, rng, manifolds):
    """|F(x) - x| <= xi |x - p| when F fixes p and ||dF - I|| <= xi on a convex set."""
    tally = _Tally()
    for m in (1, 2, 3):
        k = -(-n // 3)
        V = rng.standard_normal((k, m + 1, m))
        p = V[:, 0]
        Amat = rng.standard_normal((k, m, m))
        W = rng.standard_normal((k, m, m))
        b = rng.uniform(0, 2 * np.pi, (k, m))
        # G(x) = A sin(W x + b): ||dG|| <= ||A|| ||W||
        bound = np.linalg.norm(Amat, ord=2, axis=(1, 2)) * np.linalg.norm(W, ord=2, axis=(1, 2))
        xi = rng.uniform(0.001, 0.9, k)
        scale = xi / bound

        def G(X):
            return scale[:, None, None] * np.einsum("nij,nsj->nsi", Amat, np.sin(np.einsum("nij,nsj->nsi", W, X) + b[:, None, :]))

        s = 16
        lam = sample_barycentric(rng, k * s, m).reshape(k, s, m + 1)
        X = np.einsum("nsk,nkd->nsd", lam, V)
        FX = X + G(X) - G(p[:, None, :])
        disp = np.linalg.norm(FX - X, axis=2)
        lhs_ok = disp <= xi[:, None] * np.linalg.norm(X - p[:, None, :], axis=2) + VIOLATION_TOL
        tally.add(disp, xi[:, None] * np.linalg.norm(X - p[:, None, :], axis=2))
        for i in range(min(CROSS_CHECK_CASES // 3, k)):
            def f(Z, i=i):
                g = lambda W_: scale[i] * np.sin(W_ @ W[i].T + b[i]) @ Amat[i].T
                return Z + g(Z) - g(p[i][None])
            ok = strong_displacement_check(SampledMap(None, f), EuclideanSimplex(V[i]), 0, xi[i], samples=200, seed=i)
            tally.cross_check([float(lhs_ok[i].all())], [float(ok)])
    return tally


# ----------------------------------------------------------------------- degree


def _fan(k):
    ang = 2 * np.pi * np.arange(k) / k
    V = np.concatenate([[[0.0, 0.0]], np.stack([np.cos(ang), np.sin(ang)], 1)])
    T = np.array([[0, 1 + i, 1 + (i + 1) % k] for i in range(k)])
    return V, T


def _signed_counts(img, T, src_sign, Y):
    """Signed and unsigned preimage counts of Y (n, 2) under PL maps with images img (n, nv, 2)."""
    n = len(Y)
    signed = np.zeros(n, dtype=np.int64)
    total = np.zeros(n, dtype=np.int64)
    for tri, ss in zip(T, src_sign):
        A = img[:, tri]
        e1, e2 = A[:, 1] - A[:, 0], A[:, 2] - A[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        r = Y - A[:, 0]
        with np.errstate(invalid="ignore", divide="ignore"):
            c1 = (r[:, 0] * e2[:, 1] - r[:, 1] * e2[:, 0]) / det
            c2 = (e1[:, 0] * r[:, 1] - e1[:, 1] * r[:, 0]) / det
        inside = (c1 > 0) & (c2 > 0) & (c1 + c2 < 1)
        signed += inside * (np.sign(det) * ss).astype(np.int64)
        total += inside
    return signed, total


def _winding(poly, Y):
    """Winding number of closed polygons poly (n, k, 2) around Y (n, 2)."""
    d = poly - Y[:, None, :]
    a = np.arctan2(d[..., 1], d[..., 0])
    da = np.diff(np.concatenate([a, a[:, :1]], axis=1), axis=1)
    da = (da + np.pi) % (2 * np.pi) - np.pi
    return np.rint(da.sum(axis=1) / (2 * np.pi)).astype(np.int64)


def _skeleton_clear(img, T, Y, tol):
    """True where Y is farther than tol from every image edge."""
    edges = {tuple(sorted(e)) for tri in T for e in combinations(tri, 2)}
    dmin = np.full(len(Y), np.inf)
    for a, b in edges:
        A, B = img[:, a], img[:, b]
        d = B - A
        dd = np.einsum("ij,ij->i", d, d)
        s = np.clip(np.einsum("ij,ij->i", Y - A, d) / np.maximum(dd, 1e-300), 0, 1)
        dmin = np.minimum(dmin, np.linalg.norm(Y - A - s[:, None] * d, axis=1))
    return dmin > tol


def sweep_degree_preimages(n, rng, manifolds):
    """Signed preimage count equals the boundary winding number for PL maps off the skeleton image."""
    tally = _Tally()
    k = 7
    V, T = _fan(k)
    E1, E2 = V[T[:, 1]] - V[T[:, 0]], V[T[:, 2]] - V[T[:, 0]]
    src_sign = np.sign(E1[:, 0] * E2[:, 1] - E1[:, 1] * E2[:, 0]).astype(int)
    done = 0
    while done < n:
        b = n
        img = V[None] + rng.normal(0, rng.uniform(0.05, 1.2, b)[:, None, None], (b, len(V), 2))
        Y = rng.uniform(-2.2, 2.2, (b, 2))
        clear = _skeleton_clear(img, T, Y, 1e-8)
        signed, _ = _signed_counts(img[clear], T, src_sign, Y[clear])
        wind = _winding(img[clear][:, 1:], Y[clear])
        tally.add(np.abs(signed - wind).astype(float), 0.0)
        src = GeometricComplex(V, T)
        ic, Yc = img[clear], Y[clear]
        for i in range(min(CROSS_CHECK_CASES, len(Yc)) if done == 0 else 0):
            tally.cross_check([signed[i]], [degree_at_point(OrientedPLMap(src, ic[i]), Yc[i]).value])
        done += int(clear.sum())
    return tally


def sweep_degree_local_constancy(n, rng, manifolds):
    """Simplexwise positive maps: preimage counts agree at points joined by a path avoiding the boundary image."""
    tally = _Tally()
    k = 9
    V, T = _fan(k)
    done = 0
    while done < n:
        b = n
        mult = rng.integers(1, 4, b)
        gaps = rng.uniform(0.2, 1.0, (b, k))
        ang = np.cumsum(gaps, axis=1)
        ang = ang / ang[:, -1:] * 2 * np.pi * mult[:, None]
        rad = rng.uniform(0.5, 1.5, (b, k))
        img = np.concatenate([rng.normal(0, 0.05, (b, 1, 2)),
                              np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=2)], axis=1)
        e1 = img[:, T[:, 1]] - img[:, T[:, 0]]
        e2 = img[:, T[:, 2]] - img[:, T[:, 0]]
        dets = e1[..., 0] * e2[..., 1] - e1[..., 1] * e2[..., 0]
        img = img[(dets > 0).all(axis=1)]
        m = len(img)
        Y1 = rng.uniform(-1.7, 1.7, (m, 2))
        Y2 = Y1 + rng.normal(0, 0.3, (m, 2))
        bnd = img[:, 1:]
        A, B = bnd, np.roll(bnd, -1, axis=1)
        # segment Y1-Y2 must avoid every boundary image edge (with margin)
        cross = np.zeros(m, dtype=bool)
        for j in range(k):
            cross |= _segments_close(Y1, Y2, A[:, j], B[:, j], 1e-6)
        ok = ~cross & _skeleton_clear(img, T, Y1, 1e-8) & _skeleton_clear(img, T, Y2, 1e-8)
        src = np.ones(len(T), dtype=int)
        c1, u1 = _signed_counts(img[ok], T, src, Y1[ok])
        c2, u2 = _signed_counts(img[ok], T, src, Y2[ok])
        fan = GeometricComplex(V, T)
        io, Yo = img[ok], Y1[ok]
        for i in range(min(CROSS_CHECK_CASES, len(Yo)) if done == 0 else 0):
            tally.cross_check([u1[i]], preimage_counts(OrientedPLMap(fan, io[i]), Yo[i:i + 1]))
        tally.add(np.abs(u1 - u2).astype(float), 0.0)
        tally.add(np.abs(c1 - u1).astype(float), 0.0, count=0)
        done += int(ok.sum())
    return tally


def _segments_close(P1, P2, Q1, Q2, tol):
    """Whether segments P1P2 and Q1Q2 intersect or come within tol (vectorised)."""
    def orient(a, b, c):
        return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])

    o1, o2 = orient(P1, P2, Q1), orient(P1, P2, Q2)
    o3, o4 = orient(Q1, Q2, P1), orient(Q1, Q2, P2)
    inter = (o1 * o2 <= 0) & (o3 * o4 <= 0)

    def pt_seg(X, A, B):
        d = B - A
        s = np.clip(np.einsum("ij,ij->i", X - A, d) / np.maximum(np.einsum("ij,ij->i", d, d), 1e-300), 0, 1)
        return np.linalg.norm(X - A - s[:, None] * d, axis=1)

    near = np.minimum.reduce([pt_seg(P1, Q1, Q2), pt_seg(P2, Q1, Q2), pt_seg(Q1, P1, P2), pt_seg(Q2, P1, P2)])
    return inter | (near < tol)


# ---------------------------------------------------------------------------

SWEEPS = {
    "trilateration": sweep_trilateration,
    "inverse-composition": sweep_inverse_composition,
    "differential-spectrum": sweep_differential_spectrum,
    "chord-tangent": sweep_chord_tangent,
    "tangent-variation": sweep_tangent_variation,
    "whitney-angle": sweep_whitney_angle,
    "simplex-proximity": sweep_simplex_proximity,
    "simplex-tangent-angle": sweep_simplex_tangent_angle,
    "chart-projection": sweep_chart_projection,
    "simplex-projection": sweep_simplex_projection,
    "projection-lipschitz": sweep_projection_lipschitz,
    "simplex-closest-point": sweep_simplex_closest_point,
    "almost-identity": sweep_almost_identity,
    "degree-preimages": sweep_degree_preimages,
    "degree-local-constancy": sweep_degree_local_constancy,
}


def available() -> list:
    return list(SWEEPS)


def run_sweep(name: str, n: int = 10_000, seed: int = 0, manifolds=None) -> LemmaResult:
    if name not in SWEEPS:
        raise KeyError(f"unknown lemma {name!r}; available: {', '.join(SWEEPS)}")
    fn = SWEEPS[name]
    manifolds = default_manifolds() if manifolds is None else manifolds
    rng = np.random.default_rng(np.random.SeedSequence([seed, list(SWEEPS).index(name)]))
    t0 = time.perf_counter()
    # draw extra cases so that filtering for hypotheses still leaves at least n
    tally = _Tally()
    budget = n
    for _ in range(8):
        _merge(tally, fn(budget, rng, manifolds))
        short = _shortfall(tally, n)
        if short <= 0:
            break
        budget = max(short * 2, 100)
    res = tally.result(name, (fn.__doc__ or "").strip().splitlines()[0])
    res.seconds = time.perf_counter() - t0
    return res


def _merge(into: _Tally, part: _Tally):
    into.cases += part.cases
    into.violations += part.violations
    into.ratio = max(into.ratio, part.ratio)
    into.slack = min(into.slack, part.slack)
    into.cross += part.cross
    into.mismatch += part.mismatch
    for k, v in part.per.items():
        d = into.per.setdefault(k, {"cases": 0, "violations": 0})
        d["cases"] += v["cases"]
        d["violations"] += v["violations"]


def _shortfall(tally: _Tally, n: int) -> int:
    if tally.per:
        return max(n - v["cases"] for v in tally.per.values())
    return n - tally.cases


def run_all(n: int = 10_000, seed: int = 0, names=None) -> list:
    return [run_sweep(k, n, seed) for k in (names or SWEEPS)]


def format_table(results) -> str:
    lines = [f"{'lemma':<24}{'cases':>9}{'viol':>6}{'worst lhs/rhs':>15}{'min slack':>13}{'sec':>7}  status"]
    for r in results:
        lines.append(f"{r.name:<24}{r.cases:>9}{r.violations:>6}{r.worst_ratio:>15.6g}{r.worst_slack:>13.4g}"
                     f"{r.seconds:>7.2f}  {'pass' if r.passed else 'FAIL'}")
    return "\n".join(lines)
