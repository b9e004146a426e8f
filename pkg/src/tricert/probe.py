"""Empirical cross-checks run against Certified meshes.

* ``keystone_check``: sampled distortion of every chart map F_p on every
  star simplex, compared with the analytic chart bound for that vertex.
* ``injectivity_probe`` / ``surjectivity_probe``: independent sampled
  evidence that the closest-point projection restricted to the carrier
  is a homeomorphism onto the manifold.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np
from scipy.spatial import cKDTree

from . import thread_cap
from .atlas import AtlasBatch, analyse_stars, chart_distortion_arrays, chart_preconditions
from .complex import GeometricComplex
from .manifolds import GlobalReach, LocalLfs, TestManifold
from .simplex import sample_barycentric


@numba.njit(cache=True)
def _corner_distortion(Xh, Fh):
    """Largest relative distance change over all sample pairs of each corner chart."""
    c, s, m = Xh.shape
    out = np.zeros(c)
    for k in range(c):
        worst = 0.0
        for i in range(s):
            for j in range(i + 1, s):
                dx = 0.0
                df = 0.0
                for a in range(m):
                    u = Xh[k, i, a] - Xh[k, j, a]
                    v = Fh[k, i, a] - Fh[k, j, a]
                    dx += u * u
                    df += v * v
                if dx > 0.0:
                    dx = np.sqrt(dx)
                    r = abs(np.sqrt(df) - dx) / dx
                    if r > worst:
                        worst = r
        out[k] = worst
    return out


def _samples_for_pairs(pairs: int) -> int:
    s = 2
    while s * (s - 1) // 2 < pairs:
        s += 1
    return s


@dataclass
class KeystoneReport:
    passed: bool
    n_charts: int
    n_corner_simplices: int
    pairs_per_simplex: int
    violations: list                 # (vertex, top, empirical, certified)
    worst_ratio: float               # max empirical / certified
    uncertified: int                 # charts whose distortion hypotheses fail
    empirical: np.ndarray = field(repr=False)
    certified: np.ndarray = field(repr=False)


def keystone_check(M: TestManifold, A: GeometricComplex, policy=None, pairs_per_simplex: int = 1000,
                   seed: int = 0, batch: AtlasBatch | None = None, chunk: int = 20_000,
                   vertices=None) -> KeystoneReport:
    """Empirical distortion of F_p on each star simplex against the certified chart bound.

    Samples are drawn once per top simplex (shared by its m+1 charts) and
    projected to the manifold once; every pair of samples contributes.
    Charts whose distortion hypotheses fail have no certified bound
    (``certified = inf``); they are counted and make the check fail.
    """
    policy = GlobalReach() if policy is None else policy
    if batch is None:
        batch = analyse_stars(M, A)
    m = A.dimension_m
    V, S = A.vertices, A.simplices
    R = policy.R_rch(M, V)
    cap = policy.chart_radius_cap(M, V) if isinstance(policy, LocalLfs) else None
    ok = np.ones(A.n_vertices, dtype=bool)
    for _, lhs, rhs, strict in chart_preconditions(batch.L0, batch.t0, R, cap):
        ok &= (lhs < rhs) if strict else (lhs <= rhs)
    certified = np.where(ok, chart_distortion_arrays(batch.L0, batch.t0, R)["xi_total"], np.inf)
    s = _samples_for_pairs(pairs_per_simplex)
    rng = np.random.default_rng(seed)
    lam = np.concatenate([np.eye(m + 1), sample_barycentric(rng, s - (m + 1), m)])
    TB = batch.tangent_bases
    indptr, tops, corner = A.vertex_top_csr
    owner = np.repeat(np.arange(A.n_vertices), np.diff(indptr))
    if vertices is not None:
        keep = np.isin(owner, np.asarray(vertices))
        owner, tops = owner[keep], tops[keep]
    order = np.argsort(tops, kind="stable")
    owner, tops = owner[order], tops[order]
    empirical = np.zeros(A.n_vertices)
    violations = []
    worst_ratio = 0.0
    for a in range(0, len(tops), chunk):
        te, pv = tops[a:a + chunk], owner[a:a + chunk]
        ut, inv = np.unique(te, return_inverse=True)
        X = np.einsum("sk,tkn->tsn", lam, V[S[ut]])
        PX = M.project(X.reshape(-1, X.shape[2])).reshape(X.shape)
        base = V[pv][:, None, :]
        Xh = np.einsum("csn,cnm->csm", X[inv] - base, TB[pv])
        Fh = np.einsum("csn,cnm->csm", PX[inv] - base, TB[pv])
        emp = _corner_distortion(np.ascontiguousarray(Xh), np.ascontiguousarray(Fh))
        np.maximum.at(empirical, pv, emp)
        cert = certified[pv]
        bad = np.flatnonzero(emp > cert)
        violations += [(int(pv[i]), int(te[i]), float(emp[i]), float(cert[i])) for i in bad[:1000]]
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(cert > 0, emp / cert, np.where(emp > 0, np.inf, 0.0))
        worst_ratio = max(worst_ratio, float(r.max()) if r.size else 0.0)
    charts = np.unique(owner)
    uncertified = int((~ok[charts]).sum())
    return KeystoneReport(not violations and uncertified == 0, int(charts.size), len(tops), s * (s - 1) // 2,
                          violations, worst_ratio, uncertified, empirical, certified)


# ---------------------------------------------------------------------------
# homeomorphism probes


@dataclass
class InjectivityReport:
    passed: bool
    pairs: int
    collisions: list                 # (x, y) domain points whose images nearly coincide
    min_image_over_domain: float     # smallest |H(x) - H(y)| / |x - y| over sampled pairs


def _sample_carrier(A: GeometricComplex, rng, n: int):
    t = rng.integers(0, A.n_top, n)
    lam = sample_barycentric(rng, n, A.dimension_m)
    return np.einsum("nk,nkd->nd", lam, A.simplex_points(t)), t


def injectivity_probe(M: TestManifold, A: GeometricComplex, pairs: int = 100_000, seed: int = 0,
                      near_fraction: float = 0.5, image_tol: float = 1e-9,
                      domain_tol: float = 1e-6, chunk: int = 50_000) -> InjectivityReport:
    """Sampled injectivity of H = pi_M restricted to the carrier.

    Half the pairs are independent uniform samples; the other half pair a
    sample with a point drawn from a nearby top simplex, which is where a
    fold would show up. A collision is a pair whose images are closer than
    ``image_tol`` while the domain points are ``domain_tol`` or more apart.
    """
    rng = np.random.default_rng(seed)
    cent = A.simplex_points().mean(axis=1)
    tree = cKDTree(cent)
    k = min(12, A.n_top)
    collisions = []
    worst = np.inf
    done = 0
    while done < pairs:
        n = min(chunk, pairs - done)
        X, tx = _sample_carrier(A, rng, n)
        n_near = int(round(n * near_fraction))
        Y, _ = _sample_carrier(A, rng, n)
        if n_near:
            _, nb = tree.query(cent[tx[:n_near]], k=k, workers=thread_cap())
            nb = np.atleast_2d(nb)
            ty = nb[np.arange(n_near), rng.integers(0, k, n_near)]
            lam = sample_barycentric(rng, n_near, A.dimension_m)
            Y[:n_near] = np.einsum("nk,nkd->nd", lam, A.simplex_points(ty))
        HX, HY = M.project(X), M.project(Y)
        dd = np.linalg.norm(X - Y, axis=1)
        dh = np.linalg.norm(HX - HY, axis=1)
        bad = np.flatnonzero((dh < image_tol) & (dd >= domain_tol))
        collisions += [(X[i].tolist(), Y[i].tolist()) for i in bad[:100]]
        pos = dd > domain_tol
        if pos.any():
            worst = min(worst, float((dh[pos] / dd[pos]).min()))
        done += n
    return InjectivityReport(not collisions, pairs, collisions, worst)


@dataclass
class SurjectivityReport:
    passed: bool
    points: int
    failures: list                   # manifold points with no preimage found
    max_residual: float


def _invert_in_simplices(M: TestManifold, P: np.ndarray, Y: np.ndarray, iters: int = 30,
                         h: float = 1e-6, tol: float = 1e-12):
    """Solve pi_M(sum lam_i P_i) = Y for barycentric lam by Gauss-Newton in the tangent frame at Y."""
    n, k, N = P.shape
    m = k - 1
    TY = M.tangent_bases(Y)
    E = P[:, 1:] - P[:, :1]                                      # (n, m, N)
    coef = np.einsum("nmd,nd->nm", E, Y - P[:, 0])
    G = np.einsum("nid,njd->nij", E, E)
    c = np.linalg.solve(G, coef[..., None])[..., 0]
    for _ in range(iters):
        X = P[:, 0] + np.einsum("nm,nmd->nd", c, E)
        r = np.einsum("nd,ndm->nm", M.project(X) - Y, TY)
        J = np.empty((n, m, m))
        for i in range(m):
            fp = np.einsum("nd,ndm->nm", M.project(X + h * E[:, i]), TY)
            fm = np.einsum("nd,ndm->nm", M.project(X - h * E[:, i]), TY)
            J[:, :, i] = (fp - fm) / (2 * h)
        dc = np.linalg.solve(J, r[..., None])[..., 0]
        c = c - dc
        if np.abs(dc).max() < tol:
            break
    X = P[:, 0] + np.einsum("nm,nmd->nd", c, E)
    lam = np.concatenate([1 - c.sum(axis=1, keepdims=True), c], axis=1)
    res = np.linalg.norm(M.project(X) - Y, axis=1)
    return lam, res, X


def surjectivity_probe(M: TestManifold, A: GeometricComplex, points: int = 10_000, seed: int = 0,
                       tol: float = 1e-7, candidates: int = 8, inside_tol: float = 1e-9) -> SurjectivityReport:
    """Random manifold points must each have a preimage in the carrier within ``tol``."""
    rng = np.random.default_rng(seed)
    Y = M.sample(rng, points)
    cent = A.simplex_points().mean(axis=1)
    k = min(candidates, A.n_top)
    _, nb = cKDTree(cent).query(Y, k=k, workers=thread_cap())
    nb = nb.reshape(len(Y), k)
    found = np.zeros(len(Y), dtype=bool)
    best = np.full(len(Y), np.inf)
    for j in range(k):
        todo = np.flatnonzero(~found)
        if todo.size == 0:
            break
        lam, res, _ = _invert_in_simplices(M, A.simplex_points(nb[todo, j]), Y[todo])
        inside = lam.min(axis=1) >= -inside_tol
        hit = inside & (res <= tol)
        best[todo[hit]] = res[hit]
        found[todo[hit]] = True
        miss = todo[~hit]
        best[miss] = np.minimum(best[miss], np.where(inside[~hit], res[~hit], np.inf))
    fail = np.flatnonzero(~found)
    return SurjectivityReport(fail.size == 0, len(Y), [Y[i].tolist() for i in fail[:100]],
                              float(best[found].max()) if found.any() else np.inf)
