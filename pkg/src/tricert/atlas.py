"""Charts around vertices: projected stars, chart maps F_p, distortion bounds.

For a vertex p of a complex with vertices on M, the chart domain is the
star of p orthogonally projected into T_pM, and the chart map is
``F_p = proj_T o pi_M o (lift)`` where the lift undoes the projection
simplex by simplex, keeping barycentric coordinates.

Two code paths exist. :func:`build_chart` and friends work on one vertex
with general (LP based) embedding tests. :class:`AtlasBatch` computes the
same per-vertex information for every vertex at once, in chunks, using
orientation signs and winding numbers; the tests cross-check the two.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import cKDTree

from . import thread_cap
from .complex import GeometricComplex
from .distortion import BoundKind, DistortionBound, compose_distortion
from .errors import (OnMedialAxis, PointOutsideChart, PreconditionViolated,
                     ProjectedStarNotEmbedded, StarNotFull)
from .geom import TOL, Flat
from .manifolds import GlobalReach, LocalLfs, TestManifold
from .simplex import (batch_barycentric, batch_min_face_thickness,
                      batch_quality, batch_signed_volume)

AGGREGATE_CEILING = 19.0
Q_CEILING = 1.0 / 256.0


# ---------------------------------------------------------------------------
# single charts


@dataclass
class Chart:
    vertex_p: int
    U_p_radius: float
    tangent: Flat
    projected_star: GeometricComplex = field(repr=False)
    star_vertices: np.ndarray = field(repr=False)   # global ids, entry 0 is p
    star_tops: np.ndarray = field(repr=False)       # global top ids, sorted by key
    ambient: np.ndarray = field(repr=False)         # coordinates of star vertices
    R_rch: float = np.inf
    L0: float = 0.0
    s0: float = 0.0
    t0: float = 0.0

    @property
    def m(self) -> int:
        return self.projected_star.dimension_m

    @property
    def p_hat(self) -> np.ndarray:
        return self.projected_star.vertices[0]


def improper_intersection(A: np.ndarray, B: np.ndarray, shared_a=(), tol: float = 1e-9) -> float:
    """Largest weight on non-shared vertices of A over points of A cap B.

    Two closed simplices meet properly (in their common face) iff this is
    zero. ``shared_a`` lists the rows of A that are also vertices of B.
    Returns -1 when the simplices do not meet at all.
    """
    ka, kb = len(A), len(B)
    dim = A.shape[1]
    c = np.zeros(ka + kb)
    nonshared = [i for i in range(ka) if i not in set(shared_a)]
    if not nonshared:
        return 0.0
    c[nonshared] = -1.0
    Aeq = np.zeros((dim + 2, ka + kb))
    Aeq[:dim, :ka] = A.T
    Aeq[:dim, ka:] = -B.T
    Aeq[dim, :ka] = 1.0
    Aeq[dim + 1, ka:] = 1.0
    beq = np.zeros(dim + 2)
    beq[dim:] = 1.0
    res = linprog(c, A_eq=Aeq, b_eq=beq, bounds=[(0, None)] * (ka + kb), method="highs")
    if res.status == 2:
        return -1.0
    return float(-res.fun)


def star_embedding_violations(V: np.ndarray, simplices: np.ndarray, tol: float = 1e-9):
    """Pairs of simplices of an R^m complex that overlap improperly, plus degenerate ones."""
    P = V[simplices]
    vol = batch_signed_volume(P)
    scale = np.ptp(P, axis=1).max(axis=1) ** V.shape[1]
    degenerate = [i for i in range(len(P)) if abs(vol[i]) <= 1e-12 * max(scale[i], 1e-300)]
    bad = []
    for i in range(len(simplices)):
        for j in range(i + 1, len(simplices)):
            common = set(simplices[i].tolist()) & set(simplices[j].tolist())
            sa = [a for a, v in enumerate(simplices[i]) if v in common]
            sb = [b for b, v in enumerate(simplices[j]) if v in common]
            w = max(improper_intersection(P[i], P[j], sa), improper_intersection(P[j], P[i], sb))
            if w > tol:
                bad.append((i, j))
    return bad, degenerate


def _local_constants(A: GeometricComplex, tops: np.ndarray):
    P = A.simplex_points(tops)
    L, _, _ = batch_quality(P)
    t = batch_min_face_thickness(P)
    return float(L.max()), float(L.min()), float(t.min())


def chart_R_rch(M: TestManifold, p_point, policy) -> float:
    return float(policy.R_rch(M, np.asarray(p_point)[None])[0])


def rho_from(L0, R):
    L0, R = np.asarray(L0, float), np.asarray(R, float)
    return (L0 / R) * (1.0 + 2.0 * L0 / R)


def build_chart(M: TestManifold, A: GeometricComplex, p: int, policy=None) -> Chart:
    """Project the star of p into T_pM and check that it is an embedded full star."""
    policy = GlobalReach() if policy is None else policy
    tops = A.tops_of_vertex(p)
    if tops.size == 0 or not A.is_full_star(p):
        raise StarNotFull(f"star of vertex {p} is not a full star (p on the boundary?)")
    keys = A.simplices[tops]
    order = np.lexsort(keys.T[::-1])
    tops, keys = tops[order], keys[order]
    verts = np.unique(keys)
    verts = np.concatenate([[p], verts[verts != p]])
    lookup = {int(v): i for i, v in enumerate(verts)}
    local = np.vectorize(lookup.__getitem__)(keys)
    T = M.tangent_flat(A.vertices[p])
    amb = A.vertices[verts]
    coords = (amb - amb[0]) @ T.basis
    bad, degenerate = star_embedding_violations(coords, local)
    if bad or degenerate:
        raise ProjectedStarNotEmbedded(
            f"projected star of {p}: {len(bad)} overlapping pairs, {len(degenerate)} degenerate simplices; "
            f"e.g. {[(tuple(keys[i]), tuple(keys[j])) for i, j in bad[:3]]}")
    pstar = GeometricComplex(coords, local)
    L0, s0, t0 = _local_constants(A, tops)
    R = chart_R_rch(M, A.vertices[p], policy)
    return Chart(int(p), float(rho_from(L0, R) * R), T, pstar, verts, tops, amb, R, L0, s0, t0)


def locate_in_chart(chart: Chart, X, tol: float = TOL.inside):
    """(local top index, barycentric coordinates) for points of the chart domain.

    Ties on shared facets go to the first simplex in key order. Points
    outside the projected star get index -1.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    S = chart.projected_star.simplices
    Vp = chart.projected_star.vertices[S]
    idx = np.full(len(X), -1)
    lam = np.full((len(X), S.shape[1]), np.nan)
    for t in range(len(S)):
        todo = np.flatnonzero(idx < 0)
        if todo.size == 0:
            break
        l, ok = batch_barycentric(np.repeat(Vp[t:t + 1], todo.size, 0), X[todo])
        inside = ok & (l.min(axis=1) >= -tol)
        idx[todo[inside]] = t
        lam[todo[inside]] = l[inside]
    return idx, lam


def lift_from_chart(chart: Chart, X):
    """Inverse of the projected-star map: same barycentric coordinates, ambient simplex."""
    idx, lam = locate_in_chart(chart, X)
    if (idx < 0).any():
        raise PointOutsideChart(f"{int((idx < 0).sum())} points lie outside the projected star")
    S = chart.projected_star.simplices[idx]
    return np.einsum("nk,nkd->nd", lam, chart.ambient[S])


def evaluate_Fp(chart: Chart, M: TestManifold, X) -> np.ndarray:
    """Chart map F_p: lift, project to M, project into T_pM."""
    single = np.ndim(X) == 1
    Xa = lift_from_chart(chart, X)
    if (M.medial_distance(Xa) <= M._tube_tol()).any():
        raise OnMedialAxis("lifted point lies on the medial axis")
    H = M.project(Xa)
    out = (H - chart.ambient[0]) @ chart.tangent.basis
    return out[0] if single else out


@dataclass(frozen=True)
class ChartDistortion:
    xi_phi_inv_hat: DistortionBound
    xi_H: DistortionBound
    xi_phi: DistortionBound
    xi_total: DistortionBound
    q: float
    rho: float
    ceiling_19q: float


def chart_distortion_arrays(L0, t0, R):
    """Vectorised chart distortion terms (no precondition checks)."""
    L0, t0, R = (np.asarray(a, dtype=float) for a in (L0, t0, R))
    q = L0 ** 2 / (t0 ** 2 * R ** 2)
    xi1 = q / (1.0 - q)
    xi2 = 12.0 * q
    rho = rho_from(L0, R)
    xi3 = 4.0 * rho ** 2
    total = (1 + xi1) * (1 + xi2) * (1 + xi3) - 1.0
    return {"q": q, "xi1": xi1, "xi2": xi2, "xi3": xi3, "rho": rho, "xi_total": total}


def chart_preconditions(L0, t0, R, radius_cap=None):
    """(name, lhs, rhs) triples of the chart-distortion hypotheses; each needs lhs <= rhs (or <)."""
    d = chart_distortion_arrays(L0, t0, R)
    out = [("q <= 1/256", d["q"], Q_CEILING, False),
           ("rho < 1/2", d["rho"], 0.5, True),
           ("L0 < t0 R_rch / 3", np.asarray(L0, float), np.asarray(t0, float) * np.asarray(R, float) / 3, True)]
    if radius_cap is not None:
        out.append(("chart radius <= eps lfs(p)", d["rho"] * np.asarray(R, float), np.asarray(radius_cap, float), False))
    return out


def certified_chart_distortion(chart: Chart, M: TestManifold | None = None, L0=None, s0=None,
                               t0=None, policy=None, R_rch=None) -> ChartDistortion:
    """Analytic distortion bounds of the three chart ingredients and their composition."""
    L0 = chart.L0 if L0 is None else float(L0)
    t0 = chart.t0 if t0 is None else float(t0)
    R = chart.R_rch if R_rch is None else float(R_rch)
    cap = None
    if policy is not None and M is not None:
        R = chart_R_rch(M, chart.ambient[0], policy) if R_rch is None else R
        if isinstance(policy, LocalLfs):
            cap = float(policy.chart_radius_cap(M, chart.ambient[0][None])[0])
    if L0 == 0.0:
        z = DistortionBound(0.0, BoundKind.CertifiedUpper, "zero edge length")
        return ChartDistortion(z, z, z, z, 0.0, 0.0, 0.0)
    for name, lhs, rhs, strict in chart_preconditions(L0, t0, R, cap):
        ok = lhs < rhs if strict else lhs <= rhs
        if not ok:
            raise PreconditionViolated(f"chart hypothesis {name} fails: {float(lhs):.6g} vs {float(rhs):.6g}",
                                       inequality=name, margin=float(rhs - lhs))
    d = chart_distortion_arrays(L0, t0, R)
    total = compose_distortion([d["xi1"], d["xi2"], d["xi3"]])
    C = BoundKind.CertifiedUpper
    return ChartDistortion(
        DistortionBound(float(d["xi1"]), C, "q/(1-q), q = L0^2/(t0^2 R^2)"),
        DistortionBound(float(d["xi2"]), C, "12 q"),
        DistortionBound(float(d["xi3"]), C, "4 rho^2, rho = (L0/R)(1 + 2 L0/R)"),
        DistortionBound(float(total), C, "(1+xi1)(1+xi2)(1+xi3) - 1"),
        float(d["q"]), float(d["rho"]), float(AGGREGATE_CEILING * d["q"]))


# ---------------------------------------------------------------------------
# batch engine


def _cone_measure(Y: np.ndarray, corner: np.ndarray) -> np.ndarray:
    """Angle (m=2), solid angle (m=3) or 1 (m=1) subtended at the corner vertex."""
    c, k, m = Y.shape
    if m == 1:
        return np.ones(c)
    rows = np.arange(c)
    others = [Y[rows, (corner + j) % k] for j in range(1, k)]
    if m == 2:
        a, b = others
        cross = np.abs(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])
        return np.arctan2(cross, np.einsum("ij,ij->i", a, b))
    if m == 3:
        a, b, d = others
        na, nb, nd = (np.linalg.norm(v, axis=1) for v in (a, b, d))
        num = np.abs(np.einsum("ij,ij->i", a, np.cross(b, d)))
        den = (na * nb * nd + np.einsum("ij,ij->i", a, b) * nd
               + np.einsum("ij,ij->i", a, d) * nb + np.einsum("ij,ij->i", b, d) * na)
        return 2.0 * np.arctan2(num, den)
    raise NotImplementedError("winding numbers are implemented for m <= 3")


_FULL_MEASURE = {1: 2.0, 2: 2 * np.pi, 3: 4 * np.pi}


@dataclass
class AtlasBatch:
    """Per-vertex chart data for a whole complex.

    Arrays are indexed by vertex id unless noted. ``top_*`` arrays are
    indexed by top simplex.
    """

    n_pos: np.ndarray
    n_neg: np.ndarray
    n_degen: np.ndarray
    winding: np.ndarray
    R_star: np.ndarray          # largest projected distance of a star vertex
    L0: np.ndarray              # longest edge over the star
    s0: np.ndarray              # smallest top-simplex diameter over the star
    t0: np.ndarray              # smallest face thickness over the star
    hat_L0: np.ndarray          # same constants for the projected star
    hat_s0: np.ndarray
    hat_t0: np.ndarray
    top_L: np.ndarray
    top_t: np.ndarray
    minority: list              # (vertex, top) pairs with the minority orientation sign
    degenerate: list            # (vertex, top) pairs with degenerate projection
    tangent_bases: np.ndarray = field(repr=False)

    @property
    def positive(self) -> np.ndarray:
        """Every projected simplex of the star has the same (nonzero) orientation."""
        return (self.n_degen == 0) & ((self.n_pos == 0) | (self.n_neg == 0))

    @property
    def embedded(self) -> np.ndarray:
        return self.positive & (np.abs(np.abs(self.winding) - 1.0) < 1e-6)


def analyse_stars(M: TestManifold, A: GeometricComplex, chunk: int = 400_000,
                  max_witnesses: int = 1000) -> AtlasBatch:
    m = A.dimension_m
    n = A.n_vertices
    V = A.vertices
    S = A.simplices
    par = A.orientation()
    if par is None:
        raise ProjectedStarNotEmbedded("complex is not orientable; batch charts need a coherent orientation")
    osign = 1.0 - 2.0 * par.astype(float)
    # per-top ambient quality
    top_L = np.empty(A.n_top)
    top_t = np.empty(A.n_top)
    for a in range(0, A.n_top, chunk):
        P = V[S[a:a + chunk]]
        top_L[a:a + chunk] = batch_quality(P)[0]
        top_t[a:a + chunk] = batch_min_face_thickness(P)
    TB = M.tangent_bases(V) if n <= 2_000_000 else np.concatenate(
        [M.tangent_bases(V[a:a + 1_000_000]) for a in range(0, n, 1_000_000)])
    indptr, tops, corner = A.vertex_top_csr
    counts = np.diff(indptr)
    out = {k: np.zeros(n) for k in ("winding", "R_star", "L0", "s0", "t0", "hat_L0", "hat_s0", "hat_t0")}
    n_pos = np.zeros(n, dtype=np.int64)
    n_neg = np.zeros(n, dtype=np.int64)
    n_deg = np.zeros(n, dtype=np.int64)
    minority, degenerate = [], []
    total = _FULL_MEASURE.get(m)
    if total is None:
        raise NotImplementedError("batch charts are implemented for m <= 3")
    v0 = 0
    while v0 < n:
        v1 = int(np.searchsorted(indptr, indptr[v0] + chunk, side="right")) - 1
        v1 = min(max(v1, v0 + 1), n)
        a, b = indptr[v0], indptr[v1]
        pv = np.repeat(np.arange(v0, v1), counts[v0:v1])
        te, ce = tops[a:b], corner[a:b].astype(np.int64)
        if te.size:
            X = V[S[te]] - V[pv][:, None, :]
            Y = np.einsum("ckn,cnm->ckm", X, TB[pv])
            det = batch_signed_volume(Y)
            Lh, _, th = batch_quality(Y)
            scale = np.maximum(Lh, 1e-300) ** m
            deg = np.abs(det) <= 1e-12 * scale
            sgn = np.where(deg, 0.0, np.sign(det) * osign[te])
            meas = _cone_measure(Y, ce)
            starts = indptr[v0:v1] - a
            nz = counts[v0:v1] > 0
            st = starts[nz]
            ids = np.arange(v0, v1)[nz]

            def red(ufunc, arr):
                return ufunc.reduceat(arr, st)

            out["winding"][ids] = red(np.add, sgn * meas) / total
            n_pos[ids] = red(np.add, (sgn > 0).astype(np.int64))
            n_neg[ids] = red(np.add, (sgn < 0).astype(np.int64))
            n_deg[ids] = red(np.add, deg.astype(np.int64))
            out["R_star"][ids] = red(np.maximum, np.linalg.norm(Y, axis=2).max(axis=1))
            out["L0"][ids] = red(np.maximum, top_L[te])
            out["s0"][ids] = red(np.minimum, top_L[te])
            out["t0"][ids] = red(np.minimum, top_t[te])
            out["hat_L0"][ids] = red(np.maximum, Lh)
            out["hat_s0"][ids] = red(np.minimum, Lh)
            out["hat_t0"][ids] = red(np.minimum, batch_min_face_thickness(Y) if m > 2 else th)
            # minority-sign witnesses (reference = sign of the winding number)
            if len(minority) < max_witnesses:
                ref = np.sign(out["winding"][pv])
                bad = np.flatnonzero((sgn != 0) & (sgn != ref) & (ref != 0))
                minority.extend(zip(pv[bad][:max_witnesses].tolist(), te[bad][:max_witnesses].tolist()))
            if len(degenerate) < max_witnesses and deg.any():
                bad = np.flatnonzero(deg)
                degenerate.extend(zip(pv[bad][:max_witnesses].tolist(), te[bad][:max_witnesses].tolist()))
        v0 = v1
    return AtlasBatch(n_pos, n_neg, n_deg, out["winding"], out["R_star"], out["L0"], out["s0"], out["t0"],
                      out["hat_L0"], out["hat_s0"], out["hat_t0"], top_L, top_t,
                      minority[:max_witnesses], degenerate[:max_witnesses], TB)


@dataclass
class SanityReport:
    passed: bool
    violations: list            # (p, q) vertex pairs, capped
    n_violations: int
    pairs_tested: int


def vertex_sanity_batch(A: GeometricComplex, batch: AtlasBatch, radius: np.ndarray,
                        chunk: int = 200_000, tol: float = TOL.inside,
                        max_witnesses: int = 1000) -> SanityReport:
    """For every p and every vertex q with |q - p| < radius(p), outside st(p):
    the projection of q into T_pM must not land in the projected star of p.

    Candidates come from a KD-tree with search radius min(radius, 1.5 R_star);
    a point farther than R_star from p (after projection) cannot be in the
    projected star, and the normal offset of nearby manifold points is
    second order, so the 1.5 factor is a generous margin.
    """
    V = A.vertices
    n = A.n_vertices
    S = A.simplices
    radius = np.broadcast_to(np.asarray(radius, dtype=float), (n,))
    TB = batch.tangent_bases
    ekeys = np.unique(np.concatenate([S[:, i].astype(np.int64) * n + S[:, j]
                                      for i in range(S.shape[1]) for j in range(i + 1, S.shape[1])]))
    indptr, tops, _ = A.vertex_top_csr
    tree = cKDTree(V)
    ub_all = np.minimum(radius, 1.5 * batch.R_star)
    viol = []
    nviol = 0
    tested = 0
    for a in range(0, n, chunk):
        ids = np.arange(a, min(a + chunk, n))
        ub = ub_all[ids]
        k = 16
        while True:
            kk = min(k, n)
            d, j = tree.query(V[ids], k=kk, distance_upper_bound=float(ub.max()), workers=thread_cap())
            d = d.reshape(len(ids), -1)
            j = j.reshape(len(ids), -1)
            sat = np.isfinite(d[:, -1]) & (d[:, -1] < ub)
            if not sat.any() or kk == n:
                break
            k *= 2
        p = np.repeat(ids, d.shape[1])
        q = j.ravel()
        dd = d.ravel()
        keep = (q < n) & (dd < np.repeat(ub, d.shape[1])) & (dd < np.repeat(radius[ids], d.shape[1])) & (q != p)
        p, q = p[keep], q[keep]
        lo, hi = np.minimum(p, q).astype(np.int64), np.maximum(p, q).astype(np.int64)
        key = lo * n + hi
        pos = np.clip(np.searchsorted(ekeys, key), 0, len(ekeys) - 1)
        nonadj = ekeys[pos] != key
        p, q = p[nonadj], q[nonadj]
        if p.size == 0:
            continue
        y = np.einsum("cn,cnm->cm", V[q] - V[p], TB[p])
        close = np.linalg.norm(y, axis=1) <= batch.R_star[p] * (1 + 1e-9) + 1e-15
        p, q, y = p[close], q[close], y[close]
        if p.size == 0:
            continue
        cnt = indptr[p + 1] - indptr[p]
        rep = np.repeat(np.arange(p.size), cnt)
        off = np.arange(rep.size) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        te = tops[indptr[p][rep] + off]
        pr = p[rep]
        Y = np.einsum("ckn,cnm->ckm", V[S[te]] - V[pr][:, None, :], TB[pr])
        lam, ok = batch_barycentric(Y, y[rep])
        inside = ok & (lam.min(axis=1) >= -tol)
        hit = np.zeros(p.size, dtype=bool)
        np.logical_or.at(hit, rep[inside], True)
        tested += int(p.size)
        nviol += int(hit.sum())
        if len(viol) < max_witnesses:
            viol.extend(zip(p[hit].tolist(), q[hit].tolist()))
    return SanityReport(nviol == 0, viol[:max_witnesses], nviol, tested)


def vertex_sanity_check(M: TestManifold, A: GeometricComplex, policy=None, radius=None,
                        batch: AtlasBatch | None = None) -> SanityReport:
    """Vertex sanity over U_p = B(p, r) with r = lfs/15 (LocalLfs) or rch/14 (GlobalReach)."""
    policy = GlobalReach() if policy is None else policy
    if radius is None:
        if isinstance(policy, LocalLfs):
            radius = M.lfs(A.vertices) / 15.0
        else:
            radius = np.full(A.n_vertices, M.reach / 14.0)
    if batch is None:
        batch = analyse_stars(M, A)
    return vertex_sanity_batch(A, batch, radius)
