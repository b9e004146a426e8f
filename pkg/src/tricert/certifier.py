"""Top-level certification: criteria, verdicts and reports.

Four modes are supported:

* ``GenericMetric``: quality, chart distortion against s0 t0^2 / (12 L0),
  vertex sanity and compatible atlases, with charts built from the
  submanifold instantiation.
* ``SubmanifoldLfs`` / ``SubmanifoldReach``: the three checkable
  conditions for complexes with vertices on a submanifold, scaled by
  lfs(p) or by the reach.
* ``DifferentialControl``: finite-difference Jacobians of the chart maps
  against s0 t0 / (2 L0); empirical by nature, so Inconclusive unless an
  analytic bound is supplied.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.spatial import cKDTree

from .atlas import (AtlasBatch, Chart, analyse_stars, certified_chart_distortion,
                    chart_distortion_arrays, chart_preconditions, evaluate_Fp,
                    locate_in_chart, vertex_sanity_batch)
from .complex import GeometricComplex
from .degree import OrientedPLMap, degree_at_point
from .errors import (ComponentWithoutVertex, DeltaOutOfWindow, InputNotManifold,
                     NumericallyUnstableJacobian, PreconditionViolated,
                     VerticesOffManifold)
from .geom import batch_orthonormalize, batch_sin_largest_angle
from .manifolds import GlobalReach, LocalLfs, TestManifold
from .meshgen import mesh_constants
from .simplex import batch_barycentric, batch_edge_lengths, sample_barycentric

log = logging.getLogger(__name__)

LFS_EPS = 9.0 / 137.0          # R_rch = (128/137) lfs(p) on B(p, (9/137) lfs(p))


class Mode(str, Enum):
    GenericMetric = "GenericMetric"
    SubmanifoldLfs = "SubmanifoldLfs"
    SubmanifoldReach = "SubmanifoldReach"
    DifferentialControl = "DifferentialControl"


class Verdict(str, Enum):
    Certified = "Certified"
    Refuted = "Refuted"
    Inconclusive = "Inconclusive"


def _clean(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if np.isfinite(x) else None
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    return x


@dataclass
class CriterionResult:
    name: str
    holds: bool
    lhs: float
    rhs: float
    margin: float
    witnesses: list = field(default_factory=list)
    strict: bool = False
    informational: bool = False

    def to_dict(self) -> dict:
        return _clean({"name": self.name, "holds": bool(self.holds), "lhs": self.lhs, "rhs": self.rhs,
                       "margin": self.margin, "strict": self.strict, "informational": self.informational,
                       "witnesses": self.witnesses})


def criterion(name: str, lhs, rhs, strict: bool, witnesses=None, informational: bool = False) -> CriterionResult:
    lhs, rhs = float(lhs), float(rhs)
    holds = lhs < rhs if strict else lhs <= rhs
    return CriterionResult(name, bool(holds), lhs, rhs, rhs - lhs, list(witnesses or []), strict, informational)


def count_criterion(name: str, count: int, witnesses=None) -> CriterionResult:
    """A criterion that holds when there are no violations."""
    return criterion(name, count, 0, False, witnesses)


@dataclass
class CertificationReport:
    mode: Mode
    criteria: list
    verdict: Verdict
    constants: dict = field(default_factory=dict)
    consequences: list = field(default_factory=list)
    info: dict = field(default_factory=dict)

    def criterion(self, prefix: str) -> CriterionResult:
        for c in self.criteria:
            if c.name.startswith(prefix):
                return c
        raise KeyError(prefix)

    @property
    def failed(self) -> list:
        return [c for c in self.criteria if not c.holds and not c.informational]

    @property
    def witnesses(self) -> list:
        return [w for c in self.failed for w in c.witnesses]

    def to_dict(self) -> dict:
        return _clean({"mode": self.mode.value, "verdict": self.verdict.value,
                       "criteria": [c.to_dict() for c in self.criteria],
                       "consequences": [c.to_dict() for c in self.consequences],
                       "constants": self.constants, "info": self.info})

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "lhs", "rhs", "margin"])
        for c in self.criteria + self.consequences:
            w.writerow([c.name, repr(float(c.lhs)), repr(float(c.rhs)), repr(float(c.margin))])
        return buf.getvalue()


def _decide(criteria) -> Verdict:
    return Verdict.Certified if all(c.holds for c in criteria if not c.informational) else Verdict.Refuted


# ---------------------------------------------------------------------------
# input validation shared by all modes


def validate_input(M: TestManifold, A: GeometricComplex, require_partial_ok: bool = False):
    if A.ambient_N != M.N:
        raise VerticesOffManifold(f"complex lives in R^{A.ambient_N} but the manifold in R^{M.N}")
    if A.dimension_m != M.m:
        raise InputNotManifold(f"complex has dimension {A.dimension_m}, manifold {M.m}")
    off = ~M.on_manifold(A.vertices)
    if off.any():
        raise VerticesOffManifold(
            f"{int(off.sum())} vertices are off the manifold (residual > 1e-8), e.g. vertex {int(np.flatnonzero(off)[0])}")
    labels = M.component_labels(A.vertices)
    missing = sorted(set(range(M.n_components)) - set(labels.tolist()))
    if missing:
        raise ComponentWithoutVertex(f"manifold components {missing} contain no vertex")
    chk = A.is_manifold_complex()
    if not chk.is_closed_manifold:
        reasons = chk.failures or ["complex has boundary"]
        raise InputNotManifold("; ".join(reasons))
    if chk.partial:
        msg = "manifold check is partial for m > 3 (vertex links not verified)"
        if require_partial_ok:
            raise InputNotManifold(msg)
        log.warning(msg)


def _key(A: GeometricComplex, t: int) -> list:
    return [int(v) for v in A.simplices[t]]


def _atlas_criteria(A: GeometricComplex, batch: AtlasBatch, prefix: str):
    pos_bad = np.flatnonzero(~batch.positive)
    wit = [{"vertex": p, "simplex": _key(A, t), "kind": "reversed"} for p, t in batch.minority]
    wit += [{"vertex": p, "simplex": _key(A, t), "kind": "degenerate"} for p, t in batch.degenerate]
    emb_bad = np.flatnonzero(~batch.embedded)
    emb_w = [{"vertex": int(p), "winding": float(batch.winding[p])} for p in emb_bad[:1000]]
    return [count_criterion(f"{prefix} simplexwise positivity of projected stars", pos_bad.size, wit),
            count_criterion(f"{prefix} projected stars embedded with p interior", emb_bad.size, emb_w)]


def _sanity_criterion(name: str, A: GeometricComplex, batch: AtlasBatch, radius) -> CriterionResult:
    rep = vertex_sanity_batch(A, batch, radius)
    c = count_criterion(name, rep.n_violations, [{"p": p, "q": q} for p, q in rep.violations])
    return c


# ---------------------------------------------------------------------------
# submanifold modes


def certify_submanifold(M: TestManifold, A: GeometricComplex, mode: str = "lfs", seed: int = 0,
                        consequence_samples: int = 2, batch: AtlasBatch | None = None,
                        check_consequences: bool = True) -> CertificationReport:
    """Check (a) embedded projected stars, (b) quality and size, (c) vertex sanity."""
    mode = mode.lower()
    if mode not in ("lfs", "reach"):
        raise ValueError("mode must be 'lfs' or 'reach'")
    validate_input(M, A)
    lfs_mode = mode == "lfs"
    policy = LocalLfs(LFS_EPS) if lfs_mode else GlobalReach()
    if batch is None:
        batch = analyse_stars(M, A)
    crit = _atlas_criteria(A, batch, "(a)")
    qc, mc = quality_criterion(M, A, mode, top_L=batch.top_L, top_t=batch.top_t)
    crit.append(qc)
    radius = M.lfs(A.vertices) / 15.0 if lfs_mode else np.full(A.n_vertices, M.reach / 14.0)
    crit.append(_sanity_criterion(f"(c) vertex sanity on B(p, {'lfs(p)/15' if lfs_mode else 'rch(M)/14'})",
                                  A, batch, radius))
    verdict = _decide(crit)
    constants = {"t0": mc.t0, "mu0": mc.mu0, "eps0": mc.eps0, "L_min": mc.L_min, "L_max": mc.L_max,
                 "threshold": qc.rhs, "reach": M.reach, "n_vertices": A.n_vertices, "n_top": A.n_top}
    info = _implied_distortion_info(M, A, batch, policy, mc.t0)
    rep = CertificationReport(Mode.SubmanifoldLfs if lfs_mode else Mode.SubmanifoldReach, crit, verdict,
                              constants, [], info)
    if verdict == Verdict.Certified and check_consequences:
        rep.consequences = consequence_checks(M, A, mc.eps0, mc.t0, lfs_mode, seed, consequence_samples)
    return rep


def quality_criterion(M: TestManifold, A: GeometricComplex, mode: str = "lfs", top_L=None, top_t=None):
    """Criterion (b): eps0 <= sqrt(mu0) t0^2 / 18 (lfs scale) or / 16 (reach scale).

    Returns the criterion and the measured mesh constants. Needs only edge
    lengths and thicknesses, so it is cheap to re-evaluate on mutated meshes.
    """
    lfs_mode = mode.lower() == "lfs"
    policy = LocalLfs(LFS_EPS) if lfs_mode else GlobalReach()
    mc = mesh_constants(A, M, policy, top_L=top_L, top_t=top_t)
    denom = 18.0 if lfs_mode else 16.0
    rhs_b = np.sqrt(mc.mu0) * mc.t0 ** 2 / denom
    p_long, p_short = mc.longest_ratio_vertex, mc.shortest_ratio_vertex
    tops_long = A.tops_of_vertex(p_long)
    tops_short = A.tops_of_vertex(p_short)
    L_long = A.simplex_points(tops_long)
    L_short = A.simplex_points(tops_short)
    w_b = [{"role": "thinnest simplex", "simplex": _key(A, mc.thinnest), "t": mc.t0},
           {"role": "largest L/scale", "vertex": p_long,
            "simplex": _key(A, tops_long[np.argmax(batch_edge_lengths(L_long).max(axis=1))])},
           {"role": "smallest L/scale", "vertex": p_short,
            "simplex": _key(A, tops_short[np.argmin(batch_edge_lengths(L_short).max(axis=1))])}]
    scale_name = "lfs(p)" if lfs_mode else "rch(M)"
    c = criterion(f"(b) eps0 <= sqrt(mu0) t0^2 / {int(denom)}  [L(sigma) <= eps0 {scale_name}]",
                  mc.eps0, rhs_b, False, w_b)
    return c, mc


def _implied_distortion_info(M, A, batch, policy, t0) -> dict:
    R = policy.R_rch(M, A.vertices)
    d = chart_distortion_arrays(batch.L0, t0, R)
    q = d["q"]
    thr = batch.hat_s0 * batch.hat_t0 ** 2 / (12 * batch.L0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = d["xi_total"] / thr
    return {"q_max": float(q.max()), "xi_total_max": float(d["xi_total"].max()),
            "ceiling_19q_max": float(19 * q.max()),
            "distortion_over_threshold_max": float(np.nanmax(ratio)),
            "R_rch_policy": policy.describe()}


def consequence_checks(M: TestManifold, A: GeometricComplex, eps0: float, t0: float, lfs_mode: bool,
                       seed: int = 0, samples: int = 2, chunk: int = 200_000):
    """Sampled distance to M and simplex-tangent angles against the guaranteed bounds."""
    rng = np.random.default_rng(seed)
    m = A.dimension_m
    worst_d, worst_s = -np.inf, -np.inf
    wd, ws = None, None
    for a in range(0, A.n_top, chunk):
        idx = np.arange(a, min(a + chunk, A.n_top))
        P = A.simplex_points(idx)
        lam = np.concatenate([np.full((1, m + 1), 1.0 / (m + 1)), sample_barycentric(rng, samples, m)])
        X = np.einsum("sk,nkd->nsd", lam, P).reshape(-1, P.shape[2])
        owner = np.repeat(idx, len(lam))
        Xc = M.project(X)
        d = np.linalg.norm(X - Xc, axis=1)
        if lfs_mode:
            rd = d / (eps0 ** 2 * M.lfs(Xc))
        else:
            rd = d / (eps0 ** 2 * M.reach)
        B = batch_orthonormalize(np.swapaxes(P[:, 1:] - P[:, :1], 1, 2))
        Bx = np.repeat(B, len(lam), axis=0)
        s = batch_sin_largest_angle(Bx, M.tangent_bases(Xc))
        i, j = int(np.argmax(rd)), int(np.argmax(s))
        if rd[i] > worst_d:
            worst_d, wd = float(rd[i]), _key(A, owner[i])
        if s[j] > worst_s:
            worst_s, ws = float(s[j]), _key(A, owner[j])
    if lfs_mode:
        return [criterion("(3) d_M(x) / (eps0^2 lfs(x_check)) <= 7/3", worst_d, 7 / 3, False, [wd]),
                criterion("(3) sin angle(sigma, T_x_check) <= 13 eps0 / (4 t0)", worst_s, 13 * eps0 / (4 * t0),
                          False, [ws])]
    return [criterion("(3') d_M(x) / (eps0^2 rch(M)) <= 2", worst_d, 2.0, False, [wd]),
            criterion("(3') sin angle(sigma, T_x_check) <= 3 eps0 / t0", worst_s, 3 * eps0 / t0, False, [ws])]


# ---------------------------------------------------------------------------
# generic metric mode


def distortion_criterion(xi: float, s0: float, t0: float, L0: float, m: int | None = None,
                         name: str | None = None, informational: bool = False) -> CriterionResult:
    """xi < s0 t0^2 / (12 L0), or the dimension-sharp m s0 t0^2 / (6 (m+1) L0) when m is given."""
    if m is None:
        rhs = s0 * t0 ** 2 / (12 * L0)
        name = name or "(3) distortion xi < s0 t0^2 / (12 L0)"
    else:
        rhs = m * s0 * t0 ** 2 / (6 * (m + 1) * L0)
        name = name or "(3) distortion xi < m s0 t0^2 / (6 (m+1) L0)"
    return criterion(name, xi, rhs, True, informational=informational)


def certify_generic(M: TestManifold, A: GeometricComplex, policy=None, local: bool = True,
                    quality: tuple | None = None, threshold: str = "metric",
                    batch: AtlasBatch | None = None) -> CertificationReport:
    """Metric triangulation criteria with charts from projections into tangent spaces.

    ``quality`` may fix global (s0, L0, t0) for the projected stars;
    otherwise the tightest constants are measured per star (``local``) or
    over the whole mesh. ``threshold`` selects which distortion bound
    decides the verdict: ``metric`` (1/12) or ``local`` (m / (6(m+1))).
    """
    policy = GlobalReach() if policy is None else policy
    validate_input(M, A)
    if batch is None:
        batch = analyse_stars(M, A)
    m = A.dimension_m
    crit = _atlas_criteria(A, batch, "(1) compatible atlases:")
    R = policy.R_rch(M, A.vertices)
    t_amb = batch.t0 if local else np.full_like(batch.t0, batch.t0.min())
    L_amb = batch.L0 if local else np.full_like(batch.L0, batch.L0.max())
    if quality is not None:
        s0q, L0q, t0q = (float(v) for v in quality)
        bad = np.flatnonzero((batch.hat_s0 < s0q) | (batch.hat_L0 > L0q) | (batch.hat_t0 < t0q))
        crit.append(count_criterion("(2) quality s0 <= L <= L0, t >= t0 on projected stars", bad.size,
                                    [{"vertex": int(p)} for p in bad[:1000]]))
        hs0, hL0, ht0 = (np.full(A.n_vertices, v) for v in (s0q, L0q, t0q))
    else:
        hs0, hL0, ht0 = batch.hat_s0, batch.hat_L0, batch.hat_t0
        if not local:
            hs0, hL0, ht0 = (np.full(A.n_vertices, f(v)) for f, v in ((np.min, hs0), (np.max, hL0), (np.min, ht0)))
        bad = np.flatnonzero((hs0 <= 0) | (ht0 <= 0))
        crit.append(count_criterion("(2) quality with measured constants (s0 > 0, t0 > 0)", bad.size,
                                    [{"vertex": int(p)} for p in bad[:1000]]))
    cap = policy.chart_radius_cap(M, A.vertices) if isinstance(policy, LocalLfs) else None
    hyp_bad = np.zeros(A.n_vertices, dtype=bool)
    for name, lhs, rhs, strict in chart_preconditions(L_amb, t_amb, R, cap):
        hyp_bad |= ~(lhs < rhs) if strict else ~(lhs <= rhs)
    hb = np.flatnonzero(hyp_bad)
    crit.append(count_criterion("(3) chart distortion hypotheses (q <= 1/256, rho < 1/2, L0 < t0 R/3)", hb.size,
                                [{"vertex": int(p)} for p in hb[:1000]]))
    d = chart_distortion_arrays(L_amb, t_amb, R)
    xi = np.where(d["q"] < 1, d["xi_total"], np.inf)
    thr12 = hs0 * ht0 ** 2 / (12 * hL0)
    thr_m = m * hs0 * ht0 ** 2 / (6 * (m + 1) * hL0)
    for thr, label, is_main in ((thr12, "s0 t0^2 / (12 L0)", threshold == "metric"),
                                (thr_m, "m s0 t0^2 / (6 (m+1) L0)", threshold != "metric")):
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(np.isfinite(xi), xi / thr, np.inf)
        p = int(np.argmax(ratio))
        bad = np.flatnonzero(~(xi < thr))
        c = criterion(f"(3) distortion xi < {label}", xi[p] if np.isfinite(xi[p]) else 1e300, thr[p], True,
                      [{"vertex": int(v)} for v in bad[:1000]], informational=not is_main)
        crit.append(c)
    r_U = d["rho"] * R
    crit.append(_sanity_criterion("(4) vertex sanity on U_p = B(p, rho R_rch)", A, batch, r_U))
    verdict = _decide(crit)
    constants = {"s0_min": float(hs0.min()), "L0_max": float(hL0.max()), "t0_min": float(ht0.min()),
                 "q_max": float(d["q"].max()), "xi_total_max": float(d["xi_total"].max()),
                 "ceiling_19q_max": float(19 * d["q"].max()), "R_rch_policy": policy.describe(),
                 "local_constants": bool(local), "n_vertices": A.n_vertices, "n_top": A.n_top}
    return CertificationReport(Mode.GenericMetric, crit, verdict, constants)


# ---------------------------------------------------------------------------
# differential-control mode


def _lattice(m: int, g: int) -> np.ndarray:
    """Barycentric lattice points with denominator g."""
    pts = []

    def rec(prefix, left, k):
        if k == 1:
            pts.append(prefix + [left])
            return
        for i in range(left + 1):
            rec(prefix + [i], left - i, k - 1)

    rec([], g, m + 1)
    return np.array(pts, dtype=float) / g


def chart_jacobian_deviation(M: TestManifold, A: GeometricComplex, batch: AtlasBatch, grid: int = 2,
                             h_rel: float = 1e-4, chunk: int = 100_000):
    """Largest ||dF_p - I|| per vertex over a barycentric lattice in each star simplex."""
    m = A.dimension_m
    V, S = A.vertices, A.simplices
    TB = batch.tangent_bases
    lam = _lattice(m, grid)
    indptr, tops, _ = A.vertex_top_csr
    counts = np.diff(indptr)
    owner = np.repeat(np.arange(A.n_vertices), counts)
    out = np.zeros(A.n_vertices)
    for a in range(0, len(tops), chunk):
        te = tops[a:a + chunk]
        pv = owner[a:a + chunk]
        P = V[S[te]]                                            # (c, m+1, N)
        Y = np.einsum("ckn,cnm->ckm", P - V[pv][:, None, :], TB[pv])
        E = np.swapaxes(P[:, 1:] - P[:, :1], 1, 2)              # (c, N, m)
        Eh = np.swapaxes(Y[:, 1:] - Y[:, :1], 1, 2)             # (c, m, m)
        W = E @ np.linalg.inv(Eh)                               # lift differential (c, N, m)
        X = np.einsum("sk,ckn->csn", lam, P)                    # (c, s, N)
        h = h_rel * np.linalg.norm(E, axis=1).max(axis=1)       # (c,)
        J = np.empty(X.shape[:2] + (m, m))
        J2 = np.empty_like(J)
        for i in range(m):
            step = (h[:, None] * W[:, :, i])[:, None, :]
            for hh, tgt in ((1.0, J), (0.5, J2)):
                fp = M.project((X + hh * step).reshape(-1, X.shape[2])).reshape(X.shape)
                fm = M.project((X - hh * step).reshape(-1, X.shape[2])).reshape(X.shape)
                diff = (fp - fm) / (2 * hh * h[:, None, None])
                tgt[..., :, i] = np.einsum("csn,cnm->csm", diff, TB[pv])
        if not (np.isfinite(J).all() and np.abs(J - J2).max() < 1e-6):
            raise NumericallyUnstableJacobian("finite-difference Jacobians disagree between step sizes")
        D = J - np.eye(m)
        nrm = np.linalg.norm(D.reshape(-1, m, m), ord=2, axis=(1, 2)).reshape(D.shape[:2]).max(axis=1)
        np.maximum.at(out, pv, nrm)
    return out


def certify_differential_control(M: TestManifold, A: GeometricComplex, policy=None, jacobian_grid: int = 2,
                                 analytic_bound: float | None = None,
                                 empirical_can_certify: bool = False,
                                 batch: AtlasBatch | None = None) -> CertificationReport:
    policy = GlobalReach() if policy is None else policy
    validate_input(M, A)
    if batch is None:
        batch = analyse_stars(M, A)
    m = A.dimension_m
    crit = _atlas_criteria(A, batch, "(1) compatible atlases:")
    hs0, hL0, ht0 = batch.hat_s0, batch.hat_L0, batch.hat_t0
    bad = np.flatnonzero((hs0 <= 0) | (ht0 <= 0))
    crit.append(count_criterion("(2) quality with measured constants (s0 > 0, t0 > 0)", bad.size,
                                [{"vertex": int(p)} for p in bad[:1000]]))
    dev = chart_jacobian_deviation(M, A, batch, jacobian_grid)
    thr = hs0 * ht0 / (2 * hL0)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = int(np.argmax(dev / thr))
    fails = np.flatnonzero(~(dev < thr))
    crit.append(criterion("(3) max ||dF_p - I|| < s0 t0 / (2 L0)  [finite differences]", dev[p], thr[p], True,
                          [{"vertex": int(v)} for v in fails[:1000]]))
    q = int(np.argmax(dev / (m * ht0)))
    crit.append(criterion("star embedding bound ||dF_p - I|| < m t0", dev[q], m * ht0[q], True,
                          informational=True))
    R = policy.R_rch(M, A.vertices)
    rU = chart_distortion_arrays(batch.L0, batch.t0, R)["rho"] * R
    crit.append(_sanity_criterion("(4) vertex sanity on U_p = B(p, rho R_rch)", A, batch, rU))
    verdict = _decide(crit)
    note = "empirical Jacobian grid"
    if verdict == Verdict.Certified:
        if analytic_bound is not None:
            ok = analytic_bound >= dev.max() and analytic_bound < thr.min()
            crit.append(criterion("(3) analytic bound on ||dF_p - I|| < min s0 t0 / (2 L0)", analytic_bound,
                                  thr.min(), True))
            verdict = Verdict.Certified if ok else Verdict.Inconclusive
            note = "analytic bound supplied"
        elif not empirical_can_certify:
            verdict = Verdict.Inconclusive
    return CertificationReport(Mode.DifferentialControl, crit, verdict,
                               {"max_deviation": float(dev.max()), "threshold_min": float(thr.min()),
                                "jacobian_grid": jacobian_grid, "basis": note})


# ---------------------------------------------------------------------------
# single-chart checks


def _chart_map(chart: Chart, M: TestManifold, F):
    if F is not None:
        return lambda X: np.atleast_2d(F(np.atleast_2d(X)))
    return lambda X: np.atleast_2d(evaluate_Fp(chart, M, np.atleast_2d(X)))


def _refined_pl(chart: Chart, F, resolution: int):
    """PL approximation of F on a regular refinement of every chart simplex (m <= 2)."""
    m = chart.m
    if m > 2:
        raise NotImplementedError("preimage search is implemented for m <= 2")
    S = chart.projected_star.simplices
    Vh = chart.projected_star.vertices
    g = resolution
    lam = _lattice(m, g)
    index = {tuple(np.rint(l * g).astype(int)): i for i, l in enumerate(lam)}
    small = []
    if m == 1:
        small = [[i, i + 1] for i in range(g)]
        order = np.argsort(lam[:, 1])
        lam = lam[order]
        small = np.array(small)
    else:
        for i in range(g):
            for j in range(g - i):
                a = index[(g - i - j, i, j)]
                b = index[(g - i - j - 1, i + 1, j)]
                c = index[(g - i - j - 1, i, j + 1)]
                small.append([a, b, c])
                if i + j < g - 1:
                    d = index[(g - i - j - 2, i + 1, j + 1)]
                    small.append([b, d, c])
        small = np.array(small)
    pts, tris, owner = [], [], []
    for t, s in enumerate(S):
        X = lam @ Vh[s]
        tris.append(small + len(pts) * len(lam))
        pts.append(X)
        owner.append(np.full(len(small), t))
    P = np.concatenate(pts)
    src = GeometricComplex(P, np.concatenate(tris))
    return OrientedPLMap(src, F(P)), np.concatenate(owner)


def point_covered_once_check(chart: Chart, M: TestManifold, F=None, resolution: int = 24,
                             seed: int = 0) -> CriterionResult:
    """The image of the barycentre of the largest chart simplex has exactly one preimage."""
    Fm = _chart_map(chart, M, F)
    S = chart.projected_star.simplices
    Vh = chart.projected_star.vertices
    from .simplex import batch_quality
    Ls = batch_quality(Vh[S])[0]
    b = Vh[S[int(np.argmax(Ls))]].mean(axis=0)
    y = Fm(b[None])[0]
    pl, _ = _refined_pl(chart, Fm, resolution)
    res = degree_at_point(pl, y, seed=seed)
    n = len(res.preimage_points)
    return criterion("point covered once: preimages of F_p(b)", n, 1, False,
                     [{"preimage": p.tolist()} for p in res.preimage_points]) if n != 1 else \
        CriterionResult("point covered once: preimages of F_p(b)", True, 1.0, 1.0, 0.0, [], False)


def boundary_separation_check(chart: Chart, M: TestManifold, delta: float | None = None, F=None,
                              xi: float | None = None, samples: int = 4000, seed: int = 0) -> CriterionResult:
    """F_p(V_p) stays away from F_p(boundary of the projected star), sampled."""
    m = chart.m
    if xi is None:
        xi = certified_chart_distortion(chart).xi_total.xi
    window = 1.0 / (m + 1) - 6 * chart.L0 * xi / (m * chart.s0 * chart.t0 ** 2)
    if delta is None:
        delta = 0.5 * window
    if not (0 < delta <= window):
        raise DeltaOutOfWindow(f"delta = {delta:.6g} outside (0, {window:.6g}]")
    Fm = _chart_map(chart, M, F)
    rng = np.random.default_rng(seed)
    S = chart.projected_star.simplices
    Vh = chart.projected_star.vertices
    # samples of V_p: barycentric weight of p-hat above 1/(m+1) - delta
    thr = 1.0 / (m + 1) - delta
    lam = sample_barycentric(rng, samples * 4, m)
    t_idx = rng.integers(0, len(S), len(lam))
    p_pos = np.argmax(S == 0, axis=1)
    w_p = lam[np.arange(len(lam)), p_pos[t_idx]]
    keep = w_p > thr
    Xv = np.einsum("nk,nkd->nd", lam[keep], Vh[S[t_idx[keep]]])[:samples]
    # samples of the boundary: facets of top simplices not containing p-hat
    faces = [np.delete(s, pp) for s, pp in zip(S, p_pos)]
    lamb = sample_barycentric(rng, samples, m - 1) if m > 1 else np.ones((samples, 1))
    f_idx = rng.integers(0, len(faces), samples)
    Xb = np.einsum("nk,nkd->nd", lamb, Vh[np.array(faces)[f_idx]])
    Xb = np.concatenate([Xb, Vh[1:]])
    FV, FB = Fm(Xv), Fm(Xb)
    dmin = float(cKDTree(FB).query(FV)[0].min())
    guaranteed = xi < (1.0 / 6.0) * (m / (m + 1)) * (chart.s0 / chart.L0) * chart.t0 ** 2
    c = criterion("boundary separation: min dist F_p(V_p) to F_p(boundary) > 0", 0.0, dmin, True,
                  [{"delta": delta, "window": window, "analytic_guarantee": bool(guaranteed)}])
    return c
