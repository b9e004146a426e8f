"""Structured test meshes on the analytic manifolds, plus adversarial mutations."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .complex import GeometricComplex
from .errors import BadRecipe, VerticesOffManifold
from .manifolds import (BiSphere, Circle2D, GlobalReach, LocalLfs, SphereShell,
                        TestManifold, Torus3D, parse_manifold)
from .simplex import batch_min_face_thickness, batch_quality

# ---------------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class Icosphere:
    level: int


@dataclass(frozen=True)
class TorusGrid:
    nu: int
    nv: int
    grading: str = "uniform"     # or "conformal": rows spaced by the conformal latitude
    scheme: str = "alternate"    # or "stagger": odd rows shifted by half a step


@dataclass(frozen=True)
class PolyCircle:
    n: int


@dataclass(frozen=True)
class Sliver:
    simplex: int
    severity: float
    corner: int = 0


@dataclass(frozen=True)
class FlipOrientation:
    simplex: int
    corner: int = 0


@dataclass(frozen=True)
class RogueVertex:
    target: int                  # top simplex whose interior the new vertex sits over
    host: int | None = None      # top simplex split to attach the vertex (default: farthest)


@dataclass
class MeshRecipe:
    manifold: TestManifold
    generator: object
    mutations: list = field(default_factory=list)


def parse_recipe(text: str):
    """``icosphere:3``, ``polycircle:64`` or ``torusgrid:32x16[:conformal][:stagger]``."""
    if not isinstance(text, str) or ":" not in text:
        raise BadRecipe(f"recipe {text!r} must look like kind:params")
    kind, _, rest = text.partition(":")
    kind = kind.strip().lower()
    try:
        if kind == "icosphere":
            return Icosphere(int(rest))
        if kind == "polycircle":
            return PolyCircle(int(rest))
        if kind == "torusgrid":
            parts = rest.split(":")
            nu, nv = (int(v) for v in parts[0].lower().split("x"))
            grading, scheme = "uniform", "alternate"
            for opt in parts[1:]:
                if opt in ("uniform", "conformal"):
                    grading = opt
                elif opt in ("alternate", "stagger"):
                    scheme = opt
                else:
                    raise BadRecipe(f"unknown torusgrid option {opt!r}")
            return TorusGrid(nu, nv, grading, scheme)
    except BadRecipe:
        raise
    except ValueError:
        raise BadRecipe(f"recipe parameters {rest!r} for {kind!r} are malformed") from None
    raise BadRecipe(f"unknown recipe kind {kind!r}; expected icosphere, torusgrid or polycircle")


def parse_mutation(text: str):
    """``sliver:TOP:SEVERITY``, ``flip:TOP`` or ``rogue:TARGET[:HOST]``."""
    kind, *args = text.split(":")
    try:
        if kind == "sliver" and len(args) == 2:
            return Sliver(int(args[0]), float(args[1]))
        if kind == "flip" and len(args) == 1:
            return FlipOrientation(int(args[0]))
        if kind == "rogue" and len(args) in (1, 2):
            return RogueVertex(int(args[0]), int(args[1]) if len(args) == 2 else None)
    except ValueError:
        pass
    raise BadRecipe(f"cannot parse mutation {text!r}")


_PHI = (1 + 5 ** 0.5) / 2
_ICO_V = np.array([[-1, _PHI, 0], [1, _PHI, 0], [-1, -_PHI, 0], [1, -_PHI, 0],
                   [0, -1, _PHI], [0, 1, _PHI], [0, -1, -_PHI], [0, 1, -_PHI],
                   [_PHI, 0, -1], [_PHI, 0, 1], [-_PHI, 0, -1], [-_PHI, 0, 1]], dtype=float)
_ICO_F = np.array([[0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
                   [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
                   [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
                   [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1]])


def icosphere_unit(level: int):
    """Vertices on the unit 2-sphere and outward-oriented faces."""
    V = _ICO_V / np.linalg.norm(_ICO_V, axis=1, keepdims=True)
    F = _ICO_F.copy()
    for _ in range(level):
        n = len(V)
        E = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
        lo, hi = E.min(axis=1), E.max(axis=1)
        key = lo.astype(np.int64) * n + hi
        ukey, inv = np.unique(key, return_inverse=True)
        mid = V[ukey // n] + V[ukey % n]
        mid /= np.linalg.norm(mid, axis=1, keepdims=True)
        m_ids = (n + inv).reshape(3, -1)
        a, b, c = F[:, 0], F[:, 1], F[:, 2]
        ab, bc, ca = m_ids
        F = np.concatenate([np.stack([a, ab, ca], 1), np.stack([b, bc, ab], 1),
                            np.stack([c, ca, bc], 1), np.stack([ab, bc, ca], 1)])
        V = np.concatenate([V, mid])
    return V, F


def _torus_rows(R: float, r: float, nv: int, grading: str) -> np.ndarray:
    if grading == "uniform":
        return 2 * np.pi * np.arange(nv) / nv
    # conformal latitude w(v) = int r / (R + r cos v) dv, rows equally spaced in w
    vs = np.linspace(0, 2 * np.pi, 200_001)
    dw = r / (R + r * np.cos(vs))
    w = np.concatenate([[0.0], np.cumsum(0.5 * (dw[1:] + dw[:-1]) * np.diff(vs))])
    return np.interp(np.linspace(0, w[-1], nv + 1)[:-1], w, vs)


def torus_grid(T: Torus3D, g: TorusGrid):
    nu, nv = g.nu, g.nv
    if nu < 3 or nv < 3:
        raise BadRecipe("torusgrid needs nu >= 3 and nv >= 3")
    if g.scheme == "stagger" and nv % 2:
        raise BadRecipe("the staggered torus grid needs an even number of rows nv")
    v = _torus_rows(T.R, T.r, nv, g.grading)
    j = np.arange(nv)
    shift = 0.5 * (j % 2) if g.scheme == "stagger" else np.zeros(nv)
    u = 2 * np.pi * (np.arange(nu)[None, :] + shift[:, None]) / nu
    V = T.point(u, np.broadcast_to(v[:, None], u.shape)).reshape(-1, 3)
    J, I = np.meshgrid(j, np.arange(nu), indexing="ij")
    J1, I1 = (J + 1) % nv, (I + 1) % nu
    a, b, c, d = J * nu + I, J * nu + I1, J1 * nu + I, J1 * nu + I1
    if g.scheme == "stagger":
        even = (J % 2 == 0)
        t1 = np.where(even[..., None], np.stack([a, b, c], -1), np.stack([a, d, c], -1))
        t2 = np.where(even[..., None], np.stack([b, d, c], -1), np.stack([a, b, d], -1))
    else:
        flip = ((I + J) % 2 == 1)[..., None]
        t1 = np.where(flip, np.stack([a, b, d], -1), np.stack([a, b, c], -1))
        t2 = np.where(flip, np.stack([a, d, c], -1), np.stack([b, d, c], -1))
    F = np.concatenate([t1.reshape(-1, 3), t2.reshape(-1, 3)])
    return V, F


def polycircle(n: int, radius: float = 1.0):
    if n < 3:
        raise BadRecipe("polycircle needs at least 3 vertices")
    ang = 2 * np.pi * np.arange(n) / n
    V = radius * np.stack([np.cos(ang), np.sin(ang)], 1)
    F = np.stack([np.arange(n), (np.arange(n) + 1) % n], 1)
    return V, F


def _embed(V: np.ndarray, N: int) -> np.ndarray:
    out = np.zeros((len(V), N))
    out[:, :V.shape[1]] = V
    return out


def generate(recipe: MeshRecipe) -> GeometricComplex:
    """Build the complex for a recipe (vertices on M), then apply its mutations."""
    M, g = recipe.manifold, recipe.generator
    if isinstance(g, Icosphere):
        if g.level < 0:
            raise BadRecipe("icosphere level must be >= 0")
        V, F = icosphere_unit(g.level)
        if isinstance(M, BiSphere):
            n = len(V)
            V = np.concatenate([M.centres[0] + M.radius * V, M.centres[1] + M.radius * V])
            F = np.concatenate([F, F + n])
        elif isinstance(M, SphereShell) and M.m == 2:
            V = _embed(M.radius * V, M.N)
        else:
            raise BadRecipe(f"icosphere needs a 2-sphere or a bisphere, not {M!r}")
    elif isinstance(g, TorusGrid):
        if not isinstance(M, Torus3D):
            raise BadRecipe(f"torusgrid needs a torus, not {M!r}")
        V, F = torus_grid(M, g)
    elif isinstance(g, PolyCircle):
        if not (isinstance(M, SphereShell) and M.m == 1):
            raise BadRecipe(f"polycircle needs a circle, not {M!r}")
        V, F = polycircle(g.n, M.radius)
        V = _embed(V, M.N)
    else:
        raise BadRecipe(f"unknown generator {g!r}")
    A = GeometricComplex(V, F, oriented=True)
    for mut in recipe.mutations:
        A = apply_mutation(A, M, mut)
    return A


# ---------------------------------------------------------------------------
# mutations


def _facet_foot(P: np.ndarray, corner: int) -> np.ndarray:
    """Orthogonal projection of one vertex onto the affine hull of the opposite facet."""
    c = P[corner]
    rest = np.delete(P, corner, axis=0)
    if len(rest) == 1:
        return rest[0]
    E = (rest[1:] - rest[0]).T
    coef, *_ = np.linalg.lstsq(E, c - rest[0], rcond=None)
    return rest[0] + E @ coef


def apply_mutation(A: GeometricComplex, M: TestManifold, mut) -> GeometricComplex:
    S = A.simplices
    V = A.vertices.copy()
    if isinstance(mut, (Sliver, FlipOrientation)):
        if not 0 <= mut.simplex < A.n_top:
            raise BadRecipe(f"mutation targets simplex {mut.simplex} of {A.n_top}")
        P = V[S[mut.simplex]]
        cidx = S[mut.simplex][mut.corner]
        f = _facet_foot(P, mut.corner)
        if isinstance(mut, Sliver):
            if not 0 < mut.severity < 1:
                raise BadRecipe("sliver severity must lie in (0, 1)")
            target = f + (1 - mut.severity) * (P[mut.corner] - f)
        else:
            target = 2 * f - P[mut.corner]
        V[cidx] = M.project(target[None])[0]
        return A.copy_with_vertices(V)
    if isinstance(mut, RogueVertex):
        if not 0 <= mut.target < A.n_top:
            raise BadRecipe(f"rogue vertex targets simplex {mut.target} of {A.n_top}")
        bary = V[S].mean(axis=1)
        host = mut.host
        if host is None:
            host = int(np.argmax(np.linalg.norm(bary - bary[mut.target], axis=1)))
        if host == mut.target:
            raise BadRecipe("host and target simplex must differ")
        q = M.project(bary[mut.target][None])[0]
        nid = len(V)
        V = np.concatenate([V, q[None]])
        h = S[host]
        k = len(h)
        new = [np.where(np.arange(k) == i, nid, h) for i in range(k)]
        rows = np.concatenate([np.delete(S, host, axis=0), np.array(new)])
        return GeometricComplex(V, rows)
    raise BadRecipe(f"unknown mutation {mut!r}")


# ---------------------------------------------------------------------------
# constants


@dataclass
class MeshConstants:
    t0: float
    s0: float
    L0: float
    mu0: float
    eps0: float
    eps0_per_vertex: np.ndarray
    scale: np.ndarray               # lfs(p) or rch(M) per vertex
    L_min: float
    L_max: float
    t_min: float
    thinnest: int                   # top simplex attaining t0
    longest_ratio_vertex: int       # vertex attaining eps0
    shortest_ratio_vertex: int      # vertex attaining mu0 eps0

    def as_dict(self) -> dict:
        return {k: (float(v) if isinstance(v, (float, np.floating)) else int(v))
                for k, v in self.__dict__.items() if not isinstance(v, np.ndarray)}


def mesh_constants(c: GeometricComplex, M: TestManifold, policy=None, top_L=None, top_t=None,
                   chunk: int = 500_000) -> MeshConstants:
    """Tightest constants (t0, mu0, eps0) the mesh satisfies, per the chosen scale.

    With ``LocalLfs`` the scale at p is lfs(p); with ``GlobalReach`` it is
    the reach. eps0 is the largest ratio L(sigma)/scale(p) over top
    simplices sigma incident to p; mu0 eps0 is the smallest such ratio.
    """
    policy = GlobalReach() if policy is None else policy
    V = c.vertices
    off = ~M.on_manifold(V)
    if off.any():
        raise VerticesOffManifold(f"{int(off.sum())} vertices are off the manifold, e.g. vertex {int(np.flatnonzero(off)[0])}")
    if top_L is None or top_t is None:
        top_L = np.empty(c.n_top)
        top_t = np.empty(c.n_top)
        for a in range(0, c.n_top, chunk):
            P = c.simplex_points(np.arange(a, min(a + chunk, c.n_top)))
            top_L[a:a + chunk] = batch_quality(P)[0]
            top_t[a:a + chunk] = batch_min_face_thickness(P)
    if isinstance(policy, LocalLfs):
        scale = M.lfs(V)
    else:
        scale = np.full(c.n_vertices, M.reach)
    indptr, tops, _ = c.vertex_top_csr
    counts = np.diff(indptr)
    nz = counts > 0
    st = indptr[:-1][nz]
    Lmax = np.full(c.n_vertices, np.nan)
    Lmin = np.full(c.n_vertices, np.nan)
    Lmax[nz] = np.maximum.reduceat(top_L[tops], st)
    Lmin[nz] = np.minimum.reduceat(top_L[tops], st)
    eps_v = Lmax / scale
    eps0 = float(np.nanmax(eps_v))
    low = Lmin / scale
    mu0 = float(np.nanmin(low) / eps0) if eps0 > 0 else 0.0
    thin = int(np.argmin(top_t))
    return MeshConstants(float(top_t.min()), float(top_L.min()), float(top_L.max()), mu0, eps0, eps_v, scale,
                         float(top_L.min()), float(top_L.max()), float(top_t.min()), thin,
                         int(np.nanargmax(eps_v)), int(np.nanargmin(low)))


def default_manifold_for(recipe_text: str) -> str:
    kind = recipe_text.split(":")[0].lower()
    return {"icosphere": "sphere:2,3,1.0", "polycircle": "circle:1", "torusgrid": "torus:2,1"}.get(kind, "")


def make_recipe(manifold: str, recipe: str, mutations=()) -> MeshRecipe:
    try:
        M = parse_manifold(manifold)
    except ValueError as e:
        raise BadRecipe(str(e)) from None
    return MeshRecipe(M, parse_recipe(recipe), [parse_mutation(m) if isinstance(m, str) else m for m in mutations])


__all__ = ["Icosphere", "TorusGrid", "PolyCircle", "Sliver", "FlipOrientation", "RogueVertex", "MeshRecipe",
           "generate", "apply_mutation", "mesh_constants", "MeshConstants", "parse_recipe", "parse_mutation",
           "make_recipe", "icosphere_unit", "torus_grid", "polycircle", "Circle2D"]
