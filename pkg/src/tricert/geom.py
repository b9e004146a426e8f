"""Small dense linear algebra: affine flats, subspace angles, projections.

Flats are stored as a base point plus an orthonormal basis (columns).
Most functions also come in a batched form operating on stacks of bases
shaped ``(n, N, k)``; the certifier relies on those for large meshes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ZeroVector


@dataclass(frozen=True)
class Tolerances:
    """Single place for the numerical knobs used by the checks."""

    algebraic: float = 1e-10
    geometric: float = 1e-8
    orthonormal: float = 1e-12
    degenerate_thickness: float = 1e-12
    inside: float = 1e-9
    on_manifold: float = 1e-8
    medial: float = 1e-8


TOL = Tolerances()


def orthonormalize(vectors, tol: float = 1e-13) -> np.ndarray:
    """Modified Gram-Schmidt with one re-orthogonalisation pass.

    ``vectors`` holds candidate directions as columns. Columns that become
    numerically zero are dropped, so the result may have fewer columns.
    """
    A = np.array(vectors, dtype=float, copy=True)
    if A.ndim == 1:
        A = A[:, None]
    N, k = A.shape
    scale = max(np.abs(A).max(initial=0.0), 1.0)
    out = []
    for j in range(k):
        v = A[:, j].copy()
        for _ in range(2):
            for q in out:
                v -= q * (q @ v)
        nv = np.linalg.norm(v)
        if nv > tol * scale:
            out.append(v / nv)
    if not out:
        return np.zeros((N, 0))
    return np.stack(out, axis=1)


@dataclass(frozen=True)
class Flat:
    """Affine subspace ``base + span(basis)`` of R^N with orthonormal basis."""

    base: np.ndarray
    basis: np.ndarray = field(repr=False)

    def __post_init__(self):
        base = np.asarray(self.base, dtype=float).reshape(-1)
        basis = np.asarray(self.basis, dtype=float)
        if basis.ndim == 1:
            basis = basis[:, None]
        if basis.shape[0] != base.shape[0]:
            raise DimensionMismatch(
                f"basis has {basis.shape[0]} rows but base point has dimension {base.shape[0]}")
        k = basis.shape[1]
        if k and np.abs(basis.T @ basis - np.eye(k)).max() > 1e-10:
            basis = orthonormalize(basis)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def span(cls, *vectors, base=None) -> "Flat":
        """Linear span of the given vectors (base at the origin unless given)."""
        V = np.stack([np.asarray(v, dtype=float) for v in vectors], axis=1)
        if base is None:
            base = np.zeros(V.shape[0])
        return cls(base, orthonormalize(V))

    @classmethod
    def through(cls, points) -> "Flat":
        """Affine hull of a set of points (rows)."""
        P = np.asarray(points, dtype=float)
        if P.shape[0] == 1:
            return cls(P[0], np.zeros((P.shape[1], 0)))
        return cls(P[0], orthonormalize((P[1:] - P[0]).T))

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def ambient_dim(self) -> int:
        return self.base.shape[0]

    def complement(self) -> "Flat":
        """Orthogonal complement of the direction space, through the same base."""
        N, k = self.basis.shape
        if k == 0:
            return Flat(self.base, np.eye(N))
        if k == N:
            return Flat(self.base, np.zeros((N, 0)))
        q, _ = np.linalg.qr(self.basis, mode="complete")
        return Flat(self.base, q[:, k:])


@dataclass(frozen=True)
class LinearMapSpectrum:
    singular_values: np.ndarray
    operator_norm: float
    min_singular: float


def svd_spectrum(A) -> LinearMapSpectrum:
    s = np.linalg.svd(np.atleast_2d(np.asarray(A, dtype=float)), compute_uv=False)
    s = np.sort(s)[::-1]
    return LinearMapSpectrum(s, float(s[0]), float(s[-1]))


def _sin_cos_largest(BK: np.ndarray, BL: np.ndarray):
    # sine from the residual, cosine from the smallest singular value
    resid = BK - BL @ (BL.T @ BK)
    sin = np.linalg.norm(resid, 2) if BK.shape[1] else 0.0
    if BK.shape[1] == 0:
        return 0.0, 1.0
    sv = np.linalg.svd(BL.T @ BK, compute_uv=False) if BL.shape[1] else np.zeros(1)
    cos = sv.min() if sv.size == BK.shape[1] else 0.0
    return float(min(sin, 1.0)), float(min(cos, 1.0))


def _angle_from(sin: float, cos: float) -> float:
    # arcsin is accurate for small angles, arccos near pi/2
    if sin < np.sqrt(0.5):
        return float(np.arcsin(sin))
    return float(np.arccos(cos))


def sin_angle_between_flats(K: Flat, L: Flat) -> float:
    """Sine of the largest principal angle of K against L."""
    if K.dim > L.dim:
        raise DimensionMismatch(f"dim K = {K.dim} exceeds dim L = {L.dim}")
    if K.ambient_dim != L.ambient_dim:
        raise DimensionMismatch("flats live in different ambient spaces")
    return _sin_cos_largest(K.basis, L.basis)[0]


def angle_between_flats(K: Flat, L: Flat) -> float:
    """Largest principal angle of K against L, in [0, pi/2].

    The base points are ignored (the flats are compared as linear
    subspaces). Requires ``dim K <= dim L``.
    """
    if K.dim > L.dim:
        raise DimensionMismatch(f"dim K = {K.dim} exceeds dim L = {L.dim}")
    if K.ambient_dim != L.ambient_dim:
        raise DimensionMismatch("flats live in different ambient spaces")
    return _angle_from(*_sin_cos_largest(K.basis, L.basis))


def angle_vector_flat(u, L: Flat) -> float:
    u = np.asarray(u, dtype=float)
    nu = np.linalg.norm(u)
    if nu == 0.0:
        raise ZeroVector("angle of the zero vector is undefined")
    u = u / nu
    coef = L.basis.T @ u
    cos = float(min(np.linalg.norm(coef), 1.0))
    sin = float(min(np.linalg.norm(u - L.basis @ coef), 1.0))
    if cos == 0.0:
        return float(np.pi / 2)
    return _angle_from(sin, cos)


def complement_angle_identity_check(K: Flat, L: Flat, part: int | None = None):
    """Both sides of the orthogonal-complement angle identities.

    part 1 (equal dimensions): returns (angle(L^perp, K^perp), angle(K, L)).
    part 2 (L a hyperplane): returns (angle(L^perp, K), pi/2 - angle(K, L)).
    """
    if part is None:
        part = 1 if K.dim == L.dim else 2
    if part == 1:
        if K.dim != L.dim:
            raise DimensionMismatch("part 1 needs flats of equal dimension")
        return angle_between_flats(L.complement(), K.complement()), angle_between_flats(K, L)
    if L.dim != L.ambient_dim - 1:
        raise DimensionMismatch("part 2 needs L of codimension one")
    if K.dim == 0:
        raise DimensionMismatch("part 2 needs K of positive dimension")
    return angle_between_flats(L.complement(), K), np.pi / 2 - angle_between_flats(K, L)


def orthogonal_project(x, L: Flat) -> np.ndarray:
    """Orthogonal projection of x (or rows of x) onto the affine flat L."""
    x = np.asarray(x, dtype=float)
    d = x - L.base
    return L.base + (d @ L.basis) @ L.basis.T


def coordinates_in(x, L: Flat) -> np.ndarray:
    """Coordinates of the projection of x in the basis of L (relative to base)."""
    return (np.asarray(x, dtype=float) - L.base) @ L.basis


# ---------------------------------------------------------------------------
# batched helpers


def batch_orthonormalize(V: np.ndarray) -> np.ndarray:
    """Orthonormalise the columns of each matrix in a stack ``(n, N, k)``.

    Uses a thin QR factorisation; sign conventions follow the input order
    (the diagonal of R is made positive) so the column orientation is kept.
    """
    Q, R = np.linalg.qr(V)
    d = np.sign(np.diagonal(R, axis1=-2, axis2=-1))
    d[d == 0] = 1.0
    return Q * d[..., None, :]


def batch_sin_largest_angle(BK: np.ndarray, BL: np.ndarray) -> np.ndarray:
    """Sine of the largest principal angle between stacked orthonormal bases.

    ``BK`` is ``(n, N, k)`` and ``BL`` is ``(n, N, l)`` with ``k <= l``.
    """
    resid = BK - BL @ (np.swapaxes(BL, -1, -2) @ BK)
    G = np.swapaxes(resid, -1, -2) @ resid
    k = G.shape[-1]
    if k == 1:
        lam = G[..., 0, 0]
    elif k == 2:
        a, b, c = G[..., 0, 0], G[..., 0, 1], G[..., 1, 1]
        lam = 0.5 * (a + c) + np.sqrt(np.maximum(0.25 * (a - c) ** 2 + b * b, 0.0))
    else:
        lam = np.linalg.eigvalsh(G)[..., -1]
    return np.minimum(np.sqrt(np.maximum(lam, 0.0)), 1.0)


def householder_complement(n: np.ndarray) -> np.ndarray:
    """Orthonormal bases of the complements of unit vectors ``n`` (rows).

    Returns ``(len(n), d, d-1)``. The reflection mapping e_0 to the unit
    vector gives the remaining columns; the sign choice keeps it stable.
    """
    n = np.atleast_2d(n)
    k, d = n.shape
    s = np.where(n[:, 0] >= 0, 1.0, -1.0)
    v = n.copy()
    v[:, 0] += s
    vv = np.einsum("ij,ij->i", v, v)
    H = np.eye(d)[None] - 2.0 * v[:, :, None] * v[:, None, :] / vv[:, None, None]
    return H[:, :, 1:]
