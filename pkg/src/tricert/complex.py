"""Simplicial complexes with vertex coordinates.

Top simplices are stored as sorted vertex-id rows in one integer array; the
orientation of each top simplex is a separate parity bit relative to that
sorted order. Derived structures (faces, incidences, facet adjacency) are
computed lazily with numpy so that meshes with millions of triangles stay
tractable.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components

from .errors import (BadDimension, NotPure, PointOutsideStar, UnknownSimplex,
                     UnknownVertex)
from .geom import TOL
from .simplex import EuclideanSimplex, barycentric_coordinates, thickness


def _perm_parity(order: np.ndarray) -> np.ndarray:
    """Parity (0 even, 1 odd) of each row permutation, by counting inversions."""
    k = order.shape[1]
    inv = np.zeros(order.shape[0], dtype=np.int64)
    for a in range(k):
        for b in range(a + 1, k):
            inv += order[:, a] > order[:, b]
    return (inv % 2).astype(np.int8)


def _row_keys(rows: np.ndarray, n: int):
    """Encode short integer rows as single int64 keys when that fits."""
    k = rows.shape[1]
    if k == 0 or float(n) ** k >= 2.0 ** 62:
        return None
    key = np.zeros(rows.shape[0], dtype=np.int64)
    for c in range(k):
        key = key * n + rows[:, c]
    return key


def _unique_rows(rows: np.ndarray, n: int):
    """Unique rows with inverse index, via integer keys when possible."""
    keys = _row_keys(rows, n)
    if keys is None:
        uniq, inv = np.unique(rows, axis=0, return_inverse=True)
        return uniq, inv.reshape(-1)
    ukeys, first, inv = np.unique(keys, return_index=True, return_inverse=True)
    return rows[first], inv.reshape(-1)


@dataclass(frozen=True)
class FacetAdjacency:
    """Incidence between (m-1)-faces and top simplices.

    ``facets[f]`` are the sorted vertex rows; ``count[f]`` the number of
    top simplices containing each. ``pairs`` lists adjacent top simplices
    through facets of count two, together with the index of the vertex
    omitted from each (``omit``) and the facet id.
    """

    facets: np.ndarray
    count: np.ndarray
    pair_top: np.ndarray
    pair_omit: np.ndarray
    pair_facet: np.ndarray
    facet_of: np.ndarray = field(repr=False)  # (ntop, m+1) facet id for each omitted index


@dataclass(frozen=True)
class SubcomplexView:
    """A face-closed set of simplices of a parent complex."""

    parent: "GeometricComplex" = field(repr=False)
    simplex_keys: frozenset

    def __contains__(self, key) -> bool:
        return tuple(sorted(key)) in self.simplex_keys

    def __len__(self) -> int:
        return len(self.simplex_keys)

    def simplices(self, dim: int) -> list:
        return sorted(s for s in self.simplex_keys if len(s) == dim + 1)

    @property
    def vertices(self) -> list:
        return sorted(s[0] for s in self.simplex_keys if len(s) == 1)

    @property
    def dimension(self) -> int:
        return max((len(s) - 1 for s in self.simplex_keys), default=-1)

    def is_closed(self) -> bool:
        """Face-closure audit."""
        for s in self.simplex_keys:
            for d in range(1, len(s)):
                for f in combinations(s, d):
                    if f not in self.simplex_keys:
                        return False
        return True


def _closure(tops) -> frozenset:
    keys = set()
    for s in tops:
        s = tuple(int(v) for v in s)
        for d in range(1, len(s) + 1):
            keys.update(combinations(s, d))
    return frozenset(keys)


@dataclass
class ManifoldCheckResult:
    pure: bool
    coface_ok: bool
    links_ok: bool
    boundary_empty: bool
    partial: bool
    failures: list
    n_boundary_facets: int = 0

    @property
    def is_manifold(self) -> bool:
        """Manifold, possibly with boundary."""
        return self.pure and self.coface_ok and self.links_ok

    @property
    def is_closed_manifold(self) -> bool:
        return self.is_manifold and self.boundary_empty


class GeometricComplex:
    """Pure (or flagged impure) simplicial complex with vertex coordinates.

    Parameters
    ----------
    vertices : (n, N) array of coordinates.
    simplices : (k, m+1) integer array of top simplices. Rows are sorted
        internally; if ``oriented`` is true the parity of the sorting
        permutation is kept as the orientation of each simplex.
    extra : optional lower-dimensional maximal simplices (for impure input).
    """

    def __init__(self, vertices, simplices, oriented: bool = False, extra=()):
        V = np.asarray(vertices, dtype=float)
        if V.ndim == 1:
            V = V[:, None]
        S = np.asarray(simplices)
        if S.ndim != 2:
            raise BadDimension("simplices must be a 2-d integer array")
        S = S.astype(np.int64)
        if S.size and (S.min() < 0 or S.max() >= len(V)):
            raise UnknownVertex("simplex refers to a vertex index out of range")
        order = np.argsort(S, axis=1, kind="stable")
        S_sorted = np.take_along_axis(S, order, axis=1)
        idx_dtype = np.int32 if len(V) < 2 ** 31 - 1 else np.int64
        self.vertices = V
        self.simplices = S_sorted.astype(idx_dtype)
        self.extra = [tuple(sorted(int(v) for v in s)) for s in extra]
        self._given_parity = _perm_parity(order) if oriented else None
        self._cache: dict = {}

    # ------------------------------------------------------------------ basics
    @property
    def dimension_m(self) -> int:
        return self.simplices.shape[1] - 1

    @property
    def m(self) -> int:
        return self.dimension_m

    @property
    def ambient_N(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_top(self) -> int:
        return self.simplices.shape[0]

    @property
    def is_pure(self) -> bool:
        return not self.extra and self._isolated_vertices().size == 0

    def _isolated_vertices(self) -> np.ndarray:
        used = np.zeros(self.n_vertices, dtype=bool)
        used[self.simplices.ravel()] = True
        for s in self.extra:
            used[list(s)] = True
        return np.flatnonzero(~used)

    def simplex_points(self, idx=None) -> np.ndarray:
        """Coordinates of top simplices, shape ``(k, m+1, N)``."""
        S = self.simplices if idx is None else self.simplices[idx]
        return self.vertices[S]

    def euclidean(self, key) -> EuclideanSimplex:
        return EuclideanSimplex(self.vertices[list(key)])

    def copy_with_vertices(self, vertices) -> "GeometricComplex":
        c = GeometricComplex.__new__(GeometricComplex)
        c.vertices = np.asarray(vertices, dtype=float)
        c.simplices = self.simplices
        c.extra = list(self.extra)
        c._given_parity = self._given_parity
        c._cache = {k: v for k, v in self._cache.items() if k in _COMBINATORIAL_CACHE}
        return c

    # ----------------------------------------------------------- combinatorics
    def faces(self, d: int) -> np.ndarray:
        """All d-faces of the top simplices, as sorted unique rows."""
        m = self.dimension_m
        if not 0 <= d <= m:
            raise BadDimension(f"face dimension {d} outside [0, {m}]")
        key = ("faces", d)
        if key not in self._cache:
            if d == m:
                F = self.simplices
            else:
                cols = list(combinations(range(m + 1), d + 1))
                rows = np.concatenate([self.simplices[:, c] for c in cols], axis=0)
                F, _ = _unique_rows(rows, self.n_vertices)
            self._cache[key] = F
        return self._cache[key]

    @property
    def vertex_top_csr(self):
        """``(indptr, tops, corner)``: top simplices incident to each vertex."""
        if "vtop" not in self._cache:
            k = self.dimension_m + 1
            flat = self.simplices.ravel()
            order = np.argsort(flat, kind="stable")
            counts = np.bincount(flat, minlength=self.n_vertices)
            indptr = np.concatenate([[0], np.cumsum(counts)])
            self._cache["vtop"] = (indptr, (order // k).astype(np.int64), (order % k).astype(np.int8))
        return self._cache["vtop"]

    def tops_of_vertex(self, p: int) -> np.ndarray:
        indptr, tops, _ = self.vertex_top_csr
        return tops[indptr[p]:indptr[p + 1]]

    @property
    def facet_adjacency(self) -> FacetAdjacency:
        if "facets" not in self._cache:
            self._cache["facets"] = self._build_facet_adjacency()
        return self._cache["facets"]

    def _build_facet_adjacency(self) -> FacetAdjacency:
        m = self.dimension_m
        k = m + 1
        ntop = self.n_top
        S = self.simplices
        # incidence j <-> (top j % ntop, omitted position j // ntop)
        cols = [[c for c in range(k) if c != i] for i in range(k)]
        keys = None
        if k > 1 and float(self.n_vertices) ** m < 2.0 ** 62:
            keys = np.concatenate([_row_keys(S[:, c], self.n_vertices) for c in cols])
        if keys is None:
            rows = np.concatenate([S[:, c] for c in cols], axis=0)
            uniq, inv = np.unique(rows, axis=0, return_inverse=True)
            inv = inv.reshape(-1)
            perm = np.argsort(inv, kind="stable")
            count = np.bincount(inv, minlength=len(uniq))
            starts = np.concatenate([[0], np.cumsum(count)[:-1]])
        else:
            perm = np.argsort(keys, kind="stable")
            sk = keys[perm]
            del keys
            flag = np.empty(len(sk), dtype=bool)
            flag[:1] = True
            flag[1:] = sk[1:] != sk[:-1]
            del sk
            idx_t = np.int32 if k * ntop < 2 ** 31 - 1 else np.int64
            gid = np.cumsum(flag, dtype=idx_t) - 1
            starts = np.flatnonzero(flag)
            del flag
            inv = np.empty(len(perm), dtype=idx_t)
            inv[perm] = gid
            del gid
            count = np.diff(np.append(starts, len(perm)))
            first = perm[starts]
            ft, fo = first % ntop, first // ntop
            uniq = np.empty((len(first), m), dtype=S.dtype)
            for i in range(k):
                sel = fo == i
                uniq[sel] = S[ft[sel]][:, cols[i]]
            del first, ft, fo
        two = np.flatnonzero(count == 2)
        a = perm[starts[two]]
        b = perm[starts[two] + 1]
        del perm
        pair_top = np.stack([a % ntop, b % ntop], axis=1)
        pair_omit = np.stack([a // ntop, b // ntop], axis=1).astype(np.int8)
        facet_of = inv.reshape(k, ntop).T.copy()
        return FacetAdjacency(uniq, count, pair_top, pair_omit, two, facet_of)

    def simplex_keys(self) -> frozenset:
        if "keys" not in self._cache:
            keys = set(_closure(self.simplices.tolist()))
            keys.update(_closure(self.extra))
            keys.update((int(v),) for v in range(self.n_vertices))
            self._cache["keys"] = frozenset(keys)
        return self._cache["keys"]

    def _require(self, key) -> tuple:
        key = tuple(sorted(int(v) for v in np.atleast_1d(key)))
        if len(key) == 1 and 0 <= key[0] < self.n_vertices:
            return key
        if key not in self.simplex_keys():
            raise UnknownSimplex(f"{key} is not a simplex of the complex")
        return key

    def _tops_containing(self, key: tuple) -> np.ndarray:
        cand = self.tops_of_vertex(key[0])
        if len(key) > 1:
            S = self.simplices[cand]
            mask = np.ones(len(cand), dtype=bool)
            for v in key[1:]:
                mask &= (S == v).any(axis=1)
            cand = cand[mask]
        return cand

    def star(self, s) -> SubcomplexView:
        """Closed star: every simplex having ``s`` as a face, plus their faces."""
        key = self._require(s)
        tops = self.simplices[self._tops_containing(key)].tolist()
        tops += [e for e in self.extra if set(key) <= set(e)]
        if not tops:
            tops = [key]
        return SubcomplexView(self, _closure(tops))

    def skeleton(self, k: int) -> SubcomplexView:
        if not 0 <= k <= self.dimension_m:
            raise BadDimension(f"skeleton dimension {k} outside [0, {self.dimension_m}]")
        return SubcomplexView(self, frozenset(s for s in self.simplex_keys() if len(s) <= k + 1))

    def boundary_complex(self) -> SubcomplexView:
        """Closure of the (m-1)-faces that lie in exactly one top simplex."""
        if self.extra:
            raise NotPure("boundary is defined for pure complexes")
        fa = self.facet_adjacency
        bnd = fa.facets[fa.count == 1]
        return SubcomplexView(self, _closure(bnd.tolist()) if len(bnd) else frozenset())

    # ---------------------------------------------------------- manifold tests
    def is_manifold_complex(self) -> ManifoldCheckResult:
        m = self.dimension_m
        failures = []
        pure = self.is_pure
        if not pure:
            failures.append("complex is not pure: some maximal simplices have dimension < m")
        fa = self.facet_adjacency
        over = np.flatnonzero(fa.count > 2)
        coface_ok = over.size == 0
        if not coface_ok:
            failures.append(f"{over.size} facets lie in more than two top simplices, "
                            f"e.g. {tuple(fa.facets[over[0]].tolist())}")
        n_bnd = int((fa.count == 1).sum())
        partial = m > 3
        links_ok = True
        if m >= 2 and not partial and self.n_top:
            comps = self._vertex_link_components()
            bad = np.flatnonzero(comps > 1)
            if bad.size:
                links_ok = False
                failures.append(f"{bad.size} vertices have disconnected links, e.g. vertex {int(bad[0])}")
            if m == 3:
                chi, interior = self._vertex_link_euler()
                used = np.bincount(self.simplices.ravel(), minlength=self.n_vertices) > 0
                want = np.where(interior, 2, 1)
                badchi = np.flatnonzero(used & (chi != want))
                if badchi.size:
                    links_ok = False
                    failures.append(f"{badchi.size} vertex links have the wrong Euler characteristic")
        return ManifoldCheckResult(pure, coface_ok, links_ok, n_bnd == 0, partial, failures, n_bnd)

    def _vertex_link_components(self) -> np.ndarray:
        """Number of facet-connected components of the top simplices around each vertex."""
        m = self.dimension_m
        k = m + 1
        fa = self.facet_adjacency
        # corner (top, position) ids; join corners of shared facet vertices
        a_list, b_list = [], []
        for i0 in range(k):
            for i1 in range(k):
                sel = (fa.pair_omit[:, 0] == i0) & (fa.pair_omit[:, 1] == i1)
                if not sel.any():
                    continue
                ta, tb = fa.pair_top[sel, 0], fa.pair_top[sel, 1]
                pos_a = [j for j in range(k) if j != i0]
                pos_b = [j for j in range(k) if j != i1]
                for ja, jb in zip(pos_a, pos_b):
                    a_list.append(ta * k + ja)
                    b_list.append(tb * k + jb)
        ncorner = self.n_top * k
        idx_t = np.int32 if ncorner < 2 ** 31 - 1 else np.int64
        labels = np.arange(ncorner, dtype=idx_t)
        if a_list:
            a = np.concatenate(a_list).astype(idx_t)
            b = np.concatenate(b_list).astype(idx_t)
            del a_list, b_list
            while True:
                lo = np.minimum(labels[a], labels[b])
                new = labels.copy()
                np.minimum.at(new, a, lo)
                np.minimum.at(new, b, lo)
                del lo
                new = new[new]
                if np.array_equal(new, labels):
                    break
                labels = new
        roots = labels == np.arange(ncorner, dtype=idx_t)
        return np.bincount(self.simplices.ravel()[roots], minlength=self.n_vertices)

    def _vertex_link_euler(self):
        """Euler characteristic of vertex links (m = 3) and interior flags."""
        n = self.n_vertices
        chi = np.zeros(n, dtype=np.int64)
        for d, sgn in ((1, 1), (2, -1), (3, 1)):
            F = self.faces(d)
            chi += sgn * np.bincount(F.ravel(), minlength=n)
        fa = self.facet_adjacency
        bverts = fa.facets[fa.count == 1].ravel()
        interior = np.ones(n, dtype=bool)
        interior[bverts] = False
        return chi, interior

    def is_full_star(self, p: int) -> bool:
        """True iff the star of p is a manifold-with-boundary with p inside."""
        if not 0 <= p < self.n_vertices:
            raise UnknownVertex(f"vertex {p} not in complex")
        tops = self._tops_containing((p,))
        if tops.size == 0 or any(p in e for e in self.extra):
            return False
        sub = GeometricComplex(self.vertices, self.simplices[tops])
        fa = sub.facet_adjacency
        through_p = (fa.facets == p).any(axis=1)
        if (fa.count[through_p] != 2).any() or (fa.count > 2).any():
            return False
        m = self.dimension_m
        if m >= 2:
            if sub._vertex_link_components()[p] != 1:
                return False
            if m == 3:
                chi, _ = sub._vertex_link_euler()
                if chi[p] != 2:
                    return False
        return True

    # -------------------------------------------------------------- orientation
    def orientation(self):
        """Coherent orientation parities of the top simplices, or None.

        Parity 0 means the sorted vertex order is positively oriented. A
        supplied orientation is kept when it is coherent; otherwise one is
        propagated over each facet-connected component. Returns None when
        the complex is not orientable.
        """
        if "orient" in self._cache:
            return self._cache["orient"]
        fa = self.facet_adjacency
        ta, tb = fa.pair_top[:, 0], fa.pair_top[:, 1]
        rel = ((fa.pair_omit[:, 0].astype(np.int64) + fa.pair_omit[:, 1] + 1) % 2).astype(np.int8)

        def coherent(par):
            return bool(np.all((par[ta] ^ par[tb]) == rel))

        par = self._given_parity
        if par is None or not coherent(par):
            par = self._propagate_orientation(ta, tb, rel)
            if par is not None and not coherent(par):
                par = None
        self._cache["orient"] = par
        return par

    def _propagate_orientation(self, ta, tb, rel):
        ntop = self.n_top
        if ntop == 0:
            return np.zeros(0, dtype=np.int8)
        g = coo_matrix((np.ones(len(ta), dtype=np.int8), (ta, tb)), shape=(ntop, ntop)).tocsr()
        ncomp, comp = connected_components(g, directed=False)
        pred = np.full(ntop, -1, dtype=np.int64)
        for c in range(ncomp):
            root = int(np.flatnonzero(comp == c)[0]) if ncomp > 1 else 0
            _, pr = breadth_first_order(g, root, directed=False, return_predecessors=True)
            sel = pr >= 0
            pred[sel] = pr[sel]
        # relation between each simplex and its predecessor
        key_pairs = np.concatenate([ta * ntop + tb, tb * ntop + ta])
        key_rel = np.concatenate([rel, rel])
        order = np.argsort(key_pairs)
        key_pairs, key_rel = key_pairs[order], key_rel[order]
        has = pred >= 0
        q = pred[has] * ntop + np.flatnonzero(has)
        pos = np.searchsorted(key_pairs, q)
        acc = np.zeros(ntop, dtype=np.int8)
        acc[has] = key_rel[pos]
        ptr = pred.copy()
        # pointer doubling: accumulate parity along the path to the root
        while (ptr >= 0).any():
            live = ptr >= 0
            idx = np.flatnonzero(live)
            acc[idx] ^= acc[ptr[idx]]
            ptr[idx] = ptr[ptr[idx]]
        return acc

    # ------------------------------------------------------ geometric queries
    def open_star_membership(self, s, x, tol: float = TOL.inside) -> bool:
        """Whether x lies in the relative interior of some simplex containing s."""
        key = self._require(s)
        x = np.asarray(x, dtype=float)
        for t in self._tops_containing(key):
            top = self.simplices[t]
            es = EuclideanSimplex(self.vertices[top])
            if thickness(es) < TOL.degenerate_thickness:
                continue
            lam = barycentric_coordinates(es, x)
            recon = lam @ es.vertices
            if np.linalg.norm(recon - x) > TOL.geometric * max(1.0, np.abs(x).max()):
                continue
            if lam.min() < -tol:
                continue
            pos = {int(v): i for i, v in enumerate(top)}
            if all(lam[pos[v]] > tol for v in key):
                return True
        return False

    def locate_in_star(self, p: int, x, tol: float = TOL.inside):
        """First top simplex of st(p) containing x, with barycentric coordinates."""
        x = np.asarray(x, dtype=float)
        for t in self.tops_of_vertex(p):
            es = EuclideanSimplex(self.vertices[self.simplices[t]])
            if thickness(es) < TOL.degenerate_thickness:
                continue
            lam = barycentric_coordinates(es, x)
            if np.linalg.norm(lam @ es.vertices - x) > TOL.geometric * max(1.0, np.abs(x).max()):
                continue
            if lam.min() >= -tol:
                return int(t), lam
        return None

    def shrunken_star_contains(self, p: int, x, delta: float) -> bool:
        """Whether the barycentric weight of p at x exceeds 1/(m+1) - delta."""
        m = self.dimension_m
        if not 0 < delta < 1.0 / (m + 1):
            raise ValueError(f"delta = {delta} must lie in (0, 1/(m+1))")
        hit = self.locate_in_star(p, x)
        if hit is None:
            raise PointOutsideStar(f"point is not in any top simplex of st({p})")
        t, lam = hit
        i = int(np.flatnonzero(self.simplices[t] == p)[0])
        return bool(lam[i] > 1.0 / (m + 1) - delta)


_COMBINATORIAL_CACHE = {"vtop", "facets", "keys", "orient"} | {("faces", d) for d in range(8)}
