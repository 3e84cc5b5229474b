"""Finite rooted metric spaces: tree validators, correspondences,
Gromov-Hausdorff bounds and Hausdorff distances."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path

TOL = 1e-12
GH_EXACT_LIMIT = 5


@dataclass(frozen=True, eq=False)
class FiniteRootedMetricSpace:
    d: np.ndarray
    root: int = 0
    labels: tuple | None = None

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        object.__setattr__(self, "d", d)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] == 0:
            raise ValueError("distance table must be square and nonempty")
        if not 0 <= self.root < d.shape[0]:
            raise ValueError("root index out of range")

    @property
    def n(self) -> int:
        return self.d.shape[0]

    def validate(self, tol: float = TOL) -> None:
        d = self.d
        if np.any(np.abs(np.diag(d)) > tol):
            raise ValueError("nonzero self-distance")
        if np.any(np.abs(d - d.T) > tol):
            raise ValueError("distance table not symmetric")
        if np.any(d < -tol):
            raise ValueError("negative distance")
        # d[i,k] <= d[i,j] + d[j,k] for all triples
        viol = d[:, None, :] - d[:, :, None] - d[None, :, :]
        if np.max(viol) > tol:
            raise ValueError("triangle inequality fails")

    @property
    def diameter(self) -> float:
        return float(self.d.max())

    @property
    def root_eccentricity(self) -> float:
        return float(self.d[self.root].max())

    def subspace(self, idx, root: int | None = None) -> "FiniteRootedMetricSpace":
        idx = list(idx)
        r = idx.index(self.root) if root is None else root
        return FiniteRootedMetricSpace(self.d[np.ix_(idx, idx)], r)


def interval_space(points, root: int = 0) -> FiniteRootedMetricSpace:
    x = np.asarray(points, dtype=float)
    return FiniteRootedMetricSpace(np.abs(x[:, None] - x[None, :]), root)


def four_point_check(X: FiniteRootedMetricSpace, tol: float = 1e-9) -> bool:
    """d(a,b)+d(c,e) <= max(d(a,c)+d(b,e), d(a,e)+d(b,c)) for all quadruples."""
    d = X.d
    for a, b, c, e in itertools.combinations(range(X.n), 4):
        s = sorted([d[a, b] + d[c, e], d[a, c] + d[b, e], d[a, e] + d[b, c]])
        # the two largest of the three sums must agree
        if s[2] - s[1] > tol:
            return False
    return True


def branch_point_check(X: FiniteRootedMetricSpace, tol: float = 1e-9) -> bool:
    """Every triple has its median among the points."""
    d = X.d
    for a, b, c in itertools.combinations(range(X.n), 3):
        ga = 0.5 * (d[a, b] + d[a, c] - d[b, c])
        gb = 0.5 * (d[a, b] + d[b, c] - d[a, c])
        gc = 0.5 * (d[a, c] + d[b, c] - d[a, b])
        hit = (np.abs(d[a] - ga) < tol) & (np.abs(d[b] - gb) < tol) & (np.abs(d[c] - gc) < tol)
        if not hit.any():
            return False
    return True


def cycle_metric(n: int) -> FiniteRootedMetricSpace:
    i = np.arange(n)
    k = np.abs(i[:, None] - i[None, :])
    return FiniteRootedMetricSpace(np.minimum(k, n - k).astype(float), 0)


# -- correspondences -------------------------------------------------------

def validate_correspondence(R, X: FiniteRootedMetricSpace, Y: FiniteRootedMetricSpace) -> None:
    R = set(R)
    if (X.root, Y.root) not in R:
        raise ValueError("correspondence must pair the roots")
    if {a for a, _ in R} != set(range(X.n)) or {b for _, b in R} != set(range(Y.n)):
        raise ValueError("relation does not project onto both spaces")


def distortion(R, X: FiniteRootedMetricSpace, Y: FiniteRootedMetricSpace) -> float:
    validate_correspondence(R, X, Y)
    a, b = np.array(sorted(set(R))).T
    return float(np.max(np.abs(X.d[np.ix_(a, a)] - Y.d[np.ix_(b, b)])))


def gh_upper_from_correspondence(R, X, Y) -> float:
    return 0.5 * distortion(R, X, Y)


def gh_lower_bound(X: FiniteRootedMetricSpace, Y: FiniteRootedMetricSpace) -> float:
    return 0.5 * max(abs(X.diameter - Y.diameter),
                     abs(X.root_eccentricity - Y.root_eccentricity))


def _root_preserving_maps(n_from: int, n_to: int, r_from: int, r_to: int):
    others = [x for x in range(n_from) if x != r_from]
    for img in itertools.product(range(n_to), repeat=len(others)):
        f = np.empty(n_from, dtype=np.int64)
        f[r_from] = r_to
        f[others] = img
        yield f


def gh_exact_small(X: FiniteRootedMetricSpace, Y: FiniteRootedMetricSpace,
                   certificate: bool = False):
    """Pointed GH distance by exhaustive search.

    Any correspondence contains graph(f) together with graph(g) transposed
    for some root-preserving f: X -> Y, g: Y -> X, and distortion only grows
    with the relation, so the minimum over such unions is exact.
    """
    if max(X.n, Y.n) > GH_EXACT_LIMIT:
        raise ValueError(f"exact GH guarded to {GH_EXACT_LIMIT} points")
    dx, dy = X.d, Y.d
    fs = list(_root_preserving_maps(X.n, Y.n, X.root, Y.root))
    gs = list(_root_preserving_maps(Y.n, X.n, Y.root, X.root))
    # within-f and within-g parts do not interact; the cross term does
    df = [np.max(np.abs(dx - dy[np.ix_(f, f)])) for f in fs]
    dg = [np.max(np.abs(dx[np.ix_(g, g)] - dy)) for g in gs]
    best, arg = np.inf, None
    ix, iy = np.arange(X.n), np.arange(Y.n)
    for a, f in enumerate(fs):
        if df[a] >= best:
            continue
        for b, g in enumerate(gs):
            m = max(df[a], dg[b])
            if m >= best:
                continue
            # pairs (x, f x) against (g y, y): |d(x, g y) - d(f x, y)|
            cross = np.max(np.abs(dx[np.ix_(ix, g)] - dy[np.ix_(f, iy)]))
            m = max(m, cross)
            if m < best:
                best, arg = m, (f, g)
    val = 0.5 * float(best)
    if certificate:
        f, g = arg
        R = {(int(x), int(f[x])) for x in ix} | {(int(g[y]), int(y)) for y in iy}
        return val, R
    return val


def nearest_correspondence(X: FiniteRootedMetricSpace, sub) -> set:
    """Correspondence between X and its subspace on indices ``sub``: each
    point pairs with a nearest point of the subspace."""
    sub = list(sub)
    if X.root not in sub:
        raise ValueError("subspace must contain the root")
    pos = {x: k for k, x in enumerate(sub)}
    R = {(x, pos[x]) for x in sub}
    D = X.d[:, sub]
    for x in range(X.n):
        if x not in pos:
            R.add((x, int(np.argmin(D[x]))))
    return R


# -- Hausdorff -------------------------------------------------------------

def hausdorff_subsets(Z: FiniteRootedMetricSpace, A, B) -> float:
    A, B = list(A), list(B)
    if not A or not B:
        raise ValueError("empty subset")
    D = Z.d[np.ix_(A, B)]
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


# -- trees -----------------------------------------------------------------

def tree_to_metric(t, a: float = 1.0, vertices=None) -> FiniteRootedMetricSpace:
    """Scaled graph metric of a RootedTreeGraph (BFS distances)."""
    if a <= 0:
        raise ValueError("scale must be positive")
    verts = np.asarray(t.vertices if vertices is None else list(vertices), dtype=np.int64)
    pos = {int(x): k for k, x in enumerate(verts)}
    if int(t.root) not in pos:
        raise ValueError("vertex list must contain the root")
    kids = np.flatnonzero(t.parent >= 0)
    n = t.parent.size
    A = csr_matrix((np.ones(kids.size), (kids, t.parent[kids])), shape=(n, n))
    D = shortest_path(A, directed=False, unweighted=True, indices=verts)[:, verts]
    if not np.all(np.isfinite(D)):
        raise ValueError("tree is disconnected on the requested vertices")
    return FiniteRootedMetricSpace(a * D, pos[int(t.root)], tuple(int(x) for x in verts))


def covering_radius_metric(X: FiniteRootedMetricSpace, sub) -> float:
    return float(X.d[:, list(sub)].min(axis=1).max())
