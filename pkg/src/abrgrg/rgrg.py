"""Point clouds on the half-triangle, the root growth with re-grafting map,
c-decomposability and the c-RGRG.

A state RGRG(t) is stored as a set of segments. Each segment covers the
labels (lo, hi] (the first one also owns 0), is isometric to that interval,
has its ``hi`` end towards the root and hangs from a label ``att`` on a
parent segment. Root growth just moves ``hi`` of the root segment; a
re-graft at time tau with point p cuts the segment holding p at p and hangs
the lower piece [lo, p] from label tau of the root segment.
"""

from __future__ import annotations

import bisect
import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .walk import as_generator

TOL = 1e-12


@dataclass(frozen=True)
class PointCloud:
    """Finite point set {(t, x)} with 0 < x <= t, complete up to ``horizon``."""

    points: np.ndarray
    horizon: float = math.inf

    @classmethod
    def of(cls, pts, horizon: float = math.inf) -> "PointCloud":
        arr = np.asarray(pts, dtype=float).reshape(-1, 2)
        if arr.size and np.any((arr[:, 1] <= 0) | (arr[:, 1] > arr[:, 0])):
            raise ValueError("points must satisfy 0 < x <= t")
        order = np.argsort(arr[:, 0], kind="stable")
        return cls(arr[order], float(horizon))

    def __len__(self) -> int:
        return self.points.shape[0]

    def below(self, t: float) -> "PointCloud":
        return PointCloud(self.points[self.points[:, 0] <= t], min(self.horizon, t))


def is_nice(pi: PointCloud) -> bool:
    """No two points on a vertical line t = const, none sharing a level x,
    and a finite representation (always finite here)."""
    P = pi.points
    if P.shape[0] < 2:
        return True
    return (np.unique(P[:, 0]).size == P.shape[0]) and (np.unique(P[:, 1]).size == P.shape[0])


def jump_times(pi: PointCloud, T: float = math.inf) -> list[tuple[float, float]]:
    """(tau_i, p_i) in increasing order, up to time T."""
    if not is_nice(pi):
        raise ValueError("point cloud is not nice")
    return [(float(t), float(x)) for t, x in pi.points if t <= T]


def sample_poisson_cloud(T: float, stream) -> PointCloud:
    """Poisson process with Lebesgue intensity on {0 < x <= t <= T}."""
    if T <= 0:
        raise ValueError("T must be positive")
    rng = as_generator(stream)
    n = rng.poisson(T * T / 2)
    t = T * np.sqrt(rng.random(n))
    x = t * (1.0 - rng.random(n))
    return PointCloud.of(np.column_stack([t, x]), horizon=T)


class RgrgState:
    """RGRG^pi(t) as a segment tree."""

    def __init__(self, t: float = 0.0):
        self.t = 0.0
        self.lo = [0.0]
        self.hi = [0.0]
        self.par = [-1]
        self.att = [0.0]
        self.kids: list[list[int]] = [[]]
        self.root_seg = 0
        self._los = [0.0]        # sorted lower ends
        self._ids = [0]
        self.jumps: list[tuple[float, float]] = []
        self.grow_to(t)

    @classmethod
    def from_cloud(cls, pi: PointCloud, t: float) -> "RgrgState":
        if t < 0:
            raise ValueError("t must be nonnegative")
        st = cls()
        for tau, p in jump_times(pi, t):
            st.grow_to(tau)
            st.regraft(tau, p)
        st.grow_to(t)
        return st

    # -- dynamics ---------------------------------------------------------
    def grow_to(self, t: float) -> None:
        if t < self.t:
            raise ValueError("time runs forward only")
        self.hi[self.root_seg] = t
        self.t = t

    def segment_of(self, y: float) -> int:
        if y < -TOL or y > self.t + TOL:
            raise ValueError(f"label {y} outside [0, {self.t}]")
        if y <= 0.0:
            return self._ids[0]
        k = bisect.bisect_left(self._los, y) - 1
        return self._ids[max(k, 0)]

    def regraft(self, tau: float, p: float) -> None:
        if abs(tau - self.t) > TOL:
            raise ValueError("re-graft must happen at the current time")
        self.jumps.append((tau, p))
        if p >= self.t:
            return
        s = self.segment_of(p)
        new = len(self.lo)
        self.lo.append(self.lo[s])
        self.hi.append(p)
        moved = [c for c in self.kids[s] if self.att[c] <= p]
        self.kids[s] = [c for c in self.kids[s] if self.att[c] > p]
        self.kids.append(moved)
        for c in moved:
            self.par[c] = new
        k = self._ids.index(s)
        self._ids[k] = new
        self._los.insert(k + 1, p)
        self._ids.insert(k + 1, s)
        self.lo[s] = p
        self.par.append(self.root_seg)
        self.att.append(self.t)
        self.kids[self.root_seg].append(new)

    # -- metric -----------------------------------------------------------
    def _chain(self, y: float) -> list[tuple[int, float]]:
        s = self.segment_of(y)
        out = [(s, y)]
        while self.par[s] >= 0:
            out.append((self.par[s], self.att[s]))
            s = self.par[s]
        return out

    def _h_seg(self, s: int, memo: dict) -> float:
        if s in memo:
            return memo[s]
        if self.par[s] < 0:
            memo[s] = 0.0
        else:
            q = self.par[s]
            memo[s] = (self.hi[q] - self.att[s]) + self._h_seg(q, memo)
        return memo[s]

    def height(self, y: float, memo: dict | None = None) -> float:
        memo = {} if memo is None else memo
        s = self.segment_of(y)
        return (self.hi[s] - y) + self._h_seg(s, memo)

    def distance(self, x: float, y: float, memo: dict | None = None) -> float:
        memo = {} if memo is None else memo
        cx = self._chain(x)
        where = {s: u for s, u in cx}
        for s, u in self._chain(y):
            if s in where:
                meet = max(u, where[s])
                hm = (self.hi[s] - meet) + self._h_seg(s, memo)
                return self.height(x, memo) + self.height(y, memo) - 2 * hm
        raise RuntimeError("segments do not share the root")

    def distance_table(self, queries) -> tuple[np.ndarray, np.ndarray]:
        q = [float(y) for y in queries]
        memo: dict = {}
        n = len(q)
        D = np.zeros((n, n))
        for a in range(n):
            for b in range(a + 1, n):
                D[a, b] = D[b, a] = self.distance(q[a], q[b], memo)
        root = np.array([self.height(y, memo) for y in q])
        return D, root

    def _segment_tables(self):
        n = len(self.lo)
        H = np.array([self._h_seg(q, {}) for q in range(n)])
        # E[a, q]: label at which the chain of segment a enters q (nan if q
        # is not on it, and a's own labels are used when q == a)
        E = np.full((n, n), np.nan)
        anc = [dict(self._seg_chain(a)) for a in range(n)]
        for a in range(n):
            for q, u in anc[a].items():
                E[a, q] = u
        depth = np.array([len(anc[a]) for a in range(n)])
        L = np.zeros((n, n), dtype=np.int64)
        for a in range(n):
            for b in range(n):
                common = [q for q in anc[a] if q in anc[b]]
                L[a, b] = max(common, key=lambda q: depth[q])
        return H, E, L

    def _seg_chain(self, a: int) -> list[tuple[int, float]]:
        out = [(a, np.nan)]
        while self.par[a] >= 0:
            out.append((self.par[a], self.att[a]))
            a = self.par[a]
        return out

    def distance_matrix(self, queries) -> tuple[np.ndarray, np.ndarray]:
        """Vectorised ``distance_table``."""
        q = np.asarray(queries, dtype=float)
        if q.size and (q.min() < -TOL or q.max() > self.t + TOL):
            raise ValueError("query outside [0, t]")
        H, E, L = self._segment_tables()
        los = np.asarray(self._los)
        ids = np.asarray(self._ids)
        k = np.clip(np.searchsorted(los, q, side="left") - 1, 0, None)
        seg = ids[k]
        hi = np.asarray(self.hi)
        h = hi[seg] - q + H[seg]
        C = L[seg[:, None], seg[None, :]]
        ux = np.where(seg[:, None] == C, q[:, None], E[seg[:, None], C])
        uy = np.where(seg[None, :] == C, q[None, :], E[seg[None, :], C])
        meet = np.maximum(ux, uy)
        hm = hi[C] - meet + H[C]
        D = h[:, None] + h[None, :] - 2 * hm
        np.fill_diagonal(D, 0.0)
        return np.maximum(D, 0.0), h

    @property
    def total_length(self) -> float:
        return float(sum(h - l for l, h in zip(self.lo, self.hi)))

    def segments(self) -> list[dict]:
        return [{"id": s, "lo": self.lo[s], "hi": self.hi[s], "parent": self.par[s],
                 "attach": self.att[s]} for s in range(len(self.lo))]

    def node_labels(self) -> list[float]:
        labels = {0.0, self.t}
        for s in range(len(self.lo)):
            labels.add(self.lo[s])
            labels.add(self.hi[s])
            if self.par[s] >= 0:
                labels.add(self.att[s])
        return sorted(labels)

    def grid(self, h: float) -> list[float]:
        """Labels covering every segment with spacing at most h, endpoints
        included, so each label of [0, t] lies within h/2 of a grid label
        on its own segment."""
        out = set(self.node_labels())
        for l, hi in zip(self.lo, self.hi):
            if hi - l > h:
                k = int(math.ceil((hi - l) / h))
                out.update((l + (hi - l) * np.arange(1, k) / k).tolist())
        return sorted(out)

    def to_json(self) -> dict:
        return {"t": self.t, "jumps": self.jumps, "segments": self.segments()}


def rgrg_evaluate(pi: PointCloud, t: float, queries) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise distances of RGRG^pi(t) at the query labels and their
    distances to the root t."""
    for y in queries:
        if not 0.0 <= y <= t:
            raise ValueError(f"query {y} outside [0, {t}]")
    return RgrgState.from_cloud(pi, t).distance_table(queries)


def rgrg_distance_literal(pi: PointCloud, t: float, x: float, y: float) -> float:
    """Recursive evaluation of the growth / re-graft rules (oracle only).

    The recursion revisits the same (i, a, b) triples many times, so it is
    memoised; without the cache it is exponential in the number of jumps.
    """
    J = jump_times(pi, t)
    taus = [0.0] + [a for a, _ in J]
    ps = [None] + [b for _, b in J]

    @functools.lru_cache(maxsize=None)
    def D(i, a, b):
        # metric right after the i-th re-graft, on [0, tau_i]
        if i == 0:
            return 0.0
        tau, p = taus[i], ps[i]
        g = lambda u, w: G(i - 1, tau, u, w)
        inside = lambda z: abs(g(tau, z) - g(tau, p) - g(p, z)) < 1e-12
        ia, ib = inside(a), inside(b)
        if ia == ib:
            return g(a, b)
        if ib:
            return g(a, tau) + g(p, b)
        return g(b, tau) + g(p, a)

    @functools.lru_cache(maxsize=None)
    def G(i, s, a, b):
        # growth from tau_i up to time s
        ti = taus[i]
        if a <= ti and b <= ti:
            return D(i, a, b)
        if a > ti and b > ti:
            return abs(a - b)
        if a > ti:
            return (a - ti) + D(i, ti, b)
        return (b - ti) + D(i, ti, a)

    k = len(J)
    if k and abs(taus[k] - t) == 0.0:
        return D(k, x, y)
    return G(k, t, x, y)


# -- c-decomposability -----------------------------------------------------

@dataclass(frozen=True)
class BeyondHorizon:
    """No violation up to the cloud horizon; sigma is at least ``known_up_to``."""

    known_up_to: float

    def __gt__(self, other) -> bool:
        return other < self.known_up_to

    def __repr__(self) -> str:
        return f"BeyondHorizon(>= {self.known_up_to})"


NOT_APPLICABLE = "not applicable"


def _floor_div(T: float, c: float) -> int:
    return int(math.floor(T / c + 1e-12))


def cell_index(pi: PointCloud, c: float) -> tuple[np.ndarray, np.ndarray]:
    """(i, j) of each point: square B_(i,j) when i < j, upper triangle
    E_{j-1} when i == j."""
    P = pi.points
    j = np.floor(P[:, 0] / c).astype(np.int64) + 1
    i = np.floor(P[:, 1] / c).astype(np.int64) + 1
    return i, j


def c_counts(pi: PointCloud, c: float, K: int) -> tuple[int, int, int, int, int]:
    """(N1, N2, M1, M2, E0) at level K = floor(T/c); E0 counts points in the
    triangle E_0, which the definition does not constrain."""
    i, j = cell_index(pi, c)
    sq = (i < j) & (j <= K)
    tri = (i == j)
    jt = j - 1                     # triangle index
    n2 = int(np.unique(jt[tri & (jt >= 1) & (jt <= K)]).size)
    e0 = int(np.count_nonzero(tri & (jt == 0)))
    cells, counts = (np.unique(np.column_stack([i[sq], j[sq]]), axis=0, return_counts=True)
                     if sq.any() else (np.zeros((0, 2), int), np.zeros(0, int)))
    n1 = int(np.count_nonzero(counts >= 2))
    m1 = 0
    m2 = 0
    if cells.shape[0]:
        _, per_col = np.unique(cells[:, 1], return_counts=True)
        _, per_row = np.unique(cells[:, 0], return_counts=True)
        m1 = int((per_col * (per_col - 1) // 2).sum())
        m2 = int((per_row * (per_row - 1) // 2).sum())
    return n1, n2, m1, m2, e0


@dataclass
class CDecomposability:
    K: int
    counts: tuple
    decomposable: bool | str
    sigma: object
    e0_points: int
    fails_at_start: bool = False


def sigma_c(pi: PointCloud, c: float):
    """sigma^{pi,c} = (K* + 1) c for the largest decomposable level K*,
    0.0 when level 3 already fails, BeyondHorizon when no level checkable
    from the cloud fails."""
    Kmax = _floor_div(pi.horizon, c) - 1 if math.isfinite(pi.horizon) else None
    if Kmax is None:
        last = float(pi.points[:, 0].max()) if len(pi) else 0.0
        Kcap = max(3, _floor_div(last, c) + 1)
    else:
        Kcap = Kmax
    if Kcap < 3:
        return NOT_APPLICABLE
    for K in range(3, Kcap + 1):
        n1, n2, m1, m2, _ = c_counts(pi, c, K)
        if n1 or n2 or m1 or m2:
            return 0.0 if K == 3 else K * c
    return BeyondHorizon(math.inf if Kmax is None else (Kcap + 1) * c)


def check_c_decomposable(pi: PointCloud, c: float, T: float) -> CDecomposability:
    if c <= 0:
        raise ValueError("c must be positive")
    K = _floor_div(T, c)
    cnt = c_counts(pi, c, max(K, 0))
    if K < 3:
        return CDecomposability(K, cnt[:4], NOT_APPLICABLE, NOT_APPLICABLE, cnt[4])
    sig = sigma_c(pi, c)
    return CDecomposability(K, cnt[:4], not any(cnt[:4]), sig, cnt[4],
                            fails_at_start=(sig == 0.0))


def sigma_exceeds(sig, t: float) -> bool:
    if isinstance(sig, BeyondHorizon):
        if t >= sig.known_up_to:
            raise ValueError("comparison beyond the cloud horizon")
        return True
    if sig == NOT_APPLICABLE:
        raise ValueError("sigma not applicable")
    return sig > t


def c_rgrg(pi: PointCloud, c: float, t: float) -> RgrgState:
    """RGRG^pi at t ∧ sigma^{pi,c}."""
    if c <= 0:
        raise ValueError("c must be positive")
    sig = sigma_c(pi, c)
    if sig == NOT_APPLICABLE:
        raise ValueError("cloud horizon shorter than 4c")
    if isinstance(sig, BeyondHorizon):
        if t > sig.known_up_to:
            raise ValueError("t beyond the cloud horizon")
        stop = t
    else:
        stop = min(t, sig)
    st = RgrgState.from_cloud(pi, stop)
    return st


# -- branches --------------------------------------------------------------

def z_pattern(pi: PointCloud, c: float, k: int) -> np.ndarray:
    Z = np.zeros((k + 1, k + 1), dtype=np.int64)
    i, j = cell_index(pi, c)
    for a, b in zip(i, j):
        if a < b <= k:
            Z[a, b] = 1
    return Z


def matching_from_pattern(Z: np.ndarray) -> list[tuple[int, int]] | None:
    """The pairs (i_m, j_m) if the ones of Z use pairwise distinct indices."""
    pairs = [(int(a), int(b)) for a, b in zip(*np.nonzero(Z))]
    used = [x for pr in pairs for x in pr]
    if len(used) != len(set(used)):
        return None
    return sorted(pairs, key=lambda pr: pr[1])


@dataclass
class Branch:
    lo: float
    hi: float

    @property
    def length(self) -> float:
        return self.hi - self.lo


def branch_intervals(pairs, c: float, k: int) -> list[Branch | None]:
    """I_m = [i'_m c, (i'_{m+1} - 1) c] for m = 0..2n. Consecutive indices
    give a single point, which still belongs to the union; None only when
    the interval is empty."""
    idx = sorted(x for pr in pairs for x in pr)
    ip = [0] + idx + [k + 1]
    out = []
    for m in range(len(ip) - 1):
        a, b = ip[m] * c, (ip[m + 1] - 1) * c
        out.append(Branch(a, b) if b >= a - TOL else None)
    return out


def branch_hypotheses(pi: PointCloud, c: float, k: int, T: float | None = None) -> tuple[bool, str]:
    T = k * c if T is None else T
    sig = sigma_c(pi, c)
    if sig == NOT_APPLICABLE:
        return False, "cloud too short"
    if isinstance(sig, BeyondHorizon):
        if T >= sig.known_up_to:
            return False, "T beyond the cloud horizon"
    elif sig <= T:
        return False, "sigma <= T"
    if matching_from_pattern(z_pattern(pi, c, k)) is None:
        return False, "cut indices not distinct"
    if c_counts(pi, c, k)[4]:
        return False, "point in the first upper triangle"
    return True, ""


def branch_decomposition(pi: PointCloud, c: float, k: int, pattern: np.ndarray | None = None,
                         T: float | None = None) -> list[Branch | None]:
    ok, why = branch_hypotheses(pi, c, k, T)
    if not ok:
        raise ValueError(f"branch hypotheses unmet: {why}")
    Z = z_pattern(pi, c, k) if pattern is None else pattern
    pairs = matching_from_pattern(Z)
    if pairs is None:
        raise ValueError("branch hypotheses unmet: cut indices not distinct")
    return branch_intervals(pairs, c, k)


def branch_hausdorff(st: RgrgState, branches, h: float) -> float:
    """Upper bound for the Hausdorff distance between RGRG(kc) and the union
    of the branches: sup over a per-segment grid of the distance to the
    union, plus h/2."""
    bs = [b for b in branches if b is not None]
    if not bs:
        raise ValueError("no branches")
    memo: dict = {}
    ends = [(b.lo, b.hi, st.distance(b.lo, b.hi, memo)) for b in bs]
    best = 0.0
    for y in st.grid(h):
        dmin = math.inf
        for a, b, dab in ends:
            if a - TOL <= y <= b + TOL and st.segment_of(y) == st.segment_of(0.5 * (a + b)):
                dmin = 0.0
                break
            dmin = min(dmin, 0.5 * (st.distance(y, a, memo) + st.distance(y, b, memo) - dab))
        best = max(best, dmin)
    return best + h / 2


def branch_is_euclidean(st: RgrgState, b: Branch, samples: int = 9) -> float:
    """Max |d(x, y) - |x - y|| over a grid of the branch."""
    ys = np.linspace(b.lo, b.hi, samples)
    D, _ = st.distance_table(ys)
    return float(np.max(np.abs(D - np.abs(ys[:, None] - ys[None, :]))))
