"""Ghost indices, the skeleton chain, good/decomposable path checks and
segment cut indicators.

The ghost recursion is swept once per path by a compiled kernel that keeps,
for every vertex, a linked list of its non-ghost visit times. With that list
the condition for index m at time n reads: gamma(n) was last seen (among
non-ghost times) at m* >= n-s+1, and every non-ghost k in [m*, n-1] is the
first non-ghost visit of its vertex. The new ghosts are then exactly the
non-ghost indices of [m*, n-1]. A literal set-based transcription is kept in
``ghost_sets_literal`` for cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .abchain import RootedTreeGraph
from .erasure import cut_point_mask, locally_non_erased
from .walk import Interval, Path

CLASS_NAMES = {0: "start", 1: "root_growth", 2: "ab_move", 3: "ghost_loop_erasure"}


def check_parameters(r: int, s: int, sp: int | None = None) -> None:
    if s < 2:
        raise ValueError("s must be at least 2")
    if r < 3 * s + 1:
        raise ValueError(f"parameters must satisfy r ≥ 3s+1 ≥ 18s′+1 (got r={r}, s={s})")
    if sp is not None and (sp < 1 or 3 * s + 1 < 18 * sp + 1):
        raise ValueError(f"parameters must satisfy r ≥ 3s+1 ≥ 18s′+1 (got s={s}, s′={sp})")


@dataclass(frozen=True)
class SegmentScheme:
    r: int
    s: int

    def __post_init__(self):
        if self.r < 3 * self.s + 1:
            raise ValueError("segment scheme needs r ≥ 3s+1")

    def A(self, i: int) -> Interval:
        return Interval((i - 1) * self.r + self.s, i * self.r - 1)

    def B(self, i: int) -> Interval:
        return Interval((i - 1) * self.r + 2 * self.s, i * self.r - self.s - 1)


def _V(p: Path) -> int:
    return p.graph.vertex_count if p.graph is not None else int(p.v.max()) + 1


@dataclass
class SkeletonSweep:
    """Per-step output of one ghost/skeleton sweep over gamma(0..upto)."""

    s: int
    upto: int
    ghost_time: np.ndarray          # time index m turned ghost, -1 if never
    n_new: np.ndarray               # number of new ghosts at each step
    new_lo: np.ndarray
    new_hi: np.ndarray
    mstar: np.ndarray               # latest non-ghost match in [n-s+1, n-1], -1 if none
    step_class: np.ndarray          # codes of CLASS_NAMES
    connected: np.ndarray           # skeleton connected after step n
    skeleton_size: np.ndarray
    radius: np.ndarray              # covering radius, -1 when not requested
    final_parent: np.ndarray = field(repr=False)
    final_in_skeleton: np.ndarray = field(repr=False)
    final_visited: np.ndarray = field(repr=False)

    def ghosts(self, n: int) -> np.ndarray:
        gt = self.ghost_time[: n + 1]
        return np.flatnonzero((gt >= 0) & (gt <= n))

    def new_ghosts(self, n: int) -> np.ndarray:
        return np.flatnonzero(self.ghost_time == n)

    def class_name(self, n: int) -> str:
        return CLASS_NAMES[int(self.step_class[n])]


def sweep(p: Path, s: int, upto: int | None = None, radius: bool = False) -> SkeletonSweep:
    if s < 2:
        raise ValueError("s must be at least 2")
    upto = p.length if upto is None else int(upto)
    if not 0 <= upto <= p.length:
        raise IndexError("sweep horizon outside the path")
    out = _kernels.ghost_sweep(p.v, int(s), _V(p), upto, bool(radius))
    return SkeletonSweep(int(s), upto, *out)


@dataclass(frozen=True)
class GhostState:
    s: int
    n: int
    ghosts: np.ndarray

    def __contains__(self, m) -> bool:
        return bool(np.any(self.ghosts == m))


def ghost_indices(p: Path, s: int, n: int) -> GhostState:
    sw = sweep(p, s, n)
    return GhostState(int(s), int(n), sw.ghosts(n))


def ghost_sets_literal(v, s: int, n: int) -> list[set]:
    """G(0), ..., G(n) straight from the definition (slow, for oracles)."""
    v = list(v)
    G = [set()]
    for t in range(1, n + 1):
        prev = G[-1]
        add = set()
        for m in range(t):
            if m in prev:
                continue
            window = [h for h in range(max(t - s + 1, 0), m + 1) if h not in prev]
            hits = [h for h in window if v[h] == v[t]]
            if not hits:
                continue
            m1 = max(hits)
            ok = True
            for k in range(m1, t):
                if k in prev:
                    continue
                if v[k] in {v[j] for j in range(k) if j not in prev}:
                    ok = False
                    break
            if ok:
                add.add(m)
        G.append(prev | add)
    return G


def ghost_block(p: Path, s: int, n: int, sw: SkeletonSweep | None = None) -> Interval:
    """[m*, n-1] for a ghost-creating step n; G(n) minus G(n-1) consists of the
    indices of this interval that were not yet ghosts."""
    if n < 1:
        raise ValueError("no step at n = 0")
    sw = sweep(p, s, n) if sw is None else sw
    if sw.n_new[n] == 0:
        raise ValueError(f"step {n} creates no ghosts")
    return Interval(int(sw.mstar[n]), n - 1)


def skeleton_tree(p: Path, s: int, n: int) -> RootedTreeGraph:
    """AB tree at n restricted to vertices carried by non-ghost indices.

    A skeleton vertex whose AB parent is not in the skeleton is left without
    parent, so a disconnected skeleton fails ``validate_tree``.
    """
    sw = sweep(p, s, n)
    par = sw.final_parent.copy()
    inS = sw.final_in_skeleton
    out = np.full(par.size, -2, dtype=np.int64)
    for x in np.flatnonzero(inS):
        q = par[x]
        out[x] = q if (q >= 0 and inS[q]) else -1
    return RootedTreeGraph(out, int(p.v[n]))


def skeleton_step_classify(p: Path, s: int, n: int) -> str:
    if n < 1:
        raise ValueError("classification needs n ≥ 1")
    return sweep(p, s, n).class_name(n)


# -- good and decomposable paths ------------------------------------------

def _cut_windows_first_bad(p: Path, s: int, sp: int, N: int) -> int:
    """Smallest m in [0, N-s] whose window [m, m+s] holds no 2s'-local cut
    point l in [m+2s', m+s-2s'] (-1 if every window has one)."""
    if N < s:
        return -1
    mask = cut_point_mask(p, 2 * sp, N).astype(np.int64)
    c = np.concatenate([[0], np.cumsum(mask)])
    m = np.arange(0, N - s + 1)
    lo, hi = m + 2 * sp, m + s - 2 * sp
    if s < 4 * sp:
        return 0
    have = c[hi + 1] - c[lo]
    bad = np.flatnonzero(have == 0)
    return int(bad[0]) if bad.size else -1


def check_good_path(p: Path, r: int, s: int, sp: int, N: int) -> dict:
    check_parameters(r, s, sp)
    if N > p.length:
        raise IndexError("N exceeds the path")
    fl = _kernels.first_loop_in_range(p.v, N, sp, r)
    fb = _cut_windows_first_bad(p, s, sp, N)
    return {"no_intermediate_loops": fl < 0, "dense_cut_points": fb < 0,
            "first_intermediate_loop": int(fl), "first_window_without_cut_point": int(fb)}


def _R(v, lo, hi) -> set:
    lo = max(lo, 0)
    return set(v[lo: hi + 1].tolist()) if hi >= lo else set()


def _props_134(v, r: int, s: int, K: int) -> dict:
    sch = SegmentScheme(r, s)
    RB = {i: _R(v, sch.B(i).lo, sch.B(i).hi) for i in range(1, K + 1)}
    p1 = True
    for i in range(1, K + 1):
        for j in range(i + 1, K + 1):
            if RB[i] & RB[j]:
                for k1 in (i, j):
                    for k2 in range(1, K + 1):
                        if k2 not in (i, j) and RB[k1] & RB[k2]:
                            p1 = False
    p3 = True
    p4 = True
    for i in range(2, K + 1):
        Bi = sch.B(i)
        right = _R(v, Bi.lo, Bi.hi + s)
        for j in range(1, i):
            Bj = sch.B(j)
            outside = _R(v, (j - 1) * r, Bj.lo - 1) | _R(v, Bj.hi + 1, j * r - 1)
            if outside & right:
                p3 = False
        past = _R(v, 0, sch.B(i - 1).hi)
        outside_i = _R(v, (i - 1) * r, Bi.lo - 1) | _R(v, Bi.hi + 1, i * r - 1)
        if past & outside_i:
            p4 = False
    return {"P1": p1, "P3": p3, "P4": p4}


def check_properties(p: Path, r: int, s: int, N: int) -> dict:
    """The segment properties, keyed P1, P3, P4, P5 (there is no P2).

    Ranges are read on [0, N] only; index intervals reaching past N are cut
    at N.
    """
    if N > p.length:
        raise IndexError("N exceeds the path")
    v = p.v
    K = N // r
    out = _props_134(v, r, s, K)
    a = not (_R(v, 0, r * K - 1) & _R(v, r * K + 2 * s, N))
    b = not (_R(v, 0, r * K - s - 1) & _R(v, r * K, min(r * K + 2 * s - 1, N)))
    out["P5"] = a and b
    return out


def is_decomposable(p: Path, r: int, s: int, sp: int, N: int) -> bool:
    g = check_good_path(p, r, s, sp, N)
    if not (g["no_intermediate_loops"] and g["dense_cut_points"]):
        return False
    return all(check_properties(p, r, s, N).values())


def sigma_decomposable(p: Path, r: int, s: int, sp: int, L: int | None = None,
                       t_mix: int | None = None) -> int:
    """Largest m in [0, L] such that the path is decomposable on [0, m].

    Decomposability on [0, m] is not monotone in m (the last-segment property
    can fail and hold again once a new segment starts), so this is the
    literal maximum. When ``t_mix`` is given the condition s' ≥ t_mix + 1 is
    enforced.
    """
    check_parameters(r, s, sp)
    if t_mix is not None and sp < t_mix + 1:
        raise ValueError(f"s′={sp} violates s′ ≥ t_mix+1 = {t_mix + 1}")
    v = p.v
    L = p.length if L is None else int(L)
    fl = _kernels.first_loop_in_range(v, L, sp, r)
    fb = _cut_windows_first_bad(p, s, sp, L)
    good_until = L
    if fl >= 0:
        good_until = min(good_until, fl - 1)
    if fb >= 0:
        good_until = min(good_until, fb + s - 1)
    best = 0
    for K in range(0, L // r + 1):
        start = K * r
        if start > good_until:
            break
        if not all(_props_134(v, r, s, K).values()):
            continue
        end = min(good_until, start + r - 1, L)
        past_a = _R(v, 0, r * K - 1)
        past_b = _R(v, 0, r * K - s - 1)
        stop = end + 1
        for j in range(start, end + 1):
            x = int(v[j])
            if j >= r * K + 2 * s and x in past_a:
                stop = j
                break
            if j <= r * K + 2 * s - 1 and x in past_b:
                stop = j
                break
        if stop - 1 >= start:
            best = max(best, stop - 1)
    return best


def sigma_decomposable_literal(p: Path, r: int, s: int, sp: int, L: int | None = None) -> int:
    L = p.length if L is None else int(L)
    best = 0
    for m in range(L + 1):
        if is_decomposable(p, r, s, sp, m):
            best = m
    return best


# -- cut indicators --------------------------------------------------------

def ne_segments(p: Path, scheme: SegmentScheme, k: int) -> dict[int, np.ndarray]:
    return {i: locally_non_erased(p, scheme.s, scheme.A(i)) for i in range(1, k + 1)}


def cut_indicators(p: Path, scheme: SegmentScheme, k: int, ne: dict | None = None):
    """Z[i, j] (1-based, i < j <= k) and the total count N(k)."""
    if k * scheme.r > p.length + 1:
        raise IndexError("segments exceed the path")
    ne = ne_segments(p, scheme, k) if ne is None else ne
    Z = np.zeros((k + 1, k + 1), dtype=np.int64)
    RNE = {i: set(p.v[ne[i]].tolist()) for i in range(1, k + 1)}
    RB = {j: _R(p.v, scheme.B(j).lo, scheme.B(j).hi) for j in range(1, k + 1)}
    for i in range(1, k + 1):
        for j in range(i + 1, k + 1):
            Z[i, j] = int(bool(RNE[i] & RB[j]))
    return Z, int(Z.sum())


def tau_times(Z: np.ndarray, K: int, upto: int | None = None) -> list[int]:
    """tau_0 = 0, tau_i = first k in (tau_{i-1}, K] with some Z[j, k] = 1,
    K + 1 when there is none; computed for i = 0..upto."""
    upto = K + 1 if upto is None else upto
    taus = [0]
    for _ in range(upto):
        prev = taus[-1]
        nxt = K + 1
        for k in range(prev + 1, K + 1):
            if Z[1:k, k].any():
                nxt = k
                break
        taus.append(nxt)
        if nxt == K + 1:
            break
    return taus


def verify_ne_ghost_identity(p: Path, r: int, s: int, sp: int, N: int,
                             sw: SkeletonSweep | None = None) -> dict:
    """Check NE^s(A_i) = B_i minus G(n) for n in [ir-1, N] on every segment i
    strictly between consecutive tau times.

    Returns {"applicable", "ok", "checked", "failures", "reason"}. When the
    hypotheses (good path, P1, P3, P4, N ≥ r) fail, ``ok`` is None.
    """
    check_parameters(r, s, sp)
    rep = {"applicable": False, "ok": None, "checked": 0, "failures": [], "reason": ""}
    if N < r:
        rep["reason"] = "N < r"
        return rep
    good = check_good_path(p, r, s, sp, N)
    props = check_properties(p, r, s, N)
    if not (good["no_intermediate_loops"] and good["dense_cut_points"]):
        rep["reason"] = "not a good path"
        return rep
    if not (props["P1"] and props["P3"] and props["P4"]):
        rep["reason"] = "segment properties fail"
        return rep
    rep["applicable"] = True
    sch = SegmentScheme(r, s)
    K = N // r
    ne = ne_segments(p, sch, K)
    Z, _ = cut_indicators(p, sch, K, ne)
    taus = tau_times(Z, K)
    sw = sweep(p, s, N) if sw is None else sw
    gt = sw.ghost_time
    for kk in range(1, len(taus)):
        if kk > K:
            break
        for i in range(taus[kk - 1] + 1, taus[kk]):
            B = sch.B(i).indices()
            n0 = i * r - 1
            gB = gt[B]
            ghost_at = (gB >= 0) & (gB <= n0)
            rhs = B[~ghost_at]
            later = np.any((gB > n0) & (gB <= N))
            rep["checked"] += 1
            if not np.array_equal(ne[i], rhs) or later:
                rep["failures"].append(i)
    rep["ok"] = not rep["failures"]
    return rep


def skeleton_ab_gh_bound_check(p: Path, r: int, s: int, sp: int, N: int) -> dict:
    """Max over n ≤ N of the covering radius of the skeleton inside the AB
    tree (hops from an AB vertex to the nearest skeleton vertex)."""
    check_parameters(r, s, sp)
    sw = sweep(p, s, N, radius=True)
    return {"max_radius": int(sw.radius[: N + 1].max()),
            "decomposable": is_decomposable(p, r, s, sp, N), "r": r}


def covering_radius_bfs(ab: RootedTreeGraph, skel_vertices) -> int:
    """Independent covering radius by multi-source BFS on the AB tree edges."""
    from collections import deque
    adj: dict[int, list[int]] = {int(x): [] for x in ab.vertices}
    for a, b in ab.edges():
        adj[a].append(b)
        adj[b].append(a)
    dist = {int(x): 0 for x in skel_vertices}
    dq = deque(dist)
    while dq:
        x = dq.popleft()
        for y in adj[x]:
            if y not in dist:
                dist[y] = dist[x] + 1
                dq.append(y)
    return max(dist[int(x)] for x in ab.vertices)


def is_simple_path_tree(t: RootedTreeGraph) -> bool:
    kids = np.bincount(t.parent[t.parent >= 0], minlength=t.parent.size)
    return bool(kids.max(initial=0) <= 1)
