"""Aldous-Broder trees along a path, the AB chain step, and uniform
spanning tree samplers (cover-time walk and Wilson's algorithm)."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .graph import RegularGraph, mixing_time, lazy_kernel
from .walk import Path, as_generator
from . import _kernels

ENUM_LIMIT = 8


@dataclass(frozen=True, eq=False)
class RootedTreeGraph:
    """Rooted tree on graph vertices stored as a parent table.

    ``parent`` has one entry per graph vertex: the parent id, -1 at the root,
    -2 for vertices outside the tree.
    """

    parent: np.ndarray
    root: int

    @classmethod
    def from_parent_map(cls, V: int, pmap: dict, root: int) -> "RootedTreeGraph":
        par = np.full(V, -2, dtype=np.int64)
        for x, p in pmap.items():
            par[x] = p
        par[root] = -1
        return cls(par, int(root))

    @property
    def vertices(self) -> np.ndarray:
        return np.flatnonzero(self.parent != -2)

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.parent != -2))

    def __contains__(self, x) -> bool:
        return 0 <= x < self.parent.size and self.parent[x] != -2

    def edges(self) -> list[tuple[int, int]]:
        xs = np.flatnonzero(self.parent >= 0)
        return sorted((int(min(x, self.parent[x])), int(max(x, self.parent[x]))) for x in xs)

    def key(self) -> frozenset:
        return frozenset(self.edges())

    def rooted_key(self) -> tuple:
        return (self.key(), self.root)

    def depths(self) -> dict[int, int]:
        out = {self.root: 0}
        for x in self.vertices.tolist():
            chain = []
            y = x
            while y not in out:
                chain.append(y)
                y = int(self.parent[y])
            d = out[y]
            for z in reversed(chain):
                d += 1
                out[z] = d
        return out

    def height(self) -> int:
        return max(self.depths().values())

    def as_dict(self) -> dict:
        return {"root": self.root,
                "parent": {int(x): int(self.parent[x]) for x in self.vertices}}

    def __eq__(self, other) -> bool:
        return (isinstance(other, RootedTreeGraph) and self.root == other.root
                and np.array_equal(self.parent, other.parent))

    def __repr__(self) -> str:
        return f"RootedTreeGraph(size={self.size}, root={self.root})"


def validate_tree(t: RootedTreeGraph, g: RegularGraph | None = None) -> None:
    """Raise ValueError unless t is a tree rooted at t.root using graph edges."""
    if t.root < 0 or t.root >= t.parent.size or t.parent[t.root] != -1:
        raise ValueError("root missing or has a parent")
    roots = np.flatnonzero(t.parent == -1)
    if roots.size != 1:
        raise ValueError(f"{roots.size} parentless vertices")
    verts = set(t.vertices.tolist())
    for x in verts:
        p = int(t.parent[x])
        if p >= 0:
            if p not in verts:
                raise ValueError(f"parent {p} of {x} outside the tree")
            if g is not None and not g.is_adjacent(x, p):
                raise ValueError(f"edge {{{x}, {p}}} not in the graph")
    # acyclic + connected: every vertex reaches the root within |T| hops
    for x in verts:
        y, hops = x, 0
        while y != t.root:
            y = int(t.parent[y])
            hops += 1
            if hops > len(verts):
                raise ValueError("parent table has a cycle")


def is_tree(t: RootedTreeGraph, g: RegularGraph | None = None) -> bool:
    try:
        validate_tree(t, g)
    except ValueError:
        return False
    return True


def _V(p: Path) -> int:
    return p.graph.vertex_count if p.graph is not None else int(p.v.max()) + 1


def ab_tree(p: Path, n: int | None = None) -> RootedTreeGraph:
    """AB^gamma(n): each visited x != gamma(n) points to gamma(L_x(n-1) + 1)."""
    n = p.length if n is None else int(n)
    if not 0 <= n <= p.length:
        raise IndexError("time outside the path")
    par, vis = _kernels.ab_parents(p.v, n, _V(p))
    par = par.copy()
    par[~vis] = -2
    return RootedTreeGraph(par, int(p.v[n]))


def ab_tree_literal(p: Path, n: int) -> RootedTreeGraph:
    """The same tree built from last-visit times, for cross-checking."""
    v = p.v.tolist()
    last = {}
    for k in range(n):
        last[v[k]] = k
    pmap = {x: v[L + 1] for x, L in last.items() if x != v[n]}
    return RootedTreeGraph.from_parent_map(_V(p), pmap, v[n])


STAY, ROOT_GROWTH, AB_MOVE = "stay", "root-growth", "AB-move"


def ab_step(tree: RootedTreeGraph, p: Path, n: int) -> tuple[RootedTreeGraph, str]:
    """One AB-chain transition from ab_tree(p, n-1) to ab_tree(p, n)."""
    if n < 1 or n > p.length:
        raise IndexError("step index outside the path")
    u, x = int(p.v[n - 1]), int(p.v[n])
    if tree.root != u or tree.parent[u] != -1:
        raise ValueError("tree is not rooted at gamma(n-1)")
    if u == x:
        return tree, STAY
    par = tree.parent.copy()
    kind = AB_MOVE if par[x] != -2 else ROOT_GROWTH
    par[u] = x
    par[x] = -1
    return RootedTreeGraph(par, x), kind


def ab_tree_from_history(p: Path) -> RootedTreeGraph:
    """Tree from a path indexed by times -M..0 (stored as p.v[0..M]); every
    vertex v != gamma(0) points to gamma(L_v(0) + 1)."""
    if p.graph is not None and len(np.unique(p.v)) < p.graph.vertex_count:
        raise ValueError("history does not cover the vertex set")
    return ab_tree(p, p.length)


@njit(cache=True)
def _ab_cover(nb, start, seed, cap):
    np.random.seed(seed)
    V, deg = nb.shape
    parent = np.full(V, -2, np.int64)
    parent[start] = -1
    left = V - 1
    cur = start
    steps = 0
    while left > 0:
        if steps >= cap:
            return parent, steps, False
        steps += 1
        if np.random.random() < 0.5:
            continue
        y = nb[cur, np.random.randint(deg)]
        if parent[y] == -2:
            parent[y] = cur
            left -= 1
        cur = y
    return parent, steps, True


@njit(cache=True)
def _wilson(nb, root, seed):
    np.random.seed(seed)
    V, deg = nb.shape
    intree = np.zeros(V, np.bool_)
    nxt = np.full(V, -1, np.int64)
    intree[root] = True
    for i in range(V):
        u = i
        while not intree[u]:
            nxt[u] = nb[u, np.random.randint(deg)]
            u = nxt[u]
        u = i
        while not intree[u]:
            intree[u] = True
            u = nxt[u]
    parent = nxt.copy()
    parent[root] = -1
    return parent


def cover_step_cap(g: RegularGraph) -> int:
    V = g.vertex_count
    tm = mixing_time(g) if V <= 2000 else V
    return int(64 * V * max(tm, 1) * max(math.log(V), 1.0))


def ust_aldous_broder(g: RegularGraph, stream, start: int | None = None,
                      cap: int | None = None) -> RootedTreeGraph:
    """Cover-time construction: first entrance edges, rooted at W(0)."""
    rng = as_generator(stream)
    if start is None:
        start = int(rng.integers(g.vertex_count))
    cap = cover_step_cap(g) if cap is None else cap
    par, steps, ok = _ab_cover(g.neighbors, int(start), int(rng.integers(2**62)), int(cap))
    if not ok:
        raise RuntimeError(f"walk did not cover the graph within {cap} steps")
    return RootedTreeGraph(par, int(start))


def ust_wilson(g: RegularGraph, stream, root: int | None = None) -> RootedTreeGraph:
    rng = as_generator(stream)
    if root is None:
        root = int(rng.integers(g.vertex_count))
    par = _wilson(g.neighbors, int(root), int(rng.integers(2**62)))
    return RootedTreeGraph(par, int(root))


def ust_samples(g: RegularGraph, method: str, k: int, stream) -> list[RootedTreeGraph]:
    rng = as_generator(stream)
    if method == "ab":
        cap = cover_step_cap(g)
        return [ust_aldous_broder(g, rng, cap=cap) for _ in range(k)]
    if method == "wilson":
        return [ust_wilson(g, rng) for _ in range(k)]
    if method == "history":
        out = []
        for _ in range(k):
            out.append(_history_sample(g, rng))
        return out
    raise ValueError(f"unknown method {method!r}")


def _history_sample(g: RegularGraph, rng) -> RootedTreeGraph:
    # a stationary lazy walk read backwards is again a stationary lazy walk:
    # sample W(0), W(-1), ... forward and extend the same trajectory until it
    # covers (restarting would bias towards short cover times)
    from .walk import sample_path
    L = 4 * g.vertex_count
    seg = sample_path(g, None, L, rng).v
    while len(np.unique(seg)) < g.vertex_count:
        seg = np.concatenate([seg, sample_path(g, int(seg[-1]), L, rng).v[1:]])
    return ab_tree_from_history(Path(g, seg[::-1].copy(), validate=False))


# -- exact law on tiny graphs ----------------------------------------------

def kirchhoff_count(g: RegularGraph) -> int:
    A = np.zeros((g.vertex_count,) * 2)
    for u, v in g.edges():
        A[u, v] = A[v, u] = 1
    Lap = np.diag(A.sum(1)) - A
    return int(round(np.linalg.det(Lap[1:, 1:])))


def enumerate_spanning_trees(g: RegularGraph) -> list[frozenset]:
    """All spanning trees as edge sets, by include/exclude backtracking."""
    V = g.vertex_count
    if V > ENUM_LIMIT:
        raise ValueError(f"enumeration guard: {V} vertices > {ENUM_LIMIT}")
    edges = g.edges()
    out = []

    def find(par, x):
        while par[x] != x:
            x = par[x]
        return x

    def rec(i, chosen, par):
        if len(chosen) == V - 1:
            out.append(frozenset(chosen))
            return
        if len(edges) - i < V - 1 - len(chosen):
            return
        u, v = edges[i]
        ru, rv = find(par, u), find(par, v)
        if ru != rv:
            par2 = list(par)
            par2[ru] = rv
            rec(i + 1, chosen + [edges[i]], par2)
        rec(i + 1, chosen, par)

    rec(0, [], list(range(V)))
    return out


def tree_from_edges(V: int, edges, root: int) -> RootedTreeGraph:
    adj = {x: [] for x in range(V)}
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    par = np.full(V, -2, dtype=np.int64)
    par[root] = -1
    stack = [root]
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if par[y] == -2 and y != root:
                par[y] = x
                stack.append(y)
    return RootedTreeGraph(par, root)


def rooted_tree_probability(g: RegularGraph, t: RootedTreeGraph) -> float:
    """Stationary AB-chain weight C^-1 prod_{x != root} deg(x)^-1."""
    validate_tree(t, g)
    if t.size != g.vertex_count:
        raise ValueError("tree does not span the graph")
    trees = enumerate_spanning_trees(g)
    deg = g.degree
    # on a regular graph every rooted tree carries the same product
    w = float(deg) ** -(g.vertex_count - 1)
    C = len(trees) * g.vertex_count * w
    return w / C


def all_rooted_spanning_trees(g: RegularGraph) -> list[RootedTreeGraph]:
    return [tree_from_edges(g.vertex_count, T, r)
            for T in enumerate_spanning_trees(g) for r in range(g.vertex_count)]
