"""Regular graph models and dense lazy-walk kernels for small instances.

Vertex ids are ``0 .. vertex_count - 1``. Torus vertices use the row-major
mixed-radix encoding ``v = sum_k x_k * N**(d - 1 - k)`` (the same layout as
``numpy.ravel_multi_index`` in C order), and neighbours of a torus vertex are
listed as ``+e_0, -e_0, +e_1, -e_1, ...``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DENSE_LIMIT = 20_000


@dataclass(frozen=True, eq=False)
class RegularGraph:
    """Finite simple connected regular graph with a neighbour table."""

    kind: str
    params: tuple
    neighbors: np.ndarray = field(repr=False)

    @property
    def vertex_count(self) -> int:
        return int(self.neighbors.shape[0])

    @property
    def degree(self) -> int:
        return int(self.neighbors.shape[1])

    def neighbors_of(self, v: int) -> np.ndarray:
        return self.neighbors[v]

    def is_adjacent(self, u: int, v: int) -> bool:
        return bool(np.any(self.neighbors[u] == v))

    def edges(self) -> list[tuple[int, int]]:
        out = []
        for u in range(self.vertex_count):
            for v in self.neighbors[u]:
                if u < v:
                    out.append((u, int(v)))
        return out

    def coords(self, v: int) -> tuple[int, ...]:
        if self.kind != "torus":
            raise ValueError("coordinates only exist for torus graphs")
        n, d = self.params
        return tuple(int(c) for c in np.unravel_index(v, (n,) * d))

    def index(self, coords: Sequence[int]) -> int:
        if self.kind != "torus":
            raise ValueError("coordinates only exist for torus graphs")
        n, d = self.params
        return int(np.ravel_multi_index(tuple(int(c) % n for c in coords), (n,) * d))

    def describe(self) -> str:
        return f"{self.kind}({','.join(str(p) for p in self.params)})"

    def __repr__(self) -> str:
        return f"RegularGraph({self.describe()}, V={self.vertex_count}, deg={self.degree})"


def _validate(neighbors: np.ndarray) -> None:
    n, k = neighbors.shape
    if n < 2:
        raise ValueError("a graph needs at least two vertices")
    if k < 1:
        raise ValueError("degree must be positive")
    if neighbors.min() < 0 or neighbors.max() >= n:
        raise ValueError("neighbour id out of range")
    for u in range(n):
        row = neighbors[u]
        if np.any(row == u):
            raise ValueError(f"self-loop at vertex {u}")
        if len(np.unique(row)) != k:
            raise ValueError(f"multi-edge at vertex {u}")
    # symmetry
    adj = {u: set(int(v) for v in neighbors[u]) for u in range(n)}
    for u, nb in adj.items():
        for v in nb:
            if u not in adj[v]:
                raise ValueError(f"adjacency not symmetric between {u} and {v}")
    # connectivity
    seen = np.zeros(n, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        u = stack.pop()
        for v in neighbors[u]:
            if not seen[v]:
                seen[v] = True
                stack.append(int(v))
    if not seen.all():
        raise ValueError("graph is not connected")


def torus(n: int, d: int) -> RegularGraph:
    """Discrete torus Z_n^d; n >= 3 so that the graph stays simple."""
    if n < 3:
        raise ValueError("torus side must be at least 3 (N=2 would create multi-edges)")
    if d < 1:
        raise ValueError("torus dimension must be positive")
    shape = (n,) * d
    coords = np.array(np.unravel_index(np.arange(n**d), shape)).T
    cols = []
    for k in range(d):
        for sign in (1, -1):
            c = coords.copy()
            c[:, k] = (c[:, k] + sign) % n
            cols.append(np.ravel_multi_index(tuple(c.T), shape))
    nb = np.stack(cols, axis=1).astype(np.int64)
    return RegularGraph("torus", (n, d), nb)


def complete(m: int) -> RegularGraph:
    if m < 2:
        raise ValueError("complete graph needs m >= 2")
    v = np.arange(m)
    nb = np.array([np.delete(v, u) for u in range(m)], dtype=np.int64)
    return RegularGraph("complete", (m,), nb)


def cycle(n: int) -> RegularGraph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    v = np.arange(n)
    nb = np.stack([(v + 1) % n, (v - 1) % n], axis=1).astype(np.int64)
    return RegularGraph("cycle", (n,), nb)


def from_adjacency(adjacency: Sequence[Sequence[int]]) -> RegularGraph:
    degs = {len(row) for row in adjacency}
    if len(degs) != 1:
        raise ValueError("adjacency lists are not regular")
    nb = np.array([list(row) for row in adjacency], dtype=np.int64)
    _validate(nb)
    return RegularGraph("explicit", (len(adjacency),), nb)


def build_graph(spec) -> RegularGraph:
    """Build a graph from ``"torus:N,d"``, ``"complete:m"``, ``"cycle:n"``,
    a ``(kind, *params)`` tuple, or an explicit list of adjacency lists."""
    if isinstance(spec, RegularGraph):
        return spec
    if isinstance(spec, str):
        kind, _, rest = spec.partition(":")
        params = [int(x) for x in rest.replace("x", ",").split(",") if x.strip()]
    elif isinstance(spec, (tuple, list)) and spec and isinstance(spec[0], str):
        kind, params = spec[0], [int(x) for x in spec[1:]]
    else:
        return from_adjacency(spec)
    kind = kind.strip().lower()
    if kind == "torus" and len(params) == 2:
        return torus(*params)
    if kind == "complete" and len(params) == 1:
        return complete(*params)
    if kind == "cycle" and len(params) == 1:
        return cycle(*params)
    raise ValueError(f"unrecognised graph spec {spec!r}")


def lazy_kernel(g: RegularGraph, max_vertices: int = DENSE_LIMIT) -> np.ndarray:
    """Dense lazy random walk kernel: 1/2 on the diagonal, 1/(2 deg) on edges."""
    n = g.vertex_count
    if n > max_vertices:
        raise ValueError(f"dense kernel refused: {n} vertices > guard {max_vertices}")
    P = np.zeros((n, n))
    rows = np.repeat(np.arange(n), g.degree)
    np.add.at(P, (rows, g.neighbors.ravel()), 1.0 / (2 * g.degree))
    P[np.arange(n), np.arange(n)] += 0.5
    return P


def stationary_distribution(g: RegularGraph) -> np.ndarray:
    return np.full(g.vertex_count, 1.0 / g.vertex_count)


def mixing_time(
    g: RegularGraph,
    variant: str = "uniform",
    eps: float = 0.25,
    max_power: int = 100_000,
    kernel: np.ndarray | None = None,
) -> int:
    """Smallest n whose worst-case distance to stationarity is at most eps.

    ``variant="uniform"`` uses max_{x,y} |P^n(x,y)/pi(y) - 1|,
    ``variant="l1"`` uses max_x (1/2) sum_y |P^n(x,y) - pi(y)|.
    """
    P = lazy_kernel(g) if kernel is None else kernel
    pi = stationary_distribution(g)
    if variant in ("uniform", "linf", "uniform_linf"):
        dist = lambda Q: np.max(np.abs(Q / pi[None, :] - 1.0))
    elif variant in ("l1", "tv"):
        dist = lambda Q: np.max(0.5 * np.abs(Q - pi[None, :]).sum(axis=1))
    else:
        raise ValueError(f"unknown mixing variant {variant!r}")
    Q = np.eye(P.shape[0])
    for n in range(max_power + 1):
        # slack for values that equal eps in exact arithmetic
        if dist(Q) <= eps + 1e-12:
            return n
        Q = Q @ P
    raise RuntimeError(f"distance to stationarity above {eps} after {max_power} steps")


def t_mix(g: RegularGraph, kernel: np.ndarray | None = None) -> int:
    return mixing_time(g, "uniform", 0.25, kernel=kernel)
