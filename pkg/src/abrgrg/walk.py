"""Lazy random walks, path containers and index-set helpers.

Random streams are Philox generators keyed by ``(seed, stream_id)``, so any
replica can be regenerated from the two integers stored on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .graph import RegularGraph
from . import _kernels


@dataclass(frozen=True)
class Stream:
    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id),))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, k: int) -> "Stream":
        # derived ids stay reproducible and never collide with small user ids
        return Stream(self.seed, (int(self.stream_id) + 1) * 1_000_003 + int(k))

    def record(self) -> dict:
        return {"seed": int(self.seed), "stream_id": int(self.stream_id)}


def make_stream(seed: int, stream_id: int = 0) -> Stream:
    return Stream(int(seed), int(stream_id))


def as_generator(stream) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    if isinstance(stream, Stream):
        return stream.generator()
    if stream is None or isinstance(stream, (int, np.integer)):
        return make_stream(0 if stream is None else int(stream)).generator()
    raise TypeError(f"cannot make a generator from {type(stream).__name__}")


@dataclass(frozen=True)
class Interval:
    """Integer interval [lo, hi]; empty when lo > hi."""

    lo: int
    hi: int

    def __len__(self) -> int:
        return max(0, self.hi - self.lo + 1)

    def __iter__(self):
        return iter(range(self.lo, self.hi + 1))

    def __contains__(self, k) -> bool:
        return self.lo <= k <= self.hi

    @property
    def empty(self) -> bool:
        return self.lo > self.hi

    def indices(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1, dtype=np.int64)


def as_interval(A) -> Interval:
    if isinstance(A, Interval):
        return A
    lo, hi = A
    return Interval(int(lo), int(hi))


class Path:
    """Lazy-walk trajectory gamma(0..n) on a graph."""

    def __init__(self, graph: RegularGraph | None, vertices, stream: Stream | None = None,
                 validate: bool = True):
        self.graph = graph
        self.v = np.ascontiguousarray(np.asarray(vertices, dtype=np.int64))
        if self.v.ndim != 1 or self.v.size == 0:
            raise ValueError("a path needs at least one vertex")
        self.stream = stream
        if validate and graph is not None and not is_legal(graph, self.v):
            raise ValueError("path contains an illegal step")

    @property
    def length(self) -> int:
        return self.v.size - 1

    def __len__(self) -> int:
        return self.v.size

    def __getitem__(self, k):
        return self.v[k]

    def __repr__(self) -> str:
        return f"Path(length={self.length}, graph={self.graph!r})"

    def prefix(self, n: int) -> "Path":
        return Path(self.graph, self.v[: n + 1], self.stream, validate=False)


def is_legal(g: RegularGraph, vertices) -> bool:
    v = np.asarray(vertices, dtype=np.int64)
    if v.size and (v.min() < 0 or v.max() >= g.vertex_count):
        return False
    a, b = v[:-1], v[1:]
    ok = (a == b) | np.any(g.neighbors[a] == b[:, None], axis=1)
    return bool(ok.all())


def sample_path(g: RegularGraph, start: int | None, steps: int, stream) -> Path:
    """Lazy walk with ``steps`` transitions; ``start=None`` draws from pi."""
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    rng = as_generator(stream)
    if start is None:
        start = int(rng.integers(g.vertex_count))
    stay = rng.random(steps) < 0.5
    pick = rng.integers(0, g.degree, size=steps)
    v = _kernels.lazy_walk(g.neighbors, int(start), stay, pick)
    return Path(g, v, stream if isinstance(stream, Stream) else None, validate=False)


def _check_indices(p: Path, idx: np.ndarray) -> None:
    if idx.size and (idx.min() < 0 or idx.max() > p.length):
        raise IndexError(f"index set leaves [0, {p.length}]")


def _to_indices(A) -> np.ndarray:
    if isinstance(A, Interval):
        return A.indices()
    if isinstance(A, tuple) and len(A) == 2 and all(isinstance(x, (int, np.integer)) for x in A):
        return np.arange(A[0], A[1] + 1, dtype=np.int64)
    return np.asarray(sorted(A) if isinstance(A, (set, frozenset)) else A, dtype=np.int64).ravel()


def range_of(p: Path, A) -> set[int]:
    """Set of vertices visited at the indices in A (an Interval, a (lo, hi)
    pair, or any iterable of indices)."""
    idx = _to_indices(A)
    _check_indices(p, idx)
    return set(np.unique(p.v[idx]).tolist())


def last_visit(p: Path, x: int, n: int) -> int:
    if not 0 <= n <= p.length:
        raise IndexError("time outside the path")
    hits = np.flatnonzero(p.v[: n + 1] == x)
    if hits.size == 0:
        raise ValueError(f"vertex {x} not visited by time {n}")
    return int(hits[-1])


def last_visits(p: Path, n: int) -> dict[int, int]:
    """All last-visit times L_x(n) at once."""
    out: dict[int, int] = {}
    for k, x in enumerate(p.v[: n + 1].tolist()):
        out[x] = k
    return out


def loop_lengths_in_window(p: Path, N: int, max_length: int | None = None) -> list[tuple[int, int]]:
    """All (m1, m2 - m1) with m1 < m2 <= N and gamma(m1) = gamma(m2).

    ``max_length`` keeps only loops of length at most that value
    (the total count can be quadratic otherwise).
    """
    if N > p.length:
        raise IndexError("window exceeds the path")
    out = []
    pos: dict[int, list[int]] = {}
    for m2, x in enumerate(p.v[: N + 1].tolist()):
        earlier = pos.setdefault(x, [])
        for m1 in earlier:
            if max_length is None or m2 - m1 <= max_length:
                out.append((m1, m2 - m1))
        earlier.append(m2)
    out.sort()
    return out


def has_loop_in_range(p: Path, N: int, lo: int, hi: int) -> int:
    """First m2 <= N closing a loop of length in [lo, hi], or -1."""
    return int(_kernels.first_loop_in_range(p.v, int(N), int(lo), int(hi)))


def sample_no_intermediate_loop_path(
    g: RegularGraph, start: int | None, steps: int, lo: int, hi: int, stream,
    max_restarts: int = 10_000,
) -> Path:
    """Lazy walk conditioned step by step to avoid loops of length in [lo, hi].

    At each step the usual lazy-walk weights are restricted to candidates that
    are not in gamma[n+1-hi, n+1-lo]; if no candidate is allowed the walk is
    restarted. The result is therefore a sample from a tilted law, meant as a
    fixture generator for the decomposable-path checks, not as a walk sample.
    """
    rng = as_generator(stream)
    for _ in range(max_restarts):
        s0 = int(rng.integers(g.vertex_count)) if start is None else int(start)
        v, ok = _kernels.conditioned_walk(g.neighbors, s0, int(steps), int(lo), int(hi),
                                          int(rng.integers(2**62)))
        if ok:
            return Path(g, v, stream if isinstance(stream, Stream) else None, validate=False)
    raise RuntimeError("conditioned sampler kept hitting dead ends")


def meeting_probability_table(P: np.ndarray, root: int, max_total: int):
    """(P(W1(n)=W2(m)), P(W(n+m)=root)) for n+m <= max_total, both walks from root."""
    V = P.shape[0]
    rows = [np.eye(V)[root]]
    for _ in range(max_total):
        rows.append(rows[-1] @ P)
    rows = np.array(rows)
    lhs = {}
    rhs = {}
    for n in range(max_total + 1):
        for m in range(max_total + 1 - n):
            lhs[n, m] = float(rows[n] @ rows[m])
            rhs[n, m] = float(rows[n + m][root])
    return lhs, rhs
