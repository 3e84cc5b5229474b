"""Chronological loop erasure, windowed (locally) non-erased indices and
local cut points.

All index sets are returned as sorted int64 arrays.
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from .walk import Interval, Path, as_interval


def _vcount(p: Path) -> int:
    if p.graph is not None:
        return p.graph.vertex_count
    return int(p.v.max()) + 1


def _check(p: Path, A: Interval) -> None:
    if A.empty:
        raise ValueError("empty index interval")
    if A.lo < 0 or A.hi > p.length:
        raise IndexError(f"interval [{A.lo}, {A.hi}] leaves [0, {p.length}]")


def non_erased_indices(p: Path, A, n: int | None = None) -> np.ndarray:
    """NE^{gamma,A}(n): survivors of chronological loop erasure on A up to n."""
    A = as_interval(A)
    _check(p, A)
    n = A.hi if n is None else int(n)
    if not A.lo <= n <= A.hi:
        raise ValueError(f"time {n} outside [{A.lo}, {A.hi}]")
    return _kernels.loop_erase_stack(p.v, A.lo, n, _vcount(p))


def erased_indices(p: Path, A, n: int | None = None) -> np.ndarray:
    A = as_interval(A)
    n = A.hi if n is None else int(n)
    ne = non_erased_indices(p, A, n)
    return np.setdiff1d(np.arange(A.lo, n + 1), ne)


def loop_erase(p: Path, A) -> np.ndarray:
    """Vertex sequence of the loop-erased path on A."""
    A = as_interval(A)
    return p.v[non_erased_indices(p, A, A.hi)]


class NonErasedState:
    """Incremental NE^{gamma,A}(n); ``advance`` applies one step of the recursion."""

    def __init__(self, p: Path, A):
        self.path = p
        self.A = as_interval(A)
        _check(p, self.A)
        self.n = self.A.lo
        self.stack = [self.A.lo]
        self.pos = {int(p.v[self.A.lo]): 0}
        self.erased: list[int] = []

    def advance(self) -> None:
        if self.n >= self.A.hi:
            raise StopIteration("already at max A")
        self.n += 1
        x = int(self.path.v[self.n])
        j = self.pos.get(x)
        if j is not None:
            for k in self.stack[j:]:
                del self.pos[int(self.path.v[k])]
            self.erased.extend(self.stack[j:])
            del self.stack[j:]
        self.pos[x] = len(self.stack)
        self.stack.append(self.n)

    @property
    def ne(self) -> np.ndarray:
        return np.array(self.stack, dtype=np.int64)

    @property
    def e(self) -> np.ndarray:
        return np.array(sorted(self.erased), dtype=np.int64)


def locally_non_erased(p: Path, s: int, A) -> np.ndarray:
    """NE^{gamma,s}(A): m in [min A + s, max A - s] whose s-window loop
    erasure is not hit again in the next s steps."""
    A = as_interval(A)
    _check(p, A)
    if len(A) < 2 * s + 1:
        raise ValueError(f"interval of size {len(A)} is shorter than 2s+1 = {2 * s + 1}")
    flags = _kernels.local_non_erased(p.v, A.lo, A.hi, int(s), _vcount(p))
    return (np.flatnonzero(flags) + A.lo + s).astype(np.int64)


def local_cut_points(p: Path, sp: int, A) -> np.ndarray:
    """CP^{gamma,s'}(A): l in [min A + s', max A - s'] with
    R[l-s', l] and R[l+1, l+s'] disjoint."""
    A = as_interval(A)
    _check(p, A)
    if len(A) < 2 * sp + 1:
        raise ValueError(f"interval of size {len(A)} is shorter than 2s'+1 = {2 * sp + 1}")
    flags = _kernels.cut_point_flags(p.v, A.lo, A.hi, int(sp), _vcount(p))
    return (np.flatnonzero(flags) + A.lo + sp).astype(np.int64)


def cut_point_mask(p: Path, sp: int, upto: int | None = None) -> np.ndarray:
    """Boolean mask over 0..upto marking s'-local cut points (False where the
    window does not fit)."""
    upto = p.length if upto is None else upto
    out = np.zeros(upto + 1, dtype=bool)
    if upto >= 2 * sp:
        out[sp: upto - sp + 1] = _kernels.cut_point_flags(p.v, 0, upto, int(sp), _vcount(p))
    return out


# -- literal transcriptions, kept for cross-checks -------------------------

def ne_recursion_literal(v, lo: int, n: int) -> list[int]:
    """Direct transcription of the set recursion, quadratic per step."""
    ne = [lo]
    for t in range(lo + 1, n + 1):
        keep = []
        for m in ne:
            prefix = {v[k] for k in ne if k <= m}
            if v[t] not in prefix:
                keep.append(m)
        ne = keep + [t]
    return ne


def locally_non_erased_literal(v, s: int, lo: int, hi: int) -> list[int]:
    out = []
    for m in range(lo + s, hi - s + 1):
        head = {v[k] for k in ne_recursion_literal(v, m - s, m)}
        future = {v[k] for k in range(m + 1, m + s + 1)}
        if not head & future:
            out.append(m)
    return out


def local_cut_points_literal(v, sp: int, lo: int, hi: int) -> list[int]:
    out = []
    for l in range(lo + sp, hi - sp + 1):
        if not {v[k] for k in range(l - sp, l + 1)} & {v[k] for k in range(l + 1, l + sp + 1)}:
            out.append(l)
    return out
