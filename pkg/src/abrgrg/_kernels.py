"""Compiled inner loops. Everything here works on plain int64 arrays;
the Python-facing wrappers live in the other modules."""

import numpy as np
from numba import njit

ROOT_GROWTH = 1
AB_MOVE = 2
GHOST_ERASURE = 3


@njit(cache=True)
def lazy_walk(nb, start, stay, pick):
    n = stay.size
    v = np.empty(n + 1, np.int64)
    v[0] = start
    for k in range(n):
        cur = v[k]
        v[k + 1] = cur if stay[k] else nb[cur, pick[k]]
    return v


@njit(cache=True)
def first_loop_in_range(v, N, lo, hi):
    # last[x] holds the latest index <= m2 - lo visited at x
    V = 0
    for k in range(N + 1):
        if v[k] + 1 > V:
            V = v[k] + 1
    last = np.full(V, -1, np.int64)
    for m2 in range(N + 1):
        j = m2 - lo
        if j >= 0:
            last[v[j]] = j
        q = last[v[m2]]
        if q >= 0 and q >= m2 - hi:
            return m2
    return -1


@njit(cache=True)
def conditioned_walk(nb, start, steps, lo, hi, seed):
    np.random.seed(seed)
    V, deg = nb.shape
    v = np.empty(steps + 1, np.int64)
    v[0] = start
    last = np.full(V, -1, np.int64)
    w = np.empty(deg + 1)
    for n in range(steps):
        t = n + 1
        j = t - lo
        if j >= 0:
            last[v[j]] = j
        cur = v[n]
        total = 0.0
        q = last[cur]
        w[deg] = 0.0 if (q >= 0 and q >= t - hi) else 0.5
        total += w[deg]
        for a in range(deg):
            y = nb[cur, a]
            q = last[y]
            w[a] = 0.0 if (q >= 0 and q >= t - hi) else 0.5 / deg
            total += w[a]
        if total <= 0.0:
            return v, False
        u = np.random.random() * total
        choice = -1
        acc = 0.0
        for a in range(deg + 1):
            acc += w[a]
            if u < acc and w[a] > 0.0:
                choice = a
                break
        if choice < 0:
            # rounding guard: take the last allowed candidate
            for a in range(deg, -1, -1):
                if w[a] > 0.0:
                    choice = a
                    break
        v[t] = cur if choice == deg else nb[cur, choice]
    return v, True


@njit(cache=True)
def loop_erase_stack(v, lo, hi, V):
    """Indices of the chronological loop erasure of v[lo..hi]."""
    pos = np.full(V, -1, np.int64)
    stack = np.empty(hi - lo + 1, np.int64)
    top = 0
    for k in range(lo, hi + 1):
        x = v[k]
        p = pos[x]
        if p >= 0:
            for q in range(p, top):
                pos[v[stack[q]]] = -1
            top = p
        stack[top] = k
        pos[x] = top
        top += 1
    return stack[:top].copy()


@njit(cache=True)
def local_non_erased(v, lo, hi, s, V):
    """Flags over m in [lo+s, hi-s]: LE of v[m-s..m] avoids v[m+1..m+s]."""
    n_out = hi - lo - 2 * s + 1
    out = np.zeros(max(n_out, 0), np.bool_)
    pos = np.full(V, -1, np.int64)
    mark = np.full(V, -1, np.int64)
    stack = np.empty(s + 1, np.int64)
    for m in range(lo + s, hi - s + 1):
        top = 0
        for k in range(m - s, m + 1):
            x = v[k]
            p = pos[x]
            if p >= 0:
                for q in range(p, top):
                    pos[v[stack[q]]] = -1
                top = p
            stack[top] = k
            pos[x] = top
            top += 1
        for q in range(top):
            mark[v[stack[q]]] = m
            pos[v[stack[q]]] = -1
        ok = True
        for k in range(m + 1, m + s + 1):
            if mark[v[k]] == m:
                ok = False
                break
        out[m - lo - s] = ok
    return out


@njit(cache=True)
def cut_point_flags(v, lo, hi, sp, V):
    """Flags over l in [lo+sp, hi-sp]: v[l-sp..l] and v[l+1..l+sp] disjoint."""
    n_out = hi - lo - 2 * sp + 1
    out = np.zeros(max(n_out, 0), np.bool_)
    mark = np.full(V, -1, np.int64)
    for l in range(lo + sp, hi - sp + 1):
        for k in range(l - sp, l + 1):
            mark[v[k]] = l
        ok = True
        for k in range(l + 1, l + sp + 1):
            if mark[v[k]] == l:
                ok = False
                break
        out[l - lo - sp] = ok
    return out


@njit(cache=True)
def _flip(x, on, inS, parent, nchS, state):
    # state[0] = bad count, state[1] = |S|
    p = parent[x]
    if on:
        if p >= 0:
            nchS[p] += 1
            if not inS[p]:
                state[0] += 1
        state[0] -= nchS[x]
        inS[x] = True
        state[1] += 1
    else:
        if p >= 0:
            nchS[p] -= 1
            if not inS[p]:
                state[0] -= 1
        state[0] += nchS[x]
        inS[x] = False
        state[1] -= 1


@njit(cache=True)
def _set_parent(x, newp, inS, parent, nchS, state):
    old = parent[x]
    if inS[x]:
        if old >= 0:
            nchS[old] -= 1
            if not inS[old]:
                state[0] -= 1
        if newp >= 0:
            nchS[newp] += 1
            if not inS[newp]:
                state[0] += 1
    parent[x] = newp


@njit(cache=True)
def ghost_sweep(v, s, V, upto, want_radius):
    """Run the ghost recursion, the AB tree and the skeleton side by side.

    Returns per-index ghost times and per-step diagnostics for n = 0..upto.
    """
    L = upto
    ghost_time = np.full(L + 1, -1, np.int64)
    prv = np.full(L + 1, -1, np.int64)
    nxt = np.full(L + 1, -1, np.int64)
    lastng = np.full(V, -1, np.int64)
    cnt = np.zeros(V, np.int64)
    inS = np.zeros(V, np.bool_)
    parent = np.full(V, -1, np.int64)
    nchS = np.zeros(V, np.int64)
    visited = np.zeros(V, np.bool_)
    state = np.zeros(2, np.int64)

    nnew = np.zeros(L + 1, np.int64)
    newlo = np.full(L + 1, -1, np.int64)
    newhi = np.full(L + 1, -1, np.int64)
    mstar = np.full(L + 1, -1, np.int64)
    cls = np.zeros(L + 1, np.int64)
    connected = np.ones(L + 1, np.bool_)
    skel_size = np.zeros(L + 1, np.int64)
    radius = np.full(L + 1, -1, np.int64)
    memo = np.zeros(V, np.int64)
    stamp = np.full(V, -1, np.int64)
    chain = np.empty(V + 1, np.int64)

    x0 = v[0]
    visited[x0] = True
    lastng[x0] = 0
    cnt[x0] = 1
    _flip(x0, True, inS, parent, nchS, state)
    skel_size[0] = state[1]
    radius[0] = 0 if want_radius else -1

    for n in range(1, L + 1):
        x = v[n]
        u = v[n - 1]
        wasin = cnt[x] > 0
        # ghost condition, evaluated against G(n-1)
        h = lastng[x]
        lo_w = n - s + 1
        if lo_w < 0:
            lo_w = 0
        hs = -1
        if h >= lo_w:
            mstar[n] = h
            kbad = -1
            k = n - 1
            while k >= lo_w:
                if ghost_time[k] < 0 and prv[k] != -1:
                    kbad = k
                    break
                k -= 1
            if h > kbad:
                hs = h
        # AB tree edit
        if x != u:
            _set_parent(u, x, inS, parent, nchS, state)
            _set_parent(x, -1, inS, parent, nchS, state)
            visited[x] = True
        # new ghosts: every non-ghost index in [hs, n-1]
        if hs >= 0:
            first = -1
            last = -1
            c = 0
            for k in range(hs, n):
                if ghost_time[k] >= 0:
                    continue
                ghost_time[k] = n
                y = v[k]
                p = prv[k]
                q = nxt[k]
                if p >= 0:
                    nxt[p] = q
                if q >= 0:
                    prv[q] = p
                else:
                    lastng[y] = p
                cnt[y] -= 1
                if cnt[y] == 0:
                    _flip(y, False, inS, parent, nchS, state)
                if first < 0:
                    first = k
                last = k
                c += 1
            nnew[n] = c
            newlo[n] = first
            newhi[n] = last
        # link index n
        p = lastng[x]
        prv[n] = p
        nxt[n] = -1
        if p >= 0:
            nxt[p] = n
        lastng[x] = n
        cnt[x] += 1
        if cnt[x] == 1:
            _flip(x, True, inS, parent, nchS, state)

        if not wasin:
            cls[n] = ROOT_GROWTH
        elif nnew[n] == 0:
            cls[n] = AB_MOVE
        else:
            cls[n] = GHOST_ERASURE
        connected[n] = state[0] == 0
        skel_size[n] = state[1]

        if want_radius:
            best = 0
            for y in range(V):
                if not visited[y] or stamp[y] == n:
                    continue
                m = 0
                z = y
                d = 0
                while True:
                    if inS[z]:
                        d = 0
                        break
                    if stamp[z] == n:
                        d = memo[z]
                        break
                    chain[m] = z
                    m += 1
                    z = parent[z]
                for i in range(m - 1, -1, -1):
                    d += 1
                    memo[chain[i]] = d
                    stamp[chain[i]] = n
                if m > 0 and memo[y] > best:
                    best = memo[y]
            radius[n] = best
    return (ghost_time, nnew, newlo, newhi, mstar, cls, connected, skel_size,
            radius, parent, inS, visited)


@njit(cache=True)
def ab_parents(v, n, V):
    parent = np.full(V, -1, np.int64)
    visited = np.zeros(V, np.bool_)
    visited[v[0]] = True
    for k in range(1, n + 1):
        if v[k] != v[k - 1]:
            parent[v[k - 1]] = v[k]
            parent[v[k]] = -1
            visited[v[k]] = True
    return parent, visited


@njit(cache=True)
def lattice_le_avoids(ids1, ids2, V):
    """True when the loop erasure of ids1 misses ids2[1:]."""
    le = loop_erase_stack(ids1, 0, ids1.size - 1, V)
    mark = np.zeros(V, np.bool_)
    for k in le:
        mark[ids1[k]] = True
    for k in range(1, ids2.size):
        if mark[ids2[k]]:
            return False
    return True
