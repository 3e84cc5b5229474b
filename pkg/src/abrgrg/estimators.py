"""Exact and Monte Carlo estimators: non-intersection probabilities, the
H functions, the scale sequences gamma_N and c_N, lattice constants,
couplings, the Rayleigh generator and a few closed-form bounds."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numba import njit
from scipy import integrate

from . import _kernels
from .erasure import locally_non_erased
from .graph import RegularGraph, lazy_kernel, mixing_time
from .skeleton import SegmentScheme, check_parameters
from .walk import Path, Stream, as_generator, sample_path

EXACT_QBAR_LIMIT = 2_000_000


@dataclass
class McEstimate:
    value: float
    se: float
    samples: int
    seeds: dict = field(default_factory=dict)
    detail: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"value": self.value, "se": self.se, "samples": self.samples,
                "seeds": self.seeds, **self.detail}


def _seed_record(stream) -> dict:
    return stream.record() if isinstance(stream, Stream) else {}


def _bernoulli(hits: int, n: int, stream) -> McEstimate:
    p = hits / n
    return McEstimate(p, math.sqrt(max(p * (1 - p), 0.0) / n), n, _seed_record(stream))


# -- q-bar -----------------------------------------------------------------

def _enumerate_paths(g: RegularGraph, start: int, steps: int):
    """All lazy paths of the given length from start, with probabilities."""
    deg = g.degree
    moves = [(None, 0.5)] + [(a, 0.5 / deg) for a in range(deg)]
    for choice in itertools.product(range(deg + 1), repeat=steps):
        v = [start]
        w = 1.0
        for c in choice:
            a, p = moves[c]
            v.append(v[-1] if a is None else int(g.neighbors[v[-1], a]))
            w *= p
        yield v, w


def _avoid_prob(P: np.ndarray, start: int, forbidden, steps: int) -> float:
    """P_start(W(1..steps) avoids the forbidden set)."""
    mask = np.ones(P.shape[0])
    mask[list(forbidden)] = 0.0
    v = np.zeros(P.shape[0])
    v[start] = 1.0
    for _ in range(steps):
        v = (v @ P) * mask
    return float(v.sum())


def qbar(g: RegularGraph, sp: int, mode: str = "exact", samples: int = 10_000,
         stream=None) -> McEstimate:
    """Average over roots of P(R^{W1}[0,s'] meets R^{W2}[1,s'])."""
    if sp < 1:
        raise ValueError("s' must be at least 1")
    V = g.vertex_count
    if mode == "exact":
        if V * (g.degree + 1) ** sp > EXACT_QBAR_LIMIT:
            raise ValueError("exact q-bar guard exceeded; use mode='mc'")
        P = lazy_kernel(g)
        tot = 0.0
        for rho in range(V):
            for v, w in _enumerate_paths(g, rho, sp):
                tot += w * (1.0 - _avoid_prob(P, rho, set(v), sp))
        return McEstimate(tot / V, 0.0, 0, {}, {"mode": "exact"})
    if mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")
    rng = as_generator(stream)
    hits = 0
    for _ in range(samples):
        rho = int(rng.integers(V))
        a = sample_path(g, rho, sp, rng).v
        b = sample_path(g, rho, sp, rng).v[1:]
        hits += bool(np.intersect1d(a, b).size)
    return _bernoulli(hits, samples, stream)


def qbar_window_identity(g: RegularGraph, sp: int) -> float:
    """P_pi(R[l-s', l] meets R[l+1, l+s']) for a stationary walk, by forward
    enumeration of the past window and a killed kernel for the future."""
    V = g.vertex_count
    if V * (g.degree + 1) ** sp > EXACT_QBAR_LIMIT:
        raise ValueError("exact guard exceeded")
    P = lazy_kernel(g)
    tot = 0.0
    for x in range(V):
        for v, w in _enumerate_paths(g, x, sp):
            tot += w / V * (1.0 - _avoid_prob(P, v[-1], set(v), sp))
    return tot


def qbar_upper_bound(g: RegularGraph, s: int) -> float:
    """1 - (1 - 10 s^2/#V) / sup_rho H_rho(s); meaningful for s >= t_mix + 1."""
    V = g.vertex_count
    Hs = max(h_function(g, rho, s, s) for rho in range(V))
    return 1.0 - (1.0 - 10.0 * s * s / V) / Hs


# -- H functions -----------------------------------------------------------

def _return_probs(g: RegularGraph, rho: int, upto: int) -> np.ndarray:
    P = lazy_kernel(g)
    v = np.zeros(g.vertex_count)
    v[rho] = 1.0
    out = np.empty(upto + 1)
    for k in range(upto + 1):
        out[k] = v[rho]
        v = v @ P
    return out


def h_function(g: RegularGraph, rho: int, m: int, n: int | None = None) -> float:
    """sum_{i<=m, j<=n} P_rho(W(i+j) = rho)."""
    n = m if n is None else n
    ret = _return_probs(g, rho, m + n)
    k = np.arange(m + n + 1)
    # number of (i, j) in [0,m]x[0,n] with i + j = k
    mult = np.minimum(k, m) - np.maximum(0, k - n) + 1
    return float(np.dot(ret, mult))


def h_graph(g: RegularGraph, m: int, n: int | None = None) -> float:
    V = g.vertex_count
    return float(np.mean([h_function(g, rho, m, n) for rho in range(V)]))


def h_bound_check(g: RegularGraph, m: int, t: int | None = None) -> tuple[float, float]:
    """(sup_rho H_rho(m), sup_rho H_rho(t_mix) + 5 m^2 / (2 #V))."""
    t = mixing_time(g) if t is None else t
    V = g.vertex_count
    lhs = max(h_function(g, rho, m) for rho in range(V))
    rhs = max(h_function(g, rho, t) for rho in range(V)) + 2.5 * m * m / V
    return lhs, rhs


# -- gamma_N, c_N ----------------------------------------------------------

def _stationary_walk(g: RegularGraph, steps: int, rng) -> Path:
    return sample_path(g, int(rng.integers(g.vertex_count)), steps, rng)


def gamma_N(g: RegularGraph, r: int, s: int, samples: int, stream) -> McEstimate:
    """Mean of #R(NE^{W,s}(A_1)) under a stationary start."""
    check_parameters(r, s)
    A1 = SegmentScheme(r, s).A(1)
    rng = as_generator(stream)
    vals = np.empty(samples)
    for k in range(samples):
        p = _stationary_walk(g, A1.hi, rng)
        vals[k] = np.unique(p.v[locally_non_erased(p, s, A1)]).size
    return McEstimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0,
                      samples, _seed_record(stream))


def c_N(g: RegularGraph, r: int, s: int, samples: int, stream, segment: str = "B") -> McEstimate:
    """c_N from -ln P(R^{W1}(seg_1) misses R^{W2}(NE^{W2,s}(A_1))) with two
    independent stationary walks; ``segment`` picks A_1 or B_1 for W1."""
    check_parameters(r, s)
    sch = SegmentScheme(r, s)
    A1 = sch.A(1)
    S1 = sch.B(1) if segment == "B" else sch.A(1)
    rng = as_generator(stream)
    miss = 0
    for _ in range(samples):
        w1 = _stationary_walk(g, S1.hi, rng).v[S1.lo:S1.hi + 1]
        p2 = _stationary_walk(g, A1.hi, rng)
        ne = p2.v[locally_non_erased(p2, s, A1)]
        miss += not np.intersect1d(w1, ne).size
    q = miss / samples
    detail = {"segment": segment, "miss_probability": q}
    if miss == 0:
        warnings.warn("empirical non-intersection count is 0; clamping")
        q = 0.5 / samples
        detail["clamped"] = True
    c2 = -math.log(q)
    se_q = math.sqrt(max(q * (1 - q), 0.0) / samples)
    se_c2 = se_q / q
    c = math.sqrt(c2)
    detail["c_squared"] = c2
    detail["c_squared_se"] = se_c2
    return McEstimate(c, se_c2 / (2 * c) if c > 0 else float("inf"), samples,
                      _seed_record(stream), detail)


# -- lattice constants -----------------------------------------------------

def _lattice_walk(d: int, M: int, rng) -> np.ndarray:
    steps = np.zeros((M, d), dtype=np.int64)
    move = rng.random(M) >= 0.5
    axis = rng.integers(d, size=M)
    sign = rng.integers(2, size=M) * 2 - 1
    idx = np.flatnonzero(move)
    steps[idx, axis[idx]] = sign[idx]
    out = np.zeros((M + 1, d), dtype=np.int64)
    np.cumsum(steps, axis=0, out=out[1:])
    return out


def _compact_ids(*walks):
    allc = np.concatenate(walks)
    _, inv = np.unique(allc, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    out, o = [], 0
    for w in walks:
        out.append(inv[o:o + len(w)].astype(np.int64))
        o += len(w)
    return out, int(inv.max()) + 1


def estimate_gamma_d(d: int, M: int, samples: int, stream) -> McEstimate:
    """P(LE(W1[0,M]) misses W2[1,M]) for lazy walks on Z^d from the origin."""
    if d < 5:
        raise ValueError("lattice constants are estimated for d >= 5")
    rng = as_generator(stream)
    hits = 0
    for _ in range(samples):
        (a, b), V = _compact_ids(_lattice_walk(d, M, rng), _lattice_walk(d, M, rng))
        hits += _kernels.lattice_le_avoids(a, b, V)
    return _bernoulli(hits, samples, stream)


def estimate_alpha_d(d: int, M: int, samples: int, stream) -> McEstimate:
    """P(Q_12, Q_13, Q_23) with Q_ij = {LE(W_i[0,M]) misses W_j[1,M]}."""
    if d < 5:
        raise ValueError("lattice constants are estimated for d >= 5")
    rng = as_generator(stream)
    hits = 0
    for _ in range(samples):
        ws, V = _compact_ids(*(_lattice_walk(d, M, rng) for _ in range(3)))
        ok = all(_kernels.lattice_le_avoids(ws[i], ws[j], V)
                 for i, j in ((0, 1), (0, 2), (1, 2)))
        hits += ok
    return _bernoulli(hits, samples, stream)


def horizon_stability(estimator, d: int, M: int, samples: int, stream) -> dict:
    """Run an estimator at M and 2M on independent child streams."""
    st = stream if isinstance(stream, Stream) else Stream(int(as_generator(stream).integers(2**62)), 0)
    e1 = estimator(d, M, samples, st.child(1))
    e2 = estimator(d, 2 * M, samples, st.child(2))
    se = math.hypot(e1.se, e2.se)
    return {"M": e1.value, "2M": e2.value, "delta": e2.value - e1.value,
            "combined_se": se, "stable": abs(e2.value - e1.value) <= 3 * se}


# -- couplings -------------------------------------------------------------

def optimal_tv_coupling(mu, nu) -> tuple[np.ndarray, float]:
    """Joint table with marginals mu, nu and P(X != Y) = d_TV(mu, nu)."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape or mu.ndim != 1:
        raise ValueError("distributions must share one finite support")
    m = np.minimum(mu, nu)
    tv = 0.5 * float(np.abs(mu - nu).sum())
    J = np.diag(m)
    if tv > 0:
        J = J + np.outer(mu - m, nu - m) / (1.0 - m.sum())
    return J, tv


def tv_distance(mu, nu) -> float:
    return 0.5 * float(np.abs(np.asarray(mu, float) - np.asarray(nu, float)).sum())


def _cube(j: int) -> np.ndarray:
    return ((np.arange(2 ** j)[:, None] >> np.arange(j)[None, :]) & 1).astype(np.int64)


def hypercube_bound(law_a, law_b) -> float:
    """1 - sum_i sum_{k != i} (E[Z_k Z_i] + E[Z'_k Z'_i]) - sum_i |E Z_i - E Z'_i|
    for laws given as tables over {0,1}^j (bit i of the index is Z_i)."""
    a = np.asarray(law_a, float)
    b = np.asarray(law_b, float)
    j = int(round(math.log2(a.size)))
    X = _cube(j)
    ea, eb = a @ X, b @ X
    cross = lambda w: float(w @ (X.sum(1) ** 2 - X.sum(1)))
    return 1.0 - cross(a) - cross(b) - float(np.abs(ea - eb).sum())


def product_law(p) -> np.ndarray:
    p = np.asarray(p, float)
    X = _cube(p.size)
    return np.prod(np.where(X == 1, p, 1 - p), axis=1)


def couple_binary(law_a, law_b, samples: int, stream, method: str = "optimal") -> dict:
    """Couple two laws on {0,1}^j and return the exact and empirical P(Z = Z').

    ``optimal`` uses the joint optimal coupling; ``sequential`` couples the
    coordinates one by one, each conditional pair maximally.
    """
    a = np.asarray(law_a, float)
    b = np.asarray(law_b, float)
    if a.shape != b.shape:
        raise ValueError("laws must live on the same cube")
    j = int(round(math.log2(a.size)))
    if 2 ** j != a.size or j > 20:
        raise ValueError("tables must have 2^j entries, j <= 20")
    rng = as_generator(stream)
    if method == "optimal":
        J, tv = optimal_tv_coupling(a, b)
        flat = J.reshape(-1)
        draws = rng.choice(flat.size, size=samples, p=flat / flat.sum())
        za, zb = np.divmod(draws, a.size)
        exact = 1.0 - tv
    elif method == "sequential":
        za, zb = np.zeros(samples, np.int64), np.zeros(samples, np.int64)
        exact_tab = _sequential_table(a, b, j)
        exact = float(np.trace(exact_tab))
        flat = exact_tab.reshape(-1)
        draws = rng.choice(flat.size, size=samples, p=flat / flat.sum())
        za, zb = np.divmod(draws, a.size)
    else:
        raise ValueError(f"unknown method {method!r}")
    emp = float(np.mean(za == zb))
    return {"exact": exact, "empirical": emp, "se": math.sqrt(emp * (1 - emp) / samples),
            "bound": hypercube_bound(a, b), "samples": samples}


def _sequential_table(a: np.ndarray, b: np.ndarray, j: int) -> np.ndarray:
    # joint law built coordinate by coordinate: given prefixes (x, y), couple
    # the conditional Bernoulli laws of the next bits maximally
    J = {((), ()): 1.0}
    for i in range(j):
        nxt = {}
        for (x, y), w in J.items():
            if w == 0.0:
                continue
            pa = _cond_one(a, x, j)
            pb = _cond_one(b, y, j)
            both1, both0 = min(pa, pb), min(1 - pa, 1 - pb)
            for (bx, by), q in (((1, 1), both1), ((0, 0), both0),
                                ((1, 0), max(pa - pb, 0.0)), ((0, 1), max(pb - pa, 0.0))):
                if q > 0:
                    key = (x + (bx,), y + (by,))
                    nxt[key] = nxt.get(key, 0.0) + w * q
        J = nxt
    T = np.zeros((a.size, a.size))
    for (x, y), w in J.items():
        ix = sum(bit << k for k, bit in enumerate(x))
        iy = sum(bit << k for k, bit in enumerate(y))
        T[ix, iy] += w
    return T


def _cond_one(law: np.ndarray, prefix: tuple, j: int) -> float:
    idx = np.arange(law.size)
    sel = np.ones(law.size, bool)
    for k, bit in enumerate(prefix):
        sel &= ((idx >> k) & 1) == bit
    tot = law[sel].sum()
    if tot <= 0:
        return 0.0
    i = len(prefix)
    return float(law[sel & (((idx >> i) & 1) == 1)].sum() / tot)


# -- Rayleigh generator ----------------------------------------------------

def rayleigh_density(x):
    return x * np.exp(-0.5 * x * x)


def rayleigh_generator_residual(coeffs, density=rayleigh_density, rate: str = "linear") -> float:
    """int_0^inf (Omega f)(x) density(x) dx for the polynomial f = sum c_k x^k.

    ``rate='linear'`` jumps at rate x to a uniform point of [0, x], i.e.
    Omega f(x) = f'(x) + x int_0^1 (f(ux) - f(x)) du; ``rate='unit'`` drops
    the factor x.
    """
    c = np.asarray(coeffs, dtype=float)
    if c.size > 9:
        raise ValueError("polynomials of degree <= 8 only")
    k = np.arange(c.size)
    dc = (c * k)[1:]
    avg = c / (k + 1) - c          # int_0^1 f(ux) du - f(x), coefficientwise
    jump = np.concatenate([[0.0], avg]) if rate == "linear" else avg
    if rate not in ("linear", "unit"):
        raise ValueError(f"unknown rate {rate!r}")

    def omega(x):
        return np.polyval(dc[::-1], x) + np.polyval(jump[::-1], x) if dc.size else np.polyval(jump[::-1], x)

    val, err = integrate.quad(lambda x: omega(x) * density(x), 0, np.inf,
                              epsabs=1e-13, epsrel=1e-12, limit=200)
    if not np.isfinite(val):
        raise RuntimeError("quadrature failed")
    return float(val)


def rayleigh_cdf(x):
    return 1.0 - np.exp(-0.5 * np.asarray(x) ** 2)


@njit(cache=True)
def _ab_epochs(nb, parent, root, epochs, spacing, seed):
    # run the AB chain from a given tree; at the end of each epoch record
    # the depth of the epoch's starting root
    np.random.seed(seed)
    V, deg = nb.shape
    out = np.empty(epochs, np.int64)
    cur = root
    for e in range(epochs):
        old = cur
        for _ in range(spacing):
            if np.random.random() < 0.5:
                continue
            x = nb[cur, np.random.randint(deg)]
            parent[cur] = x
            parent[x] = -1
            cur = x
        d = 0
        z = old
        while z != cur:
            z = parent[z]
            d += 1
        out[e] = d
    return out


def root_distance_samples(g: RegularGraph, epochs: int, spacing: int, stream) -> np.ndarray:
    """Graph distance between the root at the start and at the end of each
    epoch of a stationary AB chain started from a Wilson tree."""
    from .abchain import ust_wilson
    rng = as_generator(stream)
    t = ust_wilson(g, rng)
    par = t.parent.copy()
    return _ab_epochs(g.neighbors, par, t.root, int(epochs), int(spacing), int(rng.integers(2**62)))


# -- closed-form bounds ----------------------------------------------------

def cloud_decomposability_bound(c: float, T: float) -> float:
    return 1 - 0.75 * c * c * T * T - 0.5 * c * T - c * T ** 3 / 3


def walk_decomposability_bound(qbar2sp: float, V: int, r: int, s: int, sp: int, q: int, N: int) -> float:
    return (1 - N * qbar2sp ** (s // (6 * sp)) - 2 * (3 * r + 2 * s) * N / V
            - 16 * r * N ** 3 / V ** 2 - 8 * N * s * (3 * N + 2 * s) / (r * V)
            - s * N / (3 * 4 ** q * sp))


def coupling_mismatch_bound(k: int, V: int, r: int, c: float) -> float:
    return 2 * k * k / V + 8 * k ** 3 * r ** 4 / V ** 2 + k ** 3 * (1 - math.exp(-c * c)) ** 2


# -- cut-indicator coupling ------------------------------------------------

def walk_cut_patterns(g: RegularGraph, r: int, s: int, K: int, trials: int, stream) -> np.ndarray:
    """Z^{W,(r,s)} flattened over 1 <= i < j <= K for stationary walks."""
    from .skeleton import cut_indicators
    sch = SegmentScheme(r, s)
    rng = as_generator(stream)
    iu = np.triu_indices(K + 1, 1)
    keep = iu[0] >= 1
    out = np.zeros((trials, int(keep.sum())), dtype=np.int64)
    for t in range(trials):
        p = _stationary_walk(g, K * r, rng)
        Z, _ = cut_indicators(p, sch, K)
        out[t] = Z[iu][keep]
    return out


def pattern_coupling(patterns: np.ndarray, p: float, stream):
    """Optimal coupling of the empirical law of ``patterns`` with the product
    Bernoulli(p) law; returns (d_TV, coupled Poisson-side patterns)."""
    rng = as_generator(stream)
    n, m = patterns.shape
    keys, inv, cnt = np.unique(patterns, axis=0, return_inverse=True, return_counts=True)
    inv = inv.reshape(-1)
    emp = cnt / n
    ones = keys.sum(1)
    prod = p ** ones * (1 - p) ** (m - ones)
    overlap = np.minimum(emp, prod)
    tv = 1.0 - float(overlap.sum())
    out = patterns.copy()
    for t in range(n):
        k = inv[t]
        if rng.random() * emp[k] < overlap[k]:
            continue
        # draw from the excess of the product law by rejection
        while True:
            y = (rng.random(m) < p).astype(np.int64)
            hit = np.flatnonzero((keys == y).all(1))
            e = emp[hit[0]] if hit.size else 0.0
            py = p ** y.sum() * (1 - p) ** (m - y.sum())
            if rng.random() * py < py - min(py, e):
                out[t] = y
                break
    return tv, out


def torus_scheme(V: int, sp: int = 1) -> tuple[int, int, int]:
    """(r, s, s') growing with #V: s ~ #V^(1/3), r = 4s (desk-scale reading of
    the ordering 1 << s' << s << r << #V^(1/2))."""
    s = max(6 * sp, int(round(V ** (1 / 3))))
    return 4 * s, s, sp


def column_coupling(patterns: np.ndarray, K: int, p: float, stream):
    """Couple each column (Z_(i,j); i < j) of the walk patterns with the
    Poisson column law by an optimal coupling; returns (sum of the column
    TV distances, coupled Poisson patterns)."""
    iu = np.triu_indices(K + 1, 1)
    keep = iu[0] >= 1
    cols = iu[1][keep]
    out = np.zeros_like(patterns)
    tot = 0.0
    rng = as_generator(stream)
    for j in range(2, K + 1):
        sel = np.flatnonzero(cols == j)
        tv, y = pattern_coupling(patterns[:, sel], p, rng)
        out[:, sel] = y
        tot += tv
    return tot, out


def column_tv_sum(patterns: np.ndarray, K: int, p: float) -> float:
    """Sum over columns of d_TV(empirical column law, product Bernoulli(p))."""
    iu = np.triu_indices(K + 1, 1)
    cols = iu[1][iu[0] >= 1]
    n = patterns.shape[0]
    tot = 0.0
    for j in range(2, K + 1):
        sub = patterns[:, cols == j]
        keys, cnt = np.unique(sub, axis=0, return_counts=True)
        ones = keys.sum(1)
        prod = p ** ones * (1 - p) ** (sub.shape[1] - ones)
        tot += 1.0 - float(np.minimum(cnt / n, prod).sum())
    return tot


def null_tv_bias(K: int, p: float, n: int, stream, reps: int = 4) -> tuple[float, float]:
    """Mean and SE of column_tv_sum for n exact Poisson-side patterns: the
    part of the empirical TV that is pure sampling noise."""
    rng = as_generator(stream)
    m = K * (K - 1) // 2
    vals = [column_tv_sum((rng.random((n, m)) < p).astype(np.int64), K, p) for _ in range(reps)]
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / math.sqrt(reps)) if reps > 1 else 0.0


def cut_indicator_coupling_experiment(sizes, d: int, T: float, trials: int, stream,
                                      scheme=None, c_samples: int = 2000, c_values=None) -> list[dict]:
    """For each torus side N: estimate c_N, then couple walk and Poisson cut
    indicators up to floor(T/c_N) column by column and report the mismatch
    probability. ``scheme`` maps #V to (r, s, s'); default ``torus_scheme``."""
    from .graph import torus
    scheme = torus_scheme if scheme is None else scheme
    st = stream if isinstance(stream, Stream) else Stream(int(as_generator(stream).integers(2**62)), 0)
    rows = []
    for idx, N in enumerate(sizes):
        g = torus(N, d)
        r, s, sp = scheme(g.vertex_count)
        sub = st.child(idx)
        if c_values is None:
            cest = c_N(g, r, s, c_samples, sub.child(0))
            c, cse = cest.value, cest.se
        else:
            c, cse = float(c_values[idx]), 0.0
        K = int(math.floor(T / c + 1e-12))
        row = {"N": N, "V": g.vertex_count, "r": r, "s": s, "c": c, "c_se": cse, "K": K,
               "trials": trials}
        if K < 2:
            row.update(mismatch=0.0, mismatch_se=0.0, tv_sum=0.0, note="no indices")
            rows.append(row)
            continue
        pats = walk_cut_patterns(g, r, s, K, trials, sub.child(1))
        p = 1.0 - math.exp(-c * c)
        tv, pois = column_coupling(pats, K, p, sub.child(2))
        mis = float(np.mean((pats != pois).any(1)))
        bias, bias_se = null_tv_bias(K, p, trials, sub.child(3))
        row.update(tv_sum_debiased=tv - bias, null_bias=bias, null_bias_se=bias_se)
        row.update(mismatch=mis, mismatch_se=math.sqrt(mis * (1 - mis) / trials), tv_sum=tv,
                   walk_mean=float(pats.mean()), poisson_p=p,
                   bound=coupling_mismatch_bound(K, g.vertex_count, r, c))
        rows.append(row)
    return rows
