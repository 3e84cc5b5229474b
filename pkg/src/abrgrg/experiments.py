"""Experiment drivers behind the command line: configuration checking,
the AB-chain versus c-RGRG trace, the Rayleigh KS test and manifest runs."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import __version__
from .abchain import ab_tree
from .estimators import (column_coupling, gamma_N, rayleigh_cdf, root_distance_samples,
                         cut_indicator_coupling_experiment)
from .graph import build_graph, mixing_time
from .metric import FiniteRootedMetricSpace, distortion, gh_lower_bound, tree_to_metric
from .rgrg import PointCloud, RgrgState, sigma_c, sigma_exceeds, z_pattern
from .skeleton import SegmentScheme, check_parameters, cut_indicators, ne_segments, \
    sigma_decomposable
from .walk import Stream, sample_no_intermediate_loop_path

ORDERING = "r ≥ 3s+1 ≥ 18s′+1"


class ConfigError(ValueError):
    """Bad or missing configuration; the CLI maps it to exit code 2."""


class RuntimeGuard(RuntimeError):
    """A computation refused to run (size guard, dead-end sampler); exit code 3."""


@dataclass
class ExperimentConfig:
    graph: str = "torus:6,5"
    r: int | None = None
    s: int | None = None
    sp: int | None = None
    c: float | None = None
    T: float = 1.0
    trials: int = 100
    samples: int = 2000
    seed: int = 0
    out: str | None = None
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict, required=()) -> "ExperimentConfig":
        d = dict(d)
        for name in required:
            if d.get(name) is None:
                raise ConfigError(f"missing required field '{name}'")
        if "s_prime" in d:
            d["sp"] = d.pop("s_prime")
        known = {k: d.pop(k) for k in list(d) if k in cls.__dataclass_fields__ and k != "extra"}
        cfg = cls(**known, extra={**d.pop("extra", {}), **d})
        cfg.check()
        return cfg

    def check(self) -> None:
        if self.r is not None or self.s is not None:
            if self.r is None or self.s is None:
                raise ConfigError(f"missing required field '{'r' if self.r is None else 's'}'")
            try:
                check_parameters(int(self.r), int(self.s), None if self.sp is None else int(self.sp))
            except ValueError:
                raise ConfigError(f"parameter ordering violated: need {ORDERING} "
                                  f"(got r={self.r}, s={self.s}, s′={self.sp})") from None
        if self.c is not None and self.c <= 0:
            raise ConfigError("field 'c' must be positive")
        if self.T < 0:
            raise ConfigError("field 'T' must be nonnegative")
        if self.trials < 1 or self.samples < 1:
            raise ConfigError("fields 'trials' and 'samples' must be positive")
        try:
            build_graph(self.graph)
        except ValueError as e:
            raise ConfigError(f"field 'graph': {e}") from None

    def as_dict(self) -> dict:
        return asdict(self)


# -- AB chain against the coupled c-RGRG -----------------------------------

def _zero_truncated_poisson(lam: float, rng) -> int:
    # inversion on k >= 1
    u = rng.random() * (1.0 - math.exp(-lam))
    k, pk = 1, lam * math.exp(-lam)
    acc = pk
    while acc < u:
        k += 1
        pk *= lam / k
        acc += pk
    return k


def coupled_cloud(Z: np.ndarray, K: int, c: float, stream) -> PointCloud:
    """Poisson cloud on the horizon (K+1)c whose square indicators up to
    column K equal Z: occupied squares get a zero-truncated Poisson(c²)
    number of uniform points, triangles and the last column are free."""
    rng = stream if isinstance(stream, np.random.Generator) else stream.generator()
    pts = []
    for j in range(1, K + 2):
        t0 = (j - 1) * c
        for i in range(1, j):
            if j <= K:
                n = _zero_truncated_poisson(c * c, rng) if Z[i, j] else 0
            else:
                n = rng.poisson(c * c)
            for _ in range(n):
                pts.append((t0 + c * rng.random(), (i - 1) * c + c * (1.0 - rng.random())))
        for _ in range(rng.poisson(c * c / 2)):
            u, v = sorted(rng.random(2))
            pts.append((t0 + c * v, t0 + c * max(u, 1e-300)))
    return PointCloud.of(pts, horizon=(K + 1) * c)


def gh_rhs(ne_counts, a: float, c: float, r: int, s: int, T: float, n_cuts: int) -> float:
    """Right-hand side of the AB versus c-RGRG comparison bound."""
    return (sum(abs(a * m - c) for m in ne_counts) + 3 * a * s * T / c + 2 * a * (r + s)
            + 2 * c + 0.5 * (a * r + c) * n_cuts + a * r)


def _gh_sandwich(p, k: int, r: int, c: float, a: float, cloud: PointCloud) -> dict:
    """Upper and lower GH bounds between a·AB(kr) and RGRG(kc)."""
    n = k * r
    X = tree_to_metric(ab_tree(p, n), a)
    st = RgrgState.from_cloud(cloud, k * c)
    h = c / r
    labels = sorted(set((np.arange(n + 1) * (c / r)).tolist()) | set(st.grid(h)))
    labels = [min(y, k * c) for y in labels]
    D, _ = st.distance_matrix(labels)
    root_y = int(np.argmin(np.abs(np.asarray(labels) - k * c)))
    Y = FiniteRootedMetricSpace(D, root_y)
    pos = {v: i for i, v in enumerate(X.labels)}
    lab = np.asarray(labels)
    # vertex -> label of its last visit before n; label -> vertex visited then
    last = {}
    for m in range(n + 1):
        last[int(p.v[m])] = m
    R = set()
    for x, m in last.items():
        R.add((pos[x], int(np.argmin(np.abs(lab - m * c / r)))))
    for yi, y in enumerate(labels):
        m = min(int(round(y * r / c)), n)
        R.add((pos[int(p.v[m])], yi))
    R.add((X.root, root_y))
    upper = 0.5 * distortion(R, X, Y) + h / 2
    lower = max(0.0, gh_lower_bound(X, Y) - h)
    return {"upper": upper, "lower": lower, "ab_size": X.n, "rgrg_labels": Y.n}


def gh_trace(config) -> dict:
    """Per grid time t = kc, GH upper/lower bounds between a·AB(kr) and the
    coupled c-RGRG, with a = c/gamma_N, plus the comparison bound's RHS.

    Walks are lazy walks conditioned to avoid loops of length in [s', r];
    their cut indicators are coupled column by column with the Poisson
    indicators, and each Poisson pattern is completed to a cloud.
    Trials where the coupling event fails are reported, not fatal.
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(
        config, required=("r", "s", "sp", "c"))
    for name in ("r", "s", "sp", "c"):
        if getattr(cfg, name) is None:
            raise ConfigError(f"missing required field '{name}'")
    g = build_graph(cfg.graph)
    r, s, sp, c, T = int(cfg.r), int(cfg.s), int(cfg.sp), float(cfg.c), float(cfg.T)
    K = int(math.floor(T / c + 1e-12))
    if K < 3:
        raise ConfigError(f"fields 'T' and 'c' need floor(T/c) ≥ 3 (got {K})")
    root = Stream(int(cfg.seed), 0)
    gam = gamma_N(g, r, s, int(cfg.extra.get("gamma_samples", cfg.samples)), root.child(0))
    a = c / gam.value
    L = (K + 1) * r
    sch = SegmentScheme(r, s)
    walk_rng = root.child(1).generator()
    paths, pats, nes = [], [], []
    iu = np.triu_indices(K + 1, 1)
    keep = iu[0] >= 1
    for _ in range(cfg.trials):
        try:
            p = sample_no_intermediate_loop_path(g, None, L, sp, r, walk_rng)
        except RuntimeError as e:
            raise RuntimeGuard(str(e)) from None
        ne = ne_segments(p, sch, K)
        Z, _ = cut_indicators(p, sch, K, ne)
        paths.append(p)
        nes.append([int(ne[i].size) for i in range(1, K + 1)])
        pats.append(Z[iu][keep])
    pats = np.asarray(pats, dtype=np.int64)
    tv, pois = column_coupling(pats, K, 1.0 - math.exp(-c * c), root.child(2))
    cloud_root = root.child(3)
    rows, trials = [], []
    for t, p in enumerate(paths):
        Zp = np.zeros((K + 1, K + 1), dtype=np.int64)
        Zp[iu[0][keep], iu[1][keep]] = pois[t]
        cloud = coupled_cloud(Zp, K, c, cloud_root.child(t))
        assert np.array_equal(z_pattern(cloud, c, K), Zp)
        same = bool(np.array_equal(pats[t], pois[t]))
        sig_pi = sigma_exceeds(sigma_c(cloud, c), T)
        sig_w = sigma_decomposable(p, r, s, sp, L) > r * T / c
        ok = same and sig_pi and sig_w
        rec = {"trial": t, "indicators_equal": same, "sigma_cloud_ok": bool(sig_pi),
               "sigma_walk_ok": bool(sig_w), "success": bool(ok), "cuts": int(pois[t].sum())}
        if ok:
            rhs = gh_rhs(nes[t], a, c, r, s, T, int(pats[t].sum()))
            ups = []
            for k in range(K + 1):
                b = _gh_sandwich(p, k, r, c, a, cloud)
                rows.append({"trial": t, "k": k, "t": k * c, **b, "rhs": rhs})
                ups.append(b["upper"])
            rec.update(max_upper=max(ups), rhs=rhs, within_bound=bool(max(ups) <= rhs))
        trials.append(rec)
    succ = [x for x in trials if x["success"]]
    return {
        "config": cfg.as_dict(), "K": K, "a": a, "gamma_N": gam.value, "gamma_N_se": gam.se,
        "coupling_tv_sum": tv, "trials": trials, "rows": rows,
        "successes": len(succ),
        "all_within_bound": all(x["within_bound"] for x in succ),
        "seeds": root.record(),
    }


# -- Rayleigh marginal -------------------------------------------------------

def _ks(x) -> tuple[float, float]:
    res = stats.kstest(np.asarray(x, dtype=float), rayleigh_cdf)
    return float(res.statistic), float(res.pvalue)


def rayleigh_test(config) -> dict:
    """KS test of the rescaled root displacement of the stationary AB chain
    against the Rayleigh law, with a self-test and a negative control.

    Distances D are integers; the statistic uses (D + U - 1/2)/sqrt(m) with
    U uniform, i.e. a centred continuity jitter.
    """
    cfg = config if isinstance(config, ExperimentConfig) else ExperimentConfig.from_dict(config)
    g = build_graph(cfg.graph)
    m = g.vertex_count
    epochs = int(cfg.extra.get("epochs", cfg.samples))
    if epochs < 50:
        raise ConfigError("field 'epochs' must be at least 50 for a KS test")
    tmix = mixing_time(g) if m <= 2000 else m
    spacing = int(cfg.extra.get("spacing", max(10 * tmix, 2 * m)))
    if spacing < 10 * tmix:
        raise ConfigError(f"field 'spacing' must be at least 10·t_mix = {10 * tmix}")
    root = Stream(int(cfg.seed), 0)
    D = root_distance_samples(g, epochs, spacing, root.child(0))
    rng = root.child(1).generator()
    x = (D + rng.random(D.size) - 0.5) / math.sqrt(m)
    stat, pval = _ks(x)
    self_stat, self_p = _ks(rng.rayleigh(1.0, epochs))
    # density exp(-x/2)/2
    neg_stat, neg_p = _ks(rng.exponential(2.0, epochs))
    return {"graph": cfg.graph, "m": m, "epochs": epochs, "spacing": spacing,
            "mean_rescaled": float(x.mean()), "statistic": stat, "pvalue": pval,
            "self_test": {"statistic": self_stat, "pvalue": self_p},
            "negative_control": {"statistic": neg_stat, "pvalue": neg_p},
            "seeds": root.record()}


# -- manifest runs -----------------------------------------------------------

EXPERIMENTS = ("gh_trace", "rayleigh_test", "cut_coupling")


def _csv(rows) -> str:
    if not rows:
        return ""
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not JSON: {e}") from None


def run_experiment(config, out_dir: str | None = None) -> dict:
    """Run the experiment named in the config and write manifest.json,
    summary.json and trace.csv into the output directory. Outputs depend
    on the config only; rerunning a manifest reproduces them byte for byte."""
    raw = load_config(config) if isinstance(config, (str, os.PathLike)) else dict(config)
    kind = raw.get("experiment")
    if kind is None:
        raise ConfigError("missing required field 'experiment'")
    if kind not in EXPERIMENTS:
        raise ConfigError(f"field 'experiment' must be one of {', '.join(EXPERIMENTS)}")
    body = {k: v for k, v in raw.items() if k != "experiment"}
    out_dir = out_dir or body.get("out")
    if not out_dir:
        raise ConfigError("missing required field 'out'")
    if kind == "gh_trace":
        cfg = ExperimentConfig.from_dict(body, required=("graph", "r", "s", "sp", "c", "seed"))
        res = gh_trace(cfg)
        rows = res.pop("rows")
        res["trace_rows"] = len(rows)
    elif kind == "rayleigh_test":
        cfg = ExperimentConfig.from_dict(body, required=("graph", "seed"))
        res = rayleigh_test(cfg)
        rows = [{"statistic": res["statistic"], "pvalue": res["pvalue"]}]
    else:
        cfg = ExperimentConfig.from_dict(body, required=("seed",))
        sizes = cfg.extra.get("sizes")
        if not sizes:
            raise ConfigError("missing required field 'sizes'")
        rows = cut_indicator_coupling_experiment(sizes, int(cfg.extra.get("d", 5)), cfg.T,
                                                 cfg.trials, Stream(cfg.seed, 0),
                                                 c_samples=cfg.samples)
        res = {"rows": len(rows)}
    manifest = {"experiment": kind, "config": cfg.as_dict(), "version": __version__,
                "seeds": Stream(cfg.seed, 0).record()}
    os.makedirs(out_dir, exist_ok=True)
    files = {"manifest.json": _dump(manifest), "summary.json": _dump(res), "trace.csv": _csv(rows)}
    digests = {}
    for name, text in files.items():
        with open(os.path.join(out_dir, name), "w") as fh:
            fh.write(text)
        digests[name] = hashlib.sha256(text.encode()).hexdigest()
    return {"out": out_dir, "files": sorted(files), "sha256": digests, "summary": res}
