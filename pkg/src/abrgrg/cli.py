"""Command line interface: ``abrgrg <subcommand> ...``.

Exit codes: 0 on success, 2 for configuration errors, 3 when a runtime
guard refuses to run. Nothing is written when a command fails.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import estimators as est
from .abchain import STAY, ab_step, ab_tree, ust_samples
from .erasure import locally_non_erased, non_erased_indices
from .experiments import (ORDERING, ConfigError, ExperimentConfig, RuntimeGuard, _csv, _dump,
                          gh_trace, load_config, rayleigh_test, run_experiment)
from .graph import build_graph, mixing_time, DENSE_LIMIT
from .rgrg import RgrgState, c_rgrg, sample_poisson_cloud, sigma_c
from .skeleton import CLASS_NAMES, check_parameters, sigma_decomposable, sweep
from .walk import Path, Stream, sample_no_intermediate_loop_path, sample_path

__all__ = ["main", "gh_trace", "rayleigh_test", "run_experiment", "ExperimentConfig"]


# -- helpers -----------------------------------------------------------------

def _graph(spec):
    if spec is None:
        raise ConfigError("missing required field 'spec'")
    try:
        return build_graph(spec)
    except ValueError as e:
        raise ConfigError(f"field 'spec': {e}") from None


def _params(r, s, sp=None):
    if r is None or s is None:
        raise ConfigError(f"missing required field '{'r' if r is None else 's'}'")
    try:
        check_parameters(r, s, sp)
    except ValueError:
        raise ConfigError(f"parameter ordering violated: need {ORDERING} "
                          f"(got r={r}, s={s}, s′={sp})") from None


def _read_path(fn) -> Path:
    try:
        v = np.loadtxt(fn, dtype=np.int64, ndmin=1)
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read path file {fn}: {e}") from None
    return Path(None, v, validate=False)


def _interval(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(":"))
    except ValueError:
        raise ConfigError(f"window must look like lo:hi, got {text!r}") from None
    return lo, hi


def _emit(args, obj=None, rows=None, text=None):
    """Write to --out (or stdout) as JSON, CSV or raw text."""
    if text is None:
        if rows is not None and args.format == "csv":
            text = _csv(rows)
        else:
            text = _dump(obj if obj is not None else rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- subcommands -------------------------------------------------------------

def cmd_graph_info(args):
    g = _graph(args.spec)
    out = {"spec": args.spec, "vertices": g.vertex_count, "degree": g.degree}
    if g.vertex_count <= min(DENSE_LIMIT, 2000):
        out["t_mix"] = mixing_time(g)
    _emit(args, out)


def cmd_simulate_walk(args):
    g = _graph(args.spec)
    if args.steps is None or args.steps < 0:
        raise ConfigError("missing required field 'steps'")
    p = sample_path(g, args.start, args.steps, Stream(args.seed, 0))
    _emit(args, text="".join(f"{int(x)}\n" for x in p.v))


def cmd_loop_erase(args):
    p = _read_path(args.path)
    lo, hi = _interval(args.window)
    try:
        if args.local is None:
            idx = non_erased_indices(p, (lo, hi))
        else:
            idx = locally_non_erased(p, args.local, (lo, hi))
    except (ValueError, IndexError) as e:
        raise ConfigError(str(e)) from None
    _emit(args, {"window": [lo, hi], "local": args.local, "indices": idx.tolist()})


def cmd_ust(args):
    g = _graph(args.spec)
    try:
        trees = ust_samples(g, args.method, args.samples, Stream(args.seed, 0))
    except RuntimeError as e:
        raise RuntimeGuard(str(e)) from None
    _emit(args, text="".join(json.dumps(t.as_dict(), sort_keys=True) + "\n" for t in trees))


def cmd_ab_trace(args):
    g = _graph(args.spec)
    p = sample_path(g, args.start, args.steps, Stream(args.seed, 0))
    t = ab_tree(p, 0)
    rows = [{"n": 0, "vertex": int(p.v[0]), "move": "start", "height": 0, "size": 1}]
    for n in range(1, p.length + 1):
        t, kind = ab_step(t, p, n)
        rows.append({"n": n, "vertex": int(p.v[n]), "move": kind,
                     "height": t.height() if kind != STAY else rows[-1]["height"],
                     "size": t.size})
    _emit(args, rows=rows)


def cmd_skeleton_trace(args):
    p = _read_path(args.path)
    if args.r is not None:
        _params(args.r, args.s, args.sprime)
    try:
        sw = sweep(p, args.s)
    except (ValueError, IndexError) as e:
        raise ConfigError(str(e)) from None
    ghosts = np.cumsum(sw.n_new)
    rows = [{"n": n, "class": CLASS_NAMES[int(sw.step_class[n])], "new_ghosts": int(sw.n_new[n]),
             "ghosts": int(ghosts[n]), "skeleton_size": int(sw.skeleton_size[n]),
             "connected": bool(sw.connected[n])} for n in range(sw.upto + 1)]
    _emit(args, rows=rows)


def cmd_decomposability(args):
    g = _graph(args.spec)
    _params(args.r, args.s, args.sprime)
    rng = Stream(args.seed, 0).generator()
    sig = []
    for _ in range(args.trials):
        if args.conditioned:
            p = sample_no_intermediate_loop_path(g, None, args.steps, args.sprime, args.r, rng)
        else:
            p = sample_path(g, None, args.steps, rng)
        sig.append(sigma_decomposable(p, args.r, args.s, args.sprime))
    sig = np.asarray(sig)
    out = {"spec": args.spec, "r": args.r, "s": args.s, "sprime": args.sprime,
           "steps": args.steps, "trials": args.trials, "conditioned": args.conditioned,
           "sigma_mean": float(sig.mean()), "sigma_median": float(np.median(sig)),
           "full_length_fraction": float(np.mean(sig >= args.steps)),
           "sigma": sig.tolist(), "seeds": Stream(args.seed, 0).record()}
    _emit(args, out)


def cmd_rgrg_simulate(args):
    if args.T is None or args.T <= 0:
        raise ConfigError("missing required field 'T'")
    st = Stream(args.seed, 0)
    if args.c is None:
        cloud = sample_poisson_cloud(args.T, st)
        state = RgrgState.from_cloud(cloud, args.T)
    else:
        cloud = sample_poisson_cloud(args.T + args.c, st)
        try:
            state = c_rgrg(cloud, args.c, args.T)
        except ValueError as e:
            raise ConfigError(str(e)) from None
    q = [float(x) for x in args.queries.split(",")] if args.queries else [0.0, state.t]
    try:
        D, h = state.distance_matrix(q)
    except ValueError as e:
        raise ConfigError(str(e)) from None
    out = {"T": args.T, "c": args.c, "state": state.to_json(), "queries": q,
           "distances": D.tolist(), "heights": h.tolist(), "seeds": st.record()}
    if args.c is not None:
        out["sigma_c"] = repr(sigma_c(cloud, args.c))
    _emit(args, out)


def _config_from(args, extra_keys=()):
    raw = load_config(args.config) if args.config else {}
    for k in ("graph", "r", "s", "sp", "c", "T", "trials", "samples") + tuple(extra_keys):
        v = getattr(args, k, None)
        if v is not None:
            raw[k] = v
    raw.setdefault("seed", args.seed)
    return raw


def cmd_gh_trace(args):
    raw = _config_from(args)
    res = gh_trace(ExperimentConfig.from_dict(raw, required=("graph", "r", "s", "sp", "c")))
    if args.format == "csv":
        _emit(args, rows=res["rows"])
    else:
        _emit(args, res)


def _kv(text):
    # "spec=torus:3,2,sp=2": a piece without "=" continues the previous value
    out, last = {}, None
    for item in (text or "").split(","):
        if "=" in item:
            k, _, v = item.partition("=")
            last = k.strip()
            out[last] = v.strip()
        elif item.strip() and last is not None:
            out[last] += "," + item.strip()
    return out


def cmd_estimate(args):
    kv = _kv(args.params)

    def need(name, cast=int):
        if name not in kv:
            raise ConfigError(f"missing required field '{name}'")
        return cast(kv[name])

    st = Stream(args.seed, 0)
    w = args.what
    if w in ("qbar", "H", "gammaN", "cN", "mixing"):
        g = _graph(kv.get("spec"))
    if w == "qbar":
        try:
            out = est.qbar(g, need("sp"), kv.get("mode", "exact"), args.samples, st).as_dict()
        except ValueError as e:
            raise RuntimeGuard(str(e)) from None
    elif w == "H":
        v = est.h_graph(g, need("m"), int(kv["n"]) if "n" in kv else None)
        out = {"value": v, "se": 0.0, "samples": 0, "seeds": {}}
    elif w == "gammaN":
        r, s = need("r"), need("s")
        _params(r, s)
        out = est.gamma_N(g, r, s, args.samples, st).as_dict()
    elif w == "cN":
        r, s = need("r"), need("s")
        _params(r, s)
        out = est.c_N(g, r, s, args.samples, st, kv.get("segment", "B")).as_dict()
    elif w in ("gammad", "alphad"):
        f = est.estimate_gamma_d if w == "gammad" else est.estimate_alpha_d
        try:
            out = f(need("d"), need("M"), args.samples, st).as_dict()
        except ValueError as e:
            raise ConfigError(str(e)) from None
    elif w == "mixing":
        out = {"value": mixing_time(g, kv.get("variant", "uniform"), float(kv.get("eps", 0.25))),
               "se": 0.0, "samples": 0, "seeds": {}}
    else:
        raise ConfigError(f"unknown estimate {w!r}")
    out["what"] = w
    out["params"] = kv
    _emit(args, out)


def cmd_rayleigh_test(args):
    raw = {"graph": args.spec, "seed": args.seed, "samples": args.epochs}
    if args.spacing is not None:
        raw["spacing"] = args.spacing
    _emit(args, rayleigh_test(raw))


def _law(text, name):
    if not text:
        raise ConfigError(f"missing required field '{name}'")
    try:
        v = np.array([float(x) for x in text.split(",")])
    except ValueError:
        raise ConfigError(f"field '{name}' must be comma separated numbers") from None
    if np.any(v < 0) or not math.isclose(v.sum(), 1.0, abs_tol=1e-9):
        raise ConfigError(f"field '{name}' must be a probability vector")
    return v


def cmd_couple_check(args):
    mu, nu = _law(args.mu, "mu"), _law(args.nu, "nu")
    if mu.size != nu.size:
        raise ConfigError("fields 'mu' and 'nu' must have the same length")
    J, tv = est.optimal_tv_coupling(mu, nu)
    out = {"tv": tv, "mismatch": float(1.0 - np.trace(J)),
           "marginal_error": float(max(np.abs(J.sum(1) - mu).max(), np.abs(J.sum(0) - nu).max()))}
    if mu.size >= 2 and (mu.size & (mu.size - 1)) == 0:
        out.update(est.couple_binary(mu, nu, args.samples, Stream(args.seed, 0), args.method))
    _emit(args, out)


def cmd_run_experiment(args):
    res = run_experiment(args.config, args.out_dir or args.out)
    sys.stdout.write(_dump({"out": res["out"], "files": res["files"], "sha256": res["sha256"]}))


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    def flags(p, default):
        # the copy on each subcommand uses SUPPRESS so it cannot reset a
        # value given before the subcommand name
        p.add_argument("--seed", type=int, default=default(0), help="u64 master seed")
        p.add_argument("--threads", type=int, default=default(None), help="numba thread count")
        p.add_argument("--out", default=default(None), help="output file (stdout when absent)")
        p.add_argument("--format", choices=("json", "csv"), default=default("json"))
        return p

    common = flags(argparse.ArgumentParser(add_help=False), lambda v: argparse.SUPPRESS)
    ap = flags(argparse.ArgumentParser(prog="abrgrg", description=(
        "Aldous-Broder chains and root growth with re-grafting.")), lambda v: v)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.set_defaults(func=fn)
        return p

    p = add("graph-info", cmd_graph_info, "vertex count, degree and mixing time")
    p.add_argument("--spec")
    p = add("simulate-walk", cmd_simulate_walk, "lazy random walk, one vertex per line")
    p.add_argument("--spec")
    p.add_argument("--steps", type=int)
    p.add_argument("--start", type=int)
    p = add("loop-erase", cmd_loop_erase, "non-erased indices of a path window")
    p.add_argument("--path", required=True)
    p.add_argument("--window", required=True)
    p.add_argument("--local", type=int)
    p = add("ust", cmd_ust, "uniform spanning tree samples as JSON lines")
    p.add_argument("--spec")
    p.add_argument("--method", choices=("ab", "wilson", "history"), default="wilson")
    p.add_argument("--samples", type=int, default=1)
    p = add("ab-trace", cmd_ab_trace, "per-step AB-chain moves with tree height and size")
    p.add_argument("--spec")
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--start", type=int)
    p = add("skeleton-trace", cmd_skeleton_trace, "per-step ghost and skeleton summary")
    p.add_argument("--path", required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--r", type=int)
    p.add_argument("--sprime", type=int)
    p = add("decomposability", cmd_decomposability, "empirical decomposability times")
    p.add_argument("--spec")
    p.add_argument("--r", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--sprime", type=int)
    p.add_argument("--steps", type=int, default=1000)
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--conditioned", action="store_true",
                   help="condition walks to avoid loops of length in [s′, r]")
    p = add("rgrg-simulate", cmd_rgrg_simulate, "RGRG (or c-RGRG) state and query distances")
    p.add_argument("--T", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--queries")
    p = add("gh-trace", cmd_gh_trace, "GH bounds between the rescaled AB chain and the c-RGRG")
    p.add_argument("--config")
    p.add_argument("--graph", "--spec", dest="graph")
    p.add_argument("--r", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--sprime", dest="sp", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--samples", type=int)
    p = add("estimate", cmd_estimate, "Monte Carlo and exact estimators")
    p.add_argument("--what", required=True,
                   choices=("qbar", "H", "gammaN", "cN", "gammad", "alphad", "mixing"))
    p.add_argument("--params", default="", help="comma separated key=value pairs")
    p.add_argument("--samples", type=int, default=1000)
    p = add("rayleigh-test", cmd_rayleigh_test, "KS test of the rescaled root displacement")
    p.add_argument("--spec", default="complete:400")
    p.add_argument("--epochs", type=int, default=10_000)
    p.add_argument("--spacing", type=int)
    p = add("couple-check", cmd_couple_check, "optimal TV coupling of two finite laws")
    p.add_argument("--mu")
    p.add_argument("--nu")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--method", choices=("optimal", "sequential"), default="optimal")
    p = add("run-experiment", cmd_run_experiment, "run a JSON manifest into a directory")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    if args.threads:
        import numba
        numba.set_num_threads(min(args.threads, numba.config.NUMBA_NUM_THREADS))
    try:
        args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except RuntimeGuard as e:
        print(f"runtime guard: {e}", file=sys.stderr)
        return 3
    except (RuntimeError, MemoryError) as e:
        print(f"runtime guard: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
