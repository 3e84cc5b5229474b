from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from abrgrg.abchain import (AB_MOVE, ROOT_GROWTH, STAY, RootedTreeGraph, ab_step, ab_tree,
                            ab_tree_from_history, ab_tree_literal, all_rooted_spanning_trees,
                            enumerate_spanning_trees, is_tree, kirchhoff_count,
                            rooted_tree_probability, tree_from_edges, ust_aldous_broder,
                            ust_samples, ust_wilson, validate_tree)
from abrgrg.graph import complete, cycle, torus
from abrgrg.walk import Path, Stream, sample_path


def test_ab_tree_hand_example():
    # 0 1 2 1 3: last visits 0->0, 1->3, 2->2; root 3
    p = Path(None, [0, 1, 2, 1, 3])
    t = ab_tree(p, 4)
    assert t.root == 3
    assert t.parent[0] == 1 and t.parent[1] == 3 and t.parent[2] == 1
    assert t.height() == 2


@given(st.integers(0, 2**32), st.integers(0, 120))
def test_ab_tree_matches_literal(seed, n):
    g = torus(3, 2)
    p = sample_path(g, None, 120, Stream(seed))
    t = ab_tree(p, n)
    assert t == ab_tree_literal(p, n)
    validate_tree(t, g)


@given(st.integers(0, 2**32))
def test_chain_steps_reproduce_trees(seed):
    g = torus(3, 2)
    p = sample_path(g, None, 80, Stream(seed))
    t = ab_tree(p, 0)
    for n in range(1, 81):
        t, kind = ab_step(t, p, n)
        assert t == ab_tree(p, n)
        if p.v[n] == p.v[n - 1]:
            assert kind == STAY
        elif p.v[n] in p.v[:n]:
            assert kind == AB_MOVE
        else:
            assert kind == ROOT_GROWTH


def test_ab_step_needs_matching_root():
    p = Path(None, [0, 1, 2])
    with pytest.raises(ValueError):
        ab_step(ab_tree(p, 0), p, 2)


def test_validate_tree_failures():
    g = cycle(4)
    t = RootedTreeGraph(np.array([-1, 0, 1, 2]), 0)
    validate_tree(t, g)
    assert not is_tree(RootedTreeGraph(np.array([-1, 2, 1, 2]), 0))          # cycle
    assert not is_tree(RootedTreeGraph(np.array([-1, -1, 1, 2]), 0))         # two roots
    assert not is_tree(RootedTreeGraph(np.array([-1, 0, 0, 2]), 0), g)       # 2-0 not an edge


def test_spanning_tree_counts():
    assert kirchhoff_count(complete(4)) == 16
    assert len(enumerate_spanning_trees(complete(4))) == 16   # Cayley 4^2
    assert len(enumerate_spanning_trees(cycle(6))) == 6
    assert kirchhoff_count(torus(3, 2)) == 11664
    assert kirchhoff_count(torus(4, 2)) == 42467328
    with pytest.raises(ValueError):
        enumerate_spanning_trees(torus(3, 2))


def test_rooted_uniform_is_stationary_complete4():
    g = complete(4)
    trees = all_rooted_spanning_trees(g)
    idx = {t.rooted_key(): k for k, t in enumerate(trees)}
    n = len(trees)
    P = np.zeros((n, n))
    for a, t in enumerate(trees):
        P[a, a] += 0.5
        for x in g.neighbors_of(t.root):
            u, _ = ab_step(t, Path(None, [t.root, int(x)], validate=False), 1)
            P[a, idx[u.rooted_key()]] += 0.5 / g.degree
    pi = np.full(n, 1.0 / n)
    assert np.max(np.abs(pi @ P - pi)) < 1e-15
    assert rooted_tree_probability(g, trees[0]) == pytest.approx(1.0 / 64, abs=1e-15)


def _chi2_uniform(trees, k):
    c = Counter(t.key() for t in trees)
    obs = np.array([c.get(T, 0) for T in enumerate_spanning_trees(complete(4))])
    assert obs.sum() == k
    return stats.chisquare(obs).pvalue


@pytest.mark.parametrize("method", ["ab", "wilson", "history"])
def test_samplers_uniform_on_complete4(method):
    k = 8000
    trees = ust_samples(complete(4), method, k, Stream(5, hash(method) % 97))
    for t in trees[:50]:
        validate_tree(t, complete(4))
        assert t.size == 4
    assert _chi2_uniform(trees, k) > 1e-3


def test_sampler_roots():
    g = torus(4, 2)
    assert ust_wilson(g, Stream(1), root=3).root == 3
    assert ust_aldous_broder(g, Stream(1), start=5).root == 5
    with pytest.raises(RuntimeError):
        ust_aldous_broder(g, Stream(1), cap=3)
    with pytest.raises(ValueError):
        ust_samples(g, "kruskal", 1, Stream(0))


def test_history_needs_cover():
    with pytest.raises(ValueError):
        ab_tree_from_history(Path(complete(4), [0, 1, 0]))


def test_tree_from_edges_roundtrip():
    t = tree_from_edges(4, [(0, 1), (1, 2), (1, 3)], 2)
    assert t.root == 2 and t.parent[1] == 2 and t.parent[0] == 1
    assert t.key() == frozenset({(0, 1), (1, 2), (1, 3)})
