import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from abrgrg.abchain import tree_from_edges, ust_wilson
from abrgrg.graph import torus
from abrgrg.metric import (FiniteRootedMetricSpace, branch_point_check, covering_radius_metric,
                           cycle_metric, distortion, four_point_check, gh_exact_small,
                           gh_lower_bound, gh_upper_from_correspondence, hausdorff_subsets,
                           interval_space, nearest_correspondence, tree_to_metric,
                           validate_correspondence)
from abrgrg.walk import Stream


def random_tree_metric(rng, n):
    """Weighted random tree on n points (Pruefer-free: attach k to a random
    earlier point) with a random root."""
    D = np.zeros((n, n))
    for k in range(1, n):
        p = int(rng.integers(k))
        w = float(rng.uniform(0.1, 2.0))
        for j in range(k):
            D[k, j] = D[j, k] = D[p, j] + w
    return FiniteRootedMetricSpace(D, int(rng.integers(n)))


def test_validate_rejects():
    with pytest.raises(ValueError):
        FiniteRootedMetricSpace(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        FiniteRootedMetricSpace(np.zeros((2, 2)), root=2)
    bad = FiniteRootedMetricSpace(np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], float))
    with pytest.raises(ValueError, match="triangle"):
        bad.validate()
    with pytest.raises(ValueError, match="symmetric"):
        FiniteRootedMetricSpace(np.array([[0, 1], [2, 0]], float)).validate()


def test_four_point():
    assert four_point_check(interval_space([0, 1, 3, 7]))
    assert not four_point_check(cycle_metric(4))
    star = tree_to_metric(tree_from_edges(4, [(0, 1), (0, 2), (0, 3)], 0))
    assert four_point_check(star)
    assert branch_point_check(star)
    # leaves only: the centre is missing
    assert not branch_point_check(star.subspace([1, 2, 3], root=0))


def test_gh_hand_values():
    assert gh_exact_small(interval_space([0, 1]), interval_space([0, 2])) == 0.5
    assert gh_exact_small(interval_space([0]), interval_space([0, 0.5, 1])) == 0.5
    X = interval_space([0, 1, 2])
    assert gh_exact_small(X, X) == 0.0
    val, R = gh_exact_small(X, interval_space([0, 2]), certificate=True)
    assert distortion(R, X, interval_space([0, 2])) == pytest.approx(2 * val)


def test_gh_guard():
    with pytest.raises(ValueError, match="guarded"):
        gh_exact_small(interval_space(range(6)), interval_space([0]))


@given(st.integers(0, 2**32), st.integers(1, 4), st.integers(1, 4))
def test_gh_sandwich(seed, n, m):
    rng = np.random.default_rng(seed)
    X, Y = random_tree_metric(rng, n), random_tree_metric(rng, m)
    val = gh_exact_small(X, Y)
    assert gh_lower_bound(X, Y) <= val + 1e-12
    # any correspondence is an upper bound; pair everything with the roots
    R = {(X.root, y) for y in range(Y.n)} | {(x, Y.root) for x in range(X.n)}
    assert val <= gh_upper_from_correspondence(R, X, Y) + 1e-12
    assert abs(val - gh_exact_small(Y, X)) < 1e-12


@given(st.integers(0, 2**32))
def test_gh_triangle(seed):
    rng = np.random.default_rng(seed)
    X, Y, Z = (random_tree_metric(rng, int(rng.integers(1, 5))) for _ in range(3))
    assert gh_exact_small(X, Z) <= gh_exact_small(X, Y) + gh_exact_small(Y, Z) + 1e-12


def test_correspondence_checks():
    X, Y = interval_space([0, 1]), interval_space([0, 1])
    with pytest.raises(ValueError, match="roots"):
        validate_correspondence({(1, 1)}, X, Y)
    with pytest.raises(ValueError, match="project"):
        validate_correspondence({(0, 0)}, X, Y)


def test_nearest_correspondence_and_covering_radius():
    X = interval_space([0, 0.25, 1, 1.1])
    R = nearest_correspondence(X, [0, 2])
    assert (3, 1) in R and (1, 0) in R
    assert covering_radius_metric(X, [0, 2]) == 0.25
    with pytest.raises(ValueError):
        nearest_correspondence(X, [1, 2])


def test_hausdorff_subsets():
    Z = interval_space([0, 1, 2, 5])
    assert hausdorff_subsets(Z, [0, 1], [2, 3]) == 4
    assert hausdorff_subsets(Z, [0], [0]) == 0
    with pytest.raises(ValueError):
        hausdorff_subsets(Z, [], [1])


def test_tree_to_metric_on_ust():
    g = torus(3, 2)
    t = ust_wilson(g, Stream(4), root=7)
    X = tree_to_metric(t, 0.5)
    X.validate()
    assert X.labels[X.root] == 7
    assert four_point_check(X.subspace(range(6), root=0))
    # adjacent tree vertices sit at distance a
    for a, b in t.edges():
        assert X.d[X.labels.index(a), X.labels.index(b)] == 0.5
    with pytest.raises(ValueError):
        tree_to_metric(t, 0.0)
