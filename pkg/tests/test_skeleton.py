import numpy as np
import pytest
from hypothesis import given, strategies as st

from abrgrg.abchain import ab_tree, is_tree
from abrgrg.graph import torus
from abrgrg.metric import tree_to_metric
from abrgrg.skeleton import (SegmentScheme, check_parameters, check_properties,
                             covering_radius_bfs, cut_indicators, ghost_block, ghost_indices,
                             ghost_sets_literal, is_simple_path_tree, sigma_decomposable,
                             sigma_decomposable_literal, skeleton_ab_gh_bound_check,
                             skeleton_step_classify, skeleton_tree, sweep, tau_times,
                             verify_ne_ghost_identity)
from abrgrg.walk import Path, Stream, has_loop_in_range, sample_no_intermediate_loop_path, \
    sample_path


def test_parameter_ordering_message():
    check_parameters(55, 18, 3)
    with pytest.raises(ValueError, match="r ≥ 3s\\+1 ≥ 18s′\\+1"):
        check_parameters(50, 18, 3)
    with pytest.raises(ValueError, match="18s′"):
        check_parameters(100, 17, 3)


def test_segments():
    sch = SegmentScheme(19, 6)
    assert (sch.A(1).lo, sch.A(1).hi) == (6, 18)
    assert (sch.B(2).lo, sch.B(2).hi) == (31, 31)
    with pytest.raises(ValueError):
        SegmentScheme(18, 6)


def test_ghost_hand_example():
    # 0 1 0 with s = 3: the step back to 0 turns indices 0 and 1 into ghosts
    p = Path(None, [0, 1, 0, 2])
    sw = sweep(p, 3)
    assert sw.ghosts(2).tolist() == [0, 1]
    assert ghost_block(p, 3, 2).lo == 0
    assert skeleton_step_classify(p, 3, 2) == "ghost_loop_erasure"
    assert skeleton_step_classify(p, 3, 3) == "root_growth"
    assert 1 in ghost_indices(p, 3, 3)
    with pytest.raises(ValueError):
        ghost_block(p, 3, 3)


@given(st.lists(st.integers(0, 4), min_size=1, max_size=25), st.integers(2, 6))
def test_sweep_matches_literal_ghosts(v, s):
    p = Path(None, v)
    n = len(v) - 1
    G = ghost_sets_literal(v, s, n)
    sw = sweep(p, s)
    for t in range(n + 1):
        assert set(sw.ghosts(t).tolist()) == G[t]


@given(st.integers(0, 2**32), st.sampled_from([3, 5, 8]))
def test_skeleton_connected_and_inside_ab(seed, s):
    g = torus(4, 2)
    p = sample_path(g, None, 150, Stream(seed))
    sw = sweep(p, s)
    assert sw.connected.all()
    for n in (10, 75, 150):
        sk = skeleton_tree(p, s, n)
        assert is_tree(sk, g)
        ab = ab_tree(p, n)
        assert set(sk.vertices.tolist()) <= set(ab.vertices.tolist())
        assert sk.root == ab.root


@given(st.integers(0, 2**32))
def test_ghost_blocks_are_contiguous(seed):
    g = torus(6, 3)
    p = sample_no_intermediate_loop_path(g, None, 400, 3, 60, Stream(seed))
    sw = sweep(p, 20)
    for n in np.flatnonzero(sw.n_new):
        blk = ghost_block(p, 20, int(n), sw)
        new = set(sw.new_ghosts(int(n)).tolist())
        old = set(sw.ghosts(int(n) - 1).tolist())
        assert new == set(range(blk.lo, blk.hi + 1)) - old
        assert sw.new_lo[n] == min(new) and sw.new_hi[n] == max(new)


def test_self_avoiding_path_has_no_ghosts():
    p = Path(None, list(range(40)))
    sw = sweep(p, 5)
    assert sw.n_new.sum() == 0
    assert is_simple_path_tree(skeleton_tree(p, 5, 39))
    assert tree_to_metric(skeleton_tree(p, 5, 39)).diameter == 39


@given(st.integers(0, 2**32))
def test_sigma_matches_literal(seed):
    g = torus(5, 3)
    p = sample_no_intermediate_loop_path(g, None, 90, 1, 19, Stream(seed))
    assert sigma_decomposable(p, 19, 6, 1) == sigma_decomposable_literal(p, 19, 6, 1)


def test_sigma_tmix_guard():
    p = Path(None, list(range(60)))
    with pytest.raises(ValueError, match="t_mix"):
        sigma_decomposable(p, 19, 6, 1, t_mix=3)


def test_self_avoiding_path_is_decomposable():
    p = Path(None, list(range(200)))
    assert sigma_decomposable(p, 55, 18, 3) == 199
    assert all(check_properties(p, 55, 18, 199).values())
    Z, N = cut_indicators(p, SegmentScheme(55, 18), 3)
    assert N == 0 and Z.sum() == 0
    assert tau_times(Z, 3) == [0, 4]


def test_cut_indicator_and_taus():
    # B_3 = [50, 50] revisits the only locally non-erased index 12 of A_1
    r, s = 19, 6
    v = list(range(3 * r))
    v[2 * r + 2 * s] = v[12]
    p = Path(None, v)
    Z, N = cut_indicators(p, SegmentScheme(r, s), 3)
    assert N == 1 and Z[1, 3] == 1
    assert tau_times(Z, 3) == [0, 3, 4]


@given(st.integers(0, 2**32))
def test_ne_ghost_identity_and_radius(seed):
    g = torus(6, 5)
    r, s, sp = 150, 30, 3
    p = sample_no_intermediate_loop_path(g, None, 450, sp, r, Stream(seed))
    rep = verify_ne_ghost_identity(p, r, s, sp, 450)
    if rep["applicable"]:
        assert rep["ok"], rep
    b = skeleton_ab_gh_bound_check(p, r, s, sp, 450)
    if b["decomposable"]:
        assert b["max_radius"] <= r


def test_covering_radius_bfs_agrees_with_sweep():
    g = torus(4, 2)
    p = sample_path(g, None, 120, Stream(9))
    sw = sweep(p, 4, radius=True)
    for n in (30, 120):
        sk = skeleton_tree(p, 4, n)
        assert covering_radius_bfs(ab_tree(p, n), sk.vertices) == sweep(p, 4, n, radius=True).radius[n]
    assert sw.radius.min() >= 0
