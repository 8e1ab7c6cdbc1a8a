import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fermitree.trees import (NoMomentumSolution, Tree, branch_excess, caterpillar, degree_factorial_sum,
                             enumerate_trees, factor_a, momentum_assignment, path_tree, prufer_decode,
                             root_tree, s_matrix, star_tree, trees_with_branches)


@pytest.mark.parametrize("m, count", [(1, 1), (2, 1), (3, 3), (4, 16), (5, 125), (6, 1296)])
def test_cayley_counts(m, count):
    trees = enumerate_trees(m)
    assert len(trees) == count
    assert len(set(trees)) == count


def test_prufer_roundtrip_is_a_tree():
    t = prufer_decode([3, 3, 3], 5)
    assert t.degrees == [1, 1, 4, 1, 1]


def test_rooting_path_and_star():
    rt = root_tree(path_tree(3), 3)
    assert rt.parent[1] == 2 and rt.parent[2] == 3
    star = star_tree(4, center=2)
    rt = root_tree(star, 1)
    assert rt.degree(2) == star.degree(2) == 3
    assert all(rt.parent[v] == 2 for v in (3, 4))


def test_s_matrix_examples():
    tree = path_tree(3)
    assert np.array_equal(s_matrix(tree, [1, 1]).matrix, np.ones((3, 3)))
    mat = s_matrix(tree, [0.3, 0.7]).matrix
    assert mat[0, 2] == pytest.approx(0.3)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_s_matrix_psd_and_factor(seed):
    rng = np.random.default_rng(seed)
    trees = enumerate_trees(5)
    tree = trees[rng.integers(len(trees))]
    st_ = s_matrix(tree, rng.random(4))
    assert np.linalg.eigvalsh(st_.matrix).min() > -1e-12
    a = factor_a(st_)
    assert np.allclose(a.T @ a, st_.matrix, atol=1e-10)
    assert np.allclose(np.linalg.norm(a, axis=0), 1, atol=1e-10)


def test_factor_a_examples():
    assert np.allclose(factor_a(np.eye(3)), np.eye(3))
    assert np.allclose(factor_a(np.ones((4, 4))), np.full((4, 4), 0.5))


def test_branch_excess():
    assert branch_excess(path_tree(6)) == 0
    assert branch_excess(star_tree(4)) == 1
    for m in range(1, 5):
        assert branch_excess(caterpillar(m)) == m


def test_caterpillar_shape():
    assert set(caterpillar(1).edges) == {(1, 2), (2, 3), (2, 4)}
    assert caterpillar(2).degrees == [1, 3, 3, 1, 1, 1]
    for m in range(1, 6):
        assert caterpillar(m).m == 2 * m + 2


def test_zero_branch_class_on_four_vertices():
    trees = trees_with_branches(4, 0)
    assert len(trees) == 12
    assert all(sorted(t.degrees) == [1, 1, 2, 2] for t in trees)


@pytest.mark.parametrize("m", range(1, 8))
def test_degree_factorial_sum(m):
    total = degree_factorial_sum(m)
    assert isinstance(total, int)
    assert total <= math.factorial(m) * 8 ** m


def test_momentum_assignment_matches_scan():
    L = 8
    rng = np.random.default_rng(3)
    rt = root_tree(path_tree(3), 3)
    legs = {1: [1, 2], 2: [3], 3: [0, 0]}
    legs[3] = [int(rng.integers(L)), 0]
    legs[3][1] = (-sum(sum(v) for v in legs.values())) % L
    lines = momentum_assignment(rt, legs, lambda a, b: (a + b) % L, 0)
    # brute-force the two line momenta satisfying conservation at vertices 1 and 2
    sols = [(a, b) for a in range(L) for b in range(L)
            if (sum(legs[1]) - a) % L == 0 and (sum(legs[2]) + a - b) % L == 0]
    assert len(sols) == 1
    assert (lines[(1, 2)] % L, lines[(2, 3)] % L) == sols[0]


def test_momentum_assignment_rejects_nonzero_total():
    rt = root_tree(path_tree(2), 2)
    with pytest.raises(NoMomentumSolution):
        momentum_assignment(rt, {1: [1], 2: [1]}, lambda a, b: (a + b) % 8, 0)


def test_tree_json_roundtrip():
    t = caterpillar(2)
    assert Tree.from_json(t.to_json()) == t
