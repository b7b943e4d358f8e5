import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsmreg import NormSpec, build, linear_scan
from nsmreg.exceptions import DimensionError, InsufficientDataError, NsmError
from nsmreg.fastquery import LEAF_SIZE, MODES, BiasedIndex, SpatialTree

from conftest import NORMS


def test_single_sample_tree():
    idx = build((np.array([[0.2, 0.3]]), np.array([1.0])), "ceiling", 2.0)
    assert len(idx.tree) == 1 and idx.tree.leaves() == [(0,)]
    r = idx.query([0.9, 0.9])
    assert r.index == 0 and r.visited == 1


def test_leaves_partition_samples(example_data):
    tree = SpatialTree(example_data.X, example_data.y)
    leaves = tree.leaves()
    flat = sorted(itertools.chain.from_iterable(leaves))
    assert flat == list(range(30))
    assert all(1 <= len(leaf) <= LEAF_SIZE for leaf in leaves)


def test_build_is_deterministic(example_data):
    a = SpatialTree(example_data.X, example_data.y)
    b = SpatialTree(example_data.X, example_data.y)
    assert a.leaves() == b.leaves() and a.lo == b.lo and a.hi == b.hi


def test_node_label_extrema():
    rng = np.random.default_rng(0)
    X, y = rng.uniform(size=(100, 2)), rng.normal(size=100)
    t = SpatialTree(X, y)
    for node in range(len(t)):
        stack, members = [node], []
        while stack:
            k = stack.pop()
            if t.is_leaf(k):
                members += t.members[k]
            else:
                stack += t.children[k]
        assert t.ymin[node] == y[members].min() and t.ymax[node] == y[members].max()
        assert t.min_index[node] == min(members)
        assert np.all(X[members] >= t.lo[node]) and np.all(X[members] <= t.hi[node])


def test_errors():
    with pytest.raises(InsufficientDataError):
        SpatialTree(np.zeros((0, 2)), np.zeros(0))
    idx = build((np.zeros((3, 2)) + [[0, 0], [1, 0], [0, 1]], np.zeros(3)))
    with pytest.raises(DimensionError):
        idx.query([0.0, 0.0, 0.0])
    with pytest.raises(NsmError):
        BiasedIndex(idx.tree, "median", 1.0)


def test_sample_point_ceiling(example_data):
    idx = build(example_data, "ceiling", 2.0)
    for n, (x, y) in enumerate(zip(example_data.X, example_data.y)):
        r = idx.query(x)
        assert r.index == n and r.value == y


def _agree(X, y, Q, mode, L, spec):
    idx = build((X, y), mode, L, spec)
    got_i, got_v = idx.query_many(Q)
    ref_i, ref_v = linear_scan(X, y, Q, mode, L, spec)
    np.testing.assert_array_equal(got_i, ref_i)
    np.testing.assert_array_equal(got_v, ref_v)


@pytest.mark.parametrize("spec", NORMS, ids=str)
@pytest.mark.parametrize("mode", MODES)
@pytest.mark.parametrize("n, dim", [(2, 1), (50, 1), (300, 2), (1000, 3), (400, 6)])
def test_matches_linear_scan(spec, mode, n, dim):
    rng = np.random.default_rng(n * 10 + dim)
    X, y = rng.uniform(size=(n, dim)), rng.normal(size=n)
    Q = rng.uniform(-0.2, 1.2, size=(150, dim))
    _agree(X, y, Q, mode, 3.0, spec)


@pytest.mark.slow
@pytest.mark.parametrize("mode", MODES)
def test_large_dataset_matches_scan(mode):
    rng = np.random.default_rng(11)
    X, y = rng.uniform(size=(10_000, 2)), rng.normal(size=10_000)
    _agree(X, y, rng.uniform(size=(1000, 2)), mode, 5.0, NormSpec(2))


@pytest.mark.parametrize("spec", NORMS, ids=str)
@pytest.mark.parametrize("mode", MODES)
def test_ties_on_lattice(spec, mode):
    # integer lattice, integer labels, queries on half-integers: exact ties everywhere
    g = np.arange(6.0)
    X = np.array(list(itertools.product(g, g)))
    y = (X.sum(axis=1) % 3).astype(float)
    Q = np.array(list(itertools.product(np.arange(-0.5, 6.0, 0.5), repeat=2)))
    _agree(X, y, Q, mode, 1.0, spec)
    _agree(X, np.zeros(len(X)), Q, mode, 1.0, spec)


def test_symmetric_tie_lowest_index():
    X = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])[::-1]
    for mode in MODES:
        r = build((X, np.ones(4)), mode, 2.0).query([0.0, 0.0])
        assert r.index == 0


@pytest.mark.parametrize("mode", MODES)
@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 120), dim=st.integers(1, 4),
       p=st.sampled_from(["1", "2", "inf"]), L=st.floats(0.01, 100))
def test_random_equivalence_and_pruning(mode, seed, n, dim, p, L):
    rng = np.random.default_rng(seed)
    # coarse coordinates make ties common
    X = rng.integers(0, 5, size=(n, dim)).astype(float)
    y = rng.integers(-2, 3, size=n).astype(float)
    spec = NormSpec(p)
    idx = build((X, y), mode, L, spec)
    Q = rng.integers(-1, 6, size=(20, dim)) / 1.0
    ref_i, ref_v = linear_scan(X, y, Q, mode, L, spec)
    for q, ri, rv in zip(Q, ref_i, ref_v):
        r = idx.query(q)
        assert (r.index, r.value) == (ri, rv)
        # nothing left unexplored could have been better
        if mode == "floor":
            assert r.value >= r.pruned_bound
        else:
            assert r.value <= r.pruned_bound


def test_with_lipschitz_reuses_tree(example_data):
    a = build(example_data, "ceiling", 2.0)
    b = a.with_lipschitz(30.0)
    assert b.tree is a.tree and b.L == 30.0
    Q = np.random.default_rng(0).uniform(0, 10, size=(50, 2))
    np.testing.assert_array_equal(
        b.query_many(Q)[0], linear_scan(example_data.X, example_data.y, Q, "ceiling", 30.0)[0])


def test_visited_fraction_shrinks_with_n():
    rng = np.random.default_rng(4)
    fractions = []
    for n in (100, 1000, 10_000):
        X, y = rng.uniform(size=(n, 2)), np.sin(5 * rng.uniform(size=n))
        idx = build((X, y), "ceiling", 10.0)
        Q = rng.uniform(size=(100, 2))
        fractions.append(np.mean([idx.query(q).visited for q in Q]) / n)
    assert fractions[0] > fractions[1] > fractions[2]
