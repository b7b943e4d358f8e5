import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsmreg import Dataset, DomainBox, NnModel, NormSpec, NsmModel, lipschitz_lower_bound, make_grid
from nsmreg.exceptions import LipschitzError, NsmError
from nsmreg.geometry import norm

from conftest import NORMS, random_dataset


def _scan_ceiling(d, L, x, spec):
    return min(yn + L * norm(x - xn, spec) for xn, yn in zip(d.X, d.y))


def _scan_floor(d, L, x, spec):
    return max(yn - L * norm(x - xn, spec) for xn, yn in zip(d.X, d.y))


def _scan_nearest(d, x, spec):
    dists = [norm(x - xn, spec) for xn in d.X]
    return dists.index(min(dists))


class TestEnvelopes:
    def test_two_point_values(self, two_point):
        m = NsmModel(two_point, 2.0)
        assert m.ceiling([0.5]) == 1.0 == _scan_ceiling(two_point, 2.0, np.array([0.5]), m.norm)
        assert m.floor([0.5]) == 0.0 == _scan_floor(two_point, 2.0, np.array([0.5]), m.norm)
        assert m.predict([0.5]) == 0.5

    def test_interpolation_at_samples(self, example_data):
        for L in (1.5, 2.0, 16.0):
            m = NsmModel(example_data, L)
            np.testing.assert_array_equal(m.predict(example_data.X), example_data.y)
            np.testing.assert_array_equal(m.ceiling(example_data.X), example_data.y)
            np.testing.assert_array_equal(m.floor(example_data.X), example_data.y)

    def test_single_sample(self):
        d = Dataset(np.array([[0.3, 0.4]]), np.array([2.0]), DomainBox((0, 0), (1, 1)))
        m = NsmModel(d, 3.0)
        x = np.array([0.9, 0.1])
        r = norm(x - d.X[0])
        assert m.ceiling(x) == 2.0 + 3.0 * r
        assert m.floor(x) == 2.0 - 3.0 * r
        assert m.predict(x) == 2.0
        np.testing.assert_array_equal(m.predict(make_grid(d.box, 9).points), 2.0)

    @pytest.mark.parametrize("spec", NORMS, ids=str)
    def test_batch_matches_scan(self, spec):
        rng = np.random.default_rng(5)
        d = random_dataset(rng, 2, 15)
        L = 1.1 * lipschitz_lower_bound(d, spec)
        m = NsmModel(d, L, spec)
        P = rng.uniform(size=(40, 2))
        np.testing.assert_allclose(m.ceiling(P), [_scan_ceiling(d, L, p, spec) for p in P], rtol=0, atol=1e-12)
        np.testing.assert_allclose(m.floor(P), [_scan_floor(d, L, p, spec) for p in P], rtol=0, atol=1e-12)

    def test_rejects_small_lipschitz(self, two_point):
        with pytest.raises(LipschitzError, match="lower bound"):
            NsmModel(two_point, 0.5)
        with pytest.raises(LipschitzError):
            NsmModel(two_point, 0.0)
        NsmModel(two_point, 1.0)  # equal to the bound is fine

    def test_outside_box_rejected(self, two_point):
        with pytest.raises(NsmError):
            NsmModel(two_point, 2.0).predict([1.5])


@pytest.mark.parametrize("spec", NORMS, ids=str)
@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 3), n=st.integers(1, 25),
       factor=st.floats(1.0, 50.0))
def test_sandwich_and_lipschitz_continuity(spec, seed, dim, n, factor):
    rng = np.random.default_rng(seed)
    d = random_dataset(rng, dim, n)
    lb = lipschitz_lower_bound(d, spec) if len(d) > 1 else 1.0
    L = factor * max(lb, 1e-3)
    m = NsmModel(d, L, spec)
    A, B = rng.uniform(size=(50, dim)), rng.uniform(size=(50, dim))
    ev = m.evaluate(A)
    assert np.all(ev.floor <= ev.nsm) and np.all(ev.nsm <= ev.ceiling)
    assert np.all(np.abs(ev.nsm) <= np.max(np.abs(d.y)))
    gap = np.abs(m.predict(A) - m.predict(B))
    dist = np.array([norm(a - b, spec) for a, b in zip(A, B)])
    assert np.all(gap <= L * dist + 1e-12 * (1 + L))


class TestNearestNeighbor:
    def test_strictly_closer(self, two_point):
        assert NnModel(two_point).query([0.4]) == 0

    def test_tie_goes_to_lower_index(self, two_point):
        assert NnModel(two_point).query([0.5]) == 0

    @pytest.mark.parametrize("spec", NORMS, ids=str)
    def test_grid_matches_scan(self, example_data, spec):
        nn = NnModel(example_data, spec)
        pts = make_grid(example_data.box, 25).points
        np.testing.assert_array_equal(nn.query(pts), [_scan_nearest(example_data, p, spec) for p in pts])

    def test_knn_examples(self):
        d = Dataset(np.array([[0.0], [1.0], [2.0]]), np.array([0.0, 1.0, 4.0]), DomainBox((0,), (2,)))
        nn = NnModel(d)
        assert nn.knn([0.9], 2) == 0.5
        assert nn.knn([1.7], 3) == pytest.approx(5 / 3)
        with pytest.raises(NsmError):
            nn.knn([0.5], 4)
        with pytest.raises(NsmError):
            nn.knn([0.5], 0)

    def test_knn_tie_completion(self):
        # x=1 is equidistant from samples 0 and 2
        d = Dataset(np.array([[0.0], [3.0], [2.0]]), np.array([10.0, 30.0, 20.0]), DomainBox((0,), (3,)))
        np.testing.assert_array_equal(NnModel(d).neighbors([1.0], 2), [0, 2])
        np.testing.assert_array_equal(NnModel(d).neighbors([1.0], 1), [0])

    def test_k1_equals_nn(self, example_data):
        nn = NnModel(example_data)
        pts = make_grid(example_data.box, 30).points
        np.testing.assert_array_equal(nn.knn(pts, 1), nn.predict(pts))
        np.testing.assert_allclose(nn.knn(pts[:5], len(example_data)), example_data.y.mean())


class TestClassify:
    def test_samples_are_b_cells(self, example_data):
        m = NsmModel(example_data, 2.0)
        for i, lab in enumerate(m.classify(example_data.X)):
            assert lab.kind == "B" and lab.n == i and lab.voronoi_index == i

    def test_two_point_transition(self, two_point):
        lab = NsmModel(two_point, 2.0).classify([0.5])
        assert (lab.kind, lab.ceiling_index, lab.floor_index) == ("A", 0, 1)
        assert str(lab) == "A(0,1)"

    def test_constant_labels_are_voronoi(self):
        rng = np.random.default_rng(9)
        d = Dataset(rng.uniform(size=(12, 2)), np.full(12, 3.0), DomainBox((0, 0), (1, 1)))
        m = NsmModel(d, 1.0)
        for lab in m.classify(make_grid(d.box, 20).points):
            assert lab.kind == "B" and lab.n == lab.voronoi_index

    @pytest.mark.parametrize("spec", NORMS, ids=str)
    def test_region_invariants_on_grid(self, example_data, spec):
        y = example_data.y
        m = NsmModel(example_data, 3.0, spec)
        pts = make_grid(example_data.box, 60).points
        ev = m.evaluate(pts)
        b = ev.is_b
        assert b.any() and (~b).any()
        assert np.all(ev.voronoi_index[b] == ev.ceiling_index[b])
        assert np.all(ev.nsm[b] == y[ev.ceiling_index[b]])
        n, mm, p = ev.ceiling_index, ev.floor_index, ev.voronoi_index
        out = ~b & (p != n) & (p != mm)
        assert np.all(y[n[out]] <= y[p[out]]) and np.all(y[p[out]] <= y[mm[out]])


def test_ground_truth_containment(example_data):
    pts = make_grid(example_data.box, 80).points
    f = np.cos(pts[:, 0]) + np.sin(pts[:, 1])
    for L in (np.sqrt(2), 2.0, 16.0):
        ev = NsmModel(example_data, L).evaluate(pts)
        assert np.all(ev.floor <= f) and np.all(f <= ev.ceiling)


@pytest.mark.parametrize("spec", NORMS, ids=str)
def test_valid_at_exact_lower_bound(spec):
    """At L equal to the data bound the envelopes touch; rounding must not cross them."""
    for seed in range(15):
        rng = np.random.default_rng(500 + seed)
        dim = 1 + seed % 3
        d = random_dataset(rng, dim, int(rng.integers(2, 40)))
        lb = lipschitz_lower_bound(d, spec)
        nsm = NsmModel(d, lb, spec)
        np.testing.assert_array_equal(nsm.predict(d.X), d.y)
        np.testing.assert_array_equal(nsm.ceiling(d.X), d.y)
        np.testing.assert_array_equal(nsm.floor(d.X), d.y)
        ev = nsm.evaluate(make_grid(d.box, {1: 500, 2: 40, 3: 12}[dim]).points)
        assert np.all(ev.floor <= ev.nsm) and np.all(ev.nsm <= ev.ceiling)
        assert np.all(np.abs(ev.nsm) <= np.max(np.abs(d.y)))
