import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from nsmreg import DomainBox, GridSpec, NormSpec, make_grid, norm
from nsmreg.exceptions import DimensionError, NsmError
from nsmreg.geometry import box_distance, distances

from conftest import NORMS


@pytest.mark.parametrize("p, expected", [(2, 5.0), (1, 7.0), ("inf", 4.0)])
def test_norm_examples(p, expected):
    assert norm([3.0, -4.0], NormSpec(p)) == expected


def test_norm_rejects_empty():
    with pytest.raises(DimensionError):
        norm([], NormSpec(2))


@pytest.mark.parametrize("p", [0.5, 3, "p", -1])
def test_unsupported_norms(p):
    with pytest.raises(NsmError):
        NormSpec(p)


def test_normspec_immutable():
    spec = NormSpec("inf")
    assert math.isinf(spec.p)
    with pytest.raises(AttributeError):
        spec.p = 2.0


# magnitudes below ~1e-154 square to zero under l2; keep away from underflow
_coord = st.floats(-1e3, 1e3, allow_nan=False).filter(lambda v: v == 0 or abs(v) > 1e-100)
vec = arrays(np.float64, 4, elements=_coord)


@pytest.mark.parametrize("spec", NORMS, ids=str)
@settings(max_examples=200, deadline=None)
@given(u=vec, v=vec, w=vec, a=st.floats(-100, 100))
def test_norm_axioms(spec, u, v, w, a):
    nu, nv = norm(u, spec), norm(v, spec)
    assert nu >= 0
    assert (nu == 0) == (not np.any(u))
    assert math.isclose(norm(a * u, spec), abs(a) * nu, rel_tol=1e-12, abs_tol=1e-9)
    assert norm(u + v, spec) <= nu + nv + 1e-9 * (1 + nu + nv)
    assert norm(u - w, spec) <= norm(u - v, spec) + norm(v - w, spec) + 1e-9 * (1 + nu + nv)


@pytest.mark.parametrize("spec", NORMS, ids=str)
def test_distances_match_norm(spec):
    rng = np.random.default_rng(0)
    P, C = rng.normal(size=(5, 3)), rng.normal(size=(4, 3))
    D = distances(P, C, spec)
    ref = np.array([[norm(p - c, spec) for c in C] for p in P])
    np.testing.assert_array_equal(D, ref)


def test_distances_are_batch_independent():
    rng = np.random.default_rng(1)
    P, C = rng.normal(size=(50, 5)), rng.normal(size=(30, 5))
    full = distances(P, C)
    for i in (0, 17, 49):
        np.testing.assert_array_equal(distances(P[i], C), full[i:i + 1])


@pytest.mark.parametrize("spec", NORMS, ids=str)
def test_box_distance_never_exceeds_point_distance(spec):
    rng = np.random.default_rng(2)
    inside = rng.uniform(0.2, 0.6, size=(40, 3))
    lo, hi = inside.min(axis=0), inside.max(axis=0)
    Q = rng.uniform(-2, 3, size=(500, 3))
    bd = box_distance(Q, lo, hi, spec)
    assert np.all(bd[:, None] <= distances(Q, inside, spec))
    assert np.all(box_distance(inside, lo, hi, spec) == 0)


def test_grid_unit_interval():
    g = make_grid(DomainBox((0,), (1,)), GridSpec(2))
    np.testing.assert_array_equal(g.points[:, 0], [0.25, 0.75])
    assert g.cell_volume == 0.5


def test_grid_square():
    g = make_grid(DomainBox((0, 0), (10, 10)), 3)
    assert len(g) == 9
    assert math.isclose(g.cell_volume, 100 / 9)


def test_grid_rectangle_row_major():
    g = make_grid(DomainBox((0, 0), (2, 4)), 2)
    np.testing.assert_array_equal(g.points, [[0.5, 1], [0.5, 3], [1.5, 1], [1.5, 3]])
    assert g.cell_volume == 2.0


def test_grid_zero_points_rejected():
    with pytest.raises(NsmError):
        GridSpec(0)


@pytest.mark.parametrize("dim, k", [(1, 7), (2, 13), (3, 5)])
def test_grid_volume_and_interior(dim, k):
    box = DomainBox([-1.0, 2.0, 0.0][:dim], [3.0, 2.5, 7.0][:dim])
    g = make_grid(box, k)
    assert len(g) == k ** dim
    assert math.isclose(g.volumes.sum(), box.volume, rel_tol=1e-9)
    assert np.all(g.points > box.lower) and np.all(g.points < box.upper)


def test_grid_deterministic():
    box = DomainBox((0, 0, 0), (1, 2, 3))
    a, b = make_grid(box, 11), make_grid(box, 11)
    assert a.points.tobytes() == b.points.tobytes()


def test_box_validation():
    with pytest.raises(NsmError):
        DomainBox((0, 1), (1, 1))
    with pytest.raises(DimensionError):
        DomainBox((), ())
