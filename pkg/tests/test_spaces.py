import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lipwidth import (
    DimensionMismatch,
    NormedSpace,
    PointSet,
    diameter,
    lp_space,
    radius_upper,
    step_space,
)


def unit_step_vector(space, a):
    """chi_a (indicator of [a, a+1]) on the space's cell grid."""
    edges = np.asarray(space.cell_edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    return ((mids >= a) & (mids < a + 1.0)).astype(float)


def test_l2_basis_distance_is_sqrt2():
    sp = lp_space(4, 2)
    e1 = np.array([1.0, 0, 0, 0])
    e2 = np.array([0, 1.0, 0, 0])
    assert sp.dist(e1, e2) == pytest.approx(math.sqrt(2.0), rel=1e-15)


def test_distance_identity_is_zero():
    for kind in ("l1", "l2", "linf"):
        sp = NormedSpace(3, kind)
        x = np.array([0.3, -1.2, 4.0])
        assert sp.dist(x, x) == 0.0


def test_step_distance_closed_form():
    sp = step_space(np.linspace(0.0, 2.0, 201))
    for a, b in [(0.0, 0.25), (0.1, 0.9), (0.5, 0.5)]:
        # a, b land on the grid so the indicators are exact
        a = round(a * 100) / 100
        b = round(b * 100) / 100
        d = sp.dist(unit_step_vector(sp, a), unit_step_vector(sp, b))
        assert d == pytest.approx(2.0 * abs(a - b), abs=1e-12)


def test_step_distance_matches_quadrature():
    # independent oracle: Riemann sum of |chi_a - chi_b| on a 10^4-point grid
    sp = step_space(np.linspace(0.0, 2.0, 2001))
    a, b = 0.2, 0.7315
    a = round(a * 1000) / 1000
    b = round(b * 1000) / 1000
    xs = np.linspace(0.0, 2.0, 10 ** 4, endpoint=False) + 1e-4 / 2
    chi = lambda c: ((xs >= c) & (xs < c + 1.0)).astype(float)
    quadrature = float(np.abs(chi(a) - chi(b)).sum() * (2.0 / 10 ** 4))
    d = sp.dist(unit_step_vector(sp, a), unit_step_vector(sp, b))
    assert abs(d - quadrature) <= 1e-6


def test_weighted_linf_norm():
    sp = NormedSpace(3, "wlinf", weights=(1.0, 2.0, 0.5))
    assert sp.norm(np.array([1.0, 1.0, 1.0])) == 2.0
    assert sp.norm(np.array([3.0, 0.1, 0.1])) == 3.0


def test_dimension_mismatch_raises():
    sp = lp_space(3, 1)
    with pytest.raises(DimensionMismatch):
        sp.norm(np.ones(4))
    with pytest.raises(DimensionMismatch):
        PointSet(sp, np.ones((2, 4)))


def test_diameter_basis_cloud():
    ps = PointSet(lp_space(5, 2), np.eye(5))
    assert diameter(ps) == pytest.approx(math.sqrt(2.0), rel=1e-15)


def test_diameter_singleton_zero():
    ps = PointSet(lp_space(2, "inf"), [[0.4, -0.2]])
    assert diameter(ps) == 0.0


def test_diameter_matches_exhaustive_rescan():
    rng = np.random.default_rng(42)
    pts = rng.uniform(-2, 2, size=(20, 3))
    ps = PointSet(lp_space(3, "inf"), pts)
    # oracle: plain double loop, no shared code path
    best = 0.0
    for i in range(20):
        for j in range(20):
            best = max(best, max(abs(pts[i][k] - pts[j][k]) for k in range(3)))
    assert diameter(ps) == pytest.approx(best, rel=1e-14)


def test_radius_symmetric_pair():
    ps = PointSet(lp_space(1, "inf"), [[-1.0], [1.0]])
    rb = radius_upper(ps)
    assert rb.upper == pytest.approx(1.0, abs=1e-12)  # mean candidate is 0
    assert rb.lower == pytest.approx(1.0, abs=1e-12)


def test_radius_basis_cloud_candidates():
    ps = PointSet(lp_space(5, 2), np.eye(5))
    rb = radius_upper(ps)
    # oracle: evaluate both candidate families explicitly
    point_candidate = math.sqrt(2.0)
    mean = np.full(5, 0.2)
    mean_candidate = max(float(np.linalg.norm(np.eye(5)[i] - mean)) for i in range(5))
    assert rb.upper == pytest.approx(min(point_candidate, mean_candidate), rel=1e-12)
    assert rb.upper <= math.sqrt(2.0)
    assert rb.lower == pytest.approx(math.sqrt(2.0) / 2.0, rel=1e-12)


def test_radius_singleton():
    ps = PointSet(lp_space(3, 1), [[1.0, 2.0, 3.0]])
    rb = radius_upper(ps)
    assert rb.upper == 0.0 and rb.lower == 0.0


@pytest.mark.parametrize("kind", ["l1", "l2", "linf"])
def test_radius_bracket_on_random_sets(kind):
    rng = np.random.default_rng(7)
    for _ in range(25):
        dim = int(rng.integers(1, 5))
        m = int(rng.integers(1, 30))
        ps = PointSet(NormedSpace(dim, kind), rng.normal(size=(m, dim)))
        rb = radius_upper(ps)
        d = diameter(ps)
        assert d / 2 - 1e-12 <= rb.upper <= d + 1e-12
        assert rb.lower <= rb.upper + 1e-12


@pytest.mark.parametrize("kind", ["l1", "l2", "linf", "wlinf"])
def test_metric_axioms_exhaustive_triples(kind):
    rng = np.random.default_rng(3)
    dim = 3
    weights = (0.5, 1.0, 2.0) if kind == "wlinf" else None
    sp = NormedSpace(dim, kind, weights=weights)
    pts = rng.uniform(-1, 1, size=(12, dim))
    ps = PointSet(sp, pts)
    m = ps.matrix()
    for i in range(12):
        assert m[i, i] == 0.0
        for j in range(12):
            assert m[i, j] == pytest.approx(m[j, i], rel=1e-14)
            assert m[i, j] >= 0.0
            for k in range(12):
                assert m[i, k] <= m[i, j] + m[j, k] + 1e-12


@given(
    st.lists(st.floats(-10, 10), min_size=4, max_size=4),
    st.floats(-5, 5),
)
@settings(max_examples=200, deadline=None)
def test_absolute_homogeneity(coords, c):
    x = np.asarray(coords)
    for kind in ("l1", "l2", "linf"):
        sp = NormedSpace(4, kind)
        assert sp.norm(c * x) == pytest.approx(abs(c) * sp.norm(x), rel=1e-9, abs=1e-12)


def test_norm_zero_iff_zero_vector():
    for kind in ("l1", "l2", "linf"):
        sp = NormedSpace(3, kind)
        assert sp.norm(np.zeros(3)) == 0.0
        assert sp.norm(np.array([0.0, 1e-9, 0.0])) > 1e-12


def test_pointset_json_roundtrip():
    sp = NormedSpace(2, "wlinf", weights=(1.0, 3.0))
    ps = PointSet(sp, [[0.1, 0.2], [0.3, -0.4]], labels=["a", "b"])
    back = PointSet.loads(ps.dumps())
    assert back.space == sp
    assert np.array_equal(back.points, ps.points)
    assert back.labels == ["a", "b"]


def test_empty_set_rejected():
    with pytest.raises(ValueError):
        PointSet(lp_space(2, 2), np.empty((0, 2)))
    with pytest.raises(ValueError):
        step_space([0.0, 1.0])  # does not span [0, 2]
