import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lipwidth import (
    AffineBallMap,
    BoundViolation,
    BumpSum,
    ConstantMap,
    NormedSpace,
    PiecewiseLinearPath,
    allocate_dyadic_cubes,
    audit_cube_allocation,
    build_entropy_map,
    build_path_map,
    build_sequence_bump_map,
    empirical_lipschitz,
    lp_space,
)
from lipwidth.lipmaps import bump_levels, grid_centers, map_from_json
from lipwidth.spaces import PreconditionError

L2 = lp_space(3, 2)


def two_bump_map():
    domain = lp_space(2, "inf")
    centers = [[-0.5, 0.0], [0.5, 0.0]]
    radii = [0.3, 0.2]
    payloads = [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0]]
    return BumpSum(domain, centers, radii, payloads, L2)


def test_bump_value_at_center_is_exact_payload():
    m = two_bump_map()
    out = m.evaluate(np.array([-0.5, 0.0]))
    assert np.array_equal(out, np.array([1.0, 0.0, 0.0]))  # bit exact


def test_bump_zero_outside_all_balls():
    m = two_bump_map()
    assert np.all(m.evaluate(np.array([0.0, 0.9])) == 0.0)
    assert np.all(m.evaluate(np.array([-0.5, 0.31])) == 0.0)


def test_bump_overlap_rejected():
    domain = lp_space(1, "inf")
    with pytest.raises(PreconditionError):
        BumpSum(domain, [[0.0], [0.25]], [0.2, 0.2], [[1.0], [1.0]], lp_space(1, 2))


def test_bump_touching_balls_allowed():
    # open balls sharing a boundary point are disjoint
    domain = lp_space(1, "inf")
    BumpSum(domain, [[-0.5], [0.5]], [0.5, 0.5], [[1.0], [1.0]], lp_space(1, 2))


def test_declared_constants():
    assert ConstantMap(np.zeros(3), L2).declared_lipschitz() == 0.0
    domain = lp_space(1, "inf")
    m = BumpSum(domain, [[-0.5], [0.5]], [0.5, 0.5], [[1.0], [2.0]], lp_space(1, 2))
    assert m.declared_lipschitz() == pytest.approx(4.0)  # max(1/0.5, 2/0.5)


def test_path_midpoint_interpolation():
    f1, f2 = np.array([1.0, 0.0, 0.0]), np.array([0.0, 0.0, 2.0])
    path = PiecewiseLinearPath([-1.0, 1.0], [f1, f2], L2)
    assert np.allclose(path.evaluate(np.array([0.0])), 0.5 * (f1 + f2))


def test_path_declared_constant_two_points():
    f1, f2 = np.zeros(3), np.array([3.0, 0.0, 0.0])
    path = build_path_map([f1, f2], L2)
    assert path.declared_lipschitz() == pytest.approx(1.5)  # d/2 with d = 3


def test_path_declared_constant_three_collinear():
    pts = [np.array([float(i), 0.0, 0.0]) for i in range(3)]
    path = build_path_map(pts, L2)
    # knots at -1, 0, 1: slope 1 per segment
    assert path.declared_lipschitz() == pytest.approx(1.0)
    assert path.declared_lipschitz() <= 2.0 * (3 - 1) / 2.0 + 1e-12  # diam (N-1)/2


def test_path_covers_within_delta():
    rng = np.random.default_rng(4)
    cloud = rng.normal(size=(30, 3))
    ps_pts = cloud
    # pick 5 covering points and measure the covering radius delta
    centers = ps_pts[[0, 6, 12, 18, 24]]
    delta = max(min(np.linalg.norm(p - c) for c in centers) for p in ps_pts)
    path = build_path_map(centers, L2)
    worst = 0.0
    for p in ps_pts:
        best = min(np.linalg.norm(p - path.evaluate(np.array([t]))) for t in path.knots)
        worst = max(worst, best)
    assert worst <= delta + 1e-12


def test_empirical_below_declared_constant_map():
    m = ConstantMap(np.array([1.0, 2.0, 3.0]), L2, domain_dim=2)
    assert empirical_lipschitz(m, seed=1, pairs=500) == 0.0


def test_empirical_single_bump_approaches_one():
    domain = lp_space(1, "inf")
    m = BumpSum(domain, [[0.0]], [1.0], [[1.0]], lp_space(1, 2))
    emp = empirical_lipschitz(m, seed=123, pairs=10 ** 4)
    assert 0.9 <= emp <= 1.0 + 1e-9


def test_empirical_deterministic_in_seed():
    m = two_bump_map()
    a = empirical_lipschitz(m, seed=9, pairs=3000)
    b = empirical_lipschitz(m, seed=9, pairs=3000)
    assert a == b


def test_bump_four_case_stratification():
    # same ball / both outside / one in one out / two different balls
    m = two_bump_map()
    lam = m.declared_lipschitz()
    rng = np.random.default_rng(77)
    pts = rng.uniform(-1, 1, size=(4000, 2))
    d_to = [np.abs(pts - np.array(c)).max(axis=1) for c in ([-0.5, 0.0], [0.5, 0.0])]
    in0 = d_to[0] < 0.3
    in1 = d_to[1] < 0.2
    cases = {
        "same-ball": (in0, in0),
        "both-outside": (~in0 & ~in1, ~in0 & ~in1),
        "in-out": (in0, ~in0 & ~in1),
        "two-balls": (in0, in1),
    }
    for name, (sel_a, sel_b) in cases.items():
        a = pts[sel_a][:50]
        b = pts[sel_b][:50]
        take = min(len(a), len(b))
        assert take > 0, name
        img_a = m.evaluate_batch(a[:take])
        img_b = m.evaluate_batch(b[:take])
        num = np.linalg.norm(img_a - img_b, axis=1)
        den = np.abs(a[:take] - b[:take]).max(axis=1)
        ok = den > 0
        assert np.all(num[ok] <= lam * den[ok] * (1 + 1e-9)), name


def test_entropy_map_grid_k1_n1():
    targets = np.array([[2.0], [4.0]])
    m = build_entropy_map(targets, 1, 1, lp_space(1, 2))
    assert np.allclose(m.centers, [[-0.5], [0.5]])
    assert np.all(m.radii == 0.5)
    assert np.array_equal(m.evaluate(np.array([-0.5])), targets[0])
    assert np.array_equal(m.evaluate(np.array([0.5])), targets[1])


def test_entropy_map_grid_k1_n2():
    targets = np.arange(8.0).reshape(4, 2)
    m = build_entropy_map(targets, 1, 2, lp_space(2, 2))
    got = {tuple(c) for c in m.centers}
    want = {(-0.5, -0.5), (-0.5, 0.5), (0.5, -0.5), (0.5, 0.5)}
    assert got == want
    for c, t in zip(m.centers, targets):
        assert np.array_equal(m.evaluate(c), t)


def test_entropy_map_reproduces_own_points_exactly():
    rng = np.random.default_rng(13)
    pts = rng.normal(size=(16, 2))
    m = build_entropy_map(pts, 2, 2, lp_space(2, 2))
    worst = 0.0
    for j, p in enumerate(pts):
        out = m.evaluate(m.centers[j])
        worst = max(worst, float(np.abs(out - p).max()))
    assert worst == 0.0


def test_entropy_map_wrong_count_and_guard():
    with pytest.raises(PreconditionError):
        build_entropy_map(np.zeros((3, 1)), 1, 1, lp_space(1, 2))
    with pytest.raises(PreconditionError):
        build_entropy_map(np.zeros((2, 1)), 25, 1, lp_space(1, 2))


def test_grid_cell_matches_center_order():
    m = build_entropy_map(np.arange(16.0).reshape(16, 1), 2, 2, lp_space(1, 2))
    flats = m.grid_cell(m.centers)
    assert np.array_equal(flats, np.arange(16))
    assert np.array_equal(grid_centers(2, 2), m.centers)


def test_allocate_line_tiling():
    alloc = allocate_dyadic_cubes(1, [1, 1, 1, 1])
    assert audit_cube_allocation(alloc)
    corners = sorted(alloc.lower_corners()[:, 0].tolist())
    assert corners == [-1.0, -0.5, 0.0, 0.5]
    assert np.all(alloc.sides() == 0.5)


def test_allocate_mixed_levels_disjoint():
    alloc = allocate_dyadic_cubes(2, [0, 1, 1, 1, 1])
    assert alloc.count == 5
    assert audit_cube_allocation(alloc)
    lo = alloc.lower_corners()
    hi = lo + alloc.sides()[:, None]
    assert np.all(lo >= -1.0) and np.all(hi <= 1.0)


def test_allocate_volume_violation_message():
    with pytest.raises(PreconditionError) as err:
        allocate_dyadic_cubes(1, [0] * 5)  # five unit cubes exceed length 2
    assert "volume" in str(err.value)


def test_allocate_levels_must_ascend():
    with pytest.raises(PreconditionError):
        allocate_dyadic_cubes(1, [2, 1])


@given(st.integers(0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_allocate_random_levels_audit(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 4))
    levels = np.sort(rng.integers(0, 4, size=int(rng.integers(1, 12))))
    vol = sum(2.0 ** (-dim * int(l)) for l in levels)
    if vol > 2 ** dim:
        return
    alloc = allocate_dyadic_cubes(dim, levels.tolist())
    assert audit_cube_allocation(alloc)


def test_bump_levels_bracket():
    sig = np.array([0.5, 0.25, 0.2, 0.125])
    lev = bump_levels(sig, 2.0)
    x = 2.0 * sig / 2.0
    for l, xi in zip(lev, x):
        assert 2.0 ** (-l - 1) < xi <= 2.0 ** (-l)


def test_sequence_bump_map_geometric():
    sig = np.array([0.5, 0.25, 0.125])
    m = build_sequence_bump_map(sig, 2.0, 1, 3)
    assert m.declared_lipschitz() <= 2.0 + 1e-12
    # hits sigma_j e_j at each cube center
    for j in range(3):
        out = m.evaluate(m.alloc.centers()[j])
        assert out == (j, sig[j])
    assert empirical_lipschitz(m, seed=5, pairs=4000) <= 2.0 + 1e-9


def test_sequence_bump_map_violating_volume():
    with pytest.raises(PreconditionError):
        build_sequence_bump_map(np.array([1.0, 1.0 - 1e-9, 1.0 - 2e-9]), 2.0, 1, 3)


def test_log_decay_levels_allocate_in_dim_6():
    # log-decay amplitudes at gamma = 3: volume condition first, then the
    # greedy dyadic allocation must succeed and stay disjoint
    j = np.arange(1, 1001, dtype=float)
    sig = 1.0 / np.log2(j + 1.0)
    assert float(np.sum(sig ** 6)) <= (3.0 / 2.0) ** 6
    lev = bump_levels(sig, 3.0)
    alloc = allocate_dyadic_cubes(6, lev.tolist())
    assert alloc.count == 1000
    assert audit_cube_allocation(alloc)


def test_evaluate_rejects_point_outside_ball():
    from lipwidth.lipmaps import evaluate

    m = two_bump_map()
    with pytest.raises(PreconditionError):
        evaluate(m, np.array([1.5, 0.0]))
    out = evaluate(m, np.array([-0.5, 0.0]))
    assert np.array_equal(out, np.array([1.0, 0.0, 0.0]))


def test_affine_ball_map_exact_gamma():
    basis = np.linalg.qr(np.random.default_rng(2).normal(size=(3, 2)))[0].T
    m = AffineBallMap(np.zeros(3), 2.5, basis, L2)
    assert m.declared_lipschitz() == 2.5
    emp = empirical_lipschitz(m, seed=3, pairs=2000)
    assert emp == pytest.approx(2.5, rel=1e-9)


def test_map_json_roundtrip():
    maps = [
        ConstantMap(np.array([1.0, 0.0, 0.0]), L2, domain_dim=2),
        two_bump_map(),
        build_path_map([np.zeros(3), np.ones(3)], L2),
        build_sequence_bump_map(np.array([0.5, 0.25]), 2.0, 1, 2),
    ]
    for m in maps:
        back = map_from_json(m.to_json())
        y = np.zeros(m.domain_dim) + 0.1
        a, b = m.evaluate(y), back.evaluate(y)
        if isinstance(a, tuple) or a is None:
            assert a == b
        else:
            assert np.allclose(a, b)


def test_relu_param_map_adapter():
    from lipwidth.lipmaps import ReluParamMap
    from lipwidth.relunet import ReLUNetConfig, lip_bound

    cfg = ReLUNetConfig(d=1, width=2, depth=2, grid=64)
    m = ReluParamMap(cfg)
    assert m.declared_lipschitz() == float(lip_bound(cfg).final)
    emp = empirical_lipschitz(m, seed=8, pairs=500)
    assert emp <= m.declared_lipschitz()
    back = map_from_json(m.to_json())
    y = np.full(m.domain_dim, 0.5)
    assert np.allclose(m.evaluate(y), back.evaluate(y))


def test_empirical_raises_on_false_declaration():
    class Lying(ConstantMap):
        def evaluate_batch(self, ys):
            return np.asarray(ys, dtype=float) @ np.ones((self.domain_dim, 3))

        def declared_lipschitz(self):
            return 1e-6

    m = Lying(np.zeros(3), L2, domain_dim=2)
    with pytest.raises(BoundViolation):
        empirical_lipschitz(m, seed=0, pairs=200)
