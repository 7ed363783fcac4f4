import math

import numpy as np
import pytest

from lipwidth import PointSet, inner_entropy, lp_space
from lipwidth.case_studies import (
    DiagonalSetSpec,
    SequenceSetSpec,
    TransportSpec,
    basis_cloud,
    cross_polytope_width,
    diagonal_reference_upper,
    diagonal_set,
    log_sequence_certificates,
    log_sequence_entropy_lower,
    octahedron_set,
    orthonormal_basis_report,
    power_collapse_index,
    power_width_upper,
    sequence_set,
    sequence_packing_count_log2,
    sigma_at,
    sigma_values,
    transport_comparison,
    transport_kolmogorov_upper,
    transport_reference,
    transport_set,
    volume_condition,
)
from lipwidth.spaces import PreconditionError


# --- sequence sets -----------------------------------------------------------


def test_sequence_distance_formula():
    spec = SequenceSetSpec(generator="log", truncation=6)
    ss = sequence_set(spec)
    sig = ss.sigmas
    for i in range(6):
        for j in range(i + 1, 6):
            assert ss.dist(i, j) == sig[i]  # = sigma_{min(i,j)+1}
        assert ss.dist(i, 6) == sig[i]  # distance to the origin point


def test_sequence_distances_match_dense_linf():
    spec = SequenceSetSpec(generator="power", truncation=9, c=0.7)
    ss = sequence_set(spec)
    dense = PointSet(lp_space(9, "inf"), ss.dense_points())
    for i in range(ss.size):
        assert np.allclose(ss.dist_row(i), dense.dist_row(i))


def test_sequence_entropy_bracket_contains_sigma():
    for gen, c in (("log", 1.0), ("power", 0.5)):
        for n in (2, 3):
            spec = SequenceSetSpec(generator=gen, truncation=2 ** (n + 2), c=c)
            est = inner_entropy(sequence_set(spec), n)
            ref = sigma_at(spec, 2 ** n)
            assert est.lower <= ref * (1 + 1e-9)
            assert est.upper >= ref * (1 - 1e-9)
            assert est.upper - est.lower <= 1e-9 * ss_scale(spec)


def ss_scale(spec):
    return sigma_at(spec, 1)


def test_sequence_rejects_nondecreasing():
    with pytest.raises(PreconditionError):
        SequenceSetSpec(generator="custom", truncation=3, values=(0.5, 0.5, 0.4))
        sequence_set(SequenceSetSpec(generator="custom", truncation=3,
                                     values=(0.5, 0.5, 0.4)))


def test_packing_count_log2_matches_direct_count():
    spec = SequenceSetSpec(generator="log", truncation=2 ** 12)
    sig = sigma_values(spec, 2 ** 12)
    for t in (0.9, 0.5, 0.21, 0.1):
        direct = int((sig > t).sum()) + 1
        assert sequence_packing_count_log2(spec, t) == pytest.approx(
            math.log2(direct), abs=1e-12
        )


# --- volume condition --------------------------------------------------------


def test_volume_condition_exact_small_n():
    spec = SequenceSetSpec(generator="log", truncation=2)
    cond = volume_condition(spec, 3.0, 6, 7 ** 6)
    assert cond.method == "exact-sum"
    assert cond.holds
    # independent oracle: plain Python summation
    direct = sum((1.0 / math.log2(j + 1)) ** 6 for j in range(1, 7 ** 6 + 1))
    assert cond.lhs_upper == pytest.approx(direct, rel=1e-12)


def test_volume_condition_block_bound():
    spec = SequenceSetSpec(generator="log", truncation=2)
    for n in (7, 8, 10):
        cond = volume_condition(spec, 3.0, n, (n + 1) ** n)
        assert cond.method == "dyadic-block"
        assert cond.holds
        assert cond.lhs_upper < 6.0 + 2.0 * math.e
        pieces = cond.pieces
        assert pieces["head"] + pieces["valley"] + pieces["tail"] == pytest.approx(
            cond.lhs_upper, rel=1e-12
        )


def test_volume_condition_block_dominates_exact():
    # the block majorant must never undercut the exact sum it replaces
    spec = SequenceSetSpec(generator="log", truncation=2)
    n, total = 8, 10 ** 5
    exact = float(np.sum(sigma_values(spec, total) ** n))
    block = volume_condition(spec, 3.0, n, 10 ** 6 + 1)  # forces block method
    assert block.lhs_upper >= exact


def test_volume_condition_power_tail():
    spec = SequenceSetSpec(generator="power", truncation=2, c=1.0)
    cond = volume_condition(spec, 4.0, 2, 10 ** 9)
    assert cond.method == "integral-tail"
    assert cond.holds
    exact = float(np.sum(np.arange(1.0, 10 ** 6 + 1) ** -2.0))
    assert cond.lhs_upper >= exact  # majorant of the full series


def test_volume_condition_gate_sigma1():
    spec = SequenceSetSpec(generator="custom", truncation=2, values=(3.0, 1.0))
    with pytest.raises(PreconditionError):
        volume_condition(spec, 4.0, 2, 2)


def test_volume_condition_custom_needs_exact_range():
    spec = SequenceSetSpec(generator="custom", truncation=2, values=(0.5, 0.4))
    with pytest.raises(PreconditionError):
        volume_condition(spec, 2.0, 2, 10 ** 7)


# --- log-decay sharpness ------------------------------------------------------


def test_log_sequence_certificates_n6():
    rep = log_sequence_certificates(6, 3.0, max_bumps=10 ** 4)
    assert rep.upper.value == pytest.approx(1.0 / (6 * math.log2(7)), rel=1e-14)
    assert rep.entropy_exact == pytest.approx(1.0 / math.log2(65), rel=1e-14)
    lo, hi = rep.entropy_bracket
    assert lo <= rep.entropy_exact * (1 + 1e-9) and hi >= rep.entropy_exact * (1 - 1e-9)
    assert 0.0 < rep.lower.value <= rep.upper.value
    assert rep.rate_ratio == pytest.approx(1.0 / math.log2(7), rel=1e-12)


def test_log_sequence_needs_n_at_least_5():
    with pytest.raises(PreconditionError):
        log_sequence_certificates(4, 3.0)


def test_log_entropy_lower_envelope_stable():
    assert log_sequence_entropy_lower(3) == pytest.approx(0.5 / math.log2(9))
    assert log_sequence_entropy_lower(10 ** 6) == pytest.approx(0.5 / 10 ** 6)


# --- power-decay collapse -----------------------------------------------------


def test_power_collapse_index_c1_gamma4():
    n1 = power_collapse_index(1.0, 4.0)
    assert n1 <= 3
    # direct inequality scan: 1 + 1/(n-1) <= 2^n holds from n = 2 on
    assert n1 == 2
    for n in range(n1, 12):
        assert 1.0 + 1.0 / (n - 1.0) <= 2.0 ** n


def test_power_collapse_index_boundary():
    n1 = power_collapse_index(0.1, 2.5)
    n0 = 10
    lhs = lambda n: n0 + n0 / (0.1 * n - 1.0)
    rhs = lambda n: 1.25 ** n
    assert lhs(n1) <= rhs(n1)
    assert lhs(n1 - 1) > rhs(n1 - 1)


def test_power_width_upper_decays():
    n1 = power_collapse_index(1.0, 4.0)
    for total, cap in ((10 ** 3, 1e-3), (10 ** 6, 1e-6)):
        cert = power_width_upper(1.0, 4.0, n1, total, max_bumps=10 ** 3)
        assert cert.value <= cap * (1 + 1e-12)
    # the volume condition also passes by exact summation at both totals
    spec = SequenceSetSpec(generator="power", truncation=2, c=1.0)
    for total in (10 ** 3, 10 ** 6):
        assert volume_condition(spec, 4.0, n1, total).holds


# --- orthonormal basis cloud ---------------------------------------------------


def test_basis_report_threshold_m14():
    rep = orthonormal_basis_report(14, 2.0 * math.sqrt(2.0), 2, entropy_ks=[1, 7])
    assert rep.threshold_lhs == pytest.approx(1.0 / 24.0)
    assert rep.threshold_rhs == pytest.approx(1.0 / 32.0)
    assert rep.regime_certified
    for lo, hi in rep.entropy_brackets.values():
        assert lo <= math.sqrt(2.0) * (1 + 1e-9) and hi >= math.sqrt(2.0) * (1 - 1e-9)


def test_basis_report_vacuous_regime():
    rep = orthonormal_basis_report(3, 1e6, 1, entropy_ks=[1])
    assert not rep.regime_certified


def test_basis_cloud_distances():
    cloud = basis_cloud(3)
    assert cloud.size == 9
    assert cloud.diameter() == pytest.approx(math.sqrt(2.0))
    assert cloud.dist(0, 5) == pytest.approx(math.sqrt(2.0))


# --- transport manifold ---------------------------------------------------------


def test_transport_distances_match_step_norm():
    ts = transport_set(TransportSpec(grid=64))
    # oracle: exact step-function L1 norm of the coordinate difference
    for i, j in ((0, 10), (5, 40), (30, 31)):
        direct = float(ts.space.norm(ts.points[i] - ts.points[j]))
        assert ts.dist(i, j) == pytest.approx(direct, abs=1e-12)
        assert ts.dist(i, j) == pytest.approx(2 * abs(ts.params[i] - ts.params[j]), abs=1e-12)


def test_transport_entropy_brackets():
    ts = transport_set(TransportSpec(grid=1024))
    refs = transport_reference()
    for n in (1, 2, 5):
        est = inner_entropy(ts, n)
        ref = refs["entropy"](n)
        assert est.lower <= ref * (1 + 1e-9)
        assert est.upper >= ref * (1 - 1e-9)


def test_transport_kolmogorov_formula_vs_vectors():
    ts = transport_set(TransportSpec(grid=128))
    for n in (4, 16):
        cert, coeffs = transport_kolmogorov_upper(ts, n)
        basis = ts.cell_basis(n)
        resid_vec = np.asarray(ts.space.norm(ts.points - coeffs @ basis))
        assert cert.value == pytest.approx(float(resid_vec.max()), abs=1e-12)
        assert cert.value <= 4.0 / n + 1e-12
        assert cert.value >= 1.0 / (n + 1.0)


def test_transport_comparison_below_kolmogorov():
    ts = transport_set(TransportSpec(grid=256))
    for n in (4, 16):
        dn, _ = transport_kolmogorov_upper(ts, n)
        comp = transport_comparison(ts, n)
        assert comp.value <= dn.value + 1e-9


def test_transport_reference_consistency():
    refs = transport_reference()
    assert refs["entropy"](3) == pytest.approx(0.25)
    assert refs["kolmogorov_lower"](1) == 0.5
    assert refs["kolmogorov_upper"](1) == 4.0
    assert refs["kolmogorov_lower"](1) <= refs["kolmogorov_upper"](1)


# --- diagonal set and cross-polytope ---------------------------------------------


def test_diagonal_membership_and_reference():
    spec = DiagonalSetSpec(16)
    dset = diagonal_set(spec)
    assert dset.size == 32
    for p in dset.points[:4]:
        assert spec.member(p)
    assert diagonal_reference_upper(4) == pytest.approx(1.0 / math.sqrt(math.log2(6)))


def test_cross_polytope_values():
    assert cross_polytope_width(1) == pytest.approx(
        (1.0 / math.sqrt(2.0)) * math.log2(3) ** -0.5, rel=1e-15
    )
    vals = [cross_polytope_width(n) for n in range(1, 101)]
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_octahedron_set_geometry():
    oset = octahedron_set(4)
    assert oset.size == 16
    scale = 1.0 / math.sqrt(math.log2(9))
    assert np.allclose(np.linalg.norm(oset.points, axis=1), scale)
