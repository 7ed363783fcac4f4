"""Concrete compact sets with closed-form reference values.

Families:

* coordinate-sequence sets {sigma_j e_j} union {0} in the sup-norm sequence
  space, served through a sparse distance oracle (log-decay and power-decay
  generators);
* the transport solution manifold {chi_a : a in [0,1]} of unit-step
  indicator functions in L1[0, 2];
* the diagonal weighted-l1 ball sample in l2 and the scaled cross-polytope
  whose Kolmogorov width has a classical closed form;
* the orthonormal-basis cloud {e_1, ..., e_{2^m + 1}} in l2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .covering import inner_entropy
from .lipmaps import SequenceBumpSum, build_sequence_bump_map
from .spaces import FiniteSet, NormedSpace, PointSet, PreconditionError, step_space
from .widths import WidthCertificate, kolmogorov_comparison, width_lower_certified

EXACT_SUM_LIMIT = 10 ** 6


# ---------------------------------------------------------------------------
# Coordinate-sequence sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SequenceSetSpec:
    """sigma generator plus truncation for {sigma_j e_j} union {0}."""

    generator: str  # "log" | "power" | "custom"
    truncation: int
    c: float = 1.0  # power-decay exponent
    values: Optional[tuple] = None  # custom finite list

    def __post_init__(self):
        if self.generator not in ("log", "power", "custom"):
            raise ValueError("generator must be log/power/custom")
        if self.truncation < 2:
            raise PreconditionError("truncation must be at least 2")
        if self.generator == "power" and self.c <= 0:
            raise PreconditionError("power generator needs c > 0")
        if self.generator == "custom" and not self.values:
            raise PreconditionError("custom generator needs explicit values")


def sigma_at(spec: SequenceSetSpec, j: int) -> float:
    """sigma_j for 1-based index j (j may exceed the truncation)."""
    if j < 1:
        raise ValueError("indices are 1-based")
    if spec.generator == "log":
        return 1.0 / math.log2(j + 1)
    if spec.generator == "power":
        return float(j) ** (-spec.c)
    return float(spec.values[j - 1])


def sigma_values(spec: SequenceSetSpec, count: int) -> np.ndarray:
    j = np.arange(1, count + 1, dtype=float)
    if spec.generator == "log":
        return 1.0 / np.log2(j + 1.0)
    if spec.generator == "power":
        return j ** (-spec.c)
    return np.asarray(spec.values[:count], dtype=float)


class SequenceSet(FiniteSet):
    """{sigma_j e_j}_{j<=M} union {0} with sparse closed-form distances.

    Point order: index i < M is sigma_{i+1} e_{i+1}; index M is the origin.
    Distances: d(i, j) = sigma_{min(i,j)+1} for i != j < M and
    d(i, M) = sigma_{i+1}.
    """

    def __init__(self, sigmas: np.ndarray):
        super().__init__()
        sig = np.asarray(sigmas, dtype=float)
        if np.any(sig <= 0) or np.any(np.diff(sig) >= 0):
            raise PreconditionError("sigma must be strictly decreasing and positive")
        self.sigmas = sig
        self.size = len(sig) + 1
        self.space = NormedSpace(len(sig), "linf")

    def dist_row(self, i: int) -> np.ndarray:
        m = len(self.sigmas)
        row = np.empty(self.size)
        if i < m:
            row[:i] = self.sigmas[:i]
            row[i] = 0.0
            row[i + 1 :] = self.sigmas[i]
        else:
            row[:m] = self.sigmas
            row[m] = 0.0
        return row

    def diameter(self) -> float:
        return float(self.sigmas[0])

    def distinct_distances(self) -> np.ndarray:
        return np.unique(self.sigmas)

    def dense_points(self) -> np.ndarray:
        m = len(self.sigmas)
        pts = np.zeros((m + 1, m))
        pts[np.arange(m), np.arange(m)] = self.sigmas
        return pts


def sequence_set(spec: SequenceSetSpec) -> SequenceSet:
    return SequenceSet(sigma_values(spec, spec.truncation))


def log_sequence_entropy_lower(index: int) -> float:
    """Certified outer-entropy lower envelope of the log-decay set.

    The inner entropy number at index k equals sigma_{2^k} = 1/log2(2^k+1)
    and outer entropy is at least half the inner one.  Stable for any index.
    """
    if index < 1:
        raise PreconditionError("index must be positive")
    if index >= 60:
        return 0.5 / index  # log2(2^k + 1) == k to double precision
    return 0.5 / math.log2(2.0 ** index + 1.0)


def sequence_packing_count_log2(spec: SequenceSetSpec, t: float) -> float:
    """log2 of a certified packing count of the full set at separation t.

    The first c points with sigma_j > t are pairwise more than t apart and
    the origin keeps distance sigma_j > t from each of them, an explicit
    (c+1)-point packing no truncation needs to materialise.
    """
    if t <= 0:
        raise PreconditionError("separation must be positive")
    if spec.generator == "log":
        # sigma_j > t  iff  j < 2**(1/t) - 1
        x = 1.0 / t
        if x < 50:
            count = max(0, math.ceil(2.0 ** x - 1.0) - 1)
            return math.log2(count + 1)
        return x  # log2(2**x - 2 + 1) ~ x, and x >= 50 makes the -1 negligible
    if spec.generator == "power":
        # sigma_j > t  iff  j < t**(-1/c)
        x = t ** (-1.0 / spec.c)
        count = max(0, math.ceil(x) - 1)
        return math.log2(count + 1)
    sig = np.asarray(spec.values, dtype=float)
    return math.log2(int((sig > t).sum()) + 1)


@dataclass(frozen=True)
class VolumeCondition:
    """Result of checking sum_{j<=N} sigma_j^n <= (gamma/2)^n."""

    holds: bool
    lhs_upper: float
    rhs_log2: float
    method: str  # "exact-sum" | "dyadic-block" | "integral-tail"
    n: int
    total_terms: int
    pieces: dict


def volume_condition(spec: SequenceSetSpec, gamma: float, n: int, total_terms: int
                     ) -> VolumeCondition:
    """Certified upper bound on the amplitude volume sum versus (gamma/2)^n.

    Exact summation up to 10**6 terms; beyond that the log generator uses
    the dyadic block majorant sum_k 2^k k^-n (reported with its three-range
    split) and the power generator uses the integral tail bound
    n0 + n0/(c n - 1).
    """
    if sigma_at(spec, 1) > gamma / 2.0 + 1e-15:
        raise PreconditionError("sigma_1 must not exceed gamma/2")
    rhs_log2 = n * math.log2(gamma / 2.0)
    if total_terms <= EXACT_SUM_LIMIT:
        sig = sigma_values(spec, total_terms)
        lhs = float(math.fsum((sig ** n).tolist()))
        method = "exact-sum"
        pieces = {}
    elif spec.generator == "log":
        # blocks j in [2^k, 2^(k+1)): 2^k terms, each at most k^-n (k >= 1)
        j_top = math.floor(math.log2(total_terms)) + 1
        terms = [math.exp(k * math.log(2.0) - n * math.log(k)) for k in range(1, j_top)]
        lhs = 1.0 + math.fsum(terms)
        lo = [t for k, t in zip(range(1, j_top), terms) if k <= n / math.log(4.0)]
        mid = [t for k, t in zip(range(1, j_top), terms)
               if n / math.log(4.0) < k <= n / math.log(2.0)]
        hi = [t for k, t in zip(range(1, j_top), terms) if k > n / math.log(2.0)]
        pieces = {
            "blocks": j_top - 1,
            "head": 1.0 + math.fsum(lo),
            "valley": math.fsum(mid),
            "tail": math.fsum(hi),
        }
        method = "dyadic-block"
    elif spec.generator == "power":
        if spec.c * n <= 1:
            raise PreconditionError("integral tail bound needs c*n > 1")
        n0 = max(1, math.floor(1.0 / spec.c))
        lhs = n0 + n0 / (spec.c * n - 1.0)
        pieces = {"n0": n0}
        method = "integral-tail"
    else:
        raise PreconditionError(
            "no closed-form majorant for a custom generator beyond the exact range"
        )
    holds = math.log(lhs) <= rhs_log2 * math.log(2.0) + 1e-12 if lhs > 0 else True
    return VolumeCondition(holds=holds, lhs_upper=lhs, rhs_log2=rhs_log2,
                           method=method, n=n, total_terms=total_terms, pieces=pieces)


def sequence_width_upper(spec_generator: str, gamma: float, n: int,
                         total_terms: int, c: float = 1.0,
                         max_bumps: int = EXACT_SUM_LIMIT,
                         value_override: Optional[float] = None
                         ) -> tuple[WidthCertificate, SequenceBumpSum]:
    """Upper certificate d_n^gamma <= sigma_N for a sequence set.

    Verifies the volume condition for all N = total_terms, materialises the
    first min(N, max_bumps) bumps of the dyadic construction, and reports
    sigma_N (bumps beyond the materialised prefix only improve the map).
    """
    spec = SequenceSetSpec(generator=spec_generator, truncation=2, c=c) \
        if spec_generator != "custom" else None
    if spec is None:
        raise PreconditionError("custom generators not supported here")
    cond = volume_condition(spec, gamma, n, total_terms)
    if not cond.holds:
        raise PreconditionError(
            f"volume condition failed: lhs_upper={cond.lhs_upper}, "
            f"rhs_log2={cond.rhs_log2}"
        )
    prefix = min(total_terms, max_bumps)
    bmap = build_sequence_bump_map(sigma_values(spec, prefix), gamma, n,
                                   total_terms, volume_certified=True)
    sigma_n_val = sigma_at(spec, total_terms)
    value = sigma_n_val if value_override is None else value_override
    if value < sigma_n_val * (1.0 - 1e-12):
        raise PreconditionError("certificate value below the certified error bound")
    cert = WidthCertificate(
        quantity="lipschitz_width",
        n=n,
        gamma=gamma,
        value=value,
        direction="upper",
        witness={
            "kind": "dyadic-bump-map",
            "generator": spec_generator,
            "total_terms": total_terms,
            "materialized": prefix,
            "sigma_at_total": sigma_n_val,
            "declared_constant": bmap.declared_lipschitz(),
            "volume_condition": {
                "method": cond.method,
                "lhs_upper": cond.lhs_upper,
                "rhs_log2": cond.rhs_log2,
            },
        },
    )
    return cert, bmap


# --- log-decay sharpness -----------------------------------------------------


@dataclass(frozen=True)
class LogSequenceReport:
    n: int
    gamma: float
    upper: WidthCertificate
    lower: WidthCertificate
    entropy_bracket: tuple
    entropy_exact: float      # sigma_{2^n}, the exact inner entropy number
    entropy_rate: float       # 1/n, the headline rate
    rate_ratio: float         # upper.value / entropy_rate


def log_sequence_certificates(n: int, gamma: float = 3.0,
                              truncation: Optional[int] = None,
                              max_bumps: int = EXACT_SUM_LIMIT) -> LogSequenceReport:
    """Two-sided width certificates for the log-decay sequence set.

    Upper: sigma_N with N = (n+1)^n, reported at the rate value
    1/(n log2(n+1)) >= sigma_N.  Lower: covering-count certificate with
    packing counts taken from the generator's closed form (any truncation
    large enough to materialise the witness would need ~2**(1/eps) points).
    """
    if n < 5:
        raise PreconditionError("the sharpness construction needs n >= 5")
    if gamma < 3.0:
        raise PreconditionError("gamma >= 3 required here")
    total = (n + 1) ** n
    rate_value = 1.0 / (n * math.log2(n + 1))
    upper, _ = sequence_width_upper("log", gamma, n, total,
                                    max_bumps=max_bumps,
                                    value_override=rate_value)
    trunc = truncation if truncation is not None else 2 ** min(n + 4, 14)
    spec = SequenceSetSpec(generator="log", truncation=trunc)
    sset = sequence_set(spec)
    lower = width_lower_certified(
        sset, n, gamma,
        count_log2=lambda t: sequence_packing_count_log2(spec, t),
    )
    ent_spec = SequenceSetSpec(generator="log", truncation=2 ** min(n + 2, 14))
    ent = inner_entropy(sequence_set(ent_spec), n)
    sigma_exact = sigma_at(spec, 2 ** n)
    return LogSequenceReport(
        n=n,
        gamma=gamma,
        upper=upper,
        lower=lower,
        entropy_bracket=(ent.lower, ent.upper),
        entropy_exact=sigma_exact,
        entropy_rate=1.0 / n,
        rate_ratio=upper.value / (1.0 / n),
    )


# --- power-decay collapse ----------------------------------------------------


def power_collapse_index(c: float, gamma: float) -> int:
    """Smallest n1 with n0 + n0/(c n - 1) <= (gamma/2)^n for all n >= n1.

    The left side decreases and the right side increases in n (gamma > 2),
    so the first qualifying n works for every larger one.
    """
    if c <= 0:
        raise PreconditionError("c must be positive")
    if gamma <= 2:
        raise PreconditionError("gamma > 2 required")
    n0 = max(1, math.floor(1.0 / c))
    n = n0 + 1
    while True:
        lhs = n0 + n0 / (c * n - 1.0)
        if math.log(lhs) <= n * math.log(gamma / 2.0):
            return n
        n += 1
        if n > 10 ** 6:
            raise PreconditionError("no collapse index found below 10^6")


def power_width_upper(c: float, gamma: float, n: int, total_terms: int,
                      max_bumps: int = EXACT_SUM_LIMIT) -> WidthCertificate:
    """Upper certificate sigma_N = N^-c for the power-decay set."""
    cert, _ = sequence_width_upper("power", gamma, n, total_terms, c=c,
                                   max_bumps=max_bumps)
    return cert


# ---------------------------------------------------------------------------
# Orthonormal-basis cloud
# ---------------------------------------------------------------------------


class UniformBasisSet(FiniteSet):
    """{scale * e_1, ..., scale * e_count} in l2: all distances scale*sqrt(2)."""

    def __init__(self, count: int, scale: float = 1.0):
        super().__init__()
        if count < 1:
            raise PreconditionError("need at least one point")
        self.size = count
        self.scale = float(scale)
        self.space = NormedSpace(count, "l2")
        self._d = self.scale * math.sqrt(2.0)

    def dist_row(self, i: int) -> np.ndarray:
        row = np.full(self.size, self._d)
        row[i] = 0.0
        return row

    def diameter(self) -> float:
        return self._d if self.size > 1 else 0.0

    def distinct_distances(self) -> np.ndarray:
        return np.asarray([self._d]) if self.size > 1 else np.asarray([])


def basis_cloud(m: int) -> UniformBasisSet:
    """The 2**m + 1 orthonormal basis vectors used by the threshold example."""
    return UniformBasisSet(2 ** m + 1)


@dataclass(frozen=True)
class BasisThresholdReport:
    m: int
    gamma: float
    s: int
    threshold_lhs: float   # sqrt(2) / (12 gamma)
    threshold_rhs: float   # 4 * 2**(-m/s)
    regime_certified: bool  # lhs > rhs forces 3 d_s^gamma >= sqrt(2)
    entropy_value: float    # sqrt(2), all k <= m
    entropy_brackets: dict
    width_lower: Optional[WidthCertificate]


def orthonormal_basis_report(m: int, gamma: float, s: int,
                             entropy_ks: Optional[list] = None,
                             with_width_lower: bool = False) -> BasisThresholdReport:
    """Entropy saturation and width threshold for the basis cloud.

    All pairwise distances equal sqrt(2), so every inner entropy number up
    to index m equals sqrt(2).  When sqrt(2)/(12 gamma) > 4 * 2**(-m/s) the
    packing argument certifies 3 d_s^gamma >= sqrt(2); otherwise no claim.
    """
    if m < 1 or s < 1:
        raise PreconditionError("m and s must be positive")
    cloud = basis_cloud(m)
    lhs = math.sqrt(2.0) / (12.0 * gamma)
    rhs = 4.0 * 2.0 ** (-m / s)
    ks = entropy_ks if entropy_ks is not None else sorted({1, max(1, m // 2), m})
    brackets = {}
    for k in ks:
        est = inner_entropy(cloud, k)
        brackets[int(k)] = (est.lower, est.upper)
    wl = None
    if with_width_lower:
        wl = width_lower_certified(cloud, s, gamma)
    return BasisThresholdReport(
        m=m, gamma=gamma, s=s,
        threshold_lhs=lhs, threshold_rhs=rhs,
        regime_certified=lhs > rhs,
        entropy_value=math.sqrt(2.0),
        entropy_brackets=brackets,
        width_lower=wl,
    )


# ---------------------------------------------------------------------------
# Transport manifold
# ---------------------------------------------------------------------------


class TransportSet(PointSet):
    """Samples chi_a (indicator of [a, a+1]) on a uniform parameter grid.

    Cell representation on the uniform grid over [0, 2] (2*grid cells of
    width 1/grid) is exact; distances use the closed form 2|a - b|.
    """

    def __init__(self, grid: int):
        if grid < 2:
            raise PreconditionError("grid must be at least 2")
        self.grid = grid
        params = np.arange(grid + 1) / grid
        h = 1.0 / grid
        edges = np.arange(2 * grid + 1) * h
        space = step_space(edges)
        pts = np.zeros((grid + 1, 2 * grid))
        for i in range(grid + 1):
            pts[i, i : i + grid] = 1.0
        dmat = 2.0 * np.abs(params[:, None] - params[None, :])
        super().__init__(space, pts, dist_matrix=dmat)
        self.params = params

    def approximant_cells(self, n: int) -> np.ndarray:
        """0/1 coefficients of the n-cell piecewise-constant approximants."""
        coeffs = np.zeros((self.size, n))
        for i, a in enumerate(self.params):
            j1 = min(int(math.floor(a * n / 2.0)), n - 1)
            j2 = min(int(math.floor((a + 1.0) * n / 2.0)), n - 1)
            coeffs[i, j1 : j2 + 1] = 1.0
        return coeffs

    def cell_basis(self, n: int) -> np.ndarray:
        """Indicators of [2j/n, 2(j+1)/n) expressed on the space grid."""
        if (2 * self.grid) % n != 0:
            raise PreconditionError("n must divide the number of grid cells")
        per = (2 * self.grid) // n
        basis = np.zeros((n, 2 * self.grid))
        for j in range(n):
            basis[j, j * per : (j + 1) * per] = 1.0
        return basis


@dataclass(frozen=True)
class TransportSpec:
    grid: int = 1024

    def __post_init__(self):
        if self.grid < 2:
            raise PreconditionError("grid must be at least 2")


def transport_set(spec: TransportSpec) -> TransportSet:
    return TransportSet(spec.grid)


def transport_reference() -> dict:
    """Closed-form reference values (the Kolmogorov lower is recorded, not
    recomputed)."""
    return {
        "entropy": lambda n: 2.0 ** (-n + 1),
        "kolmogorov_upper": lambda n: 4.0 / n,
        "kolmogorov_lower": lambda n: 1.0 / (n + 1),
    }


def transport_kolmogorov_upper(tset: TransportSet, n: int
                               ) -> tuple[WidthCertificate, np.ndarray]:
    """Exact residual of the n-cell piecewise-constant approximants.

    The L1 error of the approximant of chi_a is
    (a - 2 j1/n) + (2 (j2+1)/n - a - 1), computed in closed form per sample.
    """
    resid = np.empty(tset.size)
    for i, a in enumerate(tset.params):
        j1 = min(int(math.floor(a * n / 2.0)), n - 1)
        j2 = min(int(math.floor((a + 1.0) * n / 2.0)), n - 1)
        resid[i] = (a - 2.0 * j1 / n) + (2.0 * (j2 + 1) / n - a - 1.0)
    value = float(resid.max())
    cert = WidthCertificate(
        quantity="kolmogorov_width", n=n, gamma=None, value=value,
        direction="upper",
        witness={"kind": "piecewise-constant-cells", "cells": n,
                 "worst_param": float(tset.params[int(np.argmax(resid))])},
    )
    return cert, tset.approximant_cells(n)


def transport_comparison(tset: TransportSet, n: int) -> WidthCertificate:
    """Lipschitz-width certificate from the transport Kolmogorov witness."""
    dn, coeffs = transport_kolmogorov_upper(tset, n)
    basis = tset.cell_basis(n)
    approx = coeffs @ basis
    # pick the reference origin with the smallest reach among a few candidates
    cand_idx = [tset.size // 2, 0, tset.size - 1]
    best_g0 = None
    best_reach = math.inf
    for ci in cand_idx:
        g0 = approx[ci]
        reach = float(np.asarray(tset.space.norm(approx - g0)).max())
        if reach < best_reach:
            best_reach, best_g0 = reach, g0
    return kolmogorov_comparison(tset, dn, basis, approx, g0=best_g0,
                                 domain_sampler="general")


# ---------------------------------------------------------------------------
# Diagonal set and cross-polytope closed form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagonalSetSpec:
    """Vertices +-e_j / sqrt(log2(j+1)) of the weighted-l1 ball sample."""

    truncation: int = 64

    def __post_init__(self):
        if self.truncation < 2:
            raise PreconditionError("truncation must be at least 2")

    def weight(self, j: int) -> float:
        return math.sqrt(math.log2(j + 1))

    def member(self, y: np.ndarray) -> bool:
        w = np.sqrt(np.log2(np.arange(1, len(y) + 1) + 1.0))
        return float(np.abs(y) @ w) <= 1.0 + 1e-12


def diagonal_set(spec: DiagonalSetSpec) -> PointSet:
    m = spec.truncation
    w = np.sqrt(np.log2(np.arange(1, m + 1) + 1.0))
    pts = np.concatenate([np.diag(1.0 / w), np.diag(-1.0 / w)], axis=0)
    return PointSet(NormedSpace(m, "l2"), pts)


def diagonal_reference_upper(n: int) -> float:
    """Residual of span{e_1..e_n} on the diagonal set: 1/sqrt(log2(n+2))."""
    return 1.0 / math.sqrt(math.log2(n + 2))


def cross_polytope_width(n: int) -> float:
    """Kolmogorov n-width of the scaled 2n-dimensional cross-polytope.

    Classical closed form (Stechkin): (1/sqrt(2)) * (log2(2n+1))^(-1/2).
    """
    if n < 1:
        raise PreconditionError("n must be positive")
    return (1.0 / math.sqrt(2.0)) * math.log2(2 * n + 1) ** (-0.5)


def octahedron_set(n: int) -> PointSet:
    """Vertices +-e_j / sqrt(log2(2n+1)), j <= 2n, in l2 of dimension 2n."""
    scale = 1.0 / math.sqrt(math.log2(2 * n + 1))
    eye = np.eye(2 * n) * scale
    pts = np.concatenate([eye, -eye], axis=0)
    return PointSet(NormedSpace(2 * n, "l2"), pts)
