"""Packing, covering, and inner-entropy computation with certified brackets.

The certified chain used throughout is

    P_eps  >=  N_eps  >=  P_{2 eps}

for the maximal packing number P and the minimal inner covering number N.
On small sets (<= N_EXACT points) the covering number is computed exactly
by branch and bound; on larger sets every reported bound is witnessed:

  * upper bounds on N_eps by an explicit cover (a maximal packing is a
    cover of the same radius, so greedy maximality is already a witness);
  * lower bounds on N_eps by a set of points no single inner ball of
    radius eps can contain two of (a packing at 2*eps is the classical
    special case obtained through the triangle inequality).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .spaces import FiniteSet, PreconditionError

# Exact set-cover threshold: above this, brackets fall back to witnesses.
N_EXACT = 20
# Strictness slack for the packing inequality "distance > eps".
PACK_SLACK = 1e-12
# Binary search stopping rule: absolute width or iteration cap.
SEARCH_ABS = 1e-12
SEARCH_ITERS = 60


@dataclass(frozen=True)
class PackingResult:
    eps: float
    indices: tuple
    size: int
    maximal: bool  # False when the scan stopped early at a requested size


@dataclass(frozen=True)
class CoveringResult:
    eps: float
    center_indices: tuple
    exact: bool

    @property
    def size(self) -> int:
        return len(self.center_indices)


@dataclass(frozen=True)
class EntropyEstimate:
    n: int
    lower: float
    upper: float
    exact: bool
    upper_witness: dict = field(default_factory=dict, compare=False)
    lower_witness: dict = field(default_factory=dict, compare=False)


def greedy_packing(fset: FiniteSet, eps: float, stop_above: Optional[int] = None) -> PackingResult:
    """Sequential packing scan in point order; lowest index wins ties.

    A point is admitted iff its distance to every admitted point exceeds
    eps (with a 1e-12 relative slack to avoid float equality ambiguity).
    Without ``stop_above`` the result is maximal, so its size is at most
    P_eps and, the packing being an eps-cover, at least N_eps.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    thr = eps * (1.0 + PACK_SLACK)
    m = fset.size
    mind = np.full(m, np.inf)
    chosen: list[int] = []
    for i in range(m):
        if mind[i] > thr:
            chosen.append(i)
            if stop_above is not None and len(chosen) > stop_above:
                return PackingResult(eps, tuple(chosen), len(chosen), maximal=False)
            np.minimum(mind, fset.dist_row(i), out=mind)
    return PackingResult(eps, tuple(chosen), len(chosen), maximal=True)


def packing_is_maximal(fset: FiniteSet, pack: PackingResult) -> bool:
    """Independent maximality audit: no point admissible beyond the packing."""
    thr = pack.eps * (1.0 + PACK_SLACK)
    idx = np.asarray(pack.indices)
    for i in range(fset.size):
        if i in pack.indices:
            continue
        if float(fset.dist_row(i)[idx].min()) > thr:
            return False
    return True


def coverage_assignment(fset: FiniteSet, centers, eps: float) -> np.ndarray:
    """Nearest-center assignment; raises if some point is farther than eps."""
    centers = np.asarray(centers)
    m = fset.size
    assign = np.empty(m, dtype=int)
    for i in range(m):
        d = fset.dist_row(i)[centers]
        j = int(np.argmin(d))
        if d[j] > eps * (1.0 + PACK_SLACK):
            raise PreconditionError(f"point {i} not covered at eps={eps}")
        assign[i] = j
    return assign


# ---------------------------------------------------------------------------
# Exact minimal inner covering (branch and bound over bitmask coverage sets)
# ---------------------------------------------------------------------------


def _cover_masks(fset: FiniteSet, eps: float) -> list[int]:
    masks = []
    for c in range(fset.size):
        row = fset.dist_row(c)
        bits = 0
        for p in np.nonzero(row <= eps)[0]:
            bits |= 1 << int(p)
        masks.append(bits)
    return masks


def _witness_lower_bound(uncovered: int, comask: list[int]) -> int:
    """Greedy count of uncovered elements pairwise not co-coverable."""
    count = 0
    rest = uncovered
    while rest:
        e = (rest & -rest).bit_length() - 1
        count += 1
        rest &= ~comask[e]
    return count


def exact_min_cover(masks: list[int], m: int, limit: Optional[int] = None):
    """Minimum set cover of {0..m-1} by the given coverage masks.

    Returns (size, centers) or None when ``limit`` is set and every cover
    needs more than ``limit`` sets.  Deterministic branch and bound: the
    branching element is the uncovered point with fewest covering centers,
    candidate centers are ordered by fresh coverage (ties by index).
    """
    full = (1 << m) - 1
    coverers: list[list[int]] = [[] for _ in range(m)]
    for c, mask in enumerate(masks):
        w = mask
        while w:
            e = (w & -w).bit_length() - 1
            coverers[e].append(c)
            w &= w - 1
    if any(not cov for cov in coverers):
        raise PreconditionError("a point is covered by no ball (eps too small?)")
    comask = [0] * m
    for e in range(m):
        acc = 0
        for c in coverers[e]:
            acc |= masks[c]
        comask[e] = acc

    # Greedy upper bound (max fresh coverage, lowest index on ties).
    chosen = []
    rest = full
    while rest:
        best_c, best_gain = -1, -1
        for c in range(m):
            gain = bin(masks[c] & rest).count("1")
            if gain > best_gain:
                best_c, best_gain = c, gain
        chosen.append(best_c)
        rest &= ~masks[best_c]
    best_size = len(chosen)
    best_sol = tuple(sorted(chosen))
    cap = best_size if limit is None else min(best_size, limit + 1)

    def dfs(uncovered: int, picked: list[int]):
        nonlocal best_size, best_sol, cap
        if uncovered == 0:
            if len(picked) < cap or (len(picked) < best_size):
                best_size = len(picked)
                best_sol = tuple(sorted(picked))
                cap = min(cap, best_size)
            return
        if len(picked) + _witness_lower_bound(uncovered, comask) >= cap:
            return
        w = uncovered
        branch_e, branch_deg = -1, m + 1
        while w:
            e = (w & -w).bit_length() - 1
            deg = sum(1 for c in coverers[e] if masks[c] & uncovered)
            if deg < branch_deg:
                branch_e, branch_deg = e, deg
            w &= w - 1
        cands = sorted(
            (c for c in coverers[branch_e]),
            key=lambda c: (-bin(masks[c] & uncovered).count("1"), c),
        )
        for c in cands:
            picked.append(c)
            dfs(uncovered & ~masks[c], picked)
            picked.pop()

    dfs(full, [])
    if limit is not None and best_size > limit:
        return None
    return best_size, best_sol


def minimal_inner_covering(fset: FiniteSet, eps: float) -> CoveringResult:
    """Minimal inner eps-cover: exact for <= N_EXACT points, else greedy.

    The greedy fallback is a valid cover (hence a certified upper bound on
    the covering number) but carries ``exact=False``.
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    m = fset.size
    if m <= N_EXACT:
        masks = _cover_masks(fset, eps)
        size, centers = exact_min_cover(masks, m)
        return CoveringResult(eps, centers, exact=True)
    covered = np.zeros(m, dtype=bool)
    centers = []
    while not covered.all():
        best_c, best_gain = -1, -1
        for c in range(m):
            gain = int((~covered & (fset.dist_row(c) <= eps)).sum())
            if gain > best_gain:
                best_c, best_gain = c, gain
        if best_gain <= 0:
            raise PreconditionError("greedy cover stalled")  # cannot happen: c covers itself
        centers.append(best_c)
        covered |= fset.dist_row(best_c) <= eps
    return CoveringResult(eps, tuple(centers), exact=False)


def covering_lower_bound(fset: FiniteSet, eps: float, stop_above: Optional[int] = None) -> int:
    """Certified lower bound on the inner covering number N_eps.

    Greedily collects points such that no single ball B(c, eps) with c in
    the set contains two of them; any eps-cover then needs one ball per
    collected point.  Subsumes the packing-at-2*eps bound.
    """
    m = fset.size
    md = np.full(m, np.inf)  # min distance from each center to chosen witnesses
    count = 0
    for q in range(m):
        row = fset.dist_row(q)
        if not bool(np.any((row <= eps) & (md <= eps))):
            count += 1
            if stop_above is not None and count > stop_above:
                return count
            np.minimum(md, row, out=md)
    return count


# ---------------------------------------------------------------------------
# Inner entropy numbers via memoised monotone bisection
# ---------------------------------------------------------------------------


def _rank_cache(fset: FiniteSet, kind: str, eps: float, compute: Callable[[], object]):
    """Memoise predicate evaluations by the rank of eps among distances.

    Every quantity below depends on eps only through which pairwise
    distances exceed it, so evaluations collapse onto distance ranks.
    """
    dd = fset._cache.get("_dd")
    if dd is None:
        dd = fset.distinct_distances()
        fset._cache["_dd"] = dd
    slack = 1.0 + PACK_SLACK if kind.startswith("pack") else 1.0
    rank = int(np.searchsorted(dd, eps * slack, side="right"))
    key = (kind, rank)
    if key not in fset._cache:
        fset._cache[key] = compute()
    return fset._cache[key]


def _cover_upper_size(fset: FiniteSet, eps: float, budget: int):
    """(size, centers) certifying N_eps <= size, early-exited above budget."""
    if fset.size <= N_EXACT:
        def run():
            return exact_min_cover(_cover_masks(fset, eps), fset.size)
        size, centers = _rank_cache(fset, "cover", eps, run)
        return size, centers
    def run():
        return greedy_packing(fset, eps, stop_above=budget)
    pack = _rank_cache(fset, f"pack{budget}", eps, run)
    return pack.size, pack.indices


def _cover_lower_size(fset: FiniteSet, eps: float, budget: int) -> int:
    """Certified lower bound on N_eps, early-exited above budget."""
    if fset.size <= N_EXACT:
        def run():
            return exact_min_cover(_cover_masks(fset, eps), fset.size)
        size, _ = _rank_cache(fset, "cover", eps, run)
        return size
    def run():
        return covering_lower_bound(fset, eps, stop_above=budget)
    return _rank_cache(fset, f"lb{budget}", eps, run)


def _bisect_smallest_true(pred, lo: float, hi: float):
    """Smallest eps in (lo, hi] with pred true; pred monotone false->true."""
    it = 0
    while hi - lo > SEARCH_ABS and it < SEARCH_ITERS:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
        it += 1
    return lo, hi


def inner_entropy(fset: FiniteSet, n: int) -> EntropyEstimate:
    """Certified bracket [lower, upper] for the inner entropy number.

    ``upper`` carries an explicit cover of at most 2**n inner balls at that
    radius; ``lower`` is a radius at which a covering-number lower bound
    exceeded 2**n.  With exact covers (small sets) the bracket closes to the
    bisection tolerance.
    """
    if n < 0:
        raise PreconditionError("n must be nonnegative")
    m = fset.size
    budget = 1 << n
    if budget >= m:
        # every point can be its own center
        return EntropyEstimate(n, 0.0, 0.0, exact=True,
                               upper_witness={"kind": "identity", "size": m})
    diam = fset.diameter()
    if diam == 0.0:
        return EntropyEstimate(n, 0.0, 0.0, exact=True,
                               upper_witness={"kind": "singleton"})

    exact = m <= N_EXACT

    def pred_up(eps: float) -> bool:
        size, _ = _cover_upper_size(fset, eps, budget)
        return size <= budget

    def pred_lb(eps: float) -> bool:
        return _cover_lower_size(fset, eps, budget) > budget

    if not pred_up(diam):
        # packing slack can leave >1 admitted at eps=diam on degenerate data
        hi0 = diam * (1.0 + 10 * PACK_SLACK)
    else:
        hi0 = diam
    _, upper = _bisect_smallest_true(pred_up, 0.0, hi0)
    if pred_lb(diam):  # cannot happen for budget >= 1; guard anyway
        lower = diam
    else:
        lower, _ = _bisect_smallest_true(lambda e: not pred_lb(e), 0.0, diam)
    lower = min(lower, upper)

    size_up, centers_up = _cover_upper_size(fset, upper, budget)
    lb_at = _cover_lower_size(fset, lower, budget) if lower > 0 else None
    return EntropyEstimate(
        n,
        lower,
        upper,
        exact=exact,
        upper_witness={
            "kind": "exact-cover" if exact else "maximal-packing-cover",
            "eps": upper,
            "size": int(size_up),
            "centers": [int(c) for c in centers_up],
        },
        lower_witness={
            "kind": "exact-cover" if exact else "ball-disjoint-witnesses",
            "eps": lower,
            "count": None if lb_at is None else int(lb_at),
        },
    )


# ---------------------------------------------------------------------------
# Sandwich audit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SandwichAudit:
    eps: float
    pack_eps: int
    cover_lower: int
    cover_upper: int
    cover_exact: bool
    pack_2eps: int
    checks: tuple
    passed: bool


def sandwich_audit(fset: FiniteSet, eps: float) -> SandwichAudit:
    """Evaluate the packing/covering chain at eps and report each inequality.

    With exact covers the audited chain is exactly
    P_eps >= N_eps >= P_{2 eps}; otherwise each side is checked against its
    certified surrogate (cover bracket [lower, upper]).
    """
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    pack1 = greedy_packing(fset, eps)
    pack2 = greedy_packing(fset, 2.0 * eps)
    cov = minimal_inner_covering(fset, eps)
    if cov.exact:
        n_lo = n_hi = cov.size
    else:
        n_hi = min(cov.size, pack1.size)  # both are valid covers
        n_lo = covering_lower_bound(fset, eps)
    checks = (
        ("packing(eps) >= cover_lower(eps)", pack1.size, n_lo, pack1.size >= n_lo),
        ("cover_upper(eps) >= packing(2eps)", n_hi, pack2.size, n_hi >= pack2.size),
        ("cover bracket consistent", n_hi, n_lo, n_hi >= n_lo),
    )
    return SandwichAudit(
        eps=eps,
        pack_eps=pack1.size,
        cover_lower=n_lo,
        cover_upper=n_hi,
        cover_exact=cov.exact,
        pack_2eps=pack2.size,
        checks=checks,
        passed=all(c[-1] for c in checks),
    )
