"""Normed spaces, finite point clouds, and elementary size measures.

A :class:`NormedSpace` fixes the ambient norm; a :class:`FiniteSet` is the
computational stand-in for a compact set.  Distances are always served row
by row so that closed-form (oracle) sets can avoid materialising either the
coordinates or the full distance matrix.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

# Absolute tolerance for "is this norm zero" tests.
TOL_ZERO = 1e-12
# Relative tolerance used whenever two certified bounds are compared.
REL_TOL = 1e-9
# Largest set for which a dense pairwise distance matrix is cached.
DENSE_LIMIT = 4096

NORM_KINDS = ("l1", "l2", "linf", "wlinf", "l1step")


class DimensionMismatch(ValueError):
    """A point does not conform to the space it is used in."""


class PreconditionError(ValueError):
    """A documented precondition of an operation failed."""


@dataclass(frozen=True)
class NormedSpace:
    """Finite-dimensional normed space with a tagged norm descriptor.

    kind:
        "l1", "l2", "linf"  -- the usual p-norms,
        "wlinf"             -- max_i weights[i] * |x_i| with positive weights,
        "l1step"            -- step functions on [0, 2]; a point holds the
                               value on each cell of ``cell_edges`` and the
                               norm is the exact interval sum of |v| * dx.
    """

    dim: int
    kind: str
    weights: Optional[tuple] = None
    cell_edges: Optional[tuple] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if self.kind not in NORM_KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}")
        if self.kind == "wlinf":
            if self.weights is None or len(self.weights) != self.dim:
                raise ValueError("wlinf needs one positive weight per coordinate")
            if any(w <= 0 for w in self.weights):
                raise ValueError("wlinf weights must be positive")
        if self.kind == "l1step":
            edges = self.cell_edges
            if edges is None or len(edges) != self.dim + 1:
                raise ValueError("l1step needs dim+1 cell edges")
            if abs(edges[0]) > TOL_ZERO or abs(edges[-1] - 2.0) > TOL_ZERO:
                raise ValueError("l1step cell edges must span [0, 2]")
            if any(b <= a for a, b in zip(edges, edges[1:])):
                raise ValueError("l1step cell edges must be strictly increasing")

    def _check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise DimensionMismatch(
                f"point of dimension {x.shape[-1]} in space of dimension {self.dim}"
            )
        return x

    def norm(self, x) -> float | np.ndarray:
        """Norm of one point or of a batch of points (leading axes kept)."""
        x = self._check(x)
        if self.kind == "l1":
            out = np.abs(x).sum(axis=-1)
        elif self.kind == "l2":
            out = np.sqrt((x * x).sum(axis=-1))
        elif self.kind == "linf":
            out = np.abs(x).max(axis=-1)
        elif self.kind == "wlinf":
            out = (np.abs(x) * np.asarray(self.weights)).max(axis=-1)
        else:  # l1step
            dx = np.diff(np.asarray(self.cell_edges))
            out = (np.abs(x) * dx).sum(axis=-1)
        return float(out) if out.ndim == 0 else out

    def dist(self, x, y) -> float | np.ndarray:
        return self.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float))

    def to_json(self) -> dict:
        doc = {"dim": self.dim, "norm": {"kind": self.kind}}
        if self.weights is not None:
            doc["norm"]["weights"] = list(self.weights)
        if self.cell_edges is not None:
            doc["norm"]["cell_edges"] = list(self.cell_edges)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "NormedSpace":
        norm = doc["norm"]
        return cls(
            dim=int(doc["dim"]),
            kind=norm["kind"],
            weights=tuple(norm["weights"]) if "weights" in norm else None,
            cell_edges=tuple(norm["cell_edges"]) if "cell_edges" in norm else None,
        )


def lp_space(dim: int, p) -> NormedSpace:
    kind = {1: "l1", 2: "l2", "inf": "linf", np.inf: "linf"}[p]
    return NormedSpace(dim=dim, kind=kind)


def step_space(cell_edges: Sequence[float]) -> NormedSpace:
    edges = tuple(float(t) for t in cell_edges)
    return NormedSpace(dim=len(edges) - 1, kind="l1step", cell_edges=edges)


@dataclass(frozen=True)
class BoundValue:
    """A one-sided (or exact) numeric bound."""

    value: float
    direction: str  # "upper" | "lower" | "exact"

    def __post_init__(self):
        if self.direction not in ("upper", "lower", "exact"):
            raise ValueError("direction must be upper/lower/exact")
        if self.value < 0:
            raise ValueError("bound values are nonnegative")


class FiniteSet:
    """Base class: a finite metric sample with row-wise distance access.

    Subclasses must provide ``size``, ``space``, and ``dist_row``.  The
    mutable ``_cache`` dict is shared by the covering/packing searches to
    memoise predicate evaluations on the same set.
    """

    size: int
    space: NormedSpace

    def __init__(self):
        self._cache: dict = {}

    def dist_row(self, i: int) -> np.ndarray:
        raise NotImplementedError

    def dist(self, i: int, j: int) -> float:
        return float(self.dist_row(i)[j])

    def diameter(self) -> float:
        best = 0.0
        for i in range(self.size):
            best = max(best, float(self.dist_row(i).max()))
        return best

    def distinct_distances(self) -> np.ndarray:
        """Sorted positive pairwise distance values (used to memoise searches)."""
        rows = [self.dist_row(i) for i in range(self.size)]
        vals = np.unique(np.concatenate(rows))
        return vals[vals > 0.0]


class PointSet(FiniteSet):
    """Explicit point cloud in a normed space.

    A closed-form distance matrix may be injected by constructors that know
    one (it must agree with the space norm; tests audit this).
    """

    def __init__(self, space: NormedSpace, points, labels=None, dist_matrix=None):
        super().__init__()
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-d array")
        if pts.shape[0] == 0:
            raise ValueError("empty point set")
        if pts.shape[1] != space.dim:
            raise DimensionMismatch(
                f"points of dimension {pts.shape[1]} in space of dimension {space.dim}"
            )
        self.space = space
        self.points = pts
        self.labels = list(labels) if labels is not None else None
        self.size = pts.shape[0]
        self._matrix = None
        if dist_matrix is not None:
            m = np.asarray(dist_matrix, dtype=float)
            if m.shape != (self.size, self.size):
                raise ValueError("dist_matrix shape mismatch")
            self._matrix = m

    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            if self.size > DENSE_LIMIT:
                raise PreconditionError(
                    f"dense distance matrix refused for {self.size} points"
                )
            diffs = self.points[:, None, :] - self.points[None, :, :]
            self._matrix = np.asarray(self.space.norm(diffs))
        return self._matrix

    def dist_row(self, i: int) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix[i]
        if self.size <= DENSE_LIMIT:
            return self.matrix()[i]
        return np.asarray(self.space.norm(self.points - self.points[i]))

    def dist_to(self, x) -> np.ndarray:
        """Distances from an arbitrary ambient point to every set point."""
        return np.asarray(self.space.norm(self.points - np.asarray(x, dtype=float)))

    def diameter(self) -> float:
        return float(self.matrix().max()) if self.size <= DENSE_LIMIT else super().diameter()

    def distinct_distances(self) -> np.ndarray:
        key = "distinct"
        if key not in self._cache:
            vals = np.unique(self.matrix())
            self._cache[key] = vals[vals > 0.0]
        return self._cache[key]

    def translated(self, center) -> "PointSet":
        return PointSet(self.space, self.points - np.asarray(center, dtype=float))

    def to_json(self) -> dict:
        doc = {"space": self.space.to_json(), "points": self.points.tolist()}
        if self.labels is not None:
            doc["labels"] = self.labels
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "PointSet":
        return cls(
            NormedSpace.from_json(doc["space"]),
            np.asarray(doc["points"], dtype=float),
            labels=doc.get("labels"),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "PointSet":
        return cls.from_json(json.loads(text))


def diameter(fset: FiniteSet) -> float:
    """Exact max pairwise distance (full scan)."""
    if fset.size < 1:
        raise PreconditionError("empty set")
    return fset.diameter()


@dataclass(frozen=True)
class RadiusBound:
    """Two-sided Chebyshev-radius bracket with the certifying center.

    ``upper`` comes from the best candidate center (any center gives a valid
    upper bound); ``lower`` is diameter/2, valid in every normed space.
    """

    upper: float
    lower: float
    center_index: Optional[int]
    center_point: Optional[np.ndarray] = field(default=None, compare=False)


def radius_upper(fset: FiniteSet) -> RadiusBound:
    """Candidate-center radius bracket.

    Candidates are every set point plus, when coordinates are available,
    the coordinate-wise mean.  The returned upper bound dominates rad(K),
    which is all the width constructions need.
    """
    if fset.size < 1:
        raise PreconditionError("empty set")
    best = math.inf
    best_idx = 0
    for i in range(fset.size):
        far = float(fset.dist_row(i).max())
        if far < best:
            best, best_idx = far, i
    center_pt = None
    center_idx: Optional[int] = best_idx
    if isinstance(fset, PointSet):
        mean = fset.points.mean(axis=0)
        far = float(fset.dist_to(mean).max())
        if far < best:
            best = far
            center_idx = None
            center_pt = mean
        else:
            center_pt = fset.points[best_idx]
    lower = fset.diameter() / 2.0
    return RadiusBound(upper=best, lower=lower, center_index=center_idx, center_point=center_pt)
