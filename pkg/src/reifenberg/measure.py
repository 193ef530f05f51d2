"""Discrete measures: weighted point clouds with ball queries.

A :class:`DiscreteMeasure` stands in for a Borel measure. Balls are open
(``|p - c| < r``) unless a query passes ``closed=True``.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptySliceError, InputError
from .geometry import Ball

BRUTE_FORCE_MAX = 64
_INFLATE = 1e-9
WEIGHT_LEVELS_MAX = 8


def unit_ball_volume(k: int) -> float:
    """Volume ``omega_k`` of the unit ball in R^k."""
    return math.pi ** (k / 2) / math.gamma(k / 2 + 1)


class _BruteIndex:
    def __init__(self, points):
        self.points = points

    def candidates(self, center, radius):
        return np.arange(len(self.points))


class _TreeIndex:
    def __init__(self, points):
        self.tree = cKDTree(points)

    def candidates(self, center, radius):
        idx = self.tree.query_ball_point(center, radius * (1 + _INFLATE) + _INFLATE)
        return np.asarray(idx, dtype=np.intp)


class DiscreteMeasure:
    """Weighted point cloud in R^n.

    Parameters
    ----------
    points : (N, n) array_like
    weights : (N,) array_like, optional
        Nonnegative; defaults to ones.

    Notes
    -----
    The index is brute force for at most ``BRUTE_FORCE_MAX`` points and a
    k-d tree otherwise. Either way, membership is decided by the same exact
    test, so results do not depend on which index answered.
    """

    def __init__(self, points, weights=None):
        P = np.asarray(points, dtype=float)
        if P.ndim == 1:
            P = P[None, :]
        if P.ndim != 2 or P.shape[0] == 0 or P.shape[1] == 0:
            raise InputError("points must be a nonempty (N, n) array")
        W = np.ones(len(P)) if weights is None else np.asarray(weights, dtype=float).reshape(-1)
        if W.shape[0] != P.shape[0]:
            raise InputError("weights and points differ in length")
        if not (np.all(np.isfinite(P)) and np.all(np.isfinite(W))):
            raise InputError("non-finite coordinates or weights")
        if np.any(W < 0):
            raise InputError("weights must be nonnegative")
        if not W.sum() > 0:
            raise InputError("total mass must be positive")
        P = P.copy()
        W = W.copy()
        P.setflags(write=False)
        W.setflags(write=False)
        self.points = P
        self.weights = W
        self._index = _BruteIndex(P) if len(P) <= BRUTE_FORCE_MAX else _TreeIndex(P)

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    @cached_property
    def tree(self) -> cKDTree:
        if isinstance(self._index, _TreeIndex):
            return self._index.tree
        return cKDTree(self.points)

    @cached_property
    def uniform_weight(self) -> Optional[float]:
        w0 = float(self.weights[0])
        return w0 if np.all(self.weights == w0) else None

    @cached_property
    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.points).tobytes())
        h.update(np.ascontiguousarray(self.weights).tobytes())
        return h.hexdigest()

    def query(self, center, radius: float, closed: bool = False) -> np.ndarray:
        """Sorted indices of points in the ball."""
        c = np.asarray(center, dtype=float)
        if c.shape != (self.n,):
            raise InputError(f"center must have dimension {self.n}")
        cand = self._index.candidates(c, radius)
        if len(cand) == 0:
            return cand
        d = np.sqrt(np.sum((self.points[cand] - c) ** 2, axis=1))
        keep = d <= radius if closed else d < radius
        return np.sort(cand[keep])

    def brute_query(self, center, radius: float, closed: bool = False) -> np.ndarray:
        c = np.asarray(center, dtype=float)
        d = np.sqrt(np.sum((self.points - c) ** 2, axis=1))
        return np.flatnonzero(d <= radius if closed else d < radius)

    def ball_masses(self, centers, radius: float) -> np.ndarray:
        """``mu(B_radius(c))`` for every row of ``centers`` (open balls)."""
        C = np.atleast_2d(np.asarray(centers, dtype=float))
        r = np.nextafter(radius, 0.0)
        if self.uniform_weight is not None:
            counts = self.tree.query_ball_point(C, r, return_length=True)
            return np.asarray(counts, dtype=float) * self.uniform_weight
        levels, inv = self._weight_levels
        if len(levels) <= WEIGHT_LEVELS_MAX:
            # a few distinct weights: count each level separately
            out = np.zeros(len(C))
            for w, tree in zip(levels, self._level_trees):
                out += w * np.asarray(tree.query_ball_point(C, r, return_length=True), dtype=float)
            return out
        other = cKDTree(C)
        pairs = other.sparse_distance_matrix(self.tree, r, output_type="ndarray")
        out = np.zeros(len(C))
        if len(pairs):
            np.add.at(out, pairs["i"], self.weights[pairs["j"]])
        return out

    @cached_property
    def _weight_levels(self):
        return np.unique(self.weights, return_inverse=True)

    @cached_property
    def _level_trees(self) -> list:
        levels, inv = self._weight_levels
        return [cKDTree(self.points[inv.reshape(-1) == i]) for i in range(len(levels))]

    def subset(self, idx) -> "DiscreteMeasure":
        return DiscreteMeasure(self.points[idx], self.weights[idx])


@dataclass(frozen=True, eq=False)
class MeasureSlice:
    """Restriction of a measure to a ball, stored as member indices."""

    parent: DiscreteMeasure
    indices: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return self.parent.points[self.indices]

    @property
    def weights(self) -> np.ndarray:
        return self.parent.weights[self.indices]

    @property
    def mass(self) -> float:
        return float(self.weights.sum())

    def __len__(self) -> int:
        return len(self.indices)

    def restrict(self, B: Ball, closed: bool = False) -> "MeasureSlice":
        d = np.sqrt(np.sum((self.points - B.center) ** 2, axis=1))
        keep = d <= B.radius if closed else d < B.radius
        return MeasureSlice(self.parent, self.indices[keep])


def restrict(m: DiscreteMeasure, B: Ball, closed: bool = False) -> MeasureSlice:
    return MeasureSlice(m, m.query(B.center, B.radius, closed=closed))


def mass_in_ball(m: DiscreteMeasure, B: Ball, closed: bool = False) -> float:
    idx = m.query(B.center, B.radius, closed=closed)
    return float(m.weights[idx].sum())


def center_of_mass(m: DiscreteMeasure, B: Ball, closed: bool = False) -> np.ndarray:
    """Weighted mean of the slice ``m ∩ B``."""
    s = restrict(m, B, closed=closed)
    w = s.weights
    tot = w.sum()
    if not tot > 0:
        raise EmptySliceError(f"no mass in ball of radius {B.radius} at {B.center.tolist()}")
    return (w[:, None] * s.points).sum(axis=0) / tot


# ---------------------------------------------------------------- file formats


def write_measure(m: DiscreteMeasure, path) -> None:
    path = Path(path)
    if path.suffix.lower() == ".json":
        doc = {"dim": m.n, "points": m.points.tolist(), "weights": m.weights.tolist()}
        path.write_text(json.dumps(doc))
        return
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"x{i + 1}" for i in range(m.n)] + ["w"])
        for p, wt in zip(m.points, m.weights):
            w.writerow([f"{v:.17g}" for v in p] + [f"{wt:.17g}"])


def read_measure(path) -> DiscreteMeasure:
    path = Path(path)
    if not path.exists():
        raise InputError(f"no such file: {path}")
    if path.suffix.lower() == ".json":
        try:
            doc = json.loads(path.read_text())
            pts = np.asarray(doc["points"], dtype=float)
            if pts.ndim != 2 or pts.shape[1] != int(doc["dim"]):
                raise InputError("'dim' does not match point arrays")
            return DiscreteMeasure(pts, doc.get("weights"))
        except (KeyError, ValueError, TypeError) as exc:
            raise InputError(f"malformed measure JSON {path}: {exc}") from exc
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"empty CSV {path}")
    header = [h.strip() for h in rows[0]]
    coords = [i for i, h in enumerate(header) if h.startswith("x")]
    if not coords:
        raise InputError("CSV header must contain x1..xn columns")
    wcol = header.index("w") if "w" in header else None
    try:
        data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    except ValueError as exc:
        raise InputError(f"non-numeric entry in {path}: {exc}") from exc
    if data.size == 0:
        raise InputError(f"no data rows in {path}")
    weights = data[:, wcol] if wcol is not None else None
    return DiscreteMeasure(data[:, coords], weights)
