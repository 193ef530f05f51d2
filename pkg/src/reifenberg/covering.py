"""Greedy coverings, disjoint selections and content estimators.

Contents are inf/sup over infinite families, so every estimator returns a
certified one-sided bound together with the family realizing it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .errors import InputError, InternalConsistencyError
from .geometry import Ball
from .measure import unit_ball_volume

HAUSDORFF_FLOOR_EXP = 20


@dataclass(frozen=True, eq=False)
class BallFamily:
    balls: list
    tags: Optional[list] = None

    @property
    def centers(self) -> np.ndarray:
        return np.array([b.center for b in self.balls]) if self.balls else np.zeros((0, 0))

    @property
    def radii(self) -> np.ndarray:
        return np.array([b.radius for b in self.balls])

    def __len__(self) -> int:
        return len(self.balls)

    @classmethod
    def from_arrays(cls, centers, radii, tags=None) -> "BallFamily":
        return cls([Ball(c, r) for c, r in zip(np.atleast_2d(centers), np.broadcast_to(radii, (len(centers),)))], tags)

    def covers(self, points, closed: bool = True) -> np.ndarray:
        """Boolean mask: which points lie in some ball of the family."""
        P = np.atleast_2d(np.asarray(points, dtype=float))
        hit = np.zeros(len(P), dtype=bool)
        if not self.balls:
            return hit
        tree = cKDTree(P)
        for b in self.balls:
            idx = np.asarray(tree.query_ball_point(b.center, b.radius * (1 + 1e-9) + 1e-12), dtype=int)
            if len(idx):
                hit[idx[b.contains(P[idx], closed=closed)]] = True
        return hit

    def pairwise_disjoint(self) -> bool:
        """Open balls are disjoint iff center distance >= sum of radii."""
        if len(self.balls) < 2:
            return True
        C, R = self.centers, self.radii
        tree = cKDTree(C)
        for i, j in tree.query_pairs(2 * R.max()):
            if np.linalg.norm(C[i] - C[j]) < R[i] + R[j]:
                return False
        return True


@dataclass(frozen=True, eq=False)
class ContentReport:
    kind: str
    k: int
    scale: float
    value: float
    certificate: BallFamily = field(repr=False)

    def recompute(self) -> float:
        return float(unit_ball_volume(self.k) * np.sum(self.certificate.radii ** self.k)) if len(self.certificate) else 0.0

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "k": self.k,
            "scale": self.scale,
            "value": self.value,
            "certificate": [b.to_dict() for b in self.certificate.balls],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


# ------------------------------------------------------------------ selections


def vitali_select(F: BallFamily) -> BallFamily:
    """Greedy disjoint subfamily, largest radius first.

    Raises if the 5x dilations of the output fail to contain every input ball.
    """
    if not F.balls:
        return BallFamily([])
    C, R = F.centers, F.radii
    order = np.argsort(-R, kind="stable")
    chosen: list[int] = []
    for i in order:
        if chosen:
            d = np.linalg.norm(C[chosen] - C[i], axis=1)
            if np.any(d < R[chosen] + R[i]):
                continue
        chosen.append(int(i))
    out = BallFamily([F.balls[i] for i in chosen], [F.tags[i] for i in chosen] if F.tags else None)
    if not dilation_covers(out, F, 5.0):
        raise InternalConsistencyError("5x dilations of the Vitali subfamily miss an input ball")
    return out


def dilation_covers(selected: BallFamily, family: BallFamily, factor: float) -> bool:
    """Each ball of ``family`` lies inside some ``factor``-dilated ball of ``selected``."""
    if not family.balls:
        return True
    if not selected.balls:
        return False
    S, R = selected.centers, selected.radii * factor
    for b in family.balls:
        d = np.linalg.norm(S - b.center, axis=1)
        if not np.any(d + b.radius <= R * (1 + 1e-12)):
            return False
    return True


RadiusSpec = Union[float, Sequence[float], np.ndarray, Callable[[np.ndarray], float]]


def _radii(points: np.ndarray, radius_fn: RadiusSpec) -> np.ndarray:
    if callable(radius_fn):
        return np.array([float(radius_fn(p)) for p in points])
    return np.broadcast_to(np.asarray(radius_fn, dtype=float), (len(points),)).copy()


def maximal_disjoint(points, radius_fn: RadiusSpec, shrink: float = 0.2, tree: Optional[cKDTree] = None) -> np.ndarray:
    """Indices of a maximal subfamily whose ``shrink``-scaled balls are disjoint.

    Points are taken in order of decreasing radius (ties by index). Points
    with nonpositive radius are skipped. Every skipped positive-radius point
    has a shrunken ball meeting a selected shrunken ball.
    """
    if not 0 < shrink <= 1:
        raise InputError("shrink must lie in (0, 1]")
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if len(P) == 0:
        return np.zeros(0, dtype=int)
    R = _radii(P, radius_fn)
    tree = tree if tree is not None else cKDTree(P)
    blocked = R <= 0
    order = np.argsort(-R, kind="stable")
    chosen = []
    for i in order:
        if blocked[i]:
            continue
        chosen.append(int(i))
        idx = np.asarray(tree.query_ball_point(P[i], 2 * shrink * R[i] * (1 + 1e-9)), dtype=int)
        if len(idx):
            d = np.linalg.norm(P[idx] - P[i], axis=1)
            blocked[idx[d < shrink * (R[i] + R[idx])]] = True
        blocked[i] = True
    return np.array(chosen, dtype=int)


# ------------------------------------------------------------------ contents


def _lex_first(P: np.ndarray) -> int:
    return int(np.lexsort(P.T[::-1])[0])


def _diameter_bound(P: np.ndarray) -> float:
    return float(np.linalg.norm(P.max(axis=0) - P.min(axis=0)))


def hausdorff_content(points, k: int, r: float, floor: Optional[float] = None) -> ContentReport:
    """Greedy upper bound on the Hausdorff ``r``-content.

    Centers follow farthest-point order from the lexicographically smallest
    point. Each new center captures the uncovered points within ``r`` and its
    radius is shrunk to the farthest captured point (never below ``floor``,
    default diameter / 2^20).
    """
    if not r > 0:
        raise InputError("scale must be positive")
    P = np.atleast_2d(np.asarray(points, dtype=float))
    floor = _diameter_bound(P) / 2 ** HAUSDORFF_FLOOR_EXP if floor is None else floor
    floor = max(min(floor, r), np.finfo(float).tiny)
    tree = cKDTree(P)
    mind = np.full(len(P), np.inf)
    centers, radii = [], []
    i = _lex_first(P)
    while True:
        reach = mind[i]
        idx = np.asarray(tree.query_ball_point(P[i], r), dtype=int)
        idx = idx[mind[idx] > -np.inf]
        d = np.linalg.norm(P[idx] - P[i], axis=1)
        rad = max(float(d.max()) if len(d) else 0.0, floor)
        centers.append(P[i])
        radii.append(rad)
        _relax(P, tree, mind, i, reach)
        mind[idx[d <= rad]] = -np.inf
        i = int(np.argmax(mind))
        if mind[i] == -np.inf:
            break
    fam = BallFamily.from_arrays(np.array(centers), np.array(radii))
    rep = ContentReport("hausdorff", k, r, 0.0, fam)
    return ContentReport("hausdorff", k, r, rep.recompute(), fam)


def _relax(P, tree, mind, i, reach) -> None:
    # distances to the new center only matter where they beat the current value
    if np.isinf(reach):
        d = np.linalg.norm(P - P[i], axis=1)
        np.minimum(mind, d, out=mind, where=mind > -np.inf)
        return
    idx = np.asarray(tree.query_ball_point(P[i], reach * (1 + 1e-9)), dtype=int)
    if len(idx):
        d = np.linalg.norm(P[idx] - P[i], axis=1)
        live = mind[idx] > -np.inf
        mind[idx[live]] = np.minimum(mind[idx[live]], d[live])


def farthest_point_net(points, r: float, tree: Optional[cKDTree] = None) -> np.ndarray:
    """Indices of a farthest-point ``r``-net: every point within distance < r."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    tree = tree if tree is not None else cKDTree(P)
    i = _lex_first(P)
    net = [i]
    mind = np.full(len(P), np.inf)
    _relax(P, tree, mind, i, np.inf)
    while True:
        j = int(np.argmax(mind))
        if mind[j] < r:
            break
        net.append(j)
        _relax(P, tree, mind, j, mind[j])
    return np.array(net, dtype=int)


def minkowski_content(points, k: int, r: float) -> ContentReport:
    """Net count times ``omega_k r^k`` (upper bound up to the net factor)."""
    if not r > 0:
        raise InputError("scale must be positive")
    P = np.atleast_2d(np.asarray(points, dtype=float))
    net = farthest_point_net(P, r)
    fam = BallFamily.from_arrays(P[net], r)
    return ContentReport("minkowski", k, r, float(len(net) * unit_ball_volume(k) * r ** k), fam)


def packing_content(points, k: int, r: float, halvings: int = 3) -> ContentReport:
    """Greedy lower bound on the packing ``r``-content.

    Disjoint open balls centered in the set are added at radii
    ``r, r/2, ..., r/2^halvings``; within one radius points are scanned in
    lexicographic order.
    """
    if not r > 0:
        raise InputError("scale must be positive")
    P = np.atleast_2d(np.asarray(points, dtype=float))
    order = np.lexsort(P.T[::-1])
    tree = cKDTree(P)
    blocked = np.zeros(len(P), dtype=bool)
    centers: list[int] = []
    radii: list[float] = []
    for h in range(halvings + 1):
        rho = r / 2 ** h
        if centers:
            blocked[:] = False
            C, R = P[centers], np.array(radii)
            for c, rc in zip(C, R):
                idx = np.asarray(tree.query_ball_point(c, (rho + rc) * (1 + 1e-9)), dtype=int)
                if len(idx):
                    d = np.linalg.norm(P[idx] - c, axis=1)
                    blocked[idx[d < rho + rc]] = True
        for i in order:
            if blocked[i]:
                continue
            centers.append(int(i))
            radii.append(rho)
            idx = np.asarray(tree.query_ball_point(P[i], 2 * rho * (1 + 1e-9)), dtype=int)
            if len(idx):
                d = np.linalg.norm(P[idx] - P[i], axis=1)
                blocked[idx[d < 2 * rho]] = True
    fam = BallFamily.from_arrays(P[centers], np.array(radii))
    rep = ContentReport("packing", k, r, 0.0, fam)
    return ContentReport("packing", k, r, rep.recompute(), fam)


def loglog_slope(scales, values) -> float:
    """Least-squares slope of ``log value`` against ``log scale``."""
    x, y = np.log(np.asarray(scales, dtype=float)), np.log(np.asarray(values, dtype=float))
    return float(np.polyfit(x, y, 1)[0])
