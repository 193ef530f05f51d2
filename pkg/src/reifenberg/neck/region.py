"""Neck regions: data, construction and the extended radius function."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from ..beta import batched_fits
from ..geometry import Ball
from ..measure import DiscreteMeasure
from .classify import classify_ball, require_label
from .context import NeckContext
from .params import NeckParams

_REL = 1e-12
DEDUPE = 1e-9


@dataclass(frozen=True, eq=False)
class NeckRegion:
    """Center set with radius function on an ambient ball ``B_r(x)``.

    ``radii == 0`` marks the centers of ``C_0``. ``sources`` holds, for each
    center, the support index it was projected from (-1 if unknown). The
    region itself is ``B_2r(x)`` minus the open balls ``B_{r_y}(y)`` over
    ``C_+`` and minus the points of ``C_0``.
    """

    ball: Ball
    centers: np.ndarray
    radii: np.ndarray
    labels: tuple
    params: NeckParams
    sources: Optional[np.ndarray] = None

    def __post_init__(self):
        C = np.asarray(self.centers, dtype=float).reshape(-1, self.ball.dim)
        R = np.asarray(self.radii, dtype=float).reshape(-1)
        S = np.full(len(C), -1) if self.sources is None else np.asarray(self.sources, dtype=int)
        object.__setattr__(self, "centers", C)
        object.__setattr__(self, "radii", R)
        object.__setattr__(self, "sources", S)
        object.__setattr__(self, "labels", tuple(self.labels))

    def __len__(self) -> int:
        return len(self.centers)

    @property
    def zero_set(self) -> np.ndarray:
        return self.radii == 0

    @property
    def positive_set(self) -> np.ndarray:
        return self.radii > 0

    def frozen_mask(self, points) -> np.ndarray:
        """Points inside some open ``B_{r_y}(y)``, ``y`` in ``C_+``."""
        P = np.atleast_2d(points)
        hit = np.zeros(len(P), dtype=bool)
        pos = np.flatnonzero(self.positive_set)
        if len(pos) == 0 or len(P) == 0:
            return hit
        tree = cKDTree(P)
        for i in pos:
            idx = np.asarray(tree.query_ball_point(self.centers[i], self.radii[i]), dtype=int)
            if len(idx):
                d = np.linalg.norm(P[idx] - self.centers[i], axis=1)
                hit[idx[d < self.radii[i]]] = True
        return hit

    def absorbed_mask(self, m: DiscreteMeasure) -> np.ndarray:
        """Support points within ``1e-9 r`` of a ``C_0`` center."""
        hit = np.zeros(len(m), dtype=bool)
        z = self.zero_set
        if z.any():
            d, _ = cKDTree(self.centers[z]).query(m.points)
            hit |= d <= DEDUPE * self.ball.radius
        return hit

    def region_mask(self, m: DiscreteMeasure) -> np.ndarray:
        """Support points of ``m`` lying in the neck region."""
        inb = self.ball.scaled(2.0).contains(m.points)
        return inb & ~self.frozen_mask(m.points) & ~self.absorbed_mask(m)

    def neck_mass(self, m: DiscreteMeasure) -> float:
        return float(m.weights[self.region_mask(m)].sum())

    def to_dict(self) -> dict:
        return {
            "ball": self.ball.to_dict(),
            "centers": [
                {"x": c.tolist(), "r": float(r), "label": lab, "source": int(s)}
                for c, r, lab, s in zip(self.centers, self.radii, self.labels, self.sources)
            ],
        }

    @classmethod
    def from_dict(cls, d: dict, params: NeckParams) -> "NeckRegion":
        cs = d["centers"]
        n = len(d["ball"]["center"])
        return cls(
            Ball.from_dict(d["ball"]),
            np.array([c["x"] for c in cs], dtype=float).reshape(-1, n),
            np.array([c["r"] for c in cs], dtype=float),
            tuple(c["label"] for c in cs),
            params,
            np.array([c.get("source", -1) for c in cs], dtype=int),
        )


def extend_radius_function(N: NeckRegion, y) -> np.ndarray:
    """Regularity scale ``r_y = min(1, min_x max(tau^-2 |x - y|, r_x))``.

    Agrees with ``r_x`` on centers (by the disjointness of the
    ``tau^2 r_x`` balls), dominates ``d(y, C)`` below the cap 1 and is
    ``tau^-2``-Lipschitz. Accepts one point or an array of points.
    """
    Y = np.asarray(y, dtype=float)
    single = Y.ndim == 1
    Y = np.atleast_2d(Y)
    if len(N) == 0:
        out = np.ones(len(Y))
    else:
        t2 = N.params.tau ** -2
        out = np.ones(len(Y))
        for s in range(0, len(Y), 512):
            d = np.linalg.norm(Y[s:s + 512, None, :] - N.centers[None, :, :], axis=2)
            out[s:s + 512] = np.minimum(1.0, np.maximum(t2 * d, N.radii[None, :]).min(axis=1))
    return out[0] if single else out


# ------------------------------------------------------------------ construction


def _walk_scales(rho: float, floor: float) -> list:
    out, s = [], rho
    while s > floor * (1 + _REL):
        out.append(s)
        s /= 2
    out.append(floor)
    return out


def _candidates(m, ctx, actives, rho, pool_mask, k, r):
    """Projections of pool support points near each active center onto its plane."""
    A = np.array([a for a in actives])
    _, base, U, _ = batched_fits(m, A, 4 * rho, k)
    seen = np.zeros(len(m), dtype=bool)
    pts, src = [], []
    for a, b0, Ua in zip(A, base, U):
        idx = m.query(a, 2 * rho)
        idx = idx[pool_mask[idx] & ~seen[idx]]
        if len(idx) == 0:
            continue
        seen[idx] = True
        D = m.points[idx] - b0
        pts.append(b0 + (D @ Ua.T) @ Ua)
        src.append(idx)
    if not pts:
        return np.zeros((0, m.n)), np.zeros(0, dtype=int)
    P = np.vstack(pts)
    S = np.concatenate(src)
    drop = np.zeros(len(P), dtype=bool)
    for i, j in cKDTree(P).query_pairs(DEDUPE * r):
        drop[max(i, j)] = True
    return P[~drop], S[~drop]


def _select(fixed_X, fixed_R, X, R, tau):
    """Maximal ``tau^2 r``-disjoint additions to an already disjoint family."""
    t2 = tau ** 2
    blocked = np.zeros(len(X), dtype=bool)
    if len(X) == 0:
        return np.zeros(0, dtype=int)
    tree = cKDTree(X)
    rmax = R.max()
    for z, rz in zip(fixed_X, fixed_R):
        idx = np.asarray(tree.query_ball_point(z, t2 * (rz + rmax) * (1 + 1e-9) + 1e-300), dtype=int)
        if len(idx):
            d = np.linalg.norm(X[idx] - z, axis=1)
            blocked[idx[d <= t2 * (rz + R[idx])]] = True
    chosen = []
    for i in range(len(X)):
        if blocked[i]:
            continue
        chosen.append(i)
        idx = np.asarray(tree.query_ball_point(X[i], t2 * (R[i] + rmax) * (1 + 1e-9) + 1e-300), dtype=int)
        if len(idx):
            d = np.linalg.norm(X[idx] - X[i], axis=1)
            blocked[idx[d <= t2 * (R[i] + R[idx])]] = True
    return np.array(chosen, dtype=int)


def build_neck(
    m: DiscreteMeasure,
    B: Ball,
    p: NeckParams,
    distortion_cap: float,
    ctx: Optional[NeckContext] = None,
) -> tuple[NeckRegion, list]:
    """Construct a neck region on a c-ball.

    Stages run at ``rho = r, tau r, tau^2 r, ...``. At each stage every
    active center ``a`` fits ``L_{a, 4 rho}`` and projects the support in
    ``B_{2 rho}(a)`` onto it. Each candidate walks down the scales
    ``rho, rho/2, ...`` to ``max(tau rho, r_min)``; it freezes at the first
    scale where ``V(y, s)`` loses independence, carrying the label of that
    ball. Candidates independent down to the floor become active (label
    ``c``) or, at ``r_min``, enter ``C_0`` (label ``f``). A maximal
    ``tau^2 r``-disjoint family is kept, earlier centers first.

    Returns the region and the frozen balls meeting ``B``, as
    ``(Ball, label)`` pairs.
    """
    ctx = ctx or NeckContext.of(m, p)
    require_label(m, B, p, "c", ctx)
    x, r = B.center, B.radius
    pool = B.scaled(2.0).contains(m.points)
    fx: list = []
    fr: list = []
    flab: list = []
    fsrc: list = []
    actives = [x]
    rho = r
    while actives:
        floor = max(p.tau * rho, p.r_min)
        at_floor_min = floor <= p.r_min * (1 + _REL)
        X, S = _candidates(m, ctx, actives, rho, pool, p.k, r)
        R = np.zeros(len(X))
        lab = np.empty(len(X), dtype=object)
        walking = np.arange(len(X))
        for s in _walk_scales(rho, floor):
            still = []
            for i in walking:
                if ctx.independence(X[i], s).independent:
                    still.append(i)
                else:
                    R[i] = s
                    lab[i] = classify_ball(m, Ball(X[i], s), p, distortion_cap, ctx).label
            walking = np.array(still, dtype=int)
        for i in walking:
            cl = classify_ball(m, Ball(X[i], floor), p, distortion_cap, ctx).label
            if cl == "c":
                R[i], lab[i] = (0.0, "f") if at_floor_min else (floor, "a")
            else:
                R[i], lab[i] = floor, cl
        keep = _select(np.array(fx).reshape(-1, m.n), np.array(fr), X, R, p.tau)
        nxt = []
        for i in keep:
            if lab[i] == "a":
                nxt.append(X[i])
            else:
                fx.append(X[i])
                fr.append(R[i])
                flab.append(lab[i])
                fsrc.append(S[i])
        # actives of this stage are replaced by their descendants
        actives = nxt
        rho = floor
    region = NeckRegion(B, np.array(fx).reshape(-1, m.n), np.array(fr), tuple(flab), p, np.array(fsrc, dtype=int))
    leftover = [
        (Ball(c, rr), lb)
        for c, rr, lb in zip(region.centers, region.radii, region.labels)
        if rr > 0 and np.linalg.norm(c - x) < r + rr
    ]
    return region, leftover
