"""Coverings of d-balls and e-balls by smaller balls."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..covering import maximal_disjoint
from ..errors import InternalConsistencyError
from ..geometry import Ball
from ..measure import DiscreteMeasure, mass_in_ball
from .classify import require_label
from .context import NeckContext
from .params import NeckParams


@dataclass(frozen=True, eq=False)
class BBall:
    """Low-mass ball with its certificate ``mu(B_2r) <= bound``."""

    ball: Ball
    mass: float
    bound: float

    def recheck(self, m: DiscreteMeasure) -> bool:
        return mass_in_ball(m, Ball(self.ball.center, 2 * self.ball.radius)) <= self.bound

    def to_dict(self) -> dict:
        return {"ball": self.ball.to_dict(), "mass": self.mass, "bound": self.bound}


@dataclass(frozen=True, eq=False)
class SBall:
    """Child of an e-ball with its distortion cap and certified drop."""

    ball: Ball
    cap: float
    min_drop: float


@dataclass(frozen=True, eq=False)
class DCover:
    b_balls: list
    f_balls: list
    sum_rb_k: float
    sum_rf_k: float


def _lattice_nodes(u: np.ndarray, h: float) -> np.ndarray:
    if u.shape[1] == 0:
        return np.zeros((1, 0))
    return np.unique(np.round(u / h), axis=0) * h


def cover_d_ball(m: DiscreteMeasure, B: Ball, p: NeckParams, ctx: Optional[NeckContext] = None) -> DCover:
    """Cover a collapsed ball by f-balls along the witness plane and b-balls elsewhere.

    Noncollapsed points lie within ``2 eps r`` of the witness plane ``L``
    (dimension below k); lattice nodes of spacing ``2 eps r / sqrt(dim L)``
    on ``L`` carry f-balls of radius ``4 eps r``. Every other support point
    ``y`` gets the radius ``s_y / 2`` where ``s_y`` is the largest grid scale
    with ``mu(B_{s_y}(y)) <= nu s_y^k``; a maximal family by decreasing
    radius (shrink 1/10) covers them and each ball is re-certified.
    """
    ctx = ctx or NeckContext.of(m, p)
    require_label(m, B, p, "d", ctx)
    x, r, k = B.center, B.radius, p.k
    ind = ctx.independence(x, r)
    er = p.epsilon * r
    f_balls: list = []
    if len(ind.members):
        L = ind.witness
        u = L.coordinates(m.points[ind.members])
        h = 2 * er / np.sqrt(max(L.k, 1))
        for node in _lattice_nodes(u, h):
            f_balls.append(Ball(L.base + node @ L.basis, 4 * er))
    inside = m.query(x, r)
    rest = np.setdiff1d(inside, ind.members, assume_unique=True)
    b_balls: list = []
    if len(rest):
        radii = np.array([_low_mass_scale(ctx, int(y), r) for y in rest]) / 2
        sel = maximal_disjoint(m.points[rest], radii, shrink=0.1)
        for i in sel:
            c, rb = m.points[rest[i]], float(radii[i])
            bound = 2 ** k * p.nu * rb ** k
            mass = mass_in_ball(m, Ball(c, 2 * rb))
            if mass > bound:
                raise InternalConsistencyError(f"b-ball at {c.tolist()} carries {mass} > {bound}")
            b_balls.append(BBall(Ball(c, rb), mass, bound))
    return DCover(
        b_balls,
        f_balls,
        float(sum(b.ball.radius ** k for b in b_balls)),
        float(len(f_balls) * (4 * er) ** k),
    )


def _low_mass_scale(ctx: NeckContext, y: int, r: float) -> float:
    js = np.flatnonzero((~ctx.ok[y]) & (ctx.sigma <= r * (1 + 1e-12)))
    if len(js) == 0:
        raise InternalConsistencyError(f"support point {y} is outside V yet heavy at every scale")
    return float(ctx.sigma[js[0]])


def cover_e_ball(
    m: DiscreteMeasure,
    B: Ball,
    p: NeckParams,
    distortion_cap: float,
    ctx: Optional[NeckContext] = None,
    pending: Optional[np.ndarray] = None,
) -> list:
    """Cover an e-ball by half-radius balls centered at support points.

    For ``theta = beta(x, 4r)`` every support point ``y`` of a child of radius
    ``r_s = r/2`` satisfies ``D(y, 24 r_s) - D(y, 2 r_s) >= 3^-(k+2) theta^2``:
    some grid scale in ``[5.5 r, 11 r]`` sees all of ``B_4r(x)``. The drop is
    recomputed from the table and a failure raises. With a boolean
    ``pending`` mask only those support points need covering.
    """
    ctx = ctx or NeckContext.of(m, p)
    cls = require_label(m, B, p, "e", ctx)
    theta = cls.evidence["beta_4r"]
    x, r = B.center, B.radius
    rs = r / 2
    inside = m.query(x, r)
    if pending is not None:
        inside = inside[pending[inside]]
    if len(inside) == 0:
        return []
    sel = maximal_disjoint(m.points[inside], rs, shrink=0.25)
    need = p.e_drop * theta ** 2
    out = []
    for i in sorted(sel):
        c = m.points[inside[i]]
        ys = m.query(c, rs)
        drop = ctx.distortion_between(ys, 2 * rs, 24 * rs)
        if drop.min() < need * (1 - 1e-9):
            raise InternalConsistencyError(
                f"s-ball at {c.tolist()} shows distortion drop {drop.min():.3g} < {need:.3g}"
            )
        out.append(SBall(Ball(c, rs), float(ctx.distortion(ys, 2 * rs).max()), float(drop.min())))
    return out
