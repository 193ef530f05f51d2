"""Ball types of the decomposition worklist."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..beta import fit_best_subspace
from ..errors import MisclassificationError
from ..geometry import Ball
from ..measure import DiscreteMeasure, mass_in_ball
from .context import NeckContext
from .params import NeckParams

LABELS = ("a", "b", "c", "d", "e", "s", "f")


@dataclass(frozen=True)
class BallClass:
    label: str
    evidence: dict = field(default_factory=dict, compare=False)


def classify_ball(
    m: DiscreteMeasure,
    B: Ball,
    p: NeckParams,
    distortion_cap: float,
    ctx: Optional[NeckContext] = None,
) -> BallClass:
    """Label ``B`` by the first test that fires, in the order b, s, e, d, c.

    * b: ``mu(B_2r) < nu r^k``
    * s: ``D(y, 2r) < cap - drop`` for every support point ``y`` in ``B``
    * e: ``beta(x, 4r) > beta_threshold``
    * d: ``V(x, r)`` has no (k, 2 eps)-independent tuple
    * c: otherwise
    """
    ctx = ctx or NeckContext.of(m, p)
    x, r = B.center, B.radius
    ev: dict = {"radius": r}
    mass2 = mass_in_ball(m, Ball(x, 2 * r))
    ev["mass_2r"] = mass2
    ev["mass_bound"] = p.nu * r ** p.k
    if mass2 < p.nu * r ** p.k:
        return BallClass("b", ev)
    inside = m.query(x, r)
    if len(inside):
        D = ctx.distortion(inside, 2 * r)
        ev["distortion_max"] = float(D.max())
        ev["distortion_cap"] = float(distortion_cap)
        if np.all(D < distortion_cap - p.drop_thr):
            return BallClass("s", ev)
    return _classify_geometric(m, B, p, ctx, ev)


def _classify_geometric(m, B, p, ctx, ev) -> BallClass:
    x, r = B.center, B.radius
    beta4 = fit_best_subspace(m, Ball(x, 4 * r), p.k).beta
    ev["beta_4r"] = beta4
    if beta4 > p.beta_thr:
        return BallClass("e", ev)
    ind = ctx.independence(x, r)
    ev["clearances"] = ind.clearances
    ev["n_noncollapsed"] = int(len(ind.members))
    if not ind.independent:
        return BallClass("d", ev)
    return BallClass("c", ev)


def require_label(m, B: Ball, p: NeckParams, label: str, ctx: Optional[NeckContext] = None) -> BallClass:
    """Re-run the cap-free tests (b, e, d, c) and insist on ``label``."""
    ctx = ctx or NeckContext.of(m, p)
    ev: dict = {}
    mass2 = mass_in_ball(m, Ball(B.center, 2 * B.radius))
    cls = BallClass("b", ev) if mass2 < p.nu * B.radius ** p.k else _classify_geometric(m, B, p, ctx, ev)
    if cls.label != label:
        raise MisclassificationError(f"expected a {label}-ball, tests give {cls.label}")
    return cls
