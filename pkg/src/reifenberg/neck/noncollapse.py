"""Linear independence and noncollapsing tests."""

from __future__ import annotations

from typing import Optional, Union

import numpy as np

from ..geometry import Ball, independence_clearances
from ..measure import DiscreteMeasure
from .context import NeckContext
from .params import NeckParams


def is_linearly_independent(pts, eps: float, r: float) -> tuple[bool, Union[int, list]]:
    """Check that each ``x_{i+1}`` is ``eps r``-far from ``span(x_0..x_i)``.

    Returns ``(True, clearances)`` or ``(False, first_violating_index)``.
    """
    clear = independence_clearances(pts)
    for i, c in enumerate(clear, start=1):
        if c < eps * r:
            return False, i
    return True, clear


def noncollapsing_set(m: DiscreteMeasure, B: Ball, p: NeckParams, ctx: Optional[NeckContext] = None) -> np.ndarray:
    """Support indices ``y`` in ``B`` with ``mu(B_s(y)) > nu s^k`` at every grid scale in ``[eps r, r]``."""
    ctx = ctx or NeckContext.of(m, p)
    return ctx.noncollapsing_set(B.center, B.radius)


def is_noncollapsed_ball(m: DiscreteMeasure, B: Ball, p: NeckParams, ctx: Optional[NeckContext] = None) -> bool:
    ctx = ctx or NeckContext.of(m, p)
    return ctx.independence(B.center, B.radius).independent
