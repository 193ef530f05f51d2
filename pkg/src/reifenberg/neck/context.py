"""Per-measure tables shared by classification, construction and verification.

All multiscale quantities live on one absolute dyadic grid
``sigma_j = 16 * 2^-j``, so the distortion of a support point and the
noncollapsing test at any scale are table lookups.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional

import numpy as np

from ..beta import beta_table
from ..geometry import AffineSubspace
from ..measure import DiscreteMeasure
from .params import NeckParams

GRID_TOP = 16.0
_REL = 1e-12
SUBSAMPLE = 48


@dataclass(frozen=True, eq=False)
class Independence:
    """Outcome of the greedy (k, 2eps)-independence search in ``V(x, s)``.

    ``members`` are the support indices of ``V(x, s)``; ``tuple_`` the chosen
    indices (into ``members``); ``clearances`` the distance of each chosen
    point to the span of its predecessors. When the search fails, ``witness``
    is the affine span of the chosen points and every member lies within
    ``2 eps s`` of it.
    """

    independent: bool
    members: np.ndarray
    tuple_: list = field(default_factory=list)
    clearances: list = field(default_factory=list)
    witness: Optional[AffineSubspace] = None


def greedy_span(X: np.ndarray, k: int, thresh: float):
    """Farthest-point greedy for ``k+1`` points with clearance ``>= thresh``."""
    n = X.shape[1]
    if len(X) == 0:
        return False, [], [], None
    i0 = int(np.argmax(np.sum((X - X[0]) ** 2, axis=1)))
    chosen, clear = [i0], []
    base = X[i0]
    Q = np.zeros((0, n))
    D = X - base
    for _ in range(k):
        dist = np.sqrt(np.sum(D ** 2, axis=1))
        j = int(np.argmax(dist))
        clear.append(float(dist[j]))
        if dist[j] < thresh:
            return False, chosen, clear, AffineSubspace(base, Q)
        q = D[j] / dist[j]
        q = q - (Q @ q) @ Q
        q /= np.linalg.norm(q)
        Q = np.vstack([Q, q])
        D = D - np.outer(D @ q, q)
        chosen.append(j)
    return True, chosen, clear, AffineSubspace(base, Q)


class NeckContext:
    """Cached grid tables for one measure and one parameter set."""

    def __init__(self, m: DiscreteMeasure, p: NeckParams):
        self.m, self.p = m, p
        low = p.epsilon * p.r_min / 2
        sig = [GRID_TOP]
        while sig[-1] / 2 >= low:
            sig.append(sig[-1] / 2)
        self.sigma = np.array(sig)
        self.d_cols = self.sigma >= p.r_min * (1 - _REL)
        masses = np.stack([m.ball_masses(m.points, s) for s in self.sigma], axis=1)
        self.masses = masses
        self.ok = masses > p.nu * self.sigma ** p.k
        self.bad_cum = np.cumsum(~self.ok, axis=1)

    @classmethod
    def of(cls, m: DiscreteMeasure, p: NeckParams) -> "NeckContext":
        cache = m.__dict__.setdefault("_neck_contexts", {})
        if p not in cache:
            cache[p] = cls(m, p)
        return cache[p]

    # ---- scales

    def scale_range(self, lo: float, hi: float) -> np.ndarray:
        return np.flatnonzero((self.sigma >= lo * (1 - _REL)) & (self.sigma <= hi * (1 + _REL)))

    # ---- distortion at support points

    @cached_property
    def beta2(self) -> np.ndarray:
        out = np.zeros((len(self.m), len(self.sigma)))
        cols = np.flatnonzero(self.d_cols)
        out[:, cols] = beta_table(self.m, self.m.points, self.p.k, self.sigma[cols]) ** 2
        return out

    @cached_property
    def _cum(self) -> np.ndarray:
        # _cum[:, j] = sum of beta^2 over grid scales sigma_j and below
        return np.cumsum(self.beta2[:, ::-1], axis=1)[:, ::-1]

    def distortion(self, idx, s: float) -> np.ndarray:
        """``D(y, s)``: sum of beta^2 over grid scales in ``[r_min, s]``."""
        idx = np.asarray(idx, dtype=int)
        j = np.flatnonzero(self.sigma <= s * (1 + _REL))
        if len(j) == 0:
            return np.zeros(len(idx))
        return self._cum[idx, j[0]]

    def distortion_between(self, idx, lo: float, hi: float) -> np.ndarray:
        """Sum of beta^2 over grid scales in ``(lo, hi]``."""
        return self.distortion(idx, hi) - self.distortion(idx, lo)

    # ---- noncollapsing

    def v_mask(self, idx, s: float) -> np.ndarray:
        """Mass test ``mu(B_sigma(y)) > nu sigma^k`` on every grid scale in ``[eps s, s]``."""
        idx = np.asarray(idx, dtype=int)
        js = self.scale_range(self.p.epsilon * s, s)
        if len(js) == 0:
            return np.ones(len(idx), dtype=bool)
        ja, jb = js[0], js[-1]
        bad = self.bad_cum[idx, jb] - (self.bad_cum[idx, ja - 1] if ja > 0 else 0)
        return bad == 0

    def noncollapsing_set(self, x, s: float) -> np.ndarray:
        idx = self.m.query(x, s)
        return idx[self.v_mask(idx, s)]

    def independence(self, x, s: float) -> Independence:
        """Greedy search for a (k, 2 eps)-independent tuple in ``V(x, s)``.

        Members of ``V`` already carry mass above ``nu sigma^k`` at every grid
        scale in ``[eps s, s]``. A spread-out subsample is tried first; any
        tuple it yields is a valid certificate, and only a failure triggers
        the full search that also produces the witness plane.
        """
        p = self.p
        idx = self.noncollapsing_set(x, s)
        thresh = 2 * p.epsilon * s
        X = self.m.points[idx]
        if len(idx) > 4 * SUBSAMPLE:
            sub = np.linspace(0, len(idx) - 1, SUBSAMPLE).astype(int)
            ok, chosen, clear, witness = greedy_span(X[sub], p.k, thresh)
            if ok:
                return Independence(True, idx, [int(sub[c]) for c in chosen], clear, witness)
        ok, chosen, clear, witness = greedy_span(X, p.k, thresh)
        return Independence(ok, idx, chosen, clear, witness)

    def beta_at(self, centers, scales) -> np.ndarray:
        return beta_table(self.m, centers, self.p.k, scales)
