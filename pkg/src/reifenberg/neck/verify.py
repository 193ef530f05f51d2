"""Independent re-check of the neck conditions (n1)-(n3) and disjointness."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from ..beta import batched_fits
from ..measure import DiscreteMeasure
from .context import NeckContext
from .region import NeckRegion

_REL = 1e-12


@dataclass
class NeckReport:
    violations: list = field(default_factory=list)
    checked: dict = field(default_factory=lambda: {"n1": 0, "n2": 0, "n3": 0, "disjoint": 0})

    @property
    def ok(self) -> bool:
        return not self.violations

    def counts(self) -> dict:
        out = {"n1": 0, "n2": 0, "n3": 0, "disjoint": 0}
        for v in self.violations:
            out[v["kind"]] += 1
        return out

    def to_dict(self) -> dict:
        return {**self.counts(), "checked": dict(self.checked), "violations": list(self.violations)}


def tau_scales(r: float, tau: float, floor: float) -> np.ndarray:
    out, s = [], r
    while s >= floor * (1 - _REL):
        out.append(s)
        s *= tau
    return np.array(out)


def verify_neck(m: DiscreteMeasure, N: NeckRegion, ctx: Optional[NeckContext] = None) -> NeckReport:
    """Check every center at every tau-adic scale ``s = r tau^i``.

    * (n1) for ``s >= max(r_x, r_min)``, with ``L = L_{x, 4s}``: projections
      of ``V(x, s)`` onto ``L`` lie within ``tau s`` of the centers, and the
      centers in ``B_s(x)`` lie within ``delta s`` of ``L``. Only support in
      ``B_2r`` is projected. Only the fitted plane is tried, so a failure may
      be a false alarm (tagged ``candidate-limited``).
    * (n2) ``B_s(x)`` is noncollapsed for ``s >= max(r_x / tau, r_min)``.
    * (n3) the sum of ``beta(x, sigma)^2`` over grid scales in
      ``[max(r_x, r_min), 2r]`` is below the threshold.
    * closed balls of radius ``tau^2 r_x`` are pairwise disjoint.

    Never raises on a violation; every failure is listed in the report.
    """
    p = N.params
    ctx = ctx or NeckContext.of(m, p)
    rep = NeckReport()
    X, R = N.centers, N.radii
    if len(X) == 0:
        return rep
    tree = cKDTree(X)
    dist_c = tree.query(m.points)[0]
    r = N.ball.radius
    # the neck only speaks for the measure on its ambient ball B_2r
    pool = N.ball.scaled(2.0).contains(m.points)
    lo = np.maximum(R, p.r_min)
    for s in tau_scales(r, p.tau, p.r_min):
        sel = np.flatnonzero(lo <= s * (1 + _REL))
        if len(sel):
            _, base, U, _ = batched_fits(m, X[sel], 4 * s, p.k)
            for i, b0, Ui in zip(sel, base, U):
                rep.checked["n1"] += 1
                V = ctx.noncollapsing_set(X[i], s)
                V = V[pool[V]]
                if len(V):
                    q = b0 + ((m.points[V] - b0) @ Ui.T) @ Ui
                    # triangle inequality clears most points without a tree query
                    d = np.linalg.norm(q - m.points[V], axis=1) + dist_c[V]
                    hard = d >= p.tau * s
                    if hard.any():
                        d[hard] = tree.query(q[hard])[0]
                    bad = d >= p.tau * s
                    if bad.any():
                        j = int(np.argmax(d))
                        rep.violations.append({
                            "kind": "n1", "center": int(i), "scale": float(s),
                            "detail": f"candidate-limited: projected point {int(V[j])} is {d[j]:.3g} from the centers (tau s = {p.tau * s:.3g})",
                        })
                        continue
                near = np.asarray(tree.query_ball_point(X[i], s), dtype=int)
                near = near[np.linalg.norm(X[near] - X[i], axis=1) < s]
                if len(near):
                    D = X[near] - b0
                    h = np.linalg.norm(D - (D @ Ui.T) @ Ui, axis=1)
                    if np.any(h >= p.delta * s):
                        rep.violations.append({
                            "kind": "n1", "center": int(i), "scale": float(s),
                            "detail": f"candidate-limited: center {int(near[np.argmax(h)])} is {h.max():.3g} off the plane (delta s = {p.delta * s:.3g})",
                        })
        sel2 = np.flatnonzero(np.maximum(R / p.tau, p.r_min) <= s * (1 + _REL))
        for i in sel2:
            rep.checked["n2"] += 1
            if not ctx.independence(X[i], s).independent:
                rep.violations.append({"kind": "n2", "center": int(i), "scale": float(s), "detail": "collapsed"})
    cols = ctx.scale_range(p.r_min, 2 * r)
    if len(cols):
        sig = ctx.sigma[cols]
        b2 = ctx.beta_at(X, sig) ** 2
        use = sig[None, :] >= lo[:, None] * (1 - _REL)
        tot = (b2 * use).sum(axis=1)
        for i in range(len(X)):
            rep.checked["n3"] += 1
            if not tot[i] < p.n3_thr:
                rep.violations.append({"kind": "n3", "center": i, "scale": float(lo[i]), "detail": f"sum beta^2 = {tot[i]:.3g}"})
    t2 = p.tau ** 2
    rmax = R.max()
    for i, j in sorted(tree.query_pairs(2 * t2 * rmax * (1 + 1e-9) + 1e-300)):
        rep.checked["disjoint"] += 1
        if np.linalg.norm(X[i] - X[j]) <= t2 * (R[i] + R[j]):
            rep.violations.append({"kind": "disjoint", "center": int(i), "scale": float(R[i]), "detail": f"overlaps center {j}"})
    return rep
