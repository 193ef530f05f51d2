"""The neck-decomposition worklist and its output."""

from __future__ import annotations

import json
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..errors import InputError, InternalConsistencyError
from ..geometry import Ball
from ..measure import DiscreteMeasure, mass_in_ball
from .classify import classify_ball
from .context import NeckContext
from .coverings import BBall, cover_d_ball, cover_e_ball
from .params import NeckParams
from .region import NeckRegion, build_neck
from .verify import NeckReport, verify_neck

_REL = 1e-12


@dataclass
class NeckEntry:
    region: NeckRegion
    report: NeckReport
    mass: float = 0.0


@dataclass
class Decomposition:
    """``B_1`` covered by residual balls, neck regions and low-mass balls.

    ``s_balls`` lists the intermediate distortion-drop balls; ``f_ledger``
    maps re-entry depth to the summed ``r_f^k`` of the f-balls created there.
    """

    params: NeckParams
    gamma: float
    root: Ball
    necks: list = field(default_factory=list)
    b_balls: list = field(default_factory=list)
    s_balls: list = field(default_factory=list)
    residual: list = field(default_factory=list)
    f_ledger: dict = field(default_factory=dict)
    stats: dict = field(default_factory=dict)

    @property
    def sum_ra_k(self) -> float:
        return float(sum(e.region.ball.radius ** self.params.k for e in self.necks))

    @property
    def sum_rb_k(self) -> float:
        return float(sum(b.ball.radius ** self.params.k for b in self.b_balls))

    @property
    def sum_residual_k(self) -> float:
        return float(sum(b.radius ** self.params.k for b in self.residual))

    def tallies(self) -> dict:
        return {"sum_ra_k": self.sum_ra_k, "sum_rb_k": self.sum_rb_k, "sum_residual_k": self.sum_residual_k}

    def uncovered(self, m: DiscreteMeasure) -> np.ndarray:
        """Support indices in the root ball that no emitted piece covers."""
        todo = self.root.contains(m.points)
        for b in self.b_balls:
            todo &= ~b.ball.contains(m.points)
        for b in self.residual:
            todo &= ~b.contains(m.points)
        for e in self.necks:
            todo &= ~(e.region.ball.scaled(2.0).contains(m.points) & ~e.region.frozen_mask(m.points))
        return np.flatnonzero(todo)

    def recheck_b_balls(self, m: DiscreteMeasure) -> list:
        return [i for i, b in enumerate(self.b_balls) if not b.recheck(m)]

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "gamma": self.gamma,
            "root": self.root.to_dict(),
            "necks": [
                {**e.region.to_dict(), "mass": e.mass, "verify": e.report.counts()} for e in self.necks
            ],
            "b_balls": [b.to_dict() for b in self.b_balls],
            "residual": {"points": [b.to_dict() for b in self.residual], "r_min": self.params.r_min},
            "tallies": self.tallies(),
            "f_ledger": {str(k): v for k, v in sorted(self.f_ledger.items())},
            "stats": dict(self.stats),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict) -> "Decomposition":
        p = NeckParams.from_dict(d["params"])
        out = cls(p, float(d["gamma"]), Ball.from_dict(d.get("root", {"center": [0.0] * 1, "radius": 1.0})))
        for nd in d["necks"]:
            out.necks.append(NeckEntry(NeckRegion.from_dict(nd, p), NeckReport(), float(nd.get("mass", 0.0))))
        for bd in d["b_balls"]:
            out.b_balls.append(BBall(Ball.from_dict(bd["ball"]), float(bd["mass"]), float(bd.get("bound", np.inf))))
        out.residual = [Ball.from_dict(b) for b in d["residual"]["points"]]
        out.f_ledger = {int(k): v for k, v in d.get("f_ledger", {}).items()}
        out.stats = d.get("stats", {})
        return out


def check_gamma(m: DiscreteMeasure, p: NeckParams, gamma: float, root: Ball, ctx: Optional[NeckContext] = None) -> float:
    """Largest distortion over ``[r_min, 2]`` of support points in ``root``; raises above ``gamma``."""
    ctx = ctx or NeckContext.of(m, p)
    idx = m.query(root.center, root.radius)
    worst = float(ctx.distortion(idx, 2.0).max()) if len(idx) else 0.0
    if worst > gamma:
        raise InputError(f"support distortion {worst:.4g} exceeds gamma = {gamma:.4g}")
    return worst


def neck_decompose(
    m: DiscreteMeasure,
    p: NeckParams,
    gamma: float,
    root: Optional[Ball] = None,
    verify: bool = True,
    ctx: Optional[NeckContext] = None,
) -> Decomposition:
    """Cover the support in ``root`` (default ``B_1(0)``) by typed pieces.

    A FIFO worklist of ``(ball, cap, f_depth)`` jobs: balls below ``r_min``
    go to the residual; b-balls are emitted; s-balls re-enter with the
    measured cap; e-balls split by :func:`cover_e_ball`; d-balls emit
    b-balls and re-enqueue f-balls one level deeper; c-balls yield a neck
    whose frozen balls re-enter. Jobs whose support is already inside an
    emitted piece are dropped. The result is checked for coverage and
    every b-ball certificate is re-evaluated.
    """
    ctx = ctx or NeckContext.of(m, p)
    root = root or Ball(np.zeros(m.n), 1.0)
    worst = check_gamma(m, p, gamma, root, ctx)
    out = Decomposition(p, gamma, root)
    counts: Counter = Counter()
    jobs = deque([(root, float(gamma), 0, 0)])
    n_jobs = 0
    next_id = 1
    # e-ball children split their parent's points so overlaps do not compound
    owner = np.zeros(len(m), dtype=int)
    alive = np.zeros(1024, dtype=bool)
    # support points already inside an emitted piece
    done = np.zeros(len(m), dtype=bool)

    def emit(ball: Ball) -> None:
        idx = m.query(ball.center, ball.radius)
        done[idx] = True

    while jobs:
        B, cap, depth, jid = jobs.popleft()
        alive[jid] = False
        n_jobs += 1
        if n_jobs > p.max_jobs:
            raise InternalConsistencyError(f"worklist exceeded {p.max_jobs} jobs")
        if np.all(done[m.query(B.center, B.radius)]):
            counts["skipped"] += 1
            continue
        if B.radius < p.r_min * (1 - _REL):
            out.residual.append(B)
            emit(B)
            counts["residual"] += 1
            continue
        cls = classify_ball(m, B, p, cap, ctx)
        counts[cls.label] += 1
        if cls.label == "b":
            out.b_balls.append(BBall(B, cls.evidence["mass_2r"], p.nu * B.radius ** p.k))
            emit(B)
        elif cls.label == "s":
            out.s_balls.append(B)
            alive[jid] = True
            jobs.append((B, cls.evidence["distortion_max"], depth, jid))
        elif cls.label == "e":
            mine = ~done & ((owner == jid) | ~alive[owner])
            for sb in cover_e_ball(m, B, p, cap, ctx, pending=mine):
                idx = m.query(sb.ball.center, sb.ball.radius)
                idx = idx[mine[idx]]
                if next_id >= len(alive):
                    alive = np.concatenate([alive, np.zeros(len(alive), dtype=bool)])
                owner[idx] = next_id
                alive[next_id] = True
                mine[idx] = False
                jobs.append((sb.ball, sb.cap, depth, next_id))
                next_id += 1
        elif cls.label == "d":
            dc = cover_d_ball(m, B, p, ctx)
            out.b_balls.extend(dc.b_balls)
            for b in dc.b_balls:
                emit(b.ball)
            if dc.f_balls:
                if depth + 1 > p.max_fdepth:
                    raise InternalConsistencyError(f"f-ball re-entry depth exceeds {p.max_fdepth}")
                out.f_ledger[depth + 1] = out.f_ledger.get(depth + 1, 0.0) + dc.sum_rf_k
                for f in dc.f_balls:
                    jobs.append((f, cap, depth + 1, 0))
        else:
            region, leftover = build_neck(m, B, p, cap, ctx)
            rep = verify_neck(m, region, ctx) if verify else NeckReport()
            out.necks.append(NeckEntry(region, rep, region.neck_mass(m)))
            idx = m.query(B.center, 2 * B.radius)
            done[idx[~region.frozen_mask(m.points[idx])]] = True
            for ball, _ in leftover:
                jobs.append((ball, cap, depth, 0))
    out.stats = {"jobs": n_jobs, "labels": dict(sorted(counts.items())), "max_support_distortion": worst}
    missed = out.uncovered(m)
    if len(missed):
        raise InternalConsistencyError(f"{len(missed)} support points left uncovered, first {m.points[missed[0]].tolist()}")
    bad = out.recheck_b_balls(m)
    if bad:
        raise InternalConsistencyError(f"b-ball certificates fail to re-verify: {bad[:5]}")
    return out
