"""Synthetic sets and measures with known closed-form properties."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import InputError
from .measure import DiscreteMeasure

MAX_ITERS = 10


@dataclass(frozen=True, eq=False)
class Polyline:
    """Ordered vertices of a planar curve."""

    vertices: np.ndarray

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float)
        if V.ndim != 2 or len(V) < 2:
            raise InputError("a polyline needs at least two vertices")
        if np.any(np.all(V[1:] == V[:-1], axis=1)):
            raise InputError("consecutive vertices coincide")
        V = V.copy()
        V.setflags(write=False)
        object.__setattr__(self, "vertices", V)

    @property
    def edge_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.vertices, axis=0), axis=1)

    @property
    def length(self) -> float:
        return float(self.edge_lengths.sum())

    @property
    def n_edges(self) -> int:
        return len(self.vertices) - 1

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"x{i + 1}" for i in range(self.vertices.shape[1])])
            for v in self.vertices:
                w.writerow([f"{c:.17g}" for c in v])

    def as_measure(self) -> DiscreteMeasure:
        return DiscreteMeasure(self.vertices)


def _refine(V: np.ndarray, delta: float) -> np.ndarray:
    a, b = V[:-1], V[1:]
    L = np.linalg.norm(b - a, axis=1)[:, None]
    t = (b - a) / L
    side = np.where(np.arange(len(a)) % 2 == 0, 1.0, -1.0)[:, None]
    nu = side * np.stack([-t[:, 1], t[:, 0]], axis=1)
    s = L * np.sqrt(1.0 + delta ** 2) / 4.0
    h = np.sqrt(np.clip(s ** 2 - (L - 2 * s) ** 2 / 4.0, 0.0, None))
    c = a + s * t
    e = a + (L - s) * t
    d = 0.5 * (a + b) + h * nu
    out = np.empty((4 * len(a) + 1, 2))
    out[0:-1:4] = a
    out[1::4] = c
    out[2::4] = d
    out[3::4] = e
    out[-1] = V[-1]
    return out


def snowflake_varying(deltas: Sequence[float], iters: Optional[int] = None) -> Polyline:
    """Snowflake-type curve with step ``i`` using bump parameter ``deltas[i]``.

    Every edge is replaced by four equal sub-edges of length
    ``sqrt(1 + delta^2) / 4`` times the parent, so
    ``length^2 = 16 * prod(1 + delta_j^2)``.
    """
    deltas = [float(d) for d in deltas]
    iters = len(deltas) if iters is None else int(iters)
    if not 0 <= iters <= MAX_ITERS:
        raise InputError(f"iters must lie in [0, {MAX_ITERS}]")
    if len(deltas) < iters:
        raise InputError("fewer deltas than iterations")
    for d in deltas[:iters]:
        if not 0.0 <= d <= 0.5:
            raise InputError(f"delta {d} outside [0, 0.5]")
    V = np.array([[-2.0, 0.0], [2.0, 0.0]])
    for d in deltas[:iters]:
        V = _refine(V, d)
    return Polyline(V)


def snowflake(delta: float, iters: int) -> Polyline:
    """``S_iters`` built from the segment ``(-2, 0)-(2, 0)``."""
    if not 0.0 < delta <= 0.5:
        raise InputError("delta must lie in (0, 0.5]")
    if not 0 <= iters <= MAX_ITERS:
        raise InputError(f"iters must lie in [0, {MAX_ITERS}]")
    return snowflake_varying([delta] * iters, iters)


def snowflake_length(deltas: Sequence[float]) -> float:
    """Closed-form length after applying ``deltas`` in turn."""
    return 4.0 * float(np.prod(np.sqrt(1.0 + np.asarray(deltas, dtype=float) ** 2)))


def holder_target(delta: float) -> float:
    """Exponent ``b`` with ``(sqrt(1+delta^2)/4)^b = (1+delta^2)/4``."""
    q = 1.0 + delta ** 2
    return float(np.log(q / 4.0) / np.log(np.sqrt(q) / 4.0))


# ------------------------------------------------------------------ measures


def _lattice(g: np.ndarray, k: int) -> np.ndarray:
    return np.stack(np.meshgrid(*([g] * k), indexing="ij"), axis=-1).reshape(-1, k)


def _grid(k: int, spacing: float, radius: float) -> np.ndarray:
    m = int(np.floor(radius / spacing))
    g = spacing * np.arange(-m, m + 1)
    pts = _lattice(g, k)
    return pts[np.linalg.norm(pts, axis=1) < radius]


def _check(spacing, density):
    if not spacing > 0:
        raise InputError("spacing must be positive")
    if not density > 0:
        raise InputError("density must be positive")


def plane_measure(n: int, k: int, density: float = 1.0, spacing: float = 0.05, radius: float = 2.0) -> DiscreteMeasure:
    """``density * H^k`` on the coordinate plane ``span(e_1..e_k)`` within ``B_radius``."""
    _check(spacing, density)
    if not 1 <= k <= n:
        raise InputError("need 1 <= k <= n")
    G = _grid(k, spacing, radius)
    P = np.zeros((len(G), n))
    P[:, :k] = G
    return DiscreteMeasure(P, np.full(len(P), density * spacing ** k))


def dust_measure(n: int, density: float = 0.1, spacing: float = 0.05, radius: float = 2.0, offset: float = 0.0) -> DiscreteMeasure:
    """``density * H^n`` on ``B_radius``; ``offset`` shifts the grid by that fraction of a cell."""
    _check(spacing, density)
    G = _grid(n, spacing, radius + spacing) + offset * spacing
    G = G[np.linalg.norm(G, axis=1) < radius]
    return DiscreteMeasure(G, np.full(len(G), density * spacing ** n))


def _merge(P: np.ndarray, W: np.ndarray) -> DiscreteMeasure:
    U, inv = np.unique(P, axis=0, return_inverse=True)
    return DiscreteMeasure(U, np.bincount(inv.reshape(-1), weights=W, minlength=len(U)))


def mixed_measure(
    n: int,
    k: int,
    delta: float,
    plane_spacing: float = 0.02,
    dust_spacing: float = 0.05,
    plane_density: float = 1.0,
    radius: float = 2.0,
) -> DiscreteMeasure:
    """Plane part plus ``delta``-weighted ambient dust (offset half a cell)."""
    a = plane_measure(n, k, plane_density, plane_spacing, radius)
    b = dust_measure(n, delta, dust_spacing, radius, offset=0.5)
    return _merge(np.vstack([a.points, b.points]), np.concatenate([a.weights, b.weights]))


def dirac_pair(distance: float, n: int = 2, center=None) -> DiscreteMeasure:
    """Unit masses at ``center -/+ distance/2 * e_1``."""
    if not distance > 0:
        raise InputError("distance must be positive")
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    e = np.zeros(n)
    e[0] = distance / 2
    return DiscreteMeasure(np.stack([c - e, c + e]))


def perpendicular_planes(n: int, k: int, density: float = 1.0, spacing: float = 0.05, radius: float = 2.0) -> DiscreteMeasure:
    """Union of ``span(e_1..e_k)`` and ``span(e_{n-k+1}..e_n)`` within ``B_radius``."""
    if not 1 <= k < n:
        raise InputError("need 1 <= k < n")
    a = plane_measure(n, k, density, spacing, radius)
    Q = np.zeros_like(a.points)
    Q[:, n - k:] = a.points[:, :k]
    return _merge(np.vstack([a.points, Q]), np.concatenate([a.weights, a.weights]))


def graph_set(f: Callable[[np.ndarray], np.ndarray], k: int = 1, spacing: float = 0.01, half_width: float = 1.0) -> np.ndarray:
    """Samples ``(u, f(u))`` over the cube ``[-half_width, half_width]^k``."""
    if not spacing > 0:
        raise InputError("spacing must be positive")
    m = int(np.floor(half_width / spacing))
    g = spacing * np.arange(-m, m + 1)
    U = _lattice(g, k)
    return np.hstack([U, np.asarray(f(U), dtype=float).reshape(len(U), -1)])


def plane_samples(n: int, k: int, spacing: float, radius: float = 1.0) -> np.ndarray:
    """Grid samples of ``span(e_1..e_k)`` inside ``B_radius`` as a bare array."""
    return plane_measure(n, k, 1.0, spacing, radius).points.copy()
