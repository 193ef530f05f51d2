"""Balls, affine subspaces and the comparison estimates between them.

Everything here is a pure function of immutable inputs. Points are 1-D
float arrays of length ``n``; batches are ``(m, n)`` arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import subspace_angles

from .errors import DegeneracyError, InputError

ORTHO_TOL = 1e-10
REORTH_TRIGGER = 1e-8


def as_point(y, n: Optional[int] = None) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1:
        raise InputError(f"expected a point, got array of shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise InputError(f"dimension mismatch: expected {n}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise InputError("point has non-finite coordinates")
    return arr


@dataclass(frozen=True, eq=False)
class Ball:
    """Open ball ``B_r(x)``."""

    center: np.ndarray
    radius: float

    def __post_init__(self):
        c = as_point(self.center)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        r = float(self.radius)
        if not (r > 0 and math.isfinite(r)):
            raise InputError(f"ball radius must be positive and finite, got {self.radius}")
        object.__setattr__(self, "radius", r)

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def scaled(self, factor: float) -> "Ball":
        return Ball(self.center, self.radius * factor)

    def contains(self, pts, closed: bool = False) -> np.ndarray:
        d = np.linalg.norm(np.atleast_2d(pts) - self.center, axis=1)
        return d <= self.radius if closed else d < self.radius

    def to_dict(self) -> dict:
        return {"center": self.center.tolist(), "radius": self.radius}

    @classmethod
    def from_dict(cls, d: dict) -> "Ball":
        return cls(np.asarray(d["center"], dtype=float), float(d["radius"]))


def orthonormalize(vectors, tol: float = 1e-12) -> np.ndarray:
    """Modified Gram-Schmidt, rerun once if orthogonality is lost.

    Raises DegeneracyError with the index of the first dependent vector.
    """
    V = np.atleast_2d(np.asarray(vectors, dtype=float))
    if V.size == 0:
        return V.reshape(0, V.shape[-1] if V.ndim == 2 else 0)

    def _mgs(A):
        Q = []
        for i, v in enumerate(A):
            w = v.copy()
            scale = np.linalg.norm(v)
            for q in Q:
                w -= (q @ w) * q
            nw = np.linalg.norm(w)
            if scale == 0 or nw <= tol * max(scale, 1.0):
                raise DegeneracyError(f"vector {i} is (numerically) dependent on its predecessors", index=i)
            Q.append(w / nw)
        return np.array(Q)

    Q = _mgs(V)
    if np.abs(Q @ Q.T - np.eye(len(Q))).max() > REORTH_TRIGGER:
        Q = _mgs(Q)
    return Q


@dataclass(frozen=True, eq=False)
class AffineSubspace:
    """Affine k-plane ``base + span(basis)``; ``basis`` has orthonormal rows."""

    base: np.ndarray
    basis: np.ndarray
    P: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        b = as_point(self.base)
        B = np.asarray(self.basis, dtype=float).reshape(-1, b.shape[0])
        if B.shape[0] > b.shape[0]:
            raise InputError("more basis vectors than ambient dimension")
        if B.shape[0] and np.abs(B @ B.T - np.eye(B.shape[0])).max() > ORTHO_TOL:
            raise InputError("basis is not orthonormal to 1e-10")
        b.setflags(write=False)
        B = B.copy()
        B.setflags(write=False)
        P = B.T @ B
        P.setflags(write=False)
        object.__setattr__(self, "base", b)
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "P", P)

    @classmethod
    def span(cls, base, vectors) -> "AffineSubspace":
        base = as_point(base)
        V = np.asarray(vectors, dtype=float).reshape(-1, base.shape[0])
        return cls(base, orthonormalize(V) if len(V) else V)

    @property
    def n(self) -> int:
        return self.base.shape[0]

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    def linear(self) -> "AffineSubspace":
        return AffineSubspace(np.zeros(self.n), self.basis)

    def coordinates(self, y) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.base) @ self.basis.T

    def project(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.shape[-1] != self.n:
            raise InputError(f"dimension mismatch: subspace lives in R^{self.n}, got {y.shape[-1]}")
        return self.base + (y - self.base) @ self.P

    def distance(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return np.linalg.norm(y - self.project(y), axis=-1)

    def to_dict(self) -> dict:
        return {"base": self.base.tolist(), "basis": self.basis.tolist()}


def project(L: AffineSubspace, y) -> np.ndarray:
    """Orthogonal projection ``pi_L(y)``."""
    return L.project(as_point(y, L.n))


def linear_projection_distance(L1: AffineSubspace, L2: AffineSubspace) -> float:
    """Operator norm of the difference of the linear projectors.

    Equals the sine of the largest principal angle between the linear parts.
    """
    if L1.n != L2.n:
        raise InputError("subspaces live in different ambient dimensions")
    if L1.k != L2.k:
        raise InputError(f"subspace dimensions differ ({L1.k} vs {L2.k})")
    if L1.k == 0 or L1.k == L1.n:
        return 0.0
    theta = subspace_angles(L1.basis.T, L2.basis.T)
    return float(np.sin(np.max(theta)))


def _slice(L: AffineSubspace, B: Ball):
    c = L.project(B.center)
    h2 = float(np.sum((B.center - c) ** 2))
    if h2 >= B.radius ** 2:
        return None
    return c, math.sqrt(B.radius ** 2 - h2)


def _through(L: AffineSubspace, B: Ball) -> bool:
    return float(L.distance(B.center)) <= 1e-12 * B.radius


def _dist_to_disk(q: np.ndarray, L: AffineSubspace, c: np.ndarray, rho: float) -> np.ndarray:
    t = (q - c) @ L.basis.T
    nt = np.linalg.norm(t, axis=-1, keepdims=True)
    t = np.where(nt > rho, t * (rho / np.maximum(nt, 1e-300)), t)
    return np.linalg.norm(q - (c + t @ L.basis), axis=-1)


def sphere_samples(k: int, m: int) -> np.ndarray:
    """Radially normalized surface grid of the cube ``[-1,1]^k``, ``m`` cells per edge."""
    if k == 1:
        return np.array([[-1.0], [1.0]])
    g = np.linspace(-1.0, 1.0, m + 1)
    faces = []
    mesh = np.stack(np.meshgrid(*([g] * (k - 1)), indexing="ij"), axis=-1).reshape(-1, k - 1)
    for axis in range(k):
        for sign in (-1.0, 1.0):
            f = np.insert(mesh, axis, sign, axis=1)
            faces.append(f)
    pts = np.unique(np.concatenate(faces), axis=0)
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def _cells_per_edge(k: int, resolution: int, max_samples: int) -> int:
    if k <= 1:
        return 1
    m = resolution
    while m > 4 and 2 * k * (m + 1) ** (k - 1) > max_samples:
        m //= 2
    return m


def hausdorff_sampling_tolerance(k: int, radius: float, resolution: int = 64, max_samples: int = 40000) -> float:
    """Worst-case under-estimate of :func:`subspace_hausdorff_on_ball` for slices of ``radius``."""
    if k <= 1:
        return 0.0
    m = _cells_per_edge(k, resolution, max_samples)
    return radius * math.sqrt(k - 1) / m


def _one_sided(L1, c1, r1, L2, c2, r2, resolution, max_samples):
    if L1.k == 0 or r1 == 0.0:
        return float(_dist_to_disk(c1[None, :], L2, c2, r2)[0])
    m = _cells_per_edge(L1.k, resolution, max_samples)
    dirs = sphere_samples(L1.k, m)
    q = c1 + r1 * dirs @ L1.basis
    d = _dist_to_disk(q, L2, c2, r2)
    best = int(np.argmax(d))
    val = float(d[best])
    if L1.k >= 2:
        # local ascent on the boundary sphere; only ever raises the estimate
        t = dirs[best].copy()
        step = 2.0 / m
        for _ in range(40):
            improved = False
            for e in np.vstack([np.eye(L1.k), -np.eye(L1.k)]):
                cand = t + step * e
                cand /= np.linalg.norm(cand)
                dv = float(_dist_to_disk((c1 + r1 * cand @ L1.basis)[None, :], L2, c2, r2)[0])
                if dv > val:
                    val, t, improved = dv, cand, True
            if not improved:
                step *= 0.5
                if step < 1e-9:
                    break
    return val


def subspace_hausdorff_on_ball(
    L1: AffineSubspace,
    L2: AffineSubspace,
    B: Ball,
    resolution: int = 64,
    max_samples: int = 40000,
) -> Optional[float]:
    """Hausdorff distance between the slices ``L1 ∩ B`` and ``L2 ∩ B``.

    Equal-dimension planes through the center give ``r sin(theta_max)``
    exactly. Otherwise the distance from a point to a disk slice is exact. Its maximum over the
    other slice sits on that slice's boundary sphere (the distance is convex),
    so only the sphere is sampled, on a cube-surface grid with ``resolution``
    cells per edge. The estimate is never above the truth and is below it by at
    most :func:`hausdorff_sampling_tolerance`.

    Returns
    -------
    float or None
        ``None`` signals a disjoint slice: one of the planes misses ``B``.
    """
    if L1.n != L2.n or L1.n != B.dim:
        raise InputError("dimension mismatch between subspaces and ball")
    if L1.k == L2.k and _through(L1, B) and _through(L2, B):
        # both slices are full disks about the center: the distance is r sin(theta_max)
        return B.radius * linear_projection_distance(L1, L2)
    s1, s2 = _slice(L1, B), _slice(L2, B)
    if s1 is None or s2 is None:
        return None
    a = _one_sided(L1, *s1, L2, *s2, resolution, max_samples)
    b = _one_sided(L2, *s2, L1, *s1, resolution, max_samples)
    return max(a, b)


def square_gain_check(L1: AffineSubspace, L2: AffineSubspace, v, resolution: int = 64) -> tuple[float, float]:
    """Return ``(| |pi_1 v| - 1 |, d^2)`` for a unit ``v`` in the linear part of ``L2``.

    ``d`` is the slice Hausdorff distance of the linear parts on the unit
    ball, which is exact for this configuration.
    """
    v = as_point(v, L1.n)
    if abs(np.linalg.norm(v) - 1.0) > 1e-10:
        raise InputError("v must be a unit vector (to 1e-10)")
    l1, l2 = L1.linear(), L2.linear()
    if np.linalg.norm(v - v @ l2.P) > 1e-8:
        raise InputError("v does not lie in the linear part of L2")
    gap = abs(float(np.linalg.norm(v @ l1.P)) - 1.0)
    d = subspace_hausdorff_on_ball(l1, l2, Ball(np.zeros(L1.n), 1.0), resolution=resolution)
    return gap, float(d) ** 2


def square_gain_tolerance(d: float, k: int, resolution: int = 64) -> float:
    """Slack on ``d^2`` accounting for the sampling under-estimate of ``d``."""
    h = hausdorff_sampling_tolerance(k, 1.0, resolution)
    return 2.0 * d * h + h * h


def independence_clearances(points) -> list[float]:
    """Distance of each ``x_i`` (i >= 1) to the affine span of ``x_0..x_{i-1}``."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    out = []
    Q = np.zeros((0, X.shape[1]))
    for i in range(1, len(X)):
        w = X[i] - X[0]
        for _ in range(2):
            w = w - (w @ Q.T) @ Q
        nw = float(np.linalg.norm(w))
        out.append(nw)
        if nw > 0:
            Q = np.vstack([Q, w / nw])
    return out


def fit_through_independent_points(points: Sequence, eps: float, r: float) -> AffineSubspace:
    """Affine span ``x_0 + span{x_i - x_0}`` of a (k, eps)-independent tuple."""
    X = np.atleast_2d(np.asarray(points, dtype=float))
    for i, c in enumerate(independence_clearances(X), start=1):
        if c < eps * r:
            raise DegeneracyError(
                f"point {i} lies within {c:.3g} < eps*r = {eps * r:.3g} of the span of its predecessors",
                index=i,
            )
    return AffineSubspace.span(X[0], X[1:] - X[0])
