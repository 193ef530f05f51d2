"""Jones beta-numbers, best-subspace fits and discrete distortion.

``beta_k(x, r)^2 = r^{-k-2} * min_L  sum_{p in B_r(x)} w_p d(p, L)^2``

The minimizing plane passes through the weighted centroid and is spanned by
the top ``k`` eigenvectors of the weighted second moment about it.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptySliceError, InputError
from .geometry import AffineSubspace, Ball, as_point
from .measure import DiscreteMeasure, restrict

TIE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SubspaceFit:
    """Result of an L^2 plane fit on one ball.

    ``eigenvalues`` are in decreasing order; ``vacuous`` marks an empty slice.
    """

    subspace: AffineSubspace
    beta: float
    eigenvalues: np.ndarray
    mass: float
    radius: float
    vacuous: bool = False


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if len(nz) and v[nz[0]] < 0:
        return -v
    return v


def top_eigenvectors(C: np.ndarray, k: int):
    """Descending eigenvalues and a deterministic orthonormal top-k basis.

    When eigenvalues ``k`` and ``k+1`` tie to within ``TIE_TOL``, the tied
    eigenspace is resolved by projecting the standard basis vectors onto it
    in order and orthonormalizing.
    """
    vals, vecs = np.linalg.eigh(C)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    n = len(vals)
    if k == 0:
        return vals, np.zeros((0, n))
    if k == n:
        return vals, np.eye(n)
    tol = TIE_TOL * max(1.0, abs(vals[0]))
    if abs(vals[k - 1] - vals[k]) > tol:
        U = np.array([_canonical_sign(vecs[:, i]) for i in range(k)])
        return vals, U
    cluster = [i for i in range(n) if abs(vals[i] - vals[k - 1]) <= tol or abs(vals[i] - vals[k]) <= tol]
    lo = min(cluster)
    chosen = [vecs[:, i] for i in range(lo)]
    E = vecs[:, cluster]
    need = k - lo
    picked: list[np.ndarray] = []
    for j in range(n):
        if len(picked) == need:
            break
        w = E @ E[j, :]
        for q in picked:
            w = w - (q @ w) * q
        nw = np.linalg.norm(w)
        if nw > 1e-8:
            picked.append(w / nw)
    U = np.array([_canonical_sign(v) for v in chosen] + picked)
    return vals, U


def fit_weighted_points(points, weights, k: int, radius: float, center=None) -> SubspaceFit:
    """L^2 fit of ``k``-plane to weighted points, normalized at ``radius``."""
    P = np.atleast_2d(np.asarray(points, dtype=float))
    n = P.shape[1]
    if not 0 <= k < n:
        raise InputError(f"need 0 <= k < n, got k={k}, n={n}")
    w = np.asarray(weights, dtype=float).reshape(-1)
    tot = float(w.sum()) if len(w) else 0.0
    if len(P) == 0 or not tot > 0:
        base = np.zeros(n) if center is None else as_point(center, n)
        return SubspaceFit(AffineSubspace(base, np.eye(n)[:k]), 0.0, np.zeros(n), 0.0, radius, True)
    mu = (w[:, None] * P).sum(axis=0) / tot
    D = P - mu
    C = (w[:, None] * D).T @ D
    vals, U = top_eigenvectors(C, k)
    resid = float(max(0.0, vals[k:].sum()))
    beta = float(np.sqrt(resid / radius ** (k + 2)))
    return SubspaceFit(AffineSubspace(mu, U), beta, vals, tot, radius, False)


def fit_best_subspace(m: DiscreteMeasure, B: Ball, k: int, closed: bool = False) -> SubspaceFit:
    """Best L^2 ``k``-plane for ``m`` restricted to ``B``."""
    if not 0 <= k < m.n:
        raise InputError(f"need 0 <= k < n, got k={k}, n={m.n}")
    s = restrict(m, B, closed=closed)
    return fit_weighted_points(s.points, s.weights, k, B.radius, center=B.center)


def beta_number(m: DiscreteMeasure, x, r: float, k: int) -> float:
    return fit_best_subspace(m, Ball(x, r), k).beta


# ------------------------------------------------------------------ batched


def batched_moments(points, weights, centers, radii, tree: Optional[cKDTree] = None, max_pairs: int = 2_000_000):
    """Mass, centroid and centered second moment of many open balls.

    Returns ``(mass, centroid, second_moment)`` with shapes ``(m,)``,
    ``(m, n)``, ``(m, n, n)``. Two passes over the member pairs: centroid
    first, then the moment about it.
    """
    P = np.asarray(points, dtype=float)
    W = np.asarray(weights, dtype=float)
    C = np.atleast_2d(np.asarray(centers, dtype=float))
    R = np.broadcast_to(np.asarray(radii, dtype=float), (len(C),)).copy()
    m, n = len(C), P.shape[1]
    mass = np.zeros(m)
    cent = np.zeros((m, n))
    mom = np.zeros((m, n, n))
    if m == 0:
        return mass, cent, mom
    tree = tree if tree is not None else cKDTree(P)
    # balls swallowing the whole support share one global moment
    g = P.mean(axis=0)
    reach = float(np.sqrt(((P - g) ** 2).sum(axis=1)).max())
    full = np.linalg.norm(C - g, axis=1) + reach * (1 + 1e-12) < R
    if np.any(full):
        tot = W.sum()
        mu = (W[:, None] * P).sum(axis=0) / tot
        D = P - mu
        mass[full], cent[full], mom[full] = tot, mu, (W[:, None] * D).T @ D
    counts = np.asarray(tree.query_ball_point(C, R, return_length=True))
    counts[full] = 0
    total = int(counts.sum())
    order = np.argsort(-counts, kind="stable")
    order = order[~full[order]]
    m = len(order)
    dense = total > 20 * max_pairs
    start = 0
    while start < m:
        acc, stop = 0, start
        while stop < m and (stop == start or acc + counts[order[stop]] <= max_pairs):
            acc += counts[order[stop]]
            stop += 1
        rows = order[start:stop]
        start = stop
        if counts[rows].sum() == 0:
            continue
        if dense or counts[rows].sum() > 0.05 * len(rows) * len(P):
            _dense_block(P, W, C, R, rows, mass, cent, mom)
        else:
            _sparse_block(P, W, C, R, rows, tree, mass, cent, mom)
    return mass, cent, mom


def _sparse_block(P, W, C, R, rows, tree, mass, cent, mom):
    sub = cKDTree(C[rows])
    pairs = sub.sparse_distance_matrix(tree, float(R[rows].max()), output_type="ndarray")
    if len(pairs) == 0:
        return
    i, j, v = pairs["i"], pairs["j"], pairs["v"]
    keep = v < R[rows][i]
    i, j = i[keep], j[keep]
    if len(i) == 0:
        return
    nb = len(rows)
    w = W[j]
    s0 = np.bincount(i, weights=w, minlength=nb)
    n = P.shape[1]
    s1 = np.stack([np.bincount(i, weights=w * P[j, a], minlength=nb) for a in range(n)], axis=1)
    ok = s0 > 0
    mu = np.zeros_like(s1)
    mu[ok] = s1[ok] / s0[ok, None]
    D = P[j] - mu[i]
    M = np.zeros((nb, n, n))
    for a in range(n):
        for b in range(a, n):
            val = np.bincount(i, weights=w * D[:, a] * D[:, b], minlength=nb)
            M[:, a, b] = val
            M[:, b, a] = val
    mass[rows] = s0
    cent[rows] = mu
    mom[rows] = M


def _ball_mask(C, P, pn, R) -> np.ndarray:
    """``|p - c| < r`` via the Gram identity, with exact recomputation near the sphere."""
    cn = (C ** 2).sum(axis=1)
    d2 = cn[:, None] + pn[None, :] - 2.0 * (C @ P.T)
    R2 = (R ** 2)[:, None]
    mask = d2 < R2
    near = np.abs(d2 - R2) <= 1e-9 * (R2 + cn[:, None] + pn[None, :])
    if near.any():
        i, j = np.nonzero(near)
        mask[i, j] = np.sqrt(np.sum((P[j] - C[i]) ** 2, axis=1)) < R[i]
    return mask


def _dense_block(P, W, C, R, rows, mass, cent, mom):
    n = P.shape[1]
    chunk = max(1, min(256, 2_000_000 // (len(P) * n)))
    pn = (P ** 2).sum(axis=1)
    shift = P.mean(axis=0)
    Q = P - shift
    WQ = W[:, None] * Q
    WQQ = (W[:, None, None] * Q[:, :, None] * Q[:, None, :]).reshape(len(P), n * n)
    for s in range(0, len(rows), chunk):
        rr = rows[s:s + chunk]
        mask = _ball_mask(C[rr], P, pn, R[rr]).astype(float)
        s0 = mask @ W
        s1 = mask @ WQ
        s2 = (mask @ WQQ).reshape(len(rr), n, n)
        ok = s0 > 0
        mu = np.zeros_like(s1)
        mu[ok] = s1[ok] / s0[ok, None]
        M = s2 - s0[:, None, None] * mu[:, :, None] * mu[:, None, :]
        M = 0.5 * (M + np.transpose(M, (0, 2, 1)))
        mass[rr] = s0
        cent[rr] = mu + shift * ok[:, None]
        mom[rr] = M


def beta_table(m: DiscreteMeasure, centers, k: int, scales) -> np.ndarray:
    """``beta_k(c, s)`` for every center (rows) and scale (columns)."""
    C = np.atleast_2d(np.asarray(centers, dtype=float))
    scales = np.asarray(scales, dtype=float)
    out = np.zeros((len(C), len(scales)))
    n = m.n
    for j, s in enumerate(scales):
        mass, _, mom = batched_moments(m.points, m.weights, C, s, tree=m.tree)
        ok = mass > 0
        if not np.any(ok):
            continue
        vals = np.linalg.eigvalsh(mom[ok])
        resid = np.clip(vals[:, : n - k].sum(axis=1), 0.0, None)
        out[ok, j] = np.sqrt(resid / s ** (k + 2))
    return out


def batched_fits(m: DiscreteMeasure, centers, radii, k: int):
    """Vectorized L^2 fits; returns ``(mass, centroid, basis (m,k,n), beta)``.

    Ties between eigenvalues ``k`` and ``k+1`` fall back to the deterministic
    per-ball rule of :func:`top_eigenvectors`.
    """
    C = np.atleast_2d(np.asarray(centers, dtype=float))
    R = np.broadcast_to(np.asarray(radii, dtype=float), (len(C),))
    mass, cent, mom = batched_moments(m.points, m.weights, C, R, tree=m.tree)
    n = m.n
    vals, vecs = np.linalg.eigh(mom)
    vals, vecs = vals[:, ::-1], vecs[:, :, ::-1]
    U = np.transpose(vecs[:, :, :k], (0, 2, 1)).copy()
    first = np.argmax(np.abs(U) > 1e-12, axis=2)
    sgn = np.sign(np.take_along_axis(U, first[:, :, None], axis=2))
    sgn[sgn == 0] = 1.0
    U *= sgn
    if 0 < k < n:
        tol = TIE_TOL * np.maximum(1.0, np.abs(vals[:, 0]))
        for i in np.flatnonzero(np.abs(vals[:, k - 1] - vals[:, k]) <= tol):
            _, U[i] = top_eigenvectors(mom[i], k)
    resid = np.clip(vals[:, k:].sum(axis=1), 0.0, None)
    beta = np.sqrt(resid / R ** (k + 2))
    empty = mass <= 0
    cent[empty] = C[empty]
    U[empty] = np.eye(n)[:k]
    beta[empty] = 0.0
    return mass, cent, U, beta


# ------------------------------------------------------------------ L-infinity


def _complement(U: np.ndarray, n: int) -> np.ndarray:
    Q, _ = np.linalg.qr(np.hstack([U.T, np.eye(n)]))
    return Q[:, U.shape[0]:n].T


def _linf_objective(S, base, U, disk=None, tree=None):
    D = S - base
    if len(U):
        D = D - (D @ U.T) @ U
    val = float(np.sqrt((D ** 2).sum(axis=1)).max())
    if disk is not None:
        center, radius, grid = disk
        c = base + ((center - base) @ U.T) @ U if len(U) else base
        h2 = float(((center - c) ** 2).sum())
        if h2 < radius ** 2:
            rho = np.sqrt(radius ** 2 - h2)
            q = c + rho * grid @ U
            val = max(val, float(tree.query(q)[0].max()))
    return val


def _disk_grid(k: int, m: int = 64) -> np.ndarray:
    g = np.linspace(-1.0, 1.0, 2 * m + 1)
    mesh = np.stack(np.meshgrid(*([g] * k), indexing="ij"), axis=-1).reshape(-1, k)
    return mesh[(mesh ** 2).sum(axis=1) <= 1.0]


def _local_search(S, base, U, r, objective):
    n = S.shape[1]
    k = len(U)
    best = objective(base, U)
    tstep, astep = 0.25 * r, 0.25
    while tstep > 1e-9 * r or astep > 1e-9:
        improved = False
        N = _complement(U, n) if k < n else np.zeros((0, n))
        for nu in N:
            for sgn in (1.0, -1.0):
                b2 = base + sgn * tstep * nu
                v = objective(b2, U)
                if v < best - 1e-15:
                    best, base, improved = v, b2, True
        for i in range(k):
            for nu in N:
                for sgn in (1.0, -1.0):
                    t = sgn * astep
                    U2 = U.copy()
                    U2[i] = np.cos(t) * U[i] + np.sin(t) * nu
                    v = objective(base, U2)
                    if v < best - 1e-15:
                        best, U, improved = v, U2, True
        if not improved:
            tstep *= 0.5
            astep *= 0.5
    return best, base, U


def beta_linf(points, B: Ball, k: int, restarts: int = 3, two_sided: bool = False) -> float:
    """Scaled L^infinity beta-number of a finite set on ``B``.

    By default the set-to-plane distance ``sup_{a in S∩B} d(a, L)`` is
    minimized (the plane-to-set half is meaningless for a finite sample).
    ``two_sided=True`` adds the plane-slice-to-set half, sampled on a disk
    grid. The result is a value attained by an explicit plane, hence an
    upper bound on the infimum.
    """
    X = np.atleast_2d(np.asarray(points, dtype=float))
    n = X.shape[1]
    if not 0 <= k < n:
        raise InputError(f"need 0 <= k < n, got k={k}, n={n}")
    S = X[np.linalg.norm(X - B.center, axis=1) < B.radius]
    if len(S) == 0:
        raise EmptySliceError("no points of the set inside the ball")
    r = B.radius
    disk = tree = None
    if two_sided and k > 0:
        disk = (B.center, r, _disk_grid(k))
        tree = cKDTree(S)

    def objective(base, U):
        return _linf_objective(S, base, U, disk, tree)

    fit = fit_weighted_points(S, np.ones(len(S)), k, r)
    U0, b0 = fit.subspace.basis.copy(), fit.subspace.base.copy()
    seeds = [(b0, U0)]
    if k < n:
        N = _complement(U0, n)
        coords = (S - b0) @ N.T
        mid = 0.5 * (coords.max(axis=0) + coords.min(axis=0))
        seeds.append((b0 + mid @ N, U0))
        resid = np.sqrt(((coords) ** 2).sum(axis=1))
        if resid.max() > 0:
            fw = fit_weighted_points(S, 1.0 + resid / resid.max(), k, r)
            seeds.append((fw.subspace.base.copy(), fw.subspace.basis.copy()))
    best = np.inf
    for base, U in seeds[: max(1, restarts)]:
        val, _, _ = _local_search(S, base, U, r, objective)
        best = min(best, val)
    return best / r


# ------------------------------------------------------------------ profiles


def dyadic_scales(r_max: float, r_min: float, ratio: float = 2.0) -> np.ndarray:
    if not (0 < r_min < r_max):
        raise InputError("need 0 < r_min < r_max")
    if ratio <= 1:
        raise InputError("scale ratio must exceed 1")
    out = []
    s = r_max
    while s >= r_min * (1 - 1e-12):
        out.append(s)
        s /= ratio
    return np.array(out)


@dataclass(frozen=True, eq=False)
class BetaProfile:
    """Betas at decreasing scales and the running distortion.

    ``distortion[i] = sum_{j >= i} betas[j]^2``, the discrete distortion at
    scale ``scales[i]``.
    """

    center: np.ndarray
    k: int
    scales: np.ndarray
    betas: np.ndarray
    distortion: np.ndarray
    vacuous: np.ndarray
    measure_hash: str = ""

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "center": self.center.tolist(),
            "measure_hash": self.measure_hash,
            "scale": self.scales.tolist(),
            "beta": self.betas.tolist(),
            "distortion": self.distortion.tolist(),
        }

    def write_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["scale", "beta", "distortion"])
            for s, b, d in zip(self.scales, self.betas, self.distortion):
                w.writerow([f"{s:.17g}", f"{b:.17g}", f"{d:.17g}"])

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def beta_profile(m: DiscreteMeasure, x, k: int, r_max: float, r_min: float, ratio: float = 2.0) -> BetaProfile:
    x = as_point(x, m.n)
    scales = dyadic_scales(r_max, r_min, ratio)
    fits = [fit_best_subspace(m, Ball(x, s), k) for s in scales]
    betas = np.array([f.beta for f in fits])
    dist = np.cumsum((betas ** 2)[::-1])[::-1]
    return BetaProfile(x, k, scales, betas, dist, np.array([f.vacuous for f in fits]), m.content_hash)
