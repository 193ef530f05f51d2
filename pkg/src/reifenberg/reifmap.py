"""Numerical Reifenberg parametrization.

A finite set ``S`` is smoothed at each dyadic scale ``r`` into the zero set
of ``Phi_r(y) = |y - m_y|^2 / 2``, where ``m_y`` is the projection of ``y``
onto a glued plane ``L_y``. Composing the projections onto these level sets
from fine to coarse carries ``S`` onto a single plane.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .beta import batched_fits, beta_linf, fit_weighted_points
from .covering import maximal_disjoint
from .errors import DegenerateFieldError, InputError, InsufficientDataError, ProjectionStallError
from .geometry import AffineSubspace, Ball
from .measure import DiscreteMeasure

EIGEN_GAP = 1e-8
MAX_CANDIDATES = 2_000_000


@dataclass(frozen=True)
class ReifmapConfig:
    """Knobs of the construction.

    ``partition_constant`` is ``c`` in ``r~ = c * max(d(x, S), r)``; bumps are
    supported on ``B_{4 r~}``; plane fits use ``B_{fit_factor * r~}``.
    """

    partition_constant: float = 0.125
    fit_factor: float = 16.0
    domain_radius: float = 2.0
    far_field: bool = False
    max_iter: int = 50
    stall_ratio: float = 1e-4
    delta_ceiling: float = 0.1

    def __post_init__(self):
        if not 0 < self.partition_constant <= 1:
            raise InputError("partition_constant must lie in (0, 1]")
        if not self.fit_factor > 0:
            raise InputError("fit_factor must be positive")
        if self.max_iter < 1:
            raise InputError("max_iter must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)


def _as_set(S) -> np.ndarray:
    P = np.asarray(S, dtype=float)
    if P.ndim == 1:
        P = P[None, :]
    if P.ndim != 2 or len(P) == 0:
        raise InputError("the set must be a nonempty (N, n) array")
    if not np.all(np.isfinite(P)):
        raise InputError("non-finite coordinates")
    return P


# ------------------------------------------------------------------ partition


def _bump(t: np.ndarray) -> np.ndarray:
    return np.where(t < 1.0, (1.0 - np.minimum(t, 1.0) ** 2) ** 3, 0.0)


@dataclass(frozen=True, eq=False)
class PartitionCover:
    """Centers ``x_a`` with radii ``r~_a`` and normalized ``(1-t^2)^3`` bumps."""

    centers: np.ndarray
    radii: np.ndarray
    r: float
    _levels: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self._levels:
            # bucket radii by powers of two so each query uses a tight search radius
            key = np.floor(np.log2(self.radii / self.radii.min() + 1e-15)).astype(int)
            for b in np.unique(key):
                idx = np.flatnonzero(key == b)
                self._levels.append((idx, cKDTree(self.centers[idx]), float(self.radii[idx].max())))

    def __len__(self) -> int:
        return len(self.centers)

    def pairs(self, Y: np.ndarray):
        """``(query, center, distance)`` for every center with ``|y - x_a| < 4 r~_a``."""
        qs, cs, ds = [], [], []
        qt = cKDTree(Y)
        for idx, tree, rmax in self._levels:
            sp = qt.sparse_distance_matrix(tree, 4 * rmax, output_type="ndarray")
            if len(sp) == 0:
                continue
            c = idx[sp["j"]]
            keep = sp["v"] < 4 * self.radii[c]
            qs.append(sp["i"][keep])
            cs.append(c[keep])
            ds.append(sp["v"][keep])
        if not qs:
            return np.zeros(0, int), np.zeros(0, int), np.zeros(0)
        q, c, d = np.concatenate(qs), np.concatenate(cs), np.concatenate(ds)
        o = np.lexsort((c, q))
        return q[o], c[o], d[o]

    def weights(self, Y) -> tuple:
        """Sparse partition weights ``(query, center, phi)``; rows sum to 1."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        q, c, d = self.pairs(Y)
        w = _bump(d / (4 * self.radii[c]))
        tot = np.bincount(q, weights=w, minlength=len(Y))
        if np.any(tot <= 0):
            i = int(np.flatnonzero(tot <= 0)[0])
            raise DegenerateFieldError(f"point {Y[i].tolist()} lies outside the partition cover", Y[i])
        return q, c, w / tot[q]

    def multiplicity(self, Y) -> np.ndarray:
        """Number of supports ``B_{4 r~_a}`` containing each query."""
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        q, _, _ = self.pairs(Y)
        return np.bincount(q, minlength=len(Y))


def _far_field(S: np.ndarray, r: float, c: float, R: float, tree: cKDTree) -> tuple:
    # dyadic cells, refined while the cell is coarser than c * max(d, r) / (2 sqrt n)
    n = S.shape[1]
    k2 = 2 * np.sqrt(n)
    corners = np.array(np.meshgrid(*([[-1.0, 1.0]] * n), indexing="ij")).reshape(n, -1).T
    cells = np.zeros((1, n))
    size = 2.0 * R
    pts, rad = [], []
    total = 0
    while len(cells):
        d, _ = tree.query(cells)
        want = c * np.maximum(d, r) / k2
        inside = np.linalg.norm(cells, axis=1) < R
        take = inside & (want >= size)
        pts.append(cells[take])
        rad.append(c * np.maximum(d[take], r))
        total += int(take.sum())
        split = (want < size) & (np.linalg.norm(cells, axis=1) < R + size * np.sqrt(n) / 2)
        cells = (cells[split][:, None, :] + (size / 4) * corners[None, :, :]).reshape(-1, n)
        size /= 2
        if total + len(cells) > MAX_CANDIDATES:
            raise InputError("far-field cells exceed the candidate budget; raise r or disable far_field")
    return np.vstack(pts), np.concatenate(rad)


def build_partition(S, r: float, config: Optional[ReifmapConfig] = None) -> PartitionCover:
    """Maximal family with disjoint quarter balls ``B_{r~_a / 4}(x_a)``.

    Candidates are the points of ``S`` (radius ``c r``) and, with
    ``far_field``, centers of dyadic cells in ``B_domain`` refined until the
    cell size is at most ``c * max(d(y, S), r) / (2 sqrt n)``.
    """
    cfg = config or ReifmapConfig()
    if not r > 0:
        raise InputError("scale must be positive")
    P = _as_set(S)
    tree = cKDTree(P)
    c = cfg.partition_constant
    X = [P]
    R = [np.full(len(P), c * r)]
    if cfg.far_field:
        G, rg = _far_field(P, r, c, cfg.domain_radius, tree)
        X.append(G)
        R.append(rg)
    X = np.vstack(X)
    R = np.concatenate(R)
    sel = maximal_disjoint(X, R, shrink=0.25)
    sel = np.sort(sel)
    return PartitionCover(X[sel], R[sel], float(r))


# ------------------------------------------------------------------ subspace field


@dataclass(frozen=True, eq=False)
class FieldValue:
    """Field data at a batch of queries."""

    ell: np.ndarray
    M: np.ndarray
    basis: np.ndarray
    eigenvalues: np.ndarray
    m: np.ndarray

    @property
    def projector(self) -> np.ndarray:
        return np.einsum("qki,qkj->qij", self.basis, self.basis)


@dataclass(frozen=True, eq=False)
class SubspaceField:
    """Glued planes ``L_y = ell_y + span(top-k eigenvectors of M_y)``.

    ``M_y = sum phi_a P_a`` and ``ell_y = sum phi_a pi_a(y)`` over the
    partition, with ``L_a`` the L^2 fit to ``S`` on ``B_{fit r~_a}(x_a)``.
    """

    cover: PartitionCover
    bases: np.ndarray
    projectors: np.ndarray
    k: int

    @property
    def n(self) -> int:
        return self.bases.shape[1]

    def evaluate(self, Y) -> FieldValue:
        Y = np.atleast_2d(np.asarray(Y, dtype=float))
        q, c, phi = self.cover.weights(Y)
        N, n = Y.shape
        Pc = self.projectors[c]
        pi = self.bases[c] + np.einsum("pij,pj->pi", Pc, Y[q] - self.bases[c])
        ell = np.zeros((N, n))
        M = np.zeros((N, n, n))
        np.add.at(ell, q, phi[:, None] * pi)
        np.add.at(M, q, phi[:, None, None] * Pc)
        M = 0.5 * (M + np.transpose(M, (0, 2, 1)))
        vals, vecs = np.linalg.eigh(M)
        vals, vecs = vals[:, ::-1], vecs[:, :, ::-1]
        if self.k < n:
            gap = vals[:, self.k - 1] - vals[:, self.k]
            if np.any(gap < EIGEN_GAP):
                i = int(np.argmin(gap))
                raise DegenerateFieldError(
                    f"eigen-gap {gap[i]:.3g} below {EIGEN_GAP} at {Y[i].tolist()}", Y[i]
                )
        U = np.transpose(vecs[:, :, : self.k], (0, 2, 1))
        D = Y - ell
        m = ell + np.einsum("qki,qk->qi", U, np.einsum("qki,qi->qk", U, D))
        return FieldValue(ell, M, U, vals, m)

    def plane(self, y) -> AffineSubspace:
        v = self.evaluate(np.asarray(y, dtype=float)[None, :])
        return AffineSubspace(v.ell[0], v.basis[0])


def subspace_field(S, r: float, k: int, config: Optional[ReifmapConfig] = None, check_delta: Optional[float] = None) -> SubspaceField:
    """Field at scale ``r``; warns when sampled ``beta_inf`` exceeds ``check_delta``."""
    cfg = config or ReifmapConfig()
    P = _as_set(S)
    n = P.shape[1]
    if not 1 <= k <= n:
        raise InputError("need 1 <= k <= n")
    cover = build_partition(P, r, cfg)
    if check_delta is not None:
        _reifenberg_check(P, r, k, check_delta)
    m = DiscreteMeasure(P)
    rad = cfg.fit_factor * cover.radii
    # grow each fit ball until it holds k+1 points
    need = min(k + 1, len(P))
    for _ in range(64):
        cnt = np.asarray(m.tree.query_ball_point(cover.centers, rad, return_length=True))
        short = cnt < need
        if not short.any():
            break
        rad = np.where(short, 2 * rad, rad)
    _, base, U, _ = batched_fits(m, cover.centers, rad, k)
    Pr = np.einsum("aki,akj->aij", U, U)
    return SubspaceField(cover, base, Pr, k)


def _reifenberg_check(P, r, k, delta, samples: int = 8) -> float:
    rng = np.random.default_rng(0)
    idx = rng.choice(len(P), size=min(samples, len(P)), replace=False)
    worst = max(beta_linf(P, Ball(P[i], r), k) for i in idx)
    if worst > delta:
        warnings.warn(f"sampled beta_inf {worst:.3g} exceeds delta = {delta:.3g} at scale {r:.3g}", stacklevel=3)
    return worst


# ------------------------------------------------------------------ distance function


def approx_distance(F: SubspaceField, y) -> np.ndarray:
    """``Phi(y) = |y - m_y|^2 / 2``; a scalar for one point, an array for many."""
    Y = np.asarray(y, dtype=float)
    v = F.evaluate(np.atleast_2d(Y))
    out = 0.5 * np.sum((np.atleast_2d(Y) - v.m) ** 2, axis=1)
    return float(out[0]) if Y.ndim == 1 else out


def approx_distance_gradient(F: SubspaceField, y) -> np.ndarray:
    """Analytic ``grad Phi = (I - Dm)^T (y - m)`` at one point.

    ``Dm`` is assembled from the bump derivatives through ``D ell``, ``dM``
    and first-order perturbation of the top-k eigenprojector.
    """
    y = np.asarray(y, dtype=float)
    n, k = F.n, F.k
    v = F.evaluate(y[None, :])
    cov = F.cover
    _, c, dist = cov.pairs(y[None, :])
    rt = 4 * cov.radii[c]
    t = dist / rt
    w = _bump(t)
    dw = (-6.0 * (1 - t ** 2) ** 2 / rt ** 2)[:, None] * (y - cov.centers[c])
    dw[t >= 1] = 0.0
    tot = w.sum()
    phi = w / tot
    dphi = (dw - phi[:, None] * dw.sum(axis=0)) / tot
    Pc = F.projectors[c]
    pi = F.bases[c] + np.einsum("pij,pj->pi", Pc, y - F.bases[c])
    ell, M = v.ell[0], v.M[0]
    Dl = (pi - ell).T @ dphi + M
    dM = np.einsum("ai,ajk->ijk", dphi, Pc)
    vals, vecs = np.linalg.eigh(M)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    top, rest = vecs[:, :k], vecs[:, k:]
    Py = top @ top.T
    D = y - ell
    Dm = np.empty((n, n))
    for i in range(n):
        G = top.T @ dM[i] @ rest
        G = G / (vals[:k, None] - vals[None, k:])
        dP = top @ G @ rest.T
        dP = dP + dP.T
        Dm[:, i] = Dl[:, i] + dP @ D + Py @ (np.eye(n)[i] - Dl[:, i])
    return (np.eye(n) - Dm).T @ (y - v.m[0])


def project_to_level(F: SubspaceField, y, tol: float = 1e-12, config: Optional[ReifmapConfig] = None) -> np.ndarray:
    """Iterate ``y <- m_y`` until the step drops below ``tol``.

    Accepts one point or an array. Raises unless ``Phi`` at the output is at
    most ``max(stall_ratio * Phi(y0), tol^2)``.
    """
    cfg = config or ReifmapConfig()
    Y0 = np.asarray(y, dtype=float)
    Y = np.atleast_2d(Y0).copy()
    v = F.evaluate(Y)
    phi0 = 0.5 * np.sum((Y - v.m) ** 2, axis=1)
    live = np.ones(len(Y), dtype=bool)
    it = 0
    while live.any() and it < cfg.max_iter:
        it += 1
        step = np.linalg.norm(v.m - Y[live], axis=1)
        Y[live] = v.m
        done = step < tol
        idx = np.flatnonzero(live)
        live[idx[done]] = False
        if live.any():
            v = F.evaluate(Y[live])
    phi = approx_distance(F, Y) if len(Y) > 1 else np.atleast_1d(approx_distance(F, Y[0]))
    floor = tol ** 2
    bad = phi > np.maximum(cfg.stall_ratio * phi0, floor)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise ProjectionStallError(
            f"projection stalled at {np.atleast_2d(Y0)[i].tolist()} after {it} iterations",
            {"start": np.atleast_2d(Y0)[i].tolist(), "phi_start": float(phi0[i]), "phi_end": float(phi[i]), "iterations": it},
        )
    return Y[0] if Y0.ndim == 1 else Y


# ------------------------------------------------------------------ composed map


@dataclass(eq=False)
class ReifenbergMap:
    """Levels ``r_i = 2^-i``; level 0 is the global L^2 plane of ``S``."""

    k: int
    depth: int
    plane: AffineSubspace
    fields: list
    points: np.ndarray
    images: np.ndarray
    coords: np.ndarray
    displacements: list
    config: ReifmapConfig = field(default_factory=ReifmapConfig)

    @property
    def scales(self) -> np.ndarray:
        return 2.0 ** -np.arange(self.depth + 1)

    def forward(self, Y) -> np.ndarray:
        """Planar coordinates of arbitrary points near ``S``."""
        Z = np.atleast_2d(np.asarray(Y, dtype=float)).copy()
        for F in reversed(self.fields):
            Z = project_to_level(F, Z, config=self.config)
        return self.plane.coordinates(Z)

    def inverse(self, u) -> np.ndarray:
        """Sample of ``S`` whose image is nearest to each planar point."""
        U = np.atleast_2d(np.asarray(u, dtype=float))
        _, i = cKDTree(self.coords).query(U)
        return self.points[i]

    def is_injective(self) -> bool:
        if len(self.coords) < 2:
            return True
        d, _ = cKDTree(self.coords).query(self.coords, k=2)
        return bool(np.all(d[:, 1] > 0))

    def diagnostics(self) -> dict:
        q = [0.5, 0.9, 1.0]
        return {
            "depth": self.depth,
            "k": self.k,
            "levels": [
                {"scale": float(2.0 ** -(i + 1)), "displacement_quantiles": dict(zip(["q50", "q90", "max"], np.quantile(d, q).tolist()))}
                for i, d in enumerate(self.displacements)
            ],
            "injective": self.is_injective(),
            "config": self.config.to_dict(),
        }

    def write_csv(self, path) -> None:
        n = self.points.shape[1]
        head = ",".join([f"x{i + 1}" for i in range(n)] + [f"u{i + 1}" for i in range(self.k)])
        np.savetxt(path, np.hstack([self.points, self.coords]), delimiter=",", header=head, comments="", fmt="%.17g")

    def write_json(self, path, exponents: Optional[tuple] = None) -> None:
        d = self.diagnostics()
        if exponents is not None:
            d["holder"] = {"lower": exponents[0], "upper": exponents[1]}
        with open(path, "w") as fh:
            json.dump(d, fh, indent=1)


def build_reifenberg_map(S, k: int, depth: int, config: Optional[ReifmapConfig] = None, delta: Optional[float] = None) -> ReifenbergMap:
    """Compose level projections from ``r_depth`` up to ``r_1``, then project to the global plane.

    ``delta``, if given, is the working flatness; values above the configured
    ceiling warn, and each level is spot-checked with ``beta_inf``.
    """
    cfg = config or ReifmapConfig()
    P = _as_set(S)
    if depth < 0:
        raise InputError("depth must be nonnegative")
    if delta is not None and delta > cfg.delta_ceiling:
        warnings.warn(f"working delta {delta} above the ceiling {cfg.delta_ceiling}", stacklevel=2)
    fit = fit_weighted_points(P, np.ones(len(P)), k, 1.0)
    plane = fit.subspace
    fields = [subspace_field(P, 2.0 ** -i, k, cfg, check_delta=delta) for i in range(1, depth + 1)]
    Z = P.copy()
    disp = []
    for F in reversed(fields):
        Z1 = project_to_level(F, Z, config=cfg)
        disp.append(np.linalg.norm(Z1 - Z, axis=1))
        Z = Z1
    disp.reverse()
    return ReifenbergMap(k, depth, plane, fields, P, Z, plane.coordinates(Z), disp, cfg)


# ------------------------------------------------------------------ exponents


def holder_exponent(
    rmap: ReifenbergMap,
    S=None,
    lower_q: float = 0.05,
    upper_q: float = 0.95,
    min_bin: int = 10,
    min_scale: Optional[float] = None,
) -> tuple:
    """Envelope exponents of the parametrization ``u -> x``.

    Sample pairs with image distance ``|u_x - u_y| >= min_scale`` (default
    the finest level ``2^-depth``) are binned by decade of the image
    distance. In each bin the ``lower_q`` and ``upper_q`` quantiles of
    ``log(|x - y| / |u_x - u_y|)`` are regressed on the bin's mean
    ``log |u_x - u_y|``; one plus each slope is returned as ``(lower, upper)``.
    Working with the ratio keeps the within-bin spread from biasing the
    slopes.
    """
    X = rmap.points if S is None else _as_set(S)
    U = rmap.coords if S is None else rmap.forward(X)
    if len(X) * (len(X) - 1) // 2 < 10:
        raise InsufficientDataError("need at least 10 pairs")
    cut = 2.0 ** -rmap.depth if min_scale is None else float(min_scale)
    dx = pdist(X)
    du = pdist(U)
    ok = (du > 0) & (dx > 0) & (du >= cut)
    dx, du = dx[ok], du[ok]
    if len(dx) < 10:
        raise InsufficientDataError("need at least 10 pairs above the resolved scale")
    lu = np.log(du)
    rho = np.log(dx) - lu
    dec = np.floor(np.log10(du)).astype(int)
    xs, lo, hi = [], [], []
    for b in np.unique(dec):
        sel = dec == b
        if sel.sum() < min_bin:
            continue
        xs.append(lu[sel].mean())
        a, c = np.quantile(rho[sel], [lower_q, upper_q])
        lo.append(a)
        hi.append(c)
    if len(xs) < 2:
        raise InsufficientDataError("fewer than two populated distance decades")
    return 1.0 + float(np.polyfit(xs, lo, 1)[0]), 1.0 + float(np.polyfit(xs, hi, 1)[0])
