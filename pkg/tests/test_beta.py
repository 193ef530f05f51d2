import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reifenberg.beta import (
    batched_fits,
    beta_linf,
    beta_number,
    beta_profile,
    beta_table,
    dyadic_scales,
    fit_best_subspace,
    top_eigenvectors,
)
from reifenberg.errors import EmptySliceError, InputError
from reifenberg.generators import dust_measure, plane_measure
from reifenberg.geometry import Ball
from reifenberg.measure import DiscreteMeasure

from oracles import disk_beta_squared, plane_residual, random_plane_search, svd_beta

seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.integers(2, 4))
def test_beta_matches_svd_oracle(seed, n):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(1, n))
    P = rng.standard_normal((60, n))
    W = rng.uniform(0.1, 3.0, 60)
    m = DiscreteMeasure(P, W)
    x, r = rng.standard_normal(n) * 0.3, float(rng.uniform(0.5, 2.5))
    want, Q, w = svd_beta(P, W, x, r, k)
    fit = fit_best_subspace(m, Ball(x, r), k)
    # compare squares: sqrt amplifies eigenvalue roundoff near zero
    floor = 1e-12 * max(1.0, float(fit.eigenvalues.sum())) / r ** (k + 2)
    assert fit.beta ** 2 == pytest.approx(want ** 2, rel=1e-9, abs=floor)
    if Q is not None:
        # the reported plane attains the reported residual
        res = plane_residual(Q, w, fit.subspace.base, fit.subspace.basis)
        assert res == pytest.approx(fit.beta ** 2 * r ** (k + 2), rel=1e-8, abs=1e-12)


@given(seeds)
def test_fit_beats_random_planes(seed):
    rng = np.random.default_rng(seed)
    n, k = 3, int(rng.integers(1, 3))
    P = rng.standard_normal((12, n))
    W = rng.uniform(0.5, 1.5, 12)
    fit = fit_best_subspace(DiscreteMeasure(P, W), Ball(np.zeros(n), 10.0), k)
    best = random_plane_search(P, W, k, 300, rng)
    assert fit.beta ** 2 * 10.0 ** (k + 2) <= best + 1e-9


def test_plane_has_zero_beta():
    m = plane_measure(3, 2, spacing=0.1)
    assert beta_number(m, [0.1, 0.2, 0.0], 0.7, 2) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("r", [0.125, 0.25, 0.5, 1.0])
def test_dust_beta_against_closed_form(r):
    m = dust_measure(2, 0.1, 0.01, 2.0)
    assert beta_number(m, [0.0, 0.0], r, 1) ** 2 == pytest.approx(disk_beta_squared(0.1, r), rel=0.03)


def test_empty_ball_is_vacuous():
    m = DiscreteMeasure([[5.0, 5.0]])
    fit = fit_best_subspace(m, Ball([0.0, 0.0], 1.0), 1)
    assert fit.vacuous and fit.beta == 0.0


def test_bad_k():
    m = DiscreteMeasure([[0.0, 0.0]])
    with pytest.raises(InputError):
        fit_best_subspace(m, Ball([0.0, 0.0], 1.0), 2)


def test_tie_break_is_deterministic():
    # four symmetric points: the covariance is a multiple of the identity
    P = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
    m = DiscreteMeasure(P)
    a = fit_best_subspace(m, Ball([0.0, 0.0], 2.0), 1).subspace.basis
    b = fit_best_subspace(DiscreteMeasure(P[::-1]), Ball([0.0, 0.0], 2.0), 1).subspace.basis
    assert np.allclose(a, [[1.0, 0.0]]) and np.allclose(a, b)


def test_top_eigenvectors_orthonormal():
    vals, U = top_eigenvectors(np.diag([3.0, 1.0, 1.0, 0.5]), 2)
    assert np.allclose(U @ U.T, np.eye(2))
    assert np.allclose(vals, [3.0, 1.0, 1.0, 0.5])


@given(seeds)
def test_batched_fits_agree_with_single(seed):
    rng = np.random.default_rng(seed)
    m = DiscreteMeasure(rng.standard_normal((200, 3)), rng.uniform(0.5, 1.5, 200))
    C = rng.standard_normal((6, 3)) * 0.5
    R = rng.uniform(0.5, 1.5, 6)
    mass, cent, U, beta = batched_fits(m, C, R, 2)
    for i in range(6):
        f = fit_best_subspace(m, Ball(C[i], R[i]), 2)
        floor = 1e-12 * max(1.0, float(f.eigenvalues.sum())) / R[i] ** 4
        assert beta[i] ** 2 == pytest.approx(f.beta ** 2, rel=1e-7, abs=floor)
        assert mass[i] == pytest.approx(f.mass)
    table = beta_table(m, C, 2, [0.7, 1.2])
    assert table[0, 1] == pytest.approx(fit_best_subspace(m, Ball(C[0], 1.2), 2).beta, rel=1e-7)


def test_profile_rows_and_distortion():
    m = dust_measure(2, 0.1, 0.02, 2.0)
    prof = beta_profile(m, [0.0, 0.0], 1, 1.0, 0.0625)
    assert len(prof.scales) == 5
    assert np.allclose(prof.scales, [1, 0.5, 0.25, 0.125, 0.0625])
    assert np.allclose(prof.distortion, np.cumsum(prof.betas[::-1] ** 2)[::-1])


def test_profile_csv(tmp_path):
    m = plane_measure(3, 2, spacing=0.1)
    prof = beta_profile(m, [0, 0, 0], 2, 1.0, 0.0625)
    path = tmp_path / "p.csv"
    prof.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "scale,beta,distortion" and len(lines) == 6


@pytest.mark.parametrize("rmax,rmin", [(1.0, 0.0), (1.0, 2.0)])
def test_dyadic_scales_errors(rmax, rmin):
    with pytest.raises(InputError):
        dyadic_scales(rmax, rmin)


def test_beta_linf_line_and_corner():
    t = np.linspace(-1, 1, 41)
    line = np.stack([t, 0.3 * t], axis=1)
    assert beta_linf(line, Ball([0.0, 0.0], 1.0), 1) < 1e-6
    # points at distance h on both sides of the x axis: best sup-distance is h
    h = 0.1
    band = np.array([[x, s * h] for x in np.linspace(-0.8, 0.8, 9) for s in (-1, 1)])
    assert beta_linf(band, Ball([0.0, 0.0], 1.0), 1) == pytest.approx(h, abs=1e-3)


def test_beta_linf_empty():
    with pytest.raises(EmptySliceError):
        beta_linf(np.array([[5.0, 5.0]]), Ball([0.0, 0.0], 1.0), 1)


def test_beta_scaling_invariance():
    rng = np.random.default_rng(3)
    P = rng.standard_normal((50, 3))
    a = beta_number(DiscreteMeasure(P), np.zeros(3), 1.5, 1)
    lam = 2.5
    # mu -> lam^k mu(./lam) leaves beta unchanged
    b = beta_number(DiscreteMeasure(lam * P, np.full(50, lam ** 1)), np.zeros(3), 1.5 * lam, 1)
    assert a == pytest.approx(b, rel=1e-10)
