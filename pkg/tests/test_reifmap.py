import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reifenberg.errors import DegenerateFieldError, InputError, InsufficientDataError, ProjectionStallError
from reifenberg.generators import snowflake
from reifenberg.reifmap import (
    ReifmapConfig,
    approx_distance,
    approx_distance_gradient,
    build_partition,
    build_reifenberg_map,
    holder_exponent,
    project_to_level,
    subspace_field,
)

seeds = st.integers(0, 2**32 - 1)

# the line y = 0.3 x + 0.1 sampled densely
T = np.linspace(-1.5, 1.5, 601)
LINE = np.stack([T, 0.3 * T + 0.1], axis=1)
NORMAL = np.array([-0.3, 1.0]) / np.hypot(0.3, 1.0)


@pytest.fixture(scope="module")
def flake():
    return snowflake(0.2, 4).vertices


@pytest.fixture(scope="module")
def flake_field(flake):
    return subspace_field(flake, 0.25, 1)


@given(seeds)
def test_partition_of_unity(seed):
    rng = np.random.default_rng(seed)
    S = snowflake(0.2, 3).vertices
    cover = build_partition(S, 0.25)
    Y = S[rng.choice(len(S), 20)] + rng.normal(scale=0.01, size=(20, 2))
    q, c, w = cover.weights(Y)
    assert np.all(w >= 0)
    assert np.allclose(np.bincount(q, weights=w, minlength=len(Y)), 1.0)
    assert np.all(cover.multiplicity(Y) >= 1)


def test_quarter_balls_disjoint(flake):
    cover = build_partition(flake, 0.125)
    d = np.linalg.norm(cover.centers[:, None] - cover.centers[None], axis=2)
    np.fill_diagonal(d, np.inf)
    assert np.all(d >= 0.25 * (cover.radii[:, None] + cover.radii[None]) - 1e-12)


def test_outside_cover_raises(flake):
    cover = build_partition(flake, 0.25)
    with pytest.raises(DegenerateFieldError):
        cover.weights(np.array([[0.0, 5.0]]))


def test_far_field_extends_cover():
    S = snowflake(0.2, 2).vertices
    cover = build_partition(S, 0.5, ReifmapConfig(far_field=True))
    q, _, w = cover.weights(np.array([[0.0, 1.8]]))
    assert np.isclose(w.sum(), 1.0)


def test_exact_line_field():
    F = subspace_field(LINE, 0.25, 1)
    rng = np.random.default_rng(0)
    Y = LINE[rng.choice(len(LINE), 30)] + rng.normal(scale=0.02, size=(30, 2))
    dist = (Y - LINE[0]) @ NORMAL
    assert np.allclose(approx_distance(F, Y), 0.5 * dist ** 2, atol=1e-12)
    Z = project_to_level(F, Y)
    assert np.allclose((Z - LINE[0]) @ NORMAL, 0.0, atol=1e-10)
    # projection is orthogonal onto the line
    assert np.allclose(Z, Y - np.outer(dist, NORMAL), atol=1e-10)


@given(seeds)
def test_gradient_matches_finite_differences(seed):
    S = snowflake(0.2, 4).vertices
    F = subspace_field(S, 0.25, 1)
    rng = np.random.default_rng(seed)
    y = S[rng.integers(len(S))] + rng.normal(scale=0.02, size=2)
    g = approx_distance_gradient(F, y)
    h = 1e-6
    fd = np.array([(approx_distance(F, y + h * e) - approx_distance(F, y - h * e)) / (2 * h) for e in np.eye(2)])
    assert np.allclose(g, fd, rtol=1e-5, atol=1e-9)


def test_level_set_fixed_point(flake_field, flake):
    rng = np.random.default_rng(1)
    Y = flake[rng.choice(len(flake), 40)] + rng.normal(scale=0.01, size=(40, 2))
    Z = project_to_level(flake_field, Y)
    assert np.all(approx_distance(flake_field, Z) < 1e-20)
    v = flake_field.evaluate(Z)
    assert np.allclose(v.m, Z, atol=1e-10)


def test_projection_stall_reports(flake_field, flake):
    Y = flake[:50] + 0.02
    with pytest.raises(ProjectionStallError) as exc:
        project_to_level(flake_field, Y, config=ReifmapConfig(max_iter=1))
    assert exc.value.diagnostics["iterations"] == 1


def test_field_plane_is_k_dimensional(flake_field, flake):
    L = flake_field.plane(flake[100])
    assert L.k == 1 and L.n == 2


def test_map_of_segment_is_isometric():
    M = build_reifenberg_map(LINE, 1, 4)
    u = M.coords[:, 0]
    s = (LINE - LINE[0]) @ (LINE[-1] - LINE[0]) / np.linalg.norm(LINE[-1] - LINE[0])
    assert np.allclose(np.abs(np.diff(u)), np.diff(s), atol=1e-10)
    assert M.is_injective()
    lo, hi = holder_exponent(M)
    assert lo == pytest.approx(1.0, abs=1e-6) and hi == pytest.approx(1.0, abs=1e-6)


def test_snowflake_map(flake):
    M = build_reifenberg_map(flake, 1, 4)
    assert M.is_injective()
    lo, hi = holder_exponent(M)
    assert hi <= lo <= 1.0 + 1e-9
    # displacement at level i is a small multiple of its scale
    for i, d in enumerate(M.displacements, start=1):
        assert d.max() < 0.5 * 2.0 ** -i
    assert np.allclose(M.forward(flake[:20]), M.coords[:20], atol=1e-8)
    assert np.allclose(M.inverse(M.coords[:20]), flake[:20])


def test_map_outputs(tmp_path, flake):
    M = build_reifenberg_map(flake, 1, 2)
    M.write_csv(tmp_path / "m.csv")
    head = (tmp_path / "m.csv").read_text().splitlines()[0]
    assert head == "x1,x2,u1"
    M.write_json(tmp_path / "m.json", exponents=(1.0, 0.9))
    assert "holder" in (tmp_path / "m.json").read_text()


def test_delta_ceiling_warns(flake):
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        build_reifenberg_map(flake, 1, 1, delta=0.3)
    assert any("ceiling" in str(w.message) for w in rec)


def test_too_few_pairs():
    M = build_reifenberg_map(LINE[:4], 1, 1)
    with pytest.raises(InsufficientDataError):
        holder_exponent(M)


@pytest.mark.parametrize("kw", [{"partition_constant": 0.0}, {"fit_factor": -1.0}, {"max_iter": 0}])
def test_config_validation(kw):
    with pytest.raises(InputError):
        ReifmapConfig(**kw)
