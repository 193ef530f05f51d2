import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reifenberg.errors import EmptySliceError, InputError
from reifenberg.geometry import Ball
from reifenberg.measure import (
    DiscreteMeasure,
    center_of_mass,
    mass_in_ball,
    read_measure,
    restrict,
    unit_ball_volume,
    write_measure,
)

from oracles import brute_ball

seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.sampled_from([10, 500]), st.integers(1, 4))
def test_query_matches_brute_oracle(seed, N, n):
    # 10 points use the brute index, 500 the tree
    rng = np.random.default_rng(seed)
    m = DiscreteMeasure(rng.uniform(-1, 1, (N, n)))
    for _ in range(5):
        c, r = rng.uniform(-1, 1, n), float(rng.uniform(0.05, 1.0))
        for closed in (False, True):
            assert np.array_equal(m.query(c, r, closed), brute_ball(m.points, c, r, closed))


def test_boundary_points_respect_openness():
    m = DiscreteMeasure(np.array([[1.0, 0.0], [0.0, 0.5]]))
    assert m.query([0.0, 0.0], 1.0).tolist() == [1]
    assert m.query([0.0, 0.0], 1.0, closed=True).tolist() == [0, 1]


@pytest.mark.parametrize("levels", [1, 3, 40])
def test_ball_masses_against_loop(levels):
    rng = np.random.default_rng(levels)
    P = rng.uniform(-1, 1, (800, 2))
    W = rng.choice(np.linspace(0.5, 2.0, levels), size=len(P))
    m = DiscreteMeasure(P, W)
    C = rng.uniform(-1, 1, (30, 2))
    want = [W[brute_ball(P, c, 0.3)].sum() for c in C]
    assert np.allclose(m.ball_masses(C, 0.3), want)


def test_mass_and_center_of_mass():
    m = DiscreteMeasure([[0.0, 0.0], [2.0, 0.0], [9.0, 9.0]], [1.0, 3.0, 5.0])
    B = Ball([1.0, 0.0], 1.5)
    assert mass_in_ball(m, B) == 4.0
    assert np.allclose(center_of_mass(m, B), [1.5, 0.0])
    assert len(restrict(m, B)) == 2


def test_empty_slice_raises():
    m = DiscreteMeasure([[0.0, 0.0]])
    with pytest.raises(EmptySliceError):
        center_of_mass(m, Ball([5.0, 5.0], 1.0))


@pytest.mark.parametrize(
    "pts,w",
    [
        (np.zeros((0, 2)), None),
        ([[0.0, np.nan]], None),
        ([[0.0, 0.0]], [-1.0]),
        ([[0.0, 0.0]], [0.0]),
        ([[0.0, 0.0], [1.0, 1.0]], [1.0]),
    ],
)
def test_bad_measures_rejected(pts, w):
    with pytest.raises(InputError):
        DiscreteMeasure(pts, w)


def test_points_are_read_only():
    m = DiscreteMeasure([[0.0, 0.0]])
    with pytest.raises(ValueError):
        m.points[0, 0] = 1.0


@pytest.mark.parametrize("suffix", [".csv", ".json"])
def test_roundtrip(tmp_path, suffix):
    rng = np.random.default_rng(1)
    m = DiscreteMeasure(rng.standard_normal((20, 3)), rng.uniform(0.1, 2, 20))
    path = tmp_path / f"m{suffix}"
    write_measure(m, path)
    back = read_measure(path)
    assert back.content_hash == m.content_hash


def test_csv_without_weights(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("x1,x2\n0,0\n1,1\n")
    m = read_measure(p)
    assert m.total_mass == 2.0


@pytest.mark.parametrize(
    "name,text",
    [
        ("a.csv", ""),
        ("b.csv", "y,z\n1,2\n"),
        ("c.csv", "x1,x2\n1,abc\n"),
        ("d.json", "{not json"),
        ("e.json", json.dumps({"dim": 3, "points": [[0, 0]]})),
    ],
)
def test_malformed_files(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    with pytest.raises(InputError):
        read_measure(p)


def test_missing_file(tmp_path):
    with pytest.raises(InputError):
        read_measure(tmp_path / "nope.csv")


def test_unit_ball_volume():
    assert unit_ball_volume(0) == 1.0
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(np.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * np.pi / 3)
