import numpy as np
import pytest

from reifenberg.errors import InputError
from reifenberg.generators import (
    dirac_pair,
    dust_measure,
    graph_set,
    holder_target,
    mixed_measure,
    perpendicular_planes,
    plane_measure,
    snowflake,
    snowflake_length,
    snowflake_varying,
)
from reifenberg.measure import read_measure

import oracles


@pytest.mark.parametrize("i", range(7))
def test_snowflake_length_identity(i):
    S = snowflake(0.3, i)
    assert S.n_edges == 4 ** i
    assert S.length == pytest.approx(oracles.snowflake_length(0.3, i), rel=1e-10)
    assert snowflake_length([0.3] * i) == pytest.approx(oracles.snowflake_length(0.3, i), rel=1e-12)


def test_snowflake_endpoints_fixed():
    V = snowflake(0.2, 4).vertices
    assert np.allclose(V[0], [-2, 0]) and np.allclose(V[-1], [2, 0])
    assert np.allclose(np.diff(np.linalg.norm(np.diff(V, axis=0), axis=1)), 0.0, atol=1e-12)


def test_varying_deltas():
    S = snowflake_varying([0.1, 0.3, 0.2])
    assert S.length == pytest.approx(snowflake_length([0.1, 0.3, 0.2]), rel=1e-12)


@pytest.mark.parametrize("delta", [0.1, 0.2, 0.3, 0.5])
def test_holder_target(delta):
    assert holder_target(delta) == pytest.approx(oracles.holder_target(delta), rel=1e-14)
    assert holder_target(delta) < 1


@pytest.mark.parametrize("args", [(0.0, 3), (0.6, 3), (0.3, 11), (0.3, -1)])
def test_snowflake_bad_args(args):
    with pytest.raises(InputError):
        snowflake(*args)


def test_snowflake_csv(tmp_path):
    S = snowflake(0.3, 5)
    S.write_csv(tmp_path / "s.csv")
    m = read_measure(tmp_path / "s.csv")
    assert len(m) == 4 ** 5 + 1


def test_plane_mass_approximates_area():
    m = plane_measure(3, 2, density=2.0, spacing=0.01, radius=1.0)
    assert m.total_mass == pytest.approx(2.0 * np.pi, rel=1e-3)
    assert np.all(m.points[:, 2] == 0)


def test_dust_mass_approximates_volume():
    m = dust_measure(2, density=0.1, spacing=0.01, radius=2.0)
    assert m.total_mass == pytest.approx(0.1 * np.pi * 4, rel=1e-3)


def test_mixed_structure():
    a = plane_measure(2, 1, spacing=0.02)
    b = dust_measure(2, 0.05, 0.05, offset=0.5)
    m = mixed_measure(2, 1, 0.05)
    assert m.total_mass == pytest.approx(a.total_mass + b.total_mass)
    # the half-cell offset keeps dust off the line
    assert len(m) == len(a) + len(b)


def test_perpendicular_planes_share_origin():
    m = perpendicular_planes(2, 1, spacing=0.1)
    a = plane_measure(2, 1, spacing=0.1)
    assert len(m) == 2 * len(a) - 1
    i = m.query([0.0, 0.0], 1e-9)
    assert m.weights[i].tolist() == [0.2]


def test_dirac_pair():
    m = dirac_pair(0.5, 3)
    assert np.allclose(m.points, [[-0.25, 0, 0], [0.25, 0, 0]])
    with pytest.raises(InputError):
        dirac_pair(0.0)


def test_graph_set():
    G = graph_set(lambda u: u[:, 0] ** 2, k=1, spacing=0.5, half_width=1.0)
    assert np.allclose(G, [[-1, 1], [-0.5, 0.25], [0, 0], [0.5, 0.25], [1, 1]])


@pytest.mark.parametrize("kw", [{"spacing": 0.0}, {"density": -1.0}])
def test_measure_generator_errors(kw):
    with pytest.raises(InputError):
        plane_measure(3, 2, **kw)
