import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from reifenberg.covering import (
    BallFamily,
    dilation_covers,
    farthest_point_net,
    hausdorff_content,
    loglog_slope,
    maximal_disjoint,
    minkowski_content,
    packing_content,
    vitali_select,
)
from reifenberg.errors import InputError
from reifenberg.generators import plane_samples
from reifenberg.measure import unit_ball_volume

seeds = st.integers(0, 2**32 - 1)


@given(seeds)
def test_vitali_disjoint_and_covering(seed):
    rng = np.random.default_rng(seed)
    F = BallFamily.from_arrays(rng.uniform(-1, 1, (40, 2)), rng.uniform(0.01, 0.4, 40))
    G = vitali_select(F)
    assert G.pairwise_disjoint()
    assert dilation_covers(G, F, 5.0)


def test_vitali_empty():
    assert len(vitali_select(BallFamily([]))) == 0


def test_dilation_cover_negative():
    F = BallFamily.from_arrays(np.array([[0.0, 0.0], [10.0, 0.0]]), 1.0)
    G = BallFamily([F.balls[0]])
    assert not dilation_covers(G, F, 5.0)


@given(seeds)
def test_maximal_disjoint(seed):
    rng = np.random.default_rng(seed)
    P = rng.uniform(-1, 1, (200, 2))
    R = rng.uniform(0.02, 0.2, 200)
    shrink = 0.25
    sel = maximal_disjoint(P, R, shrink=shrink)
    S = set(sel.tolist())
    for i in range(len(P)):
        d = np.linalg.norm(P[sel] - P[i], axis=1)
        hits = d < shrink * (R[sel] + R[i])
        if i in S:
            # only itself
            assert hits.sum() == 1
        else:
            assert hits.any()


def test_maximal_disjoint_bad_shrink():
    with pytest.raises(InputError):
        maximal_disjoint(np.zeros((2, 2)), 1.0, shrink=0.0)


@given(seeds, st.sampled_from([0.05, 0.1, 0.3]))
def test_hausdorff_certificate_covers(seed, r):
    rng = np.random.default_rng(seed)
    P = rng.uniform(-1, 1, (150, 2))
    rep = hausdorff_content(P, 1, r)
    assert rep.certificate.covers(P).all()
    assert np.all(rep.certificate.radii <= r + 1e-12)
    assert rep.value == pytest.approx(rep.recompute())


def test_hausdorff_single_point_uses_floor():
    rep = hausdorff_content(np.array([[0.0, 0.0]]), 0, 0.5, floor=1e-3)
    assert rep.value == pytest.approx(1.0)
    assert rep.certificate.radii[0] == pytest.approx(1e-3)


@given(seeds)
def test_net_is_separated_and_covering(seed):
    rng = np.random.default_rng(seed)
    P = rng.uniform(-1, 1, (300, 3))
    r = 0.3
    net = farthest_point_net(P, r)
    D = np.linalg.norm(P[:, None, :] - P[net][None, :, :], axis=2)
    assert D.min(axis=1).max() < r
    Dn = D[net]
    np.fill_diagonal(Dn, np.inf)
    assert Dn.min() >= r


def test_minkowski_value():
    P = plane_samples(2, 1, 0.01)
    rep = minkowski_content(P, 1, 0.25)
    assert rep.value == pytest.approx(len(rep.certificate) * unit_ball_volume(1) * 0.25)


@given(seeds)
def test_packing_family_disjoint(seed):
    rng = np.random.default_rng(seed)
    P = rng.uniform(-1, 1, (150, 2))
    rep = packing_content(P, 1, 0.3)
    assert rep.certificate.pairwise_disjoint()
    assert rep.value == pytest.approx(rep.recompute())


def test_content_slope_of_segment():
    P = plane_samples(2, 1, 0.002)
    scales = [1 / 4, 1 / 8, 1 / 16, 1 / 32]
    vals = [hausdorff_content(P, 0, s).value for s in scales]
    assert loglog_slope(scales, vals) == pytest.approx(-1.0, abs=0.2)


def test_report_json():
    rep = hausdorff_content(np.array([[0.0, 0.0], [1.0, 0.0]]), 1, 0.5)
    d = rep.to_dict()
    assert d["kind"] == "hausdorff" and len(d["certificate"]) == 2


@pytest.mark.parametrize("fn", [hausdorff_content, minkowski_content, packing_content])
def test_scale_must_be_positive(fn):
    with pytest.raises(InputError):
        fn(np.zeros((1, 2)), 1, 0.0)
