import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from hgmt.core import dist, sigma
from hgmt.sets import from_closure, gen_corner, gen_horizontal_lines, nearest_dist
from hgmt.symclose import h_closure
from hgmt.symmetry import beta_implies_nonsymmetric_probe, lsc_energy, nonlip_ratio, tau_symmetric

point = arrays(np.float64, 3, elements=st.floats(-20, 20))


@pytest.fixture(scope="module")
def probe_corner():
    return gen_corner(4.0, 1 / 16, 4.0)


# the symmetry test

def test_plane_balls_are_symmetric(tilted_plane):
    h = tilted_plane.h
    centres = tilted_plane.points[tilted_plane.interior(0.5)][::20000]
    for p in centres:
        v = tau_symmetric(tilted_plane, p, 0.5, 4 * h / 0.5)
        assert v.symmetric and v.witness_pair is None
        assert v.checked_pairs > 0 and v.margin <= 0


def test_boundary_images_are_skipped(small_plane):
    v = tau_symmetric(small_plane, np.zeros(3), 1.0, 0.05)
    assert v.symmetric
    assert v.skipped > 0 and v.checked_pairs + v.skipped == 20_000


def test_corner_fails_across_the_rays(small_corner):
    v = tau_symmetric(small_corner, np.zeros(3), 1.0, 0.05)
    assert not v.symmetric
    q1, q2 = v.witness_pair
    # one point on each half-plane, both off the axis
    assert {q1[0] > 0, q2[0] > 0} == {True, False}
    assert q1[1] * q2[1] == 0 and q1[0] * q2[0] == 0
    img = sigma(q1, q2)
    assert nearest_dist(small_corner, img) > 0.05 + 2 * small_corner.h
    assert v.witness_indices is not None
    assert np.array_equal(small_corner.points[v.witness_indices[0]], q1)


def test_corner_witness_regression(small_corner):
    v = tau_symmetric(small_corner, np.zeros(3), 1.0, 0.05, seed=0)
    q1, q2 = v.witness_pair
    assert q1.tolist() == [0.03125, 0.0, -0.1884765625]
    assert q2.tolist() == [0.0, 0.875, 0.1123046875]
    assert v.margin == pytest.approx(0.825)


def test_verdicts_are_deterministic(small_corner):
    a = tau_symmetric(small_corner, np.zeros(3), 1.0, 0.05, seed=4)
    b = tau_symmetric(small_corner, np.zeros(3), 1.0, 0.05, seed=4)
    assert a.to_json() == b.to_json()


def test_verdict_is_monotone_in_tau(small_corner):
    taus = [0.05, 0.1, 0.2, 0.4, 0.8, 0.99]
    verdicts = [tau_symmetric(small_corner, np.zeros(3), 1.0, t).symmetric for t in taus]
    assert verdicts == sorted(verdicts)
    assert not verdicts[0] and verdicts[-1]


def test_horizontal_lines_are_symmetric():
    L = gen_horizontal_lines(0.0, [(-0.3, -0.1), (0.0, 0.3)], 1.1, 1 / 32, 0.3)
    for p, r in [((0, 0, 0.15), 0.25), ((0, 0, -0.2), 0.2), ((0, 0, 0), 0.5)]:
        assert tau_symmetric(L, np.array(p, float), r, 0.1).symmetric


def test_imported_closure_is_symmetric():
    E = from_closure(h_closure([[0, 0, 0], [1, 0, 0], [0, 1, 0]], 8))
    assert len(E) == 7313
    for r in (2.0, 4.0):
        for tau in (0.25, 0.5):
            v = tau_symmetric(E, np.zeros(3), r, tau)
            assert v.symmetric and v.checked_pairs > 0


def test_symmetry_input_errors(small_plane):
    with pytest.raises(ValueError):
        tau_symmetric(small_plane, np.zeros(3), 0.5, 1.0)
    with pytest.raises(ValueError):
        tau_symmetric(small_plane, np.zeros(3), 0.5, 0.0)
    with pytest.raises(ValueError):
        tau_symmetric(small_plane, [5, 0, 0], 0.1, 0.5)
    with pytest.raises(ValueError):
        tau_symmetric(small_plane, np.zeros(3), 0.5, 0.5, pair_cap=0)


# properties of the symmetric point map

@given(point, point, point)
def test_sigma_is_an_isometry_in_the_second_slot(w, q, q2):
    scale = 1 + np.abs(np.concatenate([w, q, q2])).max()
    assert abs(dist(sigma(w, q), sigma(w, q2)) - dist(q, q2)) <= 1e-6 * scale


def test_failure_survives_moves_of_q2(small_corner):
    # q2 -> Sigma_w(q2) is 1-Lipschitz, so moving q2 by rho lowers the
    # distance of every image from the sample by at most rho
    S, r, tau, rho = small_corner, 1.0, 0.05, 0.2
    v = tau_symmetric(S, np.zeros(3), r, tau)
    q1, q2 = v.witness_pair
    base = S.points[S.index.ball_query(q1, tau * r)]
    best = nearest_dist(S, sigma(base, q2)).min()
    assert best > tau * r + 2 * S.h
    near = S.points[S.index.ball_query(q2, rho)]
    assert len(near) > 100
    for q in near:
        d = nearest_dist(S, sigma(base, q)).min()
        assert d >= best - rho - 1e-12
        assert d >= tau * r / 2


# energies and the beta probe

def test_plane_symmetry_energy_vanishes(tilted_plane):
    rep = lsc_energy(tilted_plane, np.zeros(3), 0.5, 0.125, r_min=0.25)
    assert rep.energy == 0 and rep.kind == "lsc" and sum(rep.tested) > 0


def test_corner_symmetry_energy_is_near_the_axis(probe_corner):
    reps = [lsc_energy(probe_corner, np.zeros(3), R, 0.05, r_min=0.5) for R in (1.0, 2.0)]
    ratios = [rep.ratio for rep in reps]
    assert min(ratios) > 0 and max(ratios) / min(ratios) <= 2
    for rep in reps:
        for r, bad in zip(rep.scales, rep.bad_centers):
            assert np.all(np.hypot(bad[:, 0], bad[:, 1]) <= 2.5 * r)


def test_probe_finds_nonsymmetric_ball(probe_corner):
    res = beta_implies_nonsymmetric_probe(probe_corner, np.zeros(3), 1.0, 0.3)
    # the rays reach s = 15/16 inside B(0, 1)
    assert res.beta == pytest.approx(15 / 16 / math.sqrt(2) / 2, abs=1e-9)
    assert res.tau in (0.5, 0.25, 0.125)
    assert res.tau == 0.5
    assert not res.verdicts[-1][1].symmetric


def test_probe_rejects_flat_balls(tilted_plane):
    with pytest.raises(ValueError):
        beta_implies_nonsymmetric_probe(tilted_plane, np.zeros(3), 0.5, 0.3)


# the symmetric point map is not Lipschitz in the centre

def test_nonlip_example():
    planar, heis, ratio = nonlip_ratio(100, 1)
    assert heis == pytest.approx(1.0, abs=1e-12)
    assert planar == pytest.approx(40001 ** 0.25, rel=1e-12)
    assert ratio == pytest.approx(14.14, abs=0.01)


def test_nonlip_ratio_grows_like_a_square_root():
    r1 = nonlip_ratio(100, 1)[2]
    r2 = nonlip_ratio(1e4, 1)[2]
    assert r2 / r1 == pytest.approx(10, rel=0.2)
    assert nonlip_ratio(3, 3)[2] < 2


def test_nonlip_input_errors():
    with pytest.raises(ValueError):
        nonlip_ratio(0, 1)
    with pytest.raises(ValueError):
        nonlip_ratio(1, math.inf)
