import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import minimize

from hgmt.core import dilate, dist, group_mul
from hgmt.flatness import (LN2, PROFILE_COLUMNS, CarlesonReport, VerticalPlane, auto_centers,
                           beta, beta_exhaustive, beta_profile, center_net, dist_to_vplane,
                           dyadic_scale_list, dyadic_scales, min_width_direction, wgl_energy,
                           write_profile_csv)
from hgmt.sets import ball_mass, gen_corner, gen_graph


@pytest.fixture(scope="module")
def fine_corner():
    return gen_corner(1.1, 1 / 64, 0.3)


@pytest.fixture(scope="module")
def energy_corner():
    return gen_corner(4.0, 1 / 16, 4.0)


def brute_plane_distance(p, W):
    """Minimise d(p, w) over w in W, seeded from a coarse grid."""
    n, v = W.normal, np.array([-W.normal[1], W.normal[0]])

    def objective(st):
        return float(dist(p, np.array([*(W.c * n + st[0] * v), st[1]])))

    grid = [(s, t) for s in np.linspace(-8, 8, 33) for t in np.linspace(-30, 30, 61)]
    start = min(grid, key=objective)
    return minimize(objective, start, method="Nelder-Mead",
                    options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000}).fun


# vertical planes

def test_plane_canonical_form():
    W = VerticalPlane(math.pi + 0.25, 2.0)
    assert W.theta == pytest.approx(0.25) and W.c == pytest.approx(-2.0)
    assert VerticalPlane(-0.1, 1.0).theta == pytest.approx(math.pi - 0.1)
    assert VerticalPlane(0.0, 1.0).translate([2, 5, 9]).c == 3.0


def test_distance_to_plane_examples():
    W = VerticalPlane(0.0, 0.0)
    assert dist_to_vplane([3, 0, 5], W) == 3.0
    assert dist_to_vplane([0, 7, -4], W) == 0.0
    assert brute_plane_distance(np.array([3.0, 0, 5]), W) == pytest.approx(3.0, rel=1e-6)


def test_distance_closed_form_matches_minimisation(rng):
    for _ in range(15):
        W = VerticalPlane(rng.uniform(0, math.pi), rng.uniform(-2, 2))
        p = rng.uniform(-3, 3, size=3)
        closed = float(dist_to_vplane(p, W))
        assert brute_plane_distance(p, W) == pytest.approx(closed, rel=1e-3, abs=1e-6)


@given(st.floats(0, math.pi), st.floats(-3, 3),
       st.lists(st.floats(-5, 5), min_size=3, max_size=3),
       st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_distance_is_translation_invariant(theta, c, p, g):
    W = VerticalPlane(theta, c)
    moved = float(dist_to_vplane(group_mul(g, p), W.translate(g)))
    assert moved == pytest.approx(float(dist_to_vplane(p, W)), abs=1e-9)


# beta numbers

def test_plane_beta_is_discretization_only(tilted_plane):
    h = tilted_plane.h
    for p in tilted_plane.points[tilted_plane.interior(0.5)][::5000]:
        for r in (0.25, 0.5):
            assert beta(tilted_plane, p, r).value <= 2 * h / r


def test_corner_beta_at_the_axis(fine_corner):
    # both rays reach s = 63/64 inside B(0, 1); the best plane has normal (1, 1)/sqrt 2
    b = beta(fine_corner, np.zeros(3), 1.0)
    assert b.value == pytest.approx(63 / 64 / math.sqrt(2) / 2, abs=1e-9)
    assert b.value == pytest.approx(0.354, abs=0.01)
    assert b.argmin.theta == pytest.approx(math.pi / 4, abs=1e-3)
    assert abs(b.value - beta_exhaustive(fine_corner, np.zeros(3), 1.0).value) <= 1e-3


def test_refinement_matches_exhaustive_scan(small_corner, rng):
    graph = gen_graph(lambda y, t: 0.2 * np.sin(4 * y) + 0.1 * t, 1.0, 1 / 16, 0.5)
    sets = [small_corner, graph]
    for _ in range(50):
        S = sets[rng.integers(2)]
        p = S.points[rng.integers(len(S))]
        r = rng.uniform(0.2, 0.5)
        assert abs(beta(S, p, r).value - beta_exhaustive(S, p, r).value) <= 1e-3


def test_midrange_offset_is_optimal(rng):
    for _ in range(20):
        Z = rng.normal(size=(30, 2))
        theta, width, H = min_width_direction(Z)
        proj = Z @ np.array([math.cos(theta), math.sin(theta)])
        cs = np.linspace(proj.min(), proj.max(), 20001)
        sup = np.abs(proj[None, :] - cs[:, None]).max(axis=1)
        assert abs(sup.min() - width / 2) <= (proj.max() - proj.min()) / 20000 + 1e-9


def test_beta_dilation_covariance(small_corner, rng):
    D = small_corner.dilate(2.0)
    for _ in range(10):
        p = small_corner.points[rng.integers(len(small_corner))]
        r = rng.uniform(0.1, 0.4)
        assert beta(D, dilate(2.0, p), 2 * r).value == pytest.approx(beta(small_corner, p, r).value, abs=1e-6)


def test_beta_translation_invariance(small_corner, rng):
    g = np.array([1.5, -0.5, 3.0])
    T = small_corner.translate(g)
    for _ in range(10):
        p = small_corner.points[rng.integers(len(small_corner))]
        assert beta(T, group_mul(g, p), 0.3).value == pytest.approx(beta(small_corner, p, 0.3).value, abs=1e-6)


def test_shifted_flat_graph_has_flat_beta():
    flat = gen_graph(lambda y, t: np.zeros_like(y), 1.0, 1 / 32, 0.5)
    shifted = gen_graph(lambda y, t: np.ones_like(y), 1.0, 1 / 32, 0.5)
    for r in (0.25, 0.4):
        a = beta(flat, np.zeros(3), r).value
        b = beta(shifted, np.array([1.0, 0, 0]), r).value
        assert a == pytest.approx(b, abs=1e-9) and a <= 2 * flat.h / r


def test_wavy_graph_beta_grows_with_amplitude():
    values = []
    for eps in (0.01, 0.02, 0.04):
        G = gen_graph(lambda y, t, e=eps: e * np.sin(y), 2.0, 1 / 32, 1.0)
        values.append([beta(G, np.array([eps * np.sin(0.3), 0.3, 0]), r).value for r in (0.25, 0.5)])
    values = np.array(values)
    assert np.all(np.diff(values, axis=0) > 0)
    assert np.all(values[:, 1] > values[:, 0])


def test_empty_ball_rejected(small_plane):
    with pytest.raises(ValueError):
        beta(small_plane, [5, 0, 0], 0.1)
    with pytest.raises(ValueError):
        beta(small_plane, [0, 0, 0], 0)


def test_band_flag(small_plane):
    assert not beta(small_plane, np.zeros(3), 0.1).in_band
    assert beta(small_plane, np.zeros(3), 0.25).in_band


# profiles

def test_plane_profile(tilted_plane):
    centers = auto_centers(tilted_plane, 20, 0.5)
    rows = beta_profile(tilted_plane, centers, [0.25, 0.5])
    assert len(rows) == 40
    assert all(row["beta"] <= 2 * tilted_plane.h / row["r"] for row in rows)


def test_corner_profile_is_localised(energy_corner):
    centers = auto_centers(energy_corner, 200, 0.5, seed=1)
    rows = beta_profile(energy_corner, centers, [0.25, 0.5])
    for row in rows:
        off_axis = math.hypot(row["center_x"], row["center_y"])
        if row["beta"] >= 0.1:
            assert off_axis <= row["r"]


def test_profile_records_errors(small_plane):
    rows = beta_profile(small_plane, [[5, 0, 0], [0, 0, 0]], [0.25])
    assert rows[0]["error"] and math.isnan(rows[0]["beta"])
    assert rows[1]["error"] == ""


def test_profile_is_thread_independent(small_corner):
    centers = auto_centers(small_corner, 30, 0.25)
    a = beta_profile(small_corner, centers, [0.25, 0.125], n_jobs=1)
    b = beta_profile(small_corner, centers, [0.25, 0.125], n_jobs=4)
    assert a == b


def test_csv_layout(small_corner):
    rows = beta_profile(small_corner, [[0, 0, 0]], [0.25, 0.5])
    buf = io.StringIO()
    write_profile_csv(rows, buf, {"seed": 3})
    lines = buf.getvalue().splitlines()
    assert lines[0] == '# config: {"seed": 3}'
    assert lines[1] == ",".join(PROFILE_COLUMNS)
    assert len(lines) == 4
    assert float(lines[2].split(",")[4]) == rows[0]["beta"]


def test_scale_helpers(energy_corner):
    assert dyadic_scale_list(energy_corner, 3) == [2.0, 1.0, 0.5]
    centers = auto_centers(energy_corner, 10, 1.0)
    assert np.all(energy_corner.region_mask(centers, 1.0))


# Carleson energies

def test_plane_energy_vanishes(tilted_plane):
    rep = wgl_energy(tilted_plane, np.zeros(3), 0.5, 0.1, r_min=0.25)
    assert rep.energy == 0 and rep.scales == [0.5, 0.25]


def test_corner_energy_ratio_is_stable(energy_corner):
    reps = [wgl_energy(energy_corner, np.zeros(3), R, 0.1, r_min=0.5) for R in (1.0, 2.0)]
    ratios = [rep.ratio for rep in reps]
    assert min(ratios) > 0 and max(ratios) / min(ratios) <= 2
    for rep in reps:
        for r, bad in zip(rep.scales, rep.bad_centers):
            assert np.all(np.hypot(bad[:, 0], bad[:, 1]) <= r)


def test_large_threshold_gives_zero_energy(energy_corner):
    assert wgl_energy(energy_corner, np.zeros(3), 1.0, 0.5, r_min=0.5).energy == 0


def test_report_arithmetic_and_json(energy_corner):
    rep = wgl_energy(energy_corner, np.zeros(3), 1.0, 0.1, r_min=0.5)
    assert rep.energy == LN2 * sum(rep.bad_mass)
    assert rep.ratio == rep.energy / rep.normalizer and rep.normalizer == 1.0
    doc = rep.to_json()
    assert doc["kind"] == "wgl" and doc["params"]["eps"] == 0.1
    back = CarlesonReport.from_json(doc)
    assert back.energy == rep.energy


def test_scale_clamping(small_plane):
    scales, dropped = dyadic_scales(small_plane, np.zeros(3), 0.5, r_min=0.1)
    assert scales == [0.5, 0.25]
    assert dropped == ["r=0.125 below 8h"]
    with pytest.raises(ValueError):
        dyadic_scales(small_plane, np.zeros(3), 4.0)
    with pytest.raises(ValueError):
        dyadic_scales(small_plane, np.zeros(3), 0.0)


def test_center_net_keeps_mass(energy_corner):
    idx, mass = center_net(energy_corner, np.zeros(3), 1.0, 0.25)
    assert mass.sum() == pytest.approx(ball_mass(energy_corner, np.zeros(3), 1.0), rel=1e-12)
    assert len(idx) == len(np.unique(idx))
