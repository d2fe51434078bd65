import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from hgmt.core import (as_points, bar_involution, dilate, dist, exact_lift_point, exact_lift_sequence,
                       exact_mul, exact_inv, exact_sigma, from_exact, group_inv, group_mul,
                       koranyi_norm, lift_point, lift_sequence, project, sigma, sigma_from_lift,
                       to_exact)

coord = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
point = arrays(np.float64, 3, elements=coord)
int_point = arrays(np.int64, 3, elements=st.integers(-1000, 1000))
scale = st.floats(0.01, 100)


def close(a, b, tol=1e-10):
    a, b = np.asarray(a), np.asarray(b)
    return np.all(np.abs(a - b) <= tol * np.maximum(1.0, np.abs(b)))


# examples worked by hand from the group law

def test_group_mul_examples():
    assert np.array_equal(group_mul([1, 0, 0], [0, 1, 0]), [1, 1, 0.5])
    assert np.array_equal(group_mul([1, 2, 3], [4, 5, 6]), [5, 7, 7.5])
    assert np.array_equal(group_mul([1, 2, 3], [0, 0, 0]), [1, 2, 3])


def test_inverse_and_norm_examples():
    assert np.array_equal(group_inv([1, 2, 3]), [-1, -2, -3])
    assert np.array_equal(group_inv([0, 0, 0]) + 0.0, [0, 0, 0])
    assert koranyi_norm([1, 0, 0]) == 1.0
    assert koranyi_norm([0, 0, 1]) == pytest.approx(2.0, abs=1e-15)
    assert koranyi_norm([0, 1, 50]) == pytest.approx(40001 ** 0.25, rel=1e-15)


def test_distance_on_a_horizontal_line():
    # (100, 1, 50) = (100, 0, 0) * (0, 1, 0) is one horizontal unit away
    assert dist([100, 0, 0], [100, 1, 50]) == pytest.approx(1.0, abs=1e-12)
    # flipping the height puts q^-1 p at (0, -1, 100)
    assert dist([100, 0, 0], [100, 1, -50]) == pytest.approx(160001 ** 0.25, rel=1e-14)
    assert dist([3, -2, 7], [3, -2, 7]) == 0.0


def test_dilation_bar_projection_examples():
    assert np.array_equal(dilate(2, [1, 1, 1]), [2, 2, 4])
    assert np.array_equal(bar_involution([1, 2, 3]), [-1, -2, 3])
    assert np.array_equal(project([1, 2, 3]), [1, 2])
    with pytest.raises(ValueError):
        dilate(0, [1, 1, 1])
    with pytest.raises(ValueError):
        dilate(-1, [1, 1, 1])


def test_lift_examples():
    assert np.array_equal(lift_point([1, 1, 7], [0, 0, 0]), [1, 1, 0])
    assert np.array_equal(lift_point([1, 0, 0], [0, 1, 0]), [1, 0, -0.5])
    q = np.array([2.0, -1.0, 3.5])
    assert np.array_equal(lift_point(q, q), q)
    assert np.array_equal(lift_sequence([q], [0, 0, 0]), [lift_point(q, [0, 0, 0])])
    with pytest.raises(ValueError):
        lift_sequence(np.zeros((0, 3)), [0, 0, 0])


def test_square_loop_lifts_end_four_units_up():
    loop = [(0, 0), (2, 0), (2, 2), (0, 2), (0, 0)]
    assert np.allclose(lift_sequence(loop, [0, 0, 0])[-1], [0, 0, 4])
    assert np.allclose(lift_sequence(loop[::-1], [0, 0, 0])[-1], [0, 0, -4])


def test_sigma_examples():
    assert np.array_equal(sigma([0, 0, 0], [1, 2, 3]), [-1, -2, 3])
    assert np.array_equal(sigma([1, 1, 5], [0, 0, 0]), [2, 2, 0])
    assert np.array_equal(sigma([1, 2, 3], [4, 5, 6]), [-2, -1, 9])
    assert np.array_equal(sigma_from_lift([1, 2, 3], [4, 5, 6]), [-2, -1, 9])


def test_input_validation():
    with pytest.raises(ValueError):
        as_points([1, 2])
    with pytest.raises(ValueError):
        group_mul([np.nan, 0, 0], [0, 0, 0])
    with pytest.raises(ValueError):
        koranyi_norm([np.inf, 0, 0])


def test_broadcasting_over_leading_axes(rng):
    p = rng.normal(size=(4, 5, 3))
    q = rng.normal(size=(5, 3))
    out = group_mul(p, q)
    assert out.shape == (4, 5, 3)
    assert np.allclose(out[2, 3], group_mul(p[2, 3], q[3]))


# group properties

@given(point, point, point)
def test_associativity(p, q, r):
    assert close(group_mul(group_mul(p, q), r), group_mul(p, group_mul(q, r)))


@given(point)
def test_inverse(p):
    assert close(group_mul(p, group_inv(p)), np.zeros(3), 1e-12)
    assert close(group_mul(group_inv(p), p), np.zeros(3), 1e-12)


@given(point, point, point)
def test_distance_is_left_invariant(g, p, q):
    # roundoff in the height coordinate enters the norm under a square root
    scale = 1 + np.abs(np.concatenate([g, p, q])).max()
    assert abs(dist(group_mul(g, p), group_mul(g, q)) - dist(p, q)) <= 1e-6 * scale


@given(point, point, point)
def test_triangle_inequality(p, q, r):
    assert dist(p, r) <= dist(p, q) + dist(q, r) + 1e-9 * (1 + dist(p, r))


@given(point, point, scale)
def test_dilations_are_automorphisms(p, q, r):
    assert close(dilate(r, group_mul(p, q)), group_mul(dilate(r, p), dilate(r, q)))
    assert close(koranyi_norm(dilate(r, p)), r * koranyi_norm(p))
    assert close(dilate(1 / r, dilate(r, p)), p, 1e-12)


@given(point, point)
def test_bar_is_isometric_isomorphism(p, q):
    b = bar_involution
    assert close(b(group_mul(p, q)), group_mul(b(p), b(q)))
    assert close(dist(b(p), b(q)), dist(p, q))
    assert np.array_equal(b(b(p)), p)
    assert np.array_equal(project(b(p)), -project(p))


@given(point, point)
def test_projection_is_homomorphism(p, q):
    assert np.array_equal(project(group_mul(p, q)), project(p) + project(q))


# symmetric points

@given(point, point)
def test_sigma_routes_agree(p, q):
    assert close(sigma(p, q), sigma_from_lift(p, q), 1e-12)


@given(point, point)
def test_sigma_isometry_and_involution(p, q):
    s = sigma(p, q)
    assert close(dist(p, s), dist(p, q))
    assert close(sigma(p, s), q)
    assert close(sigma(p, p), p)


@given(point, point, point, scale)
def test_sigma_equivariance(g, p, q, r):
    assert close(group_mul(g, sigma(p, q)), sigma(group_mul(g, p), group_mul(g, q)))
    assert close(dilate(r, sigma(p, q)), sigma(dilate(r, p), dilate(r, q)))


@given(point, point, st.floats(-50, 50))
def test_sigma_ignores_height_of_centre(p, q, s):
    # the map depends on the centre only through its projection
    moved = p + np.array([0.0, 0.0, s])
    assert close(sigma(moved, q), sigma(p, q))


# exact integer arithmetic

@given(int_point, int_point)
def test_exact_ops_match_float(p, q):
    assert np.array_equal(from_exact(exact_mul(p, q)), group_mul(from_exact(p), from_exact(q)))
    assert np.array_equal(from_exact(exact_sigma(p, q)), sigma(from_exact(p), from_exact(q)))
    assert np.array_equal(exact_mul(p, exact_inv(p)), np.zeros(3, np.int64))


@given(int_point, int_point)
def test_exact_lift_matches_float(p, q):
    assert np.array_equal(from_exact(exact_lift_point(q, p)), lift_point(from_exact(q), from_exact(p)))


def test_exact_conversion():
    assert np.array_equal(to_exact([1, 2, 1.5]), [1, 2, 3])
    with pytest.raises(ValueError):
        to_exact([0.5, 0, 0])
    with pytest.raises(ValueError):
        exact_mul(np.array([0.5, 0, 0]), np.array([0, 0, 0]))
    seq = np.array([[0, 0], [2, 0], [2, 2], [0, 2], [0, 0]])
    assert np.array_equal(exact_lift_sequence(seq, np.array([0, 0, 0]))[-1], [0, 0, 8])
