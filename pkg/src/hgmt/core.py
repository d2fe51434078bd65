"""Group law, Korányi metric and symmetric points of the first Heisenberg group.

Floating-point operations take arrays whose trailing axis holds ``(x, y, t)``
and broadcast over any leading axes. The ``exact_*`` family works on integer
triples ``(x, y, t2)`` with ``t2 = 2 t`` so that the half-integer term of the
group law never leaves the integers.
"""

import numpy as np


class SingularPointError(ValueError):
    """Raised when a kernel is evaluated at the group identity."""


def as_points(p, name="p"):
    """Return ``p`` as a float array with trailing axis of length 3."""
    arr = np.asarray(p, dtype=float)
    if arr.shape[-1:] != (3,):
        raise ValueError(f"{name} must have trailing dimension 3, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite coordinates")
    return arr


def _stack(x, y, t):
    return np.stack(np.broadcast_arrays(x, y, t), axis=-1)


def group_mul(p, q):
    p, q = as_points(p), as_points(q, "q")
    x, y, t = p[..., 0], p[..., 1], p[..., 2]
    u, v, s = q[..., 0], q[..., 1], q[..., 2]
    return _stack(x + u, y + v, t + s + 0.5 * (x * v - y * u))


def group_inv(p):
    return -as_points(p)


def koranyi_norm(p):
    p = as_points(p)
    r2 = p[..., 0] ** 2 + p[..., 1] ** 2
    return np.sqrt(np.sqrt(r2 * r2 + 16.0 * p[..., 2] ** 2))


def dist(p, q):
    """Left-invariant distance ``||q^-1 p||``."""
    return koranyi_norm(group_mul(group_inv(q), p))


def dilate(r, p):
    r = float(r)
    if not r > 0:
        raise ValueError(f"dilation factor must be positive, got {r}")
    p = as_points(p)
    return p * np.array([r, r, r * r])


def bar_involution(p):
    return as_points(p) * np.array([-1.0, -1.0, 1.0])


def project(p):
    return as_points(p)[..., :2].copy()


def _planar(z, name):
    arr = np.asarray(z, dtype=float)
    if arr.shape[-1:] == (3,):
        arr = arr[..., :2]
    if arr.shape[-1:] != (2,):
        raise ValueError(f"{name} must be a planar or spatial point, got shape {arr.shape}")
    return arr


def lift_point(q, p):
    """Point over ``pi(q)`` in the horizontal plane through ``p``."""
    p = as_points(p)
    dz = _planar(q, "q") - p[..., :2]
    horizontal = np.concatenate([dz, np.zeros(dz.shape[:-1] + (1,))], axis=-1)
    return group_mul(p, horizontal)


def lift_sequence(seq, p):
    """Lift each element off the previous lift, starting at base ``p``."""
    seq = np.asarray(seq, dtype=float)
    if seq.ndim != 2 or len(seq) == 0:
        raise ValueError("sequence must be a non-empty list of points")
    out = np.empty((len(seq), 3))
    base = as_points(p)
    for j, q in enumerate(seq):
        base = lift_point(q, base)
        out[j] = base
    return out


def sigma(p, q):
    """Symmetric point of ``q`` relative to ``p``: ``p * bar(p^-1 q)``."""
    return group_mul(p, bar_involution(group_mul(group_inv(p), q)))


def sigma_from_lift(p, q):
    """Same map built as mirror-in-the-plane followed by a lift back to ``q``."""
    p, q = as_points(p), as_points(q, "q")
    mirrored = 2.0 * p[..., :2] - q[..., :2]
    return lift_point(mirrored, q)


# exact integer arithmetic on (x, y, t2)

def _exact(p, name="p"):
    arr = np.asarray(p)
    if arr.dtype.kind not in "iu":
        raise ValueError(f"{name} must hold integers (x, y, t2)")
    if arr.shape[-1:] != (3,):
        raise ValueError(f"{name} must have trailing dimension 3")
    return arr.astype(np.int64)


def to_exact(p):
    """Convert float points with integer planar part and half-integer t."""
    p = as_points(p)
    doubled = np.concatenate([p[..., :2], 2.0 * p[..., 2:]], axis=-1)
    rounded = np.rint(doubled)
    if not np.array_equal(rounded, doubled):
        raise ValueError("point is not representable as (int, int, int/2)")
    return rounded.astype(np.int64)


def from_exact(e):
    e = _exact(e)
    return np.concatenate([e[..., :2], e[..., 2:] / 2.0], axis=-1).astype(float)


def exact_mul(p, q):
    p, q = _exact(p), _exact(q, "q")
    x, y, t = p[..., 0], p[..., 1], p[..., 2]
    u, v, s = q[..., 0], q[..., 1], q[..., 2]
    return np.stack(np.broadcast_arrays(x + u, y + v, t + s + x * v - y * u), axis=-1)


def exact_inv(p):
    return -_exact(p)


def exact_sigma(p, q):
    """Integer symmetric point; depends on ``p`` only through its planar part."""
    p, q = _exact(p), _exact(q, "q")
    a, b = p[..., 0], p[..., 1]
    x, y, t = q[..., 0], q[..., 1], q[..., 2]
    return np.stack(np.broadcast_arrays(2 * a - x, 2 * b - y, t + 2 * (b * x - a * y)), axis=-1)


def exact_lift_point(z, p):
    z = np.asarray(z, dtype=np.int64)[..., :2]
    p = _exact(p)
    dz = z - p[..., :2]
    return exact_mul(p, np.concatenate([dz, np.zeros(dz.shape[:-1] + (1,), np.int64)], axis=-1))


def exact_lift_sequence(seq, p):
    seq = np.asarray(seq, dtype=np.int64)
    if seq.ndim != 2 or len(seq) == 0:
        raise ValueError("sequence must be a non-empty list of points")
    out = np.empty((len(seq), 3), np.int64)
    base = _exact(p)
    for j, z in enumerate(seq):
        base = exact_lift_point(z, base)
        out[j] = base
    return out
