"""Symmetric closures in the plane and in the Heisenberg group.

Planar sets are closed under the mirror ``S_x(y) = 2x - y``. Sets in the group
are closed under the symmetric-point map, computed exactly on ``(x, y, t2)``
integer triples. Two closure engines are provided:

* ``box``: worklist closure restricted to ``|x|, |y| <= M`` and ``|t| <= M^2``.
* ``fiber``: closure restricted only in the planar coordinates. It relies on
  the closure being invariant under a central translation by ``t2 -> t2 + P``,
  which is checked on a small box closure before it is used, so every vertical
  fiber is a union of residue classes mod ``P`` and fits in a bitmask.
"""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.spatial import cKDTree

from .core import exact_lift_sequence, exact_sigma
from .sets import PLANE_BALL_CONSTANT

SNAP_TOL = 1e-9


def planar_mirror(x, y):
    return 2 * np.asarray(x) - np.asarray(y)


def _det(a, b):
    return a[0] * b[1] - a[1] * b[0]


def _sorted_unique_rows(arr):
    if len(arr) == 0:
        return arr
    return np.unique(arr, axis=0)


# planar closures

@dataclass
class PlanarClosure:
    points: np.ndarray
    window: float
    converged: bool
    iterations: int

    def as_set(self):
        return {tuple(p) for p in self.points.tolist()}


def _is_integral(arr):
    return arr.dtype.kind in "iu" or bool(np.all(np.rint(arr) == arr))


def planar_closure(seeds, window, max_iter=1000):
    """Smallest subset of ``|x|, |y| <= window`` containing ``seeds`` and closed under mirrors.

    Integer seeds take an exact path. Real seeds take a float path that snaps
    new points lying within ``SNAP_TOL`` of existing members.
    """
    seeds = np.atleast_2d(np.asarray(seeds))
    if seeds.size == 0 or seeds.shape[1] != 2:
        raise ValueError("seeds must be a non-empty list of planar points")
    if _is_integral(seeds):
        return _planar_closure_exact(seeds.astype(np.int64), int(window), max_iter)
    return _planar_closure_float(seeds.astype(float), float(window), max_iter)


def _planar_closure_exact(seeds, M, max_iter):
    side = 2 * M + 1
    grid = np.zeros((side, side), bool)
    inside = np.all(np.abs(seeds) <= M, axis=1)
    seeds = seeds[inside]
    grid[seeds[:, 0] + M, seeds[:, 1] + M] = True
    new = _sorted_unique_rows(seeds)
    for it in range(1, max_iter + 1):
        members = np.argwhere(grid) - M
        found = []
        for x in new:
            for cand in (2 * x - members, 2 * members - x):
                ok = np.all(np.abs(cand) <= M, axis=1)
                found.append(cand[ok])
        cand = np.concatenate(found)
        fresh = ~grid[cand[:, 0] + M, cand[:, 1] + M]
        new = _sorted_unique_rows(cand[fresh])
        if len(new) == 0:
            return PlanarClosure(np.argwhere(grid) - M, M, True, it)
        grid[new[:, 0] + M, new[:, 1] + M] = True
    return PlanarClosure(np.argwhere(grid) - M, M, False, max_iter)


def _planar_closure_float(seeds, M, max_iter):
    members = _snap_unique(seeds[np.all(np.abs(seeds) <= M, axis=1)])
    new = members
    for it in range(1, max_iter + 1):
        found = []
        for x in new:
            found.append(2 * x - members)
            found.append(2 * members - x)
        cand = np.concatenate(found)
        cand = cand[np.all(np.abs(cand) <= M, axis=1)]
        d, _ = cKDTree(members).query(cand, distance_upper_bound=SNAP_TOL)
        new = _snap_unique(cand[~(d <= SNAP_TOL)])
        if len(new) == 0:
            return PlanarClosure(members[np.lexsort(members.T[::-1])], M, True, it)
        members = np.concatenate([members, new])
    return PlanarClosure(members[np.lexsort(members.T[::-1])], M, False, max_iter)


def _snap_unique(pts):
    """Drop points within ``SNAP_TOL`` of an earlier point in lexicographic order."""
    if len(pts) == 0:
        return pts
    pts = pts[np.lexsort(pts.T[::-1])]
    pairs = cKDTree(pts).query_pairs(SNAP_TOL, output_type="ndarray")
    drop = np.zeros(len(pts), bool)
    for i, j in sorted(map(tuple, pairs)):
        if not drop[i]:
            drop[j] = True
    return pts[~drop]


@dataclass
class PlanarLatticeSet:
    """Lattice points ``m a + n b`` with ``|m|, |n| <= window``, excluding odd-odd pairs."""

    a: tuple
    b: tuple
    window: int
    points: np.ndarray  # generator coordinates (m, n)

    def planar(self):
        basis = np.array([self.a, self.b])
        return self.points @ basis

    def planar_set(self):
        return {tuple(p) for p in self.planar().tolist()}


def lattice_prediction(a, b, window):
    a, b = tuple(np.asarray(a).tolist()), tuple(np.asarray(b).tolist())
    if _det(a, b) == 0:
        raise ValueError("generators must be linearly independent")
    M = int(window)
    m, n = np.meshgrid(np.arange(-M, M + 1), np.arange(-M, M + 1), indexing="ij")
    keep = ~((m % 2 == 1) & (n % 2 == 1))
    return PlanarLatticeSet(a, b, M, np.stack([m[keep], n[keep]], axis=1))


def lattice_window_for_box(a, b, box):
    """Generator-coordinate window large enough to cover the planar box ``|x|, |y| <= box``."""
    inv = np.linalg.inv(np.array([a, b], float).T)
    return int(math.ceil(box * np.abs(inv).sum(axis=1).max())) + 1


# checkers sequences

@dataclass
class CheckersSequence:
    points: list
    witnesses: list

    def __post_init__(self):
        self.points = [tuple(p) for p in np.asarray(self.points).tolist()]
        self.witnesses = [tuple(w) for w in np.asarray(self.witnesses).reshape(-1, 2).tolist()]
        if len(self.points) == 0 or len(self.witnesses) != len(self.points) - 1:
            raise ValueError("a checkers sequence needs one witness per step")


def validate_checkers(seq, A):
    """True iff every step mirrors through a witness that belongs to ``A``."""
    members = A if isinstance(A, (set, frozenset)) else {tuple(p) for p in np.asarray(A).tolist()}
    for (x0, y0), (x1, y1), w in zip(seq.points, seq.points[1:], seq.witnesses):
        if w not in members:
            return False
        if (x1, y1) != (2 * w[0] - x0, 2 * w[1] - y0):
            return False
    return True


def connected_sequence(z, steps, a, b):
    """Walk from ``z`` by steps in ``{±2a, ±2b}``, jumping over ``z_j ± a`` or ``z_j ± b``.

    ``steps`` is a string over ``"AaBb"``: upper case adds, lower case subtracts.
    """
    a, b = np.asarray(a), np.asarray(b)
    moves = {"A": a, "a": -a, "B": b, "b": -b}
    pts, wit = [tuple(np.asarray(z).tolist())], []
    cur = np.asarray(z)
    for s in steps:
        if s not in moves:
            raise ValueError(f"unknown step {s!r}")
        wit.append(tuple((cur + moves[s]).tolist()))
        cur = cur + 2 * moves[s]
        pts.append(tuple(cur.tolist()))
    return CheckersSequence(pts, wit)


def loop_sequences(z, a, b):
    """The square loop around ``z`` spanned by ``2a`` and ``2b`` in both orientations.

    ``sigma_plus`` visits ``z, z+2a, z+2a+2b, z+2b, z``; ``sigma_minus`` runs the
    same square backwards, so their lifts end ``4 det(a, b)`` above and below.
    The point reflection ``z, z-2a, z-2a-2b, z-2b, z`` keeps the orientation of
    ``sigma_plus`` and would end above as well.
    """
    return connected_sequence(z, "ABab", a, b), connected_sequence(z, "BAba", a, b)


# closures in the group

def _keys(pts, M):
    T = 2 * M * M
    return ((pts[:, 0] + M) * (2 * M + 1) + (pts[:, 1] + M)) * (2 * T + 1) + (pts[:, 2] + T)


def _in_box(pts, M):
    T = 2 * M * M
    return (np.abs(pts[:, 0]) <= M) & (np.abs(pts[:, 1]) <= M) & (np.abs(pts[:, 2]) <= T)


@dataclass
class HClosureSet:
    """Symmetric closure of exact seeds.

    ``mode == "box"`` stores the points of the box closure. ``mode == "fiber"``
    stores one residue bitmask per planar cell: the fiber over ``(x, y)`` is
    every ``t2`` whose residue mod ``period`` has its bit set.
    """

    seeds: np.ndarray
    window: int
    mode: str
    converged: bool
    iterations: int
    box_points: np.ndarray = None
    period: int = None
    masks: np.ndarray = None
    _keys: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self.mode == "box":
            self._keys = _keys(self.box_points, self.window)

    def contains(self, e):
        e = np.atleast_2d(np.asarray(e, np.int64))
        out = np.zeros(len(e), bool)
        M = self.window
        if self.mode == "box":
            inside = _in_box(e, M)
            k = _keys(e[inside], M)
            pos = np.searchsorted(self._keys, k)
            pos = np.minimum(pos, len(self._keys) - 1)
            out[inside] = self._keys[pos] == k
            return out
        inside = (np.abs(e[:, 0]) <= M) & (np.abs(e[:, 1]) <= M)
        ee = e[inside]
        bits = self.masks[ee[:, 0] + M, ee[:, 1] + M]
        res = (ee[:, 2] % self.period).astype(np.uint64)
        out[inside] = ((bits >> res) & np.uint64(1)) == 1
        return out

    def in_window(self, e):
        e = np.atleast_2d(np.asarray(e, np.int64))
        if self.mode == "box":
            return _in_box(e, self.window)
        return (np.abs(e[:, 0]) <= self.window) & (np.abs(e[:, 1]) <= self.window)

    @property
    def points(self):
        """Members inside the box ``|x|, |y| <= M``, ``|t2| <= 2 M^2``."""
        if self.mode == "box":
            return self.box_points
        return self.points_in_box(self.window)

    def points_in_box(self, M):
        M = min(int(M), self.window)
        if self.mode == "box":
            return self.box_points[_in_box(self.box_points, M)]
        T = 2 * M * M
        out = []
        W = self.window
        for x in range(-M, M + 1):
            for y in range(-M, M + 1):
                m = int(self.masks[x + W, y + W])
                for r in range(self.period):
                    if m >> r & 1:
                        start = -T + ((r + T) % self.period)
                        t2 = np.arange(start, T + 1, self.period)
                        out.append(np.column_stack([np.full_like(t2, x), np.full_like(t2, y), t2]))
        if not out:
            return np.zeros((0, 3), np.int64)
        pts = np.concatenate(out)
        return pts[np.lexsort(pts.T[::-1])]

    def fiber(self, z, t2_range=None):
        """Sorted ``t2`` values over planar ``z``; ``t2_range`` defaults to the box."""
        x, y = int(z[0]), int(z[1])
        if self.mode == "box":
            pts = self.box_points
            return np.sort(pts[(pts[:, 0] == x) & (pts[:, 1] == y), 2])
        lo, hi = t2_range if t2_range is not None else (-2 * self.window ** 2, 2 * self.window ** 2)
        W = self.window
        m = int(self.masks[x + W, y + W])
        vals = np.arange(lo, hi + 1)
        return vals[[(m >> int(v % self.period)) & 1 == 1 for v in vals]]

    def planar_support(self):
        if self.mode == "box":
            return _sorted_unique_rows(self.box_points[:, :2])
        W = self.window
        return np.argwhere(self.masks != 0) - W

    def count_in_ball(self, radius):
        """Number of members with Korányi norm strictly below ``radius``."""
        R = float(radius)
        if self.mode == "box":
            p = self.box_points
            r2 = p[:, 0] ** 2 + p[:, 1] ** 2
            return int(np.count_nonzero(r2.astype(float) ** 2 + 4.0 * p[:, 2].astype(float) ** 2 < R ** 4))
        W = self.window
        idx = np.argwhere(self.masks != 0)
        z = idx - W
        r2 = (z ** 2).sum(axis=1).astype(float)
        keep = r2 < R * R
        z, r2, idx = z[keep], r2[keep], idx[keep]
        # |t2| < sqrt(R^4 - |z|^4) / 2, strictly
        half = np.sqrt(R ** 4 - r2 ** 2) / 2.0
        upper = np.ceil(half).astype(np.int64) - 1
        total = 0
        masks = self.masks[idx[:, 0], idx[:, 1]]
        P = self.period
        for r in range(P):
            has = ((masks >> np.uint64(r)) & np.uint64(1)) == 1
            u = upper[has]
            total += int(np.sum(np.floor_divide(u - r, P) - (-np.floor_divide(u + r, P)) + 1))
        return total

    def separation(self):
        """Lower bound on the distance between distinct members."""
        if self.mode == "box":
            pts = self.box_points
            t_gap = np.inf
            order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
            s = pts[order]
            same = np.all(s[1:, :2] == s[:-1, :2], axis=1)
            if np.any(same):
                t_gap = float(np.min(np.diff(s[:, 2])[same]))
        else:
            t_gap = float("inf")
            P = self.period
            for m in np.unique(self.masks[self.masks != 0]):
                bits = [r for r in range(P) if int(m) >> r & 1]
                gaps = np.diff(bits + [bits[0] + P])
                t_gap = min(t_gap, float(gaps.min()))
        planar = 1.0
        vertical = 2.0 * math.sqrt(t_gap / 2.0) if np.isfinite(t_gap) else np.inf
        return min(planar, vertical)

    def to_json(self):
        return {
            "seeds": self.seeds.tolist(),
            "window": int(self.window),
            "points": self.points.tolist(),
        }


def h_closure(seeds, window, max_iter=10_000, mode="auto", probe_window=6):
    """Symmetric closure of exact seeds ``(x, y, t2)`` inside a window of size ``window``.

    ``mode="auto"`` uses the box engine for windows up to ``probe_window`` and
    otherwise tries the fiber engine, falling back to the box engine when no
    central period is detected.
    """
    seeds = np.atleast_2d(np.asarray(seeds))
    if seeds.size == 0 or seeds.shape[1] != 3 or seeds.dtype.kind not in "iu":
        raise ValueError("seeds must be a non-empty list of integer (x, y, t2) triples")
    seeds = seeds.astype(np.int64)
    M = int(window)
    if mode not in ("auto", "box", "fiber"):
        raise ValueError(f"unknown closure mode {mode!r}")
    if mode == "box" or (mode == "auto" and M <= probe_window):
        return _box_closure(seeds, M, max_iter)
    probe = _box_closure(seeds, min(M, probe_window), max_iter)
    period = detect_period(probe)
    if period is None:
        if mode == "fiber":
            raise ValueError("no central period found; the fiber engine does not apply")
        return _box_closure(seeds, M, max_iter)
    return _fiber_closure(seeds, M, period, max_iter)


def detect_period(box_set, max_period=32):
    """Smallest power of two ``P`` with every seed shifted by ``±P`` in ``t2`` a member."""
    P = 1
    while P <= max_period:
        shifted = np.concatenate([box_set.seeds + [0, 0, P], box_set.seeds - [0, 0, P]])
        if np.all(box_set.contains(shifted)):
            return P
        P *= 2
    return None


def _box_closure(seeds, M, max_iter):
    members = np.unique(seeds[_in_box(seeds, M)], axis=0)
    keys = np.sort(_keys(members, M))
    new = members
    applied = set()  # planar centers already applied to every member
    for it in range(1, max_iter + 1):
        fibers = _sorted_unique_rows(members[:, :2])
        found = [np.zeros((0, 3), np.int64)]
        for z in fibers:
            # the map depends on the center only through its planar part
            found.append(_sigma_planar_center(z, new if tuple(z) in applied else members))
        applied.update(map(tuple, fibers.tolist()))
        cand = np.concatenate(found)
        cand = cand[_in_box(cand, M)]
        ck = np.unique(_keys(cand, M))
        fresh = ck[~np.isin(ck, keys, assume_unique=True)]
        if len(fresh) == 0:
            return HClosureSet(seeds, M, "box", True, it, box_points=_decode(keys, M))
        new = _decode(fresh, M)
        keys = np.union1d(keys, fresh)
        members = _decode(keys, M)
    return HClosureSet(seeds, M, "box", False, max_iter, box_points=_decode(keys, M))


def _sigma_planar_center(z, pts):
    center = np.array([z[0], z[1], 0], np.int64)
    return exact_sigma(center, pts)


def _decode(keys, M):
    T = 2 * M * M
    t2 = keys % (2 * T + 1) - T
    rest = keys // (2 * T + 1)
    y = rest % (2 * M + 1) - M
    x = rest // (2 * M + 1) - M
    return np.column_stack([x, y, t2]).astype(np.int64)


def _rotl(m, s, P):
    full = np.uint64((1 << P) - 1)
    s = s.astype(np.uint64)
    back = (np.uint64(P) - s) % np.uint64(P)
    return ((m << s) | (m >> back)) & full


def _fiber_closure(seeds, W, P, max_iter):
    side = 2 * W + 1
    masks = np.zeros((side, side), np.uint64)
    for x, y, t2 in seeds.tolist():
        if abs(x) <= W and abs(y) <= W:
            masks[x + W, y + W] |= np.uint64(1 << (t2 % P))
    coords = np.arange(-W, W + 1)
    X, Y = np.meshgrid(coords, coords, indexing="ij")
    delta = masks.copy()
    changed_centers = np.argwhere(masks != 0)
    for it in range(1, max_iter + 1):
        add = np.zeros_like(masks)
        centers = np.argwhere(masks != 0)
        fresh_center = np.zeros((side, side), bool)
        fresh_center[tuple(changed_centers.T)] = True
        for ci, cj in centers:
            source = masks if fresh_center[ci, cj] else delta
            _reflect_into(add, source, ci - W, cj - W, X, Y, W, P)
        new_bits = add & ~masks
        if not np.any(new_bits):
            return HClosureSet(seeds, W, "fiber", True, it, period=P, masks=masks)
        masks |= new_bits
        delta = new_bits
        # a cell whose fiber grew from empty becomes a new center
        changed_centers = np.argwhere((new_bits != 0) & ((masks & ~new_bits) == 0))
    return HClosureSet(seeds, W, "fiber", False, max_iter, period=P, masks=masks)


def _reflect_into(out, source, a, b, X, Y, W, P):
    """Apply the symmetric point map with planar center ``(a, b)`` to every fiber of ``source``."""
    # target x' = 2a - x stays in [-W, W] iff x in [2a - W, 2a + W]
    xlo, xhi = max(-W, 2 * a - W), min(W, 2 * a + W)
    ylo, yhi = max(-W, 2 * b - W), min(W, 2 * b + W)
    if xlo > xhi or ylo > yhi:
        return
    sx = slice(xlo + W, xhi + W + 1)
    sy = slice(ylo + W, yhi + W + 1)
    src = source[sx, sy]
    shift = (2 * (b * X[sx, sy] - a * Y[sx, sy])) % P
    rotated = _rotl(src, shift, P)
    tx = slice(2 * a - xhi + W, 2 * a - xlo + W + 1)
    ty = slice(2 * b - yhi + W, 2 * b - ylo + W + 1)
    out[tx, ty] |= rotated[::-1, ::-1]


# counting

@dataclass
class GrowthFit:
    exponent: float
    radii: list
    counts: list


def growth_exponent(closure, radii, min_count=10):
    """Least-squares slope of log(count in the Korányi ball B(0, M)) against log M."""
    radii = [float(r) for r in radii]
    if len(radii) < 2 or any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be increasing with at least two entries")
    if not isinstance(closure, HClosureSet):
        closure = h_closure(**closure)
    counts = [closure.count_in_ball(r) for r in radii]
    if counts[0] < min_count:
        raise ValueError(f"only {counts[0]} points in the smallest ball")
    slope = np.polyfit(np.log(radii), np.log(counts), 1)[0]
    return GrowthFit(float(slope), radii, counts)


@dataclass
class PackingCheck:
    radius: float
    count: int
    separation: float
    implied_constant: float
    reference_constant: float

    @property
    def violated(self):
        return self.implied_constant > self.reference_constant


def packing_check(closure, radius, reference_constant=None):
    """Regularity constant forced on any 3-regular set containing the closure.

    Balls of radius ``separation / 2`` around members are disjoint and sit in
    ``B(0, radius + separation / 2)``, so lower and upper regularity with
    constant ``A`` force ``count (s/2)^3 / A <= A (radius + s/2)^3``.
    The default reference is the best constant of a vertical plane.
    """
    if reference_constant is None:
        reference_constant = 1.0 / PLANE_BALL_CONSTANT
    n = closure.count_in_ball(radius)
    s = closure.separation()
    implied = math.sqrt(n * (s / 2) ** 3 / (radius + s / 2) ** 3)
    return PackingCheck(float(radius), n, s, implied, float(reference_constant))


# lifts into closures

@dataclass
class LiftedSequence:
    points: np.ndarray
    members: np.ndarray
    in_window: np.ndarray


def lift_checkers_into_closure(E, seq, q):
    q = np.asarray(q, np.int64)
    if not E.contains(q)[0]:
        raise ValueError("base point is not a member of the closure")
    if tuple(seq.points[0]) != (int(q[0]), int(q[1])):
        raise ValueError("sequence must start at the projection of the base point")
    support = {tuple(z) for z in E.planar_support().tolist()}
    if not validate_checkers(seq, support):
        raise ValueError("sequence is not a checkers sequence in the projected closure")
    pts = exact_lift_sequence(np.asarray(seq.points, np.int64), q)
    return LiftedSequence(pts, E.contains(pts), E.in_window(pts))
