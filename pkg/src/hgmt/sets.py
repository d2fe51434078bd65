"""Weighted samples of 3-regular sets and Korányi-ball queries on them.

Samples live on unions of vertical lines, so the spatial index groups points
into vertical fibers sharing the same ``(x, y)``. A Korányi ball meets each
fiber in a single ``t``-interval, found by binary search; a k-d tree over the
fiber positions handles the planar part.
"""

from dataclasses import dataclass, field
from functools import cached_property
import json
import math

import numpy as np
from scipy.spatial import cKDTree

from .core import as_points, dilate as dilate_points, dist, group_inv, group_mul

PLANE_BALL_CONSTANT = 0.874019


class FiberIndex:
    """Exact Korányi ball and nearest-point queries over a set of vertical fibers."""

    def __init__(self, points, weights):
        fiber_xy, inverse, counts = np.unique(
            points[:, :2], axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.ravel()
        order = np.lexsort((points[:, 2], inverse))
        self.fiber_xy = fiber_xy
        self.order = order
        self.t = points[order, 2]
        self.offsets = np.concatenate([[0], np.cumsum(counts)])
        self.cum_w = np.concatenate([[0.0], np.cumsum(weights[order])])
        self.fiber_weight = np.diff(self.cum_w[self.offsets])
        self.t_min = float(self.t.min())
        # one key line with fibers laid end to end; gaps keep them from interleaving
        self._stride = float(self.t.max() - self.t_min) + 1.0
        self._key = np.repeat(np.arange(len(counts)), counts) * self._stride + (self.t - self.t_min)
        self.tree = cKDTree(fiber_xy)
        self._points = points

    @property
    def n_fibers(self):
        return len(self.fiber_xy)

    def _centres(self, p, fibers):
        z = self.fiber_xy[fibers]
        dz2 = ((z - p[:2]) ** 2).sum(axis=1)
        centre = p[2] + 0.5 * (p[0] * z[:, 1] - p[1] * z[:, 0])
        return dz2, centre

    def _search(self, fibers, lo_t, hi_t):
        base = fibers * self._stride - self.t_min
        lo = np.searchsorted(self._key, base + lo_t, side="right")
        hi = np.searchsorted(self._key, base + hi_t, side="left")
        lo = np.maximum(lo, self.offsets[fibers])
        hi = np.minimum(hi, self.offsets[fibers + 1])
        return lo, hi

    def ball_fibers(self, p, r):
        """Fibers meeting the open ball with the sorted-position range of their members.

        Boundary decisions follow the closed-form interval and may differ from
        ``dist`` only at rounding level.
        """
        fibers = np.asarray(self.tree.query_ball_point(p[:2], r), dtype=np.int64)
        fibers.sort()
        dz2, centre = self._centres(p, fibers)
        rad = r ** 4 - dz2 ** 2
        keep = rad > 0
        fibers, centre, rad = fibers[keep], centre[keep], rad[keep]
        half = 0.25 * np.sqrt(rad)
        lo, hi = self._search(fibers, centre - half, centre + half)
        nonempty = hi > lo
        return fibers[nonempty], lo[nonempty], hi[nonempty]

    def ball_mass(self, p, r):
        _, lo, hi = self.ball_fibers(p, r)
        return float(np.sum(self.cum_w[hi] - self.cum_w[lo]))

    def ball_query(self, p, r):
        """Original indices with ``dist(point, p) < r``, sorted."""
        fibers = np.asarray(self.tree.query_ball_point(p[:2], r * (1 + 1e-12)), dtype=np.int64)
        if len(fibers) == 0:
            return np.zeros(0, np.int64)
        dz2, centre = self._centres(p, fibers)
        rad = np.maximum(r ** 4 - dz2 ** 2, 0.0)
        half = 0.25 * np.sqrt(rad)
        slack = 1e-9 * (1.0 + np.abs(centre) + half)
        lo, hi = self._search(fibers, centre - half - slack, centre + half + slack)
        pos = _ranges(lo, hi)
        idx = self.order[pos]
        idx = idx[dist(self._points[idx], p) < r]
        idx.sort()
        return idx

    def nearest(self, queries, k=8):
        """Distance from each query to the nearest member, with the member's index."""
        q = np.atleast_2d(queries)
        k = min(k, self.n_fibers)
        planar, fibers = self.tree.query(q[:, :2], k=k)
        planar = planar.reshape(len(q), k)
        fibers = fibers.reshape(len(q), k)
        best, arg = self._best_in_fibers(q, fibers)
        unsure = np.nonzero(best > planar[:, -1])[0] if k < self.n_fibers else np.zeros(0, int)
        for i in unsure:
            # any closer member lies on a fiber within planar distance `best`
            cand = np.asarray(self.tree.query_ball_point(q[i, :2], best[i] * (1 + 1e-12)), np.int64)
            b, a = self._best_in_fibers(q[i:i + 1], cand[None, :])
            if b[0] < best[i]:
                best[i], arg[i] = b[0], a[0]
        return best, self.order[arg]

    def _best_in_fibers(self, q, fibers):
        """Closest member over the given fibers, per query row."""
        z = self.fiber_xy[fibers]
        dz2 = ((z - q[:, None, :2]) ** 2).sum(axis=2)
        centre = q[:, None, 2] + 0.5 * (q[:, None, 0] * z[..., 1] - q[:, None, 1] * z[..., 0])
        key = fibers * self._stride + (centre - self.t_min)
        pos = np.searchsorted(self._key, key)
        start, stop = self.offsets[fibers], self.offsets[fibers + 1] - 1
        above = np.clip(pos, start, stop)
        below = np.clip(pos - 1, start, stop)
        d_above = dz2 ** 2 + 16.0 * (self.t[above] - centre) ** 2
        d_below = dz2 ** 2 + 16.0 * (self.t[below] - centre) ** 2
        choice = np.where(d_below < d_above, below, above)
        d4 = np.minimum(d_above, d_below)
        j = np.argmin(d4, axis=1)
        rows = np.arange(len(q))
        return np.sqrt(np.sqrt(d4[rows, j])), choice[rows, j]


def _ranges(lo, hi):
    """Concatenate ``arange(lo[i], hi[i])`` over i."""
    lengths = np.maximum(hi - lo, 0)
    total = int(lengths.sum())
    if total == 0:
        return np.zeros(0, np.int64)
    starts = np.repeat(lo - np.concatenate([[0], np.cumsum(lengths)[:-1]]), lengths)
    return starts + np.arange(total)


@dataclass(frozen=True, eq=False)
class SampledSet:
    """Weighted sample of a 3-regular set; weights approximate its H3 measure."""

    points: np.ndarray
    weights: np.ndarray
    h: float
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = as_points(self.points, "points").reshape(-1, 3) + 0.0  # folds -0.0 into 0.0
        w = np.asarray(self.weights, dtype=float).ravel()
        if len(pts) == 0:
            raise ValueError("a sampled set needs at least one point")
        if len(w) != len(pts):
            raise ValueError("points and weights differ in length")
        if not np.all(w > 0):
            raise ValueError("weights must be positive")
        if not self.h > 0:
            raise ValueError("spacing h must be positive")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "descriptor", dict(self.descriptor))

    def __len__(self):
        return len(self.points)

    @cached_property
    def index(self):
        return FiberIndex(self.points, self.weights)

    @property
    def extent(self):
        if "extent" in self.descriptor:
            return float(self.descriptor["extent"])
        return float(np.abs(self.points[:, :2]).max())

    @property
    def t_extent(self):
        if "t_extent" in self.descriptor:
            return float(self.descriptor["t_extent"])
        return float(np.abs(self.points[:, 2]).max())

    @property
    def band(self):
        """Scales where neither discretization nor truncation dominates."""
        return 8.0 * self.h, min(self.extent, 2.0 * math.sqrt(self.t_extent)) / 4.0

    def in_band(self, r, rtol=1e-9):
        lo, hi = self.band
        return lo * (1 - rtol) <= r <= hi * (1 + rtol)

    def total_weight(self):
        return float(self.weights.sum())

    def translate(self, g):
        """Left translate every sample by ``g``."""
        desc = dict(self.descriptor, translated_by=list(map(float, as_points(g))))
        return SampledSet(group_mul(g, self.points), self.weights, self.h, desc)

    def dilate(self, s):
        desc = dict(self.descriptor)
        for key, power in (("extent", 1), ("t_extent", 2)):
            if key in desc:
                desc[key] = desc[key] * s ** power
        return SampledSet(dilate_points(s, self.points), self.weights * s ** 3, self.h * s, desc)

    def region_mask(self, q, r=0.0):
        """Whether the radius-``r`` ball around each point of ``q`` lies in the generated region.

        Sets without a known region (closures, loaded files without a kind) count as unbounded.
        """
        q = as_points(q).reshape(-1, 3)
        desc = self.descriptor
        if "translated_by" in desc:
            q = group_mul(group_inv(np.asarray(desc["translated_by"], float)), q)
        shear = r * r / 4 + 0.5 * np.hypot(q[:, 0], q[:, 1]) * r
        if desc.get("kind") == "closure":
            M = float(desc["extent"])
            return (np.abs(q[:, 0]) <= M - r) & (np.abs(q[:, 1]) <= M - r) & \
                (np.abs(q[:, 2]) <= self.t_extent - shear)
        s = _inplane_coordinate(desc, q)
        if s is None or "extent" not in desc:
            return np.ones(len(q), bool)
        lo, hi = _inplane_range(desc)
        keep = (s <= hi - r) & (np.abs(q[:, 2]) <= self.t_extent - shear)
        if desc.get("kind") != "corner":
            keep &= s >= lo + r
        return keep

    def interior(self, r):
        """Indices whose radius-``r`` ball stays inside the generated region."""
        return np.nonzero(self.region_mask(self.points, r))[0]

    def to_json(self):
        return {
            "points": self.points.tolist(),
            "weights": self.weights.tolist(),
            "h": self.h,
            "descriptor": _jsonable(self.descriptor),
        }

    @classmethod
    def from_json(cls, doc):
        try:
            return cls(np.asarray(doc["points"], float), np.asarray(doc["weights"], float),
                       float(doc["h"]), dict(doc.get("descriptor", {})))
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed set document: {exc}") from exc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return repr(obj)


def save_set(S, path):
    with open(path, "w") as fh:
        json.dump(S.to_json(), fh)


def load_set(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected a JSON object")
    return SampledSet.from_json(doc)


# generators

def _check_spacing(extent, h):
    if not (h > 0 and math.isfinite(h)):
        raise ValueError(f"spacing must be positive, got {h}")
    if not extent >= 8 * h:
        raise ValueError(f"extent {extent} must be at least 8h = {8 * h}")


def _nodes(limit, step):
    n = int(math.floor(limit / step + 1e-9))
    return np.arange(-n, n + 1) * step


def _t_nodes(t_extent, h):
    t = _nodes(t_extent, h * h)
    if len(t) == 0:
        raise ValueError("t range holds no samples")
    return t


def _plane_points(theta, c, s, t):
    n = np.array([math.cos(theta), math.sin(theta)])
    v = np.array([-math.sin(theta), math.cos(theta)])
    z = c * n + s[:, None] * v
    S = np.repeat(z, len(t), axis=0)
    return np.column_stack([S, np.tile(t, len(s))])


def _inplane_coordinate(desc, p):
    kind = desc.get("kind")
    if kind in ("vertical-plane", "horizontal-lines"):
        th = desc["theta"]
        return -math.sin(th) * p[:, 0] + math.cos(th) * p[:, 1]
    if kind == "corner":
        return p[:, 0] + p[:, 1]
    if kind == "graph":
        return p[:, 1]
    return None


def _inplane_range(desc):
    e = float(desc["extent"])
    if desc.get("kind") == "corner":
        return 0.0, e
    return -e, e


def gen_vertical_plane(theta, c, extent, h, t_extent=None):
    """Grid sample of the vertical plane ``<pi(p), (cos theta, sin theta)> = c``.

    The in-plane coordinate has spacing ``h`` and ``t`` has spacing ``h^2``;
    each sample carries the cell area ``h^3``.
    """
    _check_spacing(extent, h)
    t_extent = extent ** 2 if t_extent is None else float(t_extent)
    s, t = _nodes(extent, h), _t_nodes(t_extent, h)
    pts = _plane_points(theta, c, s, t)
    desc = {"kind": "vertical-plane", "theta": float(theta), "c": float(c),
            "extent": float(extent), "t_extent": t_extent}
    return SampledSet(pts, np.full(len(pts), h ** 3), h, desc)


def gen_corner(extent, h, t_extent=None):
    """Half-planes ``{x = 0, y >= 0}`` and ``{y = 0, x >= 0}`` sharing the t-axis."""
    _check_spacing(extent, h)
    t_extent = extent ** 2 if t_extent is None else float(t_extent)
    s = _nodes(extent, h)
    s = s[s >= 0]
    t = _t_nodes(t_extent, h)
    along_y = np.column_stack([np.zeros_like(s), s])
    along_x = np.column_stack([s[1:], np.zeros_like(s[1:])])
    z = np.concatenate([along_y, along_x])
    pts = np.column_stack([np.repeat(z, len(t), axis=0), np.tile(t, len(z))])
    desc = {"kind": "corner", "extent": float(extent), "t_extent": t_extent}
    return SampledSet(pts, np.full(len(pts), h ** 3), h, desc)


def gen_horizontal_lines(theta, t_intervals, extent, h, t_extent=None):
    """Horizontal lines of the vertical plane through the origin with normal angle ``theta``.

    Keeps samples whose ``t`` lies in one of the closed ``t_intervals``. The
    descriptor reports ``full_scale_max``, below which a ball centred mid-interval
    sees only a full plane, and ``mixing_scale_min``, above which every ball's
    t-window spans a whole interval and gap.
    """
    _check_spacing(extent, h)
    t_extent = extent ** 2 if t_extent is None else float(t_extent)
    iv = sorted((float(a), float(b)) for a, b in t_intervals)
    if not iv:
        raise ValueError("need at least one interval")
    for a, b in iv:
        if b < a or a < -t_extent - 1e-12 or b > t_extent + 1e-12:
            raise ValueError(f"interval ({a}, {b}) is empty or outside the t range")
    for (a0, b0), (a1, b1) in zip(iv, iv[1:]):
        if a1 <= b0:
            raise ValueError(f"intervals ({a0}, {b0}) and ({a1}, {b1}) overlap")
    s, t = _nodes(extent, h), _t_nodes(t_extent, h)
    tol = 1e-12 * max(1.0, t_extent)
    keep = np.zeros(len(t), bool)
    for a, b in iv:
        keep |= (t >= a - tol) & (t <= b + tol)
    t = t[keep]
    if len(t) == 0:
        raise ValueError("intervals contain no t samples")
    pts = _plane_points(theta, 0.0, s, t)
    lengths = [b - a for a, b in iv]
    gaps = [a1 - b0 for (_, b0), (a1, _) in zip(iv, iv[1:])]
    period = max((l + g for l, g in zip(lengths, gaps)), default=max(lengths))
    desc = {"kind": "horizontal-lines", "theta": float(theta), "t_intervals": iv,
            "extent": float(extent), "t_extent": t_extent,
            "full_scale_max": math.sqrt(2 * min(lengths)),
            "mixing_scale_min": math.sqrt(2 * period)}
    return SampledSet(pts, np.full(len(pts), h ** 3), h, desc)


def gen_graph(phi, extent, h, t_extent=None, label=None):
    """Samples ``(phi(y, t), y, t)`` of the surface ``x = phi(y, t)``."""
    _check_spacing(extent, h)
    t_extent = extent ** 2 if t_extent is None else float(t_extent)
    s, t = _nodes(extent, h), _t_nodes(t_extent, h)
    Y = np.repeat(s, len(t))
    T = np.tile(t, len(s))
    X = np.broadcast_to(np.asarray(phi(Y, T), float), Y.shape)
    pts = np.column_stack([X, Y, T])
    desc = {"kind": "graph", "phi": label or getattr(phi, "__name__", repr(phi)),
            "extent": float(extent), "t_extent": t_extent}
    return SampledSet(pts, np.full(len(pts), h ** 3), h, desc)


def from_closure(E, weight=1.0):
    """Unit-weight sample of a symmetric closure's box points."""
    pts = E.points[:, :2].astype(float)
    pts = np.column_stack([pts, E.points[:, 2] / 2.0])
    desc = {"kind": "closure", "extent": float(E.window), "t_extent": float(E.window) ** 2,
            "seeds": E.seeds.tolist()}
    return SampledSet(pts, np.full(len(pts), float(weight)), 1.0, desc)


# queries

def ball_query(S, p, r):
    if not r > 0:
        raise ValueError("radius must be positive")
    return S.index.ball_query(as_points(p), float(r))


def ball_mass(S, p, r):
    if not r > 0:
        raise ValueError("radius must be positive")
    return S.index.ball_mass(as_points(p), float(r))


def nearest_dist(S, p):
    """Distance from ``p`` (one point or an array of points) to the sample."""
    p = as_points(p)
    d, _ = S.index.nearest(p.reshape(-1, 3))
    return float(d[0]) if p.ndim == 1 else d


def nearest_brute(S, p):
    return float(np.min(dist(S.points, as_points(p))))


# regularity

@dataclass
class RegularityReport:
    centers: np.ndarray
    scales: list
    scale_range: tuple
    ratios: np.ndarray  # (n_centers, n_scales)
    constant: float
    flags: list

    @property
    def degenerate(self):
        return "degenerate" in self.flags


def regularity_estimate(S, n_centers, scales, seed=0):
    """Ratios ``mu(B(p, r)) / r^3`` at sample centres and the implied constant."""
    scales = [float(r) for r in scales]
    lo, hi = S.band
    flags = [f"scale {r:g} outside [{lo:g}, {hi:g}]" for r in scales if not S.in_band(r)]
    if len(S) < 2 or S.index.n_fibers < 2:
        return RegularityReport(np.zeros((0, 3)), scales, (lo, hi), np.zeros((0, len(scales))),
                                float("nan"), flags + ["degenerate"])
    pool = S.interior(max(scales))
    if len(pool) == 0:
        pool = np.arange(len(S))
        flags.append("no interior centres; using all samples")
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(pool, size=min(n_centers, len(pool)), replace=False))
    centers = S.points[pick]
    ratios = np.array([[S.index.ball_mass(p, r) / r ** 3 for r in scales] for p in centers])
    A = float(max(ratios.max(), 1.0 / ratios.min())) if ratios.min() > 0 else float("inf")
    return RegularityReport(centers, scales, (lo, hi), ratios, A, flags)
