"""Vertical planes, vertical beta numbers and the weak geometric lemma energy.

The distance from a point to a vertical plane only sees the projection, so
``beta`` reduces to a planar min-width problem on the projected fibers of the
ball: for a fixed normal angle the best offset is the midrange of the
projections, and the angle is found by a grid scan plus golden-section search.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict
import csv
import json
import math

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .core import as_points
from .sets import _inplane_coordinate, _inplane_range

LN2 = math.log(2.0)
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class VerticalPlane:
    """The plane ``{p : <pi(p), (cos theta, sin theta)> = c}``."""

    theta: float
    c: float

    def __post_init__(self):
        theta, c = math.fmod(float(self.theta), 2 * math.pi), float(self.c)
        if theta < 0:
            theta += 2 * math.pi
        if theta >= math.pi:
            theta, c = theta - math.pi, -c
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "c", c)

    @property
    def normal(self):
        return np.array([math.cos(self.theta), math.sin(self.theta)])

    def translate(self, g):
        """Image of the plane under left translation by ``g``."""
        g = as_points(g)
        return VerticalPlane(self.theta, self.c + float(g[:2] @ self.normal))


def dist_to_vplane(p, W):
    p = as_points(p)
    return np.abs(p[..., 0] * math.cos(W.theta) + p[..., 1] * math.sin(W.theta) - W.c)


@dataclass
class BetaResult:
    value: float
    argmin: VerticalPlane
    n_support: int
    in_band: bool = True


def _hull(Z):
    if len(Z) < 3:
        return Z
    try:
        return Z[ConvexHull(Z).vertices]
    except QhullError:
        return Z  # collinear or duplicate input


def _widths(H, thetas):
    proj = H @ np.vstack([np.cos(thetas), np.sin(thetas)])
    return proj.max(axis=0) - proj.min(axis=0)


def min_width_direction(Z, n_theta=512, tol=1e-4):
    """Normal angle in ``[0, pi)`` minimising the projected width of the planar points ``Z``."""
    H = _hull(np.asarray(Z, float))
    grid = np.arange(n_theta) * (math.pi / n_theta)
    widths = _widths(H, grid)
    i = int(np.argmin(widths))
    best_theta, best_w = float(grid[i]), float(widths[i])
    # the width is piecewise sinusoidal with kinks at hull edge normals,
    # so it is unimodal on the bracket around the best grid angle
    a, b = grid[i] - math.pi / n_theta, grid[i] + math.pi / n_theta
    width = lambda th: float(_widths(H, np.array([th]))[0])
    x1, x2 = b - GOLDEN * (b - a), a + GOLDEN * (b - a)
    f1, f2 = width(x1), width(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = width(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = width(x2)
    th = 0.5 * (a + b)
    w = width(th)
    if w < best_w:
        best_theta, best_w = th % math.pi, w
    return best_theta, best_w, H


def _plane_for(H, theta):
    proj = H @ np.array([math.cos(theta), math.sin(theta)])
    return VerticalPlane(theta, 0.5 * (proj.max() + proj.min()))


def _ball_projection(S, p, r):
    fibers, lo, hi = S.index.ball_fibers(as_points(p), float(r))
    if len(fibers) == 0:
        raise ValueError(f"ball of radius {r} around {np.ravel(p).tolist()} holds no samples")
    return S.index.fiber_xy[fibers], int((hi - lo).sum())


def beta(S, p, r, n_theta=512, tol=1e-4):
    """Vertical beta number of the sample in ``B(p, r)``."""
    if not r > 0:
        raise ValueError("radius must be positive")
    Z, n = _ball_projection(S, p, r)
    theta, w, H = min_width_direction(Z, n_theta, tol)
    plane = _plane_for(H, theta)
    return BetaResult(w / (2 * r), plane, n, S.in_band(r))


def beta_exhaustive(S, p, r, n_theta=10_000):
    """Reference value from a plain scan over ``n_theta`` equally spaced angles."""
    Z, n = _ball_projection(S, p, r)
    grid = np.arange(n_theta) * (math.pi / n_theta)
    widths = _widths(np.asarray(Z, float), grid)
    i = int(np.argmin(widths))
    return BetaResult(float(widths[i]) / (2 * r), _plane_for(Z, float(grid[i])), n, S.in_band(r))


def beta_profile(S, centers, scales, n_jobs=None, **kw):
    """Beta for every (centre, scale); failures are recorded per row."""
    centers = as_points(centers).reshape(-1, 3)
    tasks = [(p, float(r)) for p in centers for r in scales]

    def run(task):
        p, r = task
        row = {"center_x": p[0], "center_y": p[1], "center_t": p[2], "r": r}
        try:
            b = beta(S, p, r, **kw)
            row.update(beta=b.value, theta_star=b.argmin.theta, c_star=b.argmin.c, error="")
        except ValueError as exc:
            row.update(beta=float("nan"), theta_star=float("nan"), c_star=float("nan"), error=str(exc))
        return row

    return _map(run, tasks, n_jobs)


def auto_centers(S, n, r, seed=0):
    """``n`` seeded sample points whose radius-``r`` balls stay inside the generated region."""
    pool = S.interior(r)
    if len(pool) == 0:
        pool = np.arange(len(S))
    rng = np.random.default_rng(seed)
    pick = np.sort(rng.choice(pool, size=min(int(n), len(pool)), replace=False))
    return S.points[pick]


def dyadic_scale_list(S, n):
    """``n`` dyadic scales from the largest power of two at most ``extent / 2`` downward."""
    top = 2.0 ** math.floor(math.log2(S.extent / 2.0))
    return [top * 2.0 ** -k for k in range(int(n))]


PROFILE_COLUMNS = ["center_x", "center_y", "center_t", "r", "beta", "theta_star", "c_star"]


def write_profile_csv(rows, path, config=None):
    """Write profile rows to a path or an open text stream."""
    if hasattr(path, "write"):
        _write_profile(rows, path, config)
        return
    with open(path, "w", newline="") as fh:
        _write_profile(rows, fh, config)


def _write_profile(rows, fh, config):
    if config is not None:
        fh.write(f"# config: {json.dumps(config, sort_keys=True)}\n")
    writer = csv.DictWriter(fh, fieldnames=PROFILE_COLUMNS, extrasaction="ignore", lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: repr(float(row[k])) for k in PROFILE_COLUMNS})


def _map(fn, items, n_jobs):
    """Ordered map, threaded when ``n_jobs`` asks for it."""
    if n_jobs in (None, 0, 1) or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=None if n_jobs < 0 else n_jobs) as pool:
        return list(pool.map(fn, items))


# Carleson energies

@dataclass
class CarlesonReport:
    kind: str
    scales: list
    bad_mass: list
    energy: float
    normalizer: float
    ratio: float
    clamped: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    bad_centers: list = field(default_factory=list)  # per scale, coordinates of bad centres
    tested: list = field(default_factory=list)  # per scale, number of centres tested

    @classmethod
    def build(cls, kind, R, scales, masses, **kw):
        masses = [float(m) for m in masses]
        energy = LN2 * sum(masses)
        return cls(kind, [float(r) for r in scales], masses, energy, float(R) ** 3,
                   energy / float(R) ** 3, **kw)

    def to_json(self):
        doc = asdict(self)
        doc["bad_centers"] = [np.asarray(c).tolist() for c in self.bad_centers]
        return doc

    @classmethod
    def from_json(cls, doc):
        return cls(**doc)


def covered(S, p0, R, r):
    """Whether every ball ``B(p, r)`` with ``p`` in ``B(p0, R)`` lies inside the generated region."""
    p0 = as_points(p0)
    reach = float(np.hypot(p0[0], p0[1])) + R
    t_need = abs(p0[2]) + R * R / 4 + r * r / 4 + reach * r / 2
    desc = S.descriptor
    if "extent" not in desc:
        return True
    s0 = _inplane_coordinate(desc, p0[None, :])
    if s0 is None:
        return t_need <= S.t_extent
    lo, hi = _inplane_range(desc)
    s0 = float(s0[0])
    if desc.get("kind") == "corner":
        ok_s = reach + r <= hi * (1 + 1e-12)
    else:
        ok_s = s0 - R - r >= lo * (1 + 1e-12) and s0 + R + r <= hi * (1 + 1e-12)
    return ok_s and t_need <= S.t_extent * (1 + 1e-12)


def dyadic_scales(S, p0, R, r_min=None):
    """Scales ``R 2^-k`` down to ``r_min`` (default ``8h``) that the sample supports.

    Returns the kept scales and human-readable reasons for the dropped ones.
    """
    if not R > 0:
        raise ValueError("R must be positive")
    r_min = 8 * S.h if r_min is None else float(r_min)
    kept, dropped = [], []
    k = 0
    while True:
        r = R * 2.0 ** -k
        if r < r_min * (1 - 1e-12):
            break
        if r < 8 * S.h * (1 - 1e-12):
            dropped.append(f"r={r:g} below 8h")
        elif not covered(S, p0, R, r):
            dropped.append(f"r={r:g} not covered by the sample")
        else:
            kept.append(r)
        k += 1
    if not kept:
        raise ValueError(f"no admissible dyadic scale in [{r_min:g}, {R:g}]: {dropped}")
    return kept, dropped


def center_net(S, p0, R, cell):
    """Samples in ``B(p0, R)`` grouped into ``cell x cell x cell^2`` boxes.

    Returns one representative index per box (its lowest index) and the total
    weight of the box, so sums over centres become sums over boxes.
    """
    idx = S.index.ball_query(as_points(p0), float(R))
    if len(idx) == 0:
        raise ValueError("no samples in B(p0, R)")
    pts = S.points[idx]
    keys = np.floor(pts / np.array([cell, cell, cell * cell])).astype(np.int64)
    _, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    mass = np.bincount(inverse.ravel(), weights=S.weights[idx])
    return idx[first], mass


def carleson_energy(S, kind, is_bad, p0, R, r_min=None, cell_factor=0.5,
                    max_exact_centers=2000, n_jobs=None, params=None):
    """Dyadic Carleson sum of the mass of bad centres in ``B(p0, R)``.

    With at most ``max_exact_centers`` samples in the ball every sample is a
    centre; otherwise each scale uses a net of boxes of side ``cell_factor * r``.
    """
    p0 = as_points(p0)
    scales, dropped = dyadic_scales(S, p0, R, r_min)
    n_in_ball = len(S.index.ball_query(p0, float(R)))
    masses, bad_centers, tested = [], [], []
    for r in scales:
        if n_in_ball <= max_exact_centers:
            idx = S.index.ball_query(p0, float(R))
            mass = S.weights[idx]
        else:
            idx, mass = center_net(S, p0, R, cell_factor * r)
        flags = _map(lambda i: bool(is_bad(S.points[i], r)), list(idx), n_jobs)
        flags = np.array(flags, bool)
        masses.append(float(np.sum(mass[flags])))
        bad_centers.append(S.points[idx[flags]])
        tested.append(int(len(idx)))
    params = dict(params or {}, p0=p0.tolist(), R=float(R),
                  r_min=float(8 * S.h if r_min is None else r_min), cell_factor=cell_factor)
    return CarlesonReport.build(kind, R, scales, masses, clamped=dropped, params=params,
                                bad_centers=bad_centers, tested=tested)


def wgl_energy(S, p0, R, eps, r_min=None, n_jobs=None, **kw):
    """Carleson sum of the mass of centres whose beta number is at least ``eps``."""
    def is_bad(p, r):
        return beta(S, p, r).value >= eps

    return carleson_energy(S, "wgl", is_bad, p0, R, r_min, n_jobs=n_jobs,
                           params={"eps": float(eps)}, **kw)
