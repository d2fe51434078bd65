"""Horizontally antisymmetric kernels and truncated singular integrals on samples.

Kernels carry their homogeneity and antisymmetry claims, and both claims are
checked on random points whenever a kernel is built. On an unmodified
vertical-plane sample the operators reduce to 2-D convolutions over the
``(s, t)`` grid and run through FFTs; every other set uses direct sums.
"""

from dataclasses import dataclass, field, asdict
import math

import numpy as np
from scipy.signal import fftconvolve

from .core import (SingularPointError, as_points, bar_involution, dilate, dist,
                   group_inv, group_mul, koranyi_norm)
from .flatness import CarlesonReport, center_net
from .sets import _nodes, _t_nodes, nearest_dist


@dataclass(frozen=True)
class Kernel:
    evaluator: object
    homogeneity: int = None
    claims_horizontal_antisymmetry: bool = False
    name: str = "kernel"
    support: tuple = None  # (inner, outer) norms bounding the support, if compact

    def __post_init__(self):
        self.check()

    def __call__(self, p):
        return self.evaluator(as_points(p))

    def check(self, n=1000, seed=0, tol=1e-10):
        """Verify the metadata claims on ``n`` random points; raise on failure."""
        rng = np.random.default_rng(seed)
        p = rng.normal(size=(n, 3))
        if self.support is not None:
            lo, hi = self.support
            radii = rng.uniform(lo, hi, size=n) if hi > lo else np.full(n, hi)
            p = dilate_rows(radii / koranyi_norm(p), p)
        k = self(p)
        scale = np.max(np.abs(k)) + 1e-300
        if self.claims_horizontal_antisymmetry:
            err = np.max(np.abs(self(bar_involution(p)) + k))
            if err > tol * scale:
                raise ValueError(f"{self.name}: antisymmetry fails by {err:.3g}")
        if self.homogeneity is not None:
            r = np.exp(rng.uniform(np.log(0.1), np.log(10.0), size=n))
            lhs = self(dilate_rows(r, p))
            rhs = r ** self.homogeneity * k
            err = np.max(np.abs(lhs - rhs) / (np.abs(rhs) + tol * scale * r ** self.homogeneity))
            if err > tol:
                raise ValueError(f"{self.name}: homogeneity {self.homogeneity} fails by {err:.3g}")
        return self


def dilate_rows(r, p):
    """Dilate each row of ``p`` by its own factor."""
    r = np.asarray(r, float)[:, None]
    return p * np.concatenate([r, r, r * r], axis=1)


def horizontal_grad(f, p, step=1e-4):
    """Central differences of ``f`` along the left-invariant horizontal flows."""
    p = as_points(p)
    ex, ey = np.array([step, 0.0, 0.0]), np.array([0.0, step, 0.0])
    fx = (f(group_mul(p, ex)) - f(group_mul(p, -ex))) / (2 * step)
    fy = (f(group_mul(p, ey)) - f(group_mul(p, -ey))) / (2 * step)
    return fx, fy


def inverse_square_norm(p):
    return koranyi_norm(p) ** -2.0


def _riesz(component):
    def evaluate(p):
        x, y, t = p[..., 0], p[..., 1], p[..., 2]
        r2 = x * x + y * y
        n4 = r2 * r2 + 16 * t * t
        if np.any(n4 == 0):
            raise SingularPointError("Riesz kernel is singular at the identity")
        num = -2 * r2 * x + 8 * t * y if component == "X" else -2 * r2 * y - 8 * t * x
        return num / n4 ** 1.5
    return evaluate


def riesz_kernel(component):
    """Horizontal gradient components of ``||p||^-2``."""
    component = component.upper()
    if component not in ("X", "Y"):
        raise ValueError("component must be 'X' or 'Y'")
    return Kernel(_riesz(component), -3, True, f"riesz-{component.lower()}")


# bumps

def smoothstep_profile(u, inner=0.5):
    """1 for ``u <= inner``, 0 for ``u >= 1``, quintic smoothstep in between."""
    v = np.clip((1.0 - np.asarray(u, float)) / (1.0 - inner), 0.0, 1.0)
    return v ** 3 * (10 - 15 * v + 6 * v * v)


@dataclass(frozen=True)
class BumpSpec:
    center: tuple
    radius: float
    inner: float = 0.5

    def __post_init__(self):
        c = as_points(self.center, "center")
        object.__setattr__(self, "center", tuple(float(v) for v in c))
        if not (self.radius > 0 and 0 < self.inner < 1):
            raise ValueError("need radius > 0 and 0 < inner < 1")
        # the ball and its bar image sit radius/4 apart and radius/8 away from 0
        if 2 * math.hypot(c[0], c[1]) < 2.25 * self.radius:
            raise ValueError("bump ball is too close to its bar image")
        if float(koranyi_norm(c)) < 1.125 * self.radius:
            raise ValueError("bump ball is too close to the origin")


def bump_psi(spec):
    """``psi(p) = g(p) - g(bar p)`` for the smoothstep bump ``g`` around ``spec.center``."""
    c = np.array(spec.center)

    def evaluate(p):
        near = smoothstep_profile(dist(p, c) / spec.radius, spec.inner)
        far = smoothstep_profile(dist(bar_involution(p), c) / spec.radius, spec.inner)
        return near - far

    norm = float(koranyi_norm(c))
    return Kernel(evaluate, None, True, f"bump:{c[0]:g},{c[1]:g},{c[2]:g},{spec.radius:g}",
                  (norm - spec.radius, norm + spec.radius))


def one_sided_bump(spec):
    """The plain smoothstep bump around ``spec.center``, without its mirrored lobe."""
    c = np.array(spec.center)

    def evaluate(p):
        return smoothstep_profile(dist(p, c) / spec.radius, spec.inner)

    norm = float(koranyi_norm(c))
    return Kernel(evaluate, None, False, f"one-sided:{c[0]:g},{c[1]:g},{c[2]:g},{spec.radius:g}",
                  (norm - spec.radius, norm + spec.radius))


def scaled(psi, r):
    """``psi_r(p) = r^-3 psi(delta_{1/r} p)``."""
    return lambda p: r ** -3 * psi(dilate(1.0 / r, p))


def stacked_kernel(psi, signs, N):
    """``sum_{k=-N}^{N} sign_k psi_{2^-k}``; ``signs="alternating"`` uses ``(-1)^k``."""
    if not psi.claims_horizontal_antisymmetry or psi.support is None:
        raise ValueError("psi must be antisymmetric with compact support")
    lo, hi = psi.support
    if not lo > 0:
        raise ValueError("psi support touches the origin")
    ks = np.arange(-N, N + 1)
    if isinstance(signs, str):
        if signs != "alternating":
            raise ValueError(f"unknown sign pattern {signs!r}")
        signs = (-1.0) ** np.abs(ks)
    signs = np.asarray(signs, float)
    if signs.shape != ks.shape or not np.all(np.abs(signs) == 1):
        raise ValueError(f"need {len(ks)} signs in {{-1, 1}}")

    def evaluate(p):
        norm = koranyi_norm(p)
        out = np.zeros(np.shape(norm))
        for k, eps in zip(ks, signs):
            r = 2.0 ** -k
            # only scales whose support annulus contains the point contribute
            hit = (norm >= r * lo) & (norm <= r * hi)
            if np.any(hit):
                out[hit] += eps * r ** -3 * psi(dilate(1.0 / r, p[hit]))
        return out

    return Kernel(evaluate, None, True, f"stacked:N={N},{psi.name}",
                  (2.0 ** -N * lo, 2.0 ** N * hi))


def kernel_from_name(name):
    """Registry: ``riesz-x``, ``riesz-y``, ``bump:x,y,t,radius``, ``stacked:N,x,y,t,radius``."""
    kind, _, args = name.partition(":")
    try:
        vals = [float(v) for v in args.split(",")] if args else []
        if kind == "riesz-x":
            return riesz_kernel("X")
        if kind == "riesz-y":
            return riesz_kernel("Y")
        if kind == "bump":
            x, y, t, rad = vals
            return bump_psi(BumpSpec((x, y, t), rad))
        if kind == "stacked":
            n, x, y, t, rad = vals
            return stacked_kernel(bump_psi(BumpSpec((x, y, t), rad)), "alternating", int(n))
    except ValueError as exc:
        raise ValueError(f"bad kernel spec {name!r}: {exc}") from exc
    raise ValueError(f"unknown kernel {name!r}")


# truncated singular integrals

def density(S, f):
    """Per-sample values of ``f``: an array, a scalar, a callable, or a descriptor string.

    Descriptors: ``"one"``, ``"zero"``, ``"ball:R"`` (indicator of ``B(0, R)``)
    and ``"ball:R@x,y,t"``.
    """
    if isinstance(f, str):
        kind, _, arg = f.partition(":")
        if kind == "one":
            return np.ones(len(S))
        if kind == "zero":
            return np.zeros(len(S))
        if kind == "ball":
            rad, _, centre = arg.partition("@")
            c = np.array([float(v) for v in centre.split(",")]) if centre else np.zeros(3)
            return (dist(S.points, c) < float(rad)).astype(float)
        raise ValueError(f"unknown density {f!r}")
    if callable(f):
        return np.asarray(f(S.points), float)
    return np.broadcast_to(np.asarray(f, float), (len(S),)).copy()


def plane_grid(S):
    """``(theta, c, s_nodes, t_nodes)`` for an untouched vertical-plane sample, else None."""
    d = S.descriptor
    if d.get("kind") != "vertical-plane" or "translated_by" in d:
        return None
    s, t = _nodes(d["extent"], S.h), _t_nodes(d["t_extent"], S.h)
    if len(s) * len(t) != len(S):
        return None
    return d["theta"], d["c"], s, t


def _plane_offsets(grid, h):
    theta, c, s, t = grid
    v = np.array([-math.sin(theta), math.cos(theta)])
    ds = np.arange(-(len(s) - 1), len(s)) * h
    dt = np.arange(-(len(t) - 1), len(t)) * h * h
    DS, DT = np.meshgrid(ds, dt, indexing="ij")
    # q^-1 p for p, q on the plane differing by (ds, dt) in plane coordinates
    return np.stack([DS * v[0], DS * v[1], DT - 0.5 * c * DS], axis=-1)


def _check_eps(S, eps):
    if not eps >= 2 * S.h * (1 - 1e-12):
        raise ValueError(f"eps = {eps} is below 2h = {2 * S.h}")


def t_eps(K, S, f, eps, p):
    """``sum over samples q with d(p, q) > eps of K(q^-1 p) f(q) weight(q)``."""
    _check_eps(S, eps)
    p = as_points(p)
    fw = density(S, f) * S.weights
    v = group_mul(group_inv(S.points), p)
    far = koranyi_norm(v) > eps
    far &= fw != 0
    if not np.any(far):
        return 0.0
    return float(np.sum(K(v[far]) * fw[far]))


def t_eps_all(K, S, f, eps, method="auto", chunk=None):
    """Truncated integral evaluated at every sample point."""
    _check_eps(S, eps)
    fw = density(S, f) * S.weights
    grid = plane_grid(S)
    if method == "fft" or (method == "auto" and grid is not None):
        if grid is None:
            raise ValueError("FFT evaluation needs an untouched vertical-plane sample")
        offsets = _plane_offsets(grid, S.h)
        G = np.zeros(offsets.shape[:2])
        far = koranyi_norm(offsets) > eps
        G[far] = K(offsets[far])
        shape = (len(grid[2]), len(grid[3]))
        return fftconvolve(fw.reshape(shape), G, mode="same").ravel()
    out = np.empty(len(S))
    src = fw != 0
    q, w = S.points[src], fw[src]
    chunk = chunk or max(1, 2_000_000 // max(len(q), 1))
    for start in range(0, len(S), chunk):
        p = S.points[start:start + chunk]
        v = group_mul(group_inv(q)[None, :, :], p[:, None, :])
        far = koranyi_norm(v) > eps
        vals = np.zeros(far.shape)
        vals[far] = K(v[far])
        out[start:start + chunk] = vals @ w
    return out


@dataclass
class SioReport:
    eps: list
    norms: list
    h: float
    f: str
    variation: float  # (max - min) / max over the eps list

    def to_json(self):
        return asdict(self)


def l2_uniformity(K, S, f, eps_list, method="auto"):
    """Discrete ``L2(mu)`` norms of the truncated integral of ``f mu`` for each truncation."""
    eps_list = [float(e) for e in eps_list]
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps_list must be strictly descending")
    for e in eps_list:
        _check_eps(S, e)
    norms = []
    for e in eps_list:
        T = t_eps_all(K, S, f, e, method=method)
        norms.append(float(np.sqrt(np.sum(S.weights * T * T))))
    top = max(norms)
    variation = (top - min(norms)) / top if top > 0 else 0.0
    return SioReport(eps_list, norms, S.h, f if isinstance(f, str) else "array", variation)


# condition C2

def c2_energy(S, psi, p0, R, k_max, method="auto", cell_factor=None):
    """Dyadic sum over ``2^-k <= R`` of ``sum_p w(p) (sum_q psi_{2^-k}(q^-1 p) w(q))^2``.

    The outer sum runs over samples in ``B(p0, R)``; with ``cell_factor`` it
    runs over one representative per box of side ``cell_factor * r`` weighted
    by the box mass. Scales below ``8h`` are dropped and listed in ``clamped``.
    """
    if psi.support is None:
        raise ValueError("psi needs a compact support")
    p0 = as_points(p0)
    k0 = math.ceil(-math.log2(R) - 1e-12)
    scales, clamped = [], []
    for k in range(k0, k_max + 1):
        r = 2.0 ** -k
        (scales if r >= 8 * S.h * (1 - 1e-12) else clamped).append(r)
    if not scales:
        raise ValueError("no scale at or above 8h")
    outer = S.index.ball_query(p0, float(R))
    grid = plane_grid(S)
    use_fft = method == "fft" or (method == "auto" and grid is not None)
    if use_fft and grid is None:
        raise ValueError("FFT evaluation needs an untouched vertical-plane sample")
    contributions = []
    for r in scales:
        if cell_factor is None:
            idx, mass = outer, S.weights[outer]
        else:
            idx, mass = center_net(S, p0, R, cell_factor * r)
        if use_fft:
            inner = _c2_inner_fft(S, psi, r, grid)[idx]
        else:
            inner = _c2_inner_direct(S, psi, r, idx)
        contributions.append(float(np.sum(mass * inner * inner)))
    return CarlesonReport.build(
        "c2", R, scales, contributions,
        clamped=[f"r={r:g} below 8h" for r in clamped],
        params={"p0": p0.tolist(), "R": float(R), "k_max": int(k_max), "psi": psi.name,
                "method": "fft" if use_fft else "direct", "cell_factor": cell_factor})


def _c2_inner_fft(S, psi, r, grid):
    offsets = _plane_offsets(grid, S.h)
    norm = koranyi_norm(offsets)
    near = norm <= r * psi.support[1]
    G = np.zeros(offsets.shape[:2])
    G[near] = r ** -3 * psi(dilate(1.0 / r, offsets[near]))
    shape = (len(grid[2]), len(grid[3]))
    return fftconvolve(S.weights.reshape(shape), G, mode="same").ravel()


def _c2_inner_direct(S, psi, r, outer):
    out = np.empty(len(outer))
    reach = r * psi.support[1]
    for n, i in enumerate(outer):
        p = S.points[i]
        q = S.index.ball_query(p, reach)
        v = group_mul(group_inv(S.points[q]), p)
        out[n] = float(np.sum(r ** -3 * psi(dilate(1.0 / r, v)) * S.weights[q]))
    return out


# witness bound

NET_CONSTANT = 32


@dataclass
class WitnessBound:
    value: float
    scale: float
    per_base: list = field(default_factory=list)  # (q1', integral, net centre)
    min_integrand: float = 0.0


def _net_point(q, g):
    """Lattice point of ``gZ x gZ x g^2 Z`` chosen in the frame translated to it."""
    m, n = round(q[0] / g), round(q[1] / g)
    x, y = m * g, n * g
    # t of p^-1 q is q_t - t_p - (x q_y - y q_x) / 2
    ell = round((q[2] - 0.5 * (x * q[1] - y * q[0])) / (g * g))
    return np.array([x, y, ell * g * g])


def witness_lower_bound(S, q1, q2, r, tau, C=NET_CONSTANT):
    """Lower bound on the bump pairing that certifies a failing symmetry witness.

    The scale is the largest ``s = 2^-k <= r``. For each base ``q1'`` in
    ``B(q1, tau s)``, the rescaled point ``q = delta_{1/s}(q1'^-1 q2)`` gets a net
    ball ``B(p_j, 4 tau / C)`` whose bar image stays ``9 tau / C`` away from the
    rescaled set, allowing ``2h`` for the gaps between samples. The
    antisymmetrised bump on that ball is integrated against the sample; the
    integrand is asserted nonnegative everywhere and the minimum over bases is
    returned.
    """
    q1, q2 = as_points(q1), as_points(q2)
    s = 2.0 ** math.floor(math.log2(r) + 1e-12)
    unit = tau / C
    g = unit / 2  # lattice covering radius is 4.25**0.25 * g < tau / C
    bases = S.index.ball_query(q1, tau * s)
    if len(bases) == 0:
        raise ValueError("no sample within tau s of q1")
    per_base = []
    lowest = float("inf")
    for b in bases:
        base = S.points[b]
        q = dilate(1.0 / s, group_mul(group_inv(base), q2))
        pj = _pick_net_ball(S, base, s, q, g, unit)
        if pj is None:
            raise ValueError("no net ball keeps its bar image away from the rescaled set")
        psi = bump_psi(BumpSpec(tuple(pj), 4 * unit))
        psi_s = scaled(psi, s)
        near = S.index.ball_query(group_mul(base, dilate(s, pj)), 4 * unit * s)
        mirror = S.index.ball_query(group_mul(base, dilate(s, bar_involution(pj))), 4 * unit * s)
        if len(mirror):
            raise AssertionError("sample meets the negative lobe of the bump")
        vals = psi_s(group_mul(group_inv(base), S.points[near])) if len(near) else np.zeros(0)
        if np.any(vals < 0):
            raise AssertionError("negative integrand")
        lowest = min(lowest, float(vals.min(initial=np.inf)))
        integral = float(np.sum(vals * S.weights[near]))
        per_base.append((base.tolist(), integral, pj.tolist()))
    value = min(v for _, v, _ in per_base)
    return WitnessBound(value, s, per_base, lowest)


def _pick_net_ball(S, base, s, q, g, unit):
    """Nearest lattice point to ``q`` within ``unit`` whose mirrored ball clears the set."""
    centre = _net_point(q, g)
    cands = [centre + np.array([i * g, j * g, k * g * g])
             for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1)]
    cands = np.array(cands)
    d = dist(cands, q)
    for i in np.argsort(d, kind="stable"):
        if d[i] >= unit:
            break
        mirrored = group_mul(base, dilate(s, bar_involution(cands[i])))
        # clearance is only known where the sample covers the whole test ball
        if not S.region_mask(mirrored, 13 * unit * s)[0]:
            continue
        # 2h covers the gap between samples, as in the symmetry test
        if nearest_dist(S, mirrored) >= 13 * unit * s + 2 * S.h:
            return cands[i]
    return None
