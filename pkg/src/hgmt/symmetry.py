"""Quantitative local symmetry of sampled sets and its Carleson energy."""

from dataclasses import dataclass, field
import math

import numpy as np

from .core import as_points, dist, sigma
from .flatness import beta, carleson_energy

PROBE_TAUS = tuple(2.0 ** -k for k in range(1, 7))


@dataclass
class SymmetryVerdict:
    symmetric: bool
    witness_pair: tuple = None  # (q1, q2) coordinates
    checked_pairs: int = 0
    margin: float = float("-inf")
    witness_indices: tuple = None
    skipped: int = 0  # pairs whose image leaves the generated region

    def to_json(self):
        return {
            "symmetric": self.symmetric,
            "witness_pair": None if self.witness_pair is None
            else [np.asarray(q).tolist() for q in self.witness_pair],
            "checked_pairs": self.checked_pairs,
            "margin": self.margin,
            "skipped": self.skipped,
        }


def _pairs(n, pair_cap, seed):
    """All ordered pairs when few, else a seeded uniform sample; in checking order."""
    if n * n <= pair_cap:
        i, j = np.divmod(np.arange(n * n), n)
        return i, j
    rng = np.random.default_rng(seed)
    return rng.integers(n, size=pair_cap), rng.integers(n, size=pair_cap)


def tau_symmetric(S, p, r, tau, pair_cap=20_000, seed=0, margin=None, chunk=4096):
    """Check the tau-symmetry condition in ``B(p, r)`` on sampled pairs.

    A pair ``(q1, q2)`` passes when some sample ``q1'`` with ``d(q1', q1) < tau r``
    sends ``q2`` within ``tau r + margin`` of the sample; ``margin`` defaults to
    ``2h``. The reported ``margin`` of the verdict is the largest excess of the
    best distance found over ``tau r``; for pairs that pass at ``q1' = q1`` that
    best distance is the one at ``q1``.

    Pairs whose image ``Sigma_q1(q2)`` has its ``tau r + margin`` ball outside
    the generated region cannot be judged from the sample and are skipped.
    """
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    if not r > 0 or pair_cap < 1:
        raise ValueError("need r > 0 and pair_cap >= 1")
    p = as_points(p)
    slack = 2 * S.h if margin is None else float(margin)
    idx = S.index.ball_query(p, float(r))
    if len(idx) == 0:
        raise ValueError("ball holds no samples")
    pts = S.points[idx]
    ii, jj = _pairs(len(idx), pair_cap, seed)
    threshold = tau * r + slack
    worst = float("-inf")
    checked = skipped = 0
    for start in range(0, len(ii), chunk):
        i, j = ii[start:start + chunk], jj[start:start + chunk]
        img = sigma(pts[i], pts[j])
        inside = S.region_mask(img, threshold)
        skipped += int((~inside).sum())
        i, j, img = i[inside], j[inside], img[inside]
        if len(i) == 0:
            continue
        d, _ = S.index.nearest(img)
        for k in np.nonzero(d > threshold)[0]:
            best = _search_q1_prime(S, pts[i[k]], pts[j[k]], tau * r)
            if best > threshold:
                checked += int(k) + 1
                margin = max(worst, float(d[:k].max(initial=-np.inf)) - tau * r, best - tau * r)
                return SymmetryVerdict(False, (pts[i[k]], pts[j[k]]), checked, margin,
                                       (int(idx[i[k]]), int(idx[j[k]])), skipped)
            d[k] = best
        worst = max(worst, float(d.max()) - tau * r)
        checked += len(i)
    return SymmetryVerdict(True, None, checked, worst, None, skipped)


def _search_q1_prime(S, q1, q2, radius):
    """Smallest distance from the sample over images of ``q2`` with base point near ``q1``."""
    cand = S.index.ball_query(q1, radius)
    if len(cand) == 0:
        return float("inf")
    d, _ = S.index.nearest(sigma(S.points[cand], q2))
    return float(d.min())


def lsc_energy(S, p0, R, tau, r_min=None, pair_cap=2000, seed=0, n_jobs=None, **kw):
    """Carleson sum of the mass of centres whose ball fails tau-symmetry."""
    def is_bad(p, r):
        return not tau_symmetric(S, p, r, tau, pair_cap=pair_cap, seed=seed).symmetric

    return carleson_energy(S, "lsc", is_bad, p0, R, r_min, n_jobs=n_jobs,
                           params={"tau": float(tau), "pair_cap": pair_cap, "seed": seed}, **kw)


@dataclass
class ProbeResult:
    tau: float  # None when no grid value fails
    beta: float
    verdicts: list = field(default_factory=list)  # (tau, verdict) in scan order


def beta_implies_nonsymmetric_probe(S, p, r, eps, tau_grid=PROBE_TAUS, pair_cap=20_000, seed=0):
    """Largest grid ``tau`` for which ``B(p, r / tau)`` fails ``tau^2``-symmetry.

    Requires ``beta(p, r) >= eps``. The grid is scanned from the largest value down.
    """
    b = beta(S, p, r).value
    if b < eps:
        raise ValueError(f"beta = {b:.4g} is below eps = {eps}")
    verdicts = []
    for tau in sorted(tau_grid, reverse=True):
        v = tau_symmetric(S, p, r / tau, tau * tau, pair_cap=pair_cap, seed=seed)
        verdicts.append((tau, v))
        if not v.symmetric:
            return ProbeResult(tau, b, verdicts)
    return ProbeResult(None, b, verdicts)


def nonlip_ratio(x, y):
    """Planar versus group distance of ``p = (x, 0, 0)`` and ``q = p * (0, y, 0)``.

    ``q`` sits on the horizontal line through ``p``, so ``d(p, q) = |y|``, while
    the projections seen as zero-height points are about ``2 sqrt|xy|`` apart.
    """
    if x == 0 or y == 0 or not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("x and y must be finite and nonzero")
    p = np.array([x, 0.0, 0.0])
    q = np.array([x, y, x * y / 2.0])
    planar = float(dist(np.array([x, 0.0, 0.0]), np.array([x, y, 0.0])))
    heis = float(dist(p, q))
    return planar, heis, planar / heis
