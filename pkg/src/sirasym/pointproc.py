"""Point-process samplers and product-density machinery.

Covers the homogeneous PPP, the type-II Matern hard-core process used as the
CSMA transmitter model, Thomas cluster processes, independent (ALOHA)
thinning, Palm-conditioned scenario construction, Ripley-K / pair-density
estimators, and the scaled product densities of the hard-core process.

All samplers are pure functions of (parameters, seed); seed substreams are
derived with ``numpy.random.SeedSequence(seed, spawn_key=...)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .discs import disc_intersection_area, lens_area_vec, triple_area_vec
from .patterns import PointPattern, Window

__all__ = [
    "MaternSpec",
    "ClusterSpec",
    "ProductDensityModel",
    "RejectionCapExceeded",
    "sample_ppp",
    "sample_matern_hardcore",
    "sample_thomas_cluster",
    "aloha_thin",
    "palm_scenario_sample",
    "matern_density",
    "matern_radius_for_density",
    "matern_scaled_product_density",
    "matern_rho2_scaled",
    "matern_rho3_scaled",
    "empirical_ripley_k",
    "pair_density_estimate",
    "thomas_ripley_k",
]

#: hard cap on the expected point count of a single PPP draw
MAX_EXPECTED_POINTS = 5e7

#: cap on Matern Palm rejection attempts
REJECTION_CAP = 10_000_000

#: Gaussian daughter displacements are truncated at this many sigmas when
#: padding parent windows; the missed daughter mass is < 1e-8.
CLUSTER_PAD_SIGMAS = 6.0


class RejectionCapExceeded(RuntimeError):
    """Palm rejection loop exceeded its attempt budget (pathological parameters)."""


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for (seed, key...); the documented splitting rule."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(key)))


# ---------------------------------------------------------------------------
# specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaternSpec:
    """Type-II Matern hard-core parameters (exclusion radius, parent density)."""

    exclusion_radius: float
    parent_density: float = 1.0

    def __post_init__(self):
        if self.exclusion_radius <= 0:
            raise ValueError("exclusion radius must be positive")
        if self.parent_density <= 0:
            raise ValueError("parent density must be positive")

    @property
    def mean_neighborhood(self) -> float:
        return self.parent_density * math.pi * self.exclusion_radius**2

    @property
    def density(self) -> float:
        nbar = self.mean_neighborhood
        return self.parent_density * float(-np.expm1(-nbar)) / nbar


@dataclass(frozen=True)
class ClusterSpec:
    """Thomas cluster-process parameters (Gaussian daughter displacements)."""

    parent_density: float
    mean_cluster_size: float
    spread: float

    def __post_init__(self):
        if self.parent_density <= 0 or self.spread <= 0:
            raise ValueError("parent density and spread must be positive")
        if self.mean_cluster_size < 0:
            raise ValueError("mean cluster size must be non-negative")

    @property
    def density(self) -> float:
        return self.parent_density * self.mean_cluster_size


# ---------------------------------------------------------------------------
# densities of the Matern process
# ---------------------------------------------------------------------------


def matern_density(a: float, parent_density: float = 1.0) -> float:
    """Density (1 - e^{-N})/N of the Matern hard-core process, N = parent * pi * a^2."""
    if a <= 0:
        raise ValueError("exclusion radius must be positive")
    nbar = parent_density * math.pi * a * a
    return parent_density * float(-np.expm1(-nbar)) / nbar


def matern_radius_for_density(eta: float, parent_density: float = 1.0) -> float:
    """Exclusion radius whose Matern density equals ``eta`` (monotone bisection)."""
    if not 0.0 < eta < parent_density:
        raise ValueError("eta must lie in (0, parent_density)")
    lo, hi = 1e-12, 1.0
    while matern_density(hi, parent_density) > eta:
        hi *= 2.0
        if hi > 1e12:
            raise ValueError("eta too small to bracket")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if matern_density(mid, parent_density) > eta:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, hi):
            break
    mid = 0.5 * (lo + hi)
    return mid


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------


def _poisson_count(density: float, area: float, rng: np.random.Generator) -> int:
    mean = density * area
    if mean > MAX_EXPECTED_POINTS:
        raise ValueError(
            f"expected point count {mean:.3g} exceeds cap {MAX_EXPECTED_POINTS:.0e}"
        )
    return int(rng.poisson(mean))


def sample_ppp(density: float, window: Window, seed: int) -> PointPattern:
    """Homogeneous Poisson point process on ``window``."""
    if density < 0:
        raise ValueError("density must be non-negative")
    rng = substream(seed, 0)
    n = _poisson_count(density, window.area, rng)
    pts = window.sample_uniform(n, rng)
    return PointPattern(pts, window, density, "PPP", seed=seed)


def _matern_retain(points: np.ndarray, marks: np.ndarray, a: float) -> np.ndarray:
    """Boolean retention mask of type-II Matern thinning (mark strictly smallest
    within the closed ball of radius ``a``; float ties broken by index)."""
    n = len(points)
    if n == 0:
        return np.zeros(0, bool)
    order = np.lexsort((np.arange(n), marks))
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    tree = cKDTree(points)
    pairs = tree.query_pairs(a, output_type="ndarray")
    nbr_best = np.full(n, n, dtype=np.int64)
    if len(pairs):
        np.minimum.at(nbr_best, pairs[:, 0], rank[pairs[:, 1]])
        np.minimum.at(nbr_best, pairs[:, 1], rank[pairs[:, 0]])
    return rank < nbr_best


def sample_matern_hardcore(spec: MaternSpec, window: Window, seed: int) -> PointPattern:
    """Type-II Matern hard-core sample on ``window``.

    Parents are drawn on the window dilated by the exclusion radius so that
    retention is exact (no edge bias) inside the requested window.
    """
    a = spec.exclusion_radius
    rng = substream(seed, 0)
    padded = window.dilated(a)
    n = _poisson_count(spec.parent_density, padded.area, rng)
    parents = padded.sample_uniform(n, rng)
    marks = rng.random(n)
    keep = _matern_retain(parents, marks, a)
    inside = window.contains(parents)
    sel = keep & inside
    return PointPattern(
        parents[sel],
        window,
        spec.density,
        "MaternII",
        marks=marks[sel],
        seed=seed,
    )


def _thomas_points(
    spec: ClusterSpec, window: Window, rng: np.random.Generator
) -> np.ndarray:
    """Daughters of a Thomas process falling inside ``window`` (parents padded)."""
    pad = CLUSTER_PAD_SIGMAS * spec.spread
    padded = window.dilated(pad)
    n_par = _poisson_count(spec.parent_density, padded.area, rng)
    parents = padded.sample_uniform(n_par, rng)
    sizes = rng.poisson(spec.mean_cluster_size, n_par)
    total = int(sizes.sum())
    if total == 0:
        return np.zeros((0, 2))
    centers = np.repeat(parents, sizes, axis=0)
    pts = centers + rng.normal(0.0, spec.spread, size=(total, 2))
    return pts[window.contains(pts)]


def sample_thomas_cluster(spec: ClusterSpec, window: Window, seed: int) -> PointPattern:
    """Thomas cluster process: Poisson parents, Poisson(c) Gaussian daughters."""
    rng = substream(seed, 0)
    pts = _thomas_points(spec, window, rng)
    return PointPattern(pts, window, spec.density, "Thomas", seed=seed)


def aloha_thin(pattern: PointPattern, p: float, seed: int) -> PointPattern:
    """Independent thinning with retention probability ``p``.

    Driven by one uniform per point from ``seed``, so kept sets are nested
    across p for a fixed seed (kept(p2) is a subset of kept(p1) when p1 >= p2).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("thinning probability must lie in [0, 1]")
    rng = substream(seed, 1)
    u = rng.random(len(pattern))
    keep = u < p
    return PointPattern(
        pattern.points[keep],
        pattern.window,
        pattern.nominal_density * p,
        "AlohaThinned",
        marks=None if pattern.marks is None else pattern.marks[keep],
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Palm-conditioned scenarios
# ---------------------------------------------------------------------------


def _sample_palm_origin_mark(
    rng: np.random.Generator, a: float, parent_density: float, cap: int = REJECTION_CAP
) -> tuple[float, int]:
    """Rejection-sample the origin mark of a retained Matern point.

    Each attempt draws the origin mark m0, the Poisson number of competing
    parents in B(o, a), and the minimum of their marks (sampled directly as
    the minimum of n uniforms); the attempt is accepted iff every competitor
    mark exceeds m0. Returns (m0, attempts used).
    """
    nbar = parent_density * math.pi * a * a
    for attempt in range(1, cap + 1):
        m0 = rng.random()
        n = rng.poisson(nbar)
        if n == 0 or (1.0 - (1.0 - rng.random()) ** (1.0 / n)) > m0:
            return m0, attempt
    raise RejectionCapExceeded(
        f"Matern Palm rejection exceeded {cap} attempts (a={a}, density eta="
        f"{matern_density(a, parent_density):.3g})"
    )


def _uniform_in_disc(n: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi)])


def _palm_matern(
    a: float, parent_density: float, window: Window, rng: np.random.Generator
) -> tuple[np.ndarray, int]:
    """Interferer set of a Matern CSMA process under its reduced Palm measure.

    Returns (points inside window excluding the origin point, attempts used).
    """
    m0, attempts = _sample_palm_origin_mark(rng, a, parent_density)
    n_close = rng.poisson(parent_density * math.pi * a * a)
    close_pts = _uniform_in_disc(n_close, a, rng)
    close_marks = m0 + (1.0 - m0) * rng.random(n_close)
    padded = window.dilated(a)
    n_out = _poisson_count(parent_density, padded.area, rng)
    out_pts = padded.sample_uniform(n_out, rng)
    far = (out_pts**2).sum(axis=1) > a * a
    out_pts = out_pts[far]
    out_marks = rng.random(len(out_pts))

    pts = np.vstack([[[0.0, 0.0]], close_pts, out_pts])
    marks = np.concatenate([[m0], close_marks, out_marks])
    keep = _matern_retain(pts, marks, a)
    if not keep[0]:  # origin retention is guaranteed by the rejection step
        raise AssertionError("origin point lost after conditioning")
    keep[0] = False
    sel = keep & window.contains(pts)
    return pts[sel], attempts


def _palm_thomas(
    spec: ClusterSpec, window: Window, rng: np.random.Generator
) -> np.ndarray:
    """Reduced Palm interferers of a Thomas process: the typical point's
    sibling cluster plus an independent copy of the process."""
    center = rng.normal(0.0, spec.spread, size=2) * -1.0
    n_sib = rng.poisson(spec.mean_cluster_size)
    siblings = center + rng.normal(0.0, spec.spread, size=(n_sib, 2))
    siblings = siblings[window.contains(siblings)]
    rest = _thomas_points(spec, window, rng)
    return np.vstack([siblings, rest]) if len(siblings) else rest


def _palm_cluster_mac(
    spec: ClusterSpec, q: float, window: Window, rng: np.random.Generator
) -> np.ndarray:
    """Palm interferers when whole clusters transmit with probability ``q``:
    the typical point's cluster always transmits, other clusters are kept or
    dropped as units."""
    center = rng.normal(0.0, spec.spread, size=2) * -1.0
    n_sib = rng.poisson(spec.mean_cluster_size)
    own = center + rng.normal(0.0, spec.spread, size=(n_sib, 2))
    own = own[window.contains(own)]
    thinned = ClusterSpec(spec.parent_density * q, spec.mean_cluster_size, spec.spread)
    rest = _thomas_points(thinned, window, rng)
    return np.vstack([own, rest]) if len(own) else rest


def palm_scenario_sample(
    process: str,
    params: dict,
    window: Window,
    seed: int,
    rng: Optional[np.random.Generator] = None,
) -> PointPattern:
    """Interferer pattern under the reduced Palm measure of the transmitter set.

    ``process`` is one of PPP_ALOHA (params: p), MATERN_CSMA (params: a,
    optional parent_density), THOMAS_ALOHA (params: spec, p) or CLUSTER_MAC
    (params: spec, q). The conditioning point at the origin is excluded from
    the output.
    """
    rng = substream(seed, 2) if rng is None else rng
    if process == "PPP_ALOHA":
        p = float(params["p"])
        if not 0.0 <= p <= 1.0:
            raise ValueError("ALOHA probability must lie in [0, 1]")
        n = _poisson_count(p, window.area, rng)
        pts = window.sample_uniform(n, rng)
        density = p
    elif process == "MATERN_CSMA":
        a = float(params["a"])
        lam = float(params.get("parent_density", 1.0))
        pts, _ = _palm_matern(a, lam, window, rng)
        density = matern_density(a, lam)
    elif process == "THOMAS_ALOHA":
        spec: ClusterSpec = params["spec"]
        p = float(params["p"])
        pts = _palm_thomas(spec, window, rng)
        if len(pts):
            pts = pts[rng.random(len(pts)) < p]
        density = spec.density * p
    elif process == "CLUSTER_MAC":
        spec = params["spec"]
        q = float(params["q"])
        pts = _palm_cluster_mac(spec, q, window, rng)
        density = spec.density * q
    else:
        raise ValueError(f"unknown palm scenario process {process!r}")
    return PointPattern(pts, window, density, "PalmScenario", seed=seed)


# ---------------------------------------------------------------------------
# scaled product densities of the Matern process
# ---------------------------------------------------------------------------


def matern_rho2_scaled(s) -> np.ndarray:
    """Scaled second-order product density of the hard-core process at
    distance ``s`` (in units of the exclusion radius); 1/pi^2 for s >= 2."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    m = s > 1.0
    if np.any(m):
        out[m] = 2.0 / (np.pi * (2.0 * np.pi - lens_area_vec(s[m])))
    return out


def matern_rho3_scaled(s, t, psi) -> np.ndarray:
    """Scaled third-order product density at scaled positions
    x1 = (s, 0), x2 = t(cos psi, sin psi), third point at the origin."""
    s = np.asarray(s, float)
    t = np.asarray(t, float)
    psi = np.asarray(psi, float)
    shape = np.broadcast_shapes(s.shape, t.shape, psi.shape)
    s, t, psi = (np.broadcast_to(a, shape) for a in (s, t, psi))
    d12 = np.sqrt(np.maximum(s * s + t * t - 2.0 * s * t * np.cos(psi), 0.0))
    ok = (s > 1.0) & (t > 1.0) & (d12 > 1.0)
    out = np.zeros(shape)
    if not np.any(ok):
        return out
    ss, tt, pp, dd = s[ok], t[ok], psi[ok], d12[ok]
    l12 = lens_area_vec(dd)
    l1o = lens_area_vec(ss)
    l2o = lens_area_vec(tt)
    v3 = triple_area_vec(ss, np.zeros_like(ss), tt * np.cos(pp), tt * np.sin(pp))
    u3 = 3.0 * np.pi - l12 - l1o - l2o + v3
    term = (
        1.0 / (2.0 * np.pi - l12)
        + 1.0 / (2.0 * np.pi - l1o)
        + 1.0 / (2.0 * np.pi - l2o)
    )
    out[ok] = 2.0 / (np.pi * u3) * term
    return out


def _subset_areas(pts: np.ndarray) -> dict[frozenset, float]:
    """Intersection areas of unit discs centered at ``pts`` for every subset."""
    k = len(pts)
    areas: dict[frozenset, float] = {}
    for size in range(1, k + 1):
        for combo in itertools.combinations(range(k), size):
            areas[frozenset(combo)] = disc_intersection_area(pts[list(combo)], 1.0)
    return areas


def matern_scaled_product_density(k: int, points: Sequence) -> float:
    """Scaled k-th order product density of the hard-core process.

    ``points`` holds the k-1 scaled positions; the k-th point sits at the
    origin. Zero inside the hard core; otherwise the inclusion-exclusion
    mark integral evaluated exactly as a sum over the k! mark orderings,
    each ordering contributing the product over suffixes of the reciprocal
    union areas. Supported for k = 2..4 (the 4-disc intersection uses the
    Monte-Carlo fallback).
    """
    if not 2 <= k <= 4:
        raise ValueError("supported orders are k = 2..4")
    pts = np.asarray(points, float).reshape(-1, 2)
    if pts.shape[0] != k - 1:
        raise ValueError(f"expected {k - 1} points for order {k}")
    all_pts = np.vstack([pts, [[0.0, 0.0]]])
    dists = np.linalg.norm(all_pts[:, None, :] - all_pts[None, :, :], axis=-1)
    iu = np.triu_indices(k, 1)
    if np.any(dists[iu] <= 1.0):
        return 0.0
    areas = _subset_areas(all_pts)

    def union_area(subset: tuple[int, ...]) -> float:
        total = 0.0
        for size in range(1, len(subset) + 1):
            sgn = 1.0 if size % 2 == 1 else -1.0
            for combo in itertools.combinations(subset, size):
                total += sgn * areas[frozenset(combo)]
        return total

    value = 0.0
    for perm in itertools.permutations(range(k)):
        prod = 1.0
        for i in range(k):
            prod /= union_area(perm[i:])
        value += prod
    return value


def matern_rho2_exact(d, a: float, parent_density: float = 1.0) -> np.ndarray:
    """Exact (finite-a) second-order product density of the Matern process."""
    d = np.asarray(d, float)
    nbar = parent_density * math.pi * a * a
    v = parent_density * lens_area_vec(d, a)
    out = np.zeros_like(d)
    m = d > a
    if np.any(m):
        g = 2.0 * nbar - v[m]
        out[m] = (
            2.0
            * parent_density**2
            * (g * (-np.expm1(-nbar)) - nbar * (-np.expm1(-g)))
            / (nbar * g * (g - nbar))
        )
    return out


# ---------------------------------------------------------------------------
# empirical second-order statistics
# ---------------------------------------------------------------------------


def empirical_ripley_k(pattern: PointPattern, r_grid: Sequence[float]) -> np.ndarray:
    """Border-corrected Ripley K estimate on ``r_grid``.

    Uses minus sampling: for each r only points at least r from the window
    boundary contribute; entries are NaN where no interior points remain.
    """
    if len(pattern) == 0:
        raise ValueError("empty pattern")
    r_grid = np.asarray(r_grid, float)
    lam = pattern.empirical_density
    tree = cKDTree(pattern.points)
    bdist = pattern.window.boundary_distance(pattern.points)
    out = np.full(r_grid.shape, np.nan)
    for i, r in enumerate(r_grid):
        valid = bdist >= r
        nv = int(valid.sum())
        if nv == 0:
            continue
        counts = tree.query_ball_point(
            pattern.points[valid], r, return_length=True
        )
        out[i] = (counts.sum() - nv) / (nv * lam)  # subtract self-counts
    return out


def pair_density_estimate(
    patterns: Sequence[PointPattern], r_edges: Sequence[float]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Binned estimate of the second-order product density rho2(r).

    Counts ordered pairs with the first point in the window eroded by the
    outer bin edge (minus sampling). Returns (bin centers, mean over
    patterns, standard error over patterns).
    """
    r_edges = np.asarray(r_edges, float)
    rmax = r_edges[-1]
    centers = 0.5 * (r_edges[1:] + r_edges[:-1])
    ann_area = np.pi * (r_edges[1:] ** 2 - r_edges[:-1] ** 2)
    per = []
    for pat in patterns:
        bdist = pat.window.boundary_distance(pat.points)
        inner = bdist >= rmax
        n_in = int(inner.sum())
        if n_in == 0:
            continue
        # eroded window area
        if pat.window.shape == "disc":
            area_in = math.pi * (pat.window.radius - rmax) ** 2
        else:
            area_in = (2.0 * (pat.window.half_side - rmax)) ** 2
        tree = cKDTree(pat.points)
        pairs = tree.query_ball_point(pat.points[inner], rmax)
        src = np.repeat(np.arange(n_in), [len(p) for p in pairs])
        tgt = np.concatenate(pairs) if len(pairs) else np.zeros(0, int)
        d = np.linalg.norm(pat.points[inner][src] - pat.points[tgt], axis=1)
        d = d[d > 0]
        hist, _ = np.histogram(d, bins=r_edges)
        per.append(hist / (area_in * ann_area))
    if not per:
        raise ValueError("no pattern had interior points at this range")
    arr = np.asarray(per)
    mean = arr.mean(axis=0)
    se = arr.std(axis=0, ddof=1) / math.sqrt(len(arr)) if len(arr) > 1 else np.full_like(mean, np.inf)
    return centers, mean, se


def thomas_ripley_k(spec: ClusterSpec, r) -> np.ndarray:
    """Closed-form Ripley K of the Thomas process."""
    r = np.asarray(r, float)
    return np.pi * r * r + (-np.expm1(-(r * r) / (4.0 * spec.spread**2))) / spec.parent_density


# ---------------------------------------------------------------------------
# second-order product-density models (inputs to the ALOHA gamma integral)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProductDensityModel:
    """Isotropic second-order product density rho2(x) = rho2(||x||).

    Kinds: PPPConstant (rho2 = density^2), ThomasClosedForm, MaternScaled
    (large-a scaled form of the hard-core process), Empirical (interpolated
    from binned estimates).
    """

    kind: str
    density: float = 1.0
    cluster: Optional[ClusterSpec] = None
    matern_a: float = 0.0
    r_grid: Optional[tuple] = None
    rho_values: Optional[tuple] = None

    @staticmethod
    def ppp(density: float = 1.0) -> "ProductDensityModel":
        return ProductDensityModel("PPPConstant", density=density)

    @staticmethod
    def thomas(spec: ClusterSpec) -> "ProductDensityModel":
        return ProductDensityModel("ThomasClosedForm", density=spec.density, cluster=spec)

    @staticmethod
    def matern(a: float) -> "ProductDensityModel":
        return ProductDensityModel("MaternScaled", density=matern_density(a), matern_a=a)

    @staticmethod
    def empirical(r_grid, rho_values, density: float) -> "ProductDensityModel":
        return ProductDensityModel(
            "Empirical",
            density=density,
            r_grid=tuple(float(x) for x in r_grid),
            rho_values=tuple(float(x) for x in rho_values),
        )

    def rho2(self, r) -> np.ndarray:
        r = np.asarray(r, float)
        if self.kind == "PPPConstant":
            return np.full_like(r, self.density**2)
        if self.kind == "ThomasClosedForm":
            c = self.cluster
            lam = c.density
            return lam * lam * (
                1.0
                + np.exp(-(r * r) / (4.0 * c.spread**2))
                / (4.0 * np.pi * c.spread**2 * c.parent_density)
            )
        if self.kind == "MaternScaled":
            a = self.matern_a
            return matern_rho2_scaled(r / a) / a**4
        if self.kind == "Empirical":
            return np.interp(r, np.asarray(self.r_grid), np.asarray(self.rho_values))
        raise ValueError(f"unknown product density kind {self.kind!r}")
