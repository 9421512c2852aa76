"""Palm-conditioned Monte-Carlo outage estimation and interference moments.

The estimator of the link success probability draws the interferer set under
the reduced Palm measure of the transmitter process, draws i.i.d. interferer
gains, and averages the source-destination CCDF evaluated at the normalized
interference (conditional Monte Carlo over the link gain, which strictly
reduces variance relative to sampling it).

Replication chunks use independent seed substreams keyed by the chunk index,
so results are byte-reproducible for a fixed (scenario, seed) regardless of
worker count.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from .channel import LinkConfig
from .integrals import matern_pair_integral, matern_triple_integral
from .patterns import Window
from .pointproc import (
    ClusterSpec,
    CLUSTER_PAD_SIGMAS,
    RejectionCapExceeded,
    _matern_retain,
    matern_density,
    substream,
)

__all__ = [
    "Scenario",
    "OutageEstimate",
    "estimate_ps",
    "truncation_radius",
    "truncation_bias_bound",
    "interference_moment_mc",
    "interference_moment_analytic",
    "aloha_coupled_curves",
    "matern_coupled_curves",
]

PROCESSES = ("PPP_ALOHA", "MATERN_CSMA", "THOMAS_ALOHA", "CLUSTER_MAC")

#: sup of the Matern pair correlation (attained just outside the hard core);
#: 2*pi/(2*pi - V1(1)) ~ 1.243, rounded up for use as a tail bound
MATERN_PCF_SUP = 1.3

#: default replication budget
DEFAULT_SAMPLES = 100_000

_TARGET_CHUNK_POINTS = 400_000


@dataclass(frozen=True)
class Scenario:
    """One outage experiment: process + parameters, link, truncation, budget."""

    process: str
    params: dict
    link: LinkConfig
    truncation_radius: float
    samples: int = DEFAULT_SAMPLES
    seed: int = 0

    def __post_init__(self):
        if self.process not in PROCESSES:
            raise ValueError(f"unknown process {self.process!r}")
        if self.truncation_radius < 10.0 * self.link.R:
            raise ValueError("truncation radius must be at least 10 R")
        if self.samples < 1:
            raise ValueError("at least one replication is required")
        _ = self.eta  # validates params

    @property
    def eta(self) -> float:
        """Density of the transmitter process."""
        p = self.params
        if self.process == "PPP_ALOHA":
            return float(p["p"])
        if self.process == "MATERN_CSMA":
            return matern_density(float(p["a"]), float(p.get("parent_density", 1.0)))
        if self.process == "THOMAS_ALOHA":
            return p["spec"].density * float(p["p"])
        return p["spec"].density * float(p["q"])

    @property
    def window(self) -> Window:
        return Window("disc", (self.link.R, 0.0), radius=self.truncation_radius)


@dataclass
class OutageEstimate:
    p_success: float
    std_error: float
    samples_used: int
    truncation_bias_bound: float
    eta: float = 0.0
    singular_hits: int = 0
    palm_attempts: int = 0

    @property
    def ci95(self) -> tuple[float, float]:
        half = 1.96 * self.std_error
        return (max(0.0, self.p_success - half), min(1.0, self.p_success + half))


# ---------------------------------------------------------------------------
# batched Palm sampling of interferer positions
# ---------------------------------------------------------------------------


def _expected_points_per_rep(sc: Scenario) -> float:
    area = math.pi * sc.truncation_radius**2
    if sc.process == "MATERN_CSMA":
        # parent field on the padded window dominates the cost
        a = float(sc.params["a"])
        lam = float(sc.params.get("parent_density", 1.0))
        return lam * math.pi * (sc.truncation_radius + a) ** 2
    return max(sc.eta * area, 1.0)


def _chunk_layout(sc: Scenario) -> tuple[int, int]:
    per = _expected_points_per_rep(sc)
    chunk = int(min(16384, max(32, _TARGET_CHUNK_POINTS / per)))
    n_chunks = (sc.samples + chunk - 1) // chunk
    return chunk, n_chunks


def _disc_points(n: int, radius: float, center, rng) -> np.ndarray:
    r = radius * np.sqrt(rng.random(n))
    phi = rng.uniform(0.0, 2.0 * math.pi, n)
    return np.column_stack(
        [center[0] + r * np.cos(phi), center[1] + r * np.sin(phi)]
    )


def _chunk_points(sc: Scenario, chunk_idx: int, n_reps: int):
    """Palm interferer positions for ``n_reps`` replications.

    Returns (points in origin coordinates, replication ids, attempts) where
    attempts counts Matern rejection attempts (0 for other processes).
    """
    rng = substream(sc.seed, 3, chunk_idx)
    R = sc.link.R
    rmax = sc.truncation_radius
    center = (R, 0.0)
    area = math.pi * rmax * rmax

    if sc.process == "PPP_ALOHA":
        p = float(sc.params["p"])
        counts = rng.poisson(p * area, n_reps)
        pts = _disc_points(int(counts.sum()), rmax, center, rng)
        rep = np.repeat(np.arange(n_reps), counts)
        return pts, rep, 0

    if sc.process == "MATERN_CSMA":
        return _chunk_points_matern(sc, rng, n_reps)

    spec: ClusterSpec = sc.params["spec"]
    if sc.process == "THOMAS_ALOHA":
        keep_prob, cluster_thin = float(sc.params["p"]), 1.0
    else:  # CLUSTER_MAC: whole clusters transmit
        keep_prob, cluster_thin = 1.0, float(sc.params["q"])

    # typical point's sibling cluster (center at -D, D ~ N(0, sigma^2 I))
    centers = -rng.normal(0.0, spec.spread, size=(n_reps, 2))
    sib_counts = rng.poisson(spec.mean_cluster_size, n_reps)
    sib_rep = np.repeat(np.arange(n_reps), sib_counts)
    siblings = centers[sib_rep] + rng.normal(0.0, spec.spread, size=(len(sib_rep), 2))

    # independent rest of the process (cluster-level thinning for CLUSTER_MAC)
    pad = CLUSTER_PAD_SIGMAS * spec.spread
    parent_rate = spec.parent_density * cluster_thin * math.pi * (rmax + pad) ** 2
    par_counts = rng.poisson(parent_rate, n_reps)
    par_rep = np.repeat(np.arange(n_reps), par_counts)
    parents = _disc_points(int(par_counts.sum()), rmax + pad, center, rng)
    d_counts = rng.poisson(spec.mean_cluster_size, len(parents))
    d_rep = par_rep.repeat(d_counts)
    daughters = parents.repeat(d_counts, axis=0) + rng.normal(
        0.0, spec.spread, size=(int(d_counts.sum()), 2)
    )

    pts = np.vstack([siblings, daughters])
    rep = np.concatenate([sib_rep, d_rep])
    if keep_prob < 1.0:
        keep = rng.random(len(pts)) < keep_prob
        pts, rep = pts[keep], rep[keep]
    inside = (pts[:, 0] - R) ** 2 + pts[:, 1] ** 2 <= rmax * rmax
    return pts[inside], rep[inside], 0


def _chunk_points_matern(sc: Scenario, rng, n_reps: int):
    a = float(sc.params["a"])
    lam = float(sc.params.get("parent_density", 1.0))
    R, rmax = sc.link.R, sc.truncation_radius
    nbar = lam * math.pi * a * a

    # rejection for the origin mark: accept when every competing parent in
    # B(o, a) carries a larger mark; only the competitor count and minimum
    # mark are needed for the test
    m0 = np.empty(n_reps)
    n_close = np.empty(n_reps, dtype=np.int64)
    pending = np.arange(n_reps)
    attempts = 0
    while pending.size:
        k = pending.size
        attempts += k
        if attempts > 10_000_000:
            raise RejectionCapExceeded(
                f"Matern Palm rejection exceeded 1e7 attempts (a={a})"
            )
        m_try = rng.random(k)
        c_try = rng.poisson(nbar, k)
        u = rng.random(k)
        with np.errstate(divide="ignore"):
            min_mark = 1.0 - (1.0 - u) ** (1.0 / np.maximum(c_try, 1))
        ok = (c_try == 0) | (min_mark > m_try)
        sel = pending[ok]
        m0[sel] = m_try[ok]
        n_close[sel] = c_try[ok]
        pending = pending[~ok]

    rep_off = np.arange(n_reps) * (2.0 * (rmax + a) + 3.0 * a)

    # competitors in B(o, a), marks conditionally uniform on (m0, 1]
    close_rep = np.repeat(np.arange(n_reps), n_close)
    close = _disc_points(int(n_close.sum()), a, (0.0, 0.0), rng)
    close_marks = m0[close_rep] + (1.0 - m0[close_rep]) * rng.random(len(close))

    # unconditioned parents on the padded window outside B(o, a)
    out_counts = rng.poisson(lam * math.pi * (rmax + a) ** 2, n_reps)
    out_rep = np.repeat(np.arange(n_reps), out_counts)
    out = _disc_points(int(out_counts.sum()), rmax + a, (R, 0.0), rng)
    out_marks = rng.random(len(out))
    far = (out**2).sum(axis=1) > a * a
    out, out_rep, out_marks = out[far], out_rep[far], out_marks[far]

    origin_idx = np.arange(n_reps)
    pts = np.vstack([np.zeros((n_reps, 2)), close, out])
    rep = np.concatenate([origin_idx, close_rep, out_rep])
    marks = np.concatenate([m0, close_marks, out_marks])

    shifted = pts.copy()
    shifted[:, 0] += rep_off[rep]
    keep = _matern_retain(shifted, marks, a)
    if not keep[:n_reps].all():
        raise AssertionError("conditioned origin point was not retained")
    keep[:n_reps] = False
    inside = (pts[:, 0] - R) ** 2 + pts[:, 1] ** 2 <= rmax * rmax
    sel = keep & inside
    return pts[sel], rep[sel], attempts


def _chunk_interference(sc: Scenario, chunk_idx: int, n_reps: int):
    """Normalized interference sum per replication: I = sum h ell(z - r(o))."""
    pts, rep, attempts = _chunk_points(sc, chunk_idx, n_reps)
    rng = substream(sc.seed, 4, chunk_idx)
    d = np.hypot(pts[:, 0] - sc.link.R, pts[:, 1])
    singular = 0
    if sc.link.pathloss.kind == "unbounded":
        hit = d == 0.0
        singular = int(hit.sum())
        if singular:
            warnings.warn("interferer coincided with the receiver; perturbed by 1e-12")
            d[hit] = 1e-12
    h = sc.link.interferer_fading.sample(len(pts), rng)
    contrib = h * sc.link.pathloss.ell(d)
    I = np.bincount(rep, weights=contrib, minlength=n_reps)
    return I, attempts, singular


def _ps_chunk(args) -> tuple[float, float, int, int, int]:
    sc, chunk_idx, n_reps = args
    I, attempts, singular = _chunk_interference(sc, chunk_idx, n_reps)
    F = sc.link.sd_fading.ccdf(sc.link.theta * I / sc.link.ell_R + sc.link.noise_N)
    return float(F.sum()), float((F * F).sum()), n_reps, attempts, singular


def _map_chunks(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=1))


def estimate_ps(scenario: Scenario, workers: int = 1) -> OutageEstimate:
    """Monte-Carlo estimate of the success probability E^!o F_sd(theta I / l(R) + N)."""
    chunk, n_chunks = _chunk_layout(scenario)
    tasks = []
    left = scenario.samples
    for c in range(n_chunks):
        n = min(chunk, left)
        tasks.append((scenario, c, n))
        left -= n
    parts = _map_chunks(_ps_chunk, tasks, workers)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    n = sum(p[2] for p in parts)
    attempts = sum(p[3] for p in parts)
    singular = sum(p[4] for p in parts)
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
    se = math.sqrt(var / n)
    return OutageEstimate(
        p_success=min(max(mean, 0.0), 1.0),
        std_error=se,
        samples_used=n,
        truncation_bias_bound=truncation_bias_bound(scenario),
        eta=scenario.eta,
        singular_hits=singular,
        palm_attempts=attempts,
    )


# ---------------------------------------------------------------------------
# truncation control (Lipschitz tail bound)
# ---------------------------------------------------------------------------


def _pair_density_tail(sc_process: str, params: dict, link: LinkConfig, s: np.ndarray):
    """Upper bound on eta^-1 rho2_eta over the circle at distance ``s`` from
    the receiver (distance from the origin is at least s - R)."""
    R = link.R
    if sc_process == "PPP_ALOHA":
        return np.full_like(s, float(params["p"]))
    if sc_process == "MATERN_CSMA":
        eta = matern_density(float(params["a"]), float(params.get("parent_density", 1.0)))
        return np.full_like(s, eta * MATERN_PCF_SUP)
    spec: ClusterSpec = params["spec"]
    lam = spec.density
    d = np.maximum(s - R, 0.0)
    gauss = np.exp(-(d * d) / (4.0 * spec.spread**2)) / (
        4.0 * math.pi * spec.spread**2
    )
    if sc_process == "THOMAS_ALOHA":
        p = float(params["p"])
        return p * lam * (1.0 + gauss / spec.parent_density)
    q = float(params["q"])
    return q * lam + spec.mean_cluster_size * gauss


def _tail_integral(process: str, params: dict, link: LinkConfig, r_max: float) -> float:
    def f(s):
        sa = np.asarray([s])
        bound = _pair_density_tail(process, params, link, sa)
        return float(2.0 * math.pi * s * bound[0] * link.pathloss.ell(s - link.R))

    val, _ = integrate.quad(f, r_max, np.inf, epsabs=0.0, epsrel=1e-9, limit=200)
    return val


def truncation_bias_bound(scenario: Scenario) -> float:
    """Appendix-style Lipschitz bound on the truncation bias of estimate_ps."""
    link = scenario.link
    C = link.sd_fading.lipschitz_constant()
    if not math.isfinite(C):
        return math.inf
    tail = _tail_integral(scenario.process, scenario.params, link, scenario.truncation_radius)
    return C * link.theta / link.ell_R * link.interferer_fading.mean() * tail


def truncation_radius(
    process: str, params: dict, link: LinkConfig, tol: float
) -> float:
    """Smallest radius whose Lipschitz truncation bound is below ``tol``
    (floored at 10 R)."""
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    floor = 10.0 * link.R
    if math.isinf(tol):
        return floor
    C = link.sd_fading.lipschitz_constant()
    if not math.isfinite(C):
        raise ValueError("source-destination CCDF is not Lipschitz (deterministic gain)")
    pref = C * link.theta / link.ell_R * link.interferer_fading.mean()

    def bias(rm):
        return pref * _tail_integral(process, params, link, rm)

    if bias(floor) <= tol:
        return floor
    hi = floor * 2.0
    while bias(hi) > tol:
        hi *= 2.0
        if hi > 1e9:
            raise ValueError(
                f"tolerance {tol:g} unreachable; bias at radius 1e9 is {bias(1e9):g}"
            )
    return float(
        optimize.brentq(lambda r: bias(r) - tol, floor, hi, xtol=1e-9 * hi)
    )


# ---------------------------------------------------------------------------
# interference moments
# ---------------------------------------------------------------------------


def _check_moment_convergence(scenario: Scenario, n: int) -> None:
    link = scenario.link
    if link.pathloss.kind == "bounded":
        return
    if scenario.process == "MATERN_CSMA" and float(scenario.params["a"]) > link.R:
        return
    raise ValueError(
        "E[I^n] diverges for this configuration (interferers approach the "
        "receiver under unbounded path loss), so the CCDF Taylor series "
        "cannot be used; run with bounded path loss or a Matern process "
        "with exclusion radius exceeding the link distance"
    )


def _moment_chunk(args):
    sc, chunk_idx, n_reps, order = args
    I, attempts, singular = _chunk_interference(sc, chunk_idx, n_reps)
    x = I**order
    return float(x.sum()), float((x * x).sum()), n_reps, attempts, singular


def interference_moment_mc(
    scenario: Scenario, n: int, workers: int = 1
) -> tuple[float, float]:
    """Monte-Carlo estimate of E^!o[I^n] with its standard error (n = 1..3)."""
    if not 1 <= n <= 3:
        raise ValueError("moment order must be 1..3")
    _check_moment_convergence(scenario, n)
    chunk, n_chunks = _chunk_layout(scenario)
    tasks = []
    left = scenario.samples
    for c in range(n_chunks):
        k = min(chunk, left)
        tasks.append((scenario, c, k, n))
        left -= k
    parts = _map_chunks(_moment_chunk, tasks, workers)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    m = sum(p[2] for p in parts)
    mean = s1 / m
    var = max(s2 / m - mean * mean, 0.0) * m / max(m - 1, 1)
    return mean, math.sqrt(var / m)


def interference_moment_analytic(a: float, link: LinkConfig, n: int) -> float:
    """Partition-sum moment E^!o[I^n] of the Matern process (n <= 2) from the
    scaled product densities: eta E[I^n] = sum over partitions of integrals of
    rho^(k+1) against the path-loss kernels and gain moments."""
    if not 1 <= n <= 2:
        raise ValueError("analytic moments support n = 1..2 only")
    eta = matern_density(a)
    ell = link.pathloss.ell
    R = link.R
    scale = 1.0 / (eta * a * a)
    if n == 1:
        val = matern_pair_integral(ell, a=a, R=R)
        return link.interferer_fading.mean() * scale * val
    term_2 = link.interferer_fading.moment(2) * scale * matern_pair_integral(
        lambda d: ell(d) ** 2, a=a, R=R
    )
    term_11 = link.interferer_fading.mean() ** 2 * scale * matern_triple_integral(
        ell, a=a, R=R
    )
    return term_2 + term_11


# ---------------------------------------------------------------------------
# coupled sweeps (common random numbers across the MAC parameter)
# ---------------------------------------------------------------------------


def aloha_coupled_curves(
    p_grid, link: LinkConfig, r_max: float, samples: int, seed: int
) -> np.ndarray:
    """Success-probability estimates across ALOHA probabilities driven by a
    shared base process, thinning uniforms and gains: the per-replication
    interference is non-decreasing in p, so the returned curve is
    non-increasing by construction."""
    p_grid = np.asarray(p_grid, float)
    area = math.pi * r_max * r_max
    sums = np.zeros(p_grid.size)
    total = 0
    chunk = max(16, int(_TARGET_CHUNK_POINTS / max(area, 1.0)))
    c = 0
    while total < samples:
        n_reps = min(chunk, samples - total)
        rng = substream(seed, 5, c)
        counts = rng.poisson(area, n_reps)  # unit-density base process
        m = int(counts.sum())
        rep = np.repeat(np.arange(n_reps), counts)
        d = r_max * np.sqrt(rng.random(m))
        u = rng.random(m)
        h = link.interferer_fading.sample(m, rng)
        if link.pathloss.kind == "unbounded":
            d[d == 0.0] = 1e-12
        w = h * link.pathloss.ell(d)
        for i, p in enumerate(p_grid):
            I = np.bincount(rep[u < p], weights=w[u < p], minlength=n_reps)
            F = link.sd_fading.ccdf(link.theta * I / link.ell_R + link.noise_N)
            sums[i] += F.sum()
        total += n_reps
        c += 1
    return sums / total


def matern_coupled_curves(
    a_grid, link: LinkConfig, r_max: float, samples: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Success probabilities across exclusion radii with shared parents/marks.

    Conditioning: replications are Palm-valid for radius a when the origin
    point is retained at a. Returns (per-a estimates over each radius' own
    accepted subset, per-a estimates over the subset accepted at max(a)); on
    the common subset the curve is non-decreasing in a replication by
    replication.
    """
    a_grid = np.sort(np.asarray(a_grid, float))
    a_max = a_grid[-1]
    R = link.R
    pad_area = math.pi * (r_max + a_max) ** 2
    sums = np.zeros(a_grid.size)
    counts_ok = np.zeros(a_grid.size)
    sums_common = np.zeros(a_grid.size)
    n_common = 0
    chunk = max(8, int(_TARGET_CHUNK_POINTS / pad_area))
    done = 0
    c = 0
    while done < samples:
        n_reps = min(chunk, samples - done)
        rng = substream(seed, 6, c)
        par_counts = rng.poisson(pad_area, n_reps)
        m = int(par_counts.sum())
        rep = np.repeat(np.arange(n_reps), par_counts)
        pts = _disc_points(m, r_max + a_max, (R, 0.0), rng)
        marks = rng.random(m)
        m0 = rng.random(n_reps)
        h = link.interferer_fading.sample(m, rng)

        all_pts = np.vstack([np.zeros((n_reps, 2)), pts])
        all_rep = np.concatenate([np.arange(n_reps), rep])
        all_marks = np.concatenate([m0, marks])
        off = np.arange(n_reps) * (2.0 * (r_max + a_max) + 3.0 * a_max)
        shifted = all_pts.copy()
        shifted[:, 0] += off[all_rep]
        d_recv = np.hypot(all_pts[:, 0] - R, all_pts[:, 1])
        if link.pathloss.kind == "unbounded":
            d_recv = np.maximum(d_recv, 1e-12)
        w = np.concatenate([np.zeros(n_reps), h]) * link.pathloss.ell(d_recv)
        w[:n_reps] = 0.0
        inside = d_recv <= r_max
        inside[:n_reps] = False

        from scipy.spatial import cKDTree

        tree = cKDTree(shifted)
        order = np.lexsort((np.arange(len(all_marks)), all_marks))
        rank = np.empty(len(all_marks), dtype=np.int64)
        rank[order] = np.arange(len(all_marks))
        F_by_a = []
        ok_by_a = []
        for a in a_grid:
            pairs = tree.query_pairs(a, output_type="ndarray")
            nbr = np.full(len(all_marks), len(all_marks), dtype=np.int64)
            if len(pairs):
                np.minimum.at(nbr, pairs[:, 0], rank[pairs[:, 1]])
                np.minimum.at(nbr, pairs[:, 1], rank[pairs[:, 0]])
            keep = rank < nbr
            ok = keep[:n_reps].copy()
            use = keep & inside
            I = np.bincount(all_rep[use], weights=w[use], minlength=n_reps)
            F = link.sd_fading.ccdf(link.theta * I / link.ell_R + link.noise_N)
            F_by_a.append(F)
            ok_by_a.append(ok)
        common = ok_by_a[-1]
        for i in range(a_grid.size):
            sums[i] += F_by_a[i][ok_by_a[i]].sum()
            counts_ok[i] += ok_by_a[i].sum()
            sums_common[i] += F_by_a[i][common].sum()
        n_common += int(common.sum())
        done += n_reps
        c += 1
    return sums / counts_ok, sums_common / max(n_common, 1)
