"""Transmission capacity: asymptotic inversion, simulation via monotone
bisection, the mu/sigma success-probability bounds for Rayleigh link fading,
TC lower/upper bounds, and the B.1/B.2/C.1/C.2 regularity diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize

from .channel import LinkConfig
from .integrals import (
    matern_pair_integral,
    matern_triple_integral,
    plane_radial_integral,
)
from .outage import (
    Scenario,
    _chunk_layout,
    _chunk_points,
    estimate_ps,
    truncation_radius,
)
from .pointproc import ClusterSpec, matern_density, matern_radius_for_density, substream

__all__ = [
    "MuSigma",
    "TcCurve",
    "tc_asymptotic",
    "tc_simulated",
    "mu_sigma",
    "success_prob_bounds",
    "tc_bounds",
    "condition_diagnostics",
]


def tc_asymptotic(gamma: float, kappa: float, epsilon: float) -> float:
    """Asymptotic transmission capacity (epsilon/gamma)^(1/kappa) (1-epsilon)."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return (epsilon / gamma) ** (1.0 / kappa) * (1.0 - epsilon)


# ---------------------------------------------------------------------------
# single-interferer outage kernel for Rayleigh link fading
# ---------------------------------------------------------------------------


def delta_kernel(link: LinkConfig) -> Callable[[np.ndarray], np.ndarray]:
    """Delta(x) = 1 - L_h(theta l(x - r(o)) / l(R)) as a function of the
    distance to the receiver. Defined for Rayleigh link fading."""
    if link.sd_fading.kind != "rayleigh":
        raise ValueError("the Laplace-transform outage kernel needs Rayleigh link fading")
    theta_over_ell = link.theta / link.ell_R
    h = link.interferer_fading

    def delta(d):
        return 1.0 - h.laplace(theta_over_ell * link.pathloss.ell(np.asarray(d, float)))

    return delta


def _kernel_knee(link: LinkConfig) -> float:
    if link.pathloss.kind == "unbounded":
        return link.theta ** (1.0 / link.pathloss.alpha) * link.R
    arg = link.theta * (1.0 + link.R**link.pathloss.alpha) - 1.0
    return arg ** (1.0 / link.pathloss.alpha) if arg > 0 else link.R


# ---------------------------------------------------------------------------
# mu / sigma functionals
# ---------------------------------------------------------------------------


@dataclass
class MuSigma:
    mu: float
    sigma: Optional[float]
    eta: float
    sigma_se: float = 0.0
    method: str = "quadrature"


def _thomas_rho2_base(spec: ClusterSpec, d: np.ndarray) -> np.ndarray:
    lam = spec.density
    return lam * lam * (
        1.0
        + np.exp(-(d * d) / (4.0 * spec.spread**2))
        / (4.0 * math.pi * spec.spread**2 * spec.parent_density)
    )


def _ring_average(fn, s: float, R: float, n_phi: int = 256) -> float:
    """Integral over the circle of radius s about the receiver of a function
    of the distance to the origin."""
    phi = (np.arange(n_phi) + 0.5) * (2.0 * math.pi / n_phi)
    d = np.sqrt(s * s + R * R + 2.0 * s * R * np.cos(phi))
    return float(fn(d).sum() * (2.0 * math.pi / n_phi))


def _pair_functional(
    process: str, params: dict, link: LinkConfig, kernel
) -> float:
    """eta^-1 int rho2_eta(x) K(|x - r(o)|) dx for the supported processes."""
    R = link.R
    if process == "PPP_ALOHA":
        p = float(params["p"])
        return p * plane_radial_integral(kernel, split=_kernel_knee(link))
    if process == "MATERN_CSMA":
        a = float(params["a"])
        eta = matern_density(a)
        return matern_pair_integral(kernel, a=a, R=R) / (eta * a * a)
    if process == "THOMAS_ALOHA":
        spec: ClusterSpec = params["spec"]
        p = float(params["p"])
        eta = spec.density * p

        def f(s):
            ring = _ring_average(lambda d: _thomas_rho2_base(spec, d), s, R)
            return s * float(kernel(np.asarray([s]))[0]) * ring

        knee = _kernel_knee(link)
        total = 0.0
        for lo, hi in ((0.0, knee), (knee, 20.0 * knee), (20.0 * knee, np.inf)):
            val, _ = integrate.quad(f, lo, hi, epsabs=1e-12, epsrel=1e-9, limit=300)
            total += val
        return p * p / eta * total
    if process == "CLUSTER_MAC":
        spec = params["spec"]
        q = float(params["q"])
        lam = spec.density
        cbar = spec.mean_cluster_size

        # rho2 of cluster-level thinning: q * (same-cluster pairs) + q^2 * (cross)
        def rho2_over_eta(d):
            gauss = np.exp(-(d * d) / (4.0 * spec.spread**2)) / (
                4.0 * math.pi * spec.spread**2
            )
            return cbar * gauss + q * lam

        def f(s):
            ring = _ring_average(rho2_over_eta, s, R)
            return s * float(kernel(np.asarray([s]))[0]) * ring

        knee = _kernel_knee(link)
        total = 0.0
        for lo, hi in ((0.0, knee), (knee, 20.0 * knee), (20.0 * knee, np.inf)):
            val, _ = integrate.quad(f, lo, hi, epsabs=1e-12, epsrel=1e-9, limit=300)
            total += val
        return total
    raise ValueError(f"unknown process {process!r}")


def _mc_delta_sums(
    process: str,
    params: dict,
    link: LinkConfig,
    samples: int,
    seed: int,
    r_max: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-replication (sum Delta, sum Delta^2) over Palm interferers."""
    delta = delta_kernel(link)
    sc = Scenario(process, params, link, truncation_radius=r_max, samples=samples, seed=seed)
    chunk, n_chunks = _chunk_layout(sc)
    s1_parts, s2_parts = [], []
    left = samples
    for c in range(n_chunks):
        n = min(chunk, left)
        left -= n
        pts, rep, _ = _chunk_points(sc, c, n)
        d = np.hypot(pts[:, 0] - link.R, pts[:, 1])
        vals = delta(d)
        s1_parts.append(np.bincount(rep, weights=vals, minlength=n))
        s2_parts.append(np.bincount(rep, weights=vals * vals, minlength=n))
    return np.concatenate(s1_parts), np.concatenate(s2_parts)


def mu_sigma(
    process: str,
    params: dict,
    link: LinkConfig,
    *,
    mc_samples: int = 20_000,
    seed: int = 0,
) -> MuSigma:
    """First and second factorial moments of the interferer outage kernel:
    mu = eta^-1 int rho2 Delta, sigma = eta^-1 int int rho3 Delta Delta.

    PPP: closed path sigma = mu^2. Matern: third-order scaled density
    quadrature. Thomas / cluster MAC: sigma by Monte-Carlo double sums.
    """
    delta = delta_kernel(link)
    sc_eta = Scenario(
        process, params, link, truncation_radius=10.0 * link.R, samples=1, seed=0
    ).eta
    mu = _pair_functional(process, params, link, delta)
    if process == "PPP_ALOHA":
        return MuSigma(mu, mu * mu, sc_eta)
    if process == "MATERN_CSMA":
        a = float(params["a"])
        eta = matern_density(a)
        sig = matern_triple_integral(delta, a=a, R=link.R) / (eta * a * a)
        return MuSigma(mu, sig, sc_eta)
    # Monte-Carlo double sum for cluster-type processes
    r_max = truncation_radius(process, params, link, tol=max(mu * 1e-3, 1e-9))
    s1, s2 = _mc_delta_sums(process, params, link, mc_samples, seed, r_max)
    pair = s1 * s1 - s2
    sig = float(pair.mean())
    sig_se = float(pair.std(ddof=1) / math.sqrt(len(pair)))
    return MuSigma(mu, sig, sc_eta, sigma_se=sig_se, method="mc-double-sum")


# ---------------------------------------------------------------------------
# success-probability bounds and the PGFL upper bound
# ---------------------------------------------------------------------------


@dataclass
class SuccessBounds:
    lower: float
    upper: float
    mu: float
    sigma: Optional[float]
    pgfl_upper: Optional[float] = None
    pgfl_se: float = 0.0


def _pgfl_bound(
    process: str, params: dict, link: LinkConfig, mc_samples: int, seed: int
) -> tuple[float, float]:
    """G[exp(-Delta)] under the reduced Palm measure: closed form for the
    (thinned) PPP, Monte Carlo otherwise."""
    delta = delta_kernel(link)
    if process == "PPP_ALOHA":
        p = float(params["p"])

        def one_minus_exp(d):
            return -np.expm1(-delta(d))

        val = p * plane_radial_integral(one_minus_exp, split=_kernel_knee(link))
        return math.exp(-val), 0.0
    mu = _pair_functional(process, params, link, delta)
    r_max = truncation_radius(process, params, link, tol=max(mu * 1e-3, 1e-9))
    s1, _ = _mc_delta_sums(process, params, link, mc_samples, seed, r_max)
    g = np.exp(-s1)
    return float(g.mean()), float(g.std(ddof=1) / math.sqrt(len(g)))


def success_prob_bounds(
    process: str,
    params: dict,
    link: LinkConfig,
    *,
    with_pgfl: bool = True,
    mc_samples: int = 20_000,
    seed: int = 0,
) -> SuccessBounds:
    """Bounds 1 - mu <= P_s <= min(1 - mu + sigma/2, G[exp(-Delta)]) for
    Rayleigh link fading. With noise both sides carry the exp(-N) factor of
    the Rayleigh factorization."""
    ms = mu_sigma(process, params, link, mc_samples=mc_samples, seed=seed)
    noise_factor = math.exp(-link.noise_N)
    lower = max(0.0, noise_factor * (1.0 - ms.mu))
    upper_sigma = noise_factor * min(1.0, 1.0 - ms.mu + 0.5 * ms.sigma)
    pgfl = pgfl_se = None
    upper = upper_sigma
    if with_pgfl:
        pgfl, pgfl_se = _pgfl_bound(process, params, link, mc_samples, seed + 1)
        pgfl *= noise_factor
        upper = min(upper_sigma, pgfl)
    return SuccessBounds(lower, upper, ms.mu, ms.sigma, pgfl, pgfl_se or 0.0)


# ---------------------------------------------------------------------------
# transmission capacity
# ---------------------------------------------------------------------------


def _params_for_eta(process: str, base_params: dict, eta: float) -> dict:
    if process == "PPP_ALOHA":
        return {"p": eta}
    if process == "MATERN_CSMA":
        return {"a": matern_radius_for_density(eta)}
    if process == "THOMAS_ALOHA":
        spec: ClusterSpec = base_params["spec"]
        return {"spec": spec, "p": eta / spec.density}
    raise ValueError(f"unsupported process for eta sweeps: {process!r}")


@dataclass
class TcSimResult:
    tc: float
    ci: float
    eta_star: float
    epsilon: float
    evaluations: list = field(default_factory=list)


def tc_simulated(
    process: str,
    base_params: dict,
    link: LinkConfig,
    epsilon: float,
    *,
    seed: int = 0,
    rel_tol: float = 0.02,
    se_target: Optional[float] = None,
    max_iter: int = 60,
    workers: int = 1,
) -> TcSimResult:
    """Transmission capacity by monotone bisection on the density.

    The success probability is non-increasing in eta (coupling lemmas for
    ALOHA and the hard-core radius), so bisection on p_s(eta) = 1 - epsilon
    is justified; every evaluation uses enough replications to push the
    estimator standard error below ``se_target`` (default epsilon/5).
    Returns (1 - epsilon) eta* with a confidence interval combining the final
    bracket width and the estimator noise through the local slope.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    se_target = epsilon / 5.0 if se_target is None else se_target
    target = 1.0 - epsilon
    evals: list[tuple[float, float, float]] = []

    def p_hat(eta: float, eval_idx: int) -> tuple[float, float]:
        params = _params_for_eta(process, base_params, eta)
        r_max = truncation_radius(process, params, link, tol=epsilon / 100.0)
        n = 2_000
        for attempt in range(8):
            sc = Scenario(
                process,
                params,
                link,
                truncation_radius=r_max,
                samples=n,
                seed=seed * 1_000_003 + eval_idx * 101 + attempt,
            )
            est = estimate_ps(sc, workers=workers)
            if est.std_error <= se_target or n >= 2_000_000:
                evals.append((eta, est.p_success, est.std_error))
                return est.p_success, est.std_error
            n = int(min(2_000_000, n * max(2.0, (est.std_error / se_target) ** 2 * 1.3)))
        evals.append((eta, est.p_success, est.std_error))
        return est.p_success, est.std_error

    # bracket: expand down from eta = min(0.9, upper bound of parameterization)
    eta_hi = 0.9
    k = 0
    p_hi, _ = p_hat(eta_hi, k)
    while p_hi > target:
        # even the densest configuration beats the outage constraint
        if eta_hi >= 0.9:
            raise ValueError(f"outage constraint {epsilon} not reachable within eta <= 0.9")
        eta_hi = min(0.9, eta_hi * 4.0)
        k += 1
        p_hi, _ = p_hat(eta_hi, k)
    eta_lo = eta_hi / 4.0
    k += 1
    p_lo, _ = p_hat(eta_lo, k)
    while p_lo < target:
        eta_hi, p_hi = eta_lo, p_lo
        eta_lo /= 4.0
        k += 1
        if eta_lo < 1e-12:
            raise ValueError("failed to bracket the target success probability")
        p_lo, _ = p_hat(eta_lo, k)

    for _ in range(max_iter):
        if eta_hi - eta_lo <= rel_tol * eta_lo:
            break
        mid = math.sqrt(eta_lo * eta_hi)
        k += 1
        pm, _ = p_hat(mid, k)
        if pm >= target:
            eta_lo = mid
        else:
            eta_hi = mid
    eta_star = 0.5 * (eta_lo + eta_hi)

    # slope estimate from the two evaluations furthest apart
    es = sorted(evals)
    slope = None
    if len(es) >= 2 and es[-1][0] > es[0][0]:
        slope = (es[-1][1] - es[0][1]) / (es[-1][0] - es[0][0])
    se_eta = abs(se_target / slope) if slope not in (None, 0.0) else 0.0
    ci_eta = 0.5 * (eta_hi - eta_lo) + 2.0 * se_eta
    return TcSimResult(
        tc=(1.0 - epsilon) * eta_star,
        ci=(1.0 - epsilon) * ci_eta,
        eta_star=eta_star,
        epsilon=epsilon,
        evaluations=evals,
    )


@dataclass
class TcBounds:
    tcl: float
    tcu: float
    eta_l: float
    eta_u: float


def tc_bounds(
    epsilon: float,
    process: str,
    base_params: dict,
    link: LinkConfig,
    *,
    mc_samples: int = 20_000,
    seed: int = 0,
) -> TcBounds:
    """TCL(eps) = (1-eps) sup{eta : mu_eta <= eps} and the matching TCU from
    the upper success bound, both by root finding on monotone functionals."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")

    def mu_of_eta(eta: float) -> float:
        params = _params_for_eta(process, base_params, eta)
        return mu_sigma(process, params, link, mc_samples=mc_samples, seed=seed).mu

    if process == "PPP_ALOHA":
        delta = delta_kernel(link)
        i_mu = plane_radial_integral(delta, split=_kernel_knee(link))
        eta_l = epsilon / i_mu

        def one_minus_exp(d):
            return -np.expm1(-delta(d))

        i_g = plane_radial_integral(one_minus_exp, split=_kernel_knee(link))

        def upper_gap(eta):
            up = min(1.0 - eta * i_mu + 0.5 * (eta * i_mu) ** 2, math.exp(-eta * i_g))
            return up - (1.0 - epsilon)

        hi = eta_l * 4.0
        while upper_gap(hi) > 0:
            hi *= 2.0
            if hi > 1e6:
                raise ValueError("failed to bracket the TC upper bound")
        eta_u = float(optimize.brentq(upper_gap, eta_l / 100.0, hi, xtol=1e-12, rtol=1e-10))
    else:

        def lower_gap(eta):
            return mu_of_eta(eta) - epsilon

        lo, hi = 1e-5, 0.6
        while lower_gap(hi) < 0 and hi < 0.95:
            hi = min(0.95, hi * 1.5)
        eta_l = float(optimize.brentq(lower_gap, lo, hi, rtol=1e-6))

        def upper_gap(eta):
            params = _params_for_eta(process, base_params, eta)
            ms = mu_sigma(process, params, link, mc_samples=mc_samples, seed=seed)
            return (1.0 - ms.mu + 0.5 * ms.sigma) - (1.0 - epsilon)

        hi2 = min(0.95, eta_l * 8.0)
        if upper_gap(hi2) > 0:
            eta_u = hi2
        else:
            eta_u = float(optimize.brentq(upper_gap, eta_l, hi2, rtol=1e-5))
    return TcBounds(
        tcl=(1.0 - epsilon) * eta_l,
        tcu=(1.0 - epsilon) * eta_u,
        eta_l=eta_l,
        eta_u=eta_u,
    )


@dataclass
class TcCurve:
    epsilons: list
    tc_asymptotic: list
    tc_simulated: Optional[list] = None
    tc_sim_ci: Optional[list] = None
    tcl: Optional[list] = None
    tcu: Optional[list] = None


# ---------------------------------------------------------------------------
# regularity diagnostics (B.1, B.2, C.1, C.2)
# ---------------------------------------------------------------------------


@dataclass
class DiagnosticsRow:
    eta: float
    b1_sup: float
    b2: dict
    c1_ratio: Optional[float]
    c2_ratio: Optional[float]
    p_success: float
    p_success_se: float


@dataclass
class DiagnosticsReport:
    process: str
    rows: list
    b1_growth: float
    b1_bounded: bool
    b2_positive: bool
    c1_ok: Optional[bool]
    c2_vanishing: Optional[bool]
    ps_plateau: bool


def _palm_count_statistics(
    sc: Scenario, samples: int, r_balls: Sequence[float], grid_halfspan: float = 5.0
):
    """Mean Palm counts in unit squares on a 21x21 translate grid and in
    balls around the origin."""
    centers = np.linspace(-grid_halfspan, grid_halfspan, 21)
    sq_counts = np.zeros((21, 21))
    ball_counts = np.zeros(len(r_balls))
    chunk, n_chunks = _chunk_layout(sc)
    total = 0
    left = samples
    for c in range(n_chunks):
        n = min(chunk, left)
        left -= n
        pts, rep, _ = _chunk_points(sc, c, n)
        total += n
        if len(pts) == 0:
            continue
        r2 = (pts**2).sum(axis=1)
        for i, rb in enumerate(r_balls):
            ball_counts[i] += float((r2 <= rb * rb).sum())
        ix = np.searchsorted(centers + 0.5, pts[:, 0])
        iy = np.searchsorted(centers + 0.5, pts[:, 1])
        ok = (ix < 21) & (iy < 21) & (pts[:, 0] >= centers[0] - 0.5) & (
            pts[:, 1] >= centers[1] - 0.5
        )
        np.add.at(sq_counts, (ix[ok], iy[ok]), 1.0)
    return sq_counts / total, ball_counts / total


def condition_diagnostics(
    process: str,
    base_params: dict,
    link: LinkConfig,
    eta_grid: Sequence[float],
    *,
    samples: int = 20_000,
    ball_radii: Sequence[float] = (0.5, 1.0, 2.0),
    seed: int = 0,
) -> DiagnosticsReport:
    """Numerical checks of the regularity conditions across a density grid.

    B.1: sup over unit-square translates of the reduced second moment
    K_eta(S1 + x) (estimated on a 21x21 grid; bounded as eta -> 0 for
    reasonable MACs, diverging like 1/eta for the cluster MAC).
    B.2: eta K_eta(R1 eta^-1/2), the mean Palm count in a ball of radius
    R1 eta^-1/2 (positive limit required).
    C.1: eta^-1 int rho2 Delta^2 / sigma_eta > 2. C.2: sigma_eta / mu_eta -> 0.
    Also records the outage trend used by the cluster-MAC demo.
    """
    rows = []
    quad_c = process in ("PPP_ALOHA", "MATERN_CSMA")
    for i, eta in enumerate(eta_grid):
        if process == "CLUSTER_MAC":
            spec: ClusterSpec = base_params["spec"]
            params = {"spec": spec, "q": eta / spec.density}
        else:
            params = _params_for_eta(process, base_params, eta)
        r_max = truncation_radius(process, params, link, tol=1e-4)
        sc = Scenario(
            process, params, link, truncation_radius=r_max,
            samples=samples, seed=seed + 17 * i,
        )
        sq, balls = _palm_count_statistics(
            sc, samples, [rb * eta**-0.5 for rb in ball_radii]
        )
        b1 = float(sq.max()) / eta
        b2 = {rb: float(bc) for rb, bc in zip(ball_radii, balls)}
        est = estimate_ps(sc)
        c1 = c2 = None
        if link.sd_fading.kind == "rayleigh":
            delta = delta_kernel(link)
            ms = mu_sigma(process, params, link, mc_samples=samples, seed=seed + 31 * i)
            num = _pair_functional(
                process, params, link, lambda d: delta(d) ** 2
            )
            if ms.sigma and ms.sigma > 0:
                c1 = num / ms.sigma
                c2 = ms.sigma / ms.mu
        rows.append(
            DiagnosticsRow(eta, b1, b2, c1, c2, est.p_success, est.std_error)
        )

    etas = np.array([r.eta for r in rows])
    order = np.argsort(etas)[::-1]  # decreasing density
    b1_seq = np.array([rows[i].b1_sup for i in order])
    eta_seq = etas[order]
    # growth of the B.1 statistic per decade of density decrease
    with np.errstate(divide="ignore"):
        b1_growth = float(
            (math.log(b1_seq[-1] / b1_seq[0]) / math.log(eta_seq[0] / eta_seq[-1]))
            if b1_seq[0] > 0 and b1_seq[-1] > 0
            else 0.0
        )
    b1_bounded = b1_growth < 0.5
    b2_positive = all(max(r.b2.values()) > 0.1 for r in rows)
    c1_vals = [r.c1_ratio for r in rows if r.c1_ratio is not None]
    c2_vals = [(r.eta, r.c2_ratio) for r in rows if r.c2_ratio is not None]
    c1_ok = (min(c1_vals) > 2.0) if c1_vals else None
    if len(c2_vals) >= 2:
        c2_sorted = sorted(c2_vals)
        c2_vanishing = c2_sorted[0][1] < c2_sorted[-1][1]
    else:
        c2_vanishing = None
    ps_seq = np.array([rows[i].p_success for i in order])
    ps_plateau = bool(ps_seq[-1] < 0.99 and (ps_seq[-1] - ps_seq[0]) < 0.2)
    return DiagnosticsReport(
        process, rows, b1_growth, b1_bounded, b2_positive, c1_ok, c2_vanishing, ps_plateau
    )
