"""Low-density outage constants: the scaling exponent and spatial contention.

The success probability of the typical link behaves as 1 - gamma * eta^kappa
as the transmitter density eta vanishes. This module evaluates gamma and
kappa analytically for ALOHA (general second-order product densities, with
Nakagami and receive-beamforming closed forms) and for the hard-core CSMA
model (partition sums over scaled product densities, with the Rayleigh
closed form as an independent route), handles the thermal-noise variants,
and extracts (gamma, kappa) from simulation sweeps by weighted regression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate, special

from .channel import FadingModel, LinkConfig, outage_kernel_radial
from .integrals import matern_pair_integral, matern_triple_integral
from .pointproc import ProductDensityModel

__all__ = [
    "Partition",
    "partitions",
    "AsymptoticResult",
    "gamma_aloha",
    "gamma_aloha_nakagami",
    "gamma_aloha_beamforming",
    "csma_A_I",
    "gamma_kappa_csma",
    "gamma_csma_rayleigh_closed",
    "noise_taylor",
    "fit_gamma_kappa",
    "kappa_bounds_check",
]

PARTITION_CAP = 12


Partition = tuple[int, ...]


def partitions(n: int) -> list[Partition]:
    """All integer partitions of n as canonical non-increasing tuples."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if n > PARTITION_CAP:
        raise ValueError(f"partition order capped at {PARTITION_CAP}")

    def gen(remaining: int, cap: int):
        if remaining == 0:
            yield ()
            return
        for first in range(min(remaining, cap), 0, -1):
            for rest in gen(remaining - first, first):
                yield (first,) + rest

    return list(gen(n, n))


@dataclass
class AsymptoticResult:
    gamma: float
    kappa: float
    method: str  # AnalyticAloha | AnalyticCsma | ClosedForm | RegressionFit
    gamma_se: Optional[float] = None
    kappa_se: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# ALOHA
# ---------------------------------------------------------------------------


def _rho2_ring_integral(rho2: ProductDensityModel, link: LinkConfig, s, n_phi=256):
    """Integral of the second-order product density over the circle of radius
    ``s`` about the receiver: int_0^2pi rho2(|r(o) + s e^{i phi}|) dphi."""
    s = np.asarray(s, float)
    R = link.R
    if rho2.kind == "PPPConstant":
        return 2.0 * math.pi * rho2.density**2 * np.ones_like(s)
    if rho2.kind == "ThomasClosedForm":
        c = rho2.cluster
        lam = c.density
        z = R * s / (2.0 * c.spread**2)
        # e^{-(R^2+s^2)/4s^2} I0(z) evaluated stably via the scaled Bessel
        gauss = special.i0e(z) * np.exp(z - (R * R + s * s) / (4.0 * c.spread**2))
        extra = gauss / (4.0 * math.pi * c.spread**2 * c.parent_density)
        return 2.0 * math.pi * lam * lam * (1.0 + extra)
    phi = (np.arange(n_phi) + 0.5) * (2.0 * math.pi / n_phi)
    d = np.sqrt(s[:, None] ** 2 + R * R + 2.0 * s[:, None] * R * np.cos(phi)[None, :])
    return rho2.rho2(d).sum(axis=1) * (2.0 * math.pi / n_phi)


def gamma_aloha(rho2: ProductDensityModel, link: LinkConfig) -> AsymptoticResult:
    """Spatial contention of ALOHA on a stationary process with second-order
    product density ``rho2``: the plane integral of the single-interferer
    outage kernel against rho2. kappa = 1. With thermal noise the kernel is
    taken relative to the noise floor F_sd(N) and gamma is reported in the
    absolute convention P_s ~ F_sd(N) - gamma eta."""

    def kernel(scalar_s: float) -> float:
        s = np.asarray([scalar_s], float)
        k = outage_kernel_radial(link, s, relative_to_noise_floor=True)
        ring = _rho2_ring_integral(rho2, link, s)
        return float(scalar_s * k[0] * ring[0])

    if link.pathloss.kind == "unbounded":
        knee = link.theta ** (1.0 / link.pathloss.alpha) * link.R
    else:
        arg = link.theta * (1.0 + link.R**link.pathloss.alpha) - 1.0
        knee = max(arg, 1e-6) ** (1.0 / link.pathloss.alpha) if arg > 0 else link.R
    pieces = []
    err = 0.0
    for lo, hi in ((0.0, knee), (knee, 10.0 * knee), (10.0 * knee, np.inf)):
        val, e = integrate.quad(kernel, lo, hi, epsabs=1e-13, epsrel=1e-10, limit=400)
        pieces.append(val)
        err += e
    total = float(sum(pieces))
    if not math.isfinite(total) or (total > 0 and err > 1e-6 * total):
        raise ArithmeticError("ALOHA gamma quadrature did not converge")
    return AsymptoticResult(total, 1.0, "AnalyticAloha", diagnostics={"quad_error": err})


def gamma_aloha_nakagami(m: float, theta: float, alpha: float, R: float) -> float:
    """Closed-form ALOHA gamma on a unit-density PPP with Nakagami-m fading on
    both sides and unbounded path loss."""
    if m <= 2.0 / alpha:
        raise ValueError("requires m > 2/alpha")
    return float(
        math.pi
        * theta ** (2.0 / alpha)
        * R
        * R
        * math.gamma(m - 2.0 / alpha)
        * math.gamma(m + 2.0 / alpha)
        / math.gamma(m) ** 2
    )


def gamma_aloha_beamforming(M_r: int, theta: float, alpha: float, R: float) -> float:
    """Closed-form ALOHA gamma with receive beamforming over M_r antennas
    (chi-square link gain), Rayleigh interferer fading, unbounded path loss."""
    if M_r < 1 or int(M_r) != M_r:
        raise ValueError("antenna count must be a positive integer")
    return float(
        math.pi
        * theta ** (2.0 / alpha)
        * R
        * R
        * math.gamma(M_r - 2.0 / alpha)
        * math.gamma(1.0 + 2.0 / alpha)
        / math.gamma(M_r)
    )


# ---------------------------------------------------------------------------
# CSMA (Matern hard core)
# ---------------------------------------------------------------------------


def csma_A_I(
    nu: int,
    alpha: float,
    interferer_fading: FadingModel,
    *,
    return_terms: bool = False,
):
    """Partition-sum interference functional of the hard-core process:

        A_I = sum over partitions (p_1..p_k) of nu of
              int rho_tilde^(k+1)(x_1..x_k) prod |x_i|^(-alpha p_i) E[h^p_i] dx_i

    in scaled (unit exclusion radius) coordinates. nu <= 2.
    """
    if nu not in (1, 2):
        raise ValueError("A_I supports nu = 1 or 2")
    terms: dict[Partition, float] = {}
    if nu == 1:
        val = matern_pair_integral(lambda d: d ** (-alpha))
        terms[(1,)] = interferer_fading.mean() * val
    else:
        terms[(2,)] = interferer_fading.moment(2) * matern_pair_integral(
            lambda d: d ** (-2.0 * alpha)
        )
        terms[(1, 1)] = interferer_fading.mean() ** 2 * matern_triple_integral(
            lambda d: d ** (-alpha)
        )
    total = float(sum(terms.values()))
    if return_terms:
        return total, terms
    return total


def gamma_kappa_csma(link: LinkConfig) -> AsymptoticResult:
    """(gamma, kappa) of the hard-core CSMA model: kappa = alpha nu / 2 and
    gamma = c0 pi^(1 + alpha nu / 2) (theta / l(R))^nu A_I.

    The pi^(alpha nu/2) factor converts the scaled product-density integrals
    (unit exclusion radius) to densities via eta ~ 1/(pi a^2); it is what
    makes the assembled gamma agree with the Rayleigh closed form.
    With noise, nu collapses to 1 and c0 becomes the gain density at N.
    """
    alpha = link.pathloss.alpha
    nu, c0 = noise_taylor(link.sd_fading, link.noise_N)
    if nu > 2:
        raise ValueError("CSMA gamma supports nu <= 2 in this version")
    a_i = csma_A_I(nu, alpha, link.interferer_fading)
    kappa = alpha * nu / 2.0
    gamma = c0 * math.pi ** (1.0 + kappa) * (link.theta / link.ell_R) ** nu * a_i
    return AsymptoticResult(
        float(gamma), float(kappa), "AnalyticCsma", diagnostics={"A_I": a_i, "c0": c0}
    )


def gamma_csma_rayleigh_closed(theta: float, alpha: float, R: float) -> float:
    """Closed-form CSMA spatial contention for Rayleigh link fading:

        R^a theta pi^(a/2) 2^(3-a)/(a-2)
        + 4 theta R^a pi^2 int_{1/sqrt(pi)}^{2/sqrt(pi)} r^(1-a) / g(r) dr,

    g(r) = 2 pi - 2 arccos(sqrt(pi) r / 2) + (r sqrt(pi)/2) sqrt(4 - pi r^2).
    """
    if alpha <= 2:
        raise ValueError("alpha must exceed 2")
    term1 = R**alpha * theta * math.pi ** (alpha / 2.0) * 2.0 ** (3.0 - alpha) / (alpha - 2.0)

    def g(r):
        return (
            2.0 * math.pi
            - 2.0 * math.acos(min(1.0, math.sqrt(math.pi) * r / 2.0))
            + (r * math.sqrt(math.pi) / 2.0) * math.sqrt(max(0.0, 4.0 - math.pi * r * r))
        )

    val, _ = integrate.quad(
        lambda r: r ** (1.0 - alpha) / g(r),
        1.0 / math.sqrt(math.pi),
        2.0 / math.sqrt(math.pi),
        epsabs=1e-9,
        epsrel=1e-12,
        limit=200,
    )
    return float(term1 + 4.0 * theta * R**alpha * math.pi**2 * val)


def noise_taylor(model: FadingModel, N: float) -> tuple[int, float]:
    """Leading Taylor data (nu, c0) of x -> F_sd(x + N).

    N = 0 delegates to the noiseless head; for N > 0 the CCDF of any of the
    supported gains has a nonzero density at N, so nu = 1 and c0 is the
    density value there.
    """
    if N < 0:
        raise ValueError("noise must be non-negative")
    if N == 0.0:
        head = model.taylor_head()
        return head.nu, head.c0
    return 1, float(model.pdf(N))


# ---------------------------------------------------------------------------
# regression extraction from sweeps
# ---------------------------------------------------------------------------


def fit_gamma_kappa(etas: Sequence[float], ps) -> AsymptoticResult:
    """Weighted least-squares fit of log(1 - p_s) on log eta.

    ``ps`` holds OutageEstimate-like objects (p_success, std_error). Only
    grid points with outage inside [5 SE, 0.2] enter the fit (the asymptotic
    window); the slope estimates kappa, the intercept log gamma. Weights come
    from the delta-method variance of the log outage.
    """
    etas = np.asarray(etas, float)
    if etas.size < 4:
        raise ValueError("at least 4 grid points are required")
    outage = np.array([1.0 - e.p_success for e in ps])
    se = np.array([e.std_error for e in ps])
    usable = (outage >= 5.0 * se) & (outage > 0.0) & (outage <= 0.2)
    if usable.sum() < 2:
        raise ValueError(
            "too few usable points: outage not resolved above 5 standard "
            "errors (increase the sample budget) or outside the asymptotic window"
        )
    x = np.log(etas[usable])
    y = np.log(outage[usable])
    w = (outage[usable] / se[usable]) ** 2  # 1 / var(log outage)
    W = np.diag(w)
    X = np.column_stack([x, np.ones_like(x)])
    cov = np.linalg.inv(X.T @ W @ X)
    beta = cov @ (X.T @ W @ y)
    kappa, loggamma = float(beta[0]), float(beta[1])
    kappa_se = float(math.sqrt(cov[0, 0]))
    loggamma_se = float(math.sqrt(cov[1, 1]))
    gamma = math.exp(loggamma)
    resid = y - X @ beta
    chi2 = float(resid @ (w * resid))
    return AsymptoticResult(
        gamma,
        kappa,
        "RegressionFit",
        gamma_se=gamma * loggamma_se,
        kappa_se=kappa_se,
        diagnostics={
            "points_used": int(usable.sum()),
            "window_etas": etas[usable].tolist(),
            "chi2": chi2,
            "dof": int(usable.sum() - 2),
        },
    )


@dataclass
class KappaBoundsReport:
    ok: bool
    kappa_hat: float
    lower: float
    upper: float
    tol: float
    message: str


def kappa_bounds_check(
    alpha: float, nu: int, kappa_hat: float, kappa_se: float = 0.0
) -> KappaBoundsReport:
    """Flag a fitted exponent outside the theoretical range [1, alpha nu / 2]
    beyond twice its fit standard error."""
    tol = 2.0 * kappa_se
    lower, upper = 1.0, alpha * nu / 2.0
    ok = (kappa_hat >= lower - tol) and (kappa_hat <= upper + tol)
    msg = "within bounds" if ok else (
        f"kappa_hat={kappa_hat:.4g} outside [{lower:.4g}, {upper:.4g}] +- {tol:.4g}"
    )
    return KappaBoundsReport(ok, kappa_hat, lower, upper, tol, msg)
