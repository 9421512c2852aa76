"""Fading models, path loss, link configuration and the single-interferer kernel."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy import special

__all__ = [
    "FadingModel",
    "TaylorHead",
    "PathLossModel",
    "LinkConfig",
    "expected_ccdf",
    "single_interferer_outage",
]

TAYLOR_ORDER = 30


@dataclass(frozen=True)
class TaylorHead:
    """Leading Taylor data of a CCDF: F(x) = 1 - c0 x^nu + sum_k c_k/k! x^(k+nu).

    ``b_min`` is the smallest b for which sum |c_k| b^-k converges (the
    growth rate of the coefficients), estimated from the computed head.
    """

    nu: int
    c0: float
    coefficients: tuple
    b_min: float

    def evaluate(self, x: float) -> float:
        """Reconstruct the CCDF from the truncated series."""
        val = 1.0 - self.c0 * x**self.nu
        for k, ck in enumerate(self.coefficients, start=1):
            val += ck / math.factorial(k) * x ** (k + self.nu)
        return val


@dataclass(frozen=True)
class FadingModel:
    """Power-gain distribution of a link.

    Kinds: ``rayleigh`` (unit-mean exponential), ``nakagami`` (unit-mean gamma
    with shape m >= 1), ``beamforming`` (chi-square with 2*M_r degrees of
    freedom and mean M_r, the receive-beamforming gain), ``deterministic``
    (unit gain).
    """

    kind: str
    m: float = 1.0
    M_r: int = 1

    def __post_init__(self):
        if self.kind not in ("rayleigh", "nakagami", "beamforming", "deterministic"):
            raise ValueError(f"unknown fading kind {self.kind!r}")
        if self.kind == "nakagami" and self.m < 1.0:
            raise ValueError("Nakagami shape m must be >= 1")
        if self.kind == "beamforming" and (self.M_r < 1 or int(self.M_r) != self.M_r):
            raise ValueError("beamforming antenna count must be a positive integer")

    # -- distribution functions ------------------------------------------------

    def ccdf(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        if np.any(x < 0):
            raise ValueError("ccdf argument must be non-negative")
        if self.kind == "rayleigh":
            return np.exp(-x)
        if self.kind == "nakagami":
            return special.gammaincc(self.m, self.m * x)
        if self.kind == "beamforming":
            return special.gammaincc(self.M_r, x)
        return np.where(x < 1.0, 1.0, 0.0)

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        if self.kind == "rayleigh":
            return np.exp(-x)
        if self.kind == "nakagami":
            m = self.m
            return np.where(
                x > 0,
                np.exp(
                    m * np.log(m)
                    + (m - 1.0) * np.log(np.where(x > 0, x, 1.0))
                    - m * x
                    - special.gammaln(m)
                ),
                (1.0 if m == 1.0 else 0.0),
            )
        if self.kind == "beamforming":
            M = self.M_r
            return np.where(
                x > 0,
                np.exp(
                    (M - 1.0) * np.log(np.where(x > 0, x, 1.0)) - x - special.gammaln(M)
                ),
                (1.0 if M == 1 else 0.0),
            )
        raise ValueError("deterministic gain has no density")

    def moment(self, n: int) -> float:
        """Exact n-th moment of the power gain."""
        if n < 0:
            raise ValueError("moment order must be non-negative")
        if self.kind == "rayleigh":
            return float(math.factorial(n))
        if self.kind == "nakagami":
            return float(np.exp(special.gammaln(n + self.m) - special.gammaln(self.m)) / self.m**n)
        if self.kind == "beamforming":
            return float(np.exp(special.gammaln(n + self.M_r) - special.gammaln(self.M_r)))
        return 1.0

    def laplace(self, s) -> np.ndarray:
        """Laplace transform E[exp(-s h)] for s >= 0."""
        s = np.asarray(s, float)
        if np.any(s < 0):
            raise ValueError("laplace argument must be non-negative")
        if self.kind == "rayleigh":
            return 1.0 / (1.0 + s)
        if self.kind == "nakagami":
            return (1.0 + s / self.m) ** (-self.m)
        if self.kind == "beamforming":
            return (1.0 + s) ** (-float(self.M_r))
        return np.exp(-s)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        if self.kind == "deterministic":
            return np.where(x >= 1.0, 1.0, 0.0)
        return 1.0 - self.ccdf(np.maximum(x, 0.0))

    def gamma_shape_scale(self) -> tuple[float, float]:
        """(shape, scale) of the gamma law of the gain, where applicable."""
        if self.kind == "rayleigh":
            return 1.0, 1.0
        if self.kind == "nakagami":
            return self.m, 1.0 / self.m
        if self.kind == "beamforming":
            return float(self.M_r), 1.0
        raise ValueError("deterministic gain is not gamma distributed")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        if self.kind == "rayleigh":
            return rng.exponential(1.0, n)
        if self.kind == "nakagami":
            return rng.gamma(self.m, 1.0 / self.m, n)
        if self.kind == "beamforming":
            return rng.gamma(float(self.M_r), 1.0, n)
        return np.ones(n)

    # -- analytic structure ----------------------------------------------------

    @property
    def nu(self) -> int:
        """Order of the leading CCDF term 1 - c0 x^nu."""
        if self.kind == "rayleigh":
            return 1
        if self.kind == "nakagami":
            if self.m != int(self.m):
                raise ValueError("Taylor head requires integer Nakagami m")
            return int(self.m)
        if self.kind == "beamforming":
            return int(self.M_r)
        raise ValueError("deterministic gain has no Taylor expansion")

    def taylor_head(self, order: int = TAYLOR_ORDER) -> TaylorHead:
        nu = self.nu  # raises for unsupported kinds
        if self.kind == "rayleigh":
            c0 = 1.0
            coeffs = [(-1.0) ** (k + 1) / (k + 1) for k in range(1, order + 1)]
        elif self.kind == "nakagami":
            m = int(self.m)
            gam = math.gamma(m)
            c0 = m ** (m - 1) / gam
            coeffs = [
                (-1.0) ** (k + 1) * m ** (m + k) / ((m + k) * gam)
                for k in range(1, order + 1)
            ]
        else:  # beamforming
            M = self.M_r
            gam = math.gamma(M)
            c0 = 1.0 / (M * gam)
            coeffs = [(-1.0) ** (k + 1) / ((M + k) * gam) for k in range(1, order + 1)]
        ks = np.arange(1, order + 1)
        b_min = float(np.max(np.abs(coeffs) ** (1.0 / ks)))
        return TaylorHead(nu, c0, tuple(coeffs), b_min)

    def lipschitz_constant(self) -> float:
        """Bound on |dF/dx| (the peak of the gain density)."""
        if self.kind == "rayleigh":
            return 1.0
        if self.kind == "nakagami":
            m = self.m
            if m == 1.0:
                return 1.0
            mode = (m - 1.0) / m
            return float(self.pdf(mode))
        if self.kind == "beamforming":
            M = self.M_r
            if M == 1:
                return 1.0
            return float(self.pdf(M - 1.0))
        return math.inf

    def mean(self) -> float:
        return self.moment(1)

    def to_json(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "nakagami":
            d["m"] = self.m
        if self.kind == "beamforming":
            d["M_r"] = self.M_r
        return d

    @staticmethod
    def from_json(d: dict) -> "FadingModel":
        kind = d["kind"].lower()
        return FadingModel(kind, m=float(d.get("m", 1.0)), M_r=int(d.get("M_r", 1)))


RAYLEIGH = FadingModel("rayleigh")


@dataclass(frozen=True)
class PathLossModel:
    """Bounded (1 + d^alpha)^-1 or unbounded d^-alpha path loss, alpha > 2."""

    kind: str
    alpha: float

    def __post_init__(self):
        if self.kind not in ("bounded", "unbounded"):
            raise ValueError(f"unknown path loss kind {self.kind!r}")
        if self.alpha <= 2.0:
            raise ValueError("path loss exponent must exceed 2")

    def ell(self, d) -> np.ndarray:
        """Path gain at distance d (vectorized; unbounded loss is +inf at 0)."""
        d = np.asarray(d, float)
        if self.kind == "bounded":
            return 1.0 / (1.0 + d**self.alpha)
        with np.errstate(divide="ignore"):
            return d ** (-self.alpha)

    def ell_point(self, x) -> float:
        """Path gain at planar offset ``x``; errors on the unbounded singularity."""
        d = float(np.linalg.norm(np.asarray(x, float)))
        if self.kind == "unbounded" and d == 0.0:
            raise ValueError("unbounded path loss is singular at zero separation")
        return float(self.ell(d))

    def to_json(self) -> dict:
        return {"kind": self.kind, "alpha": self.alpha}

    @staticmethod
    def from_json(d: dict) -> "PathLossModel":
        return PathLossModel(d["kind"].lower(), float(d["alpha"]))


@dataclass(frozen=True)
class LinkConfig:
    """Typical-link parameters: SIR threshold, link distance, path loss,
    normalized noise N = sigma^2 theta / (P l(R)), and fading on both sides."""

    theta: float
    R: float
    pathloss: PathLossModel
    sd_fading: FadingModel = RAYLEIGH
    interferer_fading: FadingModel = RAYLEIGH
    noise_N: float = 0.0

    def __post_init__(self):
        if not (0 < self.theta < math.inf):
            raise ValueError("theta must be a positive finite number")
        if not (0 < self.R < math.inf):
            raise ValueError("link distance must be a positive finite number")
        if self.noise_N < 0:
            raise ValueError("noise term must be non-negative")

    @property
    def ell_R(self) -> float:
        return float(self.pathloss.ell(self.R))

    @property
    def receiver(self) -> np.ndarray:
        return np.array([self.R, 0.0])

    def to_json(self) -> dict:
        return {
            "theta": self.theta,
            "R": self.R,
            "pathloss": self.pathloss.to_json(),
            "sd_fading": self.sd_fading.to_json(),
            "interferer_fading": self.interferer_fading.to_json(),
            "noise_N": self.noise_N,
        }


# ---------------------------------------------------------------------------
# expectation of the CCDF over interferer fading
# ---------------------------------------------------------------------------


@lru_cache(maxsize=32)
def _gauss_laguerre(alpha: float, n: int):
    x, w = special.roots_genlaguerre(n, alpha)
    return x, w


def _laguerre_over_h(sd: FadingModel, c: np.ndarray, h: FadingModel, noise: float):
    """E_h[F_sd(c h + N)] integrating over the interferer gain (good for c <= 1)."""
    shape, scale = h.gamma_shape_scale()
    norm = math.gamma(shape)
    prev = None
    for n in (64, 128, 256):
        x, w = _gauss_laguerre(shape - 1.0, n)
        vals = sd.ccdf(np.clip(c[..., None] * (x * scale) + noise, 0.0, None))
        est = (vals * w).sum(axis=-1) / norm
        if prev is not None and np.max(np.abs(est - prev)) < 1e-11:
            return est
        prev = est
    return prev


def _laguerre_over_sd(sd: FadingModel, c: np.ndarray, h: FadingModel, noise: float):
    """Same expectation written as E_W[CDF_h((W - N)+ / c)], integrating over
    the link gain (resolves the boundary layer when c is large)."""
    shape, scale = sd.gamma_shape_scale()
    norm = math.gamma(shape)
    prev = None
    for n in (64, 128, 256):
        x, w = _gauss_laguerre(shape - 1.0, n)
        arg = np.maximum(x * scale - noise, 0.0)[None, :] / c[..., None]
        vals = h.cdf(arg)
        est = (vals * w).sum(axis=-1) / norm
        if prev is not None and np.max(np.abs(est - prev)) < 1e-11:
            return est
        prev = est
    return prev


def expected_ccdf(sd: FadingModel, c, h: FadingModel, noise: float = 0.0) -> np.ndarray:
    """E_h[F_sd(c h + N)] for the normalized interference coefficient c >= 0.

    Closed forms where available (Rayleigh link fading gives exp(-N) L_h(c),
    deterministic gains reduce to direct evaluation); otherwise gamma-weighted
    Gauss-Laguerre rules, integrating over whichever gain keeps the integrand
    resolved (the interferer gain for c <= 1, the link gain for c > 1), with
    node doubling to absolute accuracy well below 1e-9.
    """
    c = np.asarray(c, float)
    scalar = c.ndim == 0
    c = np.atleast_1d(c).astype(float)
    if sd.kind == "rayleigh":
        out = math.exp(-noise) * h.laplace(c)
    elif h.kind == "deterministic":
        out = sd.ccdf(c + noise)
    elif sd.kind == "deterministic":
        with np.errstate(divide="ignore"):
            out = h.cdf(np.where(c > 0, (1.0 - noise) / np.maximum(c, 1e-300), np.inf))
        if noise >= 1.0:
            out = np.zeros_like(c)
    else:
        out = np.empty_like(c)
        small = c <= 1.0
        if np.any(small):
            out[small] = _laguerre_over_h(sd, c[small], h, noise)
        if np.any(~small):
            out[~small] = _laguerre_over_sd(sd, c[~small], h, noise)
    out = np.asarray(out, float)
    return float(out[0]) if scalar else out


def single_interferer_outage(x, link: LinkConfig) -> float:
    """Outage probability caused at the receiver by one interferer at ``x``:
    1 - E_h[F_sd(h theta l(x - r(o)) / l(R) + N)]."""
    x = np.asarray(x, float)
    d = float(np.linalg.norm(x - link.receiver))
    if d == 0.0 and link.pathloss.kind == "unbounded":
        raise ValueError("interferer coincides with the receiver")
    c = link.theta * float(link.pathloss.ell(d)) / link.ell_R
    return 1.0 - float(
        expected_ccdf(link.sd_fading, c, link.interferer_fading, link.noise_N)
    )


def outage_kernel_radial(link: LinkConfig, s, *, relative_to_noise_floor: bool = False):
    """Vectorized single-interferer outage at distance ``s`` from the receiver.

    With ``relative_to_noise_floor`` the kernel is F_sd(N) - E_h F_sd(. + N),
    the integrand of the noisy spatial-contention integral; otherwise
    1 - E_h F_sd(. + N).
    """
    s = np.asarray(s, float)
    c = link.theta * link.pathloss.ell(s) / link.ell_R
    base = expected_ccdf(link.sd_fading, c, link.interferer_fading, link.noise_N)
    if relative_to_noise_floor:
        p0 = float(link.sd_fading.ccdf(link.noise_N))
        return p0 - base
    return 1.0 - base
