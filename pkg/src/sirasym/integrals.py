"""Quadratures over the scaled hard-core product densities and the plane.

All spatial kernels are isotropic functions of the distance to the receiver,
which sits at (R, 0) while product densities are radial about the origin;
the angular structure is integrated with trapezoid rules on the circle
(spectrally accurate for these smooth integrands) and circular correlation
for the third-order double integral.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .pointproc import matern_rho2_scaled, matern_rho3_scaled

__all__ = [
    "plane_radial_integral",
    "matern_pair_integral",
    "matern_triple_integral",
]


def plane_radial_integral(
    kernel: Callable[[np.ndarray], np.ndarray],
    *,
    split: float = 1.0,
    rel_tol: float = 1e-10,
) -> float:
    """Integral over the plane of a radial kernel: 2 pi * int_0^inf s k(s) ds.

    ``split`` marks a knee (e.g. where the outage kernel saturates) used to
    partition the adaptive quadrature.
    """

    def f(s):
        return s * float(kernel(np.asarray([s]))[0])

    a1, _ = integrate.quad(f, 0.0, split, epsabs=1e-13, epsrel=rel_tol, limit=200)
    a2, _ = integrate.quad(f, split, 10.0 * split, epsabs=1e-13, epsrel=rel_tol, limit=200)
    a3, _ = integrate.quad(f, 10.0 * split, np.inf, epsabs=1e-13, epsrel=rel_tol, limit=200)
    return 2.0 * math.pi * (a1 + a2 + a3)


def _angular_mean(kernel, rho: np.ndarray, R: float, n_phi: int) -> np.ndarray:
    """Mean over the circle of radius ``rho`` (about the origin) of a kernel
    of the distance to (R, 0)."""
    if R == 0.0:
        return kernel(rho)
    phi = (np.arange(n_phi) + 0.5) * (2.0 * math.pi / n_phi)
    d = np.sqrt(
        rho[:, None] ** 2 + R * R - 2.0 * rho[:, None] * R * np.cos(phi)[None, :]
    )
    return kernel(d).mean(axis=1)


def matern_pair_integral(
    kernel: Callable[[np.ndarray], np.ndarray],
    *,
    a: float = 1.0,
    R: float = 0.0,
    n_phi: int = 128,
    rel_tol: float = 1e-10,
) -> float:
    """int_{R^2} rho2tilde(|u|) K(dist(a u, (R, 0))) du over scaled positions u.

    The second-order scaled density vanishes inside the unit hard core and is
    exactly 1/pi^2 beyond distance 2; the integrand is split there.
    """

    def f(u):
        u_arr = np.asarray([u], float)
        rho2 = matern_rho2_scaled(u_arr)
        kbar = _angular_mean(kernel, a * u_arr, R, n_phi)
        return float(u * rho2[0] * kbar[0])

    total = 0.0
    part, _ = integrate.quad(f, 1.0, 2.0, epsabs=1e-14, epsrel=rel_tol, limit=200)
    total += part
    upper = 2.0
    while True:
        nxt = upper * 4.0
        part, _ = integrate.quad(f, upper, nxt, epsabs=1e-14, epsrel=rel_tol, limit=200)
        total += part
        upper = nxt
        if abs(part) < rel_tol * max(abs(total), 1e-300) or upper > 1e9:
            break
    return 2.0 * math.pi * total


def _gauss_panels(edges: np.ndarray, n_per: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n_per)
    nodes, weights = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
        nodes.append(mid + half * x)
        weights.append(half * w)
    return np.concatenate(nodes), np.concatenate(weights)


def _triple_radial_grid(
    kernel, a: float, rel_tol: float, n_per: int
) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss grid on [1, U]: panels [1, 1.5, 2] then doubling,
    extended until the running weight u |k(a u)| says the per-axis tail is
    below ``rel_tol`` of the accumulated mass."""
    edges = [1.0, 1.5, 2.0]
    acc = 0.0
    probes = np.linspace(1.05, 2.0, 8)
    acc += float(np.sum(probes * np.abs(kernel(a * probes)))) * (1.0 / 8.0)
    upper = 2.0
    while upper < 2e4:
        nxt = upper * 2.0
        mids = np.linspace(upper, nxt, 4)
        dw = float(np.sum(mids * np.abs(kernel(a * mids)))) * (nxt - upper) / 4.0
        edges.append(nxt)
        acc += dw
        upper = nxt
        # crude geometric continuation of the tail
        if dw < rel_tol * max(acc, 1e-300):
            break
    return _gauss_panels(np.asarray(edges), n_per)


def matern_triple_integral(
    kernel_f: Callable[[np.ndarray], np.ndarray],
    kernel_g: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    *,
    a: float = 1.0,
    R: float = 0.0,
    n_phi: int = 128,
    n_psi: int = 256,
    n_radial_per_panel: int = 16,
    rel_tol: float = 1e-6,
) -> float:
    """int int rho3tilde(u, v) f(dist(a u, r)) g(dist(a v, r)) du dv.

    Radial directions use composite Gauss panels; the two circle integrals
    reduce to a circular cross-correlation of the angular kernel profiles
    against the relative-angle dependence of the third-order density. The
    density grid is evaluated in row blocks to bound memory.
    """
    if kernel_g is None:
        kernel_g = kernel_f
    s, ws = _triple_radial_grid(kernel_f, a, rel_tol, n_radial_per_panel)
    m = s.size
    psi = (np.arange(n_psi) + 0.5) * (2.0 * math.pi / n_psi)
    dpsi = 2.0 * math.pi / n_psi

    if R == 0.0:
        corr_needed = False
        fbar = kernel_f(a * s)
        gbar = kernel_g(a * s)
    else:
        corr_needed = True
        phi = np.arange(n_phi) * (2.0 * math.pi / n_phi)
        dphi = 2.0 * math.pi / n_phi
        dmat = np.sqrt(
            (a * s[:, None]) ** 2 + R * R - 2.0 * a * s[:, None] * R * np.cos(phi)[None, :]
        )
        fvals = kernel_f(dmat)  # (m, n_phi)
        gvals = kernel_g(dmat)
        F = np.fft.rfft(fvals, axis=1)
        G = np.fft.rfft(gvals, axis=1)
        pos = psi / (2.0 * math.pi) * n_phi
        i0 = np.floor(pos).astype(int) % n_phi
        i1 = (i0 + 1) % n_phi
        frac = pos - np.floor(pos)

    total = 0.0
    block = max(1, int(4_000_000 / (m * n_psi)))
    for lo in range(0, m, block):
        hi = min(lo + block, m)
        rho3 = matern_rho3_scaled(
            s[lo:hi, None, None], s[None, :, None], psi[None, None, :]
        )
        if not corr_needed:
            ang = rho3.sum(axis=2) * dpsi * (2.0 * math.pi)
            core = (fbar[lo:hi, None] * gbar[None, :]) * ang
        else:
            # circular cross-correlation in the angle: C[k] = sum_j f_j g_{j+k}
            corr = np.fft.irfft(
                np.conj(F[lo:hi])[:, None, :] * G[None, :, :], n=n_phi, axis=2
            )
            corr *= dphi
            corr_psi = corr[:, :, i0] * (1.0 - frac) + corr[:, :, i1] * frac
            core = (rho3 * corr_psi).sum(axis=2) * dpsi
        w2 = (ws[lo:hi] * s[lo:hi])[:, None] * (ws * s)[None, :]
        total += float((core * w2).sum())
    return total
