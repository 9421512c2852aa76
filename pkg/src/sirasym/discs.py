"""Intersection areas of equal-radius discs.

Exact closed forms for one and two discs, an exact circular-polygon
evaluation for three, and a Monte-Carlo fallback with reported standard
error for four or more. All functions assume a common radius.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "lens_area",
    "lens_area_vec",
    "triple_area_vec",
    "disc_intersection_area",
    "disc_intersection_area_mc",
]

#: largest number of discs handled by the exact path
K_MAX_EXACT = 3

_EPS = 1e-12


def lens_area(d: float, radius: float = 1.0) -> float:
    """Area of the intersection of two discs of equal ``radius`` at center distance ``d``."""
    if d < 0:
        raise ValueError("center distance must be non-negative")
    return float(lens_area_vec(np.asarray(d, dtype=float), radius))


def lens_area_vec(d: np.ndarray, radius: float = 1.0) -> np.ndarray:
    """Vectorized :func:`lens_area`."""
    d = np.asarray(d, dtype=float)
    r = float(radius)
    out = np.zeros_like(d)
    m = d < 2.0 * r
    dm = d[m]
    half = np.clip(dm / (2.0 * r), 0.0, 1.0)
    out[m] = 2.0 * r * r * np.arccos(half) - 0.5 * dm * np.sqrt(
        np.maximum(4.0 * r * r - dm * dm, 0.0)
    )
    return out


def _circle_pair_points(c1: np.ndarray, c2: np.ndarray, r: float):
    """Intersection points of two equal-radius circles (assumes 0 < d < 2r)."""
    delta = c2 - c1
    d = np.linalg.norm(delta)
    mid = 0.5 * (c1 + c2)
    h2 = r * r - 0.25 * d * d
    h = np.sqrt(max(h2, 0.0))
    n = np.array([-delta[1], delta[0]]) / d
    return mid + h * n, mid - h * n


def _segment_area(phi: np.ndarray | float, r: float) -> np.ndarray | float:
    """Circular segment area for central angle ``phi``."""
    return 0.5 * r * r * (phi - np.sin(phi))


def triple_area_vec(
    x1: np.ndarray, y1: np.ndarray, x2: np.ndarray, y2: np.ndarray, radius: float = 1.0
) -> np.ndarray:
    """Area of B((x1,y1),r) ∩ B((x2,y2),r) ∩ B(o,r), vectorized over point arrays.

    The third disc is centered at the origin. Uses the exact classification:
    a pair-lens fully inside the third disc, a proper three-arc region
    (triangle of inner vertices plus three segments), or empty.
    """
    x1 = np.asarray(x1, float)
    y1 = np.asarray(y1, float)
    x2 = np.asarray(x2, float)
    y2 = np.asarray(y2, float)
    r = float(radius)
    shape = np.broadcast_shapes(x1.shape, y1.shape, x2.shape, y2.shape)
    x1, y1, x2, y2 = (np.broadcast_to(a, shape).ravel() for a in (x1, y1, x2, y2))
    n = x1.size

    cx = np.stack([x1, x2, np.zeros(n)])  # (3, n) disc centers
    cy = np.stack([y1, y2, np.zeros(n)])
    # pairwise center distances, pair order (0,1), (0,2), (1,2)
    pairs = [(0, 1), (0, 2), (1, 2)]
    d = np.stack([np.hypot(cx[i] - cx[j], cy[i] - cy[j]) for i, j in pairs])

    area = np.zeros(n)
    # coincident-center degeneracies reduce to a two-disc lens
    coincident = d < 1e-9 * r
    if np.any(coincident.any(axis=0)):
        for p, (i, j) in enumerate(pairs):
            k = 3 - i - j
            m = coincident[p] & (area == 0.0)
            if np.any(m):
                dk = np.hypot(cx[i][m] - cx[k][m], cy[i][m] - cy[k][m])
                area[m] = lens_area_vec(dk, r)
        handled = coincident.any(axis=0)
    else:
        handled = np.zeros(n, bool)

    overlap_all = (d < 2.0 * r).all(axis=0)
    todo = overlap_all & ~handled
    if not np.any(todo):
        return area.reshape(shape)

    idx = np.flatnonzero(todo)
    cxs, cys, ds = cx[:, idx], cy[:, idx], d[:, idx]
    m = idx.size

    # two intersection points per pair
    px = np.empty((3, 2, m))
    py = np.empty((3, 2, m))
    for p, (i, j) in enumerate(pairs):
        dx, dy = cxs[j] - cxs[i], cys[j] - cys[i]
        dd = ds[p]
        midx, midy = 0.5 * (cxs[i] + cxs[j]), 0.5 * (cys[i] + cys[j])
        h = np.sqrt(np.maximum(r * r - 0.25 * dd * dd, 0.0))
        nx, ny = -dy / dd, dx / dd
        px[p, 0], py[p, 0] = midx + h * nx, midy + h * ny
        px[p, 1], py[p, 1] = midx - h * nx, midy - h * ny

    tol = 1e-9 * r
    # inside[p, s] : point s of pair p lies inside the remaining disc
    inside = np.empty((3, 2, m), bool)
    for p, (i, j) in enumerate(pairs):
        k = 3 - i - j
        for s in (0, 1):
            inside[p, s] = (
                np.hypot(px[p, s] - cxs[k], py[p, s] - cys[k]) <= r + tol
            )

    n_in = inside.sum(axis=1)  # (3, m) points of each pair inside third disc

    sub = np.zeros(m)
    done = np.zeros(m, bool)
    # lens of one pair fully inside the remaining disc
    for p in range(3):
        sel = (n_in[p] == 2) & ~done
        if np.any(sel):
            sub[sel] = lens_area_vec(ds[p][sel], r)
            done[sel] = True

    # proper three-arc region: one inner vertex per pair
    proper = (n_in == 1).all(axis=0) & ~done
    if np.any(proper):
        q = np.flatnonzero(proper)
        which = np.argmax(inside[:, :, q], axis=1)  # (3, len(q))
        vx = np.take_along_axis(px[:, :, q], which[:, None, :], axis=1)[:, 0, :]
        vy = np.take_along_axis(py[:, :, q], which[:, None, :], axis=1)[:, 0, :]
        # vertices: row p is the inner point of pair p; the arc on circle k
        # connects the vertices of the two pairs containing k
        tri = 0.5 * np.abs(
            (vx[1] - vx[0]) * (vy[2] - vy[0]) - (vx[2] - vx[0]) * (vy[1] - vy[0])
        )
        seg = np.zeros(len(q))
        # circle k participates in pairs listing it; vertex of pair (i,j) is v[pair index]
        circle_pairs = {0: (0, 1), 1: (0, 2), 2: (1, 2)}
        for k in range(3):
            pa, pb = circle_pairs[k]
            ax, ay = vx[pa] - cxs[k][q], vy[pa] - cys[k][q]
            bx, by = vx[pb] - cxs[k][q], vy[pb] - cys[k][q]
            ta = np.arctan2(ay, ax)
            tb = np.arctan2(by, bx)
            dphi = np.mod(tb - ta, 2.0 * np.pi)
            # candidate arc midpoints on either side of the chord
            mid1 = ta + 0.5 * dphi
            mid2 = ta + 0.5 * dphi - np.pi
            phi1 = dphi
            phi2 = 2.0 * np.pi - dphi
            m1x = cxs[k][q] + r * np.cos(mid1)
            m1y = cys[k][q] + r * np.sin(mid1)
            ok1 = np.ones(len(q), bool)
            for kk in range(3):
                if kk == k:
                    continue
                ok1 &= np.hypot(m1x - cxs[kk][q], m1y - cys[kk][q]) <= r + tol
            phi = np.where(ok1, phi1, phi2)
            seg += _segment_area(phi, r)
        sub[q] = tri + seg
        done[q] = True

    area[idx] = sub
    return area.reshape(shape)


def disc_intersection_area_mc(
    centers: np.ndarray, radius: float, n_samples: int = 200_000, seed: int = 0
) -> tuple[float, float]:
    """Monte-Carlo estimate of the common intersection area with its standard error."""
    centers = np.atleast_2d(np.asarray(centers, float))
    r = float(radius)
    lo = (centers - r).max(axis=0)
    hi = (centers + r).min(axis=0)
    if np.any(hi <= lo):
        return 0.0, 0.0
    box = float(np.prod(hi - lo))
    rng = np.random.default_rng(seed)
    pts = rng.uniform(lo, hi, size=(n_samples, 2))
    inside = np.ones(n_samples, bool)
    for c in centers:
        inside &= ((pts - c) ** 2).sum(axis=1) <= r * r
    p = inside.mean()
    se = box * np.sqrt(max(p * (1.0 - p), 0.0) / n_samples)
    return box * p, se


def disc_intersection_area(
    centers,
    radius: float,
    *,
    mc_rel_err: float = 1e-3,
    seed: int = 0,
) -> float:
    """Area of the common intersection of equal-radius discs.

    Exact for up to three discs; beyond that a Monte-Carlo estimate is
    refined until its relative standard error is below ``mc_rel_err``
    (absolute floor 1e-6·πr² for near-empty intersections).
    """
    centers = np.atleast_2d(np.asarray(centers, float))
    if centers.shape[0] == 0:
        raise ValueError("at least one disc center is required")
    if radius <= 0:
        raise ValueError("radius must be positive")
    k = centers.shape[0]
    if k == 1:
        return float(np.pi * radius * radius)
    if k == 2:
        return lens_area(float(np.linalg.norm(centers[1] - centers[0])), radius)
    if k == 3:
        c0 = centers[2]
        a = triple_area_vec(
            np.array([centers[0, 0] - c0[0]]),
            np.array([centers[0, 1] - c0[1]]),
            np.array([centers[1, 0] - c0[0]]),
            np.array([centers[1, 1] - c0[1]]),
            radius,
        )
        return float(a[0])
    # k >= 4: Monte Carlo with target relative error
    n = 200_000
    floor = 1e-6 * np.pi * radius * radius
    for _ in range(8):
        area, se = disc_intersection_area_mc(centers, radius, n_samples=n, seed=seed)
        if se <= max(mc_rel_err * area, floor):
            return area
        n *= 4
    return area
