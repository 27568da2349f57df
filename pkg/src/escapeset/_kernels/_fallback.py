"""Pure numpy versions of the compiled kernels.

Same signatures and return conventions as ``_core``. The RK4 loop is
vectorized across initial conditions instead of over steps, so it is
usable for batches but much slower for single long trajectories.
"""

from __future__ import annotations

import numpy as np


def _spiral(y: np.ndarray) -> np.ndarray:
    r2 = (y * y).sum(axis=1)
    out = np.empty_like(y)
    out[:, 0] = y[:, 1] + y[:, 0] * (1.0 - r2)
    out[:, 1] = -y[:, 0] + y[:, 1] * (1.0 - r2)
    return out


def _r3saddle(y: np.ndarray) -> np.ndarray:
    x, yy, z = y[:, 0], y[:, 1], y[:, 2]
    big = x * x + yy * yy + z * z + 1.0
    out = np.empty_like(y)
    out[:, 0] = 2.0 * x * z / big - yy
    out[:, 1] = 2.0 * yy * z / big + x
    out[:, 2] = (z * z - x * x - yy * yy + 1.0) / big
    return out


def _radial(y: np.ndarray) -> np.ndarray:
    return y * (1.0 - y * y)


FIELDS = {0: _spiral, 1: _r3saddle, 2: _radial}


def rk4_generic(field, y0, h, n_samples, steps_per_sample, r_div):
    """Fixed-step RK4 for a vectorized field ``f(Y) -> dY`` with ``Y`` of shape (n, d).

    Returns ``(samples, div)`` where ``samples`` has shape (n, n_samples + 1, d)
    and holds NaN after divergence, and ``div[p]`` is the step index at which
    point ``p`` left the ball of radius ``r_div`` (or -1).
    """
    y = np.array(y0, dtype=float, copy=True)
    n, d = y.shape
    out = np.full((n, n_samples + 1, d), np.nan)
    div = np.full(n, -1, dtype=np.int64)
    out[:, 0] = y
    alive = np.ones(n, dtype=bool)
    lim2 = r_div * r_div
    with np.errstate(over="ignore", invalid="ignore"):
        for s in range(1, n_samples + 1):
            for k in range(steps_per_sample):
                if not alive.any():
                    return out, div
                ya = y[alive]
                k1 = field(ya)
                k2 = field(ya + 0.5 * h * k1)
                k3 = field(ya + 0.5 * h * k2)
                k4 = field(ya + h * k3)
                ya = ya + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                y[alive] = ya
                r2 = (ya * ya).sum(axis=1)
                bad = ~np.isfinite(r2) | (r2 > lim2)
                if bad.any():
                    idx = np.flatnonzero(alive)[bad]
                    div[idx] = (s - 1) * steps_per_sample + k + 1
                    alive[idx] = False
            out[alive, s] = y[alive]
    return out, div


def rk4_samples(code, y0, h, n_samples, steps_per_sample, r_div):
    return rk4_generic(FIELDS[code], y0, h, n_samples, steps_per_sample, r_div)


def pair_distances(a, b):
    """All ``|a_i - b_k|``, scaled per pair like the compiled kernel so that
    distinct points never get distance 0 through underflow."""
    diff = np.asarray(a, dtype=float)[:, None, :] - np.asarray(b, dtype=float)[None, :, :]
    m = np.abs(diff).max(axis=2)
    with np.errstate(invalid="ignore"):
        q = diff / np.where((m == 0) | np.isinf(m), 1.0, m)[..., None]
    acc = np.zeros(m.shape)
    for j in range(diff.shape[2]):  # same summation order as the compiled loop
        acc += q[..., j] * q[..., j]
    return np.where((m == 0) | np.isinf(m), m, m * np.sqrt(acc))


def hausdorff(a, b):
    d = pair_distances(a, b)
    return float(max(d.min(axis=1).max(), d.min(axis=0).max()))


def greedy_cluster(pts, eps):
    pts = np.asarray(pts, dtype=float)
    n = pts.shape[0]
    labels = np.empty(n, dtype=np.int64)
    centers: list[int] = []
    eps2 = eps * eps
    cpts = np.empty_like(pts)
    for i in range(n):
        if centers:
            diff = cpts[: len(centers)] - pts[i]
            hit = np.flatnonzero((diff * diff).sum(axis=1) <= eps2)
            if hit.size:
                labels[i] = hit[0]
                continue
        cpts[len(centers)] = pts[i]
        labels[i] = len(centers)
        centers.append(i)
    return np.asarray(centers, dtype=np.int64), labels
