"""Independent reference computations used by several test modules."""

import numpy as np


def entropy_nats(p, m):
    r = 1.0 - p - m
    out = 0.0
    for x in (p, m, r):
        out = out - np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)
    return out


def grid_minimize(ip, im, ix, lam, levels=12, n=81):
    """Minimise ``1/2 b I b^T - lam H(b)`` over the simplex by a zooming grid in log-rate space."""
    lo_p, hi_p = -60.0, np.log(0.999)
    lo_m, hi_m = -60.0, np.log(0.999)

    def objective(tp, tm):
        p, m = np.exp(tp), np.exp(tm)
        ok = p + m < 1
        val = 0.5 * (ip * p * p + 2 * ix * p * m + im * m * m) - lam * entropy_nats(np.where(ok, p, 0), np.where(ok, m, 0))
        return np.where(ok, val, np.inf)

    best = None
    for _ in range(levels):
        tp, tm = np.meshgrid(np.linspace(lo_p, hi_p, n), np.linspace(lo_m, hi_m, n), indexing="ij")
        g = objective(tp, tm)
        i, j = np.unravel_index(np.argmin(g), g.shape)
        best = (float(np.exp(tp[i, j])), float(np.exp(tm[i, j])), float(g[i, j]))
        sp = (hi_p - lo_p) / (n - 1) * 3
        sm = (hi_m - lo_m) / (n - 1) * 3
        lo_p, hi_p = tp[i, j] - sp, min(tp[i, j] + sp, np.log(0.9999))
        lo_m, hi_m = tm[i, j] - sm, min(tm[i, j] + sm, np.log(0.9999))
    return best


def objective(ip, im, ix, lam, p, m):
    return 0.5 * (ip * p * p + 2 * ix * p * m + im * m * m) - lam * entropy_nats(p, m)
