"""Grid search with golden-section refinement on a bounded interval."""

from __future__ import annotations

import numpy as np
from scipy import optimize


def grid_argmax(fn, lo=0.0, hi=1.0, resolution=10_000, candidates=(), refine=True,
                xtol=1e-8):
    """Maximize a scalar function on ``[lo, hi]``.

    The function is evaluated on ``resolution + 1`` equispaced points plus any
    ``candidates`` (atoms, breakpoints).  Ties are broken toward the smaller
    argument.  If the best point is an interior grid point the bracket around
    it is refined by golden-section search.

    Parameters
    ----------
    fn : callable
        Vectorized objective, ``fn(np.ndarray) -> np.ndarray``.
    lo, hi : float
        Search interval.
    resolution : int
        Number of grid panels.
    candidates : sequence of float
        Extra points that must be evaluated exactly.
    refine : bool
        Whether to run the golden-section refinement.
    xtol : float
        Refinement tolerance.

    Returns
    -------
    (float, float)
        Maximizer and maximum.
    """
    grid = np.linspace(lo, hi, int(resolution) + 1)
    extra = np.asarray([c for c in candidates if lo <= c <= hi], dtype=float)
    xs = np.unique(np.concatenate([grid, extra]))
    ys = np.asarray(fn(xs), dtype=float)
    ymax = np.nanmax(ys)
    tol = 1e-12 * max(1.0, abs(ymax))
    i = int(np.flatnonzero(ys >= ymax - tol)[0])
    best_x, best_y = float(xs[i]), float(ys[i])

    if refine and 0 < i < len(xs) - 1 and best_x not in set(extra.tolist()):
        a, b = float(xs[i - 1]), float(xs[i + 1])
        if ys[i] > ys[i - 1] and ys[i] > ys[i + 1]:
            def neg(x):
                return -float(np.asarray(fn(np.array([x])))[0])
            res = optimize.minimize_scalar(neg, bracket=(a, best_x, b), method="golden",
                                           tol=xtol)
            x = float(res.x)
            if a <= x <= b and -res.fun > best_y:
                best_x, best_y = x, float(-res.fun)
    return best_x, best_y
