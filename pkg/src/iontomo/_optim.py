"""Multistart local search shared by the estimators and the synthesizers."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

XATOL = 1e-9
FATOL = 1e-12


@dataclass
class LocalResult:
    x: np.ndarray
    fun: float
    start_index: int
    nfev: int
    success: bool


def nelder_mead(fun, x0, bounds=None, maxiter=None, xatol=XATOL, fatol=FATOL):
    """Bounded Nelder-Mead; scipy clips the simplex to ``bounds`` coordinatewise."""
    x0 = np.asarray(x0, dtype=float)
    if bounds is not None:
        lo, hi = np.asarray(bounds, dtype=float).T
        x0 = np.clip(x0, lo, hi)
    n = len(x0)
    return minimize(
        fun,
        x0,
        method="Nelder-Mead",
        bounds=bounds,
        options={"xatol": xatol, "fatol": fatol, "maxiter": maxiter or 400 * n, "maxfev": 800 * n, "adaptive": n > 4},
    )


def multistart(
    fun: Callable[[np.ndarray], float],
    starts: Sequence[Sequence[float]],
    bounds=None,
    polish: Callable[[np.ndarray], np.ndarray] | None = None,
    stop_below: float | None = None,
) -> tuple[LocalResult, list[LocalResult]]:
    """Run a simplex search from every start, optionally polish, keep the best.

    Ties are broken by the lower start index, so the reduction is
    deterministic. With ``stop_below`` the remaining starts are skipped once
    an objective value at or below it is reached.
    """
    results = []
    for i, x0 in enumerate(starts):
        r = nelder_mead(fun, x0, bounds=bounds)
        x = r.x
        if polish is not None:
            x = polish(x)
        f = float(fun(x))
        if not np.isfinite(f) or (r.fun < f):
            x, f = r.x, float(r.fun)
        results.append(LocalResult(np.asarray(x, dtype=float), f, i, int(r.nfev), bool(np.isfinite(f))))
        if stop_below is not None and f <= stop_below:
            break
    ok = [r for r in results if r.success]
    if not ok:
        return None, results
    best = min(ok, key=lambda r: (r.fun, r.start_index))
    return best, results
