"""Bracketed root finders used by the utility and allocation code.

``newton_bisect`` runs element-wise over arrays (one root per channel);
``monotone_search`` solves a scalar monotone equation in log-space and
keeps the bracket so callers can return the feasible side.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import RootFindingError

DEFAULT_TOL = 1e-10
DEFAULT_MAXITER = 200
STEP_RTOL = 1e-10
_EPS = np.finfo(float).eps
_TINY = np.finfo(float).tiny


def newton_bisect(fdf: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]],
                  lo, hi, x0=None, tol: float = DEFAULT_TOL,
                  maxiter: int = DEFAULT_MAXITER, scale=1.0) -> np.ndarray:
    """Element-wise Newton-Raphson with a bisection safeguard.

    Parameters
    ----------
    fdf : callable
        Maps an array ``x`` to ``(f(x), f'(x))`` of the same shape.
    lo, hi : array_like
        Brackets; ``f(lo)`` and ``f(hi)`` must differ in sign (or be zero).
    x0 : array_like, optional
        Starting points inside the brackets (default: ``lo``).
    tol : float
        Accepted residual ``|f(x)| <= tol * scale`` at the returned root.
    scale : array_like
        Magnitude of ``f`` used to make ``tol`` relative.

    Raises
    ------
    RootFindingError
        If a bracket is invalid, the iteration cap is hit, or the final
        residual exceeds ``tol``.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    lo, hi = np.broadcast_arrays(lo, hi)
    lo, hi = lo.copy(), hi.copy()
    f_lo, _ = fdf(lo)
    f_hi, _ = fdf(hi)
    if np.any(f_lo * f_hi > 0):
        raise RootFindingError("root not bracketed")
    rising = f_lo <= f_hi
    x = lo.copy() if x0 is None else np.clip(np.asarray(x0, dtype=float), lo, hi)
    active = np.ones(x.shape, dtype=bool)
    f = np.zeros_like(x)
    fscale = np.maximum(1.0, np.abs(scale))
    for _ in range(maxiter):
        f, df = fdf(x)
        neg = f < 0
        below = np.where(rising, neg, ~neg)
        lo = np.where(active & below & (f != 0), x, lo)
        hi = np.where(active & ~below & (f != 0), x, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / df
            x_new = x - step
        ok = np.isfinite(x_new) & (x_new >= lo) & (x_new <= hi)
        x_new = np.where(ok, x_new, 0.5 * (lo + hi))
        # relative to |x| so that roots far below 1 keep full precision;
        # a Newton step below STEP_RTOL leaves a quadratically small error,
        # and smaller steps only chase rounding noise in f
        floor = 4 * _EPS * np.abs(x) + _TINY
        tiny = np.abs(x_new - x) <= STEP_RTOL * np.abs(x) + _TINY
        exact = np.abs(f) <= 4 * _EPS * fscale
        x = np.where(active & ~exact, x_new, x)
        active = active & ~(exact | (tiny & ok) | (hi - lo <= floor))
        if not np.any(active):
            break
    else:
        raise RootFindingError(f"no convergence in {maxiter} iterations")
    f, _ = fdf(x)
    if np.any(np.abs(f) > tol * fscale):
        raise RootFindingError(f"root residual {np.max(np.abs(f)):.3g} above tolerance")
    return x


def bisect(f: Callable[[float], float], lo: float, hi: float, xtol: float = 1e-13,
           maxiter: int = 400) -> float:
    """Plain bisection on a sign change; used as an independent check."""
    f_lo = f(lo)
    if f_lo * f(hi) > 0:
        raise RootFindingError("root not bracketed")
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        f_mid = f(mid)
        if f_mid == 0 or hi - lo <= xtol * max(1.0, abs(mid)):
            return mid
        if (f_mid < 0) == (f_lo < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def monotone_search(func: Callable[[float], float], t_lo: float, t_hi: float,
                    accept: Callable[[float, float], bool], maxiter: int = 200,
                    grow: float = math.log(10.0), max_expand: int = 60):
    """Solve ``func(t) = 0`` for a nonincreasing ``func`` with bracket expansion.

    The bracket ``[t_lo, t_hi]`` is widened (each step twice the previous) until
    ``func(t_lo) >= 0 >= func(t_hi)``, then narrowed by false position with
    Anderson-Bjorck weighting and a periodic bisection step.  Iteration stops when
    ``accept(t, f)`` holds at an evaluated point.

    Returns
    -------
    (t, f) : tuple of float
        The accepted point and its value.
    """
    f_lo, f_hi = func(t_lo), func(t_hi)
    n = 0
    while f_lo < 0:
        if accept(t_lo, f_lo):
            return t_lo, f_lo
        t_hi, f_hi = t_lo, f_lo
        t_lo -= grow * 2.0**n
        f_lo = func(t_lo)
        n += 1
        if n > max_expand:
            raise RootFindingError("could not bracket from below")
    n = 0
    while f_hi > 0:
        if accept(t_hi, f_hi):
            return t_hi, f_hi
        t_lo, f_lo = t_hi, f_hi
        t_hi += grow * 2.0**n
        f_hi = func(t_hi)
        n += 1
        if n > max_expand:
            raise RootFindingError("could not bracket from above")
    for t, f in ((t_hi, f_hi), (t_lo, f_lo)):
        if accept(t, f):
            return t, f
    side = 0
    for it in range(maxiter):
        if it % 8 == 7 or f_lo == f_hi:
            t = 0.5 * (t_lo + t_hi)
        else:
            t = t_hi - f_hi * (t_hi - t_lo) / (f_hi - f_lo)
            if not t_lo < t < t_hi:
                t = 0.5 * (t_lo + t_hi)
        f = func(t)
        if accept(t, f):
            return t, f
        # Anderson-Bjorck weighting of the retained end
        if f > 0:
            if side == 1:
                m = 1.0 - f / f_lo
                f_hi *= m if m > 0 else 0.5
            t_lo, f_lo = t, f
            side = 1
        else:
            if side == -1:
                m = 1.0 - f / f_hi
                f_lo *= m if m > 0 else 0.5
            t_hi, f_hi = t, f
            side = -1
        if t_hi - t_lo <= 1e-15 * max(1.0, abs(t)):
            raise RootFindingError("bracket collapsed without meeting the tolerance")
    raise RootFindingError(f"no convergence in {maxiter} iterations")
