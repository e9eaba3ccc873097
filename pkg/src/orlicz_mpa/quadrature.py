"""Composite Gauss-Legendre quadrature and bracketing root/extremum helpers.

Every N-function in the package is tabulated with these rules, so they are
vectorised over many panels (or many roots) at once.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

GL_ORDER = 16
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(GL_ORDER)

ArrayFn = Callable[[np.ndarray], np.ndarray]


def gauss_panels(f: ArrayFn, a, b) -> np.ndarray:
    """16-point Gauss-Legendre estimate on each panel [a_k, b_k] (broadcast)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    x = mid[..., None] + half[..., None] * _GL_NODES
    return half * np.sum(f(x) * _GL_WEIGHTS, axis=-1)


def integrate(f: ArrayFn, a: float, b: float, tol: float = 1e-11,
              max_level: int = 16) -> float:
    """Composite Gauss-Legendre with panel halving.

    Panels are halved until two successive composite estimates agree to
    ``tol`` (relative, with an absolute floor at ``tol * 1e-300``).
    """
    if a == b:
        return 0.0
    prev = float(gauss_panels(f, a, b))
    for level in range(1, max_level + 1):
        edges = np.linspace(a, b, 2**level + 1)
        cur = float(np.sum(gauss_panels(f, edges[:-1], edges[1:])))
        if abs(cur - prev) <= tol * max(abs(cur), 1e-300):
            return cur
        prev = cur
    raise RuntimeError(f"quadrature on [{a}, {b}] did not reach tol={tol}")


def integrate_graded(f: ArrayFn, a: float, b: float, tol: float = 1e-11,
                     ratio: float = 0.5, levels: int = 60) -> float:
    """Integrate on [a, b] with a geometric mesh graded toward ``a``.

    Used for integrands with an integrable power singularity at ``a``; the
    innermost remainder [a, a + (b-a) ratio**levels] is treated with a
    power-law tail fitted from the last two panels.
    """
    width = b - a
    edges = a + width * ratio ** np.arange(levels, -1, -1, dtype=float)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        total += integrate(f, lo, hi, tol=tol)
    total += power_tail(f, a, edges[0], edges[1])
    return total


def power_tail(f: ArrayFn, a: float, x0: float, x1: float) -> float:
    """Estimate the integral of f on [a, x0] assuming f(x) ~ C (x - a)**g."""
    f0 = float(f(np.array([x0]))[0])
    f1 = float(f(np.array([x1]))[0])
    if f0 == 0.0 or f1 == 0.0:
        return 0.0
    g = np.log(f1 / f0) / np.log((x1 - a) / (x0 - a))
    if g <= -1.0:
        raise ValueError("non-integrable singularity (local exponent <= -1)")
    return (x0 - a) * f0 / (g + 1.0)


def bisect_increasing(g: ArrayFn, target, lo, hi, rtol: float = 1e-12,
                      max_iter: int = 200) -> np.ndarray:
    """Vectorised bisection for g(x) = target with g strictly increasing.

    ``lo``/``hi`` must bracket the roots elementwise. Bisection runs in
    log-space when the bracket is strictly positive, which keeps the relative
    tolerance meaningful across many decades.
    """
    target = np.asarray(target, dtype=float)
    lo = np.broadcast_to(np.asarray(lo, dtype=float), target.shape).copy()
    hi = np.broadcast_to(np.asarray(hi, dtype=float), target.shape).copy()
    logspace = bool(np.all(lo > 0))
    for _ in range(max_iter):
        mid = np.sqrt(lo * hi) if logspace else 0.5 * (lo + hi)
        below = g(mid) < target
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
        if np.all(hi - lo <= rtol * np.abs(hi)):
            break
    return 0.5 * (lo + hi)


def golden_max(f: Callable[[float], float], a: float, b: float,
               tol: float = 1e-10, max_iter: int = 200) -> tuple[float, float]:
    """Golden-section search for the maximum of a unimodal f on [a, b]."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if abs(b - a) <= tol * max(1.0, abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    x = 0.5 * (a + b)
    return x, f(x)
