"""Numerical mountain-pass solver.

A discrete path joins the origin to a valley point with negative energy. Each
iteration takes the highest node, slides it to the energy maximum along its
two adjacent segments, and pushes it one Armijo step downhill. When the
pushed node's residual is small it is a mountain-pass critical point and its
energy estimates the min-max level.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .energy import Problem, bump
from .field import DiscreteField
from .quadrature import golden_max


class PathCollapse(RuntimeError):
    """The highest node reached an endpoint of the path."""


class NoValley(RuntimeError):
    def __init__(self, message, lam_success=None):
        super().__init__(message if lam_success is None else
                         f"{message}; smallest tested lambda with a valley: {lam_success:g}")
        self.lam_success = lam_success


@dataclass(frozen=True)
class SolverConfig:
    path_nodes: int = 16
    descent_step: float = 0.1
    max_iters: int = 2000
    residual_tol: float = 1e-5
    lam: Optional[float] = None
    max_step: float = 1.0
    armijo_c: float = 1e-4
    reparam_every: int = 25
    precondition: bool = True
    # the peak node is frozen once the level moves by less than this
    # (relative) over reparam_every iterations
    climb_rtol: float = 1e-3

    def __post_init__(self):
        if self.path_nodes < 16:
            raise ValueError("path_nodes must be at least 16")
        for name in ("descent_step", "max_iters", "residual_tol", "max_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.residual_tol < 1:
            raise ValueError("residual_tol must be below 1")


@dataclass
class PathState:
    nodes: list
    energies: np.ndarray

    def __post_init__(self):
        if len(self.nodes) < 16:
            raise ValueError("a path needs at least 16 nodes")


@dataclass
class MPResult:
    x: np.ndarray
    level: float
    residual: float
    iterations: int
    converged: bool
    path: PathState
    history: list = field(default_factory=list)


def _line_max(energy, gradient, x, u, lo, hi, tol=1e-10):
    """Maximise energy on x + tau u for tau in [lo, hi] (lo < 0 < hi).

    When the directional derivative changes sign from + to - on the interval
    its root is found by Brent's method, which locates the maximiser to
    machine precision; comparing energy values (golden section) is only the
    fallback because it cannot resolve the position better than sqrt(eps).
    """
    slope = lambda s: float(np.dot(gradient(x + s * u), u))
    if slope(lo) > 0 > slope(hi):
        tau = brentq(slope, lo, hi, xtol=1e-15 * (hi - lo), rtol=4 * np.finfo(float).eps)
        z = x + tau * u
        return z, energy(z)
    tau, val = golden_max(lambda s: energy(x + s * u), lo, hi, tol=tol)
    return x + tau * u, val


def _reparametrize(nodes):
    """Redistribute nodes uniformly in arc length along the polyline."""
    pts = np.array(nodes)
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return list(pts)
    target = np.linspace(0.0, s[-1], len(nodes))
    out = [pts[0]]
    for tt in target[1:-1]:
        j = min(np.searchsorted(s, tt, side="right") - 1, len(seg) - 1)
        frac = (tt - s[j]) / seg[j] if seg[j] > 0 else 0.0
        out.append(pts[j] + frac * (pts[j + 1] - pts[j]))
    out.append(pts[-1])
    return out


def mountain_pass(energy: Callable, gradient: Callable, start, end,
                  cfg: SolverConfig = SolverConfig(),
                  precondition: Optional[Callable] = None,
                  residual_norm: Optional[Callable] = None,
                  initial_path=None) -> MPResult:
    """Generic path-based mountain-pass iteration on flat vectors.

    ``precondition(x)`` returns a function applying an SPD inverse to a
    gradient (identity when None). ``residual_norm(x)`` defaults to the sup
    of the gradient.
    """
    start, end = np.asarray(start, float), np.asarray(end, float)
    if energy(end) >= energy(start):
        raise ValueError("path end must have lower energy than the start")
    residual_norm = residual_norm or (lambda x: float(np.max(np.abs(gradient(x)))))
    if initial_path is None:
        taus = np.linspace(0.0, 1.0, cfg.path_nodes)
        nodes = [start + t * (end - start) for t in taus]
    else:
        nodes = [np.asarray(p, float) for p in initial_path]
    E = np.array([energy(p) for p in nodes])
    step = cfg.descent_step
    history = []
    res = np.inf
    k = 0
    best = (np.inf, None, None)  # lowest residual seen: (residual, point, level)
    climbing = None
    for it in range(1, cfg.max_iters + 1):
        if climbing is None:
            k = int(np.argmax(E))  # lowest index on ties
            if k == 0 or k == len(nodes) - 1:
                raise PathCollapse(f"maximum at path endpoint {k} after {it - 1} iterations")
            if it > cfg.reparam_every:
                old = history[-cfg.reparam_every][1]
                if abs(E[k] - old) <= cfg.climb_rtol * abs(old):
                    # level has settled: refine this peak alone from now on
                    climbing = k
        else:
            k = climbing
        # slide the peak to the energy maximum along the local path direction
        tan = nodes[k + 1] - nodes[k - 1]
        tn = float(np.linalg.norm(tan))
        x = nodes[k]
        reach = 0.5 * min(np.linalg.norm(x - nodes[k - 1]), np.linalg.norm(x - nodes[k + 1]))
        if tn > 0 and reach > 0:
            tan = tan / tn
            z, ez = _line_max(energy, gradient, x, tan, -reach, reach)
            if ez > E[k]:
                nodes[k], E[k] = z, ez
            x = nodes[k]
            reach = 0.5 * min(np.linalg.norm(x - nodes[k - 1]), np.linalg.norm(x - nodes[k + 1]))
        g = gradient(x)
        res = residual_norm(x)
        history.append((it, float(E[k]), res))
        if res < best[0]:
            best = (res, x.copy(), float(E[k]))
        if res <= cfg.residual_tol:
            return MPResult(x, float(E[k]), res, it, True, PathState(nodes, E), history)
        d = -(precondition(x)(g) if precondition is not None else g)
        # drop the component along the path; the peak already maximises along it
        if tn > 0:
            dp = d - np.dot(d, tan) * tan
            if np.linalg.norm(dp) > 1e-3 * np.linalg.norm(d):
                d = dp
        slope = float(np.dot(g, d))
        if slope >= 0:
            d, slope = -g, -float(np.dot(g, g))
        # never move further than half the distance to a neighbour, so the
        # polyline cannot jump over a ridge between two nodes
        dn = float(np.linalg.norm(d))
        if dn > 0 and step * dn > reach:
            step = reach / dn
        accepted = False
        for _ in range(60):
            trial = x + step * d
            et = energy(trial)
            if et <= E[k] + cfg.armijo_c * step * slope:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # no decrease possible at round-off scale
            return MPResult(best[1], best[2], best[0], it, False, PathState(nodes, E), history)
        nodes[k], E[k] = trial, et
        step = min(2 * step, cfg.max_step)
        if climbing is None and it % cfg.reparam_every == 0:
            nodes = _reparametrize(nodes)
            E = np.array([energy(p) for p in nodes])
    # not converged: report the point with the smallest residual seen
    return MPResult(best[1], best[2], best[0], cfg.max_iters, False, PathState(nodes, E), history)


# PDE layer

@dataclass
class SolverResult:
    u: DiscreteField
    v: Optional[DiscreteField]
    level: float
    residual_sup: float
    iterations: int
    sup_norm: float
    converged: bool
    lam: float
    valley_scale: float
    path_max_bound: float

    def summary(self) -> str:
        return (f"lambda={self.lam:.6g} level={self.level:.10g} residual={self.residual_sup:.3e} "
                f"iterations={self.iterations} sup={self.sup_norm:.6g} converged={self.converged}")


def _sup_cap(p: Problem) -> float:
    """Largest admissible sup-norm for the valley point."""
    cut = getattr(p.modified, "cutoff", None)
    if p.ncomp == 1:
        half = cut.delta / 2 if cut is not None else 1.0
        return 0.99 * min(1.0, half)
    # pair s (b, b) has pointwise norm s sqrt(2) b
    return 0.99 / np.sqrt(2.0)


def _profile(p: Problem, b_state):
    return lambda s: p.energy(s * b_state)


def initial_valley_point(p: Problem, max_doublings: int = 40):
    """Scale s of the bump pair s (b, b) with negative energy and small sup.

    Returns (state, s). The 1-D profile g(s) = E(s b) is maximised, then its
    zero crossing beyond the maximiser is bracketed; the valley point sits a
    quarter beyond the crossing (capped by the sup-norm limit).
    """
    b = bump(p.grid)
    b_state = p.pack([b] * p.ncomp)
    cap = _sup_cap(p)
    g = _profile(p, b_state)
    if p.lam > 0:
        s_max, g_max = golden_max(g, 0.0, cap, tol=1e-12)
        if g(cap) < 0 and s_max < cap:
            s_cross = brentq(g, s_max, cap, xtol=1e-14)
            s = min(cap, 1.25 * s_cross)
            if g(s) < 0:
                return s * b_state, s
    lam = max(p.lam, 1e-3)
    for _ in range(max_doublings):
        lam *= 2
        q = p.with_lambda(lam)
        if q.energy(cap * b_state) < 0:
            raise NoValley(f"no valley point at lambda={p.lam:g}", lam)
    raise NoValley(f"no valley point at lambda={p.lam:g}")


def run_mountain_pass(p: Problem, cfg: SolverConfig = SolverConfig()) -> SolverResult:
    end, s_end = initial_valley_point(p)
    start = np.zeros_like(end)
    pre = (lambda x: p.preconditioner(x)) if cfg.precondition else None
    res = mountain_pass(p.energy, p.gradient, start, end, cfg, precondition=pre,
                        residual_norm=p.scaled_residual)
    fields = p.fields(res.x)
    pair = np.sqrt(sum(f.values**2 for f in fields))
    # max of E along the straight path through the valley point
    _, line_max = golden_max(lambda s: p.energy(s * end), 0.0, 1.0, tol=1e-12)
    return SolverResult(
        u=fields[0], v=fields[1] if p.ncomp == 2 else None, level=res.level,
        residual_sup=res.residual, iterations=res.iterations,
        sup_norm=float(pair.max()), converged=res.converged, lam=p.lam,
        valley_scale=s_end, path_max_bound=line_max)
