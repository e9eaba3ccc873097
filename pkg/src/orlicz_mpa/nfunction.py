"""N-function calculus: primitives of growth kernels, indices, complements and
Sobolev conjugates.

An N-function is stored through three vectorised callables on t >= 0: the
value Phi(t), the derivative a(t) = Phi'(t) = t phi(t), and (optionally) the
inverse of the derivative. Everything else (inverse, index ratio, complement,
Sobolev conjugate) is derived from those.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional

import numpy as np

from .quadrature import bisect_increasing, gauss_panels, golden_max, power_tail

ArrayFn = Callable[[np.ndarray], np.ndarray]

PROBE_LO, PROBE_HI, PROBE_POINTS = 1e-8, 1e8, 4096


class KernelError(ValueError):
    """A growth kernel violates an admissibility condition."""

    def __init__(self, message, t=None):
        super().__init__(message if t is None else f"{message} (at t={t:.6g})")
        self.t = t


class HypothesisFailure(ValueError):
    """An index condition required by an operation does not hold."""


@dataclass(frozen=True)
class GrowthKernel:
    """The function phi with its admissibility data.

    ``antiderivative`` is the closed form of Phi(t) = int_0^t s phi(s) ds when
    known (power and polynomial kernels); otherwise Phi is tabulated by
    quadrature.
    """

    phi: ArrayFn
    q: Optional[float] = None
    l_claimed: Optional[float] = None
    antiderivative: Optional[ArrayFn] = None
    name: str = "phi"

    @classmethod
    def power(cls, p: float, scale: float = 1.0) -> "GrowthKernel":
        """Kernel with Phi(t) = scale * t**p / p."""
        return cls(
            phi=lambda t: scale * np.power(t, p - 2.0),
            q=scale,
            l_claimed=p,
            antiderivative=lambda t: scale * np.power(t, p) / p,
            name=f"{scale:g}*t^{p:g}/{p:g}",
        )

    @classmethod
    def polynomial(cls, coeffs: dict, name: str = "poly") -> "GrowthKernel":
        """phi(t) = sum c t**e over ``coeffs = {e: c}``."""
        items = sorted(coeffs.items())

        def phi(t):
            t = np.asarray(t, dtype=float)
            return sum(c * np.power(t, e) for e, c in items)

        def big_phi(t):
            t = np.asarray(t, dtype=float)
            return sum(c * np.power(t, e + 2.0) / (e + 2.0) for e, c in items)

        lowest = items[0][0] + 2.0
        return cls(phi=phi, q=items[0][1], l_claimed=lowest,
                   antiderivative=big_phi, name=name)

    def a(self, t):
        """t * phi(t), with the value 0 at t = 0."""
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = t * self.phi(t)
        return np.where(t > 0, out, 0.0)

    def check_monotone(self, lo=PROBE_LO, hi=PROBE_HI, points=2048):
        """Return the first probe point where t phi(t) fails to increase."""
        t = np.logspace(np.log10(lo), np.log10(hi), points)
        a = self.a(t)
        bad = np.nonzero(~(np.diff(a) > 0))[0]
        return None if bad.size == 0 else float(t[bad[0] + 1])


class _Tabulated:
    """Increasing integral F(T) = int_0^T f on a dyadic node table.

    F at arbitrary T is the cumulative table value at the dyadic node below T
    plus one 16-point Gauss-Legendre piece, which keeps relative accuracy near
    machine precision for the smooth-in-log integrands used here.
    """

    def __init__(self, f: ArrayFn, jmin: int, jmax: int):
        self.f = f
        self.nodes = np.ldexp(1.0, np.arange(jmin, jmax + 1))
        with np.errstate(over="ignore", under="ignore"):
            pieces = gauss_panels(f, self.nodes[:-1], self.nodes[1:])
        head = power_tail(f, 0.0, self.nodes[0], self.nodes[1])
        self.cum = head + np.concatenate([[0.0], np.cumsum(pieces)])

    def __call__(self, T):
        T = np.asarray(T, dtype=float)
        flat = np.atleast_1d(T).ravel()
        out = np.zeros_like(flat)
        pos = flat > 0
        tp = flat[pos]
        k = np.clip(np.searchsorted(self.nodes, tp, side="right") - 1, -1,
                    len(self.nodes) - 1)
        # past the table the integral exceeds the float range, like np.power
        beyond = tp > self.nodes[-1] * 2
        k = np.where(beyond, len(self.nodes) - 1, k)
        inside = k >= 0
        vals = np.empty_like(tp)
        kk = k[inside]
        with np.errstate(over="ignore", invalid="ignore"):
            vals[inside] = self.cum[kk] + gauss_panels(self.f, self.nodes[kk], tp[inside])
        small = ~inside
        if np.any(small):
            # below the first node the integrand follows a power law
            t0, t1 = self.nodes[0], self.nodes[1]
            g = np.log(self.f(np.array([t1]))[0] / self.f(np.array([t0]))[0]) / np.log(2.0)
            vals[small] = self.cum[0] * (tp[small] / t0) ** (g + 1.0)
        vals[beyond] = np.inf
        out[pos] = vals
        return out.reshape(T.shape) if T.ndim else out[0]

    def inverse(self, x):
        x = np.asarray(x, dtype=float)
        flat = np.atleast_1d(x).ravel()
        k = np.clip(np.searchsorted(self.cum, flat, side="right") - 1, 0,
                    len(self.nodes) - 2)
        lo = self.nodes[k] * np.where(flat < self.cum[0], 1e-30, 1.0)
        hi = self.nodes[k + 1]
        root = bisect_increasing(self, flat, lo, hi, rtol=1e-14)
        root = np.where(flat > 0, root, 0.0)
        return root.reshape(x.shape) if x.ndim else float(root[0])


def _finite_range(fn: ArrayFn, lo_exp=-1000, hi_exp=1000, floor=1e-280, ceil=1e280):
    j = np.arange(lo_exp, hi_exp + 1)
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        vals = fn(np.ldexp(1.0, j))
    ok = np.isfinite(vals) & (vals > floor) & (vals < ceil)
    if not np.any(ok):
        raise KernelError("function has no representable range")
    return int(j[ok][0]), int(j[ok][-1])


class NFunction:
    """An even N-function given by Phi on [0, inf) and its derivative.

    Instances are immutable after construction; derived objects (complement,
    Sobolev conjugates) are computed lazily and cached.
    """

    def __init__(self, value: ArrayFn, derivative: ArrayFn, name: str = "Phi",
                 derivative_inverse: Optional[ArrayFn] = None,
                 kernel: Optional[GrowthKernel] = None,
                 closed_form_complement: Optional["NFunction"] = None):
        self._value = value
        self._deriv = derivative
        self._deriv_inv = derivative_inverse
        self.name = name
        self.kernel = kernel
        self._closed_complement = closed_form_complement
        self._sobolev = {}

    def __repr__(self):
        return f"NFunction({self.name})"

    def __call__(self, t):
        t = np.abs(np.asarray(t, dtype=float))
        with np.errstate(over="ignore"):
            out = self._value(t)
        return np.where(t > 0, out, 0.0)

    def deriv(self, t):
        """Phi'(t) = t phi(|t|), odd in t."""
        t = np.asarray(t, dtype=float)
        at = np.abs(t)
        with np.errstate(over="ignore", invalid="ignore"):
            out = self._deriv(at)
        return np.where(at > 0, np.sign(t) * out, 0.0)

    def phi(self, t):
        """phi(t) = Phi'(t)/t for t > 0 (inf/0 at t = 0 follow the kernel)."""
        t = np.abs(np.asarray(t, dtype=float))
        with np.errstate(divide="ignore", invalid="ignore"):
            return self._deriv(t) / t

    @cached_property
    def _bracket(self):
        jlo, jhi = _finite_range(self._value)
        nodes = np.ldexp(1.0, np.arange(jlo, jhi + 1))
        return nodes, self._value(nodes)

    def inverse(self, y):
        """Phi^{-1}(y) for y >= 0 by bisection (relative tolerance 1e-12)."""
        y = np.asarray(y, dtype=float)
        flat = np.atleast_1d(y).ravel()
        nodes, vals = self._bracket
        k = np.clip(np.searchsorted(vals, flat) - 1, 0, len(nodes) - 2)
        lo = np.where(flat < vals[0], nodes[0] * 1e-30, nodes[k])
        hi = np.where(flat > vals[-1], nodes[-1] * 1e30, nodes[k + 1])
        root = bisect_increasing(self.__call__, flat, lo, hi, rtol=1e-12)
        root = np.where(flat > 0, root, 0.0)
        return root.reshape(y.shape) if y.ndim else float(root[0])

    def deriv_inverse(self, t):
        """Inverse of Phi' on [0, inf)."""
        t = np.asarray(t, dtype=float)
        if self._deriv_inv is not None:
            return self._deriv_inv(np.abs(t))
        flat = np.abs(np.atleast_1d(t).ravel())
        lo = np.full_like(flat, 1.0)
        hi = np.full_like(flat, 1.0)
        for _ in range(64):
            grow = self.deriv(hi) < flat
            shrink = self.deriv(lo) >= flat
            if not (grow.any() or shrink.any()):
                break
            hi = np.where(grow, hi * 1e4, hi)
            lo = np.where(shrink, lo * 1e-4, lo)
        else:
            raise RuntimeError("maximizer escaped the search bracket")
        root = bisect_increasing(self.deriv, flat, lo, hi, rtol=1e-14)
        root = np.where(flat > 0, root, 0.0)
        return root.reshape(t.shape) if t.ndim else float(root[0])

    def ratio(self, t):
        """t Phi'(t) / Phi(t), the quantity whose inf/sup are the indices."""
        t = np.asarray(t, dtype=float)
        return t * self.deriv(t) / self(t)

    def complement(self) -> "NFunction":
        return complement(self)

    def sobolev_conjugate(self, N: int) -> "NFunction":
        return sobolev_conjugate(self, N)


def build_from_kernel(kernel: GrowthKernel) -> NFunction:
    """Phi(t) = int_0^|t| s phi(s) ds, closed form when the kernel has one."""
    bad = kernel.check_monotone()
    if bad is not None:
        raise KernelError("t*phi(t) is not strictly increasing", bad)
    if kernel.antiderivative is not None:
        value = kernel.antiderivative
    else:
        jlo, jhi = _finite_range(kernel.a, -1000, 1000, floor=1e-300, ceil=1e300)
        value = _Tabulated(kernel.a, max(jlo, -1000), min(jhi, 1000))
    return NFunction(value, kernel.a, name=kernel.name, kernel=kernel)


def power_nfunction(p: float, scale: float = 1.0) -> NFunction:
    """Phi(t) = scale |t|^p / p with its closed-form complement."""
    kern = GrowthKernel.power(p, scale)
    pt = p / (p - 1.0)
    inv_scale = scale ** (-1.0 / (p - 1.0))
    comp = NFunction(
        value=lambda t: inv_scale * np.power(t, pt) / pt,
        derivative=lambda t: inv_scale * np.power(t, pt - 1.0),
        derivative_inverse=lambda t: scale * np.power(t, p - 1.0),
        name=f"complement({kern.name})",
    )
    return NFunction(kern.antiderivative, kern.a, name=kern.name, kernel=kern,
                     derivative_inverse=lambda t: np.power(t / scale, 1.0 / (p - 1.0)),
                     closed_form_complement=comp)


@dataclass(frozen=True)
class IndexPair:
    """Growth indices l <= m and the exponents derived from them."""

    l: float
    m: float
    N: Optional[int] = None

    @staticmethod
    def _star(p, N):
        if N is None or p >= N:
            return float("inf")
        return p * N / (N - p)

    @property
    def l_star(self) -> float:
        return self._star(self.l, self.N)

    @property
    def m_star(self) -> float:
        return self._star(self.m, self.N)

    @property
    def l_tilde(self) -> float:
        return self.l / (self.l - 1)

    @property
    def m_tilde(self) -> float:
        return self.m / (self.m - 1)

    def phi2_holds(self) -> bool:
        """1 < l <= m < min(N, l*)."""
        return 1.0 < self.l <= self.m < min(self.N or np.inf, self.l_star)


def _refine(nf: NFunction, t: np.ndarray, r: np.ndarray, k: int, sign: float):
    if k == 0 or k == len(t) - 1:
        return float(r[k])
    f = lambda x: sign * float(nf.ratio(np.array([np.exp(x)]))[0])
    _, val = golden_max(f, np.log(t[k - 1]), np.log(t[k + 1]), tol=1e-12)
    return sign * val if sign * val > sign * r[k] else float(r[k])


def estimate_indices(nf: NFunction, N: Optional[int] = None,
                     lo: float = PROBE_LO, hi: float = PROBE_HI,
                     points: int = PROBE_POINTS) -> IndexPair:
    """l = inf and m = sup of t Phi'(t)/Phi(t) over a logarithmic probe grid.

    Extremes found at interior grid points are refined by golden-section
    search in log t. Raises HypothesisFailure when l <= 1.
    """
    t = np.logspace(np.log10(lo), np.log10(hi), points)
    r = nf.ratio(t)
    if not np.all(np.isfinite(r)):
        raise HypothesisFailure(f"index ratio not finite for {nf.name}")
    l = _refine(nf, t, r, int(np.argmin(r)), -1.0)
    m = _refine(nf, t, r, int(np.argmax(r)), 1.0)
    if l <= 1.0:
        raise HypothesisFailure(f"lower index {l:.6g} <= 1 for {nf.name}")
    return IndexPair(l, m, N)


def zeta_envelope(ip: IndexPair, t, which: str):
    """The min/max power envelopes zeta_0 .. zeta_5 bounding Phi(s t) by Phi(s)."""
    pairs = {
        "z0": (min, ip.l, ip.m), "z1": (max, ip.l, ip.m),
        "z2": (min, ip.l_tilde, ip.m_tilde), "z3": (max, ip.l_tilde, ip.m_tilde),
        "z4": (min, ip.l_star, ip.m_star), "z5": (max, ip.l_star, ip.m_star),
    }
    op, a, b = pairs[which]
    t = np.asarray(t, dtype=float)
    pick = np.minimum if op is min else np.maximum
    return pick(np.power(t, a), np.power(t, b))


def power_bound(nf: NFunction, t, beta: float) -> bool:
    """Whether Phi(t) > Phi(t)^beta for beta > 1.

    The inequality is only true where 0 < Phi(t) < 1, so any t outside that
    set is refused rather than answered.
    """
    if not beta > 1:
        raise ValueError("beta must exceed 1")
    v = np.asarray(nf(t), dtype=float)
    if np.any((v <= 0) | (v >= 1)):
        raise ValueError("power bound requested where Phi(t) is not in (0, 1)")
    return bool(np.all(v > v**beta))


def complement(nf: NFunction) -> NFunction:
    """Young complement Phi~(t) = max_s (t s - Phi(s)).

    The maximiser solves Phi'(s) = t, so it is found by bisection on the
    derivative inside a geometrically grown bracket.
    """
    if nf._closed_complement is not None:
        return nf._closed_complement

    def value(t):
        s = nf.deriv_inverse(t)
        return t * s - nf(s)

    comp = NFunction(value, nf.deriv_inverse, name=f"complement({nf.name})",
                     derivative_inverse=lambda t: nf.deriv(t),
                     closed_form_complement=nf)
    return comp


class _SobolevConjugate(NFunction):
    """Phi_* defined through Phi_*^{-1}(y) = int_0^y Phi^{-1}(s) s^{-(N+1)/N} ds.

    The substitution s = Phi(tau) turns the defining integral into
    H(T) = int_0^T tau Phi'(tau) Phi(tau)^{-(N+1)/N} dtau = Phi_*^{-1}(Phi(T)),
    so Phi_*(H(T)) = Phi(T) parametrises the conjugate without nesting an
    inverse inside the quadrature.
    """

    def __init__(self, base: NFunction, N: int):
        self.base, self.N = base, N
        expo = -(N + 1.0) / N

        def integrand(tau):
            tau = np.asarray(tau, dtype=float)
            with np.errstate(over="ignore", under="ignore", divide="ignore", invalid="ignore"):
                out = tau * base.deriv(tau) * np.power(base(tau), expo)
            return np.where(np.isfinite(out), out, 0.0)

        jlo, jhi = _finite_range(base.__call__, floor=1e-250, ceil=1e250)
        self.H = _Tabulated(integrand, jlo, jhi)
        self._integrand = integrand
        super().__init__(self._eval, self._d, name=f"sobolev({base.name},N={N})")

    def _eval(self, x):
        return self.base(self.H.inverse(x))

    def _d(self, x):
        T = self.H.inverse(x)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.power(self.base(T), (self.N + 1.0) / self.N) / T

    def inverse(self, y):
        return self.H(self.base.inverse(y))


def sobolev_conjugate(nf: NFunction, N: int, check_indices: bool = True) -> NFunction:
    """Sobolev conjugate Phi_* for dimension N; requires l, m < N."""
    if check_indices:
        ip = estimate_indices(nf, N)
        if ip.m >= N:
            raise HypothesisFailure(f"m={ip.m:.6g} >= N={N}: Sobolev conjugate undefined")
    if N not in nf._sobolev:
        nf._sobolev[N] = _SobolevConjugate(nf, N)
    return nf._sobolev[N]


def sobolev_inverse_direct(nf: NFunction, N: int, y: float, eps: float,
                           tol: float = 1e-12) -> float:
    """Phi_*^{-1}(y) straight from the defining integral on [eps, y].

    The remainder on [0, eps] is extrapolated from the local power law of the
    integrand. Kept as an independent route to the tabulated conjugate.
    """
    from .quadrature import integrate_graded

    expo = (N + 1.0) / N
    f = lambda s: nf.inverse(s) / np.power(s, expo)
    return integrate_graded(f, 0.0, y, tol=tol, levels=int(np.ceil(np.log2(y / eps))))


@dataclass
class KernelReport:
    phi1_monotone: bool
    phi1_witness: Optional[float]
    indices: Optional[IndexPair]
    phi2_holds: bool
    phi2_note: str
    q_max: Optional[float]
    phi3_holds: bool
    phi3_witness: Optional[float] = None
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.phi1_monotone and self.phi2_holds and self.phi3_holds

    def lines(self):
        ip = self.indices
        yield f"(phi1) t*phi(t) strictly increasing: {'pass' if self.phi1_monotone else 'FAIL'}" + (
            "" if self.phi1_witness is None else f" (violation at t={self.phi1_witness:.6g})")
        if ip is not None:
            yield f"indices: l={ip.l:.9g} m={ip.m:.9g} l*={ip.l_star:.9g} m*={ip.m_star:.9g}"
        yield f"(phi2) 1<l<=m<min(N,l*): {'pass' if self.phi2_holds else 'FAIL'} {self.phi2_note}"
        yield f"(phi3) t^2 phi(t) >= q t^l with q_max={self.q_max}: {'pass' if self.phi3_holds else 'FAIL'}"


def verify_kernel_hypotheses(kernel: GrowthKernel, N: int) -> KernelReport:
    """Sampled verdicts for (phi1)-(phi3) with the largest feasible q."""
    bad = kernel.check_monotone()
    if bad is not None:
        return KernelReport(False, bad, None, False, "not evaluated", None, False)
    nf = build_from_kernel(kernel)
    try:
        ip = estimate_indices(nf, N)
    except HypothesisFailure as exc:
        return KernelReport(True, None, None, False, str(exc), None, False)
    note = ""
    if ip.m >= N:
        note = f"(m={ip.m:.6g} >= N={N})"
    elif ip.m >= ip.l_star:
        note = f"(m={ip.m:.6g} >= l*={ip.l_star:.6g})"
    l = kernel.l_claimed if kernel.l_claimed is not None else ip.l
    t = np.logspace(np.log10(PROBE_LO), np.log10(PROBE_HI), PROBE_POINTS)
    lhs = t * t * kernel.phi(t)
    q_vals = lhs / np.power(t, l)
    q_max = float(np.min(q_vals))
    witness = None
    if kernel.q is not None and kernel.q > q_max * (1 + 1e-12):
        witness = float(t[np.argmin(q_vals)])
    return KernelReport(True, None, ip, ip.phi2_holds(), note, q_max,
                        q_max > 0 and witness is None, witness)
