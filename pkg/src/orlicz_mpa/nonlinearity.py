"""Nonlinearities F(x, t, s), their hypothesis algebra and the cut-off
modification that replaces F by a power tail away from the origin.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linprog

from . import expr
from .cutoff import CutoffFamily, eval_cutoff
from .nfunction import IndexPair

# F(x, t, s) -> array; x is None or an array with coordinates on the last axis
Fn3 = Callable[[Optional[np.ndarray], np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return not self.lo < self.hi

    def __contains__(self, x) -> bool:
        return self.lo < x < self.hi

    def __str__(self):
        return "empty" if self.empty else f"({float(self.lo):.6g}, {float(self.hi):.6g})"


@dataclass(frozen=True)
class NonlinearitySpec:
    """F with its partials and the claimed hypothesis constants.

    Pairs are (first component, second component); a scalar problem only
    uses the first entries and ignores s.
    """

    F: Fn3
    F_t: Optional[Fn3] = None
    F_s: Optional[Fn3] = None
    k: tuple = (None, None)
    M12: tuple = (None, None)
    r: tuple = (None, None)
    M34: tuple = (None, None)
    Theta: tuple = (None, None)
    mu: tuple = (None, None)
    x_dim: int = 0
    scalar: bool = False
    name: str = "F"
    source: Optional[str] = None

    @classmethod
    def from_expression(cls, src: str, scalar: bool = False, **constants):
        """Parse F and differentiate it symbolically in t (and s)."""
        node = expr.parse(src)
        x_dim = _x_dim(node)
        spec = cls(F=_bind(node), F_t=_bind(expr.differentiate(node, "t")),
                   F_s=None if scalar else _bind(expr.differentiate(node, "s")),
                   x_dim=x_dim, scalar=scalar, name=src, source=src, **constants)
        return spec

    def with_constants(self, **kw) -> "NonlinearitySpec":
        return replace(self, **kw)

    def require_partials(self):
        if self.F_t is None or (not self.scalar and self.F_s is None):
            raise ValueError("nonlinearity has no partial derivatives; "
                             "build it with from_expression (symbolic differentiation) first")


def _x_dim(node) -> int:
    dim = 0
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, expr.Builtin):
            dim = max(dim, n.n)
        elif isinstance(n, expr.Var) and n.name.startswith("x") and n.name[1:].isdigit():
            dim = max(dim, int(n.name[1:]))
        elif isinstance(n, expr.Unary):
            stack.append(n.arg)
        elif isinstance(n, expr.Binary):
            stack += [n.left, n.right]
    return dim


def _bind(node) -> Fn3:
    def fn(x, t, s=None):
        b = {"t": t, "s": np.zeros_like(np.asarray(t, dtype=float)) if s is None else s}
        if x is not None:
            b["x"] = x
        out = expr.evaluate(node, b)
        return np.broadcast_to(out, np.broadcast(np.asarray(t), np.asarray(b["s"])).shape).astype(float)
    fn.node = node
    return fn


def blended(inner: str, outer: str, weight: Optional[str], sigma: CutoffFamily,
            **constants) -> NonlinearitySpec:
    """F = sigma(t,s) w(x) G1(t,s) + (1 - sigma(t,s)) w(x) G2(t,s).

    ``inner`` and ``outer`` are expressions for G1 and G2, ``weight`` for the
    periodic factor w(x) (None means w = 1). Partials follow the product rule.
    """
    g1, g2 = expr.parse(inner), expr.parse(outer)
    w = expr.parse(weight) if weight is not None else expr.Const(1.0)
    G1, G2, W = _bind(g1), _bind(g2), _bind(w)
    d = {v: (_bind(expr.differentiate(g1, v)), _bind(expr.differentiate(g2, v))) for v in "ts"}

    def weight_at(x, t, s):
        return W(x, t, s) if weight is not None else 1.0

    def F(x, t, s):
        sig = eval_cutoff(sigma, t, s)[0]
        return weight_at(x, t, s) * (sig * G1(x, t, s) + (1 - sig) * G2(x, t, s))

    def partial(var):
        def fn(x, t, s):
            sig, st, ss = eval_cutoff(sigma, t, s)
            ds = st if var == "t" else ss
            a, b = G1(x, t, s), G2(x, t, s)
            da, db = d[var][0](x, t, s), d[var][1](x, t, s)
            return weight_at(x, t, s) * (ds * (a - b) + sig * da + (1 - sig) * db)
        return fn

    name = f"sigma*w*({inner}) + (1-sigma)*w*({outer})"
    return NonlinearitySpec(F=F, F_t=partial("t"), F_s=partial("s"),
                            x_dim=_x_dim(w), name=name, source=name, **constants)


def derive_growth_constants(spec_or_M34, r=None):
    """M5 = M3 + 2^|r1-r2| M4 and M6 = M4 + 2^|r1-r2| M3."""
    if isinstance(spec_or_M34, NonlinearitySpec):
        (M3, M4), (r1, r2) = spec_or_M34.M34, spec_or_M34.r
    else:
        (M3, M4), (r1, r2) = spec_or_M34, r
    f = 2.0 ** abs(r1 - r2)
    return M3 + f * M4, M4 + f * M3


def admissible_r_intervals(ip1: IndexPair, ip2: IndexPair, Theta1, Theta2):
    """Open windows for r1 and r2 from the index data and Theta_i > 1.

    Works with Fractions as well as floats, so exact endpoints can be had by
    passing Fraction-valued index pairs.
    """
    if not (Theta1 > 1 and Theta2 > 1):
        raise ValueError("Theta_i must exceed 1")
    l1, m1, ls1 = ip1.l, ip1.m, ip1.l_star
    l2, m2, ls2 = ip2.l, ip2.m, ip2.l_star
    lo1 = max(m1, m2, 1 + (1 + m1) * (l2 - 1) * (Theta2 - 1) / (l2 * Theta2))
    hi1 = min(ls1, 1 + ls1 * (l1 - 1) / l1 - (l1 - 1) * (1 + m1) / (Theta1 * l1))
    lo2 = max(m1, m2, 1 + (1 + m2) * (l1 - 1) * (Theta1 - 1) / (l1 * Theta1))
    hi2 = min(ls2, 1 + ls2 * (l2 - 1) / l2 - (l2 - 1) * (1 + m2) / (Theta2 * l2))
    return Interval(lo1, hi1), Interval(lo2, hi2)


def scalar_K(ip: IndexPair) -> float:
    """Upper end of the admissible k-window for the scalar problem."""
    return min(ip.l_star, (ip.m * ip.l - ip.l + ip.l_star) / ip.m)


# sampling

def stratified_disk(n: int, radius: float, seed: int = 0, x_dim: int = 0,
                    r_min: float = 1e-8, scalar: bool = False):
    """Points in the open disk: half log-spaced radii down to r_min, half
    uniform strata in radius; random angles and x in the unit period cell."""
    rng = np.random.default_rng(seed)
    n_log = n // 2
    n_lin = n - n_log
    r_log = np.exp(np.linspace(np.log(r_min), np.log(radius), n_log, endpoint=False))
    r_lin = radius * (np.arange(n_lin) + rng.random(n_lin)) / n_lin
    r = np.concatenate([r_log, r_lin])
    r = np.minimum(r, radius * (1 - 1e-12))
    if scalar:
        t = r * rng.choice([-1.0, 1.0], r.size)
        s = np.zeros_like(t)
    else:
        ang = rng.uniform(0, 2 * np.pi, r.size)
        t, s = r * np.cos(ang), r * np.sin(ang)
    x = rng.random((r.size, x_dim)) if x_dim else None
    return x, t, s


@dataclass
class Verdict:
    name: str
    passed: bool
    worst_margin: float
    witness: Optional[tuple] = None
    lhs: Optional[float] = None
    rhs: Optional[float] = None
    note: str = ""
    x: Optional[tuple] = None

    def line(self) -> str:
        state = "pass" if self.passed else "FAIL"
        out = f"{self.name}: {state} (worst relative margin {self.worst_margin:.3e})"
        if self.witness is not None:
            w = ", ".join(f"{v:.6g}" if np.isscalar(v) else "x" for v in self.witness)
            out += f" at (t,s)=({w}) lhs={self.lhs:.6g} rhs={self.rhs:.6g}"
        if self.x is not None:
            out += " x=(" + ", ".join(f"{v:.4g}" for v in self.x) + ")"
        if self.note:
            out += f" [{self.note}]"
        return out


def _le_verdict(name, lhs, rhs, x, t, s, rtol=1e-12, note=""):
    """Verdict for lhs <= rhs pointwise; margin relative to max(|lhs|,|rhs|)."""
    scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1e-300)
    margin = (rhs - lhs) / scale
    i = int(np.argmin(margin))
    ok = bool(margin[i] >= -rtol)
    wit = (float(t[i]), float(s[i]))
    xw = None if x is None else tuple(float(v) for v in x[i])
    return Verdict(name, ok, float(margin[i]), wit, float(lhs[i]), float(rhs[i]), note, xw)


@dataclass
class HypothesisReport:
    verdicts: list
    intervals: tuple = ()
    constants: dict = field(default_factory=dict)
    samples: int = 0

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def get(self, name) -> Verdict:
        for v in self.verdicts:
            if v.name == name:
                return v
        raise KeyError(name)

    def lines(self):
        yield f"samples: {self.samples}"
        for k, v in self.constants.items():
            yield f"{k} = {v:.10g}" if isinstance(v, float) else f"{k} = {v}"
        for i, iv in enumerate(self.intervals, 1):
            yield f"admissible r{i} interval: {iv}"
        for v in self.verdicts:
            yield v.line()


def _sel(x, mask):
    return None if x is None else x[mask]


def _pw(a, e):
    with np.errstate(divide="ignore"):
        return np.power(np.abs(a), e)


def check_hypotheses(spec: NonlinearitySpec, ip1: IndexPair, ip2: Optional[IndexPair] = None,
                     sample_budget: int = 10_000, radius: float = 4.0, seed: int = 0,
                     growth_radius: float = 2.0) -> HypothesisReport:
    """Sampled verdicts for the growth conditions of F on the disk |(t,s)| < radius."""
    if sample_budget < 1000:
        raise ValueError("sample_budget must be at least 1000")
    spec.require_partials()
    ip2 = ip1 if ip2 is None else ip2
    x, t, s = stratified_disk(sample_budget, radius, seed, spec.x_dim, scalar=spec.scalar)
    F = spec.F(x, t, s)
    Ft = spec.F_t(x, t, s)
    Fs = np.zeros_like(Ft) if spec.scalar else spec.F_s(x, t, s)
    (k1, k2), (M1, M2) = spec.k, spec.M12
    (r1, r2), (M3, M4) = spec.r, spec.M34
    (mu1, mu2) = spec.mu
    out = []
    consts = {}
    if k1 is not None:
        rhs = M1 * _pw(t, k1) + (0.0 if spec.scalar else M2 * _pw(s, k2))
        out.append(_le_verdict("F1", rhs, F, x, t, s))
        out.append(Verdict("k1 in (m1, l1*)", ip1.m < k1 < ip1.l_star, 0.0,
                           note=f"k1={float(k1):g}, window ({float(ip1.m):g}, {float(ip1.l_star):g})"))
        if not spec.scalar:
            out.append(Verdict("k2 in (m2, l2*)", ip2.m < k2 < ip2.l_star, 0.0,
                               note=f"k2={float(k2):g}, window ({float(ip2.m):g}, {float(ip2.l_star):g})"))
    intervals = ()
    if r1 is not None and M3 is not None:
        bound = M3 * _pw(t, r1 - 1) + (0.0 if spec.scalar else M4 * _pw(s, r2 - 1))
        out.append(_le_verdict("F2 (t-partial)", np.abs(Ft), bound, x, t, s))
        if not spec.scalar:
            out.append(_le_verdict("F2 (s-partial)", np.abs(Fs), bound, x, t, s))
        if not spec.scalar and spec.Theta[0] is not None:
            intervals = admissible_r_intervals(ip1, ip2, *spec.Theta)
            out.append(Verdict("r1 admissible", r1 in intervals[0], 0.0, note=f"r1={float(r1):g} in {intervals[0]}"))
            out.append(Verdict("r2 admissible", r2 in intervals[1], 0.0, note=f"r2={float(r2):g} in {intervals[1]}"))
        if not spec.scalar:
            M5, M6 = derive_growth_constants(spec)
            consts.update(M5=M5, M6=M6)
            inner = np.hypot(t, s) < growth_radius
            growth = M5 * _pw(t, r1) + M6 * _pw(s, r2)
            out.append(_le_verdict("growth bound |F| <= M5|t|^r1 + M6|s|^r2",
                                   np.abs(F[inner]), growth[inner], _sel(x, inner), t[inner], s[inner]))
    if mu1 is not None:
        nz = np.hypot(t, s) > 0
        out.append(_le_verdict("F3 positivity", np.zeros(nz.sum()), F[nz], _sel(x, nz), t[nz], s[nz], rtol=0.0))
        rhs = t * Ft / mu1 + (0.0 if spec.scalar else s * Fs / mu2)
        out.append(_le_verdict("F3", F[nz], rhs[nz], _sel(x, nz), t[nz], s[nz]))
        out.append(Verdict("mu > m", mu1 > ip1.m and (spec.scalar or mu2 > ip2.m), 0.0))
    if spec.scalar:
        K = scalar_K(ip1)
        consts["K"] = K
        if k1 is not None:
            out.append(Verdict("k < K", k1 < K, 0.0, note=f"k={float(k1):g}, K={float(K):g}"))
    return HypothesisReport(out, intervals, consts, sample_budget)


def check_h2(spec: NonlinearitySpec, mu: tuple, r_min: float = 4.0, r_max: float = 20.0,
             samples: int = 10_000, seed: int = 1, probe=(5.0, 0.0)) -> Verdict:
    """Test F <= t F_t / mu1 + s F_s / mu2 outside the disk of radius r_min.

    The explicit probe point is checked first and reported as the witness if
    it fails; otherwise the worst sampled point is reported.
    """
    spec.require_partials()
    rng = np.random.default_rng(seed)
    r = np.concatenate([[np.hypot(*probe)], r_min + (r_max - r_min) * rng.random(samples)])
    ang = np.concatenate([[np.arctan2(probe[1], probe[0])], rng.uniform(0, 2 * np.pi, samples)])
    t, s = r * np.cos(ang), r * np.sin(ang)
    if probe[1] == 0:
        s[0] = 0.0
    x = rng.random((r.size, spec.x_dim)) if spec.x_dim else None
    F = spec.F(x, t, s)
    rhs = t * spec.F_t(x, t, s) / mu[0] + s * spec.F_s(x, t, s) / mu[1]
    v = _le_verdict(f"H2 (mu={float(mu[0]):g},{float(mu[1]):g}) on |(t,s)|>{r_min:g}", F, rhs, x, t, s)
    margin0 = (rhs[0] - F[0]) / max(abs(rhs[0]), abs(F[0]))
    if margin0 < 0:
        x0 = None if x is None else tuple(float(c) for c in x[0])
        v = Verdict(v.name, False, v.worst_margin, (float(t[0]), float(s[0])),
                    float(F[0]), float(rhs[0]), note=f"probe margin {margin0:.3e}", x=x0)
    return v


# modified nonlinearity

@dataclass
class ModifiedNonlinearity:
    """F~ = rho F + (1 - rho) (M5 |t|^r1 + M6 |s|^r2) for the system."""

    base: NonlinearitySpec
    cutoff: CutoffFamily
    M5: float
    M6: float
    theta: float
    M7: Optional[float] = None
    M8: Optional[float] = None

    @property
    def r(self):
        return self.base.r

    def tail(self, t, s):
        (r1, r2) = self.base.r
        P = self.M5 * _pw(t, r1) + self.M6 * _pw(s, r2)
        Pt = self.M5 * r1 * _pw(t, r1 - 1) * np.sign(t)
        Ps = self.M6 * r2 * _pw(s, r2 - 1) * np.sign(s)
        return P, Pt, Ps

    def _base(self, x, t, s, active):
        F = np.zeros_like(t)
        Ft = np.zeros_like(t)
        Fs = np.zeros_like(t)
        if np.any(active):
            xa = None if x is None else x[active]
            ta, sa = t[active], s[active]
            F[active] = self.base.F(xa, ta, sa)
            Ft[active] = self.base.F_t(xa, ta, sa)
            Fs[active] = self.base.F_s(xa, ta, sa)
        return F, Ft, Fs

    def evaluate(self, x, t, s):
        """(F~, F~_t, F~_s) with the exact product rule through rho."""
        t = np.asarray(t, dtype=float)
        s = np.asarray(s, dtype=float)
        shape = np.broadcast(t, s).shape
        t, s = np.broadcast_to(t, shape).ravel(), np.broadcast_to(s, shape).ravel()
        if x is not None:
            x = np.asarray(x, dtype=float).reshape(-1, np.shape(x)[-1])
        rho, rt, rs = eval_cutoff(self.cutoff, t, s)
        F, Ft, Fs = self._base(x, t, s, rho > 0)
        P, Pt, Ps = self.tail(t, s)
        val = rho * F + (1 - rho) * P
        dt = rt * (F - P) + rho * Ft + (1 - rho) * Pt
        ds = rs * (F - P) + rho * Fs + (1 - rho) * Ps
        return val.reshape(shape), dt.reshape(shape), ds.reshape(shape)

    def __call__(self, x, t, s):
        return self.evaluate(x, t, s)[0]

    def fit_M78(self, samples: int = 4000, seed: int = 0, inflate: float = 1.05):
        """Smallest (M7 + M8) with |F~_t|, |F~_s| <= M7|t|^(r1-1) + M8|s|^(r2-1)
        on the sample set, inflated by ``inflate``. Empirical constants."""
        x, t, s = stratified_disk(samples, 3 * self.cutoff.delta, seed, self.base.x_dim,
                                  r_min=1e-4)
        _, Ft, Fs = self.evaluate(x, t, s)
        (r1, r2) = self.base.r
        a, b = _pw(t, r1 - 1), _pw(s, r2 - 1)
        need = np.concatenate([np.abs(Ft), np.abs(Fs)])
        A = -np.column_stack([np.concatenate([a, a]), np.concatenate([b, b])])
        res = linprog([1.0, 1.0], A_ub=A, b_ub=-need, bounds=[(0, None), (0, None)],
                      method="highs")
        if not res.success:
            raise RuntimeError(f"M7/M8 fit failed: {res.message}")
        self.M7, self.M8 = (float(v) * inflate for v in res.x)
        return self.M7, self.M8


def build_modified(spec: NonlinearitySpec, fam: CutoffFamily, fit: bool = False) -> ModifiedNonlinearity:
    """Cut-off modification for the system; the family must have delta = 4."""
    spec.require_partials()
    if spec.scalar:
        raise ValueError("use build_scalar_modified for a scalar nonlinearity")
    if fam.delta != 4:
        raise ValueError("the system modification uses a cut-off with delta = 4")
    M5, M6 = derive_growth_constants(spec)
    theta = min(spec.r[0], spec.r[1], spec.mu[0], spec.mu[1])
    mod = ModifiedNonlinearity(spec, fam, M5, M6, theta)
    if fit:
        mod.fit_M78()
    return mod


@dataclass
class ScalarModified:
    """F~ = rho F + (1 - rho) D3 |t|^r, optionally restricted to one sign.

    ``sign = +1`` keeps F~ for t >= 0 and sets it to 0 for t < 0, ``-1`` the
    mirror image, ``0`` no restriction.
    """

    base: NonlinearitySpec
    cutoff: CutoffFamily
    D3: float
    theta: float
    sign: int = 0

    def evaluate(self, x, t, s=None):
        t = np.asarray(t, dtype=float)
        shape = t.shape
        t = t.ravel()
        if x is not None:
            x = np.asarray(x, dtype=float).reshape(-1, np.shape(x)[-1])
        rho, rt, _ = eval_cutoff(self.cutoff, t)
        F = np.zeros_like(t)
        Ft = np.zeros_like(t)
        act = rho > 0
        if np.any(act):
            xa = None if x is None else x[act]
            z = np.zeros(act.sum())
            F[act] = self.base.F(xa, t[act], z)
            Ft[act] = self.base.F_t(xa, t[act], z)
        r = self.base.r[0]
        P = self.D3 * _pw(t, r)
        Pt = self.D3 * r * _pw(t, r - 1) * np.sign(t)
        val = rho * F + (1 - rho) * P
        dt = rt * (F - P) + rho * Ft + (1 - rho) * Pt
        if self.sign:
            keep = self.sign * t >= 0
            val, dt = np.where(keep, val, 0.0), np.where(keep, dt, 0.0)
        return val.reshape(shape), dt.reshape(shape), np.zeros(shape)

    def __call__(self, x, t, s=None):
        return self.evaluate(x, t)[0]

    def signed(self, sign: int) -> "ScalarModified":
        return replace(self, sign=sign)


def default_D3(spec: NonlinearitySpec, delta: float, points: int = 2001) -> float:
    """sup of F / |t|^r over the transition band delta/2 <= |t| <= delta.

    This is the smallest tail coefficient keeping F <= D3 |t|^r where the
    cut-off varies, which is what makes theta F~ <= t F~_t survive there.
    """
    band = np.linspace(delta / 2, delta, points)
    vals = []
    for sgn in (1.0, -1.0):
        tt = sgn * band
        vals.append(spec.F(None, tt, np.zeros_like(tt)) / _pw(tt, spec.r[0]))
    return float(np.max(vals))


def build_scalar_modified(spec: NonlinearitySpec, delta: float, D3: Optional[float] = None,
                          sign: int = 0) -> ScalarModified:
    if not delta > 0:
        raise ValueError("delta must be positive")
    spec.require_partials()
    fam = CutoffFamily("scalar_sine", delta)
    D3 = default_D3(spec, delta) if D3 is None else D3
    mu = spec.mu[0] if spec.mu[0] is not None else np.inf
    return ScalarModified(spec, fam, D3, min(spec.r[0], mu), sign)
