"""A-posteriori bounds: lambda-power norm envelopes, the Moser ladder for
L^infinity control, and the closed-form scalar sup bound.

All index arithmetic accepts Fractions so worked-example values come out
exact; grid norms are floats.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple, Optional

import numpy as np

from .field import DiscreteField, lp_norm
from .nfunction import IndexPair

LADDER_MAX_EXPONENT = 1e3
D_INFLATION = 1.1


class ExponentError(ValueError):
    pass


# norm envelopes for the system

@dataclass(frozen=True)
class NormEnvelope:
    u_bound: float
    v_bound: float
    c_bound: float
    u_exponents: tuple
    v_exponents: tuple


def envelope_exponents(ip1: IndexPair, ip2: IndexPair, k1, k2):
    """lambda exponents of the u and v envelopes, as two pairs of pairs.

    u: ((-1/(k1-l1), -l2/(l1 (k2-l2))), (-l1/(m1 (k1-l1)), -l2/(m1 (k2-l2))))
    v: ((-l1/(l2 (k1-l1)), -1/(k2-l2)), (-l1/(m2 (k1-l1)), -l2/(m2 (k2-l2))))
    """
    l1, m1, l2, m2 = ip1.l, ip1.m, ip2.l, ip2.m
    if not (k1 > l1 and k2 > l2):
        raise ExponentError(f"need k_i > l_i, got k=({k1}, {k2}) l=({l1}, {l2})")
    a1, a2 = k1 - l1, k2 - l2
    u = ((-1 / a1, -l2 / (l1 * a2)), (-l1 / (m1 * a1), -l2 / (m1 * a2)))
    v = ((-l1 / (l2 * a1), -1 / a2), (-l1 / (m2 * a1), -l2 / (m2 * a2)))
    return u, v


def norm_envelope_bound(ip1: IndexPair, ip2: IndexPair, k1, k2, lam, constants,
                  V_inf=(1.0, 1.0)) -> NormEnvelope:
    """Explicit lambda-power bounds on ||u||_{1,Phi1}, ||v||_{1,Phi2} and c_lambda.

    ``constants`` is (C1*, C2*, theta) where C_i* bound the profile maxima
    by C_i* lambda^{-l_i/(k_i-l_i)}; theta must exceed both m_i.
    """
    C1, C2, theta = constants
    if not lam > 0:
        raise ExponentError("lambda must be positive")
    if not theta > max(ip1.m, ip2.m):
        raise ExponentError(f"theta={theta} must exceed max(m1, m2)")
    eu, ev = envelope_exponents(ip1, ip2, k1, k2)
    l1, m1, l2, m2 = (float(x) for x in (ip1.l, ip1.m, ip2.l, ip2.m))
    k1f, k2f, th, lamf = float(k1), float(k2), float(theta), float(lam)
    c = C1 * lamf ** (-l1 / (k1f - l1)) + C2 * lamf ** (-l2 / (k2f - l2))

    def envelope(m, l, exps, vinf):
        f = th / (th - m)
        lo = (f * C1) ** (1 / l) * lamf ** float(exps[0][0]) + (f * C2) ** (1 / l) * lamf ** float(exps[0][1])
        hi = (f * C1) ** (1 / m) * lamf ** float(exps[1][0]) + (f * C2) ** (1 / m) * lamf ** float(exps[1][1])
        return (1 / vinf + 1) * max(lo, hi)

    return NormEnvelope(envelope(m1, l1, eu, V_inf[0]), envelope(m2, l2, ev, V_inf[1]), c,
                        eu, ev)


class ValleyMax(NamedTuple):
    s_max: float
    g_max: float
    clamped: bool


def valley_scaling_maximizer(A, M, k, l, lam) -> ValleyMax:
    """Maximiser of g(s) = A s^l - lam M s^k on s >= 0 and its value.

    If the unconstrained maximiser lies at or beyond 1 the report is clamped
    to s = 1 (lambda is then below the threshold where the profile peaks
    inside the unit ball).
    """
    if not (k > l > 1 and A > 0 and M > 0 and lam > 0):
        raise ExponentError("need k > l > 1 and positive A, M, lambda")
    s = (l * A / (lam * M * k)) ** (1.0 / (k - l))
    clamped = s >= 1
    if clamped:
        s = 1.0
    return ValleyMax(float(s), float(A * s**l - lam * M * s**k), bool(clamped))


def profile_constant(A, M, k, l):
    """C with max_s g(s) = C lam^{-l/(k-l)} (unclamped case)."""
    return float(k ** (-k / (k - l)) * l ** (l / (k - l)) * (k - l)
                 * A ** (k / (k - l)) * M ** (-l / (k - l)))


# Moser ladder

def beta1(ip: IndexPair, r):
    return 1 + (ip.l_star - r) / ip.l


def alpha_star(ip: IndexPair, r):
    return ip.l * ip.l_star / (ip.l_star - r + ip.l)


def beta_window(ip: IndexPair, r, Theta):
    """Lower end of the open interval the first ladder exponent must exceed."""
    l, m = ip.l, ip.m
    return 1 + (r - l) / (l * (l - 1)) + (m + 1) / (Theta * l)


def limit_sums(ip: IndexPair, r, n: int):
    """The three quantities that must vanish as the ladder depth n grows:

    sum_i 1/(b1 l l^{n-i} rho^i),  sum_i i (1/l)^{n-i} rho^{-i},  1/l^{n+1}
    with rho = l*/alpha*.
    """
    l = float(ip.l)
    b1 = float(beta1(ip, r))
    rho = float(ip.l_star / alpha_star(ip, r))
    i = np.arange(n + 1, dtype=float)
    s1 = float(np.sum(1.0 / (b1 * l * l ** (n - i) * rho**i)))
    s2 = float(np.sum(i * (1 / l) ** (n - i) * rho ** (-i)))
    return s1, s2, float(l ** -(n + 1))


@dataclass
class IterationLedger:
    beta1: object
    alpha_star: object
    ratio: object
    betas: list
    exponents: list
    norms: list
    bounds: list = field(default_factory=list)
    bound_product: float = float("nan")
    D: float = float("nan")
    D_fitted: float = float("nan")
    sup_norm: float = float("nan")
    depth: int = 0
    truncated_at: Optional[int] = None

    @property
    def sound(self) -> bool:
        return bool(self.bound_product >= self.sup_norm)

    def verdict(self) -> str:
        return "sound" if self.sound else "violated"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "beta", "exponent", "norm", "bound"])
        for n, (b, q, nm, bd) in enumerate(zip(self.betas, self.exponents, self.norms, self.bounds)):
            w.writerow([n, repr(float(b)), repr(float(q)), repr(float(nm)), repr(float(bd))])
        return buf.getvalue()


def _rung_terms(l, betas, n):
    """(S_n, log P_n) for the product bound at rung n."""
    S = sum(1.0 / (l ** (n + 1 - i) * betas[i]) for i in range(n + 1))
    logP = sum(np.log(betas[i]) / (l ** (n - i) * betas[i]) for i in range(n + 1))
    return S, logP


def moser_ladder(u: DiscreteField, ip: IndexPair, r, lam, sobolev_norm, embed_C=0.0,
                 depth: int = 20) -> IterationLedger:
    """Computable skeleton of the Moser iteration on a grid solution.

    Rung n uses exponent q_n = beta^(n) l* with beta^(n) = b1 rho^n and
    compares the grid L^{q_n} norm with the product bound

        (lam D X)^{S_n} prod_i beta^(i)^{1/(l^{n-i} beta^(i))} ||u||_{l*}^{1/l^{n+1}},

    X = ||u||_{1,Phi}^{(r-l)/l}. The chain constant D is not known in closed
    form: it is fitted as the smallest value making every computed rung hold,
    floored by ``embed_C`` and inflated by 10%. The ladder stops once q_n
    exceeds 1e3. The verdict compares the last bound with the grid sup norm.
    """
    if depth < 3:
        raise ValueError("depth must be at least 3")
    if not (ip.m < r < ip.l_star):
        raise ExponentError(f"r={r} outside the window (m, l*) = ({ip.m}, {ip.l_star})")
    b1, a_s = beta1(ip, r), alpha_star(ip, r)
    rho = ip.l_star / a_s
    if not a_s < ip.l_star:
        raise ExponentError("alpha* must be below l*")
    l, ls = float(ip.l), float(ip.l_star)
    betas, exps, norms = [], [], []
    truncated = None
    for n in range(depth + 1):
        b = float(b1) * float(rho) ** n
        q = b * ls
        if q > LADDER_MAX_EXPONENT:
            truncated = n
            break
        betas.append(b)
        exps.append(q)
        norms.append(lp_norm(u, q))
    base = lp_norm(u, float(b1 * a_s))  # b1 alpha* = l*
    X = float(sobolev_norm) ** ((float(r) - l) / l)
    sup = u.sup()
    led = IterationLedger(b1, a_s, rho, betas, exps, norms, sup_norm=sup, depth=depth,
                          truncated_at=truncated)
    if sup == 0 or not betas:
        led.bounds = [0.0] * len(betas)
        led.bound_product = 0.0 if sup == 0 else float("inf")
        led.D = led.D_fitted = 0.0
        return led
    # smallest D with bound_n >= norm_n for all rungs, in log form
    need = []
    for n, nm in enumerate(norms):
        S, logP = _rung_terms(l, betas, n)
        tail = np.log(base) / l ** (n + 1)
        need.append((np.log(nm) - logP - tail) / S - np.log(float(lam) * X))
    D_fit = float(np.exp(max(need)))
    D = D_INFLATION * max(D_fit, float(embed_C))
    bounds = []
    for n in range(len(norms)):
        S, logP = _rung_terms(l, betas, n)
        bounds.append(float(np.exp(S * np.log(float(lam) * D * X) + logP + np.log(base) / l ** (n + 1))))
    led.bounds, led.D, led.D_fitted = bounds, D, D_fit
    led.bound_product = bounds[-1]
    return led


# scalar closed-form bound

def scalar_linf_bound(norm_1Phi, ip: IndexPair, r, lam, C) -> float:
    """C (lam ||u||^{r-l})^{1/(l*-r)} ||u||."""
    l, ls = float(ip.l), float(ip.l_star)
    r = float(r)
    if not (ls > r > l):
        raise ExponentError(f"need l* > r > l, got l={l} r={r} l*={ls}")
    return float(C * (lam * norm_1Phi ** (r - l)) ** (1 / (ls - r)) * norm_1Phi)


def composite_linf_exponent(ip: IndexPair, r, k):
    """Large-lambda exponent of the sup bound obtained by inserting the
    scalar norm envelope max{lam^{-1/(k-l)}, lam^{-l/(m(k-l))}} into the
    closed-form sup bound. Negative means the sup norm is driven to zero."""
    l, m, ls = ip.l, ip.m, ip.l_star
    if not (k > l and ls > r):
        raise ExponentError("need k > l and l* > r")
    decay = min(1 / (k - l), l / (m * (k - l)))
    return (1 - decay * (ls - l)) / (ls - r)


def scalar_norm_envelope(ip: IndexPair, k, lam, C=1.0) -> float:
    l, m = float(ip.l), float(ip.m)
    return float(C * max(lam ** (-1 / (k - l)), lam ** (-l / (m * (k - l)))))


def envelope_slope(ip: IndexPair, k) -> float:
    """Large-lambda log-log slope of the scalar norm envelope."""
    l, m = float(ip.l), float(ip.m)
    return -min(1 / (k - l), l / (m * (k - l)))
