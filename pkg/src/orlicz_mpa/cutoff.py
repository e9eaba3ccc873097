"""Radial C^1 cut-off functions equal to 1 near the origin and 0 far away.

Each family is a function of u = t^2 + s^2 (or t^2 for the scalar one) on the
annulus delta/2 < r < delta, constant 1 inside and 0 outside. Gradients come
from the chain rule d/dt = 2 t d/du.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("sine", "sine_sq", "cosine", "cosine_sq", "scalar_sine")


def _profile(kind: str, u, delta: float):
    """(rho, d rho / du) on the transition annulus."""
    d2, d4 = delta**2, delta**4
    if kind in ("sine", "scalar_sine"):
        w = u - d2
        arg = 8 * np.pi * w**2 / (9 * d4)
        return np.sin(arg), np.cos(arg) * 16 * np.pi * w / (9 * d4)
    if kind == "sine_sq":
        arg = 2 * np.pi * (u - d2) / (3 * d2)
        return np.sin(arg) ** 2, np.sin(2 * arg) * 2 * np.pi / (3 * d2)
    if kind == "cosine":
        w = u - d2 / 4
        arg = 8 * np.pi * w**2 / (9 * d4)
        return np.cos(arg), -np.sin(arg) * 16 * np.pi * w / (9 * d4)
    if kind == "cosine_sq":
        arg = 2 * np.pi * (u - d2 / 4) / (3 * d2)
        return np.cos(arg) ** 2, -np.sin(2 * arg) * 2 * np.pi / (3 * d2)
    raise ValueError(f"unknown cut-off kind {kind!r}")


@dataclass(frozen=True)
class CutoffFamily:
    kind: str
    delta: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown cut-off kind {self.kind!r}; expected one of {KINDS}")
        if not self.delta > 0:
            raise ValueError("delta must be positive")

    @property
    def scalar(self) -> bool:
        return self.kind == "scalar_sine"

    def radial(self, u):
        """rho and d rho/du as functions of u = r^2."""
        u = np.asarray(u, dtype=float)
        lo, hi = self.delta**2 / 4, self.delta**2
        val, du = _profile(self.kind, u, self.delta)
        inner, outer = u <= lo, u >= hi
        val = np.where(inner, 1.0, np.where(outer, 0.0, val))
        du = np.where(inner | outer, 0.0, du)
        return val, du

    def __call__(self, t, s=0.0):
        return eval_cutoff(self, t, s)[0]


def eval_cutoff(fam: CutoffFamily, t, s=0.0):
    """Value and analytic gradient (rho, rho_t, rho_s)."""
    t = np.asarray(t, dtype=float)
    s = np.zeros_like(t) if fam.scalar else np.asarray(s, dtype=float)
    val, du = fam.radial(t * t + s * s)
    return val, 2 * t * du, 2 * s * du


def _one_sided(fam, r0, h, side):
    """Second-order one-sided radial derivative at r0 (side=+1 outward)."""
    f = lambda r: fam.radial(r * r)[0]
    return side * (-3 * f(r0) + 4 * f(r0 + side * h) - f(r0 + 2 * side * h)) / (2 * h)


@dataclass
class CutoffReport:
    kind: str
    delta: float
    c1_mismatch_inner: float
    c1_mismatch_outer: float
    sign_violation: float
    range_violation: float
    samples: int

    @property
    def c1_mismatch(self) -> float:
        return max(self.c1_mismatch_inner, self.c1_mismatch_outer)

    def is_c1(self, tol: float = 1e-6) -> bool:
        return self.c1_mismatch <= tol

    def line(self) -> str:
        return (f"{self.kind} delta={self.delta:g}: C1 mismatch inner={self.c1_mismatch_inner:.3e} "
                f"outer={self.c1_mismatch_outer:.3e} sign violation={self.sign_violation:.3e} "
                f"range violation={self.range_violation:.3e}")


def verify_cutoff(fam: CutoffFamily, samples: int = 10_000, h: float = 1e-6,
                  seed: int = 0) -> CutoffReport:
    """Finite-difference audit of smoothness, radial monotonicity and range.

    The derivative jump at each transition circle is the difference between
    the inward and outward one-sided radial differences at step ``h``. The
    sign condition t rho_t + s rho_s <= 0 is evaluated with the analytic
    gradient on points stratified over [0, 1.5 delta] in radius.
    """
    if samples < 100:
        raise ValueError("need at least 100 samples")
    mism = []
    for r0 in (fam.delta / 2, fam.delta):
        jump = abs(_one_sided(fam, r0, h, +1) - _one_sided(fam, r0, h, -1))
        mism.append(float(jump))
    rng = np.random.default_rng(seed)
    strata = (np.arange(samples) + rng.random(samples)) / samples
    r = 1.5 * fam.delta * strata
    if fam.scalar:
        t = r * rng.choice([-1.0, 1.0], samples)
        s = np.zeros_like(t)
    else:
        ang = rng.uniform(0, 2 * np.pi, samples)
        t, s = r * np.cos(ang), r * np.sin(ang)
    val, gt, gs = eval_cutoff(fam, t, s)
    sign = float(max(0.0, np.max(t * gt + s * gs)))
    rng_bad = float(max(0.0, np.max(val - 1.0), np.max(-val)))
    return CutoffReport(fam.kind, fam.delta, mism[0], mism[1], sign, rng_bad, samples)


def cutoff_table(fam: CutoffFamily, n: int = 41, extent: float | None = None):
    """Rows (t, s, rho, rho_t, rho_s) on a uniform grid over [-extent, extent]^2."""
    extent = 1.25 * fam.delta if extent is None else extent
    axis = np.linspace(-extent, extent, n)
    if fam.scalar:
        t = axis
        s = np.zeros_like(t)
    else:
        tt, ss = np.meshgrid(axis, axis, indexing="ij")
        t, s = tt.ravel(), ss.ravel()
    val, gt, gs = eval_cutoff(fam, t, s)
    return np.column_stack([t, s, val, gt, gs])
