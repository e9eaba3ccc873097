"""Fields sampled on a uniform box grid, with quadrature, gradients and
Lebesgue / Luxemburg / Orlicz-Sobolev norms."""
from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import brentq

from .nfunction import NFunction

MEMORY_BUDGET_POINTS = 1 << 24


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-L, L]^dim with n points per axis (endpoints included)."""

    dim: int
    n: int
    L: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError("dim must be 1, 2 or 3")
        if self.n < 8:
            raise ValueError("need at least 8 points per axis")
        if not self.L > 0:
            raise ValueError("L must be positive")
        if self.n**self.dim > MEMORY_BUDGET_POINTS:
            raise ValueError(f"{self.n}^{self.dim} points exceed the memory budget")

    @property
    def h(self) -> float:
        return 2 * self.L / (self.n - 1)

    @property
    def shape(self):
        return (self.n,) * self.dim

    @cached_property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n)

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape (*shape, dim)."""
        mesh = np.meshgrid(*([self.axis] * self.dim), indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights on the nodes."""
        w1 = np.full(self.n, self.h)
        w1[[0, -1]] *= 0.5
        w = w1
        for _ in range(self.dim - 1):
            w = np.multiply.outer(w, w1)
        return w

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for ax in range(self.dim):
            idx = [slice(None)] * self.dim
            idx[ax] = 0
            mask[tuple(idx)] = True
            idx[ax] = -1
            mask[tuple(idx)] = True
        return mask

    @property
    def measure(self) -> float:
        return (2 * self.L) ** self.dim

    def sample(self, fn) -> "DiscreteField":
        """Field from fn(coords) where coords has shape (*shape, dim)."""
        return DiscreteField(self, np.asarray(fn(self.coords), dtype=float))


@dataclass(frozen=True, eq=False)
class DiscreteField:
    grid: Grid
    values: np.ndarray
    boundary: str = "zero_dirichlet"

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(self.grid.shape)
        object.__setattr__(self, "values", vals)
        if self.boundary not in ("zero_dirichlet", "periodic"):
            raise ValueError("boundary must be zero_dirichlet or periodic")

    @classmethod
    def zeros(cls, grid: Grid, boundary="zero_dirichlet"):
        return cls(grid, np.zeros(grid.shape), boundary)

    def with_values(self, values) -> "DiscreteField":
        return DiscreteField(self.grid, values, self.boundary)

    def enforce_boundary(self) -> "DiscreteField":
        if self.boundary != "zero_dirichlet":
            return self
        v = self.values.copy()
        v[self.grid.boundary_mask] = 0.0
        return self.with_values(v)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __add__(self, other):
        return self.with_values(self.values + other.values)


def integrate(f) -> float:
    """Trapezoid quadrature of a field (or of raw nodal values via .grid)."""
    return float(np.sum(f.grid.weights * f.values))


def integrate_values(grid: Grid, values) -> float:
    return float(np.sum(grid.weights * values))


def gradient(u: DiscreteField) -> np.ndarray:
    """Nodal gradient, shape (dim, *shape).

    Central differences inside; second-order one-sided differences on the
    boundary layer, or wrap-around differences for periodic fields (the last
    node duplicates the first).
    """
    g, vals = u.grid, u.values
    out = np.empty((g.dim,) + g.shape)
    for ax in range(g.dim):
        if u.boundary == "periodic":
            core = np.take(vals, np.arange(g.n - 1), axis=ax)
            d = (np.roll(core, -1, axis=ax) - np.roll(core, 1, axis=ax)) / (2 * g.h)
            out[ax] = np.concatenate([d, np.take(d, [0], axis=ax)], axis=ax)
        else:
            out[ax] = np.gradient(vals, g.h, axis=ax, edge_order=2)
    return out


def gradient_magnitude(u: DiscreteField) -> DiscreteField:
    return u.with_values(np.sqrt(np.sum(gradient(u) ** 2, axis=0)))


def lp_norm(u: DiscreteField, p: float) -> float:
    if p < 1:
        raise ValueError("p must be at least 1")
    a = np.abs(u.values)
    top = a.max()
    if top == 0:
        return 0.0
    # scale by the max to keep high powers representable
    return float(top * integrate_values(u.grid, (a / top) ** p) ** (1.0 / p))


def modular(u: DiscreteField, nf: NFunction, alpha: float) -> float:
    return integrate_values(u.grid, nf(np.abs(u.values) / alpha))


def luxemburg_norm(u: DiscreteField, nf: NFunction, rtol: float = 1e-10) -> float:
    """inf{alpha > 0 : int Phi(|u|/alpha) <= 1} by bracketing root search in log alpha."""
    a = np.abs(u.values)
    if not np.any(a > 0):
        return 0.0
    w = u.grid.weights
    f = lambda la: float(np.sum(w * nf(a / np.exp(la)))) - 1.0
    lo = hi = float(np.log(a.max()))
    for _ in range(200):
        if f(hi) <= 0:
            break
        hi += 2.0
    else:
        raise RuntimeError("modular stays above 1 on the bracket")
    for _ in range(400):
        if f(lo) > 0:
            break
        lo -= 2.0
    else:
        raise RuntimeError("modular never exceeds 1 on the bracket")
    la = brentq(f, lo, hi, xtol=rtol * 0.1, rtol=4 * np.finfo(float).eps, maxiter=500)
    return float(np.exp(la))


def orlicz_sobolev_norm(u: DiscreteField, nf: NFunction) -> float:
    """||u||_Phi + || |grad u| ||_Phi."""
    return luxemburg_norm(u, nf) + luxemburg_norm(gradient_magnitude(u), nf)


def random_bump_field(grid: Grid, rng: np.random.Generator, bumps: int = 3) -> DiscreteField:
    """Smooth field vanishing on the boundary: a sum of Gaussians times a window."""
    x = grid.coords
    L = grid.L
    vals = np.zeros(grid.shape)
    for _ in range(bumps):
        c = rng.uniform(-0.5 * L, 0.5 * L, grid.dim)
        width = rng.uniform(0.1, 0.4) * L
        amp = rng.uniform(-1.0, 1.0)
        vals += amp * np.exp(-np.sum((x - c) ** 2, axis=-1) / (2 * width**2))
    window = np.prod(np.cos(0.5 * np.pi * x / L), axis=-1)
    return DiscreteField(grid, vals * window).enforce_boundary()


def estimate_embedding_constant(nf: NFunction, p: float, trials: int, grid: Grid,
                                seed: int = 0, inflate: float = 1.1) -> float:
    """Largest ||u||_p / ||u||_{1,Phi} over random smooth fields, times ``inflate``.

    An empirical estimate, not a bound.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        u = random_bump_field(grid, rng)
        best = max(best, lp_norm(u, p) / orlicz_sobolev_norm(u, nf))
    return inflate * best


# serialization

_HEADER = struct.Struct("<qqd")


def to_csv(u: DiscreteField) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index"] + [f"x{i + 1}" for i in range(u.grid.dim)] + ["value"])
    coords = u.grid.coords.reshape(-1, u.grid.dim)
    for i, (c, v) in enumerate(zip(coords, u.flat)):
        w.writerow([i] + [repr(float(a)) for a in c] + [repr(float(v))])
    return buf.getvalue()


def from_csv(text: str, L: float | None = None, boundary="zero_dirichlet") -> DiscreteField:
    rows = list(csv.reader(io.StringIO(text)))
    dim = len(rows[0]) - 2
    data = np.array(rows[1:], dtype=float)
    n = round(len(data) ** (1.0 / dim))
    L = float(np.max(np.abs(data[:, 1:1 + dim]))) if L is None else L
    return DiscreteField(Grid(dim, n, L), data[:, -1], boundary)


def to_bytes(u: DiscreteField) -> bytes:
    g = u.grid
    return _HEADER.pack(g.dim, g.n, g.L) + u.flat.astype("<f8").tobytes()


def from_bytes(data: bytes, boundary="zero_dirichlet") -> DiscreteField:
    dim, n, L = _HEADER.unpack_from(data)
    vals = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if vals.size != n**dim:
        raise ValueError(f"expected {n**dim} values, found {vals.size}")
    return DiscreteField(Grid(int(dim), int(n), float(L)), vals.copy(), boundary)


def save(u: DiscreteField, path: str):
    if str(path).endswith(".csv"):
        with open(path, "w", newline="") as fh:
            fh.write(to_csv(u))
    else:
        with open(path, "wb") as fh:
            fh.write(to_bytes(u))


def load(path: str) -> DiscreteField:
    if str(path).endswith(".csv"):
        with open(path) as fh:
            return from_csv(fh.read())
    with open(path, "rb") as fh:
        return from_bytes(fh.read())
