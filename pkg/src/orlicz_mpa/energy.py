"""Discrete modified energy and its exact gradient on a box grid.

The gradient part lives on cells: for each cell and axis the squared forward
differences along the 2^(d-1) parallel cell edges are averaged, and the cell
gradient magnitude g is the square root of the sum over axes. The energy is

    E(u) = sum_cells h^d Phi(g) + sum_nodes w V Phi(|u|) - lam sum_nodes w F~(x, u, v)

with trapezoid node weights w. Differentiating this sum directly gives a
conservative edge-flux stencil (the (2d+1)-point Laplacian when phi = 1), so
the discrete residual is the exact gradient of the discrete energy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .field import DiscreteField, Grid
from .nfunction import NFunction

# phi(g) is only replaced at exact (or subnormal) zero: there the cell's
# contribution to the gradient vanishes because every edge difference does
PHI_ZERO_GUARD = 1e-300


def _avg(a, axis):
    sl0 = [slice(None)] * a.ndim
    sl1 = [slice(None)] * a.ndim
    sl0[axis], sl1[axis] = slice(None, -1), slice(1, None)
    return 0.5 * (a[tuple(sl0)] + a[tuple(sl1)])


def _avg_T(a, axis):
    """Adjoint of _avg: spread half of each value to both neighbours."""
    shape = list(a.shape)
    shape[axis] += 1
    out = np.zeros(shape)
    sl0 = [slice(None)] * a.ndim
    sl1 = [slice(None)] * a.ndim
    sl0[axis], sl1[axis] = slice(None, -1), slice(1, None)
    out[tuple(sl0)] += 0.5 * a
    out[tuple(sl1)] += 0.5 * a
    return out


def _diff_T(f, axis, h):
    """Adjoint of forward difference / h."""
    shape = list(f.shape)
    shape[axis] += 1
    out = np.zeros(shape)
    sl0 = [slice(None)] * f.ndim
    sl1 = [slice(None)] * f.ndim
    sl0[axis], sl1[axis] = slice(None, -1), slice(1, None)
    out[tuple(sl0)] -= f / h
    out[tuple(sl1)] += f / h
    return out


class GradientEnergy:
    """Cell-averaged gradient energy sum_cells h^d Phi(g) on one grid."""

    def __init__(self, grid: Grid):
        self.grid = grid
        self.cell_volume = grid.h**grid.dim

    def edge_diffs(self, u):
        return [np.diff(u, axis=a) / self.grid.h for a in range(self.grid.dim)]

    def _cell_sq(self, diffs):
        g2 = 0.0
        d = self.grid.dim
        for a, Da in enumerate(diffs):
            sq = Da * Da
            for b in range(d):
                if b != a:
                    sq = _avg(sq, b)
            g2 = g2 + sq
        return g2

    def cell_gradient(self, u) -> np.ndarray:
        return np.sqrt(self._cell_sq(self.edge_diffs(u)))

    def value(self, nf: NFunction, u) -> float:
        return float(self.cell_volume * np.sum(nf(self.cell_gradient(u))))

    def edge_coefficients(self, phi_cells):
        """kappa_a on the axis-a edges from cell values h^d phi(g)."""
        d = self.grid.dim
        out = []
        for a in range(d):
            k = phi_cells
            for b in range(d):
                if b != a:
                    k = _avg_T(k, b)
            out.append(k)
        return out

    def cell_phi(self, nf: NFunction, g):
        safe = np.where(g > PHI_ZERO_GUARD, g, 1.0)
        return np.where(g > PHI_ZERO_GUARD, nf.phi(safe), 0.0)

    def gradient(self, nf: NFunction, u) -> np.ndarray:
        diffs = self.edge_diffs(u)
        g = np.sqrt(self._cell_sq(diffs))
        coef = self.cell_volume * self.cell_phi(nf, g)
        out = np.zeros(self.grid.shape)
        for a, (Da, ka) in enumerate(zip(diffs, self.edge_coefficients(coef))):
            out += _diff_T(ka * Da, a, self.grid.h)
        return out

    @cached_property
    def difference_matrices(self):
        """Sparse forward-difference operators (edges x nodes) per axis."""
        n, d, h = self.grid.n, self.grid.dim, self.grid.h
        I = sp.identity(n, format="csr")
        D1 = sp.diags([-np.ones(n - 1), np.ones(n - 1)], [0, 1], shape=(n - 1, n)) / h
        mats = []
        for a in range(d):
            m = None
            for b in range(d):
                f = D1 if b == a else I
                m = f if m is None else sp.kron(m, f, format="csr")
            mats.append(m.tocsr())
        return mats


def _as_nodal(grid: Grid, V) -> np.ndarray:
    if V is None:
        return np.ones(grid.shape)
    if callable(V):
        return np.broadcast_to(np.asarray(V(grid.coords), dtype=float), grid.shape).copy()
    return np.broadcast_to(np.asarray(V, dtype=float), grid.shape).copy()


@dataclass
class Problem:
    """Modified energy for one component (scalar) or two (system).

    ``modified`` exposes evaluate(x, t, s) -> (F~, F~_t, F~_s); x is passed
    only when the nonlinearity depends on position.
    """

    nfs: Sequence[NFunction]
    modified: object
    lam: float
    grid: Grid
    potentials: Sequence = (None, None)
    name: str = "problem"

    def __post_init__(self):
        self.ncomp = len(self.nfs)
        if self.ncomp not in (1, 2):
            raise ValueError("one or two components")
        self.V = [_as_nodal(self.grid, self.potentials[i] if i < len(self.potentials) else None)
                  for i in range(self.ncomp)]
        self.w = self.grid.weights
        self.interior = ~self.grid.boundary_mask
        self.n_int = int(self.interior.sum())
        self.grad_energy = GradientEnergy(self.grid)
        base = getattr(self.modified, "base", None)
        self._x = None
        if base is not None and getattr(base, "x_dim", 0):
            self._x = self.grid.coords.reshape(-1, self.grid.dim)

    @property
    def size(self) -> int:
        return self.ncomp * self.n_int

    def with_lambda(self, lam: float) -> "Problem":
        return Problem(self.nfs, self.modified, lam, self.grid, self.potentials, self.name)

    def v_inf(self):
        """Minimum of each potential over the grid (stand-in for the infimum)."""
        return [float(v.min()) for v in self.V]

    # state <-> fields

    def unpack(self, state) -> list:
        out = []
        for i in range(self.ncomp):
            u = np.zeros(self.grid.shape)
            u[self.interior] = state[i * self.n_int:(i + 1) * self.n_int]
            out.append(u)
        return out

    def pack(self, arrays) -> np.ndarray:
        return np.concatenate([np.asarray(a).reshape(self.grid.shape)[self.interior]
                               for a in arrays])

    def fields(self, state) -> list:
        return [DiscreteField(self.grid, u) for u in self.unpack(state)]

    def state_from_fields(self, *fields) -> np.ndarray:
        return self.pack([f.values if isinstance(f, DiscreteField) else f for f in fields])

    def _nonlinear(self, us):
        t = us[0].ravel()
        s = us[1].ravel() if self.ncomp == 2 else np.zeros_like(t)
        val, dt, ds = self.modified.evaluate(self._x, t, s)
        shp = self.grid.shape
        return np.reshape(val, shp), np.reshape(dt, shp), np.reshape(ds, shp)

    # energy

    def energy_parts(self, state) -> dict:
        us = self.unpack(state)
        grad = sum(self.grad_energy.value(nf, u) for nf, u in zip(self.nfs, us))
        pot = sum(float(np.sum(self.w * V * nf(u))) for nf, V, u in zip(self.nfs, self.V, us))
        F = float(np.sum(self.w * self._nonlinear(us)[0]))
        return {"gradient": grad, "potential": pot, "nonlinear": F}

    def energy(self, state) -> float:
        p = self.energy_parts(state)
        return p["gradient"] + p["potential"] - self.lam * p["nonlinear"]

    def gradient_fields(self, state) -> list:
        """dE/du at every node (boundary entries are not free variables)."""
        us = self.unpack(state)
        _, dt, ds = self._nonlinear(us)
        parts = []
        for i, (nf, V, u) in enumerate(zip(self.nfs, self.V, us)):
            df = dt if i == 0 else ds
            g = self.grad_energy.gradient(nf, u) + self.w * (V * nf.deriv(u) - self.lam * df)
            parts.append(g)
        return parts

    def gradient(self, state) -> np.ndarray:
        return self.pack(self.gradient_fields(state))

    def residual(self, state) -> list:
        """Nodal strong-form residual (dE/du divided by the node weight),
        zero on the boundary layer."""
        out = []
        for g in self.gradient_fields(state):
            r = np.where(self.interior, g / self.w, 0.0)
            out.append(DiscreteField(self.grid, r))
        return out

    def forcing_scale(self, state) -> float:
        us = self.unpack(state)
        _, dt, ds = self._nonlinear(us)
        parts = [np.abs(dt)] + ([np.abs(ds)] if self.ncomp == 2 else [])
        return float(self.lam * max(p[self.interior].max() for p in parts))

    def scaled_residual(self, state) -> float:
        """sup |residual| relative to the sup of the forcing lam |F~_t|."""
        r = max(f.sup() for f in self.residual(state))
        scale = self.forcing_scale(state)
        return r / scale if scale > 0 else r

    # preconditioner

    def preconditioner(self, state, floor: float = 1e-8, ridge: float = 1e-10):
        """Lagged-diffusivity operator K(u) and a solver for K z = g.

        K = sum_a D_a^T diag(kappa_a) D_a + diag(w V phi(|u|)) restricted to the
        interior, with phi evaluated at magnitudes floored at ``floor`` times the
        current maximum. It is symmetric positive definite and matches the
        energy's convex part, so K^{-1} g is a Kacanov-type descent direction.
        """
        us = self.unpack(state)
        mats = self.grad_energy.difference_matrices
        keep = self.interior.ravel()
        blocks = []
        for nf, V, u in zip(self.nfs, self.V, us):
            diffs = self.grad_energy.edge_diffs(u)
            g = np.sqrt(self.grad_energy._cell_sq(diffs))
            gmax = g.max()
            gf = np.maximum(g, floor * gmax) if gmax > 0 else np.ones_like(g)
            coef = self.grad_energy.cell_volume * nf.phi(gf)
            K = None
            for D, ka in zip(mats, self.grad_energy.edge_coefficients(coef)):
                term = D.T @ sp.diags(ka.ravel()) @ D
                K = term if K is None else K + term
            a = np.abs(u)
            amax = a.max()
            af = np.maximum(a, floor * amax) if amax > 0 else np.ones_like(a)
            diag = (self.w * V * nf.phi(af)).ravel()
            K = (K + sp.diags(diag)).tocsc()[keep][:, keep]
            scale = float(K.diagonal().max())
            K = K + sp.identity(K.shape[0], format="csc") * ridge * scale
            blocks.append(splu(K.tocsc()))

        def solve(vec):
            out = np.empty_like(vec)
            for i, lu in enumerate(blocks):
                sl = slice(i * self.n_int, (i + 1) * self.n_int)
                out[sl] = lu.solve(vec[sl])
            return out

        return solve

    # audit

    def gateaux_audit(self, state, direction, eps: float = 1e-5):
        """(analytic, finite-difference) directional derivatives."""
        analytic = float(np.dot(self.gradient(state), direction))
        fd = (self.energy(state + eps * direction) - self.energy(state - eps * direction)) / (2 * eps)
        return analytic, fd


def bump(grid: Grid, radius: Optional[float] = None) -> np.ndarray:
    """Smooth compactly supported bump exp(-1/(1-|x|^2/R^2)) scaled to max 1."""
    R = 0.75 * grid.L if radius is None else radius
    r2 = np.sum(grid.coords**2, axis=-1) / R**2
    out = np.zeros(grid.shape)
    inside = r2 < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    out[grid.boundary_mask] = 0.0
    return out
