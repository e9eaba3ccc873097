"""Named problem definitions shipped with the package.

``worked-example``: the six-dimensional worked system with polynomial and
logarithmic kernels (hypothesis and constants pipeline only, never gridded).
``desk-scalar``: power kernel p = 1.5 in two dimensions, F = |t|^2.2.
``desk-system``: the same kernel for both components, F = |t|^2.2 + |s|^2.2.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from .cutoff import CutoffFamily
from .nfunction import GrowthKernel, IndexPair
from .nonlinearity import NonlinearitySpec, blended

PHI1_SRC = "4*|t|^2+5*|t|^3"
PHI2_SRC = "4*|t|^2*log(2+|t|)+|t|^3/(1+|t|)"
V1_SRC = "1+sum_cos2(x,6)"
V2_SRC = "1+sum_sin2(x,6)"
G_INNER_SRC = "|t|^(17/2)+|s|^(17/2)+|t|^7*|s|^7"
G_OUTER_SRC = "|t|^3+|s|^3"


def phi1_kernel() -> GrowthKernel:
    return GrowthKernel.polynomial({2.0: 4.0, 3.0: 5.0}, name="phi1")


def phi2_kernel() -> GrowthKernel:
    def phi(t):
        t = np.asarray(t, dtype=float)
        return 4 * t**2 * np.log(2 + t) + t**3 / (1 + t)
    return GrowthKernel(phi=phi, q=4.0 * np.log(2.0), l_claimed=4.0, name="phi2")


# index data as stated for the worked system, kept exact
WORKED_INDICES = IndexPair(Fraction(4), Fraction(5), 6)
WORKED_THETA = (Fraction(6), Fraction(6))


def worked_nonlinearity(weighted: bool = True) -> NonlinearitySpec:
    """The worked F with its claimed constants.

    The blend between the degree-17/2 inner part and the cubic outer part uses
    the sine transition on 4 < |(t,s)| < 8.
    """
    return blended(
        G_INNER_SRC, G_OUTER_SRC, V1_SRC if weighted else None, CutoffFamily("sine", 8.0),
        k=(9.0, 9.0), M12=(1 / 16, 1 / 16), r=(7.0, 7.0), M34=(2.0**41, 2.0**41),
        Theta=(6.0, 6.0), mu=(8.5, 8.5),
    )


@dataclass(frozen=True)
class DeskScalar:
    p: float = 1.5
    k: float = 2.2
    r: float = 2.5
    delta: float = 1.0
    dim: int = 2
    mu: float = 2.2
    D3: Optional[float] = None

    def kernel(self) -> GrowthKernel:
        return GrowthKernel.power(self.p)

    def nonlinearity(self) -> NonlinearitySpec:
        return NonlinearitySpec.from_expression(
            f"|t|^{self.k}", scalar=True, k=(self.k, None), M12=(1.0, None),
            r=(self.r, None), M34=(None, None), mu=(self.mu, None))


@dataclass(frozen=True)
class DeskSystem:
    p: float = 1.5
    k: float = 2.2
    dim: int = 2
    M34: tuple = (2.2, 2.2)
    Theta: tuple = (2.0, 2.0)

    def kernel(self) -> GrowthKernel:
        return GrowthKernel.power(self.p)

    def nonlinearity(self) -> NonlinearitySpec:
        k = self.k
        return NonlinearitySpec.from_expression(
            f"|t|^{k}+|s|^{k}", k=(k, k), M12=(1.0, 1.0), r=(k, k), M34=self.M34,
            Theta=self.Theta, mu=(k, k))


BUILTINS = ("worked-example", "desk-scalar", "desk-system")
