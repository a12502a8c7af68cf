"""Gauss-Jacobi rules on [0, 1] for the weight (1 - t)^a * t^b.

Nodes and weights come from the classical recurrence-coefficient route: the
Jacobi matrix of the three-term recurrence is assembled from closed-form
coefficients and diagonalized (Golub-Welsch).  This stays robust for the
negative exponents b = r - alpha produced by weakly singular kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, InvalidExponent


def beta_fn(x: float, y: float) -> float:
    """Euler Beta via log-gamma; arguments must be positive."""
    if x <= 0 or y <= 0:
        raise DomainError("beta_fn requires positive arguments, got (%g, %g)" % (x, y))
    return math.exp(math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y))


@dataclass(frozen=True)
class Rule1D:
    """Quadrature nodes/weights on (0, 1) for the weight (1 - t)^a * t^b."""

    nodes: np.ndarray
    weights: np.ndarray
    exponents: tuple[float, float]
    points: int

    def apply(self, values: np.ndarray) -> float:
        return float(self.weights @ values)

    def moment(self, m: int) -> float:
        """Rule applied to t^m."""
        return float(self.weights @ self.nodes**m)


def _jacobi_recurrence(p: int, a: float, b: float):
    """Diagonal and squared off-diagonal of the Jacobi matrix on [-1, 1],
    plus the total mass of the weight (1-x)^a (1+x)^b."""
    mu0 = 2.0 ** (a + b + 1.0) * beta_fn(a + 1.0, b + 1.0)
    diag = np.zeros(p)
    offsq = np.zeros(max(p - 1, 0))
    apb = a + b
    diag[0] = (b - a) / (apb + 2.0)
    for k in range(1, p):
        den = (2.0 * k + apb) * (2.0 * k + apb + 2.0)
        diag[k] = (b * b - a * a) / den
        if k == 1:
            offsq[0] = 4.0 * (a + 1.0) * (b + 1.0) / ((apb + 2.0) ** 2 * (apb + 3.0))
        else:
            offsq[k - 1] = (4.0 * k * (k + a) * (k + b) * (k + apb)
                            / ((2.0 * k + apb) ** 2
                               * (2.0 * k + apb + 1.0) * (2.0 * k + apb - 1.0)))
    return diag, offsq, mu0


@lru_cache(maxsize=4096)
def gauss_jacobi(p: int, a: float, b: float) -> Rule1D:
    """p-point rule exact to degree 2p-1 for the weight (1-t)^a t^b on [0, 1]."""
    if p < 1:
        raise InvalidExponent("need at least one quadrature point, got p=%d" % p)
    if a <= -1.0 or b <= -1.0:
        raise InvalidExponent(
            "weight (1-t)^%g t^%g is not integrable; exponents must exceed -1" % (a, b))
    a = float(a)
    b = float(b)
    diag, offsq, mu0 = _jacobi_recurrence(p, a, b)
    if p == 1:
        x = diag
        w = np.array([mu0])
    else:
        x, vecs = eigh_tridiagonal(diag, np.sqrt(offsq))
        w = mu0 * vecs[0, :] ** 2
    nodes = 0.5 * (x + 1.0)
    weights = w * 2.0 ** (-a - b - 1.0)
    order = np.argsort(nodes)
    nodes = np.ascontiguousarray(nodes[order])
    weights = np.ascontiguousarray(weights[order])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return Rule1D(nodes=nodes, weights=weights, exponents=(a, b), points=p)


def gauss_legendre(p: int) -> Rule1D:
    """Plain Gauss rule on [0, 1] (unit weight)."""
    return gauss_jacobi(p, 0.0, 0.0)
