"""Gauss and Gauss-Lobatto rules on the unit reference cell [0, 1],
plus the Lagrange-basis operators the nodal DG discretization needs.

Weights are normalized to sum to one on [0, 1]. The first Gauss-Lobatto
weight is the constant in the positivity CFL condition
alpha*(dt/dx + dt/dy) <= w_lobatto[0].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial import legendre

from .errors import ConfigurationError


def gauss_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [0, 1]; exact to degree 2n - 1."""
    if n < 1:
        raise ConfigurationError("gauss_rule needs n >= 1")
    x, w = legendre.leggauss(n)
    return (x + 1.0) / 2.0, w / 2.0


def gauss_lobatto_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Lobatto rule on [0, 1]; exact to degree 2n - 3.

    Nodes are the endpoints plus the roots of P'_{n-1}; the weight at
    node x is 1/(n(n-1) P_{n-1}(x)^2) after normalization to [0, 1].
    """
    if n < 2:
        raise ConfigurationError("gauss_lobatto_rule needs n >= 2")
    coeff = np.zeros(n)
    coeff[-1] = 1.0  # P_{n-1}
    interior = legendre.legroots(legendre.legder(coeff))
    x = np.concatenate(([-1.0], np.sort(interior), [1.0]))
    w = 2.0 / (n * (n - 1) * legendre.legval(x, coeff) ** 2)
    return (x + 1.0) / 2.0, w / 2.0


def lagrange_eval_matrix(nodes: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Matrix V with V[p, b] = l_b(points[p]) for the Lagrange basis on
    ``nodes``. Small node counts only; direct product formula."""
    nodes = np.asarray(nodes, dtype=float)
    points = np.asarray(points, dtype=float)
    n = len(nodes)
    v = np.ones((len(points), n))
    for b in range(n):
        for c in range(n):
            if c != b:
                v[:, b] *= (points - nodes[c]) / (nodes[b] - nodes[c])
    return v


def lagrange_derivative_matrix(nodes: np.ndarray) -> np.ndarray:
    """Matrix D with D[a, b] = l_b'(nodes[a]) (barycentric formulas)."""
    nodes = np.asarray(nodes, dtype=float)
    n = len(nodes)
    bary = np.ones(n)
    for b in range(n):
        for c in range(n):
            if c != b:
                bary[b] /= nodes[b] - nodes[c]
    d = np.zeros((n, n))
    for a in range(n):
        for b in range(n):
            if a != b:
                d[a, b] = (bary[b] / bary[a]) / (nodes[a] - nodes[b])
        d[a, a] = -d[a].sum()
    return d


@dataclass(frozen=True)
class QuadratureSet:
    """Quadrature machinery for one polynomial degree k.

    gauss: L = k+1 Gauss nodes/weights (the DG nodal points).
    lobatto: the smallest Gauss-Lobatto rule with 2*Lhat - 3 >= k (which
    also satisfies 2*Lhat - 1 >= k), at least two points.
    Operators on the reference cell:
      deriv[a, b]      = l_b'(gauss[a])
      stiffness[a, b]  = w_b * l_a'(gauss[b])   (weak volume term)
      edge0[b], edge1[b] = l_b(0), l_b(1)       (face traces)
      to_lobatto[p, b] = l_b(lobatto[p])
    """

    degree: int
    gauss_points: np.ndarray
    gauss_weights: np.ndarray
    lobatto_points: np.ndarray
    lobatto_weights: np.ndarray
    deriv: np.ndarray
    stiffness: np.ndarray
    edge0: np.ndarray
    edge1: np.ndarray
    to_lobatto: np.ndarray

    @property
    def first_lobatto_weight(self) -> float:
        return float(self.lobatto_weights[0])


def quadrature_set(degree: int) -> QuadratureSet:
    if degree < 0:
        raise ConfigurationError("polynomial degree must be >= 0")
    n_gauss = degree + 1
    n_lob = max(2, int(np.ceil((degree + 3) / 2.0)))
    gx, gw = gauss_rule(n_gauss)
    lx, lw = gauss_lobatto_rule(n_lob)
    deriv = lagrange_derivative_matrix(gx)
    # stiffness[a, b] = l_a'(gauss[b]) * w_b
    stiffness = deriv.T * gw[None, :]
    ends = lagrange_eval_matrix(gx, np.array([0.0, 1.0]))
    return QuadratureSet(
        degree=degree,
        gauss_points=gx,
        gauss_weights=gw,
        lobatto_points=lx,
        lobatto_weights=lw,
        deriv=deriv,
        stiffness=stiffness,
        edge0=ends[0],
        edge1=ends[1],
        to_lobatto=lagrange_eval_matrix(gx, lx),
    )
