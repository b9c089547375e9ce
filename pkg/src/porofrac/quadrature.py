"""Quadrature rules on the reference triangle and the reference edge.

Triangle rules are given in barycentric-independent form: points are
(r, s) coordinates on the reference triangle (0,0)-(1,0)-(0,1), weights
sum to the reference area 1/2.  Edge rules live on [0, 1] with weights
summing to 1.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QuadratureRule:
    """Points and weights with a stated polynomial exactness degree."""

    points: np.ndarray  # (n, 2) on the triangle, (n,) on the edge
    weights: np.ndarray  # (n,)
    degree: int

    def __post_init__(self):
        if np.any(self.weights <= 0.0):
            raise ValueError("quadrature weights must be positive")


def triangle_rule(degree: int) -> QuadratureRule:
    """Symmetric Gauss rule on the reference triangle, exact to `degree`."""
    if degree <= 1:
        pts = np.array([[1.0 / 3.0, 1.0 / 3.0]])
        wts = np.array([0.5])
        return QuadratureRule(pts, wts, 1)
    if degree == 2:
        # Edge-midpoint rule, exact for quadratics.
        pts = np.array([[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]])
        wts = np.full(3, 1.0 / 6.0)
        return QuadratureRule(pts, wts, 2)
    if degree <= 4:
        # 6-point rule of degree 4.
        a1, b1 = 0.816847572980459, 0.091576213509771
        a2, b2 = 0.108103018168070, 0.445948490915965
        w1, w2 = 0.109951743655322, 0.223381589678011
        pts = np.array(
            [
                [a1, b1],
                [b1, a1],
                [b1, b1],
                [a2, b2],
                [b2, a2],
                [b2, b2],
            ]
        )
        wts = 0.5 * np.array([w1, w1, w1, w2, w2, w2])
        return QuadratureRule(pts, wts, 4)
    if degree <= 6:
        # 12-point rule of degree 6.
        a1, b1 = 0.873821971016996, 0.063089014491502
        a2, b2 = 0.501426509658179, 0.249286745170910
        a3, b3, c3 = 0.636502499121399, 0.310352451033785, 0.053145049844816
        w1, w2, w3 = 0.050844906370207, 0.116786275726379, 0.082851075618374
        pts = np.array(
            [
                [a1, b1],
                [b1, a1],
                [b1, b1],
                [a2, b2],
                [b2, a2],
                [b2, b2],
                [a3, b3],
                [a3, c3],
                [b3, a3],
                [b3, c3],
                [c3, a3],
                [c3, b3],
            ]
        )
        wts = 0.5 * np.array([w1] * 3 + [w2] * 3 + [w3] * 6)
        return QuadratureRule(pts, wts, 6)
    raise ValueError(f"no triangle rule of degree {degree}")


def edge_rule(degree: int) -> QuadratureRule:
    """Gauss-Legendre rule mapped to [0, 1], exact to `degree`."""
    npts = degree // 2 + 1
    x, w = np.polynomial.legendre.leggauss(npts)
    return QuadratureRule(0.5 * (x + 1.0), 0.5 * w, 2 * npts - 1)


def p1_triangle_basis(points: np.ndarray) -> np.ndarray:
    """P1 shape functions (n_pts, 3) at reference coordinates (r, s)."""
    r, s = points[:, 0], points[:, 1]
    return np.column_stack([1.0 - r - s, r, s])


def p1_edge_basis(points: np.ndarray) -> np.ndarray:
    """P1 shape functions (n_pts, 2) at reference coordinate on [0, 1]."""
    return np.column_stack([1.0 - points, points])
