"""Nonlinear fracture-face operators: normal compliance and friction.

The normal law resists once the (signed) normal jump exceeds the rest
width; the tangential law bounds friction traction by a power of the same
penetration measure.  Friction is regularized with the smooth norm
psi_eps(v) = sqrt(|v|^2 + eps^2) - eps, which satisfies

    0 <= psi_eps(v) <= |v|,   |psi_eps'(w) v| <= |v|,   | psi_eps(v) - |v| | <= eps,

i.e. the admissibility conditions with unit constants.
"""

from dataclasses import dataclass

import numpy as np

from .geometry import DofMap, FractureMesh, Mesh2D
from .kernels import friction_kernel, normal_compliance_kernel
from .materials import MaterialParams, power_positive
from .quadrature import edge_rule, p1_edge_basis


def psi_eps(v, eps: float):
    """Smooth norm regularization; v has shape (..., 2) or (2,)."""
    if eps <= 0.0:
        raise ValueError("regularization parameter eps must be positive")
    v = np.asarray(v, dtype=float)
    mag = np.linalg.norm(v, axis=-1)
    return np.sqrt(mag**2 + eps**2) - eps


def psi_eps_grad(v, eps: float):
    if eps <= 0.0:
        raise ValueError("regularization parameter eps must be positive")
    v = np.asarray(v, dtype=float)
    mag2 = np.sum(v**2, axis=-1, keepdims=True)
    return v / np.sqrt(mag2 + eps**2)


@dataclass
class ContactState:
    """Per-quadrature-point contact observables."""

    delta: np.ndarray          # penetration measure, >= 0
    normal_traction: np.ndarray
    slip_rate: np.ndarray      # tangential jump velocity, (n, 2)
    traction_t: np.ndarray     # regularized friction traction, (n, 2)
    stick: np.ndarray          # bool per point
    weights: np.ndarray        # quadrature weight x edge length


class FractureQuadrature:
    """Precomputed fracture-edge quadrature data for the contact operators.

    Residual vectors live on the full displacement numbering (2 n_nodes);
    restrict with the DofMap before feeding the solver.
    """

    def __init__(self, mesh: Mesh2D, frac: FractureMesh, dofmap: DofMap, degree: int = 5):
        rule = edge_rule(degree)
        self.qp = rule.points
        self.qw = rule.weights
        self.basis = p1_edge_basis(rule.points)
        self.ed_nodes = np.column_stack([frac.edges_plus, frac.edges_minus]).astype(
            np.int64
        )
        self.normals = frac.normals
        self.lengths = frac.lengths
        self.n_full = 2 * mesh.n_nodes
        arc0 = frac.node_arc[:-1]
        self.arcs = arc0[None, :] + rule.points[:, None] * frac.lengths[None, :]

    # -- jump evaluation ----------------------------------------------------
    def jumps(self, vec_full: np.ndarray) -> np.ndarray:
        """Jump of a displacement-like field at each (quad point, edge)."""
        v = vec_full.reshape(-1, 2)
        dj_a = v[self.ed_nodes[:, 0]] - v[self.ed_nodes[:, 2]]
        dj_b = v[self.ed_nodes[:, 1]] - v[self.ed_nodes[:, 3]]
        fa = (1.0 - self.qp)[:, None, None]
        fb = self.qp[:, None, None]
        return fa * dj_a[None] + fb * dj_b[None]

    def penetration(self, u_full: np.ndarray, params: MaterialParams) -> np.ndarray:
        """(jump_sign * (-[u].n+) - g0)_+ at each (quad point, edge)."""
        jn = -np.einsum("qec,ec->qe", self.jumps(u_full), self.normals)
        return np.maximum(params.jump_sign * jn - params.rest_width, 0.0)

    def tangential(self, jumps: np.ndarray) -> np.ndarray:
        jn = np.einsum("qec,ec->qe", jumps, self.normals)
        return jumps - jn[:, :, None] * self.normals[None]

    def integrate(self, values: np.ndarray) -> float:
        """Sum of values (nq, ne) against quadrature weights and lengths."""
        return float(np.einsum("q,e,qe->", self.qw, self.lengths, values))

    # -- operators ------------------------------------------------------------
    def normal_residual(self, u_full: np.ndarray, params: MaterialParams) -> np.ndarray:
        """Discrete normal-compliance functional against every test dof."""
        return normal_compliance_kernel(
            u_full,
            self.ed_nodes,
            self.normals,
            self.lengths,
            self.qp,
            self.qw,
            params.contact_stiffness,
            params.contact_exponent,
            params.rest_width,
            params.jump_sign,
        )

    def friction_residual(
        self, u_full: np.ndarray, x_full: np.ndarray, eps: float, params: MaterialParams
    ) -> np.ndarray:
        """Gateaux derivative of the regularized friction energy in the
        velocity argument, assembled against every test dof."""
        if eps <= 0.0:
            raise ValueError("regularization parameter eps must be positive")
        return friction_kernel(
            u_full,
            x_full,
            self.ed_nodes,
            self.normals,
            self.lengths,
            self.qp,
            self.qw,
            params.friction_coefficient,
            params.friction_exponent,
            params.rest_width,
            params.jump_sign,
            eps,
        )

    def friction_functional(
        self, u_full: np.ndarray, v_full: np.ndarray, params: MaterialParams
    ) -> float:
        """Nonsmooth friction functional: threshold(u) times |v_T|."""
        delta = self.penetration(u_full, params)
        vt = self.tangential(self.jumps(v_full))
        mag = np.linalg.norm(vt, axis=-1)
        vals = params.friction_coefficient * power_positive(
            delta, params.friction_exponent
        ) * mag
        return self.integrate(vals)

    def regularized_friction_value(
        self, u_full: np.ndarray, v_full: np.ndarray, eps: float, params: MaterialParams
    ) -> float:
        delta = self.penetration(u_full, params)
        vt = self.tangential(self.jumps(v_full))
        vals = params.friction_coefficient * power_positive(
            delta, params.friction_exponent
        ) * psi_eps(vt, eps)
        return self.integrate(vals)

    def contact_energy(self, u_full: np.ndarray, params: MaterialParams) -> float:
        """Stored normal-compliance energy c_n/(m_n+1) * integral delta^(m_n+1)."""
        delta = self.penetration(u_full, params)
        vals = power_positive(delta, params.contact_exponent + 1.0)
        return params.contact_stiffness / (params.contact_exponent + 1.0) * self.integrate(vals)

    def state(
        self, u_full: np.ndarray, x_full: np.ndarray, eps: float, params: MaterialParams
    ) -> ContactState:
        delta = self.penetration(u_full, params).ravel()
        slip = self.tangential(self.jumps(x_full)).reshape(-1, 2)
        normal_traction = params.contact_stiffness * power_positive(
            delta, params.contact_exponent
        )
        thresh = params.friction_coefficient * power_positive(
            delta, params.friction_exponent
        )
        traction = -thresh[:, None] * psi_eps_grad(slip, eps)
        stick, _ = classify_stick_slip(traction, delta, slip, params)
        weights = np.einsum("q,e->qe", self.qw, self.lengths).ravel()
        return ContactState(
            delta=delta,
            normal_traction=normal_traction,
            slip_rate=slip,
            traction_t=traction,
            stick=stick,
            weights=weights,
        )


def classify_stick_slip(
    sigma_t: np.ndarray,
    delta: np.ndarray,
    slip_rate: np.ndarray,
    params: MaterialParams,
    tol: float = None,
    angle_tol: float = 1e-6,
):
    """Stick/slip split per quadrature point.

    Stick when the tangential traction magnitude sits strictly below the
    penetration-dependent threshold (minus tolerance); slip otherwise, with
    the least-squares multiplier lam >= 0 of slip_rate = -lam sigma_t.
    lam is reported only where the slip rate is anti-parallel to the
    traction within the angular tolerance (NaN elsewhere).
    Returns (stick mask, lam array).
    """
    sigma_t = np.atleast_2d(np.asarray(sigma_t, dtype=float))
    slip_rate = np.atleast_2d(np.asarray(slip_rate, dtype=float))
    delta = np.atleast_1d(np.asarray(delta, dtype=float))
    thresh = params.friction_coefficient * power_positive(
        delta, params.friction_exponent
    )
    if tol is None:
        tol = 1e-8 * (float(thresh.max(initial=0.0)) + 1e-300)
    mag = np.linalg.norm(sigma_t, axis=-1)
    # zero threshold (no penetration): traction must vanish, state is stick
    stick = np.where(thresh <= tol, True, mag < thresh - tol)
    lam = np.full(delta.shape, np.nan)
    slipping = ~stick
    if np.any(slipping):
        num = -np.einsum("nc,nc->n", slip_rate[slipping], sigma_t[slipping])
        den = np.einsum("nc,nc->n", sigma_t[slipping], sigma_t[slipping])
        rate_mag = np.linalg.norm(slip_rate[slipping], axis=-1)
        cos = num / np.maximum(np.sqrt(den) * rate_mag, 1e-300)
        fit = np.maximum(num / np.maximum(den, 1e-300), 0.0)
        aligned = (rate_mag <= 1e-300) | (cos >= 1.0 - angle_tol)
        lam[slipping] = np.where(aligned, fit, np.nan)
    return stick, lam


def normal_compliance_residual(
    u_full: np.ndarray, mesh: Mesh2D, frac: FractureMesh, dofmap: DofMap,
    params: MaterialParams,
) -> np.ndarray:
    """Convenience wrapper building the quadrature grid on the fly."""
    return FractureQuadrature(mesh, frac, dofmap).normal_residual(u_full, params)
