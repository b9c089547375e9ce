"""Hot numeric kernels: element matrices and fracture contact quadrature.

Each kernel exists twice, a numba ``@njit`` loop and a vectorized numpy
twin; ``backend.active_backend()`` picks the path at call time.  Both
twins evaluate the same per-element/per-quadrature-point formulas, so they
agree to rounding.

Local displacement dof ordering inside an element is node-major,
component-minor: local index 2 k + c for node k and component c.
"""

import math

import numpy as np

from .backend import HAVE_NUMBA, active_backend

if HAVE_NUMBA:
    from numba import njit
else:  # pragma: no cover - stripped installs only
    def njit(*args, **kwargs):
        def wrap(f):
            return f

        if args and callable(args[0]):
            return args[0]
        return wrap


# ---------------------------------------------------------------------------
# triangle element matrices


def tri_geometry(nodes: np.ndarray, triangles: np.ndarray):
    """P1 gradients (m, 3, 2) and signed areas (m,) per triangle."""
    p = nodes[triangles]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    areas = 0.5 * det
    grads = np.empty((triangles.shape[0], 3, 2))
    # gradients of barycentric shape functions
    grads[:, 1, 0] = d2[:, 1] / det
    grads[:, 1, 1] = -d2[:, 0] / det
    grads[:, 2, 0] = -d1[:, 1] / det
    grads[:, 2, 1] = d1[:, 0] / det
    grads[:, 0] = -grads[:, 1] - grads[:, 2]
    return grads, areas


@njit(cache=True)
def _tri_locals_numba(grads, areas, keff):  # pragma: no cover - jitted
    m = grads.shape[0]
    mass = np.zeros((m, 3, 3))
    darcy = np.zeros((m, 3, 3))
    eps_eps = np.zeros((m, 6, 6))
    div_div = np.zeros((m, 6, 6))
    div_theta = np.zeros((m, 6, 3))
    for e in range(m):
        a = areas[e]
        for i in range(3):
            for j in range(3):
                mass[e, i, j] = a / 12.0 * (2.0 if i == j else 1.0)
                kg0 = keff[0, 0] * grads[e, j, 0] + keff[0, 1] * grads[e, j, 1]
                kg1 = keff[1, 0] * grads[e, j, 0] + keff[1, 1] * grads[e, j, 1]
                darcy[e, i, j] = a * (grads[e, i, 0] * kg0 + grads[e, i, 1] * kg1)
        for k in range(3):
            for c in range(2):
                i = 2 * k + c
                for l in range(3):
                    dot = (
                        grads[e, k, 0] * grads[e, l, 0]
                        + grads[e, k, 1] * grads[e, l, 1]
                    )
                    for d in range(2):
                        j = 2 * l + d
                        term = 0.5 * grads[e, k, d] * grads[e, l, c]
                        if c == d:
                            term += 0.5 * dot
                        eps_eps[e, i, j] = a * term
                        div_div[e, i, j] = a * grads[e, k, c] * grads[e, l, d]
                for j in range(3):
                    div_theta[e, i, j] = a / 3.0 * grads[e, k, c]
    return mass, darcy, eps_eps, div_div, div_theta


def _tri_locals_numpy(grads, areas, keff):
    m = grads.shape[0]
    a = areas[:, None, None]
    mass = (np.ones((3, 3)) + np.eye(3)) / 12.0 * a
    darcy = np.einsum("eia,ab,ejb->eij", grads, keff, grads) * a
    dot = np.einsum("eka,ela->ekl", grads, grads)
    term1 = 0.5 * np.einsum("ekl,cd->ekcld", dot, np.eye(2)).reshape(m, 6, 6)
    term2 = 0.5 * np.einsum("ekd,elc->ekcld", grads, grads).reshape(m, 6, 6)
    eps_eps = (term1 + term2) * a
    dv = grads.reshape(m, 6)  # dv[:, 2k+c] = grad_k[c] = div of basis (k, c)
    div_div = dv[:, :, None] * dv[:, None, :] * a
    div_theta = np.repeat(dv[:, :, None], 3, axis=2) * a / 3.0
    return mass, darcy, eps_eps, div_div, div_theta


def tri_local_matrices(grads, areas, keff):
    """Per-element blocks: scalar mass, Darcy stiffness with tensor keff,
    strain-strain, div-div, and the pressure-dilatation coupling."""
    if active_backend() == "numba":
        return _tri_locals_numba(grads, areas, keff)
    return _tri_locals_numpy(grads, areas, keff)


# ---------------------------------------------------------------------------
# fracture contact residuals


@njit(cache=True)
def _normal_residual_numba(
    u, ed_nodes, normals, lengths, qp, qw, c_n, m_n, g0, sign
):  # pragma: no cover - jitted
    res = np.zeros(u.shape[0])
    ne = ed_nodes.shape[0]
    nq = qp.shape[0]
    for e in range(ne):
        ap, bp, am, bm = (
            ed_nodes[e, 0],
            ed_nodes[e, 1],
            ed_nodes[e, 2],
            ed_nodes[e, 3],
        )
        nx, ny = normals[e, 0], normals[e, 1]
        for q in range(nq):
            fa = 1.0 - qp[q]
            fb = qp[q]
            jx = fa * (u[2 * ap] - u[2 * am]) + fb * (u[2 * bp] - u[2 * bm])
            jy = fa * (u[2 * ap + 1] - u[2 * am + 1]) + fb * (
                u[2 * bp + 1] - u[2 * bm + 1]
            )
            jn = sign * (-(jx * nx + jy * ny)) - g0
            if jn > 0.0:
                coef = c_n * math.exp(m_n * math.log(jn)) * qw[q] * lengths[e]
                gx = coef * sign * (-nx)
                gy = coef * sign * (-ny)
                res[2 * ap] += fa * gx
                res[2 * ap + 1] += fa * gy
                res[2 * bp] += fb * gx
                res[2 * bp + 1] += fb * gy
                res[2 * am] -= fa * gx
                res[2 * am + 1] -= fa * gy
                res[2 * bm] -= fb * gx
                res[2 * bm + 1] -= fb * gy
    return res


def _edge_jumps(vec, ed_nodes, qp):
    """Jumps of a full (2N,) field at every (quad point, edge): (nq, ne, 2)."""
    v = vec.reshape(-1, 2)
    dj_a = v[ed_nodes[:, 0]] - v[ed_nodes[:, 2]]
    dj_b = v[ed_nodes[:, 1]] - v[ed_nodes[:, 3]]
    fa = (1.0 - qp)[:, None, None]
    fb = qp[:, None, None]
    return fa * dj_a[None, :, :] + fb * dj_b[None, :, :]


def _power_pos(base, exponent):
    out = np.zeros_like(base)
    pos = base > 0.0
    out[pos] = np.exp(exponent * np.log(base[pos]))
    return out


def _scatter_residual(res, ed_nodes, qp, qw, lengths, gvec):
    """Accumulate a per-(q, edge) traction gvec (nq, ne, 2) against the
    plus/minus P1 trace basis."""
    nq = qp.shape[0]
    for q in range(nq):
        wl = qw[q] * lengths
        for (slot, phi, s) in (
            (0, 1.0 - qp[q], 1.0),
            (1, qp[q], 1.0),
            (2, 1.0 - qp[q], -1.0),
            (3, qp[q], -1.0),
        ):
            nodesl = ed_nodes[:, slot]
            contrib = (s * phi) * wl[:, None] * gvec[q]
            np.add.at(res, 2 * nodesl, contrib[:, 0])
            np.add.at(res, 2 * nodesl + 1, contrib[:, 1])
    return res


def _normal_residual_numpy(u, ed_nodes, normals, lengths, qp, qw, c_n, m_n, g0, sign):
    jumps = _edge_jumps(u, ed_nodes, qp)
    jn = sign * (-np.einsum("qec,ec->qe", jumps, normals)) - g0
    delta_pow = _power_pos(jn, m_n)
    gvec = (c_n * delta_pow)[:, :, None] * (sign * (-normals))[None, :, :]
    return _scatter_residual(np.zeros(u.shape[0]), ed_nodes, qp, qw, lengths, gvec)


def normal_compliance_kernel(u, ed_nodes, normals, lengths, qp, qw, c_n, m_n, g0, sign):
    if active_backend() == "numba":
        return _normal_residual_numba(
            u, ed_nodes, normals, lengths, qp, qw, c_n, m_n, g0, float(sign)
        )
    return _normal_residual_numpy(u, ed_nodes, normals, lengths, qp, qw, c_n, m_n, g0, sign)


@njit(cache=True)
def _friction_residual_numba(
    u, x, ed_nodes, normals, lengths, qp, qw, c_t, m_t, g0, sign, eps
):  # pragma: no cover - jitted
    res = np.zeros(u.shape[0])
    ne = ed_nodes.shape[0]
    nq = qp.shape[0]
    for e in range(ne):
        ap, bp, am, bm = (
            ed_nodes[e, 0],
            ed_nodes[e, 1],
            ed_nodes[e, 2],
            ed_nodes[e, 3],
        )
        nx, ny = normals[e, 0], normals[e, 1]
        for q in range(nq):
            fa = 1.0 - qp[q]
            fb = qp[q]
            jx = fa * (u[2 * ap] - u[2 * am]) + fb * (u[2 * bp] - u[2 * bm])
            jy = fa * (u[2 * ap + 1] - u[2 * am + 1]) + fb * (
                u[2 * bp + 1] - u[2 * bm + 1]
            )
            jn = sign * (-(jx * nx + jy * ny)) - g0
            if jn <= 0.0:
                continue
            vx = fa * (x[2 * ap] - x[2 * am]) + fb * (x[2 * bp] - x[2 * bm])
            vy = fa * (x[2 * ap + 1] - x[2 * am + 1]) + fb * (
                x[2 * bp + 1] - x[2 * bm + 1]
            )
            vn = vx * nx + vy * ny
            tx = vx - vn * nx
            ty = vy - vn * ny
            root = math.sqrt(tx * tx + ty * ty + eps * eps)
            coef = c_t * math.exp(m_t * math.log(jn)) * qw[q] * lengths[e] / root
            gx = coef * tx
            gy = coef * ty
            res[2 * ap] += fa * gx
            res[2 * ap + 1] += fa * gy
            res[2 * bp] += fb * gx
            res[2 * bp + 1] += fb * gy
            res[2 * am] -= fa * gx
            res[2 * am + 1] -= fa * gy
            res[2 * bm] -= fb * gx
            res[2 * bm + 1] -= fb * gy
    return res


def _friction_residual_numpy(
    u, x, ed_nodes, normals, lengths, qp, qw, c_t, m_t, g0, sign, eps
):
    jumps = _edge_jumps(u, ed_nodes, qp)
    jn = sign * (-np.einsum("qec,ec->qe", jumps, normals)) - g0
    delta_pow = _power_pos(jn, m_t)
    jv = _edge_jumps(x, ed_nodes, qp)
    vn = np.einsum("qec,ec->qe", jv, normals)
    vt = jv - vn[:, :, None] * normals[None, :, :]
    root = np.sqrt(np.einsum("qec,qec->qe", vt, vt) + eps**2)
    gvec = (c_t * delta_pow / root)[:, :, None] * vt
    return _scatter_residual(np.zeros(u.shape[0]), ed_nodes, qp, qw, lengths, gvec)


def friction_kernel(u, x, ed_nodes, normals, lengths, qp, qw, c_t, m_t, g0, sign, eps):
    if active_backend() == "numba":
        return _friction_residual_numba(
            u, x, ed_nodes, normals, lengths, qp, qw, c_t, m_t, g0, float(sign), eps
        )
    return _friction_residual_numpy(
        u, x, ed_nodes, normals, lengths, qp, qw, c_t, m_t, g0, sign, eps
    )
