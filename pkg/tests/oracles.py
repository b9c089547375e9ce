"""Independent assembly oracle.

Dense, loop-based integration of every Galerkin block with its own
degree-6 triangle rule and 4-point Gauss edge rule.  Shares no code with
the package assembly path (only mesh data structures are reused), so an
agreement check is meaningful.
"""

import numpy as np

# degree-6 Dunavant rule, barycentric points and weights summing to 1
_TRI6_BARY = []
_TRI6_W = []
for (a, w) in (
    ((0.873821971016996, 0.063089014491502, 0.063089014491502), 0.050844906370207),
    ((0.501426509658179, 0.249286745170910, 0.249286745170910), 0.116786275726379),
):
    for perm in ((0, 1, 2), (1, 0, 2), (2, 1, 0)):
        _TRI6_BARY.append(tuple(a[p] for p in perm))
        _TRI6_W.append(w)
_a3 = (0.636502499121399, 0.310352451033785, 0.053145049844816)
for perm in (
    (0, 1, 2), (0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0),
):
    _TRI6_BARY.append(tuple(_a3[p] for p in perm))
    _TRI6_W.append(0.082851075618374)
TRI6_BARY = np.array(_TRI6_BARY)
TRI6_W = np.array(_TRI6_W)

# 4-point Gauss-Legendre on [0, 1], exact to degree 7
_g = np.array(
    [-0.861136311594053, -0.339981043584856, 0.339981043584856, 0.861136311594053]
)
_gw = np.array(
    [0.347854845137454, 0.652145154862546, 0.652145154862546, 0.347854845137454]
)
EDGE4_X = 0.5 * (_g + 1.0)
EDGE4_W = 0.5 * _gw


def _tri_basis_data(mesh, tri):
    """Vertices, area, and constant P1 gradients for one triangle."""
    v = mesh.nodes[tri]
    mat = np.array(
        [
            [v[1, 0] - v[0, 0], v[2, 0] - v[0, 0]],
            [v[1, 1] - v[0, 1], v[2, 1] - v[0, 1]],
        ]
    )
    det = np.linalg.det(mat)
    area = 0.5 * det
    inv_t = np.linalg.inv(mat).T
    grads_ref = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
    return v, area, grads_ref @ inv_t.T


def oracle_matrices(mesh, frac, params, width, t=0.0):
    """Dense versions of every named block over the full dof numbering."""
    n_u = 2 * mesh.n_nodes
    n_p = mesh.n_pnodes
    out = {
        "mass_u": np.zeros((n_u, n_u)),
        "storage_p": np.zeros((n_p, n_p)),
        "storage_pc": np.zeros((n_p, n_p)),
        "div_coupling": np.zeros((n_u, n_p)),
        "alpha_div_div": np.zeros((n_u, n_u)),
        "darcy_stiffness": np.zeros((n_p, n_p)),
        "fracture_stiffness": np.zeros((n_p, n_p)),
        "jump_coupling": np.zeros((n_p, n_u)),
        "strain_stiffness": np.zeros((n_u, n_u)),
        "dilation_stiffness": np.zeros((n_u, n_u)),
        "damping": np.zeros((n_u, n_u)),
    }
    keff = params.permeability / params.viscosity
    stor = params.storage_coefficient

    for tri in mesh.triangles:
        verts, area, grads = _tri_basis_data(mesh, tri)
        pn = mesh.node_to_pnode[tri]
        for (bary, w) in zip(TRI6_BARY, TRI6_W):
            jw = w * area
            phi = bary
            for i in range(3):
                for j in range(3):
                    out["storage_p"][pn[i], pn[j]] += jw * stor * phi[i] * phi[j]
                    out["darcy_stiffness"][pn[i], pn[j]] += jw * grads[i] @ keff @ grads[j]
            for k in range(3):
                for c in range(2):
                    iu = 2 * tri[k] + c
                    eps_i = np.zeros((2, 2))
                    eps_i[c] += 0.5 * grads[k]
                    eps_i[:, c] += 0.5 * grads[k]
                    div_i = grads[k][c]
                    for j in range(3):
                        out["div_coupling"][iu, pn[j]] += jw * phi[j] * div_i
                    for l in range(3):
                        for d in range(2):
                            ju = 2 * tri[l] + d
                            out["mass_u"][iu, ju] += (
                                jw * phi[k] * phi[l] * (1.0 if c == d else 0.0)
                            )
                            eps_j = np.zeros((2, 2))
                            eps_j[d] += 0.5 * grads[l]
                            eps_j[:, d] += 0.5 * grads[l]
                            div_j = grads[l][d]
                            ee = float(np.sum(eps_i * eps_j))
                            out["strain_stiffness"][iu, ju] += (
                                jw * 2.0 * params.shear_modulus * ee
                            )
                            out["dilation_stiffness"][iu, ju] += (
                                jw * params.lame_lambda * div_i * div_j
                            )
                            out["damping"][iu, ju] += (
                                jw * params.damping_gamma * (ee + div_i * div_j)
                            )
                            out["alpha_div_div"][iu, ju] += (
                                jw * params.biot_alpha * div_i * div_j
                            )

    arc = frac.node_arc
    for e in range(frac.n_edges):
        ap, bp = frac.edges_plus[e]
        am, bm = frac.edges_minus[e]
        pn = mesh.node_to_pnode[[ap, bp]]
        h = frac.lengths[e]
        nrm = frac.normals[e]
        for (x, w) in zip(EDGE4_X, EDGE4_W):
            jw = w * h
            phi = np.array([1.0 - x, x])
            s = arc[e] + x * h
            for i in range(2):
                for j in range(2):
                    out["storage_pc"][pn[i], pn[j]] += (
                        jw * params.fracture_storage * phi[i] * phi[j]
                    )
            if not frac.is_tip_edge[e]:
                wval = float(width.value(s, t))
                dphi = np.array([-1.0, 1.0]) / h
                for i in range(2):
                    for j in range(2):
                        out["fracture_stiffness"][pn[i], pn[j]] += (
                            jw * wval**3 / (12.0 * params.viscosity) * dphi[i] * dphi[j]
                        )
            for i in range(2):
                for (nodes, sign) in (((ap, bp), 1.0), ((am, bm), -1.0)):
                    for k in range(2):
                        for c in range(2):
                            ju = 2 * nodes[k] + c
                            out["jump_coupling"][pn[i], ju] += (
                                jw * phi[i] * (-(sign * nrm[c])) * phi[k]
                            )
    return out


def oracle_normal_residual(mesh, frac, u_full, params, n_quad=16):
    """Normal-compliance functional by dense high-order quadrature."""
    x, w = np.polynomial.legendre.leggauss(n_quad)
    xs, ws = 0.5 * (x + 1.0), 0.5 * w
    res = np.zeros(2 * mesh.n_nodes)
    u = u_full.reshape(-1, 2)
    for e in range(frac.n_edges):
        ap, bp = frac.edges_plus[e]
        am, bm = frac.edges_minus[e]
        h = frac.lengths[e]
        nrm = frac.normals[e]
        for (xq, wq) in zip(xs, ws):
            phi = np.array([1.0 - xq, xq])
            jump = phi[0] * (u[ap] - u[am]) + phi[1] * (u[bp] - u[bm])
            bracket = params.jump_sign * (-(jump @ nrm)) - params.rest_width
            if bracket <= 0.0:
                continue
            coef = (
                params.contact_stiffness
                * bracket**params.contact_exponent
                * wq
                * h
                * params.jump_sign
            )
            for k, (np_, nm_) in enumerate(((ap, am), (bp, bm))):
                for c in range(2):
                    res[2 * np_ + c] += coef * phi[k] * (-nrm[c])
                    res[2 * nm_ + c] -= coef * phi[k] * (-nrm[c])
    return res
