"""Galerkin assembly of the coupled bulk/fracture system.

Vector P1 displacement (duplicated across the fracture) and scalar P1
pressure.  Bulk matrices are integrated exactly; the width-cubed fracture
stiffness and all contact terms use a degree-5 Gauss rule per fracture edge
because their integrands are not polynomial.

The two tip-adjacent fracture edges carry no tangential-flow stiffness: the
width degenerates at the tips, and dropping those two edge contributions is
the discrete counterpart of the weighted pressure space (tip rows of the
fracture stiffness vanish identically).
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import DofMap, FractureMesh, Mesh2D
from .kernels import tri_geometry, tri_local_matrices
from .materials import MaterialParams, SourceData, WidthProfile
from .quadrature import edge_rule, p1_edge_basis, p1_triangle_basis, triangle_rule

EDGE_MASS = np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0


class AssemblyError(ValueError):
    pass


@dataclass
class SystemMatrices:
    """Named Galerkin blocks of the coupled system (scipy CSR).

    mass_u              displacement mass
    storage_p           bulk pressure storage, coefficient 1/M + c_f phi_0
    storage_pc          fracture pressure storage, coefficient c_fc
    div_coupling        pressure-dilatation coupling, unscaled (no alpha)
    alpha_div_div       alpha-weighted div-div block; assembled, unused by
                        the time stepper
    darcy_stiffness     bulk Darcy stiffness (K / mu_f)
    fracture_stiffness  width-cubed weighted tangential stiffness
    jump_coupling       fracture jump-trace coupling
    strain_stiffness    2 G strain-strain
    dilation_stiffness  lambda div-div
    damping             gamma (strain-strain + div-div)
    """

    mass_u: sp.csr_matrix
    storage_p: sp.csr_matrix
    storage_pc: sp.csr_matrix
    div_coupling: sp.csr_matrix
    alpha_div_div: sp.csr_matrix
    darcy_stiffness: sp.csr_matrix
    fracture_stiffness: sp.csr_matrix
    jump_coupling: sp.csr_matrix
    strain_stiffness: sp.csr_matrix
    dilation_stiffness: sp.csr_matrix
    damping: sp.csr_matrix

    @property
    def n_u(self) -> int:
        return self.mass_u.shape[0]

    @property
    def n_p(self) -> int:
        return self.storage_p.shape[0]

    def named(self) -> dict:
        return {
            "mass_u": self.mass_u,
            "storage_p": self.storage_p,
            "storage_pc": self.storage_pc,
            "div_coupling": self.div_coupling,
            "alpha_div_div": self.alpha_div_div,
            "darcy_stiffness": self.darcy_stiffness,
            "fracture_stiffness": self.fracture_stiffness,
            "jump_coupling": self.jump_coupling,
            "strain_stiffness": self.strain_stiffness,
            "dilation_stiffness": self.dilation_stiffness,
            "damping": self.damping,
        }


def is_symmetric(a: sp.spmatrix, rel: float = 1e-12) -> bool:
    d = abs(a - a.T)
    scale = abs(a).max() if a.nnz else 0.0
    return d.max() <= rel * max(scale, 1.0e-300) if d.nnz else True


def _scatter(local, rows, cols, shape) -> sp.csr_matrix:
    """Sum (m, r, c) local blocks into a CSR matrix; duplicate triplets are
    merged by summation in sorted (row, col) order."""
    m, r, c = local.shape
    i = np.repeat(rows, c, axis=1).ravel()
    j = np.tile(cols, (1, r)).ravel()
    coo = sp.coo_matrix((local.ravel(), (i, j)), shape=shape)
    return coo.tocsr()


def fracture_w3_integrals(frac: FractureMesh, width: WidthProfile, t: float) -> np.ndarray:
    """Per-edge integral of w^3 along the arc (degree-5 Gauss)."""
    rule = edge_rule(5)
    arc0 = frac.node_arc[:-1]
    out = np.zeros(frac.n_edges)
    for q, (xi, wq) in enumerate(zip(rule.points, rule.weights)):
        s = arc0 + xi * frac.lengths
        out += wq * frac.lengths * width.value(s, t) ** 3
    return out


def assemble_full(
    mesh: Mesh2D,
    frac: FractureMesh,
    dofmap: DofMap,
    params: MaterialParams,
    width: WidthProfile,
    t: float = 0.0,
) -> SystemMatrices:
    """All Galerkin blocks over the full (unconstrained) dof numbering."""
    grads, areas = tri_geometry(mesh.nodes, mesh.triangles)
    if np.any(areas <= 0.0):
        raise AssemblyError("mesh contains a triangle with nonpositive area")
    keff = params.permeability / params.viscosity
    mass3, darcy3, eps_eps, div_div, div_theta = tri_local_matrices(grads, areas, keff)

    tris = mesh.triangles
    m = tris.shape[0]
    udofs = np.empty((m, 6), dtype=np.int64)
    udofs[:, 0::2] = 2 * tris
    udofs[:, 1::2] = 2 * tris + 1
    pdofs = mesh.node_to_pnode[tris]

    nu = 2 * mesh.n_nodes
    npn = mesh.n_pnodes
    mass6 = np.einsum("ekl,cd->ekcld", mass3, np.eye(2)).reshape(m, 6, 6)

    mats = {}
    mats["mass_u"] = _scatter(mass6, udofs, udofs, (nu, nu))
    mats["storage_p"] = _scatter(
        params.storage_coefficient * mass3, pdofs, pdofs, (npn, npn)
    )
    mats["darcy_stiffness"] = _scatter(darcy3, pdofs, pdofs, (npn, npn))
    mats["strain_stiffness"] = _scatter(
        2.0 * params.shear_modulus * eps_eps, udofs, udofs, (nu, nu)
    )
    mats["dilation_stiffness"] = _scatter(
        params.lame_lambda * div_div, udofs, udofs, (nu, nu)
    )
    mats["damping"] = _scatter(
        params.damping_gamma * (eps_eps + div_div), udofs, udofs, (nu, nu)
    )
    mats["alpha_div_div"] = _scatter(
        params.biot_alpha * div_div, udofs, udofs, (nu, nu)
    )
    mats["div_coupling"] = _scatter(div_theta, udofs, pdofs, (nu, npn))

    # fracture edge terms
    ne = frac.n_edges
    pn_edges = dofmap.node_to_pnode[frac.edges_plus]

    cpc_local = params.fracture_storage * frac.lengths[:, None, None] * EDGE_MASS
    mats["storage_pc"] = _scatter(cpc_local, pn_edges, pn_edges, (npn, npn))

    w3 = fracture_w3_integrals(frac, width, t)
    w3 = np.where(frac.is_tip_edge, 0.0, w3)
    coef = w3 / (12.0 * params.viscosity * frac.lengths**2)
    w_local = coef[:, None, None] * np.array([[1.0, -1.0], [-1.0, 1.0]])
    mats["fracture_stiffness"] = _scatter(w_local, pn_edges, pn_edges, (npn, npn))

    jump_local = np.zeros((ne, 2, 8))
    ujdofs = np.empty((ne, 8), dtype=np.int64)
    for side, edges, s in ((0, frac.edges_plus, 1.0), (1, frac.edges_minus, -1.0)):
        for k in range(2):
            for c in range(2):
                col = 4 * side + 2 * k + c
                ujdofs[:, col] = 2 * edges[:, k] + c
                jump_local[:, :, col] = (
                    -s * frac.normals[:, c][:, None] * frac.lengths[:, None] * EDGE_MASS[:, k]
                )
    mats["jump_coupling"] = _scatter(jump_local, pn_edges, ujdofs, (npn, nu))

    return SystemMatrices(**mats)


def assemble_loads(
    mesh: Mesh2D,
    frac: FractureMesh,
    dofmap: DofMap,
    data: SourceData,
    params: MaterialParams,
    width: WidthProfile,
    t: float,
):
    """Load vectors (F_u, F_p, F_pc) over the full dof numbering.

    Gravity drive terms from the bulk Darcy law and the fracture flux are
    folded into F_p and F_pc respectively.
    """
    grads, areas = tri_geometry(mesh.nodes, mesh.triangles)
    tris = mesh.triangles
    nu = 2 * mesh.n_nodes
    npn = mesh.n_pnodes
    f_u = np.zeros(nu)
    f_p = np.zeros(npn)
    f_pc = np.zeros(npn)

    rule = triangle_rule(4)
    basis = p1_triangle_basis(rule.points)
    corners = mesh.nodes[tris]
    pdofs = mesh.node_to_pnode[tris]
    rho_g = params.fluid_density * params.gravity

    for q, wq in enumerate(rule.weights):
        xq = np.einsum("k,mkc->mc", basis[q], corners)
        jac = 2.0 * areas * wq
        if data.body_force is not None:
            fv = np.asarray(data.body_force(xq, t), dtype=float)
            for k in range(3):
                for c in range(2):
                    np.add.at(f_u, 2 * tris[:, k] + c, jac * basis[q, k] * fv[:, c])
        if data.bulk_source is not None:
            qv = np.asarray(data.bulk_source(xq, t), dtype=float)
            for k in range(3):
                np.add.at(f_p, pdofs[:, k], jac * basis[q, k] * qv)
        if rho_g != 0.0:
            drive = (params.permeability @ params.eta_gradient(xq).T).T * (
                rho_g / params.viscosity
            )
            for k in range(3):
                np.add.at(
                    f_p, pdofs[:, k], jac * np.einsum("mc,mc->m", drive, grads[:, k])
                )

    erule = edge_rule(5)
    ebasis = p1_edge_basis(erule.points)
    arc0 = frac.node_arc[:-1]
    pn_edges = dofmap.node_to_pnode[frac.edges_plus]
    mid = 0.5 * (mesh.nodes[frac.edges_plus[:, 0]] + mesh.nodes[frac.edges_plus[:, 1]])
    for q, (xi, wq) in enumerate(zip(erule.points, erule.weights)):
        s = arc0 + xi * frac.lengths
        jac = wq * frac.lengths
        if data.fracture_injection is not None:
            qw_vals = np.asarray(data.fracture_injection(s, t), dtype=float)
            for k in range(2):
                np.add.at(f_pc, pn_edges[:, k], jac * ebasis[q, k] * qw_vals)
        if data.interface_traction is not None:
            tr = np.asarray(data.interface_traction(s, t), dtype=float)
            for k in range(2):
                for c in range(2):
                    np.add.at(
                        f_u,
                        2 * frac.edges_plus[:, k] + c,
                        jac * ebasis[q, k] * tr[:, c],
                    )
                    np.add.at(
                        f_u,
                        2 * frac.edges_minus[:, k] + c,
                        -jac * ebasis[q, k] * tr[:, c],
                    )
        if rho_g != 0.0:
            xq = mid + (xi - 0.5) * frac.lengths[:, None] * frac.tangents
            eta_t = np.einsum("mc,mc->m", params.eta_gradient(xq), frac.tangents)
            w3 = width.value(s, t) ** 3
            w3 = np.where(frac.is_tip_edge, 0.0, w3)
            gdrive = jac * w3 * rho_g * eta_t / (12.0 * params.viscosity)
            dthe = np.array([-1.0, 1.0])
            for k in range(2):
                np.add.at(f_pc, pn_edges[:, k], gdrive * dthe[k] / frac.lengths)

    return f_u, f_p, f_pc


def apply_dirichlet(mats: SystemMatrices, loads, dofmap: DofMap):
    """Eliminate homogeneous-Dirichlet rows/columns, keeping free dofs.

    loads is a (F_u, F_p, F_pc) triple over the full numbering.
    """
    if dofmap.u_fixed_nodes.size == 0:
        raise AssemblyError(
            "no constrained displacement dofs: rigid-body modes would remain"
        )
    iu = dofmap.free_u_indices()
    ip = dofmap.free_p_indices()

    def uu(a):
        return a[iu][:, iu].tocsr()

    def pp(a):
        return a[ip][:, ip].tocsr()

    reduced = SystemMatrices(
        mass_u=uu(mats.mass_u),
        storage_p=pp(mats.storage_p),
        storage_pc=pp(mats.storage_pc),
        div_coupling=mats.div_coupling[iu][:, ip].tocsr(),
        alpha_div_div=uu(mats.alpha_div_div),
        darcy_stiffness=pp(mats.darcy_stiffness),
        fracture_stiffness=pp(mats.fracture_stiffness),
        jump_coupling=mats.jump_coupling[ip][:, iu].tocsr(),
        strain_stiffness=uu(mats.strain_stiffness),
        dilation_stiffness=uu(mats.dilation_stiffness),
        damping=uu(mats.damping),
    )
    f_u, f_p, f_pc = loads
    return reduced, (f_u[iu], f_p[ip], f_pc[ip])


def assemble_system(
    mesh: Mesh2D,
    frac: FractureMesh,
    dofmap: DofMap,
    params: MaterialParams,
    width: WidthProfile,
    t: float = 0.0,
) -> SystemMatrices:
    """Galerkin matrices over free dofs (homogeneous Dirichlet eliminated)."""
    full = assemble_full(mesh, frac, dofmap, params, width, t)
    zero = (
        np.zeros(2 * mesh.n_nodes),
        np.zeros(mesh.n_pnodes),
        np.zeros(mesh.n_pnodes),
    )
    reduced, _ = apply_dirichlet(full, zero, dofmap)
    return reduced


def reduce_loads(loads, dofmap: DofMap):
    f_u, f_p, f_pc = loads
    iu = dofmap.free_u_indices()
    ip = dofmap.free_p_indices()
    return f_u[iu], f_p[ip], f_pc[ip]


def write_matrix_coordinate(a: sp.spmatrix, path):
    """Debug dump: one `row col value` line per entry, 17 significant digits."""
    coo = a.tocoo()
    with open(path, "w") as fh:
        fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        order = np.lexsort((coo.col, coo.row))
        for k in order:
            fh.write(f"{coo.row[k]} {coo.col[k]} {coo.data[k]:.17g}\n")
