import os

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from porofrac.assembly import (
    AssemblyError,
    apply_dirichlet,
    assemble_full,
    assemble_loads,
    assemble_system,
    is_symmetric,
    write_matrix_coordinate,
)
from porofrac.backend import ENV_VAR
from porofrac.geometry import build_rect_mesh_with_fracture
from porofrac.kernels import tri_geometry, tri_local_matrices
from porofrac.materials import MaterialParams, SourceData, WidthProfile
from porofrac.quadrature import edge_rule, p1_edge_basis

from conftest import FRACTURE, UNIT_DOMAIN
from oracles import oracle_matrices


def poly_width(length=0.5, w0=1e-3):
    """Width whose cube is a quartic polynomial in arc length, so that four
    different quadrature rules of degree >= 4 integrate it exactly."""

    def f(s, t):
        z = np.clip(s * (length - s), 0.0, None) / length**2
        return w0 * z ** (2.0 / 3.0)

    return WidthProfile(length=length, w0=w0, func=f)


class TestReferenceTriangle:
    def setup_method(self):
        nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        tris = np.array([[0, 1, 2]])
        self.grads, self.areas = tri_geometry(nodes, tris)

    def test_scalar_mass(self):
        mass, *_ = tri_local_matrices(self.grads, self.areas, np.eye(2))
        expected = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 24.0
        assert np.allclose(mass[0], expected, rtol=0.0, atol=1e-15)

    def test_darcy_stiffness(self):
        _, darcy, *_ = tri_local_matrices(self.grads, self.areas, np.eye(2))
        expected = 0.5 * np.array(
            [[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]]
        )
        assert np.allclose(darcy[0], expected, rtol=0.0, atol=1e-15)

    def test_strain_form_symmetry(self):
        _, _, eps_eps, div_div, div_theta = tri_local_matrices(
            self.grads, self.areas, np.eye(2)
        )
        assert np.allclose(eps_eps[0], eps_eps[0].T)
        assert np.allclose(div_div[0], div_div[0].T)
        # div of basis (k, c) integrates theta_j to area/3
        assert np.allclose(div_theta[0, :, 0], div_theta[0, :, 1])


def test_single_fracture_edge_stiffness(unit_params):
    mesh, frac, dofmap = build_rect_mesh_with_fracture(UNIT_DOMAIN, FRACTURE, 0.25)
    w0 = 2.0e-3
    width = WidthProfile(length=0.5, func=lambda s, t: np.full(np.asarray(s).shape, w0))
    mats = assemble_full(mesh, frac, dofmap, unit_params, width, 0.0)
    w = mats.fracture_stiffness.toarray()
    # 2 fracture edges, both tip-adjacent: degenerate-tip convention zeroes W
    assert np.abs(w).max() == 0.0

    mesh, frac, dofmap = build_rect_mesh_with_fracture(UNIT_DOMAIN, FRACTURE, 0.125)
    mats = assemble_full(mesh, frac, dofmap, unit_params, width, 0.0)
    w = mats.fracture_stiffness.toarray()
    h = 0.125
    coef = w0**3 / (12.0 * unit_params.viscosity * h)
    interior = [pn for pn, tip in zip(
        dofmap.fracture_pnodes, [True] + [False] * (len(dofmap.fracture_pnodes) - 2) + [True]
    ) if not tip]
    block = w[np.ix_(interior, interior)]
    expected = coef * np.array(
        [[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]]
    )
    assert np.allclose(block, expected, rtol=1e-12, atol=1e-18)


class TestOracleEquivalence:
    @pytest.mark.parametrize(
        "domain,fracture,h",
        [
            (UNIT_DOMAIN, FRACTURE, 0.25),
            ((0.0, 0.0, 1.5, 1.0), ((0.5, 0.5), (1.0, 0.5)), 0.25),
        ],
    )
    def test_all_matrices(self, domain, fracture, h, unit_params):
        mesh, frac, dofmap = build_rect_mesh_with_fracture(domain, fracture, h)
        assert mesh.n_triangles <= 50
        params = MaterialParams(
            shear_modulus=1.7,
            lame_lambda=0.9,
            biot_alpha=0.8,
            inv_biot_modulus=2.0,
            fluid_compressibility=0.3,
            porosity=0.4,
            viscosity=1.2,
            permeability=np.array([[2.0, 0.5], [0.5, 1.0]]),
            fracture_storage=0.7,
            damping_gamma=0.6,
            gravity=0.0,
        )
        width = poly_width()
        mats = assemble_full(mesh, frac, dofmap, params, width, 0.0)
        oracle = oracle_matrices(mesh, frac, params, width, 0.0)
        for name, mat in mats.named().items():
            dense = mat.toarray()
            ref = oracle[name]
            scale = max(np.abs(ref).max(), 1e-300)
            err = np.abs(dense - ref).max() / scale
            assert err <= 1e-12, f"{name}: relative error {err:.2e}"

    def test_symmetry_and_psd(self, medium_mesh, unit_params, default_width):
        mesh, frac, dofmap = medium_mesh
        params = MaterialParams(damping_gamma=0.5, gravity=0.0)
        mats = assemble_system(mesh, frac, dofmap, params, default_width)
        for name in (
            "mass_u",
            "storage_p",
            "storage_pc",
            "darcy_stiffness",
            "fracture_stiffness",
            "strain_stiffness",
            "dilation_stiffness",
            "damping",
        ):
            mat = getattr(mats, name)
            assert is_symmetric(mat), name
            eigs = np.linalg.eigvalsh(mat.toarray())
            assert eigs.min() >= -1e-10 * max(eigs.max(), 1.0), name
        # definite blocks
        for name in ("mass_u", "storage_p"):
            eigs = np.linalg.eigvalsh(getattr(mats, name).toarray())
            assert eigs.min() > 0.0


class TestCouplingDuality:
    def test_pressure_dilatation_duality(self, medium_mesh, unit_params, default_width):
        """(A_up P, V) equals the element-quadrature value of (p_h, div v_h)."""
        mesh, frac, dofmap = medium_mesh
        mats = assemble_full(mesh, frac, dofmap, unit_params, default_width, 0.0)
        grads, areas = tri_geometry(mesh.nodes, mesh.triangles)
        rng = np.random.default_rng(11)
        for _ in range(20):
            v = rng.standard_normal(2 * mesh.n_nodes)
            p = rng.standard_normal(mesh.n_pnodes)
            lhs = float(v @ (mats.div_coupling @ p))
            direct = 0.0
            vr = v.reshape(-1, 2)
            for e, tri in enumerate(mesh.triangles):
                div_v = sum(vr[tri[k]] @ grads[e, k] for k in range(3))
                p_mean = p[mesh.node_to_pnode[tri]].mean()
                direct += areas[e] * div_v * p_mean
            assert abs(lhs - direct) <= 1e-12 * max(abs(lhs), abs(direct), 1.0)

    def test_jump_coupling_duality(self, medium_mesh, unit_params, default_width):
        """(M V, Theta) equals direct edge quadrature of -[v].n+ theta_c."""
        mesh, frac, dofmap = medium_mesh
        mats = assemble_full(mesh, frac, dofmap, unit_params, default_width, 0.0)
        rule = edge_rule(5)
        basis = p1_edge_basis(rule.points)
        rng = np.random.default_rng(12)
        for _ in range(20):
            v = rng.standard_normal(2 * mesh.n_nodes).reshape(-1, 2)
            theta = rng.standard_normal(mesh.n_pnodes)
            lhs = float(theta @ (mats.jump_coupling @ v.ravel()))
            direct = 0.0
            for e in range(frac.n_edges):
                ap, bp = frac.edges_plus[e]
                am, bm = frac.edges_minus[e]
                pn = mesh.node_to_pnode[[ap, bp]]
                for q, wq in enumerate(rule.weights):
                    phi = basis[q]
                    jump = phi[0] * (v[ap] - v[am]) + phi[1] * (v[bp] - v[bm])
                    th_val = phi @ theta[pn]
                    direct += (
                        wq
                        * frac.lengths[e]
                        * (-(jump @ frac.normals[e]))
                        * th_val
                    )
            assert abs(lhs - direct) <= 1e-12 * max(abs(lhs), abs(direct), 1.0)


class TestFractureStiffnessConventions:
    def test_zero_width_gives_zero(self, medium_mesh, unit_params):
        mesh, frac, dofmap = medium_mesh
        width = WidthProfile(length=0.5, w0=0.0)
        mats = assemble_full(mesh, frac, dofmap, unit_params, width, 0.0)
        assert mats.fracture_stiffness.nnz == 0 or np.abs(
            mats.fracture_stiffness.toarray()
        ).max() == 0.0

    def test_tip_rows_vanish(self, medium_mesh, unit_params, default_width):
        mesh, frac, dofmap = medium_mesh
        mats = assemble_full(mesh, frac, dofmap, unit_params, default_width, 0.0)
        w = mats.fracture_stiffness.toarray()
        for tip_pn in (dofmap.fracture_pnodes[0], dofmap.fracture_pnodes[-1]):
            assert np.abs(w[tip_pn]).max() == 0.0
            assert np.abs(w[:, tip_pn]).max() == 0.0

    def test_row_sums_vanish(self, medium_mesh, unit_params, default_width):
        mesh, frac, dofmap = medium_mesh
        mats = assemble_full(mesh, frac, dofmap, unit_params, default_width, 0.0)
        sums = np.asarray(mats.fracture_stiffness.sum(axis=1)).ravel()
        assert np.abs(sums).max() <= 1e-18


class TestLoads:
    def test_zero_sources(self, medium_mesh, unit_params, default_width):
        mesh, frac, dofmap = medium_mesh
        f_u, f_p, f_pc = assemble_loads(
            mesh, frac, dofmap, SourceData(), unit_params, default_width, 0.0
        )
        assert np.abs(f_u).max() == 0.0
        assert np.abs(f_p).max() == 0.0
        assert np.abs(f_pc).max() == 0.0

    def test_constant_body_force_total(self, medium_mesh, unit_params, default_width):
        mesh, frac, dofmap = medium_mesh

        def f(x, t):
            out = np.zeros_like(x)
            out[:, 1] = -1.0
            return out

        f_u, _, _ = assemble_loads(
            mesh, frac, dofmap, SourceData(body_force=f), unit_params, default_width, 0.0
        )
        total_y = f_u[1::2].sum()
        total_x = f_u[0::2].sum()
        assert abs(total_y - (-1.0)) <= 1e-12
        assert abs(total_x) <= 1e-14

    def test_hydrostatic_equilibrium(self, default_width):
        """With p matching the gravity potential, the flow residual vanishes."""
        mesh, frac, dofmap = build_rect_mesh_with_fracture(UNIT_DOMAIN, FRACTURE, 0.125)
        params = MaterialParams(
            fluid_density=3.0, gravity=2.0, permeability=np.diag([1.0, 2.0]),
            viscosity=1.0,
        )
        mats = assemble_full(mesh, frac, dofmap, params, default_width, 0.0)
        _, f_p, f_pc = assemble_loads(
            mesh, frac, dofmap, SourceData(), params, default_width, 0.0
        )
        coords = np.zeros((mesh.n_pnodes, 2))
        coords[mesh.node_to_pnode] = mesh.nodes
        p = params.fluid_density * params.gravity * coords[:, 1]
        resid = mats.darcy_stiffness @ p - f_p
        resid_frac = mats.fracture_stiffness @ p - f_pc
        assert np.abs(resid).max() <= 1e-12 * max(np.abs(f_p).max(), 1.0)
        assert np.abs(resid_frac).max() <= 1e-15

    def test_hydrostatic_equilibrium_vertical_fracture(self):
        """A vertical fracture has a nonzero tangential gravity drive; the
        width-cubed load must cancel the weighted stiffness exactly."""
        mesh, frac, dofmap = build_rect_mesh_with_fracture(
            UNIT_DOMAIN, ((0.5, 0.25), (0.5, 0.75)), 0.125
        )
        params = MaterialParams(fluid_density=3.0, gravity=2.0, viscosity=1.0)
        width = WidthProfile(length=frac.total_length, w0=1e-2)
        mats = assemble_full(mesh, frac, dofmap, params, width, 0.0)
        _, f_p, f_pc = assemble_loads(
            mesh, frac, dofmap, SourceData(), params, width, 0.0
        )
        assert np.abs(f_pc).max() > 0.0  # the drive is genuinely active
        coords = np.zeros((mesh.n_pnodes, 2))
        coords[mesh.node_to_pnode] = mesh.nodes
        p = params.fluid_density * params.gravity * coords[:, 1]
        resid_frac = mats.fracture_stiffness @ p - f_pc
        assert np.abs(resid_frac).max() <= 1e-14 * np.abs(f_pc).max()
        resid = mats.darcy_stiffness @ p - f_p
        assert np.abs(resid).max() <= 1e-12 * np.abs(f_p).max()


class TestDirichlet:
    def test_reduced_dimensions(self, coarse_mesh, unit_params, default_width):
        mesh, frac, dofmap = coarse_mesh
        mats = assemble_full(mesh, frac, dofmap, unit_params, default_width, 0.0)
        loads = (
            np.ones(2 * mesh.n_nodes),
            np.ones(mesh.n_pnodes),
            np.ones(mesh.n_pnodes),
        )
        reduced, (fu, fp, fpc) = apply_dirichlet(mats, loads, dofmap)
        assert reduced.mass_u.shape == (dofmap.n_u, dofmap.n_u)
        assert reduced.storage_p.shape == (dofmap.n_p, dofmap.n_p)
        assert fu.shape == (dofmap.n_u,)
        assert fp.shape == (dofmap.n_p,)
        assert fpc.shape == (dofmap.n_p,)

    def test_elastic_block_positive_definite(self, medium_mesh, unit_params, default_width):
        mesh, frac, dofmap = medium_mesh
        mats = assemble_system(mesh, frac, dofmap, unit_params, default_width)
        stiff = (mats.strain_stiffness + mats.dilation_stiffness).tocsc()
        # smallest eigenvalue by shifted inverse iteration
        lu = spla.splu(stiff)
        rng = np.random.default_rng(13)
        v = rng.standard_normal(stiff.shape[0])
        for _ in range(60):
            v = lu.solve(v)
            v /= np.linalg.norm(v)
        lam_min = float(v @ (stiff @ v))
        assert lam_min > 0.0

    def test_unconstrained_displacement_rejected(self, unit_params, default_width):
        mesh, frac, dofmap = build_rect_mesh_with_fracture(
            UNIT_DOMAIN, FRACTURE, 0.25, bc_u="neumann"
        )
        mats = assemble_full(mesh, frac, dofmap, unit_params, default_width, 0.0)
        zero = (
            np.zeros(2 * mesh.n_nodes),
            np.zeros(mesh.n_pnodes),
            np.zeros(mesh.n_pnodes),
        )
        with pytest.raises(AssemblyError):
            apply_dirichlet(mats, zero, dofmap)


class TestBackends:
    def test_kernel_paths_agree(self, medium_mesh, unit_params, default_width):
        mesh, frac, dofmap = medium_mesh
        results = {}
        old = os.environ.get(ENV_VAR)
        try:
            for backend in ("numba", "numpy"):
                os.environ[ENV_VAR] = backend
                results[backend] = assemble_full(
                    mesh, frac, dofmap, unit_params, default_width, 0.0
                )
        finally:
            if old is None:
                os.environ.pop(ENV_VAR, None)
            else:
                os.environ[ENV_VAR] = old
        for name in results["numba"].named():
            a = results["numba"].named()[name].toarray()
            b = results["numpy"].named()[name].toarray()
            scale = max(np.abs(a).max(), 1e-300)
            assert np.abs(a - b).max() <= 1e-13 * scale, name


def test_matrix_dump_roundtrip(tmp_path, coarse_mesh, unit_params, default_width):
    mesh, frac, dofmap = coarse_mesh
    mats = assemble_full(mesh, frac, dofmap, unit_params, default_width, 0.0)
    path = tmp_path / "mass_u.txt"
    write_matrix_coordinate(mats.mass_u, path)
    lines = path.read_text().strip().split("\n")
    rows, cols, nnz = map(int, lines[0].split())
    assert (rows, cols) == mats.mass_u.shape
    assert nnz == len(lines) - 1
    i, j, v = lines[1].split()
    assert mats.mass_u[int(i), int(j)] == float(v)
