"""Energy bookkeeping, conservation residuals, contact observables, and
manufactured-solution convergence measurement."""

from dataclasses import dataclass, fields

import numpy as np

from .quadrature import p1_triangle_basis, triangle_rule


@dataclass
class EnergyReport:
    """Quadratic-form energies and accumulated dissipation integrals.

    Instantaneous terms are the halves of the assembled quadratic forms, so
    their sum is the discrete energy driving the step inequality;
    dissipation entries accumulate dt * (value at the new time level).
    """

    kinetic: float
    strain_shear: float
    strain_dilation: float
    storage_bulk: float
    storage_fracture: float
    diss_darcy: float
    diss_fracture: float
    diss_viscous: float
    contact_energy: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if v < -1e-14 * max(abs(v), 1.0):
                raise ValueError(f"energy term {f.name} is negative: {v}")

    def total(self) -> float:
        return (
            self.kinetic
            + self.strain_shear
            + self.strain_dilation
            + self.storage_bulk
            + self.storage_fracture
        )


def quadratic_form(mat, vec) -> float:
    return float(vec @ (mat @ vec))


def energy_report(state, mats, problem=None, accumulated=None, mode="Q0", eps=1e-3):
    """EnergyReport for one state; accumulated is the dissipation dict kept
    by the time loop (zeros when absent)."""
    acc = accumulated or {"diss_darcy": 0.0, "diss_frac": 0.0, "diss_visc": 0.0}
    contact = 0.0
    if mode == "Q" and problem is not None:
        contact = problem.fq.contact_energy(
            problem.dofmap.expand_u(state.u), problem.params
        )
    return EnergyReport(
        kinetic=0.5 * quadratic_form(mats.mass_u, state.xvel),
        strain_shear=0.5 * quadratic_form(mats.strain_stiffness, state.u),
        strain_dilation=0.5 * quadratic_form(mats.dilation_stiffness, state.u),
        storage_bulk=0.5 * quadratic_form(mats.storage_p, state.p),
        storage_fracture=0.5 * quadratic_form(mats.storage_pc, state.p),
        diss_darcy=acc["diss_darcy"],
        diss_fracture=acc["diss_frac"],
        diss_viscous=acc["diss_visc"],
        contact_energy=contact,
    )


def energy_step_audit(dae, mats, prev, new, dt, loads_free, contact_work=0.0) -> dict:
    """Backward-Euler energy inequality bookkeeping for one step.

    Returns energy levels, the dissipation and work rates of the new time
    level, and the inequality margin; margin <= 0 up to rounding because
    the implicit step only adds numerical dissipation.
    """
    f_u, f_p, f_pc = loads_free

    def energy(s):
        return 0.5 * (
            quadratic_form(dae.mass_x, s.xvel)
            + quadratic_form(dae.stiff_u, s.u)
            + quadratic_form(dae.mass_p, s.p)
        )

    e_old = energy(prev)
    e_new = energy(new)
    diss_visc = quadratic_form(dae.damping, new.xvel)
    diss_darcy = quadratic_form(mats.darcy_stiffness, new.p)
    diss_frac = quadratic_form(mats.fracture_stiffness, new.p)
    work = float(f_u @ new.xvel + (f_p + f_pc) @ new.p) - contact_work
    dissipation = diss_visc + diss_darcy + diss_frac
    margin = e_new + dt * dissipation - e_old - dt * work
    scale = max(e_new, e_old, dt * abs(dissipation), dt * abs(work), 1e-30)
    return {
        "energy_old": e_old,
        "energy_new": e_new,
        "dissipation": dissipation,
        "diss_visc": diss_visc,
        "diss_darcy": diss_darcy,
        "diss_frac": diss_frac,
        "work": work,
        "margin": margin,
        "scale": scale,
    }


def timeseries_row(problem, mats, state, cfg, step_idx, report, accum) -> dict:
    row = {
        "step": step_idx,
        "t": state.t,
        "kinetic": 0.5 * quadratic_form(mats.mass_u, state.xvel),
        "strain_G": 0.5 * quadratic_form(mats.strain_stiffness, state.u),
        "strain_lambda": 0.5 * quadratic_form(mats.dilation_stiffness, state.u),
        "storage_bulk": 0.5 * quadratic_form(mats.storage_p, state.p),
        "storage_frac": 0.5 * quadratic_form(mats.storage_pc, state.p),
        "diss_darcy": accum["diss_darcy"],
        "diss_frac": accum["diss_frac"],
        "diss_visc": accum["diss_visc"],
        "contact_R": 0.0,
        "max_penetration": 0.0,
        "stick_fraction": 1.0,
        "fp_iters": report.iterations,
    }
    if cfg.mode == "Q":
        u_full = problem.dofmap.expand_u(state.u)
        row["contact_R"] = problem.fq.contact_energy(u_full, problem.params)
        pen, slip, stick = contact_observables(state, problem, cfg)
        row["max_penetration"] = pen
        row["stick_fraction"] = stick
    return row


def contact_observables(state, problem, cfg):
    """(max penetration, total slip rate, stick fraction) per state."""
    if cfg.mode != "Q":
        raise ValueError("contact observables are defined in mode Q only")
    cs = problem.fq.state(
        problem.dofmap.expand_u(state.u),
        problem.dofmap.expand_u(state.xvel),
        cfg.eps_friction,
        problem.params,
    )
    max_pen = float(cs.delta.max(initial=0.0))
    slip_mag = np.linalg.norm(cs.slip_rate, axis=-1)
    total_slip = float(np.sum(cs.weights * slip_mag))
    stick_fraction = float(np.sum(cs.weights[cs.stick]) / np.sum(cs.weights))
    return max_pen, total_slip, stick_fraction


def flow_residual_split(problem, prev, curr, loads_free, mats=None):
    """Bulk and fracture flow-equation residual vectors over free p dofs."""
    mats = mats or problem.mats
    params = problem.params
    dt = curr.t - prev.t
    dp = (curr.p - prev.p) / dt
    du = (curr.u - prev.u) / dt
    _, f_p, f_pc = loads_free
    bulk = (
        mats.storage_p @ dp
        + params.biot_alpha * (mats.div_coupling.T @ du)
        + mats.darcy_stiffness @ curr.p
        - f_p
    )
    fracture = (
        mats.storage_pc @ dp
        + mats.jump_coupling @ du
        + mats.fracture_stiffness @ curr.p
        - f_pc
    )
    return bulk, fracture


def mass_balance_residual(problem, prev, curr, loads_free, mats=None):
    """Residuals of both mass balances against the constant-one test
    function; the summed (leakage-eliminated) residual vanishes up to
    solver tolerance."""
    bulk, fracture = flow_residual_split(problem, prev, curr, loads_free, mats)
    ones = np.ones(bulk.shape[0])
    b = float(ones @ bulk)
    f = float(ones @ fracture)
    scale = max(
        float(np.abs(bulk).sum()), float(np.abs(fracture).sum()), 1e-30
    )
    return b, f, b + f, scale


@dataclass
class ConvergenceTable:
    h: list
    l2_p: list
    h1_p: list
    l2_u: list
    h1_u: list

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.h, self.h[1:])):
            raise ValueError("mesh sizes must decrease across levels")

    def orders(self, key: str) -> list:
        err = getattr(self, key)
        return [
            float(np.log2(err[i] / err[i + 1])) for i in range(len(err) - 1)
        ]

    def rows(self) -> list:
        out = []
        for i, h in enumerate(self.h):
            out.append(
                {
                    "h": h,
                    "l2_p": self.l2_p[i],
                    "h1_p": self.h1_p[i],
                    "l2_u": self.l2_u[i],
                    "h1_u": self.h1_u[i],
                }
            )
        return out


def field_errors(mesh, dofmap, state, case, t) -> dict:
    """L2 and H1-seminorm errors of the FE pressure and displacement
    against the analytic fields of a manufactured case."""
    from .kernels import tri_geometry

    grads, areas = tri_geometry(mesh.nodes, mesh.triangles)
    rule = triangle_rule(4)
    basis = p1_triangle_basis(rule.points)
    tris = mesh.triangles
    corners = mesh.nodes[tris]
    p_full = dofmap.expand_p(state.p)
    u_full = dofmap.expand_u(state.u).reshape(-1, 2)
    p_nodes = p_full[mesh.node_to_pnode[tris]]
    u_nodes = u_full[tris]

    gp_h = np.einsum("mk,mkc->mc", p_nodes, grads)
    gu_h = np.einsum("mkd,mkc->mdc", u_nodes, grads)

    l2p = l2u = h1p = h1u = 0.0
    for q, wq in enumerate(rule.weights):
        xq = np.einsum("k,mkc->mc", basis[q], corners)
        jac = 2.0 * areas * wq
        ph = p_nodes @ basis[q]
        uh = np.einsum("mkd,k->md", u_nodes, basis[q])
        l2p += float(jac @ (ph - case.p_exact(xq, t)) ** 2)
        du = uh - case.u_exact(xq, t)
        l2u += float(jac @ np.sum(du**2, axis=1))
        dgp = gp_h - case.grad_p_exact(xq, t)
        h1p += float(jac @ np.sum(dgp**2, axis=1))
        dgu = gu_h - case.grad_u_exact(xq, t)
        h1u += float(jac @ np.sum(dgu**2, axis=(1, 2)))
    return {
        "l2_p": np.sqrt(l2p),
        "h1_p": np.sqrt(h1p),
        "l2_u": np.sqrt(l2u),
        "h1_u": np.sqrt(h1u),
    }


def manufactured_solution_errors(
    case_name: str,
    levels: int,
    h0: float = 0.25,
    dt: float = 0.05,
    n_steps: int = 4,
) -> ConvergenceTable:
    """Run the manufactured problem on a refinement ladder and tabulate the
    final-time errors with observed orders."""
    from . import mms
    from .geometry import build_rect_mesh_with_fracture, uniform_refine
    from .solver import Problem, StepConfig, run

    if levels < 2:
        raise ValueError("a convergence study needs at least 2 levels")
    case = mms.build_case(case_name)
    mesh, frac, dofmap = build_rect_mesh_with_fracture(
        case.domain, case.fracture, h0, bc_u="dirichlet", bc_p="dirichlet"
    )
    hs, e_l2p, e_h1p, e_l2u, e_h1u = [], [], [], [], []
    h = h0
    for level in range(levels):
        if level > 0:
            mesh, frac, dofmap = uniform_refine(mesh, frac)
            h *= 0.5
        problem = Problem(mesh, frac, dofmap, case.params, case.width, case.data)
        cfg = StepConfig(dt=dt, mode="Q0")
        result = run(problem, cfg, n_steps)
        err = field_errors(mesh, dofmap, result.final, case, result.final.t)
        hs.append(h)
        e_l2p.append(err["l2_p"])
        e_h1p.append(err["h1_p"])
        e_l2u.append(err["l2_u"])
        e_h1u.append(err["h1_u"])
    return ConvergenceTable(hs, e_l2p, e_h1p, e_l2u, e_h1u)
