"""Time integration of the coupled system.

The semi-discrete system is a linear DAE in the stacked unknown
(velocity, pressure, displacement).  Backward Euler replaces the time
derivative; contact and friction enter the mechanics row through a
per-step fixed point that freezes both nonlinear residuals at the previous
iterate, leaving one linear solve per iteration.

Block layout (free dofs):

    [ mass_u           0                0     ] d/dt   [ damping  -C^T        S ]
    [ 0        storage_p+storage_pc     0     ]      + [ C        darcy+frac  0 ]
    [ 0                0                S     ]        [ -S        0          0 ]

with C = alpha * div_coupling^T + jump_coupling and S the elastic
stiffness.  The velocity identity row is scaled by S, which makes the
coupling blocks exactly skew so they cancel in the quadratic form: this is
the discrete form of the energy argument behind the pencil test.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (
    SystemMatrices,
    apply_dirichlet,
    assemble_full,
    assemble_loads,
    reduce_loads,
)
from .contact import FractureQuadrature
from .geometry import DofMap, FractureMesh, Mesh2D
from .materials import MaterialParams, SourceData, WidthProfile


class SolverError(RuntimeError):
    pass


def refine_solve(lu, amat, b: np.ndarray, passes: int = 1) -> np.ndarray:
    """Direct solve with fixed iterative refinement.

    The assembled blocks span many orders of magnitude (stiffness in Pa
    against storage in 1/Pa), so one refinement pass is kept to hold the
    residual near rounding level.
    """
    x = lu.solve(b)
    for _ in range(passes):
        x = x + lu.solve(b - amat @ x)
    return x


@dataclass
class State:
    """Solution snapshot: free-dof coefficient vectors at time t."""

    t: float
    u: np.ndarray
    xvel: np.ndarray
    p: np.ndarray

    def copy(self) -> "State":
        return State(self.t, self.u.copy(), self.xvel.copy(), self.p.copy())

    def max_norm(self) -> float:
        parts = [np.abs(v).max(initial=0.0) for v in (self.u, self.xvel, self.p)]
        return float(max(parts))


@dataclass
class StepConfig:
    dt: float
    fixed_point_tol: float = 1e-10
    max_fixed_point_iters: int = 50
    eps_friction: float = 1e-3
    mode: str = "Q0"

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.fixed_point_tol <= 0.0:
            raise ValueError("fixed_point_tol must be positive")
        if self.max_fixed_point_iters < 1:
            raise ValueError("max_fixed_point_iters must be at least 1")
        if self.eps_friction <= 0.0:
            raise ValueError("eps_friction must be positive")
        if self.mode not in ("Q0", "Q"):
            raise ValueError("mode must be Q0 or Q")


class DaeSystem:
    """First-order block operators d/dt coefficient and stiffness."""

    def __init__(self, mats: SystemMatrices, params: MaterialParams):
        self.nu = mats.n_u
        self.np_ = mats.n_p
        self.coupling = (
            params.biot_alpha * mats.div_coupling.T + mats.jump_coupling
        ).tocsr()
        self.stiff_u = (mats.strain_stiffness + mats.dilation_stiffness).tocsr()
        self.flow_stiff = (mats.darcy_stiffness + mats.fracture_stiffness).tocsr()
        self.mass_x = mats.mass_u
        self.mass_p = (mats.storage_p + mats.storage_pc).tocsr()
        self.damping = mats.damping

    def m_matrix(self) -> sp.csr_matrix:
        return sp.block_diag(
            (self.mass_x, self.mass_p, self.stiff_u), format="csr"
        )

    def n_matrix(self) -> sp.csr_matrix:
        c = self.coupling
        s = self.stiff_u
        return sp.bmat(
            [
                [self.damping, -c.T, s],
                [c, self.flow_stiff, None],
                [-s, None, None],
            ],
            format="csr",
        )

    def pencil(self) -> sp.csr_matrix:
        return (self.m_matrix() + self.n_matrix()).tocsr()

    def step_matrix(self, dt: float) -> sp.csr_matrix:
        return (self.m_matrix() / dt + self.n_matrix()).tocsr()

    def pack(self, state: State) -> np.ndarray:
        return np.concatenate([state.xvel, state.p, state.u])

    def unpack(self, t: float, xi: np.ndarray) -> State:
        nu, np_ = self.nu, self.np_
        return State(
            t,
            xi[nu + np_ :].copy(),
            xi[:nu].copy(),
            xi[nu : nu + np_].copy(),
        )

    def rhs(self, f_u: np.ndarray, f_p: np.ndarray) -> np.ndarray:
        return np.concatenate([f_u, f_p, np.zeros(self.nu)])


@dataclass
class PencilReport:
    passed: bool
    factorized: bool
    rel_residual: float
    condition_estimate: float
    quad_min: float
    quad_all_positive: bool
    coupling_cancels: bool

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return (
            f"pencil {status}: residual {self.rel_residual:.2e}, "
            f"cond~{self.condition_estimate:.2e}, min quad form {self.quad_min:.3e}"
        )


def check_pencil(dae: DaeSystem, seed: int = 0, n_samples: int = 20) -> PencilReport:
    """Factorize the pencil at s=1 and probe solvability and positivity.

    The quadratic form of the pencil matrix decomposes into the mass,
    stiffness, and dissipation blocks alone: the pressure-dilatation and
    jump couplings sit in exactly skew positions.  Both facts are verified
    on random vectors.
    """
    a = dae.pencil().tocsc()
    rng = np.random.default_rng(seed)
    n = a.shape[0]
    try:
        lu = spla.splu(a)
        factorized = True
    except RuntimeError:
        return PencilReport(False, False, np.inf, np.inf, np.nan, False, False)

    b = rng.standard_normal(n)
    x = refine_solve(lu, a, b)
    rel_res = float(np.linalg.norm(a @ x - b) / np.linalg.norm(b))
    if not np.isfinite(rel_res):
        return PencilReport(False, True, np.inf, np.inf, np.nan, False, False)

    inv_op = spla.LinearOperator(
        (n, n),
        matvec=lu.solve,
        rmatvec=lambda v: lu.solve(v, trans="T"),
        dtype=np.float64,
    )
    try:
        cond = float(spla.onenormest(a) * spla.onenormest(inv_op))
    except Exception:
        cond = np.inf

    quad_min = np.inf
    all_pos = True
    cancels = True
    for _ in range(n_samples):
        xi = rng.standard_normal(n)
        q = float(xi @ (a @ xi))
        quad_min = min(quad_min, q)
        if q <= 0.0:
            all_pos = False
        xv = xi[: dae.nu]
        pv = xi[dae.nu : dae.nu + dae.np_]
        uv = xi[dae.nu + dae.np_ :]
        # the stiffness quadratic form decomposes into the diagonal blocks;
        # the coupling and velocity-identity products cancel pairwise, so the
        # tolerance is relative to the magnitude of what cancels
        q_damp = float(xv @ (dae.damping @ xv))
        q_flow = float(pv @ (dae.flow_stiff @ pv))
        q_couple = float(pv @ (dae.coupling @ xv))
        q_ident = float(xv @ (dae.stiff_u @ uv))
        qn = float(xi @ (dae.n_matrix() @ xi))
        scale = abs(q_damp) + abs(q_flow) + 2.0 * abs(q_couple) + 2.0 * abs(q_ident)
        if abs(qn - q_damp - q_flow) > 1e-12 * max(scale, 1.0):
            cancels = False
    passed = factorized and rel_res <= 1e-8 and all_pos and cancels
    return PencilReport(passed, factorized, rel_res, cond, quad_min, all_pos, cancels)


@dataclass
class StepReport:
    iterations: int
    converged: bool
    rel_update: float
    rel_residual: float
    contact_work: float = 0.0  # lagged contact load against the new velocity
    friction_work: float = 0.0  # converged friction residual against velocity


class Problem:
    """Mesh, material data, assembled operators, and load evaluation."""

    def __init__(
        self,
        mesh: Mesh2D,
        frac: FractureMesh,
        dofmap: DofMap,
        params: MaterialParams,
        width: WidthProfile,
        data: SourceData,
    ):
        self.mesh = mesh
        self.frac = frac
        self.dofmap = dofmap
        self.params = params
        self.width = width
        self.data = data
        self.fq = FractureQuadrature(mesh, frac, dofmap)
        self._mats_full = assemble_full(mesh, frac, dofmap, params, width, 0.0)
        zero = (
            np.zeros(2 * mesh.n_nodes),
            np.zeros(mesh.n_pnodes),
            np.zeros(mesh.n_pnodes),
        )
        self.mats, _ = apply_dirichlet(self._mats_full, zero, dofmap)
        self._pnode_coords = self._compute_pnode_coords()

    def _compute_pnode_coords(self) -> np.ndarray:
        coords = np.zeros((self.mesh.n_pnodes, 2))
        coords[self.mesh.node_to_pnode] = self.mesh.nodes
        return coords

    @property
    def pnode_coords(self) -> np.ndarray:
        return self._pnode_coords

    def matrices(self, t: float) -> SystemMatrices:
        if not self.width.time_dependent:
            return self.mats
        full = assemble_full(
            self.mesh, self.frac, self.dofmap, self.params, self.width, t
        )
        zero = (
            np.zeros(2 * self.mesh.n_nodes),
            np.zeros(self.mesh.n_pnodes),
            np.zeros(self.mesh.n_pnodes),
        )
        mats, _ = apply_dirichlet(full, zero, self.dofmap)
        return mats

    def loads_free(self, t: float):
        full = assemble_loads(
            self.mesh, self.frac, self.dofmap, self.data, self.params, self.width, t
        )
        return reduce_loads(full, self.dofmap)

    def contact_load_free(
        self, u_free: np.ndarray, x_free: np.ndarray, eps: float
    ) -> np.ndarray:
        """Normal-compliance plus regularized-friction residual on free dofs."""
        u_full = self.dofmap.expand_u(u_free)
        x_full = self.dofmap.expand_u(x_free)
        res = self.fq.normal_residual(u_full, self.params)
        res = res + self.fq.friction_residual(u_full, x_full, eps, self.params)
        return res[self.dofmap.free_u_indices()]

    def friction_residual_free(
        self, u_free: np.ndarray, x_free: np.ndarray, eps: float
    ) -> np.ndarray:
        u_full = self.dofmap.expand_u(u_free)
        x_full = self.dofmap.expand_u(x_free)
        res = self.fq.friction_residual(u_full, x_full, eps, self.params)
        return res[self.dofmap.free_u_indices()]

    def fracture_free_pdofs(self) -> np.ndarray:
        """Free pressure dof index per fracture geometric node."""
        return self.dofmap.p_free[self.dofmap.fracture_pnodes]


def solve_initial_state(problem: Problem) -> State:
    """Static elasticity solve against the initial pressure interpolant."""
    params = problem.params
    data = problem.data
    dofmap = problem.dofmap
    mats = problem.mats

    if data.initial_pressure is not None:
        p_full = np.asarray(
            data.initial_pressure(problem.pnode_coords), dtype=float
        )
    else:
        p_full = np.zeros(problem.mesh.n_pnodes)
    p0 = dofmap.restrict_p(p_full)

    if data.initial_velocity is not None:
        v_nodes = np.asarray(data.initial_velocity(problem.mesh.nodes), dtype=float)
        x0 = dofmap.restrict_u(v_nodes.ravel())
    else:
        x0 = np.zeros(dofmap.n_u)

    f_u, _, _ = problem.loads_free(0.0)
    stiff = (mats.strain_stiffness + mats.dilation_stiffness).tocsc()
    coupling_t = params.biot_alpha * mats.div_coupling + mats.jump_coupling.T
    rhs = f_u + coupling_t @ p0
    try:
        lu = spla.splu(stiff)
    except RuntimeError as exc:
        raise SolverError(f"static elasticity solve failed: {exc}") from exc
    u0 = refine_solve(lu, stiff, rhs)
    return State(0.0, u0, x0, p0)


def step(
    problem: Problem,
    state: State,
    cfg: StepConfig,
    lu,
    dae: DaeSystem,
    loads_free,
    amat=None,
) -> tuple:
    """One backward-Euler step; in mode Q the contact terms are frozen at
    the previous fixed-point iterate and updated until the relative change
    of the stacked unknown drops below tolerance."""
    if amat is None:
        amat = dae.step_matrix(cfg.dt)
    f_u, f_p, f_pc = loads_free
    rhs0 = dae.m_matrix() @ dae.pack(state) / cfg.dt + dae.rhs(f_u, f_p + f_pc)
    rhs_scale = max(float(np.linalg.norm(rhs0)), 1e-300)

    if cfg.mode == "Q0":
        xi = refine_solve(lu, amat, rhs0)
        new = dae.unpack(state.t + cfg.dt, xi)
        rel_res = float(np.linalg.norm(amat @ xi - rhs0)) / rhs_scale
        return new, StepReport(1, True, 0.0, rel_res)

    xi_prev = dae.pack(state)
    u_prev, x_prev = state.u, state.xvel
    converged = False
    rel_update = np.inf
    contact = np.zeros(dae.nu)
    iterations = 0
    for k in range(cfg.max_fixed_point_iters):
        iterations = k + 1
        contact = problem.contact_load_free(u_prev, x_prev, cfg.eps_friction)
        rhs = rhs0.copy()
        rhs[: dae.nu] -= contact
        xi = refine_solve(lu, amat, rhs)
        rel_update = float(
            np.linalg.norm(xi - xi_prev) / max(np.linalg.norm(xi), 1e-300)
        )
        cand = dae.unpack(state.t + cfg.dt, xi)
        u_prev, x_prev = cand.u, cand.xvel
        xi_prev = xi
        if rel_update <= cfg.fixed_point_tol:
            converged = True
            break

    new = dae.unpack(state.t + cfg.dt, xi_prev)
    final_contact = problem.contact_load_free(new.u, new.xvel, cfg.eps_friction)
    resid = amat @ xi_prev - rhs0
    resid[: dae.nu] += final_contact
    rel_res = float(np.linalg.norm(resid)) / rhs_scale
    fric = problem.friction_residual_free(new.u, new.xvel, cfg.eps_friction)
    report = StepReport(
        iterations,
        converged,
        rel_update,
        rel_res,
        contact_work=float(contact @ new.xvel),
        friction_work=float(fric @ new.xvel),
    )
    return new, report


@dataclass
class LeakageRecord:
    """Fracture leakage moments recovered from the bulk flow residual."""

    t: float
    moments: np.ndarray        # tested against fracture trace functions
    closure_residual: float    # fracture equation closes with -moments
    off_fracture_residual: float
    scale: float


def recover_leakage(
    problem: Problem, prev: State, curr: State, loads_free
) -> LeakageRecord:
    """Split the solved (leakage-eliminated) flow residual back into the
    explicit-leakage form: the bulk equation residual on fracture trace
    functions defines the leakage moments, and the fracture equation must
    balance them with the opposite sign."""
    from .diagnostics import flow_residual_split

    mats = problem.mats if not problem.width.time_dependent else problem.matrices(curr.t)
    dt = curr.t - prev.t
    dp = (curr.p - prev.p) / dt
    _, f_p, f_pc = loads_free
    bulk, fracture = flow_residual_split(problem, prev, curr, loads_free, mats)
    scale = max(
        float(np.linalg.norm(mats.storage_p @ dp)),
        float(np.linalg.norm(mats.darcy_stiffness @ curr.p)),
        float(np.linalg.norm(f_p)),
        float(np.linalg.norm(fracture)),
        1e-300,
    )
    frac_dofs = problem.fracture_free_pdofs()
    frac_dofs = frac_dofs[frac_dofs >= 0]
    mask = np.zeros(bulk.shape[0], dtype=bool)
    mask[frac_dofs] = True
    off = float(np.linalg.norm(bulk[~mask]))
    closure = float(np.linalg.norm(bulk + fracture))
    return LeakageRecord(curr.t, bulk[frac_dofs], closure / scale, off / scale, scale)


@dataclass
class RunResult:
    states: list
    reports: list
    rows: list = field(default_factory=list)
    energy_violations: list = field(default_factory=list)
    leakage: list = field(default_factory=list)

    @property
    def final(self) -> State:
        return self.states[-1]


def run(
    problem: Problem,
    cfg: StepConfig,
    n_steps: int,
    initial_state: State = None,
    check_energy: bool = False,
    record_leakage: bool = False,
    energy_tol: float = 1e-10,
) -> RunResult:
    """March n_steps of backward Euler, recording per-step diagnostics.

    The factorization of the step matrix is reused across steps and
    fixed-point iterations; it is rebuilt only when the width profile is
    time dependent.
    """
    from . import diagnostics  # local import; diagnostics is matrix-agnostic

    if cfg.mode == "Q" and problem.params.damping_gamma <= 0.0:
        raise SolverError("mode Q requires viscous damping gamma > 0")

    state = initial_state.copy() if initial_state else solve_initial_state(problem)
    mats = problem.matrices(state.t)
    dae = DaeSystem(mats, problem.params)
    amat = dae.step_matrix(cfg.dt)
    lu = spla.splu(amat.tocsc())

    result = RunResult(states=[state.copy()], reports=[])
    accum = {"diss_darcy": 0.0, "diss_frac": 0.0, "diss_visc": 0.0}

    for n in range(n_steps):
        t_next = state.t + cfg.dt
        if problem.width.time_dependent:
            mats = problem.matrices(t_next)
            dae = DaeSystem(mats, problem.params)
            amat = dae.step_matrix(cfg.dt)
            lu = spla.splu(amat.tocsc())
        loads = problem.loads_free(t_next)
        prev = state
        state, report = step(problem, prev, cfg, lu, dae, loads, amat)
        if not report.converged:
            raise SolverError(
                f"fixed point did not converge at step {n + 1}: "
                f"rel update {report.rel_update:.3e} after {report.iterations} iters"
            )
        result.reports.append(report)

        audit = diagnostics.energy_step_audit(
            dae, mats, prev, state, cfg.dt, loads, report.contact_work
        )
        accum["diss_darcy"] += cfg.dt * audit["diss_darcy"]
        accum["diss_frac"] += cfg.dt * audit["diss_frac"]
        accum["diss_visc"] += cfg.dt * audit["diss_visc"]
        if check_energy and audit["margin"] > energy_tol * audit["scale"]:
            result.energy_violations.append((n + 1, audit))

        row = diagnostics.timeseries_row(
            problem, mats, state, cfg, n + 1, report, accum
        )
        row.update(
            energy=audit["energy_new"],
            work_step=audit["work"],
            diss_step=audit["dissipation"],
            margin=audit["margin"],
        )
        result.rows.append(row)

        if record_leakage:
            result.leakage.append(recover_leakage(problem, prev, state, loads))
        result.states.append(state.copy())

    return result
