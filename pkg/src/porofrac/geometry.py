"""Triangulation of a rectangle with an embedded open fracture segment.

The mesh is a structured triangulation split along the fracture line.
Displacement unknowns are duplicated across the fracture: every interior
fracture node exists twice (a plus-side and a minus-side copy at identical
coordinates), while the two tip nodes stay single so the displacement jump
vanishes there.  Pressure stays single-valued everywhere; duplicated nodes
share one pressure unknown.

Conventions: the plus subdomain is the side of the fracture line with the
larger cross coordinate (above a horizontal fracture, right of a vertical
one), and the plus normal points from the plus side into the minus side.
"""

from dataclasses import dataclass

import numpy as np

SNAP_REL = 1e-10  # snapping tolerance relative to the domain diameter


class MeshError(ValueError):
    """Invalid geometry input or a violated mesh construction contract."""


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (np.isfinite(self.x) and np.isfinite(self.y)):
            raise MeshError("point coordinates must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass
class Mesh2D:
    """Triangulation with duplicated displacement nodes along the fracture.

    nodes            (n, 2) coordinates; minus-side fracture copies included
    triangles        (m, 3) node indices, counterclockwise
    tri_tag          (m,) +1 / -1 subdomain tag relative to the split line
    boundary_edges   (k, 2) node pairs on the outer rectangle
    dirichlet_u/p    (k,) flags per boundary edge
    fracture_node_pairs (q, 2) [plus id, minus id], identical coordinates
    node_to_pnode    (n,) geometric-node index (pressure stays single-valued)
    """

    nodes: np.ndarray
    triangles: np.ndarray
    tri_tag: np.ndarray
    boundary_edges: np.ndarray
    dirichlet_u: np.ndarray
    dirichlet_p: np.ndarray
    fracture_node_pairs: np.ndarray
    node_to_pnode: np.ndarray
    n_pnodes: int
    domain: tuple
    fracture_endpoints: np.ndarray  # (2, 2)

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def snap_tol(self) -> float:
        x0, y0, x1, y1 = self.domain
        return SNAP_REL * float(np.hypot(x1 - x0, y1 - y0))

    def triangle_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass
class FractureMesh:
    """1D mesh on the fracture curve.

    Each fracture edge stores the plus-side and minus-side node pair; at a
    tip the two sides reference the same (single) node.
    """

    edges_plus: np.ndarray   # (ne, 2) node ids, ordered along the curve
    edges_minus: np.ndarray  # (ne, 2)
    normals: np.ndarray      # (ne, 2) unit plus normal
    tangents: np.ndarray     # (ne, 2) unit tangent, along increasing arc
    lengths: np.ndarray      # (ne,)
    is_tip_edge: np.ndarray  # (ne,) adjacent to a fracture tip
    nodes_plus: np.ndarray   # (nf,) plus-side node id per geometric node, in arc order
    node_arc: np.ndarray     # (nf,) arc coordinate per geometric node
    tip_points: np.ndarray   # (2, 2) coordinates of the two tips

    @property
    def n_edges(self) -> int:
        return self.edges_plus.shape[0]

    @property
    def total_length(self) -> float:
        return float(self.node_arc[-1])


@dataclass
class DofMap:
    """Free-dof numbering for displacement and pressure.

    Displacement dofs are (node, component) with node including the
    duplicated fracture copies; pressure dofs are one per geometric node.
    Dirichlet-marked dofs map to -1 and are excluded from the free range.
    """

    u_free: np.ndarray  # (2 n_nodes,) free index or -1
    p_free: np.ndarray  # (n_pnodes,) free index or -1
    n_u: int
    n_p: int
    node_to_pnode: np.ndarray
    fracture_pnodes: np.ndarray  # pressure dof owner pnode per fracture geometric node
    u_fixed_nodes: np.ndarray
    p_fixed_pnodes: np.ndarray

    def expand_u(self, u: np.ndarray) -> np.ndarray:
        """Free displacement vector -> full (2 n_nodes,) with zeros on fixed dofs."""
        full = np.zeros(self.u_free.shape[0])
        mask = self.u_free >= 0
        full[mask] = u[self.u_free[mask]]
        return full

    def restrict_u(self, full: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n_u)
        mask = self.u_free >= 0
        out[self.u_free[mask]] = full[mask]
        return out

    def expand_p(self, p: np.ndarray) -> np.ndarray:
        full = np.zeros(self.p_free.shape[0])
        mask = self.p_free >= 0
        full[mask] = p[self.p_free[mask]]
        return full

    def restrict_p(self, full: np.ndarray) -> np.ndarray:
        out = np.zeros(self.n_p)
        mask = self.p_free >= 0
        out[self.p_free[mask]] = full[mask]
        return out

    def free_u_indices(self) -> np.ndarray:
        return np.flatnonzero(self.u_free >= 0)

    def free_p_indices(self) -> np.ndarray:
        return np.flatnonzero(self.p_free >= 0)


def _insert_tick(ticks: np.ndarray, value: float, tol: float) -> np.ndarray:
    if np.min(np.abs(ticks - value)) <= tol:
        return ticks
    return np.sort(np.append(ticks, value))


def _side_markers(bc, which: str) -> dict:
    sides = ("left", "right", "bottom", "top")
    if isinstance(bc, str):
        bc = {s: bc for s in sides}
    out = {}
    for s in sides:
        v = bc.get(s, "dirichlet")
        if v not in ("dirichlet", "neumann"):
            raise MeshError(f"bc_{which}[{s}]={v!r}: expected dirichlet or neumann")
        out[s] = v == "dirichlet"
    return out


def build_rect_mesh_with_fracture(
    domain,
    fracture,
    h: float,
    bc_u="dirichlet",
    bc_p="dirichlet",
):
    """Mesh a rectangle conforming to an interior axis-aligned fracture segment.

    domain    (x0, y0, x1, y1)
    fracture  ((ax, ay), (bx, by)), an axis-aligned segment strictly inside
    h         target edge length, > 0
    bc_u/bc_p "dirichlet" | "neumann", or a per-side dict

    Returns (Mesh2D, FractureMesh, DofMap).
    """
    x0, y0, x1, y1 = map(float, domain)
    if not (x1 > x0 and y1 > y0):
        raise MeshError("domain extents must satisfy x1 > x0 and y1 > y0")
    if h <= 0.0:
        raise MeshError("target edge length h must be positive")
    a = np.asarray(fracture[0], dtype=float)
    b = np.asarray(fracture[1], dtype=float)
    diam = float(np.hypot(x1 - x0, y1 - y0))
    tol = SNAP_REL * diam

    if np.allclose(a, b, atol=tol):
        raise MeshError("fracture endpoints coincide")
    if abs(a[1] - b[1]) <= tol:
        axis = 0  # fracture along x at fixed y
    elif abs(a[0] - b[0]) <= tol:
        axis = 1  # fracture along y at fixed x
    else:
        raise MeshError("fracture must be an axis-aligned segment")
    cross = 1 - axis
    lo = np.array([x0, y0])
    hi = np.array([x1, y1])
    for p in (a, b):
        if np.any(p <= lo + tol) or np.any(p >= hi - tol):
            raise MeshError("fracture must lie strictly inside the domain")

    fa, fb = sorted((a[axis], b[axis]))
    fc = 0.5 * (a[cross] + b[cross])

    ticks = []
    for d, (lo_d, hi_d) in enumerate(((x0, x1), (y0, y1))):
        n = max(1, int(np.ceil((hi_d - lo_d) / h)))
        t = np.linspace(lo_d, hi_d, n + 1)
        if d == axis:
            t = _insert_tick(t, fa, tol)
            t = _insert_tick(t, fb, tol)
        else:
            t = _insert_tick(t, fc, tol)
        ticks.append(t)
    tx, ty = ticks
    nx, ny = len(tx), len(ty)

    along = ticks[axis]
    n_inside = int(np.sum((along > fa + tol) & (along < fb - tol)))
    if n_inside < 1:
        raise MeshError(
            "h too large: the fracture must be resolved by at least 2 mesh edges"
        )

    xs, ys = np.meshgrid(tx, ty)
    nodes = np.column_stack([xs.ravel(), ys.ravel()])

    def nid(ix, iy):
        return iy * nx + ix

    tris = []
    for iy in range(ny - 1):
        for ix in range(nx - 1):
            a00 = nid(ix, iy)
            a10 = nid(ix + 1, iy)
            a01 = nid(ix, iy + 1)
            a11 = nid(ix + 1, iy + 1)
            tris.append((a00, a10, a11))
            tris.append((a00, a11, a01))
    triangles = np.array(tris, dtype=np.int64)

    centroids = nodes[triangles].mean(axis=1)
    tri_tag = np.where(centroids[:, cross] > fc, 1, -1).astype(np.int8)

    # Duplicate interior fracture nodes; minus-side triangles are re-pointed.
    on_line = np.abs(nodes[:, cross] - fc) <= tol
    s = nodes[:, axis]
    interior = on_line & (s > fa + tol) & (s < fb - tol)
    tip_mask = on_line & (
        (np.abs(s - fa) <= tol) | (np.abs(s - fb) <= tol)
    )
    interior_ids = np.flatnonzero(interior)
    order = np.argsort(nodes[interior_ids, axis], kind="stable")
    interior_ids = interior_ids[order]

    n0 = nodes.shape[0]
    minus_ids = n0 + np.arange(interior_ids.size)
    nodes = np.vstack([nodes, nodes[interior_ids]])
    remap = np.arange(nodes.shape[0])
    remap[interior_ids] = minus_ids
    minus_tris = tri_tag < 0
    triangles[minus_tris] = remap[triangles[minus_tris]]
    pairs = np.column_stack([interior_ids, minus_ids])

    boundary_edges, dir_u, dir_p = _rect_boundary_edges(
        nodes, tx, ty, nid, _side_markers(bc_u, "u"), _side_markers(bc_p, "p")
    )

    mesh = Mesh2D(
        nodes=nodes,
        triangles=triangles,
        tri_tag=tri_tag,
        boundary_edges=boundary_edges,
        dirichlet_u=dir_u,
        dirichlet_p=dir_p,
        fracture_node_pairs=pairs,
        node_to_pnode=_pnode_numbering(nodes.shape[0], pairs),
        n_pnodes=nodes.shape[0] - pairs.shape[0],
        domain=(x0, y0, x1, y1),
        fracture_endpoints=np.array(
            [np.where(np.arange(2) == axis, fa, fc), np.where(np.arange(2) == axis, fb, fc)]
        ),
    )
    frac = _build_fracture_mesh(mesh, axis, fa, tip_mask)
    dofmap = build_dofmap(mesh, frac)
    return mesh, frac, dofmap


def _rect_boundary_edges(nodes, tx, ty, nid, mark_u, mark_p):
    nx, ny = len(tx), len(ty)
    edges, side = [], []
    for ix in range(nx - 1):
        edges.append((nid(ix, 0), nid(ix + 1, 0)))
        side.append("bottom")
        edges.append((nid(ix, ny - 1), nid(ix + 1, ny - 1)))
        side.append("top")
    for iy in range(ny - 1):
        edges.append((nid(0, iy), nid(0, iy + 1)))
        side.append("left")
        edges.append((nid(nx - 1, iy), nid(nx - 1, iy + 1)))
        side.append("right")
    edges = np.array(edges, dtype=np.int64)
    dir_u = np.array([mark_u[s] for s in side])
    dir_p = np.array([mark_p[s] for s in side])
    return edges, dir_u, dir_p


def _pnode_numbering(n_nodes: int, pairs: np.ndarray) -> np.ndarray:
    owner = np.arange(n_nodes)
    if pairs.size:
        owner[pairs[:, 1]] = pairs[:, 0]
    is_owner = np.ones(n_nodes, dtype=bool)
    if pairs.size:
        is_owner[pairs[:, 1]] = False
    pnode_of_owner = np.cumsum(is_owner) - 1
    return pnode_of_owner[owner]


def _build_fracture_mesh(mesh, axis, fa, tip_mask):
    cross = 1 - axis
    pairs = mesh.fracture_node_pairs
    plus_ids = list(pairs[:, 0])
    minus_of = dict(zip(pairs[:, 0], pairs[:, 1]))
    tips = np.flatnonzero(tip_mask)
    if tips.size != 2:
        raise MeshError("expected exactly two fracture tip nodes")
    all_plus = np.array(sorted(plus_ids + list(tips), key=lambda i: mesh.nodes[i, axis]))
    arcs = mesh.nodes[all_plus, axis] - fa

    ep, em = [], []
    for k in range(all_plus.size - 1):
        a_id, b_id = all_plus[k], all_plus[k + 1]
        ep.append((a_id, b_id))
        em.append((minus_of.get(a_id, a_id), minus_of.get(b_id, b_id)))
    ep = np.array(ep, dtype=np.int64)
    em = np.array(em, dtype=np.int64)

    ne = ep.shape[0]
    tangent = np.zeros(2)
    tangent[axis] = 1.0
    normal = np.zeros(2)
    normal[cross] = -1.0  # plus side sits at larger cross coordinate
    lengths = mesh.nodes[ep[:, 1], axis] - mesh.nodes[ep[:, 0], axis]
    is_tip = np.zeros(ne, dtype=bool)
    is_tip[0] = True
    is_tip[-1] = True
    tip_points = np.array([mesh.nodes[all_plus[0]], mesh.nodes[all_plus[-1]]])
    return FractureMesh(
        edges_plus=ep,
        edges_minus=em,
        normals=np.tile(normal, (ne, 1)),
        tangents=np.tile(tangent, (ne, 1)),
        lengths=lengths,
        is_tip_edge=is_tip,
        nodes_plus=all_plus,
        node_arc=arcs,
        tip_points=tip_points,
    )


def build_dofmap(mesh: Mesh2D, frac: FractureMesh) -> DofMap:
    n = mesh.n_nodes
    u_fixed = np.zeros(n, dtype=bool)
    p_fixed = np.zeros(mesh.n_pnodes, dtype=bool)
    for (e, du, dp) in zip(mesh.boundary_edges, mesh.dirichlet_u, mesh.dirichlet_p):
        if du:
            u_fixed[e] = True
        if dp:
            p_fixed[mesh.node_to_pnode[e]] = True

    u_free = np.full(2 * n, -1, dtype=np.int64)
    free_mask = np.repeat(~u_fixed, 2)
    u_free[free_mask] = np.arange(int(free_mask.sum()))
    p_free = np.full(mesh.n_pnodes, -1, dtype=np.int64)
    pf = ~p_fixed
    p_free[pf] = np.arange(int(pf.sum()))

    return DofMap(
        u_free=u_free,
        p_free=p_free,
        n_u=int(free_mask.sum()),
        n_p=int(pf.sum()),
        node_to_pnode=mesh.node_to_pnode,
        fracture_pnodes=mesh.node_to_pnode[frac.nodes_plus],
        u_fixed_nodes=np.flatnonzero(u_fixed),
        p_fixed_pnodes=np.flatnonzero(p_fixed),
    )


def tip_distance(frac: FractureMesh, mesh: Mesh2D, p) -> float:
    """Arc distance from a point on the fracture to the nearer tip."""
    if isinstance(p, Point2):
        p = p.as_array()
    p = np.asarray(p, dtype=float)
    t0, t1 = frac.tip_points
    axis = int(np.argmax(np.abs(t1 - t0)))
    cross = 1 - axis
    tol = mesh.snap_tol()
    length = frac.total_length
    arc = p[axis] - t0[axis]
    if abs(p[cross] - t0[cross]) > tol or arc < -tol or arc > length + tol:
        raise MeshError("point does not lie on the fracture")
    arc = min(max(arc, 0.0), length)
    return float(min(arc, length - arc))


def uniform_refine(mesh: Mesh2D, frac: FractureMesh):
    """Split every triangle into four; fracture pairing is preserved.

    Midpoints are keyed by node-id pairs, so the duplicated plus/minus
    fracture edges produce distinct midpoints that become new pairs.
    """
    nodes = list(mesh.nodes)
    midpoint = {}

    def mid(i, j):
        key = (min(i, j), max(i, j))
        m = midpoint.get(key)
        if m is None:
            m = len(nodes)
            nodes.append(0.5 * (mesh.nodes[i] + mesh.nodes[j]))
            midpoint[key] = m
        return m

    new_tris = []
    new_tag = []
    for (t, tag) in zip(mesh.triangles, mesh.tri_tag):
        i, j, k = map(int, t)
        mij, mjk, mki = mid(i, j), mid(j, k), mid(k, i)
        new_tris.extend(
            [(i, mij, mki), (mij, j, mjk), (mki, mjk, k), (mij, mjk, mki)]
        )
        new_tag.extend([tag] * 4)

    new_bedges, new_du, new_dp = [], [], []
    for (e, du, dp) in zip(mesh.boundary_edges, mesh.dirichlet_u, mesh.dirichlet_p):
        i, j = map(int, e)
        m = mid(i, j)
        new_bedges.extend([(i, m), (m, j)])
        new_du.extend([du, du])
        new_dp.extend([dp, dp])

    pair_list = [tuple(p) for p in mesh.fracture_node_pairs]
    for (ep, em) in zip(frac.edges_plus, frac.edges_minus):
        mp = mid(int(ep[0]), int(ep[1]))
        mm = mid(int(em[0]), int(em[1]))
        if mp != mm:
            pair_list.append((mp, mm))
    pairs = np.array(sorted(pair_list), dtype=np.int64).reshape(-1, 2)

    nodes = np.array(nodes)
    refined = Mesh2D(
        nodes=nodes,
        triangles=np.array(new_tris, dtype=np.int64),
        tri_tag=np.array(new_tag, dtype=np.int8),
        boundary_edges=np.array(new_bedges, dtype=np.int64),
        dirichlet_u=np.array(new_du),
        dirichlet_p=np.array(new_dp),
        fracture_node_pairs=pairs,
        node_to_pnode=_pnode_numbering(nodes.shape[0], pairs),
        n_pnodes=nodes.shape[0] - pairs.shape[0],
        domain=mesh.domain,
        fracture_endpoints=mesh.fracture_endpoints.copy(),
    )

    t0, t1 = frac.tip_points
    axis = int(np.argmax(np.abs(t1 - t0)))
    cross = 1 - axis
    fa, fb = t0[axis], t1[axis]
    fc = t0[cross]
    tol = refined.snap_tol()
    on_line = np.abs(nodes[:, cross] - fc) <= tol
    s = nodes[:, axis]
    tip_mask = on_line & ((np.abs(s - fa) <= tol) | (np.abs(s - fb) <= tol))
    new_frac = _build_fracture_mesh(refined, axis, fa, tip_mask)
    return refined, new_frac, build_dofmap(refined, new_frac)


def evaluate_jump(mesh: Mesh2D, frac: FractureMesh, u_full: np.ndarray) -> np.ndarray:
    """Displacement jump (plus minus minus) at every fracture geometric node."""
    u = u_full.reshape(-1, 2)
    minus_of = dict(zip(mesh.fracture_node_pairs[:, 0], mesh.fracture_node_pairs[:, 1]))
    out = np.zeros((frac.nodes_plus.size, 2))
    for k, nid_plus in enumerate(frac.nodes_plus):
        nid_minus = minus_of.get(int(nid_plus), int(nid_plus))
        out[k] = u[nid_plus] - u[nid_minus]
    return out
