"""Legacy ASCII VTK and CSV output.

Files are written atomically (temp file + rename) and all floating-point
values carry 17 significant digits, so a fixed configuration reproduces
byte-identical outputs.
"""

import os
import tempfile

import numpy as np

TIMESERIES_COLUMNS = (
    "step",
    "t",
    "kinetic",
    "strain_G",
    "strain_lambda",
    "storage_bulk",
    "storage_frac",
    "diss_darcy",
    "diss_frac",
    "diss_visc",
    "contact_R",
    "max_penetration",
    "stick_fraction",
    "fp_iters",
)
ENERGY_COLUMNS = ("step", "t", "energy", "diss_step", "work_step", "margin")


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def atomic_write(path, text: str):
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, rows, columns):
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    atomic_write(path, "\n".join(lines) + "\n")


def write_fields(path, mesh, dofmap, state):
    """Bulk snapshot: points, triangles, displacement/pressure point data,
    subdomain tag cell data."""
    u_full = dofmap.expand_u(state.u).reshape(-1, 2)
    p_full = dofmap.expand_p(state.p)
    p_nodes = p_full[mesh.node_to_pnode]

    out = [
        "# vtk DataFile Version 3.0",
        "porofrac fields",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_nodes} double",
    ]
    for pt in mesh.nodes:
        out.append(f"{_fmt(pt[0])} {_fmt(pt[1])} 0")
    m = mesh.n_triangles
    out.append(f"CELLS {m} {4 * m}")
    for tri in mesh.triangles:
        out.append(f"3 {tri[0]} {tri[1]} {tri[2]}")
    out.append(f"CELL_TYPES {m}")
    out.extend(["5"] * m)
    out.append(f"POINT_DATA {mesh.n_nodes}")
    out.append("VECTORS displacement double")
    for v in u_full:
        out.append(f"{_fmt(v[0])} {_fmt(v[1])} 0")
    out.append("SCALARS pressure double 1")
    out.append("LOOKUP_TABLE default")
    for v in p_nodes:
        out.append(_fmt(v))
    out.append(f"CELL_DATA {m}")
    out.append("SCALARS subdomain int 1")
    out.append("LOOKUP_TABLE default")
    out.extend(str(int(t)) for t in mesh.tri_tag)
    atomic_write(path, "\n".join(out) + "\n")


def write_fracture_fields(path, mesh, frac, dofmap, state, params):
    """Fracture polyline snapshot with trace pressure, width jump,
    penetration, and tangential slip rate per fracture node."""
    from .geometry import evaluate_jump

    u_full = dofmap.expand_u(state.u)
    x_full = dofmap.expand_u(state.xvel)
    p_full = dofmap.expand_p(state.p)
    jumps_u = evaluate_jump(mesh, frac, u_full)
    jumps_x = evaluate_jump(mesh, frac, x_full)
    nf = frac.nodes_plus.size
    normals = np.zeros((nf, 2))
    normals[:-1] += frac.normals
    normals[1:] += frac.normals
    normals /= np.linalg.norm(normals, axis=1)[:, None]

    width_jump = -np.einsum("nc,nc->n", jumps_u, normals)
    penetration = np.maximum(params.jump_sign * width_jump - params.rest_width, 0.0)
    vn = np.einsum("nc,nc->n", jumps_x, normals)
    slip = jumps_x - vn[:, None] * normals
    slip_rate = np.linalg.norm(slip, axis=1)
    p_c = p_full[dofmap.fracture_pnodes]

    out = [
        "# vtk DataFile Version 3.0",
        "porofrac fracture fields",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {nf} double",
    ]
    for nid in frac.nodes_plus:
        pt = mesh.nodes[nid]
        out.append(f"{_fmt(pt[0])} {_fmt(pt[1])} 0")
    ne = frac.n_edges
    out.append(f"CELLS {ne} {3 * ne}")
    for k in range(ne):
        out.append(f"2 {k} {k + 1}")
    out.append(f"CELL_TYPES {ne}")
    out.extend(["3"] * ne)
    out.append(f"POINT_DATA {nf}")
    for name, vals in (
        ("p_c", p_c),
        ("width_jump", width_jump),
        ("penetration", penetration),
        ("slip_rate", slip_rate),
    ):
        out.append(f"SCALARS {name} double 1")
        out.append("LOOKUP_TABLE default")
        out.extend(_fmt(v) for v in vals)
    atomic_write(path, "\n".join(out) + "\n")
