import os

import numpy as np
import pytest

from porofrac.config import ConfigError, build_problem, load_config
from porofrac.solver import run, solve_initial_state
from porofrac.vtkio import (
    TIMESERIES_COLUMNS,
    write_csv,
    write_fields,
    write_fracture_fields,
)


def write_cfg(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


class TestLoadConfig:
    def test_minimal_defaults(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, "[time]\ndt = 0.01\nsteps = 5\n"))
        assert cfg.material.gravity == 9.81
        assert cfg.material.grad_eta is None  # vertical-distance default
        assert cfg.width_opts["tip_exponent"] == 0.05
        assert cfg.step.mode == "Q0"
        assert cfg.sources["case"] == "zero"

    def test_empty_file_is_all_defaults(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, ""))
        assert cfg.n_steps == 10

    def test_zero_fracture_storage_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "[material]\nfracture_storage = 0.0\n")
        with pytest.raises(ConfigError, match="strictly positive"):
            load_config(path)

    def test_mode_q_without_damping_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "[time]\nmode = Q\n")
        with pytest.raises(ConfigError, match="viscous regularization required"):
            load_config(path)

    def test_unknown_key_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "[material]\nshear_modulus_typo = 1\n")
        with pytest.raises(ConfigError, match="unknown key"):
            load_config(path)

    def test_unknown_section_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "[materiall]\nshear_modulus = 1\n")
        with pytest.raises(ConfigError, match="unknown section"):
            load_config(path)

    def test_parse_error_reports_line(self, tmp_path):
        path = write_cfg(tmp_path, "[material\nshear_modulus = 1\n")
        with pytest.raises(ConfigError, match="line"):
            load_config(path)

    def test_bad_number_names_key(self, tmp_path):
        path = write_cfg(tmp_path, "[material]\nshear_modulus = abc\n")
        with pytest.raises(ConfigError, match="shear_modulus"):
            load_config(path)

    def test_unknown_case_rejected(self, tmp_path):
        path = write_cfg(tmp_path, "[sources]\ncase = warp_drive\n")
        with pytest.raises(ConfigError, match="built-in case"):
            load_config(path)

    def test_refine_levels_applied(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, "[geometry]\nh = 0.25\nrefine = 1\n"))
        problem = build_problem(cfg)
        assert problem.mesh.n_triangles == 128  # 32 coarse triangles x 4

    def test_shipped_configs_load(self):
        root = os.path.join(os.path.dirname(__file__), "..", "configs")
        for name in os.listdir(root):
            cfg = load_config(os.path.join(root, name))
            assert cfg.n_steps > 0


class TestVtk:
    @pytest.fixture()
    def solved(self, tmp_path):
        cfg = load_config(
            write_cfg(
                tmp_path,
                "[material]\ngravity = 0.0\n"
                "[sources]\ncase = injection\ninjection_rate = 2.0\n"
                "[time]\ndt = 0.01\nsteps = 3\n",
            )
        )
        problem = build_problem(cfg)
        result = run(problem, cfg.step, cfg.n_steps)
        return problem, result

    def test_bulk_file_structure(self, tmp_path, solved):
        problem, result = solved
        path = tmp_path / "fields.vtk"
        write_fields(path, problem.mesh, problem.dofmap, result.final)
        lines = path.read_text().split("\n")
        assert lines[0] == "# vtk DataFile Version 3.0"
        assert lines[2] == "ASCII"
        assert lines[3] == "DATASET UNSTRUCTURED_GRID"
        n = problem.mesh.n_nodes
        assert lines[4] == f"POINTS {n} double"
        assert f"POINT_DATA {n}" in lines
        assert "VECTORS displacement double" in lines
        assert "SCALARS pressure double 1" in lines
        assert "SCALARS subdomain int 1" in lines

    def test_roundtrip_values(self, tmp_path, solved):
        problem, result = solved
        path = tmp_path / "fields.vtk"
        write_fields(path, problem.mesh, problem.dofmap, result.final)
        lines = path.read_text().split("\n")
        start = lines.index("SCALARS pressure double 1") + 2
        n = problem.mesh.n_nodes
        vals = np.array([float(v) for v in lines[start : start + n]])
        p_nodes = problem.dofmap.expand_p(result.final.p)[problem.mesh.node_to_pnode]
        assert np.array_equal(vals, p_nodes)

    def test_fracture_file(self, tmp_path, solved):
        problem, result = solved
        path = tmp_path / "frac.vtk"
        write_fracture_fields(
            path,
            problem.mesh,
            problem.frac,
            problem.dofmap,
            result.final,
            problem.params,
        )
        text = path.read_text()
        for name in ("p_c", "width_jump", "penetration", "slip_rate"):
            assert f"SCALARS {name} double 1" in text

    def test_zero_state_lengths(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, "[material]\ngravity=0.0\n"))
        problem = build_problem(cfg)
        state = solve_initial_state(problem)
        path = tmp_path / "zero.vtk"
        write_fields(path, problem.mesh, problem.dofmap, state)
        lines = path.read_text().split("\n")
        start = lines.index("VECTORS displacement double") + 1
        n = problem.mesh.n_nodes
        for line in lines[start : start + n]:
            assert line == "0 0 0"


def test_csv_deterministic(tmp_path):
    rows = [
        {c: (i if c in ("step", "fp_iters") else 0.1 * i) for c in TIMESERIES_COLUMNS}
        for i in range(3)
    ]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_csv(p1, rows, TIMESERIES_COLUMNS)
    write_csv(p2, rows, TIMESERIES_COLUMNS)
    assert p1.read_bytes() == p2.read_bytes()
    header = p1.read_text().split("\n")[0]
    assert header == ",".join(TIMESERIES_COLUMNS)
