"""Run configuration: a flat INI file with strict validation.

Sections: [geometry], [material], [width], [sources], [time], [output].
Every key has a default; unknown sections or keys are errors.  Material
invariants are re-validated at load time so a bad coefficient never
reaches the solver.
"""

import configparser
from dataclasses import dataclass, field

import numpy as np

from .materials import MaterialError, MaterialParams, WidthProfile
from .solver import StepConfig
from .sources import CASE_NAMES, build_sources


class ConfigError(ValueError):
    pass


_GEOMETRY_KEYS = {
    "x0": 0.0,
    "y0": 0.0,
    "x1": 1.0,
    "y1": 1.0,
    "fracture_x0": 0.25,
    "fracture_y0": 0.5,
    "fracture_x1": 0.75,
    "fracture_y1": 0.5,
    "h": 0.125,
    "refine": 0,
    "bc_u": "dirichlet",
    "bc_p": "dirichlet",
}
_MATERIAL_KEYS = {
    "shear_modulus": 1.0e6,
    "lame_lambda": 1.0e6,
    "biot_alpha": 1.0,
    "inv_biot_modulus": 1.0e-8,
    "fluid_compressibility": 1.0e-8,
    "porosity": 0.2,
    "viscosity": 1.0e-3,
    "permeability_xx": 1.0e-10,
    "permeability_xy": 0.0,
    "permeability_yy": 1.0e-10,
    "fluid_density": 1000.0,
    "gravity": 9.81,
    "fracture_storage": 1.0e-8,
    "damping_gamma": 0.0,
    "contact_stiffness": 0.0,
    "contact_exponent": 1.0,
    "friction_coefficient": 0.0,
    "friction_exponent": 1.0,
    "rest_width": 0.0,
    "contact_jump_sign": 1,
}
_WIDTH_KEYS = {"w0": 1.0e-3, "tip_exponent": 0.05}
_SOURCE_KEYS = {
    "case": "zero",
    "injection_rate": 1.0,
    "load_amplitude": 1.0,
    "load_speed": 1.0,
    "load_sigma": 0.1,
    "load_height": 0.5,
    "squeeze_amplitude": 1.0,
    "shear_amplitude": 0.1,
    "initial_pressure": 0.0,
}
_TIME_KEYS = {
    "dt": 0.01,
    "steps": 10,
    "fixed_point_tol": 1e-10,
    "max_fixed_point_iters": 50,
    "eps_friction": 1e-3,
    "mode": "Q0",
}
_OUTPUT_KEYS = {
    "directory": "out",
    "fields": "none",
    "timeseries": True,
    "energy": True,
}
_SCHEMA = {
    "geometry": _GEOMETRY_KEYS,
    "material": _MATERIAL_KEYS,
    "width": _WIDTH_KEYS,
    "sources": _SOURCE_KEYS,
    "time": _TIME_KEYS,
    "output": _OUTPUT_KEYS,
}


@dataclass
class RunConfig:
    geometry: dict
    material: MaterialParams
    width_opts: dict
    sources: dict
    step: StepConfig
    n_steps: int
    output: dict

    @property
    def domain(self):
        g = self.geometry
        return (g["x0"], g["y0"], g["x1"], g["y1"])

    @property
    def fracture(self):
        g = self.geometry
        return (
            (g["fracture_x0"], g["fracture_y0"]),
            (g["fracture_x1"], g["fracture_y1"]),
        )


def _convert(section: str, key: str, raw: str, default):
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError("not a boolean")
        if isinstance(default, int) and not isinstance(default, bool):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from exc


def load_config(path) -> RunConfig:
    """Parse and validate a run configuration file."""
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"parse error in {path}: {exc}") from exc

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown section [{section}]")
        schema = _SCHEMA[section]
        for key, raw in parser.items(section):
            if key not in schema:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
            values[(section, key)] = _convert(section, key, raw, schema[key])

    def get(section, key):
        return values.get((section, key), _SCHEMA[section][key])

    geometry = {k: get("geometry", k) for k in _GEOMETRY_KEYS}
    if geometry["h"] <= 0.0:
        raise ConfigError("[geometry] h must be positive")
    if geometry["refine"] < 0:
        raise ConfigError("[geometry] refine must be nonnegative")

    mat_kwargs = {k: get("material", k) for k in _MATERIAL_KEYS}
    perm = np.array(
        [
            [mat_kwargs.pop("permeability_xx"), mat_kwargs.pop("permeability_xy")],
            [0.0, mat_kwargs.pop("permeability_yy")],
        ]
    )
    perm[1, 0] = perm[0, 1]
    mat_kwargs["permeability"] = perm
    mat_kwargs["jump_sign"] = int(mat_kwargs.pop("contact_jump_sign"))
    try:
        material = MaterialParams(**mat_kwargs)
    except MaterialError as exc:
        raise ConfigError(f"[material] {exc}") from exc

    width_opts = {k: get("width", k) for k in _WIDTH_KEYS}
    if width_opts["w0"] < 0.0:
        raise ConfigError("[width] w0 must be nonnegative")
    if width_opts["tip_exponent"] <= 0.0:
        raise ConfigError("[width] tip_exponent must be positive")

    sources = {k: get("sources", k) for k in _SOURCE_KEYS}
    if sources["case"] not in CASE_NAMES:
        raise ConfigError(
            f"[sources] case={sources['case']!r} is not a built-in case "
            f"({', '.join(CASE_NAMES)})"
        )

    try:
        step = StepConfig(
            dt=get("time", "dt"),
            fixed_point_tol=get("time", "fixed_point_tol"),
            max_fixed_point_iters=get("time", "max_fixed_point_iters"),
            eps_friction=get("time", "eps_friction"),
            mode=get("time", "mode"),
        )
    except ValueError as exc:
        raise ConfigError(f"[time] {exc}") from exc
    n_steps = get("time", "steps")
    if n_steps < 0:
        raise ConfigError("[time] steps must be nonnegative")
    if step.mode == "Q" and material.damping_gamma <= 0.0:
        raise ConfigError(
            "[time] mode=Q: viscous regularization required with friction "
            "(set material damping_gamma > 0)"
        )

    output = {k: get("output", k) for k in _OUTPUT_KEYS}
    if output["fields"] not in ("none", "final", "all"):
        raise ConfigError("[output] fields must be none, final, or all")

    return RunConfig(
        geometry=geometry,
        material=material,
        width_opts=width_opts,
        sources=sources,
        step=step,
        n_steps=n_steps,
        output=output,
    )


def build_problem(cfg: RunConfig):
    """Instantiate mesh, width profile, sources, and the assembled problem."""
    from .geometry import build_rect_mesh_with_fracture, uniform_refine
    from .solver import Problem

    mesh, frac, dofmap = build_rect_mesh_with_fracture(
        cfg.domain,
        cfg.fracture,
        cfg.geometry["h"],
        bc_u=cfg.geometry["bc_u"],
        bc_p=cfg.geometry["bc_p"],
    )
    for _ in range(cfg.geometry["refine"]):
        mesh, frac, dofmap = uniform_refine(mesh, frac)
    width = WidthProfile(
        length=frac.total_length,
        w0=cfg.width_opts["w0"],
        tip_exponent=cfg.width_opts["tip_exponent"],
    )
    data = build_sources(cfg.sources["case"], cfg.sources, (cfg.domain, cfg.fracture))
    return Problem(mesh, frac, dofmap, cfg.material, width, data)
