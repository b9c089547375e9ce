"""Named built-in source scenarios selectable from a run configuration."""

import numpy as np

from .materials import SourceData

CASE_NAMES = (
    "zero",
    "injection",
    "gravity",
    "traveling_load",
    "squeeze",
    "squeeze_injection",
    "shear_stick",
)


def build_sources(case: str, opts: dict, geometry) -> SourceData:
    """Construct SourceData for a named case.

    geometry carries (domain, fracture) so loads can reference the fracture
    line; opts holds the case parameters from the [sources] section.
    """
    if case not in CASE_NAMES:
        raise ValueError(
            f"unknown source case {case!r}; choose one of {', '.join(CASE_NAMES)}"
        )
    domain, fracture = geometry
    yc = 0.5 * (fracture[0][1] + fracture[1][1])

    p0 = opts.get("initial_pressure", 0.0)
    initial_pressure = None
    if p0 != 0.0:
        def initial_pressure(x, _v=p0):
            return np.full(np.atleast_2d(x).shape[0], _v)

    if case in ("zero", "gravity"):
        return SourceData(initial_pressure=initial_pressure)

    if case == "injection":
        rate = opts.get("injection_rate", 1.0)

        def fracture_injection(s, t, _r=rate):
            return np.full(np.asarray(s).shape, _r)

        return SourceData(
            fracture_injection=fracture_injection, initial_pressure=initial_pressure
        )

    if case == "traveling_load":
        amp = opts.get("load_amplitude", 1.0)
        speed = opts.get("load_speed", 1.0)
        sigma = opts.get("load_sigma", 0.1 * (domain[2] - domain[0]))
        height = opts.get("load_height", 0.5 * (domain[1] + domain[3]))
        x_start = domain[0]

        def body_force(x, t):
            xc = x_start + speed * t
            r2 = (x[:, 0] - xc) ** 2 + (x[:, 1] - height) ** 2
            fy = -amp * np.exp(-r2 / sigma**2)
            return np.column_stack([np.zeros_like(fy), fy])

        return SourceData(body_force=body_force, initial_pressure=initial_pressure)

    if case in ("squeeze", "squeeze_injection"):
        amp = opts.get("squeeze_amplitude", 1.0)

        def body_force(x, t, _a=amp, _yc=yc):
            fy = np.where(x[:, 1] > _yc, -_a, _a)
            return np.column_stack([np.zeros_like(fy), fy])

        fracture_injection = None
        if case == "squeeze_injection":
            rate = opts.get("injection_rate", 1.0)

            def fracture_injection(s, t, _r=rate):
                return np.full(np.asarray(s).shape, _r)

        return SourceData(
            body_force=body_force,
            fracture_injection=fracture_injection,
            initial_pressure=initial_pressure,
        )

    # shear_stick: a closing load plus a tangential drive on the two sides
    squeeze = opts.get("squeeze_amplitude", 1.0)
    shear = opts.get("shear_amplitude", 0.1)

    def body_force(x, t, _s=squeeze, _h=shear, _yc=yc):
        upper = x[:, 1] > _yc
        fy = np.where(upper, -_s, _s)
        fx = np.where(upper, _h, -_h)
        return np.column_stack([fx, fy])

    return SourceData(body_force=body_force, initial_pressure=initial_pressure)
