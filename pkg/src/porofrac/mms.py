"""Manufactured verification cases.

Closed-form fields, linear in time so the implicit first-order stepper
reproduces the time dependence exactly and measured errors are purely
spatial.  Sources were derived by hand from the strong equations; the test
suite re-derives them symbolically and cross-checks at random points.

Both cases live on the unit square with the horizontal fracture
(0.25, 0.5)-(0.75, 0.5) and homogeneous Dirichlet boundaries.  The smooth
case has a continuous pressure gradient (zero interface leakage); the
leakage case adds a pressure field with a gradient kink across the
fracture, which produces a known interface flux exchange.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .materials import MaterialParams, SourceData, WidthProfile

DOMAIN = (0.0, 0.0, 1.0, 1.0)
FRACTURE = ((0.25, 0.5), (0.75, 0.5))

A_U = 0.1
A_P = 1.0
R0 = 1.0  # kink amplitude of the leakage case
T0, T1 = 1.0, 0.5  # time factor T(t) = T0 + T1 t


@dataclass
class ManufacturedCase:
    name: str
    domain: tuple
    fracture: tuple
    params: MaterialParams
    width: WidthProfile
    data: SourceData
    u_exact: Callable
    p_exact: Callable
    grad_u_exact: Callable
    grad_p_exact: Callable
    leakage_exact: Optional[Callable] = None


def _case_params() -> MaterialParams:
    return MaterialParams(
        shear_modulus=1.0,
        lame_lambda=1.0,
        biot_alpha=1.0,
        inv_biot_modulus=1.0,
        fluid_compressibility=0.5,
        porosity=0.5,
        viscosity=1.0,
        permeability=np.diag([1.0, 0.8]),
        fluid_density=1.0,
        gravity=0.0,
        fracture_storage=1.0,
    )


def _tf(t):
    return T0 + T1 * t


def build_case(name: str) -> ManufacturedCase:
    if name == "mms_smooth":
        return _smooth_case(with_kink=False)
    if name == "mms_leakage":
        return _smooth_case(with_kink=True)
    raise ValueError(f"unknown manufactured case {name!r}")


def _smooth_case(with_kink: bool) -> ManufacturedCase:
    params = _case_params()
    (xa, yc), (xb, _) = FRACTURE
    lf = xb - xa
    width = WidthProfile(length=lf, w0=0.1, tip_exponent=0.05)
    pi = np.pi
    g_mod = params.shear_modulus
    lam = params.lame_lambda
    alpha = params.biot_alpha
    stor = params.storage_coefficient
    kxx = params.permeability[0, 0]
    kyy = params.permeability[1, 1]
    mu = params.viscosity
    c_fc = params.fracture_storage
    y_sin = np.sin(pi * yc)

    def trig(x):
        sx, cx = np.sin(pi * x[:, 0]), np.cos(pi * x[:, 0])
        sy, cy = np.sin(pi * x[:, 1]), np.cos(pi * x[:, 1])
        return sx * sy, cx * cy, cx * sy, sx * cy  # ss, cc, cs, sc

    # kink field r(x) m(y): r is a squared sine supported on the fracture
    # footprint, m vanishes at the bottom boundary and kinks at y = yc
    def r_of(x):
        inside = (x >= xa) & (x <= xb)
        return np.where(inside, np.sin(pi * (x - xa) / lf) ** 2, 0.0)

    def r1_of(x):
        inside = (x >= xa) & (x <= xb)
        return np.where(inside, (pi / lf) * np.sin(2.0 * pi * (x - xa) / lf), 0.0)

    def r2_of(x):
        inside = (x >= xa) & (x <= xb)
        return np.where(
            inside, 2.0 * (pi / lf) ** 2 * np.cos(2.0 * pi * (x - xa) / lf), 0.0
        )

    def m_of(y):
        return np.where(y < yc, (yc - y) * y / yc, 0.0)

    def m1_of(y):
        return np.where(y < yc, (yc - 2.0 * y) / yc, 0.0)

    def u_exact(x, t):
        ss, _, _, _ = trig(x)
        val = A_U * _tf(t) * ss
        return np.column_stack([val, val])

    def grad_u_exact(x, t):
        _, _, cs, sc = trig(x)
        gx = A_U * _tf(t) * pi * cs
        gy = A_U * _tf(t) * pi * sc
        out = np.empty((x.shape[0], 2, 2))
        out[:, 0, 0] = gx
        out[:, 0, 1] = gy
        out[:, 1, 0] = gx
        out[:, 1, 1] = gy
        return out

    def p_exact(x, t):
        ss, _, _, _ = trig(x)
        p = A_P * _tf(t) * ss
        if with_kink:
            p = p + R0 * _tf(t) * r_of(x[:, 0]) * m_of(x[:, 1])
        return p

    def grad_p_exact(x, t):
        _, _, cs, sc = trig(x)
        gp = A_P * _tf(t) * pi * np.column_stack([cs, sc])
        if with_kink:
            gp = gp + R0 * _tf(t) * np.column_stack(
                [r1_of(x[:, 0]) * m_of(x[:, 1]), r_of(x[:, 0]) * m1_of(x[:, 1])]
            )
        return gp

    def body_force(x, t):
        ss, cc, cs, sc = trig(x)
        base = A_U * _tf(t) * pi**2 * (g_mod * (3.0 * ss - cc) + lam * (ss - cc))
        fx = base + alpha * A_P * _tf(t) * pi * cs
        fy = base + alpha * A_P * _tf(t) * pi * sc
        if with_kink:
            kink = R0 * _tf(t)
            fx = fx + alpha * kink * r1_of(x[:, 0]) * m_of(x[:, 1])
            fy = fy + alpha * kink * r_of(x[:, 0]) * m1_of(x[:, 1])
        return np.column_stack([fx, fy])

    def bulk_source(x, t):
        ss, _, cs, sc = trig(x)
        out = (
            stor * A_P * T1 * ss
            + alpha * A_U * T1 * pi * (cs + sc)
            + A_P * _tf(t) * pi**2 * (kxx + kyy) / mu * ss
        )
        if with_kink:
            r, m = r_of(x[:, 0]), m_of(x[:, 1])
            lap = kxx * r2_of(x[:, 0]) * m + kyy * r * np.where(
                x[:, 1] < yc, -2.0 / yc, 0.0
            )
            out = out + stor * R0 * T1 * r * m - R0 * _tf(t) * lap / mu
        return out

    def leakage(s, t):
        return -(kyy / mu) * R0 * _tf(t) * r_of(xa + np.asarray(s))

    def fracture_injection(s, t):
        s = np.asarray(s, dtype=float)
        sf = np.sin(pi * (xa + s))
        cf = np.cos(pi * (xa + s))
        pc = A_P * _tf(t) * y_sin * sf
        pc1 = A_P * _tf(t) * y_sin * pi * cf
        w = width.value(s, t)
        w1 = width.arc_derivative(s, t)
        flux_div = (3.0 * w**2 * w1 * pc1 - w**3 * pi**2 * pc) / (12.0 * mu)
        out = c_fc * A_P * T1 * y_sin * sf - flux_div
        if with_kink:
            out = out + leakage(s, t)
        return out

    def interface_traction(s, t):
        s = np.asarray(s, dtype=float)
        x = np.column_stack([xa + s, np.full(s.shape, yc)])
        ss, _, cs, sc = trig(x)
        fac = A_U * _tf(t) * pi
        sig12 = g_mod * fac * (sc + cs)
        sig22 = 2.0 * g_mod * fac * sc + lam * fac * (cs + sc) - alpha * A_P * _tf(t) * ss
        pc = A_P * _tf(t) * ss
        return np.column_stack([-sig12, -sig22 - pc])

    def initial_pressure(x):
        return p_exact(x, 0.0)

    def initial_velocity(x):
        ss, _, _, _ = trig(np.atleast_2d(x))
        val = A_U * T1 * ss
        return np.column_stack([val, val])

    data = SourceData(
        body_force=body_force,
        bulk_source=bulk_source,
        fracture_injection=fracture_injection,
        initial_pressure=initial_pressure,
        initial_velocity=initial_velocity,
        interface_traction=interface_traction,
    )
    return ManufacturedCase(
        name="mms_leakage" if with_kink else "mms_smooth",
        domain=DOMAIN,
        fracture=FRACTURE,
        params=params,
        width=width,
        data=data,
        u_exact=u_exact,
        p_exact=p_exact,
        grad_u_exact=grad_u_exact,
        grad_p_exact=grad_p_exact,
        leakage_exact=leakage if with_kink else None,
    )
