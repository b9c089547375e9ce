"""Material data and pointwise physical laws.

Stresses, Darcy fluxes, the width-cubed fracture flux, the displacement-jump
width, and the contact/friction threshold algebra.  All quantities are SI.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np


class MaterialError(ValueError):
    """A material parameter violates its admissibility condition."""


@dataclass(frozen=True)
class MaterialParams:
    """Physical coefficients of the coupled bulk/fracture model.

    jump_sign selects the orientation of the displacement jump entering the
    contact bracket: +1 keeps the opening width - g0, -1 flips it so the
    bracket activates on interpenetration.  Both readings are admissible;
    the pointwise law itself is unchanged.
    """

    shear_modulus: float = 1.0e6          # G (Pa)
    lame_lambda: float = 1.0e6            # lambda (Pa)
    biot_alpha: float = 1.0               # alpha (-)
    inv_biot_modulus: float = 1.0e-8      # 1/M (1/Pa)
    fluid_compressibility: float = 1.0e-8 # c_f (1/Pa)
    porosity: float = 0.2                 # phi_0 (-)
    viscosity: float = 1.0e-3             # mu_f (Pa s)
    permeability: np.ndarray = field(default_factory=lambda: 1.0e-10 * np.eye(2))
    fluid_density: float = 1000.0         # rho_{f,r} (kg/m^3)
    gravity: float = 9.81                 # g (m/s^2)
    fracture_storage: float = 1.0e-8      # c_fc (1/Pa), strictly positive
    damping_gamma: float = 0.0            # viscous damping (Pa s)
    contact_stiffness: float = 0.0        # c_n
    contact_exponent: float = 1.0         # m_n
    friction_coefficient: float = 0.0     # c_T
    friction_exponent: float = 1.0        # m_T
    rest_width: float = 0.0               # g_0 (m)
    jump_sign: int = 1
    grad_eta: Optional[Callable] = None   # x (n,2) -> (n,2); default vertical unit

    def __post_init__(self):
        object.__setattr__(
            self, "permeability", np.asarray(self.permeability, dtype=float)
        )
        self.validate()

    def validate(self):
        if not self.shear_modulus > 0.0:
            raise MaterialError("shear modulus G must be positive")
        if self.lame_lambda < 0.0:
            raise MaterialError("Lame lambda must be nonnegative")
        if not self.biot_alpha > 0.0:
            raise MaterialError("Biot coefficient alpha must be positive")
        if self.inv_biot_modulus < 0.0:
            raise MaterialError("1/M must be nonnegative")
        if self.fluid_compressibility < 0.0:
            raise MaterialError("fluid compressibility c_f must be nonnegative")
        if not 0.0 < self.porosity < 1.0:
            raise MaterialError("porosity phi_0 must lie in (0, 1)")
        if not self.viscosity > 0.0:
            raise MaterialError("viscosity mu_f must be positive")
        k = self.permeability
        if k.shape != (2, 2) or not np.allclose(k, k.T):
            raise MaterialError("permeability must be a symmetric 2x2 tensor")
        if np.linalg.eigvalsh(k)[0] <= 0.0:
            raise MaterialError("permeability must be positive definite")
        if not self.fracture_storage > 0.0:
            raise MaterialError("fracture storage c_fc must be strictly positive")
        if self.damping_gamma < 0.0:
            raise MaterialError("damping gamma must be nonnegative")
        if self.contact_stiffness < 0.0:
            raise MaterialError("contact stiffness c_n must be nonnegative")
        if self.contact_exponent < 1.0:
            raise MaterialError("contact exponent m_n must be at least 1")
        if self.friction_coefficient < 0.0:
            raise MaterialError("friction coefficient c_T must be nonnegative")
        if self.friction_exponent < 1.0:
            raise MaterialError("friction exponent m_T must be at least 1")
        if self.rest_width < 0.0:
            raise MaterialError("undeformed width g_0 must be nonnegative")
        if self.jump_sign not in (-1, 1):
            raise MaterialError("jump_sign must be +1 or -1")

    @property
    def storage_coefficient(self) -> float:
        """Bulk pressure storage 1/M + c_f phi_0."""
        return self.inv_biot_modulus + self.fluid_compressibility * self.porosity

    def eta_gradient(self, x: np.ndarray) -> np.ndarray:
        """Gradient of the vertical-distance field, default (0, 1)."""
        x = np.atleast_2d(x)
        if self.grad_eta is not None:
            return np.asarray(self.grad_eta(x), dtype=float)
        out = np.zeros_like(x)
        out[:, 1] = 1.0
        return out


@dataclass(frozen=True)
class WidthProfile:
    """Given fracture width w(s, t) >= 0, vanishing at both tips.

    The default family is w0 * (d1 d2 / L^2)^(1/2 + tip_exponent) with d1,
    d2 the arc distances to the two tips; near each tip this behaves like
    the required s^(1/2 + eps) degeneracy.  A custom evaluator (arc, t) ->
    width may replace the family; it must also vanish at the tips.
    """

    length: float
    w0: float = 1.0e-3
    tip_exponent: float = 0.05
    func: Optional[Callable] = None
    time_dependent: bool = False

    def __post_init__(self):
        if self.length <= 0.0:
            raise MaterialError("fracture length must be positive")
        if self.w0 < 0.0:
            raise MaterialError("reference width w0 must be nonnegative")
        if self.tip_exponent <= 0.0:
            raise MaterialError("tip exponent must be positive")

    def value(self, s, t: float = 0.0):
        s = np.asarray(s, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(s, t), dtype=float)
        z = np.clip(s * (self.length - s), 0.0, None) / self.length**2
        return self.w0 * z ** (0.5 + self.tip_exponent)

    def arc_derivative(self, s, t: float = 0.0):
        """dw/ds of the default family (used by manufactured sources)."""
        if self.func is not None:
            raise MaterialError("arc_derivative is defined for the default family only")
        s = np.asarray(s, dtype=float)
        beta = 0.5 + self.tip_exponent
        z = np.clip(s * (self.length - s), 0.0, None) / self.length**2
        zp = (self.length - 2.0 * s) / self.length**2
        with np.errstate(divide="ignore", invalid="ignore"):
            out = self.w0 * beta * z ** (beta - 1.0) * zp
        return np.where(z > 0.0, out, 0.0)


@dataclass
class SourceData:
    """Right-hand-side data and initial conditions.

    Every evaluator is vectorized: body_force(x, t) -> (n, 2) with x (n, 2);
    bulk_source(x, t) -> (n,); fracture_injection(s, t) -> (n,) with arc
    coordinates s; initial_pressure(x) -> (n,); initial_velocity(x) -> (n, 2).
    interface_traction(s, t) -> (n, 2) is an extra fracture-face load used
    by manufactured verification cases.  None means zero.
    """

    body_force: Optional[Callable] = None
    bulk_source: Optional[Callable] = None
    fracture_injection: Optional[Callable] = None
    initial_pressure: Optional[Callable] = None
    initial_velocity: Optional[Callable] = None
    interface_traction: Optional[Callable] = None


def effective_stress(grad_u, grad_ut, params: MaterialParams) -> np.ndarray:
    """Elastic stress with optional viscous regularization.

    2G sym(grad_u) + lambda tr(grad_u) I
    + gamma sym(grad_ut) + gamma tr(grad_ut) I
    """
    grad_u = np.asarray(grad_u, dtype=float)
    grad_ut = np.asarray(grad_ut, dtype=float)
    eye = np.eye(2)
    sym_u = 0.5 * (grad_u + grad_u.T)
    sym_ut = 0.5 * (grad_ut + grad_ut.T)
    g = params.damping_gamma
    return (
        2.0 * params.shear_modulus * sym_u
        + params.lame_lambda * np.trace(grad_u) * eye
        + g * sym_ut
        + g * np.trace(grad_ut) * eye
    )


def poroelastic_stress(sigma_eff, p: float, params: MaterialParams) -> np.ndarray:
    """Total stress: effective stress minus alpha p I."""
    return np.asarray(sigma_eff, dtype=float) - params.biot_alpha * p * np.eye(2)


def darcy_flux(grad_p, x, params: MaterialParams) -> np.ndarray:
    """Bulk Darcy velocity -(1/mu_f) K (grad p - rho g grad eta)."""
    grad_p = np.asarray(grad_p, dtype=float)
    drive = grad_p - params.fluid_density * params.gravity * params.eta_gradient(x)[0]
    return -params.permeability @ drive / params.viscosity


def fracture_flux(
    grad_pc: float, s: float, t: float, width: WidthProfile, params: MaterialParams,
    grad_eta_tangential: float = 0.0,
) -> float:
    """Tangential fracture flow rate with width-cubed permeability."""
    w = float(width.value(s, t))
    drive = grad_pc - params.fluid_density * params.gravity * grad_eta_tangential
    return -(w**3) / (12.0 * params.viscosity) * drive


def width_from_jump(u_plus, u_minus, n_plus) -> float:
    """Fracture width from the displacement jump: -(u+ - u-) . n+."""
    u_plus = np.asarray(u_plus, dtype=float)
    u_minus = np.asarray(u_minus, dtype=float)
    n_plus = np.asarray(n_plus, dtype=float)
    return float(-(u_plus - u_minus) @ n_plus)


def coulomb_equivalent(params: MaterialParams):
    """Exponent and coefficient of the equivalent Coulomb-type friction law.

    Returns (m_T/m_n - 1, c_T / c_n^(m_T/m_n)); the exponent is zero exactly
    when the two compliance exponents match, i.e. constant-coefficient
    Coulomb friction.
    """
    if params.contact_stiffness == 0.0:
        raise MaterialError("Coulomb equivalent requires c_n > 0")
    ratio = params.friction_exponent / params.contact_exponent
    return ratio - 1.0, params.friction_coefficient / params.contact_stiffness**ratio


def penetration_depth(jump_normal, g0: float):
    """Positive part of the normal jump measure beyond the rest width."""
    return np.maximum(np.asarray(jump_normal, dtype=float) - g0, 0.0)


def power_positive(base, exponent: float):
    """(base)_+ ^ exponent with 0^m := 0, safe for non-integer exponents."""
    base = np.maximum(np.asarray(base, dtype=float), 0.0)
    out = np.zeros_like(base)
    pos = base > 0.0
    out[pos] = np.exp(exponent * np.log(base[pos]))
    return out
