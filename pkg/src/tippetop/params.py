"""Body parameters, state containers and contact geometry.

All vectors are expressed in body axes; the third axis is the symmetry axis
and ``gamma`` is the upward vertical seen from the body.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional

import numpy as np

from .errors import ValidationError

TOL_GEOM = 1e-10


class Family(str, Enum):
    SIGMA_U = "sigma_u"
    SIGMA_L = "sigma_l"
    SIGMA_0 = "sigma_0"


def cross(u, v):
    # np.cross carries ~10us of overhead per call on 3-vectors
    u1, u2, u3 = u
    v1, v2, v3 = v
    return np.array([u2 * v3 - u3 * v2, u3 * v1 - u1 * v3, u1 * v2 - u2 * v1])


@dataclass(frozen=True)
class BodyParams:
    """Mass geometry and resistance coefficients of the ball.

    ``i1`` and ``i3`` are central moments of inertia (``i2 == i1``), ``a`` is
    the offset of the centre of mass from the geometric centre along the
    symmetry axis.  ``mu`` is the sliding/viscous coefficient, ``mu_r`` the
    rolling-resistance and ``mu_s`` the spinning-resistance coefficient.
    """

    a: float
    i1: float
    i3: float
    m: float = 1.0
    R: float = 1.0
    g: float = 1.0
    mu: float = 0.0
    mu_r: float = 0.0
    mu_s: float = 0.0
    dimensionless: bool = False

    def __post_init__(self):
        for name in ("m", "R", "g", "i1", "i3"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise ValidationError(f"{name} must be positive, got {value!r}", field=name)
        for name in ("a", "mu", "mu_r", "mu_s"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValidationError(f"{name} must be non-negative, got {value!r}", field=name)
        for name in ("a", "i1", "i3", "m", "R", "g", "mu", "mu_r", "mu_s"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @classmethod
    def scaled(cls, a, i1, i3, mu=0.0, mu_r=0.0, mu_s=0.0):
        """Parameters already in dimensionless units (m = R = g = 1)."""
        return cls(a=a, i1=i1, i3=i3, mu=mu, mu_r=mu_r, mu_s=mu_s, dimensionless=True)

    @property
    def inertia(self):
        return np.diag([self.i1, self.i1, self.i3])

    @property
    def inertia_diag(self):
        return np.array([self.i1, self.i1, self.i3])

    @property
    def a_vec(self):
        return np.array([0.0, 0.0, self.a])

    @property
    def is_unit_scaled(self):
        return self.m == 1.0 and self.R == 1.0 and self.g == 1.0

    def with_(self, **changes):
        return replace(self, **changes)


def require_scaled(params):
    if not params.is_unit_scaled:
        raise ValidationError("operation requires dimensionless parameters (m = R = g = 1); "
                              "call nondimensionalize() first", field="params")


def nondimensionalize(params, mu_kind="viscous"):
    """Rescale to units where m = R = g = 1.

    Lengths scale with R, time with sqrt(R/g), inertia with m R^2 and
    torques with m g R.  ``mu_kind`` says how ``mu`` is measured:
    ``"viscous"`` (force per contact speed), ``"dry"`` (dimensionless
    Coulomb coefficient) or ``"torque"`` (torque per angular rate, like
    ``mu_r``).
    """
    if params.dimensionless:
        raise ValidationError("parameters are already dimensionless", field="dimensionless")
    m, R, g = params.m, params.R, params.g
    torque_rate = m * np.sqrt(g * R**3)
    mu_scale = {
        "viscous": m * np.sqrt(g / R),
        "dry": 1.0,
        "torque": torque_rate,
    }
    if mu_kind not in mu_scale:
        raise ValidationError(f"unknown mu_kind {mu_kind!r}", field="mu_kind")
    return BodyParams(
        a=params.a / R,
        i1=params.i1 / (m * R**2),
        i3=params.i3 / (m * R**2),
        mu=params.mu / mu_scale[mu_kind],
        mu_r=params.mu_r / torque_rate,
        mu_s=params.mu_s / torque_rate,
        dimensionless=True,
    )


def _vec3(value, name):
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.shape != (3,):
        raise ValidationError(f"{name} must be a 3-vector", field=name)
    return arr


@dataclass(frozen=True)
class FullState:
    """Velocity, angular velocity and vertical in body axes.

    The optional pose extension carries the other two columns of the
    orientation matrix (``alpha``, ``beta``) and the centre-of-mass plane
    coordinates ``x``, ``y``.
    """

    v: np.ndarray
    omega: np.ndarray
    gamma: np.ndarray
    alpha: Optional[np.ndarray] = None
    beta: Optional[np.ndarray] = None
    x: Optional[float] = None
    y: Optional[float] = None

    def __post_init__(self):
        for name in ("v", "omega", "gamma"):
            object.__setattr__(self, name, _vec3(getattr(self, name), name))
        pose = (self.alpha, self.beta, self.x, self.y)
        if any(p is not None for p in pose):
            if any(p is None for p in pose):
                raise ValidationError("pose extension needs alpha, beta, x and y together", field="pose")
            object.__setattr__(self, "alpha", _vec3(self.alpha, "alpha"))
            object.__setattr__(self, "beta", _vec3(self.beta, "beta"))
            object.__setattr__(self, "x", float(self.x))
            object.__setattr__(self, "y", float(self.y))

    @property
    def has_pose(self):
        return self.alpha is not None

    def as_array(self):
        parts = [self.v, self.omega, self.gamma]
        if self.has_pose:
            parts += [self.alpha, self.beta, [self.x, self.y]]
        return np.concatenate(parts)

    @classmethod
    def from_array(cls, y):
        y = np.asarray(y, dtype=float)
        if y.shape == (9,):
            return cls(y[0:3], y[3:6], y[6:9])
        if y.shape == (17,):
            return cls(y[0:3], y[3:6], y[6:9], y[9:12], y[12:15], y[15], y[16])
        raise ValidationError(f"full state vector must have 9 or 17 entries, got {y.shape}")

    def with_pose(self, alpha=(1.0, 0.0, 0.0), beta=(0.0, 1.0, 0.0), x=0.0, y=0.0):
        return replace(self, alpha=alpha, beta=beta, x=x, y=y)


@dataclass(frozen=True)
class DiagnosticRecord:
    t: float
    energy: float
    lagrange: float
    jellett: float
    area: float
    dissipation: float
    res_constraint: float
    res_norm: float

    def __post_init__(self):
        for name in ("t", "energy", "lagrange", "jellett", "area", "dissipation",
                     "res_constraint", "res_norm"):
            if not np.isfinite(getattr(self, name)):
                raise ValidationError(f"diagnostic {name} is not finite", field=name)


def contact_vector(gamma, params):
    """Radius vector of the contact point from the centre of mass: -R*gamma - a*e3."""
    R = params.R
    g1, g2, g3 = gamma
    return np.array([-R * g1, -R * g2, -R * g3 - params.a])


def contact_velocity(state, params):
    r = contact_vector(state.gamma, params)
    return state.v + cross(state.omega, r)


def constraint_residuals(state, params):
    """Return ``((v_p, gamma), gamma.gamma - 1)``."""
    vp = contact_velocity(state, params)
    g = state.gamma
    return float(vp @ g), float(g @ g - 1.0)


def check_state(state, params, tol=TOL_GEOM):
    """Raise ValidationError when ``state`` is off the physical level set."""
    res_c, res_n = constraint_residuals(state, params)
    if abs(res_n) > tol:
        raise ValidationError(f"|gamma|^2 - 1 = {res_n:.3e} exceeds {tol:.1e}", field="gamma")
    if abs(res_c) > tol:
        raise ValidationError(f"constraint residual {res_c:.3e} exceeds {tol:.1e}", field="v")
    if state.has_pose:
        Q = np.column_stack([state.alpha, state.beta, state.gamma])
        err = np.abs(Q.T @ Q - np.eye(3)).max()
        if err > tol:
            raise ValidationError(f"orientation not orthonormal (err {err:.3e})", field="alpha")
