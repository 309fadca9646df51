"""Symmetry-reduced coordinates (gamma3, K1, K2, phi) on a level set of C.

The chart degenerates at gamma3 = +-1 where ``k`` vanishes and the
precession angle is undefined; callers integrate near-pole motion in the
decoupled (omega, gamma) system instead.
"""

from dataclasses import dataclass, replace

import numpy as np

from .errors import ChartError
from .params import require_scaled

EPS_POLE = 1e-8
# integration hands over to the (omega, gamma) system beyond this distance from a pole
POLE_SWITCH = 1e-6


@dataclass(frozen=True)
class ReducedState:
    gamma3: float
    K1: float
    K2: float
    C: float
    phi: float = 0.0

    def as_array(self):
        return np.array([self.gamma3, self.K1, self.K2, self.C, self.phi])

    @classmethod
    def from_array(cls, y):
        return cls(float(y[0]), float(y[1]), float(y[2]), float(y[3]), float(y[4]))

    def with_(self, **changes):
        return replace(self, **changes)


def _check_chart(gamma3, eps=EPS_POLE):
    if not abs(gamma3) < 1.0 - eps:
        raise ChartError(gamma3)


def chart_k(gamma3, params):
    """k = sqrt((1 - gamma3^2) / (i1 + a^2 (1 - gamma3^2)))."""
    q = 1.0 - gamma3 * gamma3
    return np.sqrt(q / (params.i1 + params.a**2 * q))


def to_reduced(omega, gamma, params, eps=EPS_POLE):
    require_scaled(params)
    g1, g2, g3 = (float(x) for x in gamma)
    w1, w2, w3 = (float(x) for x in omega)
    _check_chart(g3, eps)
    k = chart_k(g3, params)
    C = params.i1 * (w1 * g1 + w2 * g2) + params.i3 * w3 * g3
    return ReducedState(g3, params.i3 * w3, (g1 * w2 - g2 * w1) / k, C, float(np.arctan2(g2, g1)))


def from_reduced(rs, params, eps=EPS_POLE):
    """Inverse of :func:`to_reduced`; returns ``(omega, gamma)``."""
    require_scaled(params)
    g3, K1, K2, C = rs.gamma3, rs.K1, rs.K2, rs.C
    _check_chart(g3, eps)
    i1, i3 = params.i1, params.i3
    q = 1.0 - g3 * g3
    p = np.sqrt(q)
    g1 = p * np.cos(rs.phi)
    g2 = p * np.sin(rs.phi)
    kK = i1 * chart_k(g3, params) * K2
    w1 = ((C - g3 * K1) * g1 - kK * g2) / (i1 * q)
    w2 = ((C - g3 * K1) * g2 + kK * g1) / (i1 * q)
    return np.array([w1, w2, K1 / i3]), np.array([g1, g2, g3])


def _common(rs, params):
    g3, K1, K2, C = rs.gamma3, rs.K1, rs.K2, rs.C
    _check_chart(g3)
    i1, i3, a, mu_r = params.i1, params.i3, params.a, params.mu_r
    q = 1.0 - g3 * g3
    k = np.sqrt(q / (i1 + a * a * q))
    k_tilde = (i1 - (i1 - i3) * g3 * g3) / i3
    g3_dot = k * K2
    K1_dot = -mu_r / i1 * (K1 * k_tilde - g3 * C)
    K2_dot = (-k * (C - g3 * K1) * (C * g3 - K1) / (i1 * q * q)
              - k * a - mu_r * K2 * k * k / q)
    return g3_dot, K1_dot, K2_dot


def rhs_reduced(rs, params):
    """d/dt (gamma3, K1, K2) with C held fixed."""
    require_scaled(params)
    return np.array(_common(rs, params))


def rhs_phi(rs, params):
    _check_chart(rs.gamma3)
    g3 = rs.gamma3
    return rs.K1 / params.i3 - g3 * (rs.C - rs.K1 * g3) / (params.i1 * (1.0 - g3 * g3))


def spin_rate(rs, params):
    """(omega, gamma) expressed in reduced variables."""
    i1, i3 = params.i1, params.i3
    return (rs.K1 * rs.gamma3 * (i1 - i3) + rs.C * i3) / (i1 * i3)


def rhs_reduced_spinning(rs, params):
    """d/dt (gamma3, K1, K2, C) under rolling plus spinning resistance."""
    require_scaled(params)
    g3_dot, K1_dot, K2_dot = _common(rs, params)
    C_dot = -params.mu_s * spin_rate(rs, params)
    return np.array([g3_dot, K1_dot + rs.gamma3 * C_dot, K2_dot, C_dot])
