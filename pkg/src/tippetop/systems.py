"""Vector-field wrappers that the integrator drives.

Each system exposes ``rhs(t, y)``, ``project(y)``, ``full_state(y)``,
``diagnostics(t, y)`` and ``steady_norm(y, dy)`` on flat numpy vectors.
"""

import numpy as np

from .dynamics import _accelerations, _split_friction, decoupled_velocity, rhs_decoupled
from .errors import ChartError, ValidationError
from .friction import RollingResistance, SpinningResistance
from .integrals import diagnostic_record
from .params import FullState, contact_vector, cross, require_scaled
from .reduction import (EPS_POLE, POLE_SWITCH, ReducedState, from_reduced, rhs_phi,
                        rhs_reduced_spinning, to_reduced)


def rolling_model(params):
    """Friction model implied by the decoupled/reduced equations."""
    if params.mu_s > 0:
        return RollingResistance() + SpinningResistance()
    return RollingResistance()


class GeneralSystem:
    """Full (v, omega, gamma[, alpha, beta, x, y]) system under any friction model."""

    kind = "general"

    def __init__(self, model, params, pose=False):
        self.model = model
        self.params = params
        self.pose = pose
        self.dim = 17 if pose else 9

    def rhs(self, t, y):
        params = self.params
        v, omega, gamma = y[0:3], y[3:6], y[6:9]
        F0, M0, F1, M1 = _split_friction(self.model, v, omega, gamma, params)
        v_dot, omega_dot, _ = _accelerations(v, omega, gamma, params, F0, M0, F1, M1)
        out = np.empty_like(y)
        out[0:3] = v_dot
        out[3:6] = omega_dot
        out[6:9] = cross(gamma, omega)
        if self.pose:
            alpha, beta = y[9:12], y[12:15]
            out[9:12] = cross(alpha, omega)
            out[12:15] = cross(beta, omega)
            out[15] = v @ alpha
            out[16] = v @ beta
        return out

    def project(self, y):
        y = y.copy()
        if self.pose:
            Q = np.column_stack([y[9:12], y[12:15], y[6:9]])
            U, _, Vt = np.linalg.svd(Q)
            Q = U @ Vt
            y[9:12], y[12:15], y[6:9] = Q[:, 0], Q[:, 1], Q[:, 2]
        else:
            y[6:9] /= np.sqrt(y[6:9] @ y[6:9])
        # restore (v_p, gamma) = 0 by moving v along gamma
        gamma = y[6:9]
        vp = y[0:3] + cross(y[3:6], contact_vector(gamma, self.params))
        y[0:3] -= (vp @ gamma) * gamma
        return y

    def initial_vector(self, state):
        if state.has_pose != self.pose:
            raise ValidationError("state pose extension does not match the system", field="pose")
        return state.as_array()

    def full_state(self, y):
        return FullState.from_array(y)

    def diagnostics(self, t, y):
        return diagnostic_record(t, self.full_state(y), self.model, self.params)

    def steady_norm(self, y, dy):
        return float(np.sqrt(dy[:9] @ dy[:9]))


class DecoupledSystem:
    """Closed (omega, gamma) system under rolling (and spinning) resistance."""

    kind = "decoupled"
    dim = 6

    def __init__(self, params):
        require_scaled(params)
        self.params = params
        self.model = rolling_model(params)

    def rhs(self, t, y):
        omega_dot, gamma_dot = rhs_decoupled(y[0:3], y[3:6], self.params)
        return np.concatenate([omega_dot, gamma_dot])

    def project(self, y):
        y = y.copy()
        y[3:6] /= np.sqrt(y[3:6] @ y[3:6])
        return y

    def initial_vector(self, state):
        return np.concatenate([state.omega, state.gamma])

    def full_state(self, y):
        omega, gamma = y[0:3], y[3:6]
        return FullState(decoupled_velocity(omega, gamma, self.params), omega, gamma)

    def diagnostics(self, t, y):
        return diagnostic_record(t, self.full_state(y), self.model, self.params)

    def steady_norm(self, y, dy):
        return float(np.sqrt(dy @ dy))


class ReducedSystem:
    """(gamma3, K1, K2, C, phi); C evolves only under spinning resistance.

    Leaves the chart once |gamma3| exceeds ``1 - switch``; :meth:`fallback`
    converts to the decoupled system.
    """

    kind = "reduced"
    dim = 5

    def __init__(self, params, switch=POLE_SWITCH):
        require_scaled(params)
        self.params = params
        self.switch = switch
        self.model = rolling_model(params)

    def rhs(self, t, y):
        rs = ReducedState(y[0], y[1], y[2], y[3], y[4])
        out = np.empty(5)
        out[0:4] = rhs_reduced_spinning(rs, self.params)
        out[4] = rhs_phi(rs, self.params)
        return out

    def project(self, y):
        return y

    def in_chart(self, y):
        return abs(y[0]) <= 1.0 - self.switch

    def fallback(self, y):
        omega, gamma = from_reduced(ReducedState.from_array(y), self.params, eps=EPS_POLE * 1e-3)
        gamma = gamma / np.linalg.norm(gamma)
        return DecoupledSystem(self.params), np.concatenate([omega, gamma])

    def initial_vector(self, rs):
        if isinstance(rs, FullState):
            rs = to_reduced(rs.omega, rs.gamma, self.params)
        if not self.in_chart(rs.as_array()):
            raise ChartError(rs.gamma3)
        return rs.as_array()

    def full_state(self, y):
        omega, gamma = from_reduced(ReducedState.from_array(y), self.params, eps=EPS_POLE * 1e-3)
        return FullState(decoupled_velocity(omega, gamma, self.params), omega, gamma)

    def diagnostics(self, t, y):
        return diagnostic_record(t, self.full_state(y), self.model, self.params)

    def steady_norm(self, y, dy):
        # phi is cyclic; steady motions precess at constant rate
        return float(np.sqrt(dy[:4] @ dy[:4]))


def reduced_observables(system, y):
    """(gamma3, K1, C) of a state vector from any of the rolling systems."""
    if isinstance(system, ReducedSystem):
        return float(y[0]), float(y[1]), float(y[3])
    st = system.full_state(y)
    params = system.params
    C = float((params.inertia_diag * st.omega) @ st.gamma)
    return float(st.gamma[2]), float(params.i3 * st.omega[2]), C


__all__ = ["GeneralSystem", "DecoupledSystem", "ReducedSystem", "reduced_observables",
           "rolling_model"]
