"""Equations of motion of the ball on the plane.

``rhs_general`` handles any friction model and carries the centre-of-mass
velocity.  ``rhs_decoupled`` is the closed (omega, gamma) system that remains
when the contact force vanishes and only rolling (and optionally spinning)
resistance torques act.
"""

import warnings

import numpy as np

from .errors import LiftOffWarning, TippeTopError
from .friction import FrictionOutput
from .params import FullState, contact_vector, cross, require_scaled


def mass_operator(gamma, params):
    """J = I + m (r x gamma)(r x gamma)^T."""
    s = cross(contact_vector(gamma, params), gamma)
    return params.inertia + params.m * np.outer(s, s)


def _split_friction(model, v, omega, gamma, params):
    # Friction is affine in N: F = F0 + N F1, M = M0 + N M1.
    F0, M0 = model.force_torque(v, omega, gamma, params, 0.0)
    if not model.needs_normal_force:
        return F0, M0, None, None
    F1, M1 = model.force_torque(v, omega, gamma, params, 1.0)
    return F0, M0, F1 - F0, M1 - M0


def _accelerations(v, omega, gamma, params, F0, M0, F1=None, M1=None):
    """Solve the constrained Newton-Euler system for (v', omega', N).

    Unknowns enter linearly:
        m v'  - N (gamma + F1)   = F0 - m g gamma - m omega x v
        I w'  - N (s + M1)       = M0 - omega x I omega,      s = r x gamma
        (gamma, v') + (s, w')    = -(v, gamma') - (omega, gamma' x a)
    The last row is d/dt of the contact constraint.  Eliminating v' and w'
    leaves one scalar equation for N.  Written out in scalars because this
    is the integrator's hot path.
    """
    m, g, a, i1, i3 = params.m, params.g, params.a, params.i1, params.i3
    v1, v2, v3 = v.tolist()
    w1, w2, w3 = omega.tolist()
    g1, g2, g3 = gamma.tolist()
    # s = r x gamma = gamma x (a e3)
    s1, s2 = a * g2, -a * g1
    gd1 = g2 * w3 - g3 * w2
    gd2 = g3 * w1 - g1 * w3
    gd3 = g1 * w2 - g2 * w1

    f1, f2, f3 = F0.tolist()
    A1 = f1 - m * g * g1 - m * (w2 * v3 - w3 * v2)
    A2 = f2 - m * g * g2 - m * (w3 * v1 - w1 * v3)
    A3 = f3 - m * g * g3 - m * (w1 * v2 - w2 * v1)
    t1, t2, t3 = M0.tolist()
    B1 = t1 - (i3 - i1) * w2 * w3
    B2 = t2 - (i1 - i3) * w1 * w3
    B3 = t3
    if F1 is None:
        b1, b2, b3 = g1, g2, g3
    else:
        b1, b2, b3 = g1 + F1[0], g2 + F1[1], g3 + F1[2]
    if M1 is None:
        d1, d2, d3 = s1, s2, 0.0
    else:
        d1, d2, d3 = s1 + M1[0], s2 + M1[1], M1[2]

    rhs = -(v1 * gd1 + v2 * gd2 + v3 * gd3) - a * (w1 * gd2 - w2 * gd1)
    denom = (g1 * b1 + g2 * b2 + g3 * b3) / m + (s1 * d1 + s2 * d2) / i1
    if denom == 0.0 or not np.isfinite(denom):
        raise TippeTopError("singular contact system (normal force undetermined)")
    N = (rhs - (g1 * A1 + g2 * A2 + g3 * A3) / m - (s1 * B1 + s2 * B2) / i1) / denom
    v_dot = np.array([(A1 + N * b1) / m, (A2 + N * b2) / m, (A3 + N * b3) / m])
    omega_dot = np.array([(B1 + N * d1) / i1, (B2 + N * d2) / i1, (B3 + N * d3) / i3])
    return v_dot, omega_dot, N


def resolve_contact(state, model, params):
    """Friction output with the normal reaction resolved, plus N itself."""
    v, omega, gamma = state.v, state.omega, state.gamma
    F0, M0, F1, M1 = _split_friction(model, v, omega, gamma, params)
    _, _, N = _accelerations(v, omega, gamma, params, F0, M0, F1, M1)
    if F1 is not None:
        F0 = F0 + N * F1
        M0 = M0 + N * M1
    return FrictionOutput(F0, M0, model.needs_normal_force), N


def normal_force(state, force, params, torque=None):
    """Normal reaction N = m (v, gamma)' - (F, gamma) + m g.

    The derivative is eliminated with the equations of motion, so the result
    is algebraic in the state and the given friction force/torque.
    ``torque`` defaults to ``r x F`` (force-only friction).
    """
    force = np.asarray(force, dtype=float)
    if torque is None:
        torque = cross(contact_vector(state.gamma, params), force)
    _, _, N = _accelerations(state.v, state.omega, state.gamma, params,
                             force, np.asarray(torque, dtype=float))
    if N < 0:
        warnings.warn("negative normal force: ball leaves the plane", LiftOffWarning)
    return float(N)


def rhs_general(state, model, params):
    """Time derivative of a :class:`FullState` under ``model``."""
    v, omega, gamma = state.v, state.omega, state.gamma
    F0, M0, F1, M1 = _split_friction(model, v, omega, gamma, params)
    v_dot, omega_dot, N = _accelerations(v, omega, gamma, params, F0, M0, F1, M1)
    if N < 0:
        warnings.warn("negative normal force: ball leaves the plane", LiftOffWarning)
    gamma_dot = cross(gamma, omega)
    if not state.has_pose:
        return FullState(v_dot, omega_dot, gamma_dot)
    return FullState(v_dot, omega_dot, gamma_dot,
                     alpha=cross(state.alpha, omega), beta=cross(state.beta, omega),
                     x=float(v @ state.alpha), y=float(v @ state.beta))


def rhs_decoupled(omega, gamma, params):
    """(omega', gamma') of the closed rolling-resistance system.

    J w' + w x I w + ((w, gamma' x a) - 1) r x gamma = -mu_r w_perp - mu_s (w, gamma) gamma,
    gamma' = gamma x w.  The spinning term vanishes when ``mu_s == 0``.
    """
    require_scaled(params)
    omega = np.asarray(omega, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    r = contact_vector(gamma, params)
    s = cross(r, gamma)
    J = params.inertia + np.outer(s, s)
    gamma_dot = cross(gamma, omega)
    coupling = params.a * (omega[0] * gamma_dot[1] - omega[1] * gamma_dot[0]) - 1.0
    spin = omega @ gamma
    torque = -params.mu_r * (omega - spin * gamma) - params.mu_s * spin * gamma
    b = torque - cross(omega, params.inertia_diag * omega) - coupling * s
    return np.linalg.solve(J, b), gamma_dot


def decoupled_velocity(omega, gamma, params):
    """Centre-of-mass velocity with zero horizontal part compatible with the constraint."""
    s = cross(contact_vector(gamma, params), gamma)
    return -(np.asarray(omega) @ s) * np.asarray(gamma, dtype=float)


def admissible_initial_states(count, model, params, seed=0, omega_range=2.0, slip_range=1.0):
    """Random constrained states that start in contact (N > 0).

    gamma is uniform on the sphere, omega uniform in [-omega_range, omega_range]^3,
    and v uniform in [-slip_range, slip_range]^3 before projection onto the
    constraint.  Draws with N <= 0 are rejected.
    """
    from .friction import project_to_constraint

    rng = np.random.default_rng(seed)
    states = []
    while len(states) < count:
        gamma = rng.normal(size=3)
        gamma /= np.linalg.norm(gamma)
        omega = rng.uniform(-omega_range, omega_range, size=3)
        v = rng.uniform(-slip_range, slip_range, size=3)
        state = FullState(project_to_constraint(v, omega, gamma, params), omega, gamma)
        if resolve_contact(state, model, params)[1] > 0:
            states.append(state)
    return states
