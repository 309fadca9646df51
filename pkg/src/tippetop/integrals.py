"""First integrals, energy dissipation and family energies."""

from dataclasses import dataclass

import numpy as np

from .dynamics import mass_operator, resolve_contact
from .errors import ExistenceError, ValidationError
from .params import (DiagnosticRecord, Family, constraint_residuals, contact_vector,
                     require_scaled)


@dataclass(frozen=True)
class IntegralValues:
    energy: float
    lagrange: float
    jellett: float
    area: float
    dissipation: float


def energy(state, params):
    w = state.omega
    kinetic = 0.5 * (w @ (params.inertia_diag * w)) + 0.5 * params.m * (state.v @ state.v)
    return float(kinetic + params.m * params.g * params.a * state.gamma[2])


def lagrange(state, params):
    return float(params.i3 * state.omega[2])


def jellett(state, params):
    J = mass_operator(state.gamma, params)
    return float(-(J @ state.omega) @ contact_vector(state.gamma, params))


def area(state, params):
    # (J w, gamma) == (I w, gamma) because (r x gamma) is orthogonal to gamma
    return float((params.inertia_diag * state.omega) @ state.gamma)


def evaluate_integrals(state, model, params):
    out, _ = resolve_contact(state, model, params)
    dissipation = out.force @ state.v + out.torque @ state.omega
    return IntegralValues(energy(state, params), lagrange(state, params),
                          jellett(state, params), area(state, params), float(dissipation))


def diagnostic_record(t, state, model, params):
    vals = evaluate_integrals(state, model, params)
    res_c, res_n = constraint_residuals(state, params)
    return DiagnosticRecord(float(t), vals.energy, vals.lagrange, vals.jellett, vals.area,
                            vals.dissipation, res_c, res_n)


def decoupled_energy(omega, gamma, params):
    """Energy with zero horizontal centre-of-mass velocity: (J w, w)/2 + a gamma3."""
    omega = np.asarray(omega, dtype=float)
    return float(0.5 * omega @ (mass_operator(gamma, params) @ omega) + params.a * gamma[2])


def family_energy(family, parameter, params):
    """Energy of a steady motion.

    ``parameter`` is the area constant C for the vertical rotations and the
    family parameter c1 for the inclined permanent rotations.  Horizontal
    centre-of-mass velocity is taken as zero.
    """
    require_scaled(params)
    family = Family(family)
    a, i1, i3 = params.a, params.i1, params.i3
    if family is Family.SIGMA_U:
        return parameter**2 / (2 * i3) + a
    if family is Family.SIGMA_L:
        return parameter**2 / (2 * i3) - a
    d = i1 - i3
    if d == 0:
        raise ExistenceError("no inclined permanent rotations when i1 == i3", field="i1")
    if a <= 0:
        raise ValidationError("inclined permanent rotations need a > 0", field="a")
    c1 = parameter
    if abs(c1) <= np.sqrt(a / abs(d)):
        raise ExistenceError(f"|c1| = {abs(c1)!r} does not exceed c0 = {np.sqrt(a / abs(d))!r}",
                             field="c1")
    gamma3 = -a / (c1**2 * d)
    K1 = a * i3 / (c1 * d)
    return 0.5 * i1 * c1**2 * (1 - gamma3**2) + K1**2 / (2 * i3) + a * gamma3
