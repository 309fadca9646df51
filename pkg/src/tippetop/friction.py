"""Resistance laws at the contact.

Every model maps ``(v, omega, gamma)`` (and, for dry friction, the normal
reaction ``N``) to a force ``F`` applied at the contact point and the total
resistance torque ``M_f`` about the centre of mass, both in body axes.
Coefficients are read from :class:`~tippetop.params.BodyParams`.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .params import contact_vector, cross

E3 = np.array([0.0, 0.0, 1.0])
ZERO = np.zeros(3)

JELLETT = "jellett"
LAGRANGE = "lagrange"
AREA = "area"

SIGNATURE_SEED = 0x5EED
SIGNATURE_TOL = 1e-12


@dataclass(frozen=True)
class FrictionOutput:
    force: np.ndarray
    torque: np.ndarray
    needs_normal_force: bool = False


class FrictionModel:
    """Base class; subclasses implement :meth:`force_torque`."""

    name = "base"
    needs_normal_force = False

    def force_torque(self, v, omega, gamma, params, normal_force=None):
        raise NotImplementedError

    def evaluate(self, state, params, normal_force=None):
        if self.needs_normal_force:
            if normal_force is None:
                raise ValidationError(f"{self.name} friction needs the normal force", field="N")
            if normal_force < 0:
                raise ValidationError(f"normal force must be non-negative, got {normal_force!r}",
                                      field="N")
        F, M = self.force_torque(state.v, state.omega, state.gamma, params, normal_force)
        return FrictionOutput(F, M, self.needs_normal_force)

    def __add__(self, other):
        if not isinstance(other, FrictionModel):
            return NotImplemented
        return Composite([self, other])

    def __repr__(self):
        return f"{type(self).__name__}()"

    def to_dict(self):
        return {"type": self.name}


class Smooth(FrictionModel):
    name = "smooth"

    def force_torque(self, v, omega, gamma, params, normal_force=None):
        return ZERO.copy(), ZERO.copy()


class ViscousSliding(FrictionModel):
    """F = -mu v_p applied at the contact."""

    name = "viscous"

    def force_torque(self, v, omega, gamma, params, normal_force=None):
        r = contact_vector(gamma, params)
        F = -params.mu * (v + cross(omega, r))
        return F, cross(r, F)


class DrySliding(FrictionModel):
    """Coulomb friction F = -mu N v_p/|v_p|.

    The direction is regularized as ``v_p / max(|v_p|, eps)`` so the vector
    field stays Lipschitz through sticking.
    """

    name = "dry"
    needs_normal_force = True

    def __init__(self, eps=1e-6):
        if eps <= 0:
            raise ValidationError("dry-friction regularization eps must be positive", field="eps")
        self.eps = float(eps)

    def force_torque(self, v, omega, gamma, params, normal_force=None):
        r = contact_vector(gamma, params)
        vp = v + cross(omega, r)
        speed = max(float(np.sqrt(vp @ vp)), self.eps)
        F = -params.mu * normal_force * vp / speed
        return F, cross(r, F)

    def __repr__(self):
        return f"DrySliding(eps={self.eps!r})"

    def to_dict(self):
        return {"type": self.name, "eps": self.eps}


class ContactTorque(FrictionModel):
    name = "contact-torque"

    def force_torque(self, v, omega, gamma, params, normal_force=None):
        r = contact_vector(gamma, params)
        F = -params.mu * cross(omega, r)
        return F, cross(r, F)


class AnisotropicAxis(FrictionModel):
    """Free spin about the symmetry axis, viscous resistance across it."""

    name = "anisotropic"

    def force_torque(self, v, omega, gamma, params, normal_force=None):
        M = -params.mu * np.array([omega[0], omega[1], 0.0])
        return ZERO.copy(), M


class RollingResistance(FrictionModel):
    name = "rolling"

    def force_torque(self, v, omega, gamma, params, normal_force=None):
        w_perp = omega - (omega @ gamma) * gamma
        return ZERO.copy(), -params.mu_r * w_perp


class SpinningResistance(FrictionModel):
    name = "spinning"

    def force_torque(self, v, omega, gamma, params, normal_force=None):
        return ZERO.copy(), -params.mu_s * (omega @ gamma) * gamma


class Composite(FrictionModel):
    name = "composite"

    def __init__(self, models):
        models = list(models)
        if not models:
            raise ValidationError("composite friction needs at least one component", field="components")
        flat = []
        for model in models:
            flat.extend(model.models if isinstance(model, Composite) else [model])
        self.models = tuple(flat)
        self.needs_normal_force = any(m.needs_normal_force for m in flat)

    def force_torque(self, v, omega, gamma, params, normal_force=None):
        F = np.zeros(3)
        M = np.zeros(3)
        for model in self.models:
            f, m = model.force_torque(v, omega, gamma, params, normal_force)
            F += f
            M += m
        return F, M

    def __repr__(self):
        return f"Composite({list(self.models)!r})"

    def to_dict(self):
        return {"type": self.name, "components": [m.to_dict() for m in self.models]}


_BY_NAME = {cls.name: cls for cls in (Smooth, ViscousSliding, DrySliding, ContactTorque,
                                      AnisotropicAxis, RollingResistance, SpinningResistance)}


def model_names():
    return tuple(_BY_NAME) + (Composite.name,)


def make_model(spec):
    """Build a model from a name or a ``{"type": ..., ...}`` mapping."""
    if isinstance(spec, FrictionModel):
        return spec
    if isinstance(spec, str):
        spec = {"type": spec}
    if not isinstance(spec, dict) or "type" not in spec:
        raise ValidationError("friction model must be a name or an object with 'type'", field="model")
    kind = spec["type"]
    if kind == Composite.name:
        components = spec.get("components")
        if not isinstance(components, list) or not components:
            raise ValidationError("composite model needs a non-empty 'components' list",
                                  field="model.components")
        return Composite([make_model(c) for c in components])
    if kind not in _BY_NAME:
        raise ValidationError(f"unknown friction model {kind!r}; expected one of {model_names()}",
                              field="model.type")
    if kind == DrySliding.name:
        return DrySliding(eps=spec.get("eps", 1e-6))
    return _BY_NAME[kind]()


def eval_friction(model, state, normal_force, params):
    return model.evaluate(state, params, normal_force)


def random_admissible_states(count, seed=SIGNATURE_SEED):
    """Yield ``(v, omega, gamma)`` with gamma uniform on the sphere, omega and v
    uniform in [-2, 2]^3.  ``v`` is projected onto the contact constraint by the
    caller, since that needs the body parameters."""
    rng = np.random.default_rng(seed)
    for _ in range(count):
        gamma = rng.normal(size=3)
        gamma /= np.linalg.norm(gamma)
        omega = rng.uniform(-2.0, 2.0, size=3)
        v = rng.uniform(-2.0, 2.0, size=3)
        yield v, omega, gamma


def project_to_constraint(v, omega, gamma, params):
    """Shift ``v`` along ``gamma`` so that (v + omega x r, gamma) = 0."""
    r = contact_vector(gamma, params)
    vp = v + cross(omega, r)
    return v - (vp @ gamma) * gamma


def conservation_signature(model, params, sample_count=32, seed=SIGNATURE_SEED):
    """Integrals linear in omega that ``model`` preserves.

    Checks (M_f, r), (M_f, e3) and (M_f, gamma) on random admissible states;
    those vanishing everywhere give the Jellett, Lagrange and area integrals
    respectively.  Two of them imply the third.
    """
    if sample_count < 1:
        raise ValidationError("sample_count must be at least 1", field="sample_count")
    holds = {JELLETT: True, LAGRANGE: True, AREA: True}
    for v, omega, gamma in random_admissible_states(sample_count, seed):
        v = project_to_constraint(v, omega, gamma, params)
        _, M = model.force_torque(v, omega, gamma, params, 1.0)
        r = contact_vector(gamma, params)
        if abs(M @ r) > SIGNATURE_TOL:
            holds[JELLETT] = False
        if abs(M[2]) > SIGNATURE_TOL:
            holds[LAGRANGE] = False
        if abs(M @ gamma) > SIGNATURE_TOL:
            holds[AREA] = False
    found = {name for name, ok in holds.items() if ok}
    if len(found) >= 2:
        found = {JELLETT, LAGRANGE, AREA}
    return frozenset(found)
