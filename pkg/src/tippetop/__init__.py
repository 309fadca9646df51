"""Dynamics and stability of a tippe top rolling under resistance torques."""

from .errors import (ChartError, ExistenceError, LiftOffWarning, StepSizeError, TippeTopError,
                     ValidationError)
from .params import (BodyParams, DiagnosticRecord, Family, FullState, constraint_residuals,
                     contact_velocity, contact_vector, nondimensionalize)
from .friction import (AnisotropicAxis, Composite, ContactTorque, DrySliding, FrictionModel,
                       FrictionOutput, RollingResistance, Smooth, SpinningResistance,
                       ViscousSliding, conservation_signature, eval_friction, make_model)
from .dynamics import mass_operator, normal_force, rhs_decoupled, rhs_general
from .integrals import IntegralValues, evaluate_integrals, family_energy
from .reduction import (ReducedState, from_reduced, rhs_phi, rhs_reduced, rhs_reduced_spinning,
                        to_reduced)
from .equilibria import (EquilibriumFamily, StabilityReport, Verdict, critical_C,
                         hurwitz_vertical, linearize_full, sigma0_characteristic, sigma0_family)
from .systems import DecoupledSystem, GeneralSystem, ReducedSystem
from .integrate import Event, IntegratorConfig, Trajectory, integrate

__version__ = "0.1.0"
