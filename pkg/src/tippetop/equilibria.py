"""Steady motions of the rolling-resistance system and their linear stability.

Vertical rotations (gamma3 = +-1) are fixed points of the (omega, gamma)
system; inclined permanent rotations are fixed points of the reduced
(gamma3, K1, K2) system, parameterized by c1 with |c1| > c0.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .dynamics import rhs_decoupled
from .errors import ChartError, ExistenceError, ValidationError
from .integrals import family_energy
from .params import Family, require_scaled
from .reduction import EPS_POLE, ReducedState, rhs_reduced

MARGIN = 1e-7
# relative width of the band in which a closed-form factor counts as zero
ZERO_REL = 1e-12
FD_STEP = 1e-6


class Verdict(str, Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass(frozen=True)
class EquilibriumFamily:
    kind: Family
    parameter: float
    gamma3: float
    K1: float
    K2: float
    omega: np.ndarray
    gamma: np.ndarray
    C: float
    energy: float
    branch: Optional[int] = None

    @property
    def reduced(self):
        return ReducedState(self.gamma3, self.K1, self.K2, self.C)


@dataclass(frozen=True)
class StabilityReport:
    family: Family
    parameter: float
    gamma3: float
    C: float
    coefficients: tuple
    minors: tuple
    eigenvalues: np.ndarray
    verdict: Verdict
    condition: str
    branch: Optional[int] = None
    extra: dict = field(default_factory=dict)

    @property
    def max_real(self):
        return float(np.max(self.eigenvalues.real))


def _check_params(params):
    require_scaled(params)
    if params.a <= 0:
        raise ValidationError("the centre-of-mass offset a must be positive", field="a")


def critical_C(params):
    """C* = i3 sqrt(a) / sqrt|i1 - i3|, or None when i1 == i3 (no inclined family)."""
    _check_params(params)
    d = params.i1 - params.i3
    if d == 0:
        return None
    return params.i3 * np.sqrt(params.a) / np.sqrt(abs(d))


def family_threshold(params):
    """c0 = sqrt(a / |i1 - i3|), or None when i1 == i3."""
    _check_params(params)
    d = params.i1 - params.i3
    return None if d == 0 else float(np.sqrt(params.a / abs(d)))


def sigma0_C(c1, params):
    d = params.i1 - params.i3
    return -c1 * params.i1 + params.a**2 / (c1**3 * d)


def vertical_family(kind, C, params):
    require_scaled(params)
    kind = Family(kind)
    if kind is Family.SIGMA_0:
        raise ValidationError("vertical_family takes sigma_u or sigma_l", field="kind")
    sign = 1.0 if kind is Family.SIGMA_U else -1.0
    omega = np.array([0.0, 0.0, sign * C / params.i3])
    gamma = np.array([0.0, 0.0, sign])
    return EquilibriumFamily(kind, float(C), sign, sign * C, 0.0, omega, gamma, float(C),
                             family_energy(kind, C, params))


def sigma0_family(c1, params, phi=0.0):
    """Inclined permanent rotation with family parameter ``c1``."""
    c0 = family_threshold(params)
    if c0 is None:
        raise ExistenceError("no inclined permanent rotations when i1 == i3", field="i1")
    if not abs(c1) > c0:
        raise ExistenceError(f"|c1| = {abs(c1)!r} must exceed c0 = {c0!r}", field="c1")
    a, i1, i3 = params.a, params.i1, params.i3
    d = i1 - i3
    gamma3 = -a / (c1**2 * d)
    p = np.sqrt(1.0 - gamma3**2)
    omega = np.array([c1 * p * np.cos(phi), c1 * p * np.sin(phi), a / (c1 * d)])
    gamma = np.array([-p * np.cos(phi), -p * np.sin(phi), gamma3])
    return EquilibriumFamily(Family.SIGMA_0, float(c1), gamma3, a * i3 / (c1 * d), 0.0,
                             omega, gamma, sigma0_C(c1, params),
                             family_energy(Family.SIGMA_0, c1, params),
                             branch=1 if c1 > 0 else -1)


def sigma0_parameters_for_C(C, params, span=1e3, samples=4000):
    """All c1 with C(c1) == C, sorted.  Empty when the family does not exist."""
    c0 = family_threshold(params)
    if c0 is None:
        return []
    roots = []
    for sign in (1.0, -1.0):
        # log-spaced grid over |c1| in (c0, c0*span]
        mags = c0 * np.exp(np.linspace(1e-12, np.log(span), samples))
        mags[0] = c0 * (1 + 1e-12)
        vals = np.array([sigma0_C(sign * m, params) - C for m in mags])
        for j in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) <= 0)[0]:
            if vals[j] == 0:
                roots.append(sign * mags[j])
                continue
            if vals[j + 1] == 0:
                continue
            root = brentq(lambda m: sigma0_C(sign * m, params) - C, mags[j], mags[j + 1],
                          xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
            roots.append(sign * root)
    return sorted(roots)


def _sign(value, scale):
    if abs(value) <= ZERO_REL * scale:
        return 0
    return 1 if value > 0 else -1


def _hurwitz_verdict(signs):
    if any(s < 0 for s in signs):
        return Verdict.UNSTABLE
    if all(s > 0 for s in signs):
        return Verdict.STABLE
    return Verdict.MARGINAL


def vertical_coefficients(which, C, params):
    """Coefficients (a0..a4) of the quartic factor of the characteristic polynomial."""
    a, i1, i3, mu = params.a, params.i1, params.i3, params.mu_r
    s = 1.0 if which == "upper" else -1.0
    c2 = C * C / (i3 * i3)
    X = a + s * c2 * (i1 - i3)
    a2 = c2 * (2 * i1 * i1 - 2 * i1 * i3 + i3 * i3) - s * 2 * a * i1 + mu * mu
    return (i1 * i1, 2 * i1 * mu, a2, -s * 2 * mu * X, X * X)


def vertical_minors(which, C, params):
    """Closed-form diagonal Hurwitz minors Delta1..Delta4."""
    a, i1, i3, mu = params.a, params.i1, params.i3, params.mu_r
    c2 = C * C / (i3 * i3)
    P = c2 * (2 * i1 - i3) ** 2 + mu * mu
    base = c2 * (3 * i1 * i1 - 3 * i1 * i3 + i3 * i3) + mu * mu
    if which == "lower":
        X = a - c2 * (i1 - i3)
        d2 = 2 * i1 * mu * (base + a * i1)
        d3 = 4 * i1 * mu * mu * P * X
        d4 = 4 * i1 * mu * mu * P * X**3
    else:
        X = a - c2 * (i3 - i1)
        d2 = 2 * i1 * mu * (base - a * i1)
        d3 = -4 * i1 * mu * mu * P * X
        d4 = -4 * i1 * mu * mu * P * X**3
    return (2 * i1 * mu, d2, d3, d4)


def _full_jacobian(omega, gamma, params, h=FD_STEP):
    q0 = np.concatenate([omega, gamma])
    L = np.empty((6, 6))
    for j in range(6):
        e = np.zeros(6)
        e[j] = h
        qp, qm = q0 + e, q0 - e
        fp = np.concatenate(rhs_decoupled(qp[:3], qp[3:], params))
        fm = np.concatenate(rhs_decoupled(qm[:3], qm[3:], params))
        L[:, j] = (fp - fm) / (2 * h)
    return L


@dataclass(frozen=True)
class Linearization:
    jacobian: np.ndarray
    eigenvalues: np.ndarray
    zero_eigenvalues: int
    quartic: np.ndarray

    @property
    def quartic_roots(self):
        return np.roots(self.quartic)


def linearize_full(family, params, h=FD_STEP):
    """Central-difference Jacobian of the (omega, gamma) system at a vertical rotation.

    ``quartic`` is the characteristic polynomial with the two structural zero
    roots (|gamma| = 1 and the area constant) divided out, scaled so its
    leading coefficient is i1^2.
    """
    if family.kind is Family.SIGMA_0:
        raise ValidationError("linearize_full applies to vertical rotations", field="family")
    L = _full_jacobian(family.omega, family.gamma, params, h)
    eig = np.linalg.eigvals(L)
    charpoly = np.real(np.poly(L))
    quartic = charpoly[:5] * params.i1**2
    zeros = int(np.sum(np.abs(eig) < MARGIN))
    return Linearization(L, eig, zeros, quartic)


def _vertical_condition(which, params):
    d = params.i1 - params.i3
    if which == "lower":
        if d > 0:
            return "stable iff |C| < C* (i1 > i3)"
        return "always stable (i1 <= i3)"
    if d < 0:
        return "stable iff |C| > C* (i3 > i1)"
    return "always unstable (i3 <= i1)"


def hurwitz_vertical(which, C, params):
    """Routh-Hurwitz classification of the upper/lower vertical rotation at area constant C."""
    _check_params(params)
    if which not in ("upper", "lower"):
        raise ValidationError("which must be 'upper' or 'lower'", field="which")
    kind = Family.SIGMA_U if which == "upper" else Family.SIGMA_L
    fam = vertical_family(kind, C, params)
    coeffs = vertical_coefficients(which, C, params)
    minors = vertical_minors(which, C, params)
    lin = linearize_full(fam, params)
    quartic_roots = np.roots(lin.quartic)
    if params.mu_r == 0:
        verdict = Verdict.MARGINAL
        condition = "criterion inapplicable (mu_r = 0)"
    else:
        a, i1, i3, mu = params.a, params.i1, params.i3, params.mu_r
        c2 = C * C / (i3 * i3)
        sgn = 1.0 if which == "lower" else -1.0
        X = a - sgn * c2 * (i1 - i3)
        x_scale = a + c2 * abs(i1 - i3)
        base = c2 * (3 * i1 * i1 - 3 * i1 * i3 + i3 * i3) + mu * mu
        f2 = base + sgn * a * i1
        signs = [1, _sign(f2, base + a * i1), sgn * _sign(X, x_scale), sgn * _sign(X, x_scale)]
        verdict = _hurwitz_verdict(signs)
        condition = _vertical_condition(which, params)
    return StabilityReport(kind, float(C), fam.gamma3, float(C), coeffs, minors, quartic_roots,
                           verdict, condition, extra={"linearization": lin})


def sigma0_coefficients(c1, params):
    """(a0, a1, a2, a3) of the cubic characteristic polynomial at the inclined rotation."""
    a, i1, i3, mu = params.a, params.i1, params.i3, params.mu_r
    d = i1 - i3
    c2 = -a / (c1**2 * d)
    q = 1 - c2**2
    a0 = -i1 * i3 * c2 * d * (i1 + a**2 * q)
    a1 = -mu * c2 * d * (i1 * i3 * (1 + c2**2) + (i1**2 + i1 * a**2 - a**2 * c2**2 * d) * q)
    a2 = -mu**2 * c2 * d * (i1 - c2**2 * d) + a * i3 * (i1**2 + c2**2 * d * (3 * i1 - i3))
    a3 = a * mu * d * q * (i1 + 3 * c2**2 * d)
    return a0, a1, a2, a3


def reduced_jacobian(c1, params, h=FD_STEP):
    fam = sigma0_family(c1, params)
    x0 = np.array([fam.gamma3, fam.K1, 0.0])
    # keep the stencil inside the chart near the family's end points
    h = min(h, 0.5 * (1.0 - EPS_POLE - abs(fam.gamma3)))
    if h <= 0:
        raise ChartError(fam.gamma3)
    L = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        fp = rhs_reduced(ReducedState(*(x0 + e), fam.C), params)
        fm = rhs_reduced(ReducedState(*(x0 - e), fam.C), params)
        L[:, j] = (fp - fm) / (2 * h)
    return L


def sigma0_characteristic(c1, params):
    """Routh-Hurwitz classification of the inclined permanent rotation at ``c1``."""
    _check_params(params)
    fam = sigma0_family(c1, params)
    a0, a1, a2, a3 = sigma0_coefficients(c1, params)
    try:
        L = reduced_jacobian(c1, params)
        eig = np.linalg.eigvals(L)
    except ChartError:
        # too close to the vertical pole for the chart; use the closed-form cubic
        L = None
        eig = np.roots([a0, a1, a2, a3])
    conditions = (a0, a1, a1 * a2 - a0 * a3, a3)
    scales = (abs(a0), abs(a1), abs(a1 * a2) + abs(a0 * a3), abs(a3))
    if params.mu_r == 0:
        verdict = Verdict.MARGINAL
        condition = "criterion inapplicable (mu_r = 0)"
    else:
        verdict = _hurwitz_verdict([_sign(c, s) for c, s in zip(conditions, scales)])
        condition = ("stable over the whole family (i1 > i3)" if params.i1 > params.i3
                     else "unstable (i1 < i3)")
    return StabilityReport(Family.SIGMA_0, float(c1), fam.gamma3, fam.C, (a0, a1, a2, a3),
                           conditions, eig, verdict, condition, branch=fam.branch,
                           extra={"jacobian": L, "K1": fam.K1})


def classify_level(C, params):
    """Stability of every steady motion on the level set of the area constant C."""
    reports = [hurwitz_vertical("upper", C, params), hurwitz_vertical("lower", C, params)]
    for c1 in sigma0_parameters_for_C(C, params):
        reports.append(sigma0_characteristic(c1, params))
    return reports


def sigma0_K1(c1, params):
    return params.a * params.i3 / (c1 * (params.i1 - params.i3))


def sigma0_distance(K1, C, params, span=200.0, samples=2000):
    """Euclidean distance from (K1, C) to the inclined family's curve in that plane.

    Returns inf when the family does not exist.
    """
    c0 = family_threshold(params)
    if c0 is None:
        return float("inf")
    u = np.linspace(1e-9, np.log(span), samples)
    best = float("inf")
    for sign in (1.0, -1.0):
        def dist(x):
            c1 = sign * c0 * np.exp(x)
            return np.hypot(K1 - sigma0_K1(c1, params), C - sigma0_C(c1, params))
        d = dist(u)
        j = int(np.argmin(d))
        lo, hi = u[max(j - 1, 0)], u[min(j + 1, samples - 1)]
        res = minimize_scalar(dist, bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
        best = min(best, float(d[j]), float(res.fun))
    return best


def sigma0_min_distance(K1, C, params, span=200.0, samples=4000):
    """Smallest distance from any of the points (K1[i], C[i]) to the inclined family.

    A dense curve sample locates the closest point, which is then refined
    with :func:`sigma0_distance`.
    """
    K1 = np.asarray(K1, dtype=float)
    C = np.asarray(C, dtype=float)
    c0 = family_threshold(params)
    if c0 is None or K1.size == 0:
        return float("inf")
    mags = c0 * np.exp(np.linspace(1e-9, np.log(span), samples))
    c1 = np.concatenate([mags, -mags])
    curve_K1, curve_C = sigma0_K1(c1, params), sigma0_C(c1, params)
    best, where = np.inf, 0
    for start in range(0, K1.size, 512):
        dk = K1[start:start + 512, None] - curve_K1[None, :]
        dc = C[start:start + 512, None] - curve_C[None, :]
        d = np.sqrt(dk * dk + dc * dc).min(axis=1)
        j = int(np.argmin(d))
        if d[j] < best:
            best, where = float(d[j]), start + j
    return min(best, sigma0_distance(K1[where], C[where], params, span=span))
