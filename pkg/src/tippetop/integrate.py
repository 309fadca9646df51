"""Explicit Runge-Kutta time stepping with invariant projection and events.

The default scheme is the Dormand-Prince 5(4) embedded pair with the usual
elementary step-size controller; classical fixed-step RK4 is available for
cross-checks.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import ChartError, StepSizeError, ValidationError

log = logging.getLogger(__name__)

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B_LOW = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B - _B_LOW

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0
# PI step-size control (Lund stabilization) as in Hairer's DOPRI5
BETA = 0.04
ALPHA = 0.2 - 0.75 * BETA
STEADY_STEPS = 10
EVENT_TOL = 1e-9


@dataclass
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-10
    t_end: float = 50.0
    dt_init: Optional[float] = None
    dt_min: float = 1e-14
    dt_max: float = 1.0
    renormalize_gamma: bool = True
    steady_state_eps: float = 1e-10
    stop_at_steady_state: bool = True
    stride: int = 1
    method: str = "dopri5"
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValidationError("rtol and atol must be positive", field="rtol")
        if not self.t_end > 0:
            raise ValidationError("t_end must be positive", field="t_end")
        if not (0 < self.dt_min <= self.dt_max):
            raise ValidationError("need 0 < dt_min <= dt_max", field="dt_min")
        if self.stride < 1:
            raise ValidationError("stride must be >= 1", field="stride")
        if self.method not in ("dopri5", "rk4"):
            raise ValidationError(f"unknown method {self.method!r}", field="method")
        if self.method == "rk4" and not self.dt_init:
            raise ValidationError("rk4 needs a fixed dt_init", field="dt_init")


@dataclass
class Event:
    """Zero crossing of ``fn(t, y, system)`` located to EVENT_TOL in time."""

    name: str
    fn: Callable
    terminal: bool = False


@dataclass
class EventRecord:
    name: str
    t: float
    y: np.ndarray
    system_kind: str


@dataclass
class Segment:
    system: object
    t: List[float] = field(default_factory=list)
    y: List[np.ndarray] = field(default_factory=list)

    @property
    def kind(self):
        return self.system.kind


@dataclass
class Trajectory:
    segments: List[Segment]
    diagnostics: list
    events: List[EventRecord]
    status: str
    n_steps: int
    n_rejected: int
    t_final: float
    y_final: np.ndarray
    system: object

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def t(self):
        return np.concatenate([np.asarray(s.t) for s in self.segments])

    @property
    def switched(self):
        return len(self.segments) > 1

    def samples(self):
        """Iterate ``(t, y, system)`` over all recorded samples in order."""
        for seg in self.segments:
            for t, y in zip(seg.t, seg.y):
                yield t, y, seg.system

    def final_state(self):
        return self.system.full_state(self.y_final)


def _dp_step(f, t, y, h, k1):
    K = np.empty((7, y.size))
    K[0] = k1
    for i in range(1, 7):
        K[i] = f(t + _C[i] * h, y + h * (_A[i] @ K[:i]))
    y_new = y + h * (_B[:6] @ K[:6])
    err = h * (_E @ K)
    return y_new, err, K[6]


def _rk4_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + h / 2, y + h / 2 * k1)
    k3 = f(t + h / 2, y + h / 2 * k2)
    k4 = f(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _initial_step(f, t, y, f0, rtol, atol, order=5):
    scale = atol + rtol * np.abs(y)
    d0 = np.sqrt(np.mean((y / scale) ** 2))
    d1 = np.sqrt(np.mean((f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = f(t + h0, y + h0 * f0)
    d2 = np.sqrt(np.mean(((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1.0 / (order + 1))
    return min(100 * h0, h1)


class _Stepper:
    def __init__(self, system, config):
        self.system = system
        self.config = config

    def f(self, t, y):
        return self.system.rhs(t, y)

    def project(self, y):
        if self.config.renormalize_gamma:
            return self.system.project(y)
        return y


def _locate(stepper, event, t0, y0, k0, h, g0):
    """Bisect the event function over the accepted step [t0, t0 + h]."""
    lo, hi = 0.0, h
    y_hi = None
    while hi - lo > EVENT_TOL:
        mid = 0.5 * (lo + hi)
        y_mid, _, _ = _dp_step(stepper.f, t0, y0, mid, k0)
        g_mid = event.fn(t0 + mid, y_mid, stepper.system)
        if np.sign(g_mid) == np.sign(g0) and g_mid != 0:
            lo = mid
        else:
            hi, y_hi = mid, y_mid
    if y_hi is None:
        y_hi, _, _ = _dp_step(stepper.f, t0, y0, hi, k0)
    return t0 + hi, y_hi


def integrate(system, y0, config=None, events=(), t_out=None):
    """Integrate ``system`` from ``y0`` at t = 0 to ``config.t_end``.

    Samples are stored every ``config.stride`` accepted steps, or exactly at
    the times in ``t_out`` when given.  Diagnostics are evaluated at every
    stored sample.  Integration stops early with status ``"converged"`` when
    the state derivative stays below ``steady_state_eps`` for ten accepted
    steps.  Systems exposing ``in_chart``/``fallback`` are switched once they
    leave their chart.
    """
    config = config or IntegratorConfig()
    stepper = _Stepper(system, config)
    y = np.array(y0, dtype=float)
    if y.shape != (system.dim,):
        raise ValidationError(f"initial vector has shape {y.shape}, expected ({system.dim},)")
    t = 0.0
    t_end = config.t_end
    outs = None if t_out is None else [float(x) for x in t_out if 0.0 <= x <= t_end]
    out_idx = 0

    segment = Segment(system)
    segments = [segment]
    diagnostics = []
    records = []

    def record(t, y):
        segment.t.append(t)
        segment.y.append(y.copy())
        diagnostics.append(stepper.system.diagnostics(t, y))

    if outs is None or (outs and outs[0] == 0.0):
        record(t, y)
        if outs:
            out_idx = 1

    def switch(y):
        nonlocal segment
        new_system, y_new = stepper.system.fallback(y)
        log.info("leaving reduced chart at t=%.6g, switching to %s", t, new_system.kind)
        stepper.system = new_system
        segment = Segment(new_system)
        segments.append(segment)
        return y_new

    k1 = stepper.f(t, y)
    if config.method == "rk4":
        h = config.dt_init
    else:
        h = config.dt_init or _initial_step(stepper.f, t, y, k1, config.rtol, config.atol)
    h = min(max(h, config.dt_min), config.dt_max)

    g_prev = [ev.fn(t, y, stepper.system) for ev in events]
    steps = rejected = steady = 0
    err_prev, last_rejected = 1e-4, False
    status = "completed"

    while t < t_end:
        if steps >= config.max_steps:
            status = "max_steps"
            break
        h_step = min(h, t_end - t)
        clipped = False
        if outs is not None and out_idx < len(outs) and t + h_step >= outs[out_idx]:
            h_step = outs[out_idx] - t
            clipped = True
        if h_step <= 0:
            # output time equals current time
            out_idx += 1
            continue

        try:
            if config.method == "rk4":
                y_new = _rk4_step(stepper.f, t, y, h_step)
                err_norm = 0.0
                k_new = None
            else:
                y_new, err, k_new = _dp_step(stepper.f, t, y, h_step, k1)
                scale = config.atol + config.rtol * np.maximum(np.abs(y), np.abs(y_new))
                err_norm = float(np.max(np.abs(err) / scale))
        except ChartError:
            if hasattr(stepper.system, "fallback"):
                y = switch(y)
                k1 = stepper.f(t, y)
                g_prev = [ev.fn(t, y, stepper.system) for ev in events]
                continue
            raise

        if not np.all(np.isfinite(y_new)):
            err_norm = np.inf

        if err_norm > 1.0:
            rejected += 1
            factor = MIN_FACTOR if not np.isfinite(err_norm) else min(1.0, max(
                MIN_FACTOR, SAFETY * err_norm ** -ALPHA))
            last_rejected = True
            h = h_step * factor
            if h < config.dt_min:
                raise StepSizeError(t, h)
            continue

        # accepted
        t_prev, y_prev, k_prev = t, y, k1
        t = t + h_step
        if t_end - t < 1e-12 * max(1.0, t_end):
            t = t_end
        y = stepper.project(y_new)
        steps += 1
        if config.method == "rk4":
            k1 = stepper.f(t, y)
        else:
            # FSAL; projection moves y only at round-off level
            k1 = k_new
            if err_norm == 0.0:
                factor = MAX_FACTOR
            else:
                factor = SAFETY * err_norm ** -ALPHA * err_prev ** BETA
                factor = min(MAX_FACTOR, max(MIN_FACTOR, factor))
            if last_rejected:
                factor = min(factor, 1.0)
            err_prev = max(err_norm, 1e-4)
            last_rejected = False
            if not clipped:
                h = min(h_step * factor, config.dt_max)
            if h < config.dt_min:
                raise StepSizeError(t, h)

        stop = False
        for i, ev in enumerate(events):
            g_new = ev.fn(t, y, stepper.system)
            if g_prev[i] != 0 and np.sign(g_new) != np.sign(g_prev[i]):
                te, ye = _locate(stepper, ev, t_prev, y_prev, k_prev, h_step, g_prev[i])
                records.append(EventRecord(ev.name, te, ye, stepper.system.kind))
                if ev.terminal:
                    stop = True
            g_prev[i] = g_new

        if outs is None:
            if steps % config.stride == 0 or t >= t_end:
                record(t, y)
        elif out_idx < len(outs) and clipped and t >= outs[out_idx] - 1e-15:
            record(t, y)
            out_idx += 1

        if hasattr(stepper.system, "in_chart") and not stepper.system.in_chart(y):
            y = switch(y)
            k1 = stepper.f(t, y)
            g_prev = [ev.fn(t, y, stepper.system) for ev in events]

        if stop:
            status = "event"
            break

        if config.stop_at_steady_state and config.steady_state_eps > 0:
            if stepper.system.steady_norm(y, k1) < config.steady_state_eps:
                steady += 1
                if steady >= STEADY_STEPS:
                    status = "converged"
                    break
            else:
                steady = 0

    if outs is None and (not segment.t or segment.t[-1] != t):
        record(t, y)

    return Trajectory(segments, diagnostics, records, status, steps, rejected, t, y,
                      stepper.system)
