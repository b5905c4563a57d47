"""Evaluation of the semiflow, closed-form where available, numeric otherwise.

The numeric path is a Dormand-Prince 5(4) pair with step rejection. Near
the equilibrium the normalized field is not Lipschitz, so every step is
also limited to half the distance to the equilibrium (measured in time via
the local speed). Arrival at the equilibrium is declared once the state is
within ``snap_radius`` of it; the state is then set to the equilibrium.

If the explicit pair detects stiffness (as happens for the ``x0-plane``
field once the second coordinate collapses onto the first axis) the
remaining interval is handed to ``scipy``'s Radau method with the same
tolerances and events.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .systems import SystemSpec

__all__ = [
    "CrossingError",
    "FlowError",
    "FlowResult",
    "IntegratorConfig",
    "Status",
    "closed_form_flow",
    "first_hit",
    "flow",
    "trajectory",
]

# Dormand-Prince 5(4) tableau; row i of _A holds the stage weights of stage i
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_E = np.array([71 / 57600, 0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# continuous extension of order 4 (Shampine), as used by scipy's RK45
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_SAFETY = 0.9
_MIN_FACTOR, _MAX_FACTOR = 0.2, 5.0
_STIFF_HLAMBDA = 3.25
_STIFF_COUNT = 15


class Status(enum.Enum):
    INTERIOR = "interior"
    REACHED_EQUILIBRIUM = "reached-equilibrium"
    LEFT_DOMAIN = "left-domain"
    CAPPED = "capped"


class FlowError(RuntimeError):
    """Numeric integration failed; carries the last valid state and time."""

    def __init__(self, message: str, last_state: np.ndarray | None = None, last_time: float = 0.0):
        super().__init__(message)
        self.last_state = last_state
        self.last_time = last_time


class CrossingError(RuntimeError):
    """A requested crossing does not occur before the horizon or a domain exit."""


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances for the numeric path.

    ``snap_radius`` and ``event_tol`` default to ``None``, meaning 1e-9 / 1e-10
    when the closed form is used and 1e-6 / 1e-7 for numeric integration.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    snap_radius: float | None = None
    t_max: float = 1e3
    event_tol: float | None = None
    use_closed_form: bool = True
    max_steps: int = 500_000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "snap_radius", "t_max", "event_tol"):
            value = getattr(self, name)
            if value is not None and not (value > 0.0):
                raise ValueError(f"{name} must be strictly positive, got {value}")

    def uses_closed_form(self, sys: SystemSpec) -> bool:
        return self.use_closed_form and sys.closed_flow is not None

    def snap_for(self, sys: SystemSpec) -> float:
        if self.snap_radius is not None:
            return self.snap_radius
        return 1e-9 if self.uses_closed_form(sys) else 1e-6

    def event_tol_for(self, sys: SystemSpec) -> float:
        if self.event_tol is not None:
            return self.event_tol
        return 1e-10 if self.uses_closed_form(sys) else 1e-7

    def numeric(self) -> "IntegratorConfig":
        return replace(self, use_closed_form=False)

    def as_dict(self) -> dict:
        return {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "snap_radius": self.snap_radius,
            "t_max": self.t_max,
            "event_tol": self.event_tol,
            "use_closed_form": self.use_closed_form,
        }


DEFAULT_CONFIG = IntegratorConfig()


@dataclass(frozen=True)
class FlowResult:
    """Terminal state of a flow evaluation.

    ``event_time`` is the arrival time for ``REACHED_EQUILIBRIUM`` and the
    signed exit time for ``LEFT_DOMAIN``.
    """

    state: np.ndarray
    time_reached: float
    status: Status
    event_time: float | None = None


# -- closed form ---------------------------------------------------------------

def closed_form_flow(sys: SystemSpec, x, t: float) -> np.ndarray | None:
    """Exact semiflow, or ``None`` when the system has no closed form."""
    if sys.closed_flow is None:
        return None
    x = sys.check_state(x)
    if t < 0 and sys.distance(x) == 0.0:
        raise ValueError("backward time from the equilibrium is undefined")
    return sys.closed_flow(x, float(t))


def _closed_result(sys: SystemSpec, x: np.ndarray, t: float, snap: float) -> FlowResult:
    z = sys.closed_flow(x, t)
    if t > 0:
        arrival = sys.arrival_time(x) if sys.arrival_time is not None else math.inf
        if arrival <= t:
            return FlowResult(sys.equilibrium.copy(), t, Status.REACHED_EQUILIBRIUM, arrival)
        if sys.distance(z) < snap:
            t_snap = brentq(lambda s: sys.distance(sys.closed_flow(x, s)) - snap, 0.0, t, xtol=1e-15)
            return FlowResult(sys.equilibrium.copy(), t, Status.REACHED_EQUILIBRIUM, t_snap)
        return FlowResult(z, t, Status.INTERIOR)
    rho = sys.domain_radius
    if rho is not None and sys.distance(z) >= rho:
        t_exit = brentq(lambda s: sys.distance(sys.closed_flow(x, s)) - rho, t, 0.0, xtol=1e-15)
        return FlowResult(sys.closed_flow(x, t_exit), t_exit, Status.LEFT_DOMAIN, t_exit)
    return FlowResult(z, t, Status.INTERIOR)


# -- numeric path --------------------------------------------------------------

def _dp_step(f, x, h, k1):
    """One Dormand-Prince step; returns the new state, error estimate and stage matrix."""
    K = np.empty((7, x.size))
    K[0] = k1
    for i in range(1, 6):
        K[i] = f(x + h * (_A[i] @ K[:i]))
    x_new = x + h * (_A[6] @ K[:6])
    K[6] = f(x_new)
    return x_new, h * (_E @ K), K


def _stage6_point(x, h, K):
    return x + h * (_A[5] @ K[:5])


def _dense(x, h, K):
    Q = K.T @ _P

    def at(theta):
        sigma = theta / h
        return x + h * (Q @ np.array([sigma, sigma**2, sigma**3, sigma**4]))

    return at


@dataclass
class _Run:
    state: np.ndarray
    time: float
    kind: str  # "done", "snap", "exit", "event"
    event_time: float | None = None


def _refine(g, f, x, h, K) -> tuple[float, np.ndarray]:
    """Locate the sign change of ``g`` inside an accepted step.

    The time is found on the dense-output interpolant; the returned point is
    an actual sub-step to that time.
    """
    at = _dense(x, h, K)
    g_lo, g_hi = g(x), g(at(h))
    if g_lo == 0.0:
        return 0.0, x.copy()
    if math.copysign(1.0, g_lo) == math.copysign(1.0, g_hi):
        # interpolant disagrees with the step end point; fall back to re-stepping
        theta = brentq(lambda s: g(_dp_step(f, x, s, K[0])[0]), 0.0, h, xtol=1e-15, rtol=_RTOL)
    else:
        theta = brentq(lambda s: g(at(s)), 0.0, h, xtol=1e-15, rtol=_RTOL)
    return theta, _dp_step(f, x, theta, K[0])[0]


_RTOL = 4 * np.finfo(float).eps


def _initial_step(f, x, k1, span, rtol, atol):
    scale = atol + rtol * np.abs(x)
    u, v = x / scale, k1 / scale
    d0 = math.sqrt(float(u @ u) / u.size)
    d1 = math.sqrt(float(v @ v) / v.size)
    h = 0.01 * d0 / d1 if d0 > 1e-5 and d1 > 1e-5 else 1e-6
    return min(h, span)


def _integrate(
    f: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    span: float,
    *,
    x_star: np.ndarray,
    snap: float | None,
    domain_radius: float | None,
    cfg: IntegratorConfig,
    event: Callable[[np.ndarray], float] | None = None,
) -> _Run:
    """Integrate ``x' = f(x)`` for ``span`` time units with snapping and terminal events."""
    rtol, atol = cfg.rel_tol, cfg.abs_tol
    x = np.array(x0, dtype=float)
    t = 0.0
    k1 = f(x)
    g_old = event(x) if event is not None else None
    h = _initial_step(f, x, k1, span, rtol, atol)
    stiff_hits = 0
    calm = 0
    steps = 0

    def dist(z):
        d = z - x_star
        return math.sqrt(float(d @ d))

    while t < span:
        d = dist(x)
        if snap is not None and d < snap:
            return _Run(x_star.copy(), t, "snap", t)
        speed = math.sqrt(float(k1 @ k1))
        if speed > 0.0:
            h = min(h, 0.5 * d / speed)
        h = min(h, span - t)
        if span - t - h < 1e-14 * max(1.0, span):
            h = span - t

        x_new, err, K = _dp_step(f, x, h, k1)
        if not np.isfinite(x_new).all():
            h *= 0.25
            if h < 1e-300:
                raise FlowError("integration produced non-finite values", x, t)
            continue
        scale = atol + rtol * np.maximum(np.abs(x), np.abs(x_new))
        q = err / scale
        err_norm = math.sqrt(float(q @ q) / q.size)

        if err_norm > 1.0:
            h *= max(_MIN_FACTOR, _SAFETY * err_norm ** -0.2)
            if h < 1e-14 * max(1.0, abs(t)):
                raise FlowError("step size underflow", x, t)
            continue

        steps += 1
        if steps > cfg.max_steps:
            raise FlowError("maximum number of steps exceeded", x, t)

        if domain_radius is not None and dist(x_new) >= domain_radius:
            theta, z = _refine(lambda z: dist(z) - domain_radius, f, x, h, K)
            return _Run(z, t + theta, "exit", t + theta)
        if event is not None:
            g_new = event(x_new)
            if g_new == 0.0 or (g_old != 0.0 and math.copysign(1.0, g_new) != math.copysign(1.0, g_old)):
                theta, z = _refine(event, f, x, h, K)
                return _Run(z, t + theta, "event", t + theta)
            g_old = g_new

        # stiffness test of Hairer & Wanner, DOPRI5 variant
        denom = x_new - _stage6_point(x, h, K)
        dn = float(denom @ denom)
        if dn > 0.0:
            dk = K[6] - K[5]
            hlam = h * math.sqrt(float(dk @ dk) / dn)
            if hlam > _STIFF_HLAMBDA:
                calm = 0
                stiff_hits += 1
            else:
                calm += 1
                if calm == 6:
                    stiff_hits = 0

        t += h
        x = x_new
        k1 = K[6]
        factor = _MAX_FACTOR if err_norm == 0.0 else min(_MAX_FACTOR, _SAFETY * err_norm ** -0.2)
        h *= max(_MIN_FACTOR, factor)

        if stiff_hits >= _STIFF_COUNT and t < span:
            run = _integrate_implicit(
                f, x, span - t, x_star=x_star, snap=snap, domain_radius=domain_radius,
                cfg=cfg, event=event,
            )
            run.time += t
            if run.event_time is not None:
                run.event_time += t
            return run

    return _Run(x, span, "done")


def _integrate_implicit(f, x0, span, *, x_star, snap, domain_radius, cfg, event) -> _Run:
    kinds = []
    events = []

    def add(fn, kind, direction):
        def wrapped(_t, y):
            return fn(y)

        wrapped.terminal = True
        wrapped.direction = direction
        events.append(wrapped)
        kinds.append(kind)

    def dist(z):
        d = z - x_star
        return math.sqrt(float(d @ d))

    if snap is not None:
        add(lambda y: dist(y) - snap, "snap", -1)
    if domain_radius is not None:
        add(lambda y: dist(y) - domain_radius, "exit", 1)
    if event is not None:
        add(event, "event", 0)

    sol = solve_ivp(
        lambda _t, y: f(y), (0.0, span), np.asarray(x0, dtype=float), method="Radau",
        rtol=max(cfg.rel_tol, 1e-13), atol=cfg.abs_tol, events=events or None,
    )
    if sol.status == -1:
        raise FlowError(f"implicit integration failed: {sol.message}", sol.y[:, -1], float(sol.t[-1]))
    if sol.status == 1:
        for kind, times, states in zip(kinds, sol.t_events, sol.y_events):
            if len(times):
                te = float(times[0])
                if kind == "snap":
                    return _Run(np.array(x_star, dtype=float), te, "snap", te)
                return _Run(np.array(states[0]), te, kind, te)
    return _Run(np.array(sol.y[:, -1]), span, "done")


def _reversed(f):
    def g(x):
        return -f(x)

    return g


def flow(sys: SystemSpec, x, t: float, cfg: IntegratorConfig | None = None) -> FlowResult:
    """Evaluate the semiflow from ``x`` over signed time ``t``.

    Negative ``t`` integrates the reversed field and is refused from within
    ``snap_radius`` of the equilibrium.
    """
    cfg = cfg or DEFAULT_CONFIG
    x = sys.check_state(x)
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("time must be finite")
    if t == 0.0:
        return FlowResult(x.copy(), 0.0, Status.INTERIOR)

    snap = cfg.snap_for(sys)
    if t < 0 and sys.distance(x) <= snap:
        raise ValueError("backward integration cannot start at the equilibrium")
    if t > 0 and sys.distance(x) < snap:
        return FlowResult(sys.equilibrium.copy(), t, Status.REACHED_EQUILIBRIUM, 0.0)

    capped = abs(t) > cfg.t_max
    horizon = math.copysign(min(abs(t), cfg.t_max), t)

    if cfg.uses_closed_form(sys):
        res = _closed_result(sys, x, horizon, snap)
    else:
        f = sys.field if t > 0 else _reversed(sys.field)
        run = _integrate(
            f, x, abs(horizon), x_star=sys.equilibrium, snap=snap if t > 0 else None,
            domain_radius=sys.domain_radius, cfg=cfg,
        )
        sign = 1.0 if t > 0 else -1.0
        if run.kind == "snap":
            res = FlowResult(sys.equilibrium.copy(), horizon, Status.REACHED_EQUILIBRIUM, run.time)
        elif run.kind == "exit":
            res = FlowResult(run.state, sign * run.time, Status.LEFT_DOMAIN, sign * run.time)
        else:
            res = FlowResult(run.state, horizon, Status.INTERIOR)

    if capped and res.status is Status.INTERIOR:
        return replace(res, status=Status.CAPPED)
    return res


def trajectory(sys: SystemSpec, x, t_grid, cfg: IntegratorConfig | None = None) -> list[tuple[float, np.ndarray]]:
    """States on an increasing time grid starting from ``x`` at time ``t_grid[0]``.

    Grid times are offsets from the initial state, so ``t_grid[0]`` is
    normally 0. Once the equilibrium is reached every later state is the
    equilibrium itself.
    """
    cfg = cfg or DEFAULT_CONFIG
    x = sys.check_state(x)
    times = [float(s) for s in t_grid]
    if not times:
        return []
    if any(b < a for a, b in zip(times, times[1:])):
        raise ValueError("time grid must be increasing")
    if times[-1] > cfg.t_max:
        raise ValueError(f"time grid exceeds the horizon t_max = {cfg.t_max}")

    out = []
    closed = cfg.uses_closed_form(sys)
    state, t_prev, arrived = x, 0.0, False
    for s in times:
        if arrived:
            out.append((s, sys.equilibrium.copy()))
            continue
        if closed:
            res = flow(sys, x, s, cfg)
        else:
            res = flow(sys, state, s - t_prev, cfg)
        if res.status is Status.LEFT_DOMAIN:
            raise FlowError("trajectory left the domain", res.state, res.time_reached)
        arrived = res.status is Status.REACHED_EQUILIBRIUM
        state, t_prev = res.state, s
        out.append((s, res.state.copy()))
    return out


def first_hit(
    sys: SystemSpec,
    x,
    g: Callable[[np.ndarray], float],
    cfg: IntegratorConfig | None = None,
    *,
    backward: bool = False,
) -> tuple[float, np.ndarray]:
    """Smallest ``t >= 0`` at which ``g`` changes sign along the (backward) orbit of ``x``.

    Returns ``(t, point)``. Raises ``CrossingError`` when the orbit reaches
    the equilibrium, leaves the domain or hits ``t_max`` first.
    """
    cfg = cfg or DEFAULT_CONFIG
    x = sys.check_state(x)
    g0 = g(x)
    if g0 == 0.0:
        return 0.0, x.copy()
    sign = -1.0 if backward else 1.0
    snap = cfg.snap_for(sys)
    if backward and sys.distance(x) <= snap:
        raise ValueError("backward orbit of the equilibrium is undefined")

    if cfg.uses_closed_form(sys):
        return _closed_hit(sys, x, g, g0, sign, cfg)

    f = _reversed(sys.field) if backward else sys.field
    run = _integrate(
        f, x, cfg.t_max, x_star=sys.equilibrium, snap=None if backward else snap,
        domain_radius=sys.domain_radius, cfg=cfg, event=g,
    )
    if run.kind == "event":
        return run.time, run.state
    reason = {"snap": "reached the equilibrium", "exit": "left the domain", "done": "hit t_max"}[run.kind]
    raise CrossingError(f"orbit {reason} before the crossing")


def _closed_hit(sys, x, g, g0, sign, cfg) -> tuple[float, np.ndarray]:
    def state(s):
        return sys.closed_flow(x, sign * s)

    limit = cfg.t_max
    if sign > 0 and sys.arrival_time is not None:
        limit = min(limit, sys.arrival_time(x))
    if sign < 0 and sys.domain_radius is not None:
        res = _closed_result(sys, x, -limit, cfg.snap_for(sys))
        if res.status is Status.LEFT_DOMAIN:
            limit = -res.event_time

    hi = min(1.0, limit)
    lo = 0.0
    while True:
        g_hi = g(state(hi))
        if g_hi == 0.0:
            return hi, state(hi)
        if math.copysign(1.0, g_hi) != math.copysign(1.0, g0):
            break
        if hi >= limit:
            reason = "left the domain" if sign < 0 and limit < cfg.t_max else "did not cross"
            raise CrossingError(f"orbit {reason} before the crossing")
        lo, hi = hi, min(2.0 * hi, limit)
    s = brentq(lambda s: g(state(s)), lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return s, state(s)
