"""Level-set crossing times and the level-set coordinates of the linearizing map.

For a level value ``eps`` of the Lyapunov function V the coordinates of a
state x other than the equilibrium are

* the base point on ``{V = eps}`` of the orbit through x, and
* a signed time: the forward hitting time of ``{V = eps}`` when
  ``V(x) >= eps``, and ``log(V(x) / eps)`` inside the sublevel set.

The level set is identified with the unit sphere by radial projection,
which requires every ray from the equilibrium to meet it exactly once.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .flow import DEFAULT_CONFIG, CrossingError, IntegratorConfig, first_hit
from .sampling import sphere_directions
from .systems import SystemSpec

__all__ = [
    "CrossingResult",
    "LevelFrame",
    "StarShapeError",
    "crossing_time_backward",
    "crossing_time_forward",
    "level_coordinates",
    "make_frame",
    "ray_level_point",
    "rho_prime",
    "sphere_projection",
    "tau_prime",
    "time_to_ball",
]

_RAY_GRID = 64


class StarShapeError(ValueError):
    """The level set is not met exactly once by every ray, or leaves the domain."""


@dataclass(frozen=True)
class CrossingResult:
    time: float
    point: np.ndarray


@dataclass(frozen=True, eq=False)
class LevelFrame:
    system: SystemSpec
    epsilon: float
    config: IntegratorConfig = DEFAULT_CONFIG
    star_shaped_ok: bool = False

    @property
    def event_tol(self) -> float:
        return self.config.event_tol_for(self.system)


def _default_direction_count(n: int) -> int:
    return 256 if n <= 3 else 1024


def _ray_upper(sys: SystemSpec, u: np.ndarray, level: float) -> float | None:
    """Smallest doubling radius at which V reaches ``level`` along the ray, or None."""
    cap = None if sys.domain_radius is None else sys.domain_radius * (1.0 - 1e-12)
    s = 1.0 if cap is None else min(1.0, cap)
    while True:
        if sys.lyapunov(sys.equilibrium + s * u) >= level:
            return s
        if cap is not None and s >= cap:
            return None
        if s > 1e12:
            return None
        s = 2.0 * s if cap is None else min(2.0 * s, cap)


def _single_crossing(sys: SystemSpec, u: np.ndarray, level: float) -> bool:
    s_hit = _ray_upper(sys, u, level)
    if s_hit is None:
        raise StarShapeError(
            f"level set V = {level} is not reached along direction {u.tolist()} inside the domain"
        )
    s_far = s_hit
    v_far = 4.0 * level
    while sys.lyapunov(sys.equilibrium + s_far * u) < v_far:
        nxt = 2.0 * s_far
        if sys.domain_radius is not None and nxt >= sys.domain_radius:
            s_far = sys.domain_radius * (1.0 - 1e-9)
            break
        s_far = nxt
    grid = np.linspace(0.0, s_far, _RAY_GRID + 1)[1:]
    vals = np.array([sys.lyapunov(sys.equilibrium + s * u) for s in grid]) - level
    signs = np.sign(vals)
    signs[signs == 0] = 1.0
    changes = int(np.count_nonzero(np.diff(signs)))
    first_below = vals[0] < 0.0
    return changes == 1 and first_below


def make_frame(
    sys: SystemSpec,
    epsilon: float,
    cfg: IntegratorConfig | None = None,
    *,
    extra_levels: tuple[float, ...] = (),
    seed: int = 0,
) -> LevelFrame:
    """Validate that ``{V = epsilon}`` (and any ``extra_levels``) are star-shaped."""
    if not (epsilon > 0.0 and math.isfinite(epsilon)):
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    cfg = cfg or DEFAULT_CONFIG
    dirs = sphere_directions(sys.dimension, _default_direction_count(sys.dimension), seed)
    for level in (epsilon, *extra_levels):
        for u in dirs:
            if not _single_crossing(sys, u, level):
                raise StarShapeError(
                    f"ray along {u.tolist()} meets V = {level} more than once"
                )
    return LevelFrame(sys, float(epsilon), cfg, True)


def ray_level_point(frame: LevelFrame, u, level: float | None = None) -> np.ndarray:
    """Point of ``{V = level}`` on the ray from the equilibrium along ``u``."""
    sys = frame.system
    level = frame.epsilon if level is None else level
    u = np.asarray(u, dtype=float).reshape(-1)
    nu = math.sqrt(float(u @ u))
    if nu == 0.0:
        raise ValueError("direction must be nonzero")
    u = u / nu
    s_hi = _ray_upper(sys, u, level)
    if s_hi is None:
        raise StarShapeError(f"no bracket for V = {level} along {u.tolist()} inside the domain")
    s = brentq(
        lambda s: sys.lyapunov(sys.equilibrium + s * u) - level,
        0.0, s_hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
    )
    return sys.equilibrium + s * u


def sphere_projection(frame: LevelFrame, p) -> np.ndarray:
    sys = frame.system
    p = np.asarray(p, dtype=float)
    d = p - sys.equilibrium
    nd = math.sqrt(float(d @ d))
    if nd == 0.0:
        raise ValueError("cannot project the equilibrium onto the sphere")
    mismatch = abs(sys.lyapunov(p) - frame.epsilon)
    if mismatch > frame.event_tol:
        raise ValueError(f"point is off the level set by {mismatch:.3g}")
    return d / nd


def _level_gap(sys: SystemSpec, level: float):
    def g(z):
        return sys.lyapunov(z) - level

    return g


def crossing_time_forward(frame: LevelFrame, x, level: float | None = None) -> CrossingResult:
    """First time the forward orbit of ``x`` reaches ``{V = level}`` (default: ``epsilon``)."""
    sys = frame.system
    level = frame.epsilon if level is None else level
    x = sys.check_state(x)
    v = sys.lyapunov(x) if sys.distance(x) > 0 else 0.0
    if v < level:
        raise ValueError(f"V(x) = {v} lies below the level {level}")
    t, p = first_hit(sys, x, _level_gap(sys, level), frame.config)
    return CrossingResult(t, p)


def crossing_time_backward(frame: LevelFrame, x, level: float | None = None) -> CrossingResult:
    """First time the backward orbit of ``x`` reaches ``{V = level}``."""
    sys = frame.system
    level = frame.epsilon if level is None else level
    x = sys.check_state(x)
    if sys.distance(x) == 0.0:
        raise ValueError("backward orbit of the equilibrium is undefined")
    v = sys.lyapunov(x)
    if v > level:
        raise ValueError(f"V(x) = {v} lies above the level {level}")
    t, p = first_hit(sys, x, _level_gap(sys, level), frame.config, backward=True)
    return CrossingResult(t, p)


def level_coordinates(frame: LevelFrame, x) -> tuple[float, np.ndarray, float]:
    """Return ``(tau', rho', V(x))`` for a state other than the equilibrium."""
    sys = frame.system
    x = sys.check_state(x)
    if sys.distance(x) == 0.0:
        raise ValueError("level coordinates are undefined at the equilibrium")
    v = sys.lyapunov(x)
    if v >= frame.epsilon:
        c = crossing_time_forward(frame, x)
        return c.time, c.point, v
    c = crossing_time_backward(frame, x)
    return math.log(v / frame.epsilon), c.point, v


def tau_prime(frame: LevelFrame, x) -> float:
    return level_coordinates(frame, x)[0]


def rho_prime(frame: LevelFrame, x) -> np.ndarray:
    return level_coordinates(frame, x)[1]


def time_to_ball(sys: SystemSpec, x, radius: float, cfg: IntegratorConfig | None = None) -> float:
    """First time the forward orbit of ``x`` enters the closed ball of ``radius`` around the equilibrium."""
    x = sys.check_state(x)
    if sys.distance(x) <= radius:
        return 0.0
    star = sys.equilibrium

    def g(z):
        d = z - star
        return math.sqrt(float(d @ d)) - radius

    try:
        return first_hit(sys, x, g, cfg)[0]
    except CrossingError:
        raise CrossingError(f"orbit does not enter the ball of radius {radius}") from None
