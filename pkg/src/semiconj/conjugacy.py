"""The practical linearizing homeomorphism and its companions.

A ``ConjugacyMap`` sends a state x to ``r * exp(tau(x)) * P(rho(x))`` where
``(tau, rho)`` are the level-set coordinates from :mod:`semiconj.levelset`
and ``P`` is the radial projection of the level set onto the unit sphere.
Outside the ball of radius r the conjugated dynamics are exactly
``y -> exp(-t) y`` for ``t <= gamma_r(|y| - r)``.

When an outer level ``C`` is supplied (bounded domains) the time coordinate
beyond ``{V = C}`` is stretched by ``V(x) - C`` so the map blows up at the
domain boundary whenever V does.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .flow import DEFAULT_CONFIG, IntegratorConfig, Status, flow
from .levelset import (
    LevelFrame,
    crossing_time_backward,
    crossing_time_forward,
    level_coordinates,
    make_frame,
    ray_level_point,
    sphere_projection,
)
from .sampling import angular_spacing, sphere_directions, tangent_basis
from .systems import SystemSpec

__all__ = [
    "ConjugacyMap",
    "DirectionSampler",
    "ImageError",
    "build_map",
    "example_A_alpha",
    "example_A_h",
    "example_A_inverse",
    "gamma_r",
    "h_inverse",
    "h_map",
    "outer_radius_R",
    "scalar_power_map",
    "tau_case2",
]


class ImageError(ValueError):
    """A point is not in the image of the map."""


@dataclass(frozen=True)
class DirectionSampler:
    count: int = 128
    seed: int = 0
    refine: bool = True


@dataclass(frozen=True, eq=False)
class ConjugacyMap:
    frame: LevelFrame
    radius: float
    sampler: DirectionSampler = field(default_factory=DirectionSampler)
    outer_level: float | None = None
    outer_offset: float | None = None

    @property
    def system(self) -> SystemSpec:
        return self.frame.system

    @property
    def epsilon(self) -> float:
        return self.frame.epsilon

    @property
    def config(self) -> IntegratorConfig:
        return self.frame.config


def build_map(
    sys: SystemSpec,
    epsilon: float,
    r: float,
    cfg: IntegratorConfig | None = None,
    *,
    sampler: DirectionSampler | None = None,
    C: float | None = None,
    offset: float | None = None,
) -> ConjugacyMap:
    """Validate the level sets and assemble the map.

    ``C`` switches on the bounded-domain time coordinate; ``offset`` is the
    value subtracted from V beyond ``{V = C}`` and defaults to ``C``.
    """
    if not (r > 0.0 and math.isfinite(r)):
        raise ValueError(f"r must be positive, got {r}")
    if C is not None and not C > epsilon:
        raise ValueError(f"C must exceed epsilon ({C} <= {epsilon})")
    sampler = sampler or DirectionSampler()
    extra = () if C is None else (C,)
    frame = make_frame(sys, epsilon, cfg or DEFAULT_CONFIG, extra_levels=extra, seed=sampler.seed)
    return ConjugacyMap(frame, float(r), sampler, None if C is None else float(C),
                        None if offset is None else float(offset))


def _stretch(m: ConjugacyMap, C: float, v: float) -> float:
    offset = C if m.outer_offset is None else m.outer_offset
    return v - offset


def _time_coordinate(m: ConjugacyMap, x: np.ndarray) -> tuple[float, np.ndarray]:
    tau, rho, v = level_coordinates(m.frame, x)
    C = m.outer_level
    if C is not None and v > C:
        tau += _stretch(m, C, v)
    return tau, rho


def h_map(m: ConjugacyMap, x) -> np.ndarray:
    sys = m.system
    x = sys.check_state(x)
    if sys.distance(x) == 0.0:
        return np.zeros(sys.dimension)
    tau, rho = _time_coordinate(m, x)
    return m.radius * math.exp(tau) * sphere_projection(m.frame, rho)


def _backward(m: ConjugacyMap, p: np.ndarray, s: float) -> np.ndarray:
    if s == 0.0:
        return p.copy()
    res = flow(m.system, p, -s, m.config)
    if res.status is not Status.INTERIOR:
        raise ImageError(f"backward orbit ends with status {res.status.value} before time {s}")
    return res.state


def h_inverse(m: ConjugacyMap, y) -> np.ndarray:
    sys = m.system
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape != (sys.dimension,):
        raise ValueError(f"image point has dimension {y.size}, expected {sys.dimension}")
    ny = math.sqrt(float(y @ y))
    if ny == 0.0:
        return sys.equilibrium.copy()
    p = ray_level_point(m.frame, y / ny)
    ratio = ny / m.radius
    if ratio < 1.0:
        return crossing_time_forward(m.frame, p, level=m.epsilon * ratio).point

    target = math.log(ratio)
    C = m.outer_level
    if C is None:
        return _backward(m, p, target)
    try:
        to_outer = crossing_time_backward(m.frame, p, level=C).time
    except Exception as exc:
        raise ImageError(f"backward orbit does not reach V = {C}: {exc}") from None
    if target <= to_outer:
        return _backward(m, p, target)

    def excess(s):
        return s + _stretch(m, C, sys.lyapunov(_backward(m, p, s))) - target

    # the stretch term is nonnegative beyond {V = C}, so the root lies below target
    upper = target
    probe = flow(sys, p, -target, m.config)
    if probe.status is Status.LEFT_DOMAIN:
        upper = -probe.event_time * (1.0 - 1e-12)
    if excess(upper) < 0.0:
        raise ImageError(f"|y| = {ny} exceeds the image of the map")
    s = brentq(excess, to_outer, upper, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return _backward(m, p, s)


def _minimize_over_sphere(objective, n: int, sampler: DirectionSampler) -> tuple[float, np.ndarray]:
    dirs = sphere_directions(n, sampler.count, sampler.seed)
    values = [objective(u) for u in dirs]
    best = int(np.argmin(values))
    f_best, u_best = values[best], dirs[best]
    if not sampler.refine or n == 1:
        return f_best, u_best
    half_width = angular_spacing(n, sampler.count)
    for v in tangent_basis(u_best):
        base = u_best

        def along(theta, base=base, v=v):
            return objective(math.cos(theta) * base + math.sin(theta) * v)

        res = minimize_scalar(along, bounds=(-half_width, half_width), method="bounded",
                              options={"xatol": 1e-9})
        if res.fun < f_best:
            f_best = float(res.fun)
            u_best = math.cos(res.x) * base + math.sin(res.x) * v
    return f_best, u_best


def gamma_r(m: ConjugacyMap, s: float) -> float:
    """Sampled infimum of the time to reach the level set from the preimage sphere of radius ``s + r``."""
    if s < 0.0:
        raise ValueError(f"s must be nonnegative, got {s}")
    if s == 0.0:
        return 0.0
    rad = s + m.radius

    def objective(u):
        return crossing_time_forward(m.frame, h_inverse(m, rad * u)).time

    return _minimize_over_sphere(objective, m.system.dimension, m.sampler)[0]


def tau_case2(m: ConjugacyMap, C: float, x) -> float:
    """Time coordinate of the bounded-domain variant with outer level ``C``."""
    sys = m.system
    if not C > m.epsilon:
        raise ValueError(f"C must exceed epsilon ({C} <= {m.epsilon})")
    x = sys.check_state(x)
    tau, _, v = level_coordinates(m.frame, x)
    if v > C:
        tau += _stretch(m, C, v)
    return tau


def outer_radius_R(m: ConjugacyMap, C: float) -> float:
    """Smallest image radius of the level set ``{V = C}``."""
    if not C > m.epsilon:
        raise ValueError(f"C must exceed epsilon ({C} <= {m.epsilon})")

    def objective(u):
        p = ray_level_point(m.frame, u, level=C)
        return crossing_time_forward(m.frame, p).time

    tau_min = _minimize_over_sphere(objective, m.system.dimension, m.sampler)[0]
    R = m.radius * math.exp(tau_min)
    if not R > m.radius:
        raise ValueError(f"outer radius {R} does not exceed r = {m.radius}")
    return R


# -- closed forms for the normalized field with V = |x|^2 / 2 and eps = 1/2 ----

def _check_r(r: float):
    if not r > 0.0:
        raise ValueError(f"r must be positive, got {r}")


def example_A_h(r: float, x) -> np.ndarray:
    _check_r(r)
    x = np.asarray(x, dtype=float)
    nx = float(np.linalg.norm(x))
    if nx == 0.0:
        return np.zeros_like(x)
    tau = nx - 1.0 if nx >= 1.0 else math.log(nx * nx)
    return r * math.exp(tau) * x / nx


def example_A_alpha(r: float, y) -> float:
    _check_r(r)
    ny = float(np.linalg.norm(np.asarray(y, dtype=float)))
    if ny >= r:
        return math.log(ny / r) + 1.0
    return math.sqrt(ny / r)


def example_A_inverse(r: float, y) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    ny = float(np.linalg.norm(y))
    if ny == 0.0:
        _check_r(r)
        return np.zeros_like(y)
    return example_A_alpha(r, y) * y / ny


def scalar_power_map(a: float, b: float, x: float) -> float:
    """Conjugates ``x' = -a x`` to ``y' = -b y``."""
    if not (a > 0.0 and b > 0.0):
        raise ValueError("a and b must be positive")
    if x == 0.0:
        return 0.0
    return math.copysign(abs(x) ** (b / a), x)
