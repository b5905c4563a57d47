"""Built-in vector fields, their equilibria, domains and Lyapunov functions.

Every field here is single-valued and locally Lipschitz away from its
equilibrium. At the equilibrium the field is set to zero, which is the
selection forced by stability of the set-valued regularization there.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "BUILTIN_NAMES",
    "DomainError",
    "SystemSpec",
    "ValidationReport",
    "ValidationWarning",
    "eval_field",
    "eval_lyapunov",
    "make_builtin",
    "validate_system",
]

BUILTIN_NAMES = ("normalized", "normalized-bounded", "linear-scaled", "sqrt-scalar", "x0-plane")

_PARAMS = {
    "normalized": {},
    "normalized-bounded": {"rho_dom": 2.0},
    "linear-scaled": {"a": 1.0},
    "sqrt-scalar": {},
    "x0-plane": {},
}


class DomainError(ValueError):
    """A state lies outside the domain of the system."""


class ValidationWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """An autonomous vector field with an asymptotically stable equilibrium.

    ``domain_radius`` is ``None`` for the full space, otherwise the domain is
    the open ball of that radius around the equilibrium. ``arrival_time``,
    when given, returns the exact finite arrival time at the equilibrium
    (``math.inf`` if the approach is only asymptotic).
    """

    name: str
    dimension: int
    field: Callable[[np.ndarray], np.ndarray]
    equilibrium: np.ndarray
    lyapunov: Callable[[np.ndarray], float]
    lyapunov_grad: Callable[[np.ndarray], np.ndarray] | None = None
    closed_flow: Callable[[np.ndarray, float], np.ndarray] | None = None
    arrival_time: Callable[[np.ndarray], float] | None = None
    domain_radius: float | None = None
    backward_complete: bool = True
    params: Mapping[str, float] = field(default_factory=dict)

    def distance(self, x: np.ndarray) -> float:
        d = x - self.equilibrium
        return math.hypot(*d)

    def in_domain(self, x: np.ndarray) -> bool:
        if self.domain_radius is None:
            return True
        return self.distance(x) < self.domain_radius

    def check_state(self, x) -> np.ndarray:
        """Return ``x`` as a float vector, raising if it is malformed or outside the domain."""
        arr = np.array(x, dtype=float).reshape(-1)
        if arr.shape != (self.dimension,):
            raise ValueError(
                f"state has dimension {arr.size}, system {self.name!r} has dimension {self.dimension}"
            )
        if not np.isfinite(arr).all():
            raise ValueError("state contains non-finite entries")
        if not self.in_domain(arr):
            raise DomainError(
                f"state {arr.tolist()} lies outside the open ball of radius {self.domain_radius}"
            )
        return arr


def eval_field(sys: SystemSpec, x) -> np.ndarray:
    x = sys.check_state(x)
    if sys.distance(x) == 0.0:
        return np.zeros(sys.dimension)
    return sys.field(x)


def eval_lyapunov(sys: SystemSpec, x) -> float:
    x = sys.check_state(x)
    if sys.distance(x) == 0.0:
        return 0.0
    return float(sys.lyapunov(x))


# -- field definitions ---------------------------------------------------------

def _norm(x: np.ndarray) -> float:
    return math.hypot(*x)


def _half_square(x: np.ndarray) -> float:
    return 0.5 * float(x @ x)


def _identity_grad(x: np.ndarray) -> np.ndarray:
    return np.array(x, dtype=float)


def _normalized_field(x: np.ndarray) -> np.ndarray:
    r = _norm(x)
    if r == 0.0:
        return np.zeros_like(x)
    return -x / r


def _normalized_flow(x: np.ndarray, t: float) -> np.ndarray:
    r = _norm(x)
    if r == 0.0 or t >= r:
        return np.zeros_like(x)
    return (1.0 - t / r) * x


def _linear_parts(a: float):
    def field_(x):
        return -a * x

    def flow_(x, t):
        return math.exp(-a * t) * x

    return field_, flow_


def _sqrt_field(x: np.ndarray) -> np.ndarray:
    return -np.sign(x) * np.sqrt(np.abs(x))


def _sqrt_flow(x: np.ndarray, t: float) -> np.ndarray:
    s = abs(float(x[0]))
    q = math.sqrt(s) - 0.5 * t
    if s == 0.0 or q <= 0.0:
        return np.zeros(1)
    return np.array([math.copysign(q * q, x[0])])


def _x0_field(x: np.ndarray) -> np.ndarray:
    x1, x2 = float(x[0]), float(x[1])
    den = abs(x2) + x1 * x1
    if den == 0.0:
        return np.zeros(2)
    return np.array([-x1, -x2 / den])


def _x0_lyapunov(x: np.ndarray) -> float:
    return float(x @ x)


def _x0_grad(x: np.ndarray) -> np.ndarray:
    return 2.0 * np.asarray(x, dtype=float)


def make_builtin(name: str, n: int, params: Mapping[str, float] | None = None) -> SystemSpec:
    """Construct one of the built-in systems listed in ``BUILTIN_NAMES``."""
    if name not in _PARAMS:
        raise ValueError(f"unknown system {name!r}; expected one of {', '.join(BUILTIN_NAMES)}")
    if not isinstance(n, (int, np.integer)) or isinstance(n, bool) or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    n = int(n)
    given = dict(params or {})
    unknown = set(given) - set(_PARAMS[name])
    if unknown:
        raise ValueError(f"unknown parameter(s) for {name!r}: {', '.join(sorted(unknown))}")
    p = {**_PARAMS[name], **{k: float(v) for k, v in given.items()}}
    for key, value in p.items():
        if not (value > 0.0 and math.isfinite(value)):
            raise ValueError(f"parameter {key} must be positive and finite, got {value}")

    origin = np.zeros(n)
    origin.setflags(write=False)
    common = dict(name=name, dimension=n, equilibrium=origin, params=p)

    if name == "normalized":
        return SystemSpec(
            field=_normalized_field, lyapunov=_half_square, lyapunov_grad=_identity_grad,
            closed_flow=_normalized_flow, arrival_time=_norm, **common,
        )
    if name == "normalized-bounded":
        return SystemSpec(
            field=_normalized_field, lyapunov=_half_square, lyapunov_grad=_identity_grad,
            closed_flow=_normalized_flow, arrival_time=_norm,
            domain_radius=p["rho_dom"], backward_complete=False, **common,
        )
    if name == "linear-scaled":
        field_, flow_ = _linear_parts(p["a"])
        return SystemSpec(
            field=field_, lyapunov=_half_square, lyapunov_grad=_identity_grad,
            closed_flow=flow_, arrival_time=lambda x: math.inf, **common,
        )
    if name == "sqrt-scalar":
        if n != 1:
            raise ValueError(f"dimension mismatch: sqrt-scalar requires n = 1, got {n}")
        return SystemSpec(
            field=_sqrt_field, lyapunov=_half_square, lyapunov_grad=_identity_grad,
            closed_flow=_sqrt_flow, arrival_time=lambda x: 2.0 * math.sqrt(abs(float(x[0]))),
            **common,
        )
    # x0-plane
    if n != 2:
        raise ValueError(f"dimension mismatch: x0-plane requires n = 2, got {n}")
    return SystemSpec(field=_x0_field, lyapunov=_x0_lyapunov, lyapunov_grad=_x0_grad, **common)


# -- validation ----------------------------------------------------------------

@dataclass
class ValidationReport:
    system: str
    positive_definite: bool
    decreasing: bool
    lipschitz_ok: bool
    max_lipschitz_growth: float
    samples: int


def _probe_points(sys: SystemSpec, rng: np.random.Generator, per_decade: int):
    n = sys.dimension
    scales = [10.0**k for k in (-2, -1, 0, 1)]
    if sys.domain_radius is not None:
        scales = [s for s in scales if s < 0.9 * sys.domain_radius]
    for scale in scales:
        for _ in range(per_decade):
            u = rng.standard_normal(n)
            u /= _norm(u)
            yield scale, sys.equilibrium + scale * rng.uniform(0.5, 1.0) * u


def validate_system(sys: SystemSpec, *, per_decade: int = 64, seed: int = 0) -> ValidationReport:
    """Probe positivity and decrease of V and local Lipschitz continuity of the field.

    Positivity or decrease failures raise ``ValueError``. A suspicious
    Lipschitz probe only emits a ``ValidationWarning``.
    """
    rng = np.random.default_rng(seed)
    if eval_lyapunov(sys, sys.equilibrium) != 0.0:
        raise ValueError("Lyapunov function does not vanish at the equilibrium")

    worst_growth = 0.0
    count = 0
    for scale, x in _probe_points(sys, rng, per_decade):
        count += 1
        v = sys.lyapunov(x)
        if not v > 0.0:
            raise ValueError(f"Lyapunov function not positive at {x.tolist()}")
        f = sys.field(x)
        if sys.lyapunov_grad is not None:
            vdot = float(sys.lyapunov_grad(x) @ f)
        else:
            h = 1e-7 * scale
            vdot = (sys.lyapunov(x + h * f) - v) / h
        if not vdot < 0.0:
            raise ValueError(f"Lyapunov function not decreasing along the field at {x.tolist()}")

        # difference quotients at two separations; a Lipschitz field keeps them comparable
        direction = rng.standard_normal(sys.dimension)
        direction /= _norm(direction)
        quotients = []
        for delta in (1e-4 * scale, 1e-6 * scale):
            y = x + delta * direction
            quotients.append(_norm(sys.field(y) - f) / delta)
        growth = quotients[1] / max(quotients[0], 1e-300) if quotients[1] > 0 else 0.0
        worst_growth = max(worst_growth, growth)

    lipschitz_ok = worst_growth < 10.0
    if not lipschitz_ok:
        warnings.warn(
            f"{sys.name}: difference quotients grow by {worst_growth:.3g} under refinement; "
            "field may not be locally Lipschitz",
            ValidationWarning,
            stacklevel=2,
        )
    return ValidationReport(sys.name, True, True, lipschitz_ok, worst_growth, count)
