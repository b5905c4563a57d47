"""Practical global linearization of asymptotically stable semiflows.

Simulate finite-time and asymptotically stable semiflows, build the
Lyapunov-based homeomorphism that conjugates them to ``y' = -y`` outside a
ball, and check the conjugacy numerically.
"""
from .conjugacy import (
    ConjugacyMap,
    DirectionSampler,
    build_map,
    gamma_r,
    h_inverse,
    h_map,
    outer_radius_R,
    scalar_power_map,
    tau_case2,
)
from .flow import FlowResult, IntegratorConfig, Status, closed_form_flow, flow, trajectory
from .levelset import (
    LevelFrame,
    crossing_time_backward,
    crossing_time_forward,
    make_frame,
    ray_level_point,
    rho_prime,
    sphere_projection,
    tau_prime,
)
from .systems import SystemSpec, eval_field, eval_lyapunov, make_builtin, validate_system
from .verify import ResidualReport, figdata, run_suite

__version__ = "0.1.0"
