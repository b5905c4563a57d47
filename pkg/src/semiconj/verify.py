"""Named verification suites and the data behind the published figures.

Each suite samples its inputs from a fixed seed, evaluates a residual per
case and reports the maximum. Composite suites (``roundtrip``) check parts
with different tolerances; their top-level residual is the largest ratio
``residual / tolerance`` over the parts, compared against 1.
"""
from __future__ import annotations

import csv
import inspect
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .conjugacy import (
    ConjugacyMap,
    build_map,
    gamma_r,
    h_inverse,
    h_map,
    outer_radius_R,
    scalar_power_map,
)
from .flow import IntegratorConfig, Status, flow, trajectory
from .levelset import level_coordinates
from .systems import make_builtin

__all__ = [
    "DEFAULT_TOLERANCES",
    "FigureData",
    "ResidualReport",
    "SUITES",
    "figdata",
    "run_suite",
]

DEFAULT_TOLERANCES = {
    "conjugacy-closed": 1e-9,
    "conjugacy-numeric": 1e-5,
    "semigroup": 1e-5,
    "roundtrip": 1.0,
    "gamma": 1e-6,
    "case2": 1e-6,
    "scalar": 1e-12,
    "reverse": 1e-9,
    "interior": 1e-9,
}
SUITES = tuple(DEFAULT_TOLERANCES)

ROUNDTRIP_CLOSED_TOL = 1e-10
ROUNDTRIP_NUMERIC_TOL = 1e-6

_NUMERIC = IntegratorConfig(use_closed_form=False)


@dataclass
class ResidualReport:
    suite: str
    cases_run: int
    max_residual: float
    tolerance: float
    verdict: str
    worst_case: str
    config: dict = field(default_factory=dict)
    parts: list["ResidualReport"] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return asdict(self)


class _Worst:
    """Running maximum with a deterministic tie-break on the case description."""

    def __init__(self):
        self.value = 0.0
        self.case = ""
        self.count = 0

    def add(self, residual: float, case: str):
        self.count += 1
        if not math.isfinite(residual):
            residual = math.inf
        if residual > self.value or (residual == self.value and self.case and case < self.case):
            self.value, self.case = residual, case
        elif not self.case:
            self.case = case

    def report(self, suite: str, tol: float, config: dict) -> ResidualReport:
        verdict = "pass" if self.value <= tol else "fail"
        return ResidualReport(suite, self.count, self.value, tol, verdict, self.case, config)


def _fmt(v) -> str:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    return "(" + ", ".join(f"{c:.6g}" for c in arr) + ")"


def _norm(v) -> float:
    v = np.asarray(v, dtype=float)
    return math.sqrt(float(v @ v))


# -- conjugacy outside the ball ------------------------------------------------

def _conjugacy_samples(n: int, r: float, rng: np.random.Generator):
    """100 image points with |y| in [r, 5r]: stratified as radii x directions."""
    if n == 1:
        radii = rng.uniform(r, 5 * r, 50)
        dirs = np.array([[-1.0], [1.0]])
    else:
        radii = rng.uniform(r, 5 * r, 10)
        g = rng.standard_normal((10, n))
        dirs = g / np.linalg.norm(g, axis=1, keepdims=True)
    return radii, dirs


def conjugacy_residuals(numeric: bool, *, seed: int = 0, t_points: int = 20):
    """Yield ``(residual, case)`` for h(phi_t(h^-1(y))) against exp(-t) y on the normalized field."""
    rng = np.random.default_rng(seed)
    for n in (1, 2, 3):
        sys = make_builtin("normalized", n)
        for r in (0.5, 1.0, 2.0):
            closed_map = build_map(sys, 0.5, r)
            m = build_map(sys, 0.5, r, _NUMERIC) if numeric else closed_map
            radii, dirs = _conjugacy_samples(n, r, rng)
            for rad in radii:
                window = gamma_r(closed_map, rad - r)
                times = np.linspace(0.0, window, t_points)
                for u in dirs:
                    y = rad * u
                    x = h_inverse(m, y)
                    for t, xt in trajectory(sys, x, times, m.config):
                        res = _norm(h_map(m, xt) - math.exp(-t) * y)
                        yield res, f"n={n} r={r} y={_fmt(y)} t={t:.6g}"


def _suite_conjugacy(numeric: bool, seed: int) -> _Worst:
    w = _Worst()
    for res, case in conjugacy_residuals(numeric, seed=seed):
        w.add(res, case)
    return w


# -- semiflow axioms -------------------------------------------------------------

def semigroup_residuals(*, seed: int = 0, samples: int = 200):
    """Semigroup and identity residuals on the x0-plane field, numeric path only.

    Starting points keep |x1| >= 0.2 and s, t <= 1, which bounds how stiff the
    field becomes once the second coordinate collapses.
    """
    sys = make_builtin("x0-plane", 2)
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        x = np.array([rng.choice([-1.0, 1.0]) * rng.uniform(0.2, 1.5), rng.uniform(-1.5, 1.5)])
        s, t = rng.uniform(0.0, 1.0, 2)
        identity = flow(sys, x, 0.0, _NUMERIC).state
        res = 0.0 if np.array_equal(identity, x) else math.inf
        a = flow(sys, flow(sys, x, s, _NUMERIC).state, t, _NUMERIC).state
        b = flow(sys, x, s + t, _NUMERIC).state
        res = max(res, _norm(a - b))
        yield res, f"x={_fmt(x)} s={s:.6g} t={t:.6g}"


# -- round trip ----------------------------------------------------------------

def roundtrip_residuals(numeric: bool, *, seed: int = 0, samples: int = 100):
    rng = np.random.default_rng(seed)
    if numeric:
        m = build_map(make_builtin("x0-plane", 2), 0.25, 1.0)
        lo, hi = 0.1, 2.0
    else:
        m = build_map(make_builtin("normalized", 2), 0.5, 1.0)
        lo, hi = 0.05, 5.0
    for _ in range(samples):
        angle = rng.uniform(0.0, 2.0 * math.pi)
        x = rng.uniform(lo, hi) * np.array([math.cos(angle), math.sin(angle)])
        res = _norm(h_inverse(m, h_map(m, x)) - x)
        yield res, f"x={_fmt(x)}"


def _suite_roundtrip(seed: int, config: dict) -> ResidualReport:
    parts = []
    for numeric, tol, label in (
        (False, ROUNDTRIP_CLOSED_TOL, "roundtrip-closed"),
        (True, ROUNDTRIP_NUMERIC_TOL, "roundtrip-numeric"),
    ):
        w = _Worst()
        for res, case in roundtrip_residuals(numeric, seed=seed):
            w.add(res, case)
        parts.append(w.report(label, tol, {}))
    ratio = max(p.max_residual / p.tolerance for p in parts)
    worst = max(parts, key=lambda p: p.max_residual / p.tolerance)
    report = ResidualReport(
        "roundtrip", sum(p.cases_run for p in parts), ratio, 1.0,
        "pass" if ratio <= 1.0 else "fail", f"{worst.suite}: {worst.worst_case}", config, parts,
    )
    return report


# -- gamma ---------------------------------------------------------------------

GAMMA_S_GRID = tuple(round(0.1 * k, 10) for k in range(1, 101))


def gamma_residuals(*, r: float = 1.0, s_grid=GAMMA_S_GRID):
    """|gamma_r(s) - log((s + r) / r)| on the normalized plane; monotonicity failures give inf."""
    m = build_map(make_builtin("normalized", 2), 0.5, r)
    if gamma_r(m, 0.0) != 0.0:
        yield math.inf, "s=0"
    prev = 0.0
    for s in s_grid:
        g = gamma_r(m, s)
        res = abs(g - math.log((s + r) / r))
        if not g > prev:
            res = math.inf
        prev = g
        yield res, f"r={r} s={s:.6g}"


# -- bounded domain ------------------------------------------------------------

CASE2_LEVELS = (0.6, 1.0, 1.5)


def case2_residuals():
    sys = make_builtin("normalized-bounded", 2, {"rho_dom": 2.0})
    for r in (1.0, 2.0):
        m = build_map(sys, 0.5, r)
        for C in CASE2_LEVELS:
            R = outer_radius_R(m, C)
            res = abs(R - r * math.exp(math.sqrt(2.0 * C) - 1.0))
            if not R > r:
                res = math.inf
            yield res, f"r={r} C={C}"


# -- scalar conjugacy ----------------------------------------------------------

def scalar_residuals(*, seed: int = 0, samples: int = 1000):
    """Scaled residual |h(e^{-at} x) - e^{-bt} h(x)| / max(1, |e^{-bt} h(x)|)."""
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        a, b = rng.uniform(0.1, 10.0, 2)
        x = rng.uniform(-3.0, 3.0)
        t = rng.uniform(0.0, 5.0)
        lhs = scalar_power_map(a, b, math.exp(-a * t) * x)
        rhs = math.exp(-b * t) * scalar_power_map(a, b, x)
        yield abs(lhs - rhs) / max(1.0, abs(rhs)), f"a={a:.6g} b={b:.6g} x={x:.6g} t={t:.6g}"


# -- reverse direction and the interior branch ---------------------------------

def _normalized_closed_flow(x, t):
    nx = _norm(x)
    return np.zeros_like(x) if t >= nx else (1.0 - t / nx) * np.asarray(x, dtype=float)


def reverse_residuals(*, seed: int = 0, samples: int = 50, t_points: int = 20):
    """h^-1(exp(-t) h(x)) against the finite-time flow for |x| >= 1 and t <= tau'(x)."""
    rng = np.random.default_rng(seed)
    sys = make_builtin("normalized", 2)
    for r in (0.5, 1.0, 2.0):
        m = build_map(sys, 0.5, r)
        for _ in range(samples):
            angle = rng.uniform(0.0, 2.0 * math.pi)
            x = rng.uniform(1.0, 5.0) * np.array([math.cos(angle), math.sin(angle)])
            hx = h_map(m, x)
            tau = level_coordinates(m.frame, x)[0]
            for t in np.linspace(0.0, tau, t_points):
                res = _norm(h_inverse(m, math.exp(-t) * hx) - _normalized_closed_flow(x, t))
                yield res, f"r={r} x={_fmt(x)} t={t:.6g}"


def interior_residuals(*, seed: int = 0, t_points: int = 20):
    """h(phi_t(h^-1(y))) for |y| = theta r < r against r (sqrt(theta) - t)^2 y / |y|."""
    rng = np.random.default_rng(seed)
    sys = make_builtin("normalized", 2)
    thetas = [round(0.1 * k, 10) for k in range(1, 10)]
    for r in (0.5, 1.0, 2.0):
        m = build_map(sys, 0.5, r)
        for theta in thetas:
            for angle in rng.uniform(0.0, 2.0 * math.pi, 4):
                u = np.array([math.cos(angle), math.sin(angle)])
                y = theta * r * u
                x = h_inverse(m, y)
                for t in np.linspace(0.0, math.sqrt(theta), t_points):
                    got = h_map(m, flow(sys, x, t, m.config).state)
                    want = r * (math.sqrt(theta) - t) ** 2 * u
                    yield _norm(got - want), f"r={r} theta={theta} y={_fmt(y)} t={t:.6g}"


_SIMPLE: dict[str, Callable] = {
    "semigroup": semigroup_residuals,
    "gamma": gamma_residuals,
    "case2": case2_residuals,
    "scalar": scalar_residuals,
    "reverse": reverse_residuals,
    "interior": interior_residuals,
}


def run_suite(name: str, tol: float | None = None, *, seed: int = 0) -> ResidualReport:
    """Run a named suite; ``tol`` overrides its default tolerance."""
    if name not in DEFAULT_TOLERANCES:
        raise ValueError(f"unknown suite {name!r}; expected one of {', '.join(SUITES)}")
    tolerance = DEFAULT_TOLERANCES[name] if tol is None else float(tol)
    config = {
        "tolerance": tolerance,
        "seed": seed,
        "closed_integrator": IntegratorConfig().as_dict(),
        "numeric_integrator": _NUMERIC.as_dict(),
    }
    if name == "roundtrip":
        config["part_tolerances"] = {"closed": ROUNDTRIP_CLOSED_TOL, "numeric": ROUNDTRIP_NUMERIC_TOL}
        report = _suite_roundtrip(seed, config)
        if tol is not None:
            report.tolerance = tolerance
            report.verdict = "pass" if report.max_residual <= tolerance else "fail"
        return report
    if name in ("conjugacy-closed", "conjugacy-numeric"):
        w = _suite_conjugacy(name.endswith("numeric"), seed)
    else:
        fn = _SIMPLE[name]
        kwargs = {"seed": seed} if "seed" in inspect.signature(fn).parameters else {}
        w = _Worst()
        for res, case in fn(**kwargs):
            w.add(res, case)
    return w.report(name, tolerance, config)


# -- figure data ---------------------------------------------------------------

@dataclass
class FigureData:
    figure: int
    columns: tuple[str, ...]
    rows: np.ndarray
    meta: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format(float(v), ".17g") for v in row])
        return buf.getvalue()


FIG_POINTS = 400


def _grid_with(lo: float, hi: float, anchors) -> np.ndarray:
    base = np.linspace(lo, hi, FIG_POINTS - len(anchors))
    return np.unique(np.concatenate([base, np.asarray(anchors, dtype=float)]))


def fig4_closed_form(t: float) -> float:
    """|h(phi_t(h^-1(y)))| for r = 1 and |y| = 2."""
    ln2 = math.log(2.0)
    if t <= ln2:
        return 2.0 * math.exp(-t)
    if t <= ln2 + 1.0:
        return (1.0 - (t - ln2)) ** 2
    return 0.0


def fig5_closed_form(t: float) -> float:
    """|h^-1(exp(-t) h(x))| for r = 1 and |x| = 2."""
    if t <= 1.0:
        return 2.0 - t
    return math.exp(-(t - 1.0) / 2.0)


def _fig1() -> FigureData:
    sys = make_builtin("x0-plane", 2)
    times = np.linspace(0.0, 3.0, FIG_POINTS)
    starts = [(a, b) for a in np.linspace(-1.0, 1.0, 5) for b in np.linspace(-1.0, 1.0, 5)]
    rows = []
    arrivals = {}
    for k, start in enumerate(starts):
        for t, x in trajectory(sys, start, times, _NUMERIC):
            rows.append((k, t, x[0], x[1], float(x @ x)))
        res = flow(sys, start, times[-1], _NUMERIC)
        if res.status is Status.REACHED_EQUILIBRIUM:
            arrivals[k] = res.event_time
    meta = {"starts": [list(map(float, s)) for s in starts], "arrival_times": arrivals}
    return FigureData(1, ("start", "t", "x1", "x2", "V"), np.array(rows), meta)


def _fig3() -> FigureData:
    m = build_map(make_builtin("normalized", 2), 0.5, 1.0)
    norms = _grid_with(3.0 / FIG_POINTS, 3.0, [1.0])
    rows = []
    for s in norms:
        tau = level_coordinates(m.frame, np.array([s, 0.0]))[0]
        rows.append((s, tau, m.radius * math.exp(tau)))
    return FigureData(3, ("norm_x", "tau_prime", "r_exp_tau"), np.array(rows), {"r": 1.0, "epsilon": 0.5})


def _fig4() -> FigureData:
    sys = make_builtin("normalized", 2)
    m = build_map(sys, 0.5, 1.0)
    ln2 = math.log(2.0)
    times = _grid_with(0.0, ln2 + 1.5, [ln2, ln2 + 1.0])
    y = np.array([2.0, 0.0])
    x = h_inverse(m, y)
    rows = [(t, _norm(h_map(m, xt)), fig4_closed_form(t)) for t, xt in trajectory(sys, x, times)]
    arrival = flow(sys, x, times[-1]).event_time
    meta = {"r": 1.0, "y_norm": 2.0, "breakpoints": [ln2, ln2 + 1.0], "zero_hit_time": arrival}
    return FigureData(4, ("t", "norm", "closed_form"), np.array(rows), meta)


def _fig5() -> FigureData:
    m = build_map(make_builtin("normalized", 2), 0.5, 1.0)
    times = _grid_with(0.0, 10.0, [1.0])
    x = np.array([2.0, 0.0])
    hx = h_map(m, x)
    rows = [(t, _norm(h_inverse(m, math.exp(-t) * hx)), fig5_closed_form(t)) for t in times]
    return FigureData(5, ("t", "norm", "closed_form"), np.array(rows), {"r": 1.0, "x_norm": 2.0, "breakpoints": [1.0]})


_FIGURES = {1: _fig1, 3: _fig3, 4: _fig4, 5: _fig5}


def figdata(figure_id: int) -> FigureData:
    if figure_id not in _FIGURES:
        raise ValueError(f"unknown figure {figure_id!r}; expected one of {sorted(_FIGURES)}")
    return _FIGURES[figure_id]()
