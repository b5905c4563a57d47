"""Command-line front end: ``simulate``, ``conjugate``, ``verify`` and ``figdata``.

Values are resolved as defaults, then a JSON ``--config`` file, then flags.
Exit codes: 0 success, 1 failed verification suite, 2 usage or validation error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .conjugacy import (
    DirectionSampler,
    build_map,
    gamma_r,
    h_inverse,
    h_map,
    outer_radius_R,
    tau_case2,
)
from .flow import IntegratorConfig, flow, trajectory
from .levelset import level_coordinates
from .systems import BUILTIN_NAMES, make_builtin
from .verify import SUITES, figdata, run_suite

__all__ = ["RunConfig", "UsageError", "main", "parse_args", "run"]

FIGURES = (1, 3, 4, 5)
SEED_ENV = "SEMICONJ_SEED"

_FILE_KEYS = {
    "name", "dimension", "params", "x0", "t", "grid", "backward", "epsilon", "r", "C",
    "point", "rel_tol", "abs_tol", "numeric", "suite", "tol", "figure",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    command: str
    system: dict | None = None
    options: dict = field(default_factory=dict)
    out: str | None = None
    fmt: str = "json"


def _csv_vector(text, flag: str) -> list[float]:
    if isinstance(text, (list, tuple)):
        values = text
    else:
        values = [p for p in str(text).split(",") if p.strip() != ""]
    try:
        vec = [float(v) for v in values]
    except ValueError:
        raise UsageError(f"{flag}: malformed vector {text!r}") from None
    if not vec or not all(math.isfinite(v) for v in vec):
        raise UsageError(f"{flag}: malformed vector {text!r}")
    return vec


def _key_value(text: str) -> tuple[str, float]:
    key, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    try:
        return key.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"parameter {key!r} is not a number") from None


def _build_parser() -> _Parser:
    parser = _Parser(prog="semiconj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def system_flags(p):
        p.add_argument("--config", help="JSON file with keys name, dimension, params (and any flag)")
        p.add_argument("--system", choices=BUILTIN_NAMES)
        p.add_argument("--dimension", type=int)
        p.add_argument("--param", action="append", type=_key_value, metavar="KEY=VALUE")
        p.add_argument("--rel-tol", type=float)
        p.add_argument("--abs-tol", type=float)
        p.add_argument("--numeric", action="store_true", default=None,
                       help="integrate numerically even when a closed form exists")

    sim = sub.add_parser("simulate", help="flow a state forward or backward and write CSV")
    system_flags(sim)
    sim.add_argument("--x0")
    sim.add_argument("--t", type=float)
    sim.add_argument("--backward", action="store_true", default=None)
    sim.add_argument("--grid")
    sim.add_argument("--out")

    con = sub.add_parser("conjugate", help="evaluate the linearizing map at a point and print JSON")
    system_flags(con)
    con.add_argument("--epsilon", type=float)
    con.add_argument("--r", type=float)
    con.add_argument("--C", type=float)
    con.add_argument("--point")
    con.add_argument("--out")

    ver = sub.add_parser("verify", help="run a verification suite and write a JSON report")
    ver.add_argument("--suite", required=True, choices=SUITES)
    ver.add_argument("--tol", type=float)
    ver.add_argument("--out")

    fig = sub.add_parser("figdata", help="write the data behind a figure as CSV")
    fig.add_argument("--figure", required=True, type=int, choices=FIGURES)
    fig.add_argument("--out")
    return parser


def _load_file(path: str) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise UsageError(f"--config: cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: invalid JSON in {path}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise UsageError("--config: top level must be an object")
    unknown = set(data) - _FILE_KEYS
    if unknown:
        raise UsageError(f"--config: unknown key(s) {', '.join(sorted(unknown))}")
    return data


def parse_args(argv: list[str]) -> RunConfig:
    """Parse and validate a command line; raises ``UsageError`` naming the offending flag."""
    ns = _build_parser().parse_args(argv)
    if ns.command is None:
        raise UsageError("a command is required: simulate, conjugate, verify or figdata")
    flags = {k: v for k, v in vars(ns).items() if v is not None and k not in ("command", "config")}

    if ns.command == "verify":
        return RunConfig("verify", None, {"suite": ns.suite, "tol": ns.tol}, ns.out, "json")
    if ns.command == "figdata":
        return RunConfig("figdata", None, {"figure": ns.figure}, ns.out, "csv")

    merged = _load_file(ns.config) if getattr(ns, "config", None) else {}
    params = dict(merged.get("params") or {})
    if "system" in flags:
        merged["name"] = flags.pop("system")
    if "param" in flags:
        params.update(dict(flags.pop("param")))
    merged.update(flags)
    merged["params"] = params

    name = merged.get("name")
    if name is None:
        raise UsageError("--system is required (or 'name' in --config)")
    if name not in BUILTIN_NAMES:
        raise UsageError(f"--system: unknown system {name!r}")

    opts = {
        "rel_tol": merged.get("rel_tol"),
        "abs_tol": merged.get("abs_tol"),
        "numeric": bool(merged.get("numeric", False)),
    }
    if ns.command == "simulate":
        if "x0" not in merged:
            raise UsageError("--x0 is required")
        if "t" not in merged:
            raise UsageError("--t is required")
        opts["x0"] = _csv_vector(merged["x0"], "--x0")
        opts["t"] = float(merged["t"])
        opts["backward"] = bool(merged.get("backward", False))
        opts["grid"] = _csv_vector(merged["grid"], "--grid") if "grid" in merged else None
        dim_source = opts["x0"]
        fmt = "csv"
    else:
        for key in ("epsilon", "r", "point"):
            if key not in merged:
                raise UsageError(f"--{key} is required")
        opts["epsilon"] = float(merged["epsilon"])
        opts["r"] = float(merged["r"])
        opts["C"] = None if merged.get("C") is None else float(merged["C"])
        opts["point"] = _csv_vector(merged["point"], "--point")
        dim_source = opts["point"]
        fmt = "json"

    dimension = merged.get("dimension", len(dim_source))
    if dimension != len(dim_source):
        raise UsageError(f"--dimension {dimension} does not match a vector of length {len(dim_source)}")
    system = {"name": name, "dimension": int(dimension), "params": params}
    return RunConfig(ns.command, system, opts, merged.get("out"), fmt)


def _seed() -> int:
    raw = os.environ.get(SEED_ENV, "0")
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _num(v: float) -> str:
    return format(float(v), ".17g")


def _integrator(opts: dict) -> IntegratorConfig:
    kwargs = {k: opts[k] for k in ("rel_tol", "abs_tol") if opts.get(k) is not None}
    return IntegratorConfig(use_closed_form=not opts["numeric"], **kwargs)


def _simulate(cfg: RunConfig) -> str:
    sys_ = make_builtin(cfg.system["name"], cfg.system["dimension"], cfg.system["params"])
    opts = cfg.options
    integ = _integrator(opts)
    x0 = np.array(opts["x0"])
    sign = -1.0 if opts["backward"] else 1.0
    t = sign * abs(opts["t"]) if opts["backward"] else opts["t"]

    if opts["grid"] is None:
        res = flow(sys_, x0, t, integ)
        rows = [(0.0, sys_.check_state(x0)), (res.time_reached, res.state)]
    elif sign > 0:
        rows = trajectory(sys_, x0, opts["grid"], integ)
    else:
        rows = [(-s if s else 0.0, flow(sys_, x0, -s, integ).state) for s in opts["grid"]]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", *[f"x{i + 1}" for i in range(sys_.dimension)], "V"])
    for s, x in rows:
        v = 0.0 if sys_.distance(x) == 0.0 else sys_.lyapunov(x)
        writer.writerow([_num(s), *[_num(c) for c in x], _num(v)])
    return buf.getvalue()


def _conjugate(cfg: RunConfig) -> str:
    sys_ = make_builtin(cfg.system["name"], cfg.system["dimension"], cfg.system["params"])
    opts = cfg.options
    integ = _integrator(opts)
    seed = _seed()
    m = build_map(sys_, opts["epsilon"], opts["r"], integ, sampler=DirectionSampler(seed=seed), C=opts["C"])
    x = sys_.check_state(opts["point"])
    y = h_map(m, x)
    back = h_inverse(m, y)
    report = {
        "system": cfg.system,
        "epsilon": m.epsilon,
        "r": m.radius,
        "C": m.outer_level,
        "point": x.tolist(),
        "h": y.tolist(),
        "h_inverse_of_h": back.tolist(),
        "roundtrip_error": float(np.linalg.norm(back - x)),
        "config": {"integrator": integ.as_dict(), "sampler_seed": seed,
                   "sampler_directions": m.sampler.count},
    }
    if sys_.distance(x) > 0.0:
        tau, rho, v = level_coordinates(m.frame, x)
        report["tau_prime"] = tau
        report["rho_prime"] = rho.tolist()
        report["V"] = v
    ny = float(np.linalg.norm(y))
    if ny >= m.radius:
        s = ny - m.radius
        report["gamma"] = {"s": s, "gamma_r": gamma_r(m, s), "closed_form_log": math.log(ny / m.radius)}
    if m.outer_level is not None:
        if sys_.distance(x) > 0.0:
            report["tau_case2"] = tau_case2(m, m.outer_level, x)
        report["outer_radius_R"] = outer_radius_R(m, m.outer_level)
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def _write(text: str, out: str | None):
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def run(cfg: RunConfig) -> int:
    if cfg.command == "simulate":
        _write(_simulate(cfg), cfg.out)
        return 0
    if cfg.command == "conjugate":
        _write(_conjugate(cfg), cfg.out)
        return 0
    if cfg.command == "verify":
        report = run_suite(cfg.options["suite"], cfg.options["tol"], seed=_seed())
        _write(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", cfg.out)
        return 0 if report.passed else 1
    if cfg.command == "figdata":
        _write(figdata(cfg.options["figure"]).to_csv(), cfg.out)
        return 0
    raise UsageError(f"unknown command {cfg.command!r}")


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        return run(parse_args(argv))
    except UsageError as exc:
        print(f"semiconj: usage error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"semiconj: error: {exc}", file=sys.stderr)
        return 2
