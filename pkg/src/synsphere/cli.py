"""Command-line front end.

    synsphere <mode> --config <path> [--out <path>] [--seed <u64>]

Modes: sphere-sim, quad-sim, gains, verify, geodesic-check. The config is a
JSON object; see ``demos/configs`` for one file per mode. Exit codes: 0 on
success, 2 on a configuration error, 3 when a verify-mode property fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import potential as pot
from . import quad, stabilizer
from .errors import SynsphereError
from .geometry import is_rotation
from .hybrid import SolverConfig
from .io import export_arc
from .riccati import synthesize_gains

MODES = ("sphere-sim", "quad-sim", "gains", "verify", "geodesic-check")
EXIT_OK, EXIT_CONFIG, EXIT_VERIFY = 0, 2, 3

# fixture matrices of the position-loop design
DEFAULT_H = np.diag([500.0, 500.0, 500.0, 100.0, 100.0, 100.0])
DEFAULT_QHAT0 = np.diag([10.0, 10.0, 100.0, 100.0, 100.0, 1.0])
DEFAULT_RHAT = 10.0 * np.eye(3)


class ConfigError(SynsphereError, ValueError):
    """A config field is missing, malformed or out of range; the message names its path."""


@dataclass
class ScenarioConfig:
    mode: str
    potential: pot.PotentialConfig
    solver: SolverConfig
    seed: int = 0
    output: str | None = None
    initial: dict = field(default_factory=dict)
    quad: dict = field(default_factory=dict)
    verify: dict = field(default_factory=dict)
    geodesic: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, compare=False)


def _get(d: dict, key: str, path: str, kind, default=None, required=False):
    if key not in d:
        if required:
            raise ConfigError(f"{path}.{key}: required field is missing")
        return default
    v = d[key]
    try:
        if kind is float:
            if isinstance(v, bool):
                raise TypeError
            return float(v)
        if kind is int:
            if isinstance(v, bool) or int(v) != v:
                raise TypeError
            return int(v)
        if kind == "vector":
            a = np.asarray(v, dtype=float)
            if a.ndim != 1:
                raise TypeError
            return a
        if kind == "matrix":
            a = np.asarray(v, dtype=float)
            if a.ndim != 2:
                raise TypeError
            return a
        if kind is str:
            if not isinstance(v, str):
                raise TypeError
            return v
    except (TypeError, ValueError):
        pass
    else:
        return v
    raise ConfigError(f"{path}.{key}: expected {kind if isinstance(kind, str) else kind.__name__}, got {v!r}")


def _section(d: dict, key: str) -> dict:
    v = d.get(key, {})
    if not isinstance(v, dict):
        raise ConfigError(f"{key}: expected an object")
    return v


def parse_config(raw: dict, mode: str | None = None, seed: int | None = None) -> ScenarioConfig:
    """Validate a raw config dict; errors name the offending field path."""
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    mode = mode or raw.get("mode")
    if mode not in MODES:
        raise ConfigError(f"mode: must be one of {', '.join(MODES)}, got {mode!r}")

    pd = _section(raw, "potential")
    default_r = [0.0, 0.0, -1.0] if mode in ("quad-sim", "gains") else [0.0, 0.0, 1.0]
    try:
        cfg = pot.PotentialConfig(
            r=_get(pd, "r", "potential", "vector", np.asarray(default_r)),
            k=_get(pd, "k", "potential", float, 1.0),
            gamma=_get(pd, "gamma", "potential", float, -0.5),
            delta=_get(pd, "delta", "potential", float, 0.1),
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(f"potential.{e}") from e

    sd = _section(raw, "solver")
    default_T = 10.0 if mode == "quad-sim" else 100.0
    try:
        solver = SolverConfig(
            step=_get(sd, "step", "solver", float, 1e-3),
            event_tol=_get(sd, "event_tol", "solver", float, 1e-9),
            max_time=_get(sd, "max_time", "solver", float, default_T),
            max_jumps=_get(sd, "max_jumps", "solver", int, 10),
            margin_tol=_get(sd, "margin_tol", "solver", float, 0.0),
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from e

    if seed is None:
        seed = _get(raw, "seed", "config", int, 0)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed: must be an unsigned 64-bit integer")
    out = raw.get("output")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output: expected a path string")
    return ScenarioConfig(mode=mode, potential=cfg, solver=solver, seed=int(seed), output=out,
                          initial=_section(raw, "initial"), quad=_section(raw, "quad"),
                          verify=_section(raw, "verify"), geodesic=_section(raw, "geodesic"), raw=raw)


def load_config(path, mode: str | None = None, seed: int | None = None) -> ScenarioConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except OSError as e:
        raise ConfigError(f"config: cannot read {path}: {e.strerror}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config: invalid JSON at line {e.lineno}: {e.msg}") from e
    return parse_config(raw, mode, seed)


def config_echo(sc: ScenarioConfig) -> dict:
    """Serializable form of a validated config; parse_config(echo) reproduces it."""
    return {
        "mode": sc.mode, "seed": sc.seed, "output": sc.output,
        "potential": sc.potential.to_dict(), "solver": sc.solver.to_dict(),
        "initial": sc.initial, "quad": sc.quad, "verify": sc.verify, "geodesic": sc.geodesic,
    }


def _versions() -> dict:
    from . import __version__

    return {"synsphere": __version__, "numpy": np.__version__}


def _unit_field(d, key, path, dim, default=None):
    v = _get(d, key, path, "vector", default)
    if v is None:
        return None
    if v.size != dim or abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ConfigError(f"{path}.{key}: must be a unit vector of length {dim}")
    return v / np.linalg.norm(v)


def _quad_setup(sc: ScenarioConfig):
    q = sc.quad
    try:
        params = quad.QuadParams(
            gravity=_get(q, "gravity", "quad", "vector", np.array([0.0, 0.0, 9.81])),
            r_body=_get(q, "r_body", "quad", "vector", np.array([0.0, 0.0, -1.0])),
        )
        ref = quad.CircleReference(freq=_get(q, "freq", "quad", float, 0.2))
        sat = quad.SatConfig(b=_get(q, "b", "quad", float, 4.0), b_max=_get(q, "b_max", "quad", float, 6.0))
        quad.validate_setup(params, ref, sat)
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e)) from e
    if not np.allclose(sc.potential.r, params.r_body, atol=1e-12):
        raise ConfigError("potential.r: must equal quad.r_body for the tracking loop")
    k1 = _get(q, "k1", "quad", float, 1.0)
    kp = _get(q, "kp", "quad", float, 1.0)
    kbar1 = _get(q, "kbar1", "quad", float, 12.0)
    for name, v in (("k1", k1), ("kp", kp), ("kbar1", kbar1)):
        if not v > 0:
            raise ConfigError(f"quad.{name}: must be positive, got {v}")
    H = _get(q, "H", "quad", "matrix", DEFAULT_H)
    Rhat = _get(q, "Rhat", "quad", "matrix", DEFAULT_RHAT)
    Qhat0 = _get(q, "Qhat0", "quad", "matrix", DEFAULT_QHAT0)
    for name, M, n in (("H", H, 6), ("Rhat", Rhat, 3), ("Qhat0", Qhat0, 6)):
        if M.shape != (n, n):
            raise ConfigError(f"quad.{name}: expected a {n}x{n} matrix")
    return params, ref, sat, k1, kp, kbar1, H, Rhat, Qhat0


def _synthesize(sc: ScenarioConfig):
    params, ref, sat, k1, kp, kbar1, H, Rhat, Qhat0 = _quad_setup(sc)
    try:
        gains = synthesize_gains(H, Rhat, Qhat0, sat, kbar1, kp, cfg=sc.potential)
    except ValueError as e:
        raise ConfigError(f"quad: {e}") from e
    return params, ref, sat, k1, kp, gains


def _write_json(path, doc) -> None:
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True, default=_default) + "\n")


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, np.generic):
        return o.item()
    raise TypeError(type(o).__name__)


def run_sphere_sim(sc: ScenarioConfig, out) -> dict:
    cfg = sc.potential
    rng = np.random.default_rng(sc.seed)
    x0 = _unit_field(sc.initial, "x0", "initial", cfg.dim)
    y0 = _unit_field(sc.initial, "y0", "initial", cfg.dim)
    if x0 is None:
        x0 = rng.standard_normal(cfg.dim)
        x0 /= np.linalg.norm(x0)
    if y0 is None:
        y0 = pot.sample_y(cfg, rng, 1)[0]
    if float(cfg.r @ y0) > cfg.gamma + pot.Y_TOL:
        raise ConfigError(f"initial.y0: must satisfy r^T y0 <= gamma = {cfg.gamma}")
    arc = stabilizer.simulate(cfg, x0, y0, sc.solver)
    arc.meta.update({"config": config_echo(sc), "seed": sc.seed, "versions": _versions(),
                     "state_names": [f"x{i}" for i in range(cfg.dim)] + [f"y{i}" for i in range(cfg.dim)]})
    if out:
        export_arc(arc, out, derived=stabilizer.arc_columns(cfg, arc))
    rep = stabilizer.check_exponential_decay(arc, cfg)
    return {"mode": sc.mode, "jumps": arc.jumps, "jump_times": arc.jump_times,
            "final_time": arc.final_time, "decay": rep.to_dict()}


def run_quad_sim(sc: ScenarioConfig, out) -> dict:
    params, ref, sat, k1, kp, gains = _synthesize(sc)
    cfg = sc.potential
    init = sc.initial
    start = quad.scenario_initial(ref)
    R0 = _get(init, "R", "initial", "matrix", start.R)
    if not is_rotation(R0, 1e-9):
        raise ConfigError("initial.R: must be a rotation matrix")
    state = quad.QuadFullState(
        p=_get(init, "p", "initial", "vector", start.p),
        v=_get(init, "v", "initial", "vector", start.v),
        R=R0,
        y=_unit_field(init, "y", "initial", 3, start.y),
    )
    if float(cfg.r @ state.y) > cfg.gamma + pot.Y_TOL:
        raise ConfigError(f"initial.y: must satisfy r^T y <= gamma = {cfg.gamma}")
    arc = quad.simulate_tracking(params, gains, cfg, sat, k1, kp, ref, state, sc.solver)
    names = ([f"p{i}" for i in (1, 2, 3)] + [f"v{i}" for i in (1, 2, 3)]
             + [f"R{i}{j}" for i in (1, 2, 3) for j in (1, 2, 3)] + [f"y{i}" for i in (1, 2, 3)])
    arc.meta.update({"config": config_echo(sc), "seed": sc.seed, "versions": _versions(), "state_names": names})
    cols = quad.tracking_columns(arc, gains, sat, params, ref, cfg)
    if out:
        export_arc(arc, out, derived=cols)
    return {"mode": sc.mode, "metrics": quad.tracking_metrics(arc, gains, sat).to_dict(),
            "gain_warnings": gains.warnings}


def run_gains(sc: ScenarioConfig, out) -> dict:
    *_, gains = _synthesize(sc)
    doc = {"gains": gains.to_dict(), "config": config_echo(sc), "versions": _versions()}
    if out:
        _write_json(out, doc)
    return {"mode": sc.mode, "eps": gains.eps, "certificates": gains.certificates,
            "warnings": gains.warnings}


def run_verify(sc: ScenarioConfig, out) -> tuple[dict, bool]:
    cfg = sc.potential
    count = _get(sc.verify, "sample_count", "verify", int, 100_000)
    sims = _get(sc.verify, "simulations", "verify", int, 3)
    if count < 100 or sims < 0:
        raise ConfigError("verify.sample_count must be >= 100 and verify.simulations >= 0")
    report = pot.verify_potential_properties(cfg, sample_count=count, seed=sc.seed)
    consts = pot.exp_constants(cfg)
    rng = np.random.default_rng(sc.seed)
    decay = []
    for _ in range(sims):
        x0, y0 = stabilizer.jump_set_sample(cfg, rng)
        arc = stabilizer.simulate(cfg, x0, y0, sc.solver)
        r = stabilizer.check_exponential_decay(arc, cfg, constants=consts)
        decay.append(r.to_dict())
    ok = report.passed and all(d["passed"] for d in decay)
    doc = {"mode": sc.mode, "passed": ok, "properties": report.to_dict(),
           "constants": consts.__dict__, "decay": decay}
    if out:
        _write_json(out, doc | {"config": config_echo(sc), "versions": _versions()})
    return doc, ok


def run_geodesic(sc: ScenarioConfig, out) -> dict:
    cfg = sc.potential
    count = _get(sc.geodesic, "count", "geodesic", int, 10)
    tol = _get(sc.geodesic, "tol", "geodesic", float, 1e-3)
    rng = np.random.default_rng(sc.seed)
    rows = []
    for _ in range(count):
        x0, y0 = stabilizer.jump_set_sample(cfg, rng)
        arc = stabilizer.simulate(cfg, x0, y0, sc.solver)
        rows.append(stabilizer.check_geodesic(arc, cfg).to_dict())
    worst = max((abs(r["difference"]) for r in rows), default=0.0)
    doc = {"mode": sc.mode, "count": count, "max_abs_difference": worst,
           "within_tol": bool(worst <= tol), "runs": rows}
    if out:
        _write_json(out, doc | {"config": config_echo(sc), "versions": _versions()})
    return doc


def run(config_path, mode: str | None = None, out: str | None = None, seed: int | None = None,
        stream=None) -> int:
    """Execute one mode and return the process exit code."""
    stream = stream or sys.stdout
    try:
        sc = load_config(config_path, mode, seed)
        out = out or sc.output
        ok = True
        if sc.mode == "sphere-sim":
            summary = run_sphere_sim(sc, out)
        elif sc.mode == "quad-sim":
            summary = run_quad_sim(sc, out)
        elif sc.mode == "gains":
            summary = run_gains(sc, out)
        elif sc.mode == "verify":
            summary, ok = run_verify(sc, out)
        else:
            summary = run_geodesic(sc, out)
    except (ConfigError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    print(json.dumps(summary, indent=1, sort_keys=True, default=_default), file=stream)
    return EXIT_OK if ok else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="synsphere", description=__doc__.splitlines()[0])
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", required=True, help="JSON scenario file")
    p.add_argument("--out", help="output path (.csv or .json for arcs, .json for reports)")
    p.add_argument("--seed", type=int, help="64-bit seed, overrides the config")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.config, mode=args.mode, out=args.out, seed=args.seed)


if __name__ == "__main__":
    sys.exit(main())
