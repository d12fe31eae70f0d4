"""Command-line front end.

Subcommands: ``solve``, ``tradeoff``, ``beampattern``, ``security``,
``validate``.  Configuration comes from an optional YAML file with a
strict schema (unknown keys are rejected; every power-like quantity
carries a ``_db``/``_dbm`` suffix and is converted to linear scale once,
at ingestion).  Scalar flags override the file.  Exit codes: 0 success,
2 configuration error, 3 infeasible problem, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import yaml

from .ci_constraints import build_constraints
from .errors import InfeasibleProblem, NumericError, RandomizationFailure
from .harness import (
    ExperimentSpec,
    draw_channels,
    draw_symbols,
    run_beampattern,
    run_security_metrics,
    run_tradeoff,
    section4_scenario,
    _unit_rng,
    _STREAM_CHANNELS,
    _STREAM_SYMBOLS,
)
from .report import (
    write_beampattern_csv,
    write_manifest,
    write_runs_csv,
    write_security_csv,
    write_solution_csv,
    write_tradeoff_csv,
)
from .signal_model import Scenario, db_to_linear
from .solvers import METHODS, SolverConfig, solve


class ConfigError(ValueError):
    pass


_METHOD_KEYS = {
    "method": str,
    "max_outer_iters": int,
    "conv_tol": float,
    "linesearch": str,
    "randomization_samples": int,
    "rng_seed": int,
    "subproblem_tol": float,
    "outer_rel_tol": float,
    "phi_update": str,
}

_SCHEMA = {
    "schema_version": int,
    "scenario": {
        "n_tx": int,
        "n_rx": int,
        "target_angle_deg": float,
        "target_power_db": float,
        "clutter_angles_deg": [float],
        "clutter_powers_db": [float],
        "power_budget_dbm": float,
        "psk_order": int,
        "n_users": int,
        "user_noise_vars_db": [float],
    },
    "experiment": {
        "gamma_db": float,
        "gamma_sweep_db": [float],
        "n_channel_draws": int,
        "n_symbol_draws": int,
        "angle_grid_start_deg": float,
        "angle_grid_stop_deg": float,
        "angle_grid_step_deg": float,
        "noise_trials": int,
        "eve_noise_var_db": float,
        "seed": int,
    },
    "methods": [_METHOD_KEYS],
    "output": {
        "dir": str,
        "figures": bool,
    },
}


def _check_keys(node, schema, path=""):
    if isinstance(schema, dict):
        if not isinstance(node, dict):
            raise ConfigError(f"{path or 'config'}: expected a mapping")
        for key, value in node.items():
            if key not in schema:
                raise ConfigError(f"unknown key {path + key!r} (strict schema)")
            _check_keys(value, schema[key], path + key + ".")
    elif isinstance(schema, list):
        if not isinstance(node, list):
            raise ConfigError(f"{path[:-1]}: expected a list")
        for i, item in enumerate(node):
            _check_keys(item, schema[0], f"{path[:-1]}[{i}].")
    else:
        # scalar leaf: coerce-check the type
        if schema is float:
            if isinstance(node, bool) or not isinstance(node, (int, float)):
                raise ConfigError(f"{path[:-1]}: expected a number, got {node!r}")
        elif schema is int:
            if isinstance(node, bool) or not isinstance(node, int):
                raise ConfigError(f"{path[:-1]}: expected an integer, got {node!r}")
        elif schema is bool:
            if not isinstance(node, bool):
                raise ConfigError(f"{path[:-1]}: expected a boolean, got {node!r}")
        elif schema is str:
            if not isinstance(node, str):
                raise ConfigError(f"{path[:-1]}: expected a string, got {node!r}")


def load_config(path) -> dict:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if raw is None:
        raw = {}
    _check_keys(raw, _SCHEMA)
    version = raw.get("schema_version", 1)
    if version != 1:
        raise ConfigError(f"unsupported schema_version {version}")
    return raw


def default_config() -> dict:
    return {
        "schema_version": 1,
        "scenario": {
            "n_tx": 8,
            "n_rx": 8,
            "target_angle_deg": 0.0,
            "target_power_db": 10.0,
            "clutter_angles_deg": [-50.0, -20.0, 20.0, 50.0],
            "clutter_powers_db": [30.0, 30.0, 30.0, 30.0],
            "power_budget_dbm": 30.0,
            "psk_order": 4,
            "n_users": 5,
        },
        "experiment": {
            "gamma_db": 15.0,
            "gamma_sweep_db": [12.0, 15.0, 18.0, 21.0, 24.0, 27.0],
            "n_channel_draws": 50,
            "n_symbol_draws": 10,
            "angle_grid_start_deg": -90.0,
            "angle_grid_stop_deg": 90.0,
            "angle_grid_step_deg": 0.5,
            "noise_trials": 100000,
            "eve_noise_var_db": 0.0,
            "seed": 1234,
        },
        "methods": [{"method": "sca"}, {"method": "sq"}, {"method": "sdr"}],
        "output": {"dir": "out", "figures": True},
    }


def _merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = value
    return out


def build_scenario(cfg: dict) -> Scenario:
    sc = cfg["scenario"]
    deg = np.pi / 180.0
    n_users = sc["n_users"]
    noise_db = sc.get("user_noise_vars_db", [0.0] * n_users)
    if len(noise_db) != n_users:
        raise ConfigError(
            f"user_noise_vars_db has {len(noise_db)} entries for n_users={n_users}"
        )
    return Scenario(
        n_tx=sc["n_tx"],
        n_rx=sc["n_rx"],
        target_angle=sc["target_angle_deg"] * deg,
        target_power=db_to_linear(sc["target_power_db"]),
        clutter_angles=tuple(a * deg for a in sc["clutter_angles_deg"]),
        clutter_powers=tuple(db_to_linear(p) for p in sc["clutter_powers_db"]),
        radar_noise_var=1.0,
        user_noise_vars=tuple(db_to_linear(v) for v in noise_db),
        power_budget=db_to_linear(sc["power_budget_dbm"]),
        psk_order=sc["psk_order"],
    )


def build_methods(cfg: dict) -> tuple:
    out = []
    for entry in cfg["methods"]:
        if entry.get("method") not in METHODS:
            raise ConfigError(f"methods[].method must be one of {METHODS}")
        out.append(SolverConfig(**entry))
    if not out:
        raise ConfigError("at least one method is required")
    return tuple(out)


def build_spec(cfg: dict) -> ExperimentSpec:
    exp = cfg["experiment"]
    start, stop = exp["angle_grid_start_deg"], exp["angle_grid_stop_deg"]
    step = exp["angle_grid_step_deg"]
    if step <= 0 or stop <= start:
        raise ConfigError("angle grid needs step > 0 and stop > start")
    grid = tuple(np.arange(start, stop + 1e-9, step))
    return ExperimentSpec(
        scenario=build_scenario(cfg),
        methods=build_methods(cfg),
        gamma_sweep_db=tuple(exp["gamma_sweep_db"]),
        gamma_db=exp["gamma_db"],
        n_channel_draws=exp["n_channel_draws"],
        n_symbol_draws=exp["n_symbol_draws"],
        angle_grid_deg=grid,
        noise_trials=exp["noise_trials"],
        eve_noise_var=db_to_linear(exp["eve_noise_var_db"]),
        seed=exp["seed"],
        output_dir=cfg["output"]["dir"],
    )


def _apply_flags(cfg: dict, args) -> dict:
    cfg = json.loads(json.dumps(cfg))  # deep copy
    if args.seed is not None:
        cfg["experiment"]["seed"] = args.seed
    if args.out is not None:
        cfg["output"]["dir"] = args.out
    if args.method:
        cfg["methods"] = [{"method": m} for m in args.method]
    if getattr(args, "n_tx", None) is not None:
        cfg["scenario"]["n_tx"] = args.n_tx
    if getattr(args, "n_rx", None) is not None:
        cfg["scenario"]["n_rx"] = args.n_rx
    if getattr(args, "gamma_db", None) is not None:
        cfg["experiment"]["gamma_db"] = args.gamma_db
    if getattr(args, "draws", None) is not None:
        cfg["experiment"]["n_channel_draws"] = args.draws
    if getattr(args, "symbol_draws", None) is not None:
        cfg["experiment"]["n_symbol_draws"] = args.symbol_draws
    if getattr(args, "noise_trials", None) is not None:
        cfg["experiment"]["noise_trials"] = args.noise_trials
    if getattr(args, "no_figures", False):
        cfg["output"]["figures"] = False
    _check_keys(cfg, _SCHEMA)
    return cfg


def _outdir(cfg) -> Path:
    out = Path(cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_validate(cfg, args) -> int:
    print("configuration is valid")
    return 0


def _cmd_solve(cfg, args) -> int:
    spec = build_spec(cfg)
    out = _outdir(cfg)
    scenario = spec.scenario
    channels = draw_channels(scenario, _unit_rng(spec.seed, _STREAM_CHANNELS, 0))
    symbols = draw_symbols(scenario, _unit_rng(spec.seed, _STREAM_SYMBOLS, 0, 0))
    gammas = [db_to_linear(spec.gamma_db)] * scenario.n_users
    cs = build_constraints(scenario, channels, symbols, gammas)
    summary = []
    for method_cfg in spec.methods:
        res = solve(scenario, cs, method_cfg)
        if res.status == "infeasible":
            print(f"{method_cfg.method}: infeasible", file=sys.stderr)
            return 3
        margins = cs.margins(res.x_opt)
        write_solution_csv(res.x_opt, res.w_opt, out / f"solution_{method_cfg.method}.csv")
        summary.append({
            "method": method_cfg.method,
            "status": res.status,
            "iterations": res.iterations,
            "sinr_db": res.sinr_rad_db,
            "sinr_linear": res.sinr_rad,
            "min_margin": float(np.min(margins)),
            "power_margin": cs.power_margin(res.x_opt),
            "upper_bound_db": (None if res.upper_bound is None
                               else 10.0 * np.log10(res.upper_bound)),
        })
        print(f"{method_cfg.method}: status={res.status} "
              f"sinr={res.sinr_rad_db:.3f} dB min_margin={float(np.min(margins)):.3e}")
    (out / "solve_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    write_manifest(out / "manifest.json", "solve", spec.seed, cfg,
                   {"gamma_db": spec.gamma_db})
    return 0


def _cmd_tradeoff(cfg, args) -> int:
    spec = build_spec(cfg)
    out = _outdir(cfg)
    report = run_tradeoff(spec)
    if all(p.n_ok == 0 for p in report.tradeoff):
        print("every draw failed or was infeasible", file=sys.stderr)
        return 3
    write_tradeoff_csv(report, out / "tradeoff.csv")
    write_runs_csv(report, out / "runs.csv")
    write_manifest(out / "manifest.json", "tradeoff", spec.seed, cfg, {
        "runtime_s": report.runtime_s,
        "points": len(report.tradeoff),
    })
    if cfg["output"]["figures"]:
        from .plots import plot_tradeoff

        plot_tradeoff(report, out / "tradeoff.svg")
    print(f"wrote {out / 'tradeoff.csv'}")
    return 0


def _cmd_beampattern(cfg, args) -> int:
    spec = build_spec(cfg)
    out = _outdir(cfg)
    report = run_beampattern(spec)
    if not report.beampattern_db:
        print("no successful draws", file=sys.stderr)
        return 3
    suffix = f"_nt{spec.scenario.n_tx}"
    write_beampattern_csv(report, out / f"beampattern{suffix}.csv")
    write_manifest(out / "manifest.json", "beampattern", spec.seed, cfg, {
        "runtime_s": report.runtime_s,
        "pslr_db": report.pslr_db,
        "null_depth_db": report.null_depth_db,
        "mainlobe_width_deg": report.mainlobe_width_deg,
    })
    if cfg["output"]["figures"]:
        from .plots import plot_beampattern

        plot_beampattern(report, out / f"beampattern{suffix}.svg")
    print(f"wrote {out / f'beampattern{suffix}.csv'}")
    return 0


def _cmd_security(cfg, args) -> int:
    spec = build_spec(cfg)
    out = _outdir(cfg)
    report = run_security_metrics(spec)
    if not report.security:
        print("no successful draws", file=sys.stderr)
        return 3
    write_security_csv(report, out / "security.csv")
    write_manifest(out / "manifest.json", "security", spec.seed, cfg,
                   {"runtime_s": report.runtime_s})
    if cfg["output"]["figures"]:
        from .plots import plot_security

        plot_security(report, out / "security.svg")
    print(f"wrote {out / 'security.csv'}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ciwave",
        description="Secure radar-communication waveform design experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="YAML configuration file")
    common.add_argument("--seed", type=int, default=None, help="override the master seed")
    common.add_argument("--out", type=str, default=None, help="override the output directory")
    common.add_argument("--method", action="append", choices=METHODS,
                        help="restrict to this method (repeatable)")
    common.add_argument("--n-tx", type=int, default=None, dest="n_tx")
    common.add_argument("--n-rx", type=int, default=None, dest="n_rx")
    common.add_argument("--gamma-db", type=float, default=None, dest="gamma_db")
    common.add_argument("--draws", type=int, default=None, help="channel draws")
    common.add_argument("--symbol-draws", type=int, default=None, dest="symbol_draws")
    common.add_argument("--noise-trials", type=int, default=None, dest="noise_trials")
    common.add_argument("--no-figures", action="store_true", dest="no_figures")

    sub.add_parser("solve", parents=[common], help="solve one instance and dump x, w")
    sub.add_parser("tradeoff", parents=[common], help="radar SINR versus the QoS sweep")
    sub.add_parser("beampattern", parents=[common], help="averaged transmit beampattern")
    sub.add_parser("security", parents=[common], help="user and eavesdropper error rates")
    sub.add_parser("validate", parents=[common], help="check a configuration file")
    return parser


_COMMANDS = {
    "solve": _cmd_solve,
    "tradeoff": _cmd_tradeoff,
    "beampattern": _cmd_beampattern,
    "security": _cmd_security,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        cfg = default_config()
        if args.config is not None:
            cfg = _merge(cfg, load_config(args.config))
        cfg = _apply_flags(cfg, args)
        build_spec(cfg)  # validate semantic constraints early
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](cfg, args)
    except InfeasibleProblem as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except (NumericError, RandomizationFailure) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
