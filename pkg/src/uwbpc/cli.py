"""Command-line front end.

A flat ``key = value`` config file supplies the network constants and
experiment knobs (defaults bake in the reference scenario: 8 users, 200
taps, 50 chips, 100-bit packets, 100 kb/s, 5e-16 W noise, 1 uW cap).
Command-line flags override file values. All dB and microwatt conversions
happen here; the library works in linear watts.

Exit codes: 0 success, 1 usage or config error, 2 infeasible or saturated
outcome, 3 validation tolerance exceeded.
"""

import argparse
import sys
from pathlib import Path

import numpy as np

from . import lsa
from .errors import InfeasibleError, UnattainableLossError
from .experiments import (ExperimentSpec, ResultTable, emit_mu_nu_curves,
                          run_equilibrium, run_po_vs_frames,
                          run_utility_vs_gain, validate_lsa)
from .game import EfficiencyModel
from .params import NetworkParams, fingers_from_ratio
from .units import db_to_linear

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_VALIDATION = 3


class ConfigError(Exception):
    pass


def _parse_float_list(raw: str):
    return tuple(float(tok) for tok in raw.split(",") if tok.strip() != "")


def _parse_points(raw: str):
    """Semicolon-separated 'lambda_db,beta,alpha' triples."""
    points = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        parts = [float(tok) for tok in chunk.split(",")]
        if len(parts) != 3:
            raise ValueError("each point needs lambda_db,beta,alpha")
        points.append(tuple(parts))
    return tuple(points)


def _fmt_float_list(values):
    return ",".join(repr(float(v)) for v in values)


def _fmt_points(points):
    return ";".join(",".join(repr(float(v)) for v in p) for p in points)


# key -> (parse, format, default). The echo written into output metadata
# uses the format side, and parsing that echo reproduces the same config.
SCHEMA = {
    "command": (str, str, ""),
    "users": (int, str, 8),
    "frames": (int, str, 20),
    "chips": (int, str, 50),
    "paths": (int, str, 200),
    "rake_ratio": (float, repr, 0.1),
    "pdp_ratio_db": (float, repr, 10.0),
    "noise_variance_w": (float, repr, 5e-16),
    "p_max_w": (float, repr, 1e-6),
    "rate_bps": (float, repr, 1e5),
    "info_bits": (int, str, 100),
    "total_bits": (int, str, 100),
    "seed": (int, str, 12345),
    "trials": (int, str, 1000),
    "tolerance": (float, repr, 0.05),
    "target_loss_db": (float, repr, -1.0),
    "nf_start": (int, str, 1),
    "nf_stop": (int, str, 40),
    "pdp_ratios_db": (_parse_float_list, _fmt_float_list, (0.0, 10.0, 20.0)),
    "rake_ratios": (_parse_float_list, _fmt_float_list, (1.0, 0.5, 0.3, 0.1)),
    "loads": (_parse_float_list, _fmt_float_list, (0.25,)),
    "beta_grid_points": (int, str, 50),
    "lsa_paths": (int, str, 1000),
    "lsa_draws": (int, str, 200),
    "lsa_points": (_parse_points, _fmt_points,
                   ((10.0, 0.1, 0.25), (10.0, 0.5, 0.25),
                    (20.0, 0.5, 1.25), (10.0, 1.0, 0.25))),
    "out": (str, str, ""),
    "format": (str, str, "csv"),
}


def load_config_file(path: str) -> dict:
    """Read a flat key = value file; '#' starts a comment line."""
    values = {}
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = raw.strip()
    return values


def resolve_config(file_values: dict | None = None,
                   overrides: dict | None = None) -> dict:
    """Defaults, then file values, then flag overrides; fully typed."""
    cfg = {key: default for key, (_, _, default) in SCHEMA.items()}
    for key, raw in (file_values or {}).items():
        parse = SCHEMA[key][0]
        try:
            cfg[key] = parse(raw)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})")
    for key, value in (overrides or {}).items():
        if value is not None:
            cfg[key] = value
    if cfg["format"] not in ("csv", "jsonl"):
        raise ConfigError("format must be 'csv' or 'jsonl'")
    return cfg


def echo_config(cfg: dict, command: str) -> dict:
    """Flat string echo of the resolved config, reparseable as a config."""
    out = {}
    for key, (_, fmt, _) in SCHEMA.items():
        value = command if key == "command" else cfg[key]
        out[key] = fmt(value)
    return out


def params_from_config(cfg: dict) -> NetworkParams:
    try:
        return NetworkParams(
            users=cfg["users"], frames=cfg["frames"], chips=cfg["chips"],
            paths=cfg["paths"], rake_ratio=cfg["rake_ratio"],
            pdp_ratio=float(db_to_linear(cfg["pdp_ratio_db"])),
            noise_variance=cfg["noise_variance_w"], p_max=cfg["p_max_w"],
            rate=cfg["rate_bps"], info_bits=cfg["info_bits"],
            total_bits=cfg["total_bits"])
    except ValueError as exc:
        raise ConfigError(str(exc))


def _emit(table: ResultTable, cfg: dict, command: str) -> None:
    table.meta = echo_config(cfg, command)
    text = table.render(cfg["format"])
    if cfg["out"]:
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_curves(cfg: dict) -> int:
    betas = [i / cfg["beta_grid_points"] for i in
             range(1, cfg["beta_grid_points"] + 1)]
    table = emit_mu_nu_curves(cfg["pdp_ratios_db"], betas, cfg["loads"])
    _emit(table, cfg, "curves")
    return EXIT_OK


def _cmd_equilibrium(cfg: dict) -> int:
    params = params_from_config(cfg)
    table = run_equilibrium(params, cfg["seed"])
    _emit(table, cfg, "equilibrium")
    saturated = any(row[7] for row in table.rows)
    converged = all(row[8] for row in table.rows)
    if saturated or not converged:
        return EXIT_INFEASIBLE
    return EXIT_OK


def _cmd_po_sweep(cfg: dict) -> int:
    params = params_from_config(cfg)
    if cfg["nf_start"] < 1 or cfg["nf_stop"] < cfg["nf_start"]:
        raise ConfigError("need 1 <= nf_start <= nf_stop")
    spec = ExperimentSpec(
        params=params, trials=cfg["trials"], seed=cfg["seed"],
        sweep_name="frames",
        sweep_values=tuple(range(cfg["nf_start"], cfg["nf_stop"] + 1)),
        pdp_ratios_db=cfg["pdp_ratios_db"])
    table = run_po_vs_frames(spec)
    _emit(table, cfg, "po-sweep")
    return EXIT_OK


def _cmd_utility_scatter(cfg: dict) -> int:
    params = params_from_config(cfg)
    spec = ExperimentSpec(
        params=params, trials=1, seed=cfg["seed"],
        sweep_name="rake_ratio", sweep_values=cfg["rake_ratios"])
    table = run_utility_vs_gain(spec)
    _emit(table, cfg, "utility-scatter")
    return EXIT_OK


def _cmd_design(cfg: dict) -> int:
    params = params_from_config(cfg)
    model = EfficiencyModel(total_bits=params.total_bits)
    target = cfg["target_loss_db"]
    if target < 0.0:
        raise ConfigError("design needs target_loss_db >= 0 (config key or "
                          "--target-loss-db)")
    try:
        beta = lsa.invert_loss(target, params, model)
    except UnattainableLossError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    fingers = fingers_from_ratio(beta, params.paths)
    achieved = lsa.loss_db(params, model, rake_ratio=beta)
    table = ResultTable(
        ("target_loss_db", "beta", "fingers", "paths", "predicted_loss_db"),
        [(target, beta, fingers, params.paths, achieved)])
    _emit(table, cfg, "design")
    return EXIT_OK


def _cmd_validate_lsa(cfg: dict) -> int:
    base = params_from_config(cfg)
    template = NetworkParams(
        users=base.users, frames=1, chips=max(1, cfg["lsa_paths"] // 4),
        paths=cfg["lsa_paths"], rake_ratio=base.rake_ratio,
        pdp_ratio=base.pdp_ratio, noise_variance=base.noise_variance,
        p_max=base.p_max, rate=base.rate, info_bits=base.info_bits,
        total_bits=base.total_bits)
    try:
        table = validate_lsa(cfg["lsa_points"], template, cfg["lsa_draws"],
                             cfg["seed"])
    except (ValueError, InfeasibleError) as exc:
        raise ConfigError(str(exc))
    _emit(table, cfg, "validate-lsa")
    mu_err = max(row[6] for row in table.rows)
    nu_err = max(row[9] for row in table.rows)
    if max(mu_err, nu_err) > cfg["tolerance"]:
        print(f"error: worst relative error {max(mu_err, nu_err):.4f} "
              f"exceeds tolerance {cfg['tolerance']:g}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


COMMANDS = {
    "curves": _cmd_curves,
    "equilibrium": _cmd_equilibrium,
    "po-sweep": _cmd_po_sweep,
    "utility-scatter": _cmd_utility_scatter,
    "design": _cmd_design,
    "validate-lsa": _cmd_validate_lsa,
}


class _Parser(argparse.ArgumentParser):
    """argparse defaults to exit code 2 on usage errors; we reserve 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uwbpc",
                     description="Energy-efficient UWB power control toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name, add_help=True)
        cmd.add_argument("--config", default=None, help="key = value file")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--out", default=None, help="output path (default stdout)")
        cmd.add_argument("--format", choices=("csv", "jsonl"), default=None)
        cmd.add_argument("--trials", type=int, default=None)
        cmd.add_argument("--tolerance", type=float, default=None)
        if name == "design":
            cmd.add_argument("--target-loss-db", type=float, default=None,
                             dest="target_loss_db")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    overrides = {key: getattr(args, key, None)
                 for key in ("seed", "out", "format", "trials", "tolerance",
                             "target_loss_db")}
    try:
        file_values = load_config_file(args.config) if args.config else {}
        cfg = resolve_config(file_values, overrides)
        return COMMANDS[args.command](cfg)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
