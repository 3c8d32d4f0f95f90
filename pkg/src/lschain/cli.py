"""Command-line interface: ``lschain {run,sweep,verify,thermo,estimate-t0}``.

Configuration comes from an optional JSON file (``--config``) whose keys may
be overridden by flags of the same name. ``LSCHAIN_OUT_DIR`` sets the
default output directory.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .engine import EngineConfig, run_blockdiag
from .errors import LSChainError, RootBracketError
from .majorant import tau_domain_estimate
from .models import build_model, load_spec
from .numio import fmt
from .verification import run_verification_suite, thermo_analysis, write_verify_report

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ENGINE = 2
EXIT_SWEEP_FAILED = 3
EXIT_CHECK_FAILED = 4
EXIT_BRACKET = 5

OUT_DIR_ENV = "LSCHAIN_OUT_DIR"

DEFAULTS = {
    "model": "spin",
    "spec_file": None,
    "n_sites": 4,
    "local_dim": 2,
    "d_trunc": 4,
    "rng_seed": 0,
    "kbar": 1,
    "tau_re": 0.02,
    "tau_im": 0.0,
    "grid": "rect",
    "re_min": -0.02,
    "re_max": 0.02,
    "re_n": 5,
    "im_min": 0.0,
    "im_max": 0.0,
    "im_n": 1,
    "radius": 0.001,
    "n_points": 16,
    "n_list": [3, 4, 5, 6, 7],
    "j_max": 40,
    "tail_tol": 1e-14,
    "residual_tol": 1e-10,
    "track_u": False,
    "delta": 0.5,
    "workers": 1,
    "timing": False,
    "out_dir": None,
}

COMMANDS = ("run", "sweep", "verify", "thermo", "estimate-t0")


class ConfigError(Exception):
    pass


def _bool(text: str) -> bool:
    low = str(text).lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in str(text).replace(",", " ").split()]


_TYPES = {
    bool: _bool,
    int: int,
    float: float,
    list: _int_list,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lschain", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON configuration file")
    for key, default in DEFAULTS.items():
        conv = _TYPES.get(type(default), str)
        if key in ("out_dir", "spec_file"):
            conv = str
        parser.add_argument(f"--{key}", type=conv, default=None)
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    cfg["out_dir"] = os.environ.get(OUT_DIR_ENV, "lschain_out")
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        unknown = set(data) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(data)
    for key in DEFAULTS:
        value = getattr(args, key)
        if value is not None:
            cfg[key] = value
    _validate(cfg)
    return cfg


def _validate(cfg: dict) -> None:
    if cfg["model"] not in ("spin", "anharmonic"):
        raise ConfigError(f"model must be spin or anharmonic, got {cfg['model']!r}")
    if cfg["grid"] not in ("rect", "circle"):
        raise ConfigError("grid must be rect or circle")
    for key in ("re_n", "im_n", "n_points", "workers", "j_max"):
        if int(cfg[key]) < 1:
            raise ConfigError(f"{key} must be at least 1")
    if not cfg["n_list"]:
        raise ConfigError("n_list must not be empty")
    for key in ("tail_tol", "residual_tol"):
        if not float(cfg[key]) > 0:
            raise ConfigError(f"{key} must be positive")


def make_spec(cfg: dict):
    if cfg["spec_file"]:
        return load_spec(cfg["spec_file"])
    return build_model(cfg["model"], int(cfg["n_sites"]), local_dim=int(cfg["local_dim"]),
                       rng_seed=int(cfg["rng_seed"]), d_trunc=int(cfg["d_trunc"]), kbar=int(cfg["kbar"]))


def engine_config(cfg: dict, tau: complex) -> EngineConfig:
    return EngineConfig(tau=tau, j_max=int(cfg["j_max"]), tail_tol=float(cfg["tail_tol"]),
                        residual_tol=float(cfg["residual_tol"]), track_u=bool(cfg["track_u"]))


def tau_grid(cfg: dict) -> list[complex]:
    """Grid points in row order: real axis outer, imaginary axis fastest."""
    if cfg["grid"] == "circle":
        n = int(cfg["n_points"])
        return [complex(z) for z in float(cfg["radius"]) * np.exp(2j * np.pi * np.arange(n) / n)]
    res = np.linspace(float(cfg["re_min"]), float(cfg["re_max"]), int(cfg["re_n"]))
    ims = np.linspace(float(cfg["im_min"]), float(cfg["im_max"]), int(cfg["im_n"]))
    return [complex(float(r), float(i)) for r in res for i in ims]


def out_dir(cfg: dict) -> Path:
    path = Path(cfg["out_dir"])
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise ConfigError(f"cannot create output directory {path}: {exc}") from exc
    if not os.access(path, os.W_OK):
        raise ConfigError(f"output directory {path} is not writable")
    return path


def _dump(data, path: Path) -> None:
    path.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_run(cfg: dict) -> int:
    spec = make_spec(cfg)
    tau = complex(float(cfg["tau_re"]), float(cfg["tau_im"]))
    ecfg = engine_config(cfg, tau)
    dest = out_dir(cfg)
    try:
        report = run_blockdiag(spec, ecfg)
    except LSChainError as exc:
        print(f"engine failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ENGINE
    data = report.to_dict()
    if not cfg["timing"]:
        data["wall_time"] = None
    data["model"] = spec.model
    data["model_notes"] = spec.notes
    _dump(data, dest / "run_report.json")
    with open(dest / "per_length_norms.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["length", "max_weighted_norm", "paper_bound"])
        for row in report.per_length_norms:
            w.writerow([row["length"], fmt(row["max_weighted_norm"]), fmt(row["paper_bound"])])
    print(json.dumps({"e_n": [report.e_n.real, report.e_n.imag], "gap_margin": report.gap_margin}))
    return EXIT_OK


def _sweep_row(args):
    spec, ecfg = args
    try:
        rep = run_blockdiag(spec, ecfg)
    except LSChainError:
        return (ecfg.tau, complex(math.nan, math.nan), math.nan, False)
    return (ecfg.tau, rep.e_n, rep.gap_margin, True)


def cmd_sweep(cfg: dict) -> int:
    spec = make_spec(cfg)
    dest = out_dir(cfg)
    jobs = [(spec, engine_config(cfg, t)) for t in tau_grid(cfg)]
    workers = int(cfg["workers"])
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_sweep_row, jobs))
    else:
        rows = [_sweep_row(j) for j in jobs]
    with open(dest / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["re_tau", "im_tau", "re_E", "im_E", "gap_margin", "converged"])
        for tau, e, gap, ok in rows:
            w.writerow([fmt(tau.real), fmt(tau.imag), fmt(e.real), fmt(e.imag), fmt(gap),
                        "true" if ok else "false"])
    n_ok = sum(r[3] for r in rows)
    print(json.dumps({"rows": len(rows), "converged": n_ok}))
    return EXIT_OK if n_ok else EXIT_SWEEP_FAILED


def cmd_verify(cfg: dict) -> int:
    spec = make_spec(cfg)
    tau = complex(float(cfg["tau_re"]), float(cfg["tau_im"]))
    dest = out_dir(cfg)
    records = run_verification_suite(spec, engine_config(cfg, tau))
    write_verify_report(records, dest / "verify_report.json")
    failed = [r.name for r in records if r.hard and not r.passed]
    print(json.dumps({"checks": len(records), "failed": failed}))
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def cmd_thermo(cfg: dict) -> int:
    spec = make_spec(cfg)
    tau = complex(float(cfg["tau_re"]), float(cfg["tau_im"]))
    dest = out_dir(cfg)
    try:
        rep = thermo_analysis(spec, tau, [int(n) for n in cfg["n_list"]], engine_config(cfg, tau),
                              workers=int(cfg["workers"]))
    except LSChainError as exc:
        print(f"engine failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    data = rep.to_dict()
    data["all_below_majorant"] = rep.all_below_majorant
    _dump(data, dest / "thermo_report.json")
    with open(dest / "thermo.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n_sites", "re_E", "im_E", "re_E_per_site", "im_E_per_site", "decomposition_residual"])
        for n, e, eps, res in zip(rep.n_list, rep.energies, rep.per_site, rep.decomposition_residuals):
            w.writerow([n, fmt(e.real), fmt(e.imag), fmt(eps.real), fmt(eps.imag), fmt(res)])
    hard_ok = max(rep.decomposition_residuals) < 1e-10 and rep.site_independence <= 1e-12
    print(json.dumps({"decomposition_residual": max(rep.decomposition_residuals),
                      "site_independence": rep.site_independence,
                      "all_below_majorant": rep.all_below_majorant}))
    return EXIT_OK if hard_ok else EXIT_CHECK_FAILED


def cmd_estimate_t0(cfg: dict) -> int:
    try:
        est = tau_domain_estimate(delta=float(cfg["delta"]))
    except RootBracketError as exc:
        print(f"root bracketing failed: {exc}", file=sys.stderr)
        return EXIT_BRACKET
    out = {k: v for k, v in est.to_dict().items() if k != "max_seed_weighted_norm"}
    print(json.dumps(out, sort_keys=True))
    return EXIT_OK


_DISPATCH = {
    "run": cmd_run,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "thermo": cmd_thermo,
    "estimate-t0": cmd_estimate_t0,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        return _DISPATCH[args.command](cfg)
    except (ConfigError, LSChainError, ValueError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
