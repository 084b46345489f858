"""Command-line front end: ``python -m bilayer_spectra <command> config.json``.

Exit codes: 0 success, 2 configuration error, 3 computation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .discrete import DiscreteOperator, bs_norm, bs_residual, complex_spectrum, proof_norm
from .enclosure import (TheoremConstants, Thm11Predicate, Thm12Predicate, Thm31Predicate, Window,
                        region_scan)
from .errors import BilayerError
from .harness import TrialConfig, calibrate, run_trial
from .kernels import kernel_bound_probe
from .potentials import GridSpec, build_potential, zero_potential

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE = 0, 2, 3

_NUM = {"type": "number"}
_CONSTANTS = {
    "type": "object",
    "properties": {"c_p": {"type": "number", "exclusiveMinimum": 0},
                   "c_12": {"type": "number", "exclusiveMinimum": 0},
                   "c_31": {"type": "number", "exclusiveMinimum": 0},
                   "provenance": {"enum": ["user", "calibrated"]}},
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "grid": {"type": "object", "required": ["n", "l"], "additionalProperties": False,
                 "properties": {"n": {"type": "integer", "minimum": 1},
                                "l": {"type": "number", "exclusiveMinimum": 0}}},
        "operator": {"type": "object", "additionalProperties": False,
                     "properties": {"m": {"type": "number", "minimum": 0}}},
        "potential": {"type": "object", "required": ["kind"],
                      "properties": {"kind": {"enum": ["zero", "gaussian", "multi_gaussian",
                                                       "random_gaussian", "band_limited", "file"]}}},
        "theorem": {"type": "object", "additionalProperties": False,
                    "properties": {"id": {"enum": ["thm11", "thm12", "thm31"]},
                                   "ids": {"type": "array", "minItems": 1,
                                           "items": {"enum": ["thm11", "thm12", "thm31"]}},
                                   "p": {"type": "number", "exclusiveMinimum": 1,
                                         "exclusiveMaximum": 4.0 / 3.0},
                                   "constants": {"oneOf": [_CONSTANTS, {"type": "string"}]}}},
        "scan": {"type": "object", "required": ["window", "nx", "ny"], "additionalProperties": False,
                 "properties": {"window": {"type": "object",
                                           "required": ["re_min", "re_max", "im_min", "im_max"],
                                           "additionalProperties": False,
                                           "properties": {k: _NUM for k in
                                                          ("re_min", "re_max", "im_min", "im_max")}},
                                "nx": {"type": "integer", "minimum": 2},
                                "ny": {"type": "integer", "minimum": 2},
                                "couplings": {"type": "array", "items": {"type": "number", "minimum": 0}}}},
        "campaign": {"type": "object", "additionalProperties": False,
                     "properties": {"seed": {"type": "integer"},
                                    "seeds": {"type": "array", "items": {"type": "integer"}},
                                    "trials": {"type": "integer", "minimum": 1},
                                    "couplings": {"type": "array", "items": {"type": "number"}},
                                    "m_values": {"type": "array", "items": {"type": "number", "minimum": 0}},
                                    "diagnostics": {"type": "boolean"}}},
        "bsnorm": {"type": "object", "required": ["k"], "additionalProperties": False,
                   "properties": {"k": {"type": "array", "minItems": 1,
                                        "items": {"type": "array", "minItems": 2, "maxItems": 2,
                                                  "items": _NUM}}}},
        "probe": {"type": "object", "additionalProperties": False,
                  "properties": {"theta": {"type": "array", "minItems": 1, "items": _NUM},
                                 "q": _NUM, "n_r": {"type": "integer", "minimum": 8},
                                 "r_min": {"type": "number", "exclusiveMinimum": 0},
                                 "r_max": {"type": "number", "exclusiveMinimum": 0}}},
        "output": {"type": "object", "additionalProperties": False,
                   "properties": {"directory": {"type": "string"},
                                  "formats": {"type": "array", "items": {"type": "string"}}}},
    },
}

REQUIRED = {
    "region": ["theorem", "scan"],
    "eigs": ["grid"],
    "bsnorm": ["grid", "bsnorm"],
    "verify": ["grid", "potential"],
    "calibrate": ["grid", "potential"],
    "kernel-probe": [],
}


class ConfigError(Exception):
    pass


def _load_config(path: str, command: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"invalid config: {exc.message}") from exc
    missing = [s for s in REQUIRED[command] if s not in cfg]
    if missing:
        raise ConfigError(f"command {command!r} needs sections: {', '.join(missing)}")
    return cfg


def _constants(theorem: dict, base: Path) -> TheoremConstants:
    c = theorem.get("constants", {})
    if isinstance(c, str):
        path = Path(c) if Path(c).is_absolute() else base / c
        try:
            c = json.loads(path.read_text())
            jsonschema.validate(c, _CONSTANTS)
        except (OSError, json.JSONDecodeError, jsonschema.ValidationError) as exc:
            raise ConfigError(f"cannot use constants file {path}: {exc}") from exc
    return TheoremConstants.from_dict(c)


def _grid(cfg) -> GridSpec:
    g = cfg.get("grid", {"n": 1, "l": 0.25})
    return GridSpec(int(g["n"]), float(g["l"]))


def _potential(cfg, grid, base: Path):
    spec = dict(cfg.get("potential", {"kind": "zero"}))
    if spec.get("kind") == "file" and not Path(spec["path"]).is_absolute():
        spec["path"] = str(base / spec["path"])
    if spec["kind"] == "zero":
        return zero_potential(grid), spec
    return build_potential(spec, grid), spec


def _seed(cfg, override):
    if override is not None:
        return int(override)
    return int(cfg.get("campaign", {}).get("seed", 0))


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# commands: each receives (cfg, out_dir, args, base) after validation and setup


def _prepare_region(cfg, args, base):
    grid = _grid(cfg)
    V, _ = _potential(cfg, grid, base)
    th = cfg["theorem"]
    consts = _constants(th, base)
    tid = th.get("id", "thm11")
    p = float(th.get("p", 1.2))
    sc = cfg["scan"]
    w = sc["window"]
    window = Window(float(w["re_min"]), float(w["re_max"]), float(w["im_min"]), float(w["im_max"]),
                    int(sc["nx"]), int(sc["ny"]))
    m = float(cfg.get("operator", {}).get("m", 0.0))
    scales = sc.get("couplings")

    def run(out: Path):
        jobs = [(out, 1.0)] if not scales else [(out / f"sweep_{i:02d}", float(t))
                                                 for i, t in enumerate(scales)]
        written = []
        for d, t in jobs:
            Vt = V.scaled(t)
            if tid == "thm11":
                pred = Thm11Predicate.from_potential(Vt, p, consts)
            elif tid == "thm12":
                pred = Thm12Predicate.from_potential(Vt, consts)
            else:
                pred = Thm31Predicate.from_potential(Vt, consts)
            region = region_scan(window, m, pred, workers=args.threads)
            written += list(region.write(d).values())
        return written

    return run


def _prepare_eigs(cfg, args, base):
    grid = _grid(cfg)
    V, _ = _potential(cfg, grid, base)
    m = float(cfg.get("operator", {}).get("m", 0.0))
    diag = cfg.get("campaign", {}).get("diagnostics", True)

    def run(out: Path):
        rep = complex_spectrum(DiscreteOperator(grid, m, V), diagnostics=diag)
        (out / "eigs.csv").write_text(rep.to_csv())
        _write_json(out / "eigs.json", {"count": int(rep.eigenvalues.size),
                                        "outliers": int(rep.outlier_mask.sum()),
                                        "threshold": rep.threshold,
                                        "max_residual": float(rep.residuals.max())})
        return [str(out / "eigs.csv"), str(out / "eigs.json")]

    return run


def _prepare_bsnorm(cfg, args, base):
    grid = _grid(cfg)
    V, _ = _potential(cfg, grid, base)
    m = float(cfg.get("operator", {}).get("m", 0.0))
    ks = [complex(a, b) for a, b in cfg["bsnorm"]["k"]]
    seed = _seed(cfg, args.seed)

    def run(out: Path):
        op = DiscreteOperator(grid, m, V)
        lines = ["re_k,im_k,bs_norm,bs_residual,proof_norm"]
        for k in ks:
            vals = (bs_norm(op, k, seed=seed), bs_residual(op, k), proof_norm(op, k, seed=seed))
            lines.append(",".join([repr(k.real), repr(k.imag)] + [repr(float(v)) for v in vals]))
        (out / "bsnorm.csv").write_text("\n".join(lines) + "\n")
        return [str(out / "bsnorm.csv")]

    return run


def _trial_configs(cfg, args, base):
    grid = _grid(cfg)
    th = cfg.get("theorem", {})
    ids = tuple(th.get("ids", [th.get("id", "thm11")]))
    consts = _constants(th, base)
    camp = cfg.get("campaign", {})
    ms = camp.get("m_values", [cfg.get("operator", {}).get("m", 0.0)])
    spec = dict(cfg["potential"])
    if spec.get("kind") == "file" and not Path(spec["path"]).is_absolute():
        spec["path"] = str(base / spec["path"])
    seed = _seed(cfg, args.seed)
    trials = int(camp.get("trials", 1))
    configs = [TrialConfig(grid, float(m), float(th.get("p", 1.2)), spec, ids, consts,
                           seed + 10000 * i, trials, camp.get("diagnostics", True))
               for i, m in enumerate(ms)]
    # fail early on builder problems
    build_potential(configs[0].trial_builder(0), grid)
    return configs


def _prepare_verify(cfg, args, base):
    configs = _trial_configs(cfg, args, base)

    def run(out: Path):
        written = []
        total = {"violations": 0, "outliers": 0, "failed_trials": 0, "runs": []}
        for i, c in enumerate(configs):
            rep = run_trial(c, workers=args.threads)
            written += rep.write(out / f"m_{i:02d}", c.constants)
            total["violations"] += rep.violations
            total["outliers"] += rep.outlier_count
            total["failed_trials"] += len(rep.failed)
            total["runs"].append({"m": c.m, "directory": f"m_{i:02d}"})
        _write_json(out / "summary.json", total)
        return written + [str(out / "summary.json")]

    return run


def _prepare_calibrate(cfg, args, base):
    configs = _trial_configs(cfg, args, base)

    def run(out: Path):
        consts = calibrate(configs, workers=args.threads)
        _write_json(out / "constants.json", consts.to_dict())
        return [str(out / "constants.json")]

    return run


def _prepare_probe(cfg, args, base):
    pr = cfg.get("probe", {})
    theta = pr.get("theta", [0.0, np.pi / 4, np.pi / 2, 3 * np.pi / 4, np.pi])
    q = float(pr.get("q", 4.5))
    r_grid = np.geomspace(float(pr.get("r_min", 1e-6)), float(pr.get("r_max", 1e3)),
                          int(pr.get("n_r", 400)))

    def run(out: Path):
        rep = kernel_bound_probe(theta, r_grid, q=q, workers=args.threads)
        _write_json(out / "kernel_probe.json", rep.to_dict())
        return [str(out / "kernel_probe.json")]

    return run


COMMANDS = {
    "region": (_prepare_region, "admissibility mask and boundary for one theorem"),
    "eigs": (_prepare_eigs, "dense spectrum of D_m + V with outlier diagnostics"),
    "bsnorm": (_prepare_bsnorm, "Birman-Schwinger norms at given spectral points"),
    "verify": (_prepare_verify, "seeded trial campaign against the enclosure inequalities"),
    "calibrate": (_prepare_calibrate, "calibrate theorem constants on a trial family"),
    "kernel-probe": (_prepare_probe, "empirical constants in the kernel bounds"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bilayer-spectra",
                                     description="Spectral enclosure toolkit for D_m + V.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, helptext) in COMMANDS.items():
        sp = sub.add_parser(name, help=helptext, description=helptext)
        sp.add_argument("config", help="JSON run configuration")
        sp.add_argument("--seed", type=int, default=None, help="override campaign.seed")
        sp.add_argument("--out", default=None, help="override output.directory")
        sp.add_argument("--threads", type=int, default=None,
                        help="worker pool size (default: BILAYER_THREADS or all cores)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads is None and os.environ.get("BILAYER_THREADS"):
        try:
            args.threads = int(os.environ["BILAYER_THREADS"])
        except ValueError:
            print("error: BILAYER_THREADS must be an integer", file=sys.stderr)
            return EXIT_CONFIG
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    prepare, _ = COMMANDS[args.command]
    try:
        cfg = _load_config(args.config, args.command)
        base = Path(args.config).resolve().parent
        runner = prepare(cfg, args, base)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, KeyError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg.get("output", {}).get("directory", "out"))
    try:
        out.mkdir(parents=True, exist_ok=True)
        for path in runner(out):
            print(path)
    except (BilayerError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"computation error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
