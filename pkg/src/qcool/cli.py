"""Command-line experiment runner.

Subcommands: chain, grover, factor, circuit, sweep.  Common flags:
--config <json>, --out <dir>, --seed <u64>, --threads <n>.  Flags override
config-file values; every run writes summary.json embedding the fully
resolved configuration, and re-running with --config summary.json reproduces
the CSV outputs byte for byte.

Exit codes: 0 success, 2 validation error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import jsonschema

from . import __version__
from .experiments import (
    chain_experiment,
    circuit_experiment,
    factor_experiment,
    grover_experiment,
)
from .problems import CompiledCircuit
from .protocol import (
    initial_state_from_json,
    write_ensemble_csv,
    write_trajectory_csv,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_RUNTIME = 3

GROVER_QUBIT_LIMIT = 14

_COMMON_PROPS = {
    "experiment": {"type": "string"},
    "seed": {"type": "integer", "minimum": 0},
    "threads": {"type": "integer", "minimum": 1},
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["experiment", "params"],
    "properties": {
        **_COMMON_PROPS,
        "params": {"type": "object"},
    },
    "allOf": [
        {
            "if": {"properties": {"experiment": {"const": "chain"}}},
            "then": {
                "properties": {
                    "params": {
                        "type": "object",
                        "required": ["profile", "n_values", "lambda"],
                        "properties": {
                            "profile": {"enum": ["flat", "triangle"]},
                            "n_values": {
                                "type": "array",
                                "items": {"type": "integer", "minimum": 2},
                                "minItems": 1,
                            },
                            "lambda": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                        },
                    }
                }
            },
        },
        {
            "if": {"properties": {"experiment": {"const": "grover"}}},
            "then": {
                "properties": {
                    "params": {
                        "type": "object",
                        "required": ["n_list", "n0_list", "lambda"],
                        "properties": {
                            "n_list": {
                                "type": "array",
                                "items": {"type": "integer", "minimum": 2, "maximum": GROVER_QUBIT_LIMIT},
                                "minItems": 1,
                            },
                            "n0_list": {
                                "type": "array",
                                "items": {"type": "integer", "minimum": 1},
                                "minItems": 1,
                            },
                            "lambda": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                        },
                    }
                }
            },
        },
        {
            "if": {"properties": {"experiment": {"const": "factor"}}},
            "then": {
                "properties": {
                    "params": {
                        "type": "object",
                        "required": ["target", "alpha0"],
                        "properties": {
                            "target": {"type": "integer", "minimum": 1, "maximum": 63},
                            "alpha0": {"enum": [0, 1]},
                            "lambda": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                            "modes": {"type": "integer", "minimum": 1, "maximum": 6},
                            "samples": {"type": "integer", "minimum": 1},
                            "cycles": {"type": "integer", "minimum": 1},
                            "quiet_stop": {"type": "integer", "minimum": 0},
                            "duration": {"type": "number", "exclusiveMinimum": 0},
                            "method": {"enum": ["auto", "batched", "per-trajectory"]},
                            "initial_state": {"type": "object"},
                            "sample_trajectories": {"type": "integer", "minimum": 0},
                        },
                    }
                }
            },
        },
        {
            "if": {"properties": {"experiment": {"const": "circuit"}}},
            "then": {
                "properties": {
                    "params": {
                        "type": "object",
                        "required": ["circuit", "lambda"],
                        "properties": {
                            "circuit": {
                                "type": "object",
                                "required": ["n_qubits", "gates"],
                                "properties": {
                                    "n_qubits": {"type": "integer", "minimum": 1},
                                    "gates": {
                                        "type": "array",
                                        "minItems": 1,
                                        "items": {
                                            "type": "object",
                                            "required": ["gate", "targets"],
                                            "properties": {
                                                "gate": {"type": "string"},
                                                "targets": {
                                                    "type": "array",
                                                    "items": {"type": "integer", "minimum": 0},
                                                },
                                            },
                                        },
                                    },
                                },
                            },
                            "lambda": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                            "max_cycles": {"type": "integer", "minimum": 1},
                        },
                    }
                }
            },
        },
        {
            "if": {"properties": {"experiment": {"const": "sweep"}}},
            "then": {
                "properties": {
                    "params": {
                        "type": "object",
                        "required": ["runs"],
                        "properties": {
                            "runs": {"type": "array", "minItems": 1, "items": {"type": "object"}},
                        },
                    }
                }
            },
        },
    ],
}


class ConfigError(ValueError):
    """Configuration failed schema or semantic validation."""


def validate_config(cfg: dict) -> dict:
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config validation failed: {exc.message}") from exc
    if cfg["experiment"] not in ("chain", "grover", "factor", "circuit", "sweep"):
        raise ConfigError(f"unknown experiment {cfg['experiment']!r}")
    return cfg


def load_config_file(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    # a previous run's summary can be replayed directly
    if "resolved_config" in doc:
        doc = doc["resolved_config"]
    return doc


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_summary(outdir: Path, resolved: dict, results: dict, outputs) -> Path:
    path = outdir / "summary.json"
    doc = {
        "tool": "qcool",
        "version": __version__,
        "resolved_config": resolved,
        "results": results,
        "outputs": sorted(str(p.name) for p in outputs),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# ---------------------------------------------------------------------------
# subcommand drivers
# ---------------------------------------------------------------------------

def cmd_chain(resolved: dict, outdir: Path) -> dict:
    p = resolved["params"]
    result = chain_experiment(p["profile"], p["n_values"], p["lambda"])
    outputs = []
    for curve in result["curves"]:
        path = outdir / f"chain_{curve.profile}_n{curve.n}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tau", "population"])
            for t, v in zip(curve.tau, curve.population):
                writer.writerow([_fmt(t), _fmt(v)])
        outputs.append(path)
    summary = {
        "collapse_metric": result["collapse"],
        "predictions": result["predictions"],
        "peak_populations": {
            str(c.n): float(c.population.max()) for c in result["curves"]
        },
    }
    outputs.append(_write_summary(outdir, resolved, summary, outputs))
    return summary


def cmd_grover(resolved: dict, outdir: Path) -> dict:
    p = resolved["params"]
    if max(p["n_list"]) > GROVER_QUBIT_LIMIT:
        raise ConfigError(f"n_list exceeds the desk-scale cap {GROVER_QUBIT_LIMIT}")
    result = grover_experiment(p["n_list"], p["n0_list"], p["lambda"])
    path = outdir / "grover_rates.csv"
    cols = [
        "n_qubits",
        "n_solutions",
        "rate_exact",
        "rate_paper_approx",
        "t_predicted",
        "t_measured",
        "rel_error",
        "detection_probability",
        "marked_fraction_given_detection",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in result["rows"]:
            writer.writerow(
                [row["n_qubits"], row["n_solutions"]] + [_fmt(row[c]) for c in cols[2:]]
            )
    summary = {
        "rows": result["rows"],
        "scaling": result["scaling"],
        "worst_rel_error": max(r["rel_error"] for r in result["rows"]),
        "min_detection_probability": min(
            r["detection_probability"] for r in result["rows"]
        ),
    }
    outputs = [path, _write_summary(outdir, resolved, summary, [path])]
    return summary


def cmd_factor(resolved: dict, outdir: Path) -> dict:
    p = resolved["params"]
    initial = (
        initial_state_from_json(p["initial_state"])
        if "initial_state" in p
        else ("random-basis",)
    )
    result = factor_experiment(
        target=p["target"],
        alpha0=p["alpha0"],
        lam=p.get("lambda", 0.1),
        n_modes=p.get("modes", 3),
        samples=p.get("samples", 100),
        cycles=p.get("cycles", 400),
        seed=resolved["seed"],
        threads=resolved.get("threads", 1),
        method=p.get("method", "auto"),
        quiet_cycles_to_stop=p.get("quiet_stop", 0),
        initial_state=initial,
        cycle_duration=p.get("duration"),
    )
    outputs = []
    ens_path = outdir / "ensemble.csv"
    write_ensemble_csv(ens_path, result["stats"])
    outputs.append(ens_path)
    n_dump = min(p.get("sample_trajectories", 5), len(result["trajectories"]))
    for i in range(n_dump):
        path = outdir / f"trajectory_{i:03d}.csv"
        write_trajectory_csv(path, result["trajectories"][i])
        outputs.append(path)
    touch_path = outdir / "touch_fraction.csv"
    with open(touch_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["cycle", "touched_ground_fraction"])
        for i, v in enumerate(result["touch_fraction"]):
            writer.writerow([i, _fmt(v)])
    outputs.append(touch_path)
    summary = {
        "target": result["target"],
        "alpha0": result["alpha0"],
        "lambda": result["lambda"],
        "n_samples": int(result["stats"].n_samples),
        "final_mean_energy": result["final_mean_energy"],
        "final_touch_fraction": float(result["touch_fraction"][-1]),
        "cycles_to_80pct": result["cycles_to_80pct"],
        "trajectory_seeds": [int(t.seed) for t in result["trajectories"][:n_dump]],
    }
    outputs.append(_write_summary(outdir, resolved, summary, outputs))
    return summary


def cmd_circuit(resolved: dict, outdir: Path) -> dict:
    p = resolved["params"]
    circuit = CompiledCircuit.from_json(p["circuit"])
    result = circuit_experiment(
        circuit,
        lam=p["lambda"],
        seed=resolved["seed"],
        max_cycles=p.get("max_cycles"),
    )
    path = outdir / "clock_populations.csv"
    T = result["n_steps"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["cycle", "detected"] + [f"clock_{t}" for t in range(T + 1)]
        )
        for rec in result["records"]:
            writer.writerow(
                [rec["cycle"], rec["detected"]]
                + [_fmt(v) for v in rec["clock_populations"]]
            )
    summary = {
        "n_steps": T,
        "lambda": result["lambda"],
        "fidelity": result["fidelity"],
        "total_cycles": result["total_cycles"],
        "detections": result["detections"],
        "heating_events": result["heating_events"],
        "reached_final_clock": result["reached_final_clock"],
    }
    outputs = [path, _write_summary(outdir, resolved, summary, [path])]
    return summary


def cmd_sweep(resolved: dict, outdir: Path) -> dict:
    run_summaries = []
    for i, sub in enumerate(resolved["params"]["runs"]):
        sub = dict(sub)
        sub.setdefault("seed", resolved["seed"])
        sub.setdefault("threads", resolved.get("threads", 1))
        validate_config(sub)
        subdir = outdir / f"run_{i:03d}"
        subdir.mkdir(parents=True, exist_ok=True)
        run_summaries.append(
            {"run": i, "experiment": sub["experiment"], "results": _DISPATCH[sub["experiment"]](sub, subdir)}
        )
    summary = {"runs": run_summaries}
    _write_summary(outdir, resolved, summary, [])
    return summary


_DISPATCH = {
    "chain": cmd_chain,
    "grover": cmd_grover,
    "factor": cmd_factor,
    "circuit": cmd_circuit,
    "sweep": cmd_sweep,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _int_list(text: str):
    return [int(x) for x in text.split(",") if x]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qcool",
        description="Cavity-cooling simulator for combinatorial problem Hamiltonians",
    )
    parser.add_argument("--version", action="version", version=f"qcool {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", type=Path, help="JSON config or prior summary.json")
        sp.add_argument("--out", type=Path, default=Path("qcool-out"))
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=None)

    sp = sub.add_parser("chain", help="chain transfer curves and collapse metric")
    common(sp)
    sp.add_argument("--profile", choices=["flat", "triangle"])
    sp.add_argument("--n", type=_int_list, metavar="N1,N2,...", dest="n_values")
    sp.add_argument("--lambda", dest="lam", type=float)

    sp = sub.add_parser("grover", help="search transfer-time scan")
    common(sp)
    sp.add_argument("--n-list", type=_int_list, metavar="N1,N2,...")
    sp.add_argument("--n0-list", type=_int_list, metavar="K1,K2,...")
    sp.add_argument("--lambda", dest="lam", type=float)

    sp = sub.add_parser("factor", help="factoring cooling ensemble")
    common(sp)
    sp.add_argument("--z", type=int, dest="target")
    sp.add_argument("--alpha0", type=int, choices=[0, 1])
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--modes", type=int)
    sp.add_argument("--samples", type=int)
    sp.add_argument("--cycles", type=int)
    sp.add_argument("--quiet-stop", type=int)
    sp.add_argument("--duration", type=float)
    sp.add_argument("--method", choices=["auto", "batched", "per-trajectory"])

    sp = sub.add_parser("circuit", help="compiled-circuit cooling cascade")
    common(sp)
    sp.add_argument("--file", type=Path, help="circuit JSON file")
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--max-cycles", type=int)

    sp = sub.add_parser("sweep", help="run a batch of experiments from a config")
    common(sp)
    return parser


_DEFAULTS = {
    "chain": {"profile": "flat", "n_values": [2, 3, 4, 5, 6], "lambda": 0.1},
    "grover": {"n_list": [4, 6, 8, 10], "n0_list": [1], "lambda": 0.0025},
    "factor": {"target": 35, "alpha0": 1, "lambda": 0.1, "modes": 3,
               "samples": 100, "cycles": 400},
    "circuit": {"lambda": 0.02},
    "sweep": {},
}


def resolve_config(args) -> dict:
    """Merge precedence: flags > config file > defaults."""
    file_cfg = load_config_file(args.config) if args.config else {}
    if file_cfg and file_cfg.get("experiment") not in (None, args.command):
        raise ConfigError(
            f"config file is for experiment {file_cfg.get('experiment')!r}, "
            f"but the {args.command} subcommand was invoked"
        )
    params = dict(_DEFAULTS[args.command])
    params.update(file_cfg.get("params", {}))

    flag_map = {
        "chain": {"profile": "profile", "n_values": "n_values", "lam": "lambda"},
        "grover": {"n_list": "n_list", "n0_list": "n0_list", "lam": "lambda"},
        "factor": {"target": "target", "alpha0": "alpha0", "lam": "lambda",
                   "modes": "modes", "samples": "samples", "cycles": "cycles",
                   "quiet_stop": "quiet_stop", "duration": "duration",
                   "method": "method"},
        "circuit": {"lam": "lambda", "max_cycles": "max_cycles"},
        "sweep": {},
    }
    for attr, key in flag_map[args.command].items():
        value = getattr(args, attr, None)
        if value is not None:
            params[key] = value
    if args.command == "circuit" and getattr(args, "file", None):
        with open(args.file) as fh:
            params["circuit"] = json.load(fh)

    resolved = {
        "experiment": args.command,
        "seed": args.seed if args.seed is not None else file_cfg.get("seed", 1),
        "threads": args.threads if args.threads is not None else file_cfg.get("threads", 1),
        "params": params,
    }
    return validate_config(resolved)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        resolved = resolve_config(args)
    except (ConfigError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        outdir = args.out
        outdir.mkdir(parents=True, exist_ok=True)
        results = _DISPATCH[args.command](resolved, outdir)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001 - runtime failures map to exit 3
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    brief = {k: v for k, v in results.items() if not isinstance(v, (list, dict))}
    print(json.dumps({"experiment": args.command, **brief}, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
