"""Command-line entry point: ``markedhawkes <command> --config FILE``.

Exit codes: 0 success, 1 a statistical verdict failed, 2 configuration
error, 3 numerical error (instability, grid too coarse, blow-up).
Every output file is a deterministic function of the config and seed;
wall-clock data is written only to ``metadata.json``.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import math
import os
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import microbes as mb
from .config import build_experiment, build_model_from_config, load_config
from .errors import ConfigError, HawkesError, InvalidSpec
from .limits import compute_constants
from .montecarlo import run_experiment
from .resolvent import build_table
from .simulate import simulate_path

EXIT_OK, EXIT_STAT, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _clean(o):
    if dataclasses.is_dataclass(o) and not isinstance(o, type):
        return _clean(dataclasses.asdict(o))
    if isinstance(o, dict):
        return {str(k): _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    if isinstance(o, (float, np.floating)):
        return float(o) if math.isfinite(o) else None
    if isinstance(o, np.integer):
        return int(o)
    return o


def _dump(path: Path, obj) -> None:
    path.write_text(json.dumps(_clean(obj), indent=1, sort_keys=True) + "\n")


def _table(doc: dict, spec):
    block = doc.get("resolvent")
    if block is None:
        return None
    return build_table(spec, h=block.get("h", 1e-3), horizon=block.get("horizon"))


def cmd_resolvent(doc, spec, params, args, out: Path) -> int:
    block = doc.get("resolvent", {})
    table = build_table(spec, h=block.get("h", 1e-3), horizon=block.get("horizon"))
    table.write(out / "resolvent")
    return EXIT_OK


def cmd_constants(doc, spec, params, args, out: Path) -> int:
    (out / "constants.json").write_text(compute_constants(spec, _table(doc, spec)).to_json())
    if params is not None:
        _dump(out / "microbes.json", microbe_constants(params))
    return EXIT_OK


def microbe_constants(params: mb.MicrobeParams) -> dict:
    """Every microbe constant that is defined for ``params``."""
    out = {"norms": mb.norms(params), "budding_toxin": mb.budding_toxin_constants(params),
           "progeny": mb.progeny_constants(params)}
    try:
        out["population_integral"] = mb.population_integral_constants(params)
    except InvalidSpec:
        out["population_integral"] = None
    return out


def cmd_microbes(doc, spec, params, args, out: Path) -> int:
    if params is None:
        raise ConfigError("the microbes command needs a 'microbes' block")
    _dump(out / "microbes.json", microbe_constants(params))
    return EXIT_OK


def cmd_simulate(doc, spec, params, args, out: Path) -> int:
    block = doc.get("simulate")
    if block is None:
        raise ConfigError("config has no 'simulate' block")
    d = out / "paths"
    d.mkdir(parents=True, exist_ok=True)
    binary = block.get("format", "csv") == "binary"
    summary = []
    for i in range(block.get("paths", 1)):
        path = simulate_path(spec, block["horizon"], args.seed, path_index=i)
        name = f"path_{i:05d}." + ("bin" if binary else "csv")
        if binary:
            (d / name).write_bytes(path.to_bytes())
        else:
            (d / name).write_text(path.to_csv())
        summary.append({"file": name, "events": len(path), "hawkes": int(path.hawkes_times.size),
                        "immigrants": int(path.immigration_times.size), "acceptance_ratio": path.acceptance_ratio})
    _dump(out / "paths" / "summary.json", summary)
    return EXIT_OK


def _verify(mode: str):
    def cmd(doc, spec, params, args, out: Path) -> int:
        cfg = build_experiment(doc, spec, mode, args.seed, args.threads)
        report = run_experiment(cfg, _table(doc, spec))
        (out / "report.json").write_text(report.to_json())
        (out / "report.csv").write_text(report.to_csv())
        return EXIT_OK if report.passed else EXIT_STAT
    return cmd


COMMANDS = {
    "resolvent": cmd_resolvent,
    "constants": cmd_constants,
    "simulate": cmd_simulate,
    "verify-lln": _verify("lln"),
    "verify-clt": _verify("clt"),
    "microbes": cmd_microbes,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="markedhawkes", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path)
        s.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        s.add_argument("--out", type=Path, default=Path("out"))
        s.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    return p


def _write_metadata(out: Path, args, code: int, started: _dt.datetime) -> None:
    meta = {
        "command": args.command, "config": str(args.config), "seed": args.seed, "threads": args.threads,
        "exit_code": code, "started": started.isoformat(),
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "version": __version__, "python": platform.python_version(), "numpy": np.__version__,
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    started = _dt.datetime.now(_dt.timezone.utc)
    try:
        doc = load_config(args.config)
        if args.seed is None:
            args.seed = doc.get("seed", 0)
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
        spec, params = build_model_from_config(doc, args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    try:
        code = COMMANDS[args.command](doc, spec, params, args, out)
    except (ConfigError, InvalidSpec) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        code = EXIT_CONFIG
    except (HawkesError, ArithmeticError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        code = EXIT_NUMERIC
    _write_metadata(out, args, code, started)
    return code


if __name__ == "__main__":
    sys.exit(main())
