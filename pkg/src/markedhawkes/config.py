"""Experiment configuration files.

A config is a YAML document with exactly one of ``model`` or ``microbes``
plus optional ``resolvent``, ``simulate`` and ``experiment`` blocks.  It is
validated against a JSON schema before anything is built; unknown keys are
errors.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any

import jsonschema
import yaml

from . import microbes as mb
from .errors import ConfigError, InvalidSpec
from .model import (
    BoxcarKernel, ConstantMu0, DiscreteMarks, ExponentialKernel, ExponentialMu0, HumpKernel, ModelSpec,
    PowerKernel, SaturatingShot, UnitStepShot, WindowShot, ZeroMu0, stationary_mu0,
)
from .montecarlo import Checks, ExperimentConfig, Functional, KINDS

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_PARAM = {"oneOf": [_NUM, {"type": "array", "items": _NUM, "minItems": 1}]}
_PROBS = {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1}


def _family(name: str, props: dict, required=()) -> dict:
    return {
        "type": "object",
        "properties": {"family": {"const": name}, **props},
        "required": ["family", *required],
        "additionalProperties": False,
    }


KERNEL_SCHEMA = {"oneOf": [
    _family("exponential", {"a": _PARAM, "b": _PARAM}, ["a"]),
    _family("power", {"a": _PARAM, "b": _PARAM, "p": _PARAM}, ["a"]),
    _family("boxcar", {"a": _PARAM, "y": _PARAM}, ["a"]),
    _family("hump", {"a": _PARAM, "b": _PARAM}, ["a"]),
    _family("zero", {}),
]}
MU0_SCHEMA = {"oneOf": [
    _family("zero", {}),
    _family("constant", {"c": _NUM}, ["c"]),
    _family("exponential", {"c": _NUM, "b": _POS}, ["c"]),
    _family("stationary", {}),
]}
SHOT_SCHEMA = {"oneOf": [
    _family("unit", {"c": _PARAM}),
    _family("saturating", {"c": _PARAM, "r": _PARAM}),
    _family("window", {"c": _PARAM, "w": _PARAM}),
    _family("zero", {}),
]}
MODEL_SCHEMA = {
    "type": "object",
    "properties": {
        "lambda_I": _POS,
        "nu_H": _PROBS,
        "nu_I": _PROBS,
        "kernel": KERNEL_SCHEMA,
        "mu0": MU0_SCHEMA,
        "shot": SHOT_SCHEMA,
        "alpha": _NUM, "theta0": _NUM, "theta1": _NUM,
    },
    "required": ["lambda_I", "kernel"],
    "additionalProperties": False,
}
LIFE_SCHEMA = {"oneOf": [
    _family("exponential", {"mean": _POS}),
    _family("uniform", {"a": _NUM, "b": _NUM}, ["b"]),
    _family("point", {"y": _POS}, ["y"]),
]}
BUDDING_SCHEMA = {"oneOf": [
    _family("boxcar", {"c": _NUM}, ["c"]),
    _family("decay", {"c": _NUM, "r": _POS}, ["c"]),
    _family("hump", {"c": _NUM, "r": _POS}, ["c"]),
]}
TOXIN_SCHEMA = {"oneOf": [
    _family("unit", {}),
    _family("population_integral", {}),
    _family("rate", {"r": _NUM, "kappa": _NUM}),
    _family("death_release", {"theta": _NUM}),
]}
MICROBES_SCHEMA = {
    "type": "object",
    "properties": {
        "p_H": _PROBS, "p_I": _PROBS,
        "life": LIFE_SCHEMA, "life_H": LIFE_SCHEMA, "life_I": LIFE_SCHEMA,
        "gamma": BUDDING_SCHEMA, "gamma_H": BUDDING_SCHEMA, "gamma_I": BUDDING_SCHEMA,
        "toxin": TOXIN_SCHEMA, "toxin_I": TOXIN_SCHEMA,
        "lambda_I": _POS,
        "ancestors": {"type": "array", "items": _POS},
        "warm_start": {"type": "boolean"},
        "alpha": _NUM, "theta0": _NUM, "theta1": _NUM,
        "integration_samples": {"type": "integer", "minimum": 2},
    },
    "required": ["p_H", "p_I"],
    "additionalProperties": False,
}
CHECKS_SCHEMA = {
    "type": "object",
    "properties": {
        "variance_rel_tol": {"type": ["number", "null"]},
        "cov_pair": {"oneOf": [{"type": "null"}, {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}]},
        "cov_rel_tol": {"type": ["number", "null"]},
        "ks_alpha": {"type": ["number", "null"]},
        "drift_se": {"type": ["number", "null"]},
    },
    "additionalProperties": False,
}
FUNCTIONAL_SCHEMA = {
    "type": "object",
    "properties": {
        "kind": {"enum": list(KINDS)},
        "atom": {"type": "integer", "minimum": 0},
        "weights": {"type": "array", "items": _NUM},
        "checks": CHECKS_SCHEMA,
        "reference_variance": _NUM,
    },
    "required": ["kind"],
    "additionalProperties": False,
}
SCHEMA = {
    "type": "object",
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "model": MODEL_SCHEMA,
        "microbes": MICROBES_SCHEMA,
        "resolvent": {
            "type": "object",
            "properties": {"h": _POS, "horizon": _POS},
            "additionalProperties": False,
        },
        "simulate": {
            "type": "object",
            "properties": {"horizon": _POS, "paths": {"type": "integer", "minimum": 1},
                           "format": {"enum": ["csv", "binary"]}},
            "required": ["horizon"],
            "additionalProperties": False,
        },
        "experiment": {
            "type": "object",
            "properties": {
                "T": {"type": "array", "items": _POS, "minItems": 1},
                "replicas": {"type": "integer", "minimum": 2},
                "grid": {"type": "array", "items": _NUM, "minItems": 1},
                "functionals": {"type": "array", "items": FUNCTIONAL_SCHEMA, "minItems": 1},
            },
            "required": ["T", "replicas", "functionals"],
            "additionalProperties": False,
        },
    },
    "oneOf": [{"required": ["model"]}, {"required": ["microbes"]}],
    "additionalProperties": False,
}


def validate_config(doc: Any) -> dict:
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    return doc


def load_config(path) -> dict:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return validate_config(doc)


def _param(v):
    return tuple(v) if isinstance(v, list) else v


def _kernel(block: dict):
    fam = block["family"]
    kw = {k: _param(v) for k, v in block.items() if k != "family"}
    if fam == "zero":
        return ExponentialKernel(a=0.0, b=1.0)
    return {"exponential": ExponentialKernel, "power": PowerKernel, "boxcar": BoxcarKernel, "hump": HumpKernel}[fam](**kw)


def _shot(block: dict | None):
    if block is None:
        return None
    fam = block["family"]
    kw = {k: _param(v) for k, v in block.items() if k != "family"}
    if fam == "zero":
        return UnitStepShot(c=0.0)
    return {"unit": UnitStepShot, "saturating": SaturatingShot, "window": WindowShot}[fam](**kw)


def build_spec(block: dict) -> ModelSpec:
    """ModelSpec from a validated ``model`` block."""
    try:
        nu_H = DiscreteMarks(tuple(block.get("nu_H", [1.0])))
        nu_I = DiscreteMarks(tuple(block.get("nu_I", block.get("nu_H", [1.0]))))
        mu0_block = block.get("mu0", {"family": "zero"})
        fam = mu0_block["family"]
        mu0 = {"zero": lambda: ZeroMu0(), "stationary": lambda: ZeroMu0(),
               "constant": lambda: ConstantMu0(mu0_block["c"]),
               "exponential": lambda: ExponentialMu0(mu0_block["c"], mu0_block.get("b", 1.0))}[fam]()
        extra = {k: block[k] for k in ("alpha", "theta0", "theta1") if k in block}
        spec = ModelSpec(lambda_I=block["lambda_I"], nu_I=nu_I, nu_H=nu_H, kernel=_kernel(block["kernel"]),
                         mu0=mu0, shot=_shot(block.get("shot")), **extra)
        if fam == "stationary":
            spec = spec.replace(mu0=stationary_mu0(spec))
        return spec
    except InvalidSpec as exc:
        raise ConfigError(f"model block rejected: {exc}") from None


_LIFE = {"exponential": mb.ExponentialLife, "uniform": mb.UniformLife, "point": mb.PointLife}
_BUD = {"boxcar": mb.BoxcarBudding, "decay": mb.DecayBudding, "hump": mb.HumpBudding}
_TOX = {"unit": mb.UnitToxin, "population_integral": mb.PopulationIntegralToxin,
        "rate": mb.RateToxin, "death_release": mb.DeathReleaseToxin}


def _fam(table: dict, block: dict):
    return table[block["family"]](**{k: v for k, v in block.items() if k != "family"})


def build_microbes(block: dict, seed: int = 0) -> mb.MicrobeParams:
    """MicrobeParams from a validated ``microbes`` block."""
    def pick(name):
        b = block.get(f"{name}_H"), block.get(f"{name}_I"), block.get(name)
        if b[0] is None and b[2] is None or b[1] is None and b[2] is None:
            raise ConfigError(f"microbes block needs '{name}' or both '{name}_H' and '{name}_I'")
        return b[0] or b[2], b[1] or b[2]

    try:
        lH, lI = pick("life")
        gH, gI = pick("gamma")
        return mb.MicrobeParams(
            p_H=tuple(block["p_H"]), p_I=tuple(block["p_I"]),
            life_H=_fam(_LIFE, lH), life_I=_fam(_LIFE, lI),
            gamma_H=_fam(_BUD, gH), gamma_I=_fam(_BUD, gI),
            toxin=_fam(_TOX, block.get("toxin", {"family": "unit"})),
            toxin_I=_fam(_TOX, block["toxin_I"]) if "toxin_I" in block else None,
            lambda_I=block.get("lambda_I", 1.0), ancestors=tuple(block.get("ancestors", ())),
            alpha=block.get("alpha", 2.0), theta0=block.get("theta0", 2.0), theta1=block.get("theta1", 2.0),
            integration_samples=block.get("integration_samples", 100_000), seed=seed,
        )
    except (InvalidSpec, TypeError) as exc:
        raise ConfigError(f"microbes block rejected: {exc}") from None


def build_model_from_config(doc: dict, seed: int = 0) -> tuple[ModelSpec, mb.MicrobeParams | None]:
    if "model" in doc:
        return build_spec(doc["model"]), None
    params = build_microbes(doc["microbes"], seed)
    spec = mb.build_model(params)
    if doc["microbes"].get("warm_start"):
        try:
            spec = spec.replace(mu0=stationary_mu0(spec))
        except InvalidSpec as exc:
            raise ConfigError(f"warm_start unavailable: {exc}") from None
    return spec, params


def build_experiment(doc: dict, spec: ModelSpec, mode: str, seed: int, workers: int) -> ExperimentConfig:
    if "experiment" not in doc:
        raise ConfigError("config has no 'experiment' block")
    e = doc["experiment"]
    fns, checks, overrides = [], {}, {}
    for f in e["functionals"]:
        fn = Functional(f["kind"], atom=f.get("atom"), weights=tuple(f["weights"]) if "weights" in f else None)
        if fn.kind.startswith("shot") and spec.shot is None:
            raise ConfigError(f"functional {fn.kind} needs a shot shape in the model")
        fns.append(fn)
        if "checks" in f:
            c = dict(f["checks"])
            if c.get("cov_pair") is not None:
                c["cov_pair"] = tuple(c["cov_pair"])
            checks[fn.name] = Checks(**c)
        if "reference_variance" in f:
            overrides[fn.name] = f["reference_variance"]
    try:
        return ExperimentConfig(
            spec=spec, T_list=tuple(float(t) for t in e["T"]), replicas=e["replicas"],
            grid=tuple(e.get("grid", (0.25, 0.5, 0.75, 1.0))), functionals=tuple(fns), seed=seed,
            mode=mode, checks=checks, reference_override=overrides, workers=workers,
        )
    except ValueError as exc:
        raise ConfigError(f"experiment block rejected: {exc}") from None
