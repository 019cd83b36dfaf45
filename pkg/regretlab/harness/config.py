#!/usr/bin/env python3
"""
Experiment configuration.

Provides:
- ExperimentKind / AHatRule: what a run computes and how a_hat is chosen
- ExperimentConfig: frozen description of one run
- parse_prior: prior spec strings, registry names and JSON objects
- load_config / config_from_dict: JSON (schema 1) with field-level diagnostics
- CONFIG_SCHEMA: the accepted JSON fields
"""

import json
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
from decologr import Logger as log

from regretlab.core.blindest import EstimatorKind, GainEstimator
from regretlab.core.model import InputDistribution, registered_priors
from regretlab.core.numerics import QuadratureSpec
from regretlab.errors import ConfigInvalidError, RegretLabError

SCHEMA_VERSION = 1

FIG2_GRID = (0.05, 3.0, 0.005)


class ExperimentKind(Enum):
    """What a run computes per grid row"""

    BOUNDS = "bounds"
    TRADEOFF = "tradeoff"
    FIG2 = "fig2"
    EFFICIENCY = "efficiency"
    REGRET_SWEEP = "regret-sweep"


class AHatKind(Enum):
    """How the mismatched gain is derived from the true one"""

    FIXED_OFFSET = "fixed-offset"
    RELATIVE_OFFSET = "relative-offset"
    FROM_ESTIMATOR = "from-estimator"


@dataclass(frozen=True)
class AHatRule:
    """
    Mismatched-gain rule.

    :param kind: fixed-offset (a + d), relative-offset (a (1 + e)) or from-estimator
    :param offsets: d or e values, one row variant each
    :param estimator: Gain estimator for from-estimator
    :param n: Block length for from-estimator; n - 1 outputs per estimate
    """

    kind: AHatKind = AHatKind.RELATIVE_OFFSET
    offsets: Tuple[float, ...] = (1e-2,)
    estimator: Optional[GainEstimator] = None
    n: int = 1000

    def variants(self, trials: int) -> int:
        """Rows per grid point."""
        if self.kind is AHatKind.FROM_ESTIMATOR:
            return trials
        return len(self.offsets)

    def a_hat(self, a: float, variant: int) -> float:
        offset = self.offsets[variant]
        if self.kind is AHatKind.FIXED_OFFSET:
            return a + offset
        return a * (1.0 + offset)

    def to_dict(self) -> dict:
        result: Dict[str, Any] = {"kind": self.kind.value}
        if self.kind is AHatKind.FROM_ESTIMATOR:
            result["estimator"] = self.estimator.to_dict() if self.estimator else None
            result["n"] = self.n
        else:
            result["offsets"] = list(self.offsets)
        return result


@dataclass(frozen=True)
class ExperimentConfig:
    """
    One declarative experiment.

    :param kind: Experiment kind
    :param prior: Input prior
    :param noise_var: Noise variance
    :param a_grid: True gains, all > 0, in row order
    :param a_hat_rule: Mismatched-gain rule
    :param experiment_id: Identifier echoed in every row
    :param trials: Monte Carlo trials (efficiency, from-estimator)
    :param seed: Base seed; per-row seeds are derived from it
    :param quadrature: Quadrature settings
    :param slack_coefficient: c in slack = c |a_hat - a| / a
    :param workers: Work pool size (default: CPU count capped by REGRETLAB_THREADS)
    :param output_csv: CSV destination
    :param output_json: JSON destination
    """

    kind: ExperimentKind
    prior: InputDistribution
    noise_var: float
    a_grid: Tuple[float, ...]
    a_hat_rule: AHatRule = field(default_factory=AHatRule)
    experiment_id: str = "experiment"
    trials: int = 1
    seed: int = 0
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    slack_coefficient: float = 1.0
    workers: Optional[int] = None
    output_csv: Optional[str] = None
    output_json: Optional[str] = None

    def __post_init__(self):
        diagnostics = validate(self)
        if diagnostics:
            raise ConfigInvalidError(diagnostics)

    @property
    def row_count(self) -> int:
        if self.kind in (ExperimentKind.BOUNDS, ExperimentKind.REGRET_SWEEP):
            return len(self.a_grid) * self.a_hat_rule.variants(self.trials)
        return len(self.a_grid)

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "id": self.experiment_id,
            "kind": self.kind.value,
            "prior": self.prior.describe(),
            "noise_var": self.noise_var,
            "a_grid": list(self.a_grid),
            "a_hat_rule": self.a_hat_rule.to_dict(),
            "trials": self.trials,
            "seed": self.seed,
            "quadrature": self.quadrature.to_dict(),
            "slack_coefficient": self.slack_coefficient,
            "workers": self.workers,
            "output": {"csv": self.output_csv, "json": self.output_json},
        }


CONFIG_SCHEMA: Dict[str, Any] = {
    "schema": {"type": "integer", "const": SCHEMA_VERSION, "required": True},
    "id": {"type": "string", "default": "experiment"},
    "kind": {"type": "string", "enum": [k.value for k in ExperimentKind], "required": True},
    "prior": {
        "type": "string | object",
        "required": True,
        "description": "registry name (" + ", ".join(registered_priors()) + "), "
        "'gaussian:MEAN,VAR', 'mixture:W,M,V;W,M,V;...', 'discrete:P,X;P,X;...', "
        "or an object as written by InputDistribution.to_dict",
    },
    "noise_var": {"type": "number", "exclusiveMinimum": 0, "description": "exclusive with snr_db"},
    "snr_db": {"type": "number", "description": "sets noise_var = var(X) / 10^(snr_db/10)"},
    "a_grid": {
        "type": "array | object",
        "required": True,
        "description": "list of gains > 0, or {start, stop, step}",
    },
    "a_hat_rule": {
        "type": "object",
        "properties": {
            "kind": {"enum": [k.value for k in AHatKind]},
            "offsets": {"type": "array", "items": "number"},
            "estimator": {"enum": [k.value for k in EstimatorKind]},
            "bracket": {"type": "array", "items": "number", "minItems": 2, "maxItems": 2},
            "tol": {"type": "number", "exclusiveMinimum": 0},
            "n": {"type": "integer", "minimum": 2},
        },
    },
    "trials": {"type": "integer", "minimum": 1, "default": 1},
    "seed": {"type": "integer", "default": 0},
    "workers": {"type": "integer", "minimum": 1},
    "slack_coefficient": {"type": "number", "minimum": 0, "default": 1.0},
    "quadrature": {
        "type": "object",
        "properties": {
            "method": {"enum": ["gauss-hermite", "adaptive-simpson"]},
            "rel_tol": {"type": "number"},
            "abs_tol": {"type": "number"},
            "max_subdivisions": {"type": "integer"},
            "gh_order": {"type": "integer"},
            "tail_sigmas": {"type": "number"},
        },
    },
    "output": {"type": "object", "properties": {"csv": {"type": "string"}, "json": {"type": "string"}}},
}


def schema_text() -> str:
    return json.dumps(CONFIG_SCHEMA, indent=2)


def _numbers(text: str, expected: int, where: str) -> List[float]:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != expected:
        raise ValueError(f"{where}: expected {expected} comma-separated numbers, got {text!r}")
    return [float(p) for p in parts]


def parse_prior(spec: Union[str, Dict[str, Any]]) -> InputDistribution:
    """
    Build a prior from a registry name, a spec string or a JSON object.

    :param spec: e.g. "bpsk", "gaussian:0,1", "mixture:0.5,-1,0.5;0.5,1,0.5", "discrete:0.5,-1;0.5,1"
    :return: InputDistribution
    :raises ValueError: malformed spec
    """
    if isinstance(spec, dict):
        kind = spec.get("kind")
        if kind == "gaussian":
            return InputDistribution.gaussian(spec.get("mean", 0.0), spec.get("var", 1.0))
        if kind in ("gaussian-mixture", "mixture"):
            return InputDistribution.mixture(tuple(c) for c in spec["components"])
        if kind == "discrete":
            return InputDistribution.discrete(tuple(a) for a in spec["atoms"])
        raise ValueError(f"Unknown prior kind {kind!r}")

    text = str(spec).strip()
    registry = registered_priors()
    if text in registry:
        return registry[text]
    kind, sep, body = text.partition(":")
    if not sep:
        raise ValueError(f"Unknown prior {text!r}; registry has {', '.join(registry)}")
    items = [item for item in body.split(";") if item.strip()]
    if kind == "gaussian":
        mean, var = _numbers(body, 2, "gaussian")
        return InputDistribution.gaussian(mean, var)
    if kind == "mixture":
        return InputDistribution.mixture(tuple(_numbers(item, 3, "mixture")) for item in items)
    if kind == "discrete":
        return InputDistribution.discrete(tuple(_numbers(item, 2, "discrete")) for item in items)
    raise ValueError(f"Unknown prior kind {kind!r}")


def expand_grid(start: float, stop: float, step: float) -> Tuple[float, ...]:
    """start, start + step, ... up to stop inclusive, rounded to 12 decimals."""
    if not step > 0 or stop < start:
        raise ValueError(f"Bad grid start={start} stop={stop} step={step}")
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(float(v) for v in np.round(start + step * np.arange(count), 12))


def _writable(path: str) -> bool:
    parent = Path(path).expanduser().resolve().parent
    return parent.is_dir() and os.access(parent, os.W_OK)


def validate(config: ExperimentConfig) -> List[str]:
    """Field-level diagnostics for a constructed config; empty when valid."""
    diagnostics = []
    if not (math.isfinite(config.noise_var) and config.noise_var > 0):
        diagnostics.append(f"noise_var: must be > 0, got {config.noise_var}")
    if not config.a_grid:
        diagnostics.append("a_grid: must not be empty")
    bad = [a for a in config.a_grid if not (math.isfinite(a) and a > 0)]
    if bad:
        diagnostics.append(f"a_grid: gains must be > 0, got {bad[:5]}")
    if config.trials < 1:
        diagnostics.append(f"trials: must be >= 1, got {config.trials}")
    if config.workers is not None and config.workers < 1:
        diagnostics.append(f"workers: must be >= 1, got {config.workers}")
    if config.slack_coefficient < 0:
        diagnostics.append(f"slack_coefficient: must be >= 0, got {config.slack_coefficient}")

    rule = config.a_hat_rule
    if rule.kind is AHatKind.FROM_ESTIMATOR:
        if rule.estimator is None:
            diagnostics.append("a_hat_rule.estimator: required for from-estimator")
        if rule.n < 2:
            diagnostics.append(f"a_hat_rule.n: must be >= 2, got {rule.n}")
    elif config.kind in (ExperimentKind.BOUNDS, ExperimentKind.REGRET_SWEEP):
        if not rule.offsets:
            diagnostics.append("a_hat_rule.offsets: must not be empty")
        for a in config.a_grid:
            for variant in range(len(rule.offsets)):
                if a > 0 and not rule.a_hat(a, variant) > 0:
                    diagnostics.append(
                        f"a_hat_rule.offsets: offset {rule.offsets[variant]} gives a_hat <= 0 at a={a}"
                    )
                    break
    if config.kind is ExperimentKind.EFFICIENCY and rule.kind is not AHatKind.FROM_ESTIMATOR:
        diagnostics.append("a_hat_rule.kind: efficiency runs need from-estimator")

    for name, path in (("output.csv", config.output_csv), ("output.json", config.output_json)):
        if path and not _writable(path):
            diagnostics.append(f"{name}: directory of {path!r} is not writable")
    return diagnostics


def _parse_rule(raw: Any, diagnostics: List[str]) -> AHatRule:
    if raw is None:
        return AHatRule()
    if not isinstance(raw, dict):
        diagnostics.append("a_hat_rule: must be an object")
        return AHatRule()
    try:
        kind = AHatKind(raw.get("kind", AHatKind.RELATIVE_OFFSET.value))
    except ValueError:
        diagnostics.append(
            f"a_hat_rule.kind: expected one of {[k.value for k in AHatKind]}, got {raw.get('kind')!r}"
        )
        return AHatRule()
    if kind is not AHatKind.FROM_ESTIMATOR:
        offsets = raw.get("offsets", [1e-2])
        if not isinstance(offsets, list) or not all(isinstance(o, (int, float)) for o in offsets):
            diagnostics.append("a_hat_rule.offsets: must be a list of numbers")
            return AHatRule(kind=kind)
        return AHatRule(kind=kind, offsets=tuple(float(o) for o in offsets))

    estimator = None
    try:
        estimator = GainEstimator(
            kind=EstimatorKind(raw.get("estimator", EstimatorKind.NUMERICAL_MLE.value)),
            bracket=tuple(raw.get("bracket", (1e-3, 1e3))),
            tol=float(raw.get("tol", 1e-8)),
        )
    except (ValueError, TypeError) as ex:
        diagnostics.append(f"a_hat_rule.estimator: {ex}")
    n = raw.get("n", 1000)
    if not isinstance(n, int):
        diagnostics.append(f"a_hat_rule.n: must be an integer, got {n!r}")
        n = 1000
    return AHatRule(kind=kind, estimator=estimator, n=n)


def config_from_dict(raw: Dict[str, Any]) -> ExperimentConfig:
    """
    Build an ExperimentConfig from parsed JSON.

    :raises ConfigInvalidError: one diagnostic per offending field
    """
    if not isinstance(raw, dict):
        raise ConfigInvalidError(["<root>: must be a JSON object"])
    diagnostics: List[str] = []

    if raw.get("schema") != SCHEMA_VERSION:
        diagnostics.append(f"schema: must be {SCHEMA_VERSION}, got {raw.get('schema')!r}")
    unknown = sorted(set(raw) - set(CONFIG_SCHEMA))
    if unknown:
        diagnostics.append(f"<root>: unknown fields {unknown}")

    kind = None
    try:
        kind = ExperimentKind(raw.get("kind"))
    except ValueError:
        diagnostics.append(
            f"kind: expected one of {[k.value for k in ExperimentKind]}, got {raw.get('kind')!r}"
        )

    prior = None
    if "prior" not in raw:
        diagnostics.append("prior: required")
    else:
        try:
            prior = parse_prior(raw["prior"])
        except (ValueError, KeyError, TypeError, RegretLabError) as ex:
            diagnostics.append(f"prior: {ex}")

    noise_var = raw.get("noise_var")
    if "snr_db" in raw:
        if noise_var is not None:
            diagnostics.append("snr_db: give either noise_var or snr_db, not both")
        elif prior is not None:
            noise_var = prior.variance / 10.0 ** (float(raw["snr_db"]) / 10.0)
    if noise_var is None:
        diagnostics.append("noise_var: required (or snr_db)")
        noise_var = 1.0

    grid_raw = raw.get("a_grid")
    a_grid: Tuple[float, ...] = ()
    if isinstance(grid_raw, list):
        try:
            a_grid = tuple(float(a) for a in grid_raw)
        except (TypeError, ValueError):
            diagnostics.append("a_grid: entries must be numbers")
    elif isinstance(grid_raw, dict):
        try:
            a_grid = expand_grid(float(grid_raw["start"]), float(grid_raw["stop"]), float(grid_raw["step"]))
        except (KeyError, TypeError, ValueError) as ex:
            diagnostics.append(f"a_grid: {ex}")
    elif grid_raw is None and kind is ExperimentKind.FIG2:
        a_grid = expand_grid(*FIG2_GRID)
    else:
        diagnostics.append("a_grid: required, a list or {start, stop, step}")

    quadrature = QuadratureSpec()
    try:
        quadrature = QuadratureSpec(**raw.get("quadrature", {}))
    except (TypeError, ValueError) as ex:
        diagnostics.append(f"quadrature: {ex}")

    rule = _parse_rule(raw.get("a_hat_rule"), diagnostics)
    output = raw.get("output") or {}

    for name in ("trials", "seed"):
        if name in raw and not isinstance(raw[name], int):
            diagnostics.append(f"{name}: must be an integer, got {raw[name]!r}")

    if diagnostics:
        raise ConfigInvalidError(diagnostics)

    return ExperimentConfig(
        kind=kind,
        prior=prior,
        noise_var=float(noise_var),
        a_grid=a_grid,
        a_hat_rule=rule,
        experiment_id=str(raw.get("id", "experiment")),
        trials=raw.get("trials", 1),
        seed=raw.get("seed", 0),
        quadrature=quadrature,
        slack_coefficient=float(raw.get("slack_coefficient", 1.0)),
        workers=raw.get("workers"),
        output_csv=output.get("csv"),
        output_json=output.get("json"),
    )


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """
    Read and validate a JSON experiment config.

    :raises ConfigInvalidError: unreadable file, bad JSON or invalid fields
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as ex:
        raise ConfigInvalidError([f"<file>: cannot read {path}: {ex}"]) from ex
    except json.JSONDecodeError as ex:
        raise ConfigInvalidError([f"<file>: invalid JSON at line {ex.lineno}: {ex.msg}"]) from ex
    config = config_from_dict(raw)
    log.debug(f"Loaded {config.kind.value} config {config.experiment_id!r} from {path}")
    return config
