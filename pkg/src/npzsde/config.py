"""One JSON file drives every command.

The file has five blocks: `model` (rate and noise constants), `responses`
(the two interaction responses, keyed "f1" and "f2"), `sim` (integration
settings), `experiment` (command-specific settings), and `output`
(destination directory and formats). Unknown keys are rejected at every
level so a typo cannot silently fall back to a default. The NPZSDE_OUT_DIR
environment variable overrides `output.out_dir` and nothing else.

Structural problems (bad JSON, unknown keys, values outside hard limits)
raise ConfigError; scientific assumption violations (for example a
recycling rate at or above the matching loss rate) load fine and are left
to `validate_params`, so a deliberately broken configuration can still be
examined by the validation command.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Any, Mapping

from .engine import SCHEMES, SimConfig
from .errors import ConfigError
from .model import (
    KIND_BEDDINGTON_DEANGELIS,
    KIND_CONSTANT,
    KIND_HOLLING2,
    FunctionalResponse,
    ModelParams,
)

__all__ = [
    "OUT_DIR_ENV",
    "FORMATS",
    "OutputConfig",
    "RunConfig",
    "load_config",
    "parse_axis",
]

OUT_DIR_ENV = "NPZSDE_OUT_DIR"
FORMATS = ("csv", "json", "svg")

_MODEL_KEYS = (
    "lambda_input", "alpha1", "alpha2", "alpha3", "alpha4", "alpha5",
    "sigma1", "sigma2", "sigma3",
)
# Which shape keys each response kind takes, beyond the scale "a".
_KIND_EXTRA_KEYS = {
    KIND_CONSTANT: (),
    KIND_HOLLING2: ("h",),
    KIND_BEDDINGTON_DEANGELIS: ("h", "k"),
}
_SIM_REQUIRED = ("dt", "t_end", "seed")
_SIM_OPTIONAL = ("burn_in", "subsample_every", "n_paths", "scheme")
# Union of the command-specific settings; each command checks the ones it
# needs and ignores the rest.
_EXPERIMENT_KEYS = (
    "initial", "initial_b", "tol", "axis1", "axis2", "check", "q", "theta",
    "window", "targets", "dims", "n_bins", "n_windows", "tv_threshold",
    "tail_mult",
)


@dataclass(frozen=True)
class OutputConfig:
    out_dir: str
    formats: tuple[str, ...]


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs, parsed and range-checked."""

    params: ModelParams
    f1: FunctionalResponse
    f2: FunctionalResponse
    sim: SimConfig
    experiment: dict
    output: OutputConfig


def _mapping(value: Any, where: str) -> Mapping:
    if not isinstance(value, Mapping):
        raise ConfigError(f"{where} must be a JSON object")
    return value


def _reject_unknown(block: Mapping, allowed, where: str) -> None:
    unknown = sorted(set(block) - set(allowed))
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")


def _float(block: Mapping, key: str, where: str) -> float:
    v = block[key]
    # bool is an int subclass; it is never a valid number here.
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}.{key} must be a number, got {v!r}")
    return float(v)


def _int(block: Mapping, key: str, where: str) -> int:
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{where}.{key} must be an integer, got {v!r}")
    return v


def _parse_model(block: Mapping) -> ModelParams:
    _reject_unknown(block, _MODEL_KEYS, "model")
    missing = sorted(set(_MODEL_KEYS) - set(block))
    if missing:
        raise ConfigError(f"model block is missing: {', '.join(missing)}")
    return ModelParams(**{k: _float(block, k, "model") for k in _MODEL_KEYS})


def _parse_response(block: Mapping, where: str) -> FunctionalResponse:
    kind = block.get("kind")
    if kind not in _KIND_EXTRA_KEYS:
        raise ConfigError(
            f"{where}.kind must be one of {sorted(_KIND_EXTRA_KEYS)}, got {kind!r}"
        )
    keys = ("kind", "a") + _KIND_EXTRA_KEYS[kind]
    _reject_unknown(block, keys, where)
    missing = sorted(set(keys) - set(block))
    if missing:
        raise ConfigError(f"{where} ({kind}) is missing: {', '.join(missing)}")
    shape = {k: _float(block, k, where) for k in keys if k != "kind"}
    try:
        return FunctionalResponse(kind, **shape)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _parse_responses(block: Mapping) -> tuple[FunctionalResponse, FunctionalResponse]:
    _reject_unknown(block, ("f1", "f2"), "responses")
    if "f1" not in block or "f2" not in block:
        raise ConfigError("responses block must define both f1 and f2")
    return (
        _parse_response(_mapping(block["f1"], "responses.f1"), "responses.f1"),
        _parse_response(_mapping(block["f2"], "responses.f2"), "responses.f2"),
    )


def _parse_sim(block: Mapping) -> SimConfig:
    _reject_unknown(block, _SIM_REQUIRED + _SIM_OPTIONAL, "sim")
    missing = sorted(set(_SIM_REQUIRED) - set(block))
    if missing:
        raise ConfigError(f"sim block is missing: {', '.join(missing)}")
    kwargs: dict[str, Any] = {
        "dt": _float(block, "dt", "sim"),
        "t_end": _float(block, "t_end", "sim"),
        "seed": _int(block, "seed", "sim"),
    }
    if "burn_in" in block:
        kwargs["burn_in"] = _float(block, "burn_in", "sim")
    if "subsample_every" in block:
        kwargs["subsample_every"] = _int(block, "subsample_every", "sim")
    if "n_paths" in block:
        kwargs["n_paths"] = _int(block, "n_paths", "sim")
    if "scheme" in block:
        scheme = block["scheme"]
        if scheme not in SCHEMES:
            raise ConfigError(f"sim.scheme must be one of {SCHEMES}, got {scheme!r}")
        kwargs["scheme"] = scheme
    try:
        return SimConfig(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"sim: {exc}") from exc


def _parse_output(block: Mapping) -> OutputConfig:
    _reject_unknown(block, ("out_dir", "formats"), "output")
    out_dir = block.get("out_dir", "out")
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("output.out_dir must be a non-empty string")
    formats = block.get("formats", ["csv", "json"])
    if not isinstance(formats, list) or not formats:
        raise ConfigError("output.formats must be a non-empty list")
    for f in formats:
        if f not in FORMATS:
            raise ConfigError(f"output.formats entries must be in {FORMATS}, got {f!r}")
    if len(set(formats)) != len(formats):
        raise ConfigError("output.formats must not repeat entries")
    env_dir = os.environ.get(OUT_DIR_ENV)
    if env_dir:
        out_dir = env_dir
    return OutputConfig(out_dir=out_dir, formats=tuple(formats))


def _parse_experiment(block: Mapping) -> dict:
    _reject_unknown(block, _EXPERIMENT_KEYS, "experiment")
    return dict(block)


def load_config(path: str) -> RunConfig:
    """Parse and range-check one JSON configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    top = _mapping(raw, "config")
    _reject_unknown(top, ("model", "responses", "sim", "experiment", "output"), "config")
    for required in ("model", "responses", "sim"):
        if required not in top:
            raise ConfigError(f"config is missing the {required} block")
    f1, f2 = _parse_responses(_mapping(top["responses"], "responses"))
    return RunConfig(
        params=_parse_model(_mapping(top["model"], "model")),
        f1=f1,
        f2=f2,
        sim=_parse_sim(_mapping(top["sim"], "sim")),
        experiment=_parse_experiment(_mapping(top.get("experiment", {}), "experiment")),
        output=_parse_output(_mapping(top.get("output", {}), "output")),
    )


def parse_axis(text: str) -> tuple[str, tuple[float, ...]]:
    """Parse a sweep axis "name=start:stop:count" into (name, values).

    Values are evenly spaced and include both endpoints; count=1 degenerates
    to the single value start (stop must then equal start).
    """
    if not isinstance(text, str) or "=" not in text:
        raise ConfigError(f"axis must look like name=start:stop:count, got {text!r}")
    name, _, rest = text.partition("=")
    parts = rest.split(":")
    if len(parts) != 3:
        raise ConfigError(f"axis range must be start:stop:count, got {rest!r}")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"axis range {rest!r}: {exc}") from exc
    if count < 1:
        raise ConfigError("axis count must be >= 1")
    if count == 1:
        if stop != start:
            raise ConfigError("axis with count=1 must have stop == start")
        return name.strip(), (start,)
    step = (stop - start) / (count - 1)
    return name.strip(), tuple(start + i * step for i in range(count))
