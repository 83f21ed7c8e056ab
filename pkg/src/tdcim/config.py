"""Experiment configuration: one JSON file, every field defaulted, unknown keys rejected."""
from __future__ import annotations

import dataclasses
import enum
import json
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from tdcim.analysis import DseSpec, MonteCarloSpec
from tdcim.chain import ChainConfig, Topology
from tdcim.device import FeFetParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ArraySettings:
    rows: int = 8
    v_read: float = 1.0
    solver: str = "rail"
    write_energy_per_cell: float = 1e-15
    sense_overhead: float = 0.0


@dataclass(frozen=True)
class DseSettings:
    c_load_values: tuple[float, ...] = DseSpec().c_load_values
    stage_counts: tuple[int, ...] = DseSpec().stage_counts
    vdd_values: tuple[float, ...] = DseSpec().vdd_values
    topology: str = "buffer"

    def spec(self) -> DseSpec:
        return DseSpec(tuple(self.c_load_values), tuple(int(n) for n in self.stage_counts),
                       tuple(self.vdd_values))


@dataclass(frozen=True)
class HdcSettings:
    n_features: int = 16
    dim: int = 512
    n_classes: int = 2
    n_examples: int = 200
    spread: float = 0.15
    quant_bits: int = 4
    train_fraction: float = 0.5
    dataset: str | None = None
    tile_rows: int = 32
    tile_cols: int = 32
    n_tiles: int = 16


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    out: str = "out"
    fidelity: str = "divider"
    device: FeFetParams = field(default_factory=FeFetParams)
    chain: ChainConfig = field(default_factory=ChainConfig)
    array: ArraySettings = field(default_factory=ArraySettings)
    mc: MonteCarloSpec = field(default_factory=MonteCarloSpec)
    dse: DseSettings = field(default_factory=DseSettings)
    hdc: HdcSettings = field(default_factory=HdcSettings)

    def with_seed(self, seed: int) -> ExperimentConfig:
        return replace(self, seed=seed, mc=replace(self.mc, seed=seed))

    def flat(self) -> dict:
        """Resolved config as dotted key/value pairs, for output headers.

        The output directory is left out so artifacts do not depend on where they are written.
        """
        out = {}
        for f in fields(self):
            if f.name == "out":
                continue
            value = getattr(self, f.name)
            if dataclasses.is_dataclass(value):
                for sub in fields(value):
                    if f.name == "mc" and sub.name == "seed":
                        continue
                    v = getattr(value, sub.name)
                    out[f"{f.name}.{sub.name}"] = v.value if isinstance(v, enum.Enum) else v
            else:
                out[f.name] = value
        return out


_SECTIONS = {"device": FeFetParams, "chain": ChainConfig, "array": ArraySettings,
             "mc": MonteCarloSpec, "dse": DseSettings, "hdc": HdcSettings}
_EXCLUDED = {"mc": {"seed"}}  # the top-level seed drives every random stream


def _build(name: str, cls, data) -> object:
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be an object")
    allowed = {f.name for f in fields(cls)} - _EXCLUDED.get(name, set())
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) in section {name!r}: {', '.join(unknown)}")
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    if cls is ChainConfig and "topology" in kwargs:
        kwargs["topology"] = Topology(kwargs["topology"])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid section {name!r}: {exc}") from exc


def from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    top = {"seed", "out", "fidelity"}
    unknown = sorted(set(data) - top - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown top-level key(s): {', '.join(unknown)}")
    kwargs = {k: data[k] for k in top if k in data}
    for name, cls in _SECTIONS.items():
        if name in data:
            kwargs[name] = _build(name, cls, data[name])
    if kwargs.get("fidelity", "divider") not in ("logical", "divider", "transient"):
        raise ConfigError(f"unknown fidelity {kwargs['fidelity']!r}")
    cfg = ExperimentConfig(**kwargs)
    return cfg.with_seed(cfg.seed)


def load(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return from_dict(data)
