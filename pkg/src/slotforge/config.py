"""Pipeline configuration and the ``key=value`` config file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from .errors import ConfigError
from .seq2seq import GenConfig
from .tagger import TaggerConfig

DEFAULT_SEEDS = (1, 2, 3, 4, 5)


@dataclass
class AugmentConfig:
    top_m: int = 1
    enforce_frame_match: bool = False
    no_seq2seq: bool = False
    no_ranks: bool = False
    no_filter: bool = False
    char_level: bool = False
    seed: int = 0


@dataclass
class PathsConfig:
    train: str | None = None
    dev: str | None = None
    test: str | None = None
    output: str | None = None
    generator: str | None = None
    vectors: str | None = None


@dataclass
class PipelineConfig:
    paths: PathsConfig = field(default_factory=PathsConfig)
    gen: GenConfig = field(default_factory=GenConfig)
    tagger: TaggerConfig = field(default_factory=TaggerConfig)
    aug: AugmentConfig = field(default_factory=AugmentConfig)
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    dropout_grid: tuple[float, ...] = ()
    dev_fraction: float = 0.1
    skip_tagger: bool = False

    def validate(self, require_paths: bool = True) -> None:
        if not self.seeds:
            raise ConfigError("seeds must not be empty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"seeds must be distinct, got {list(self.seeds)}")
        if self.aug.top_m < 1:
            raise ConfigError("aug.top_m must be >= 1")
        if not 0 <= self.dev_fraction < 1:
            raise ConfigError("dev_fraction must lie in [0, 1)")
        for d in self.dropout_grid:
            if not 0 <= d < 1:
                raise ConfigError(f"dropout grid value {d} outside [0, 1)")
        self.gen.validate()
        if require_paths:
            for name in ("train", "dev", "test", "vectors"):
                p = getattr(self.paths, name)
                if p is not None and not Path(p).exists():
                    raise ConfigError(f"paths.{name}: {p} does not exist")


_SECTIONS = {"paths": PathsConfig, "gen": GenConfig, "tagger": TaggerConfig,
             "aug": AugmentConfig}


def _coerce(value: str, default, name: str):
    if isinstance(default, bool):
        low = value.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {value!r}")
    try:
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
    except ValueError:
        raise ConfigError(f"{name}: cannot parse {value!r}") from None
    if isinstance(default, tuple):
        parts = [v for v in value.replace(" ", "").split(",") if v]
        cast = float if name == "dropout_grid" else int
        try:
            return tuple(cast(v) for v in parts)
        except ValueError:
            raise ConfigError(f"{name}: cannot parse list {value!r}") from None
    return None if value.strip().lower() in ("", "none") else value


def apply_settings(config: PipelineConfig, settings: Mapping[str, str]) -> PipelineConfig:
    """Return a copy of ``config`` with dotted ``section.key`` settings applied."""
    sections = {name: dataclasses.asdict(getattr(config, name)) for name in _SECTIONS}
    top = {f.name: getattr(config, f.name) for f in dataclasses.fields(config)
           if f.name not in _SECTIONS}
    for key, value in settings.items():
        if "." in key:
            section, attr = key.split(".", 1)
            if section not in sections or attr not in sections[section]:
                raise ConfigError(f"unknown config key {key!r}")
            default = sections[section][attr]
            if default is None:
                default = _field_default(_SECTIONS[section], attr)
            sections[section][attr] = _coerce(value, default, key)
        else:
            name = key.replace("-", "_")
            if name == "seed_list":
                name = "seeds"
            if name not in top:
                raise ConfigError(f"unknown config key {key!r}")
            top[name] = _coerce(value, top[name], name)
    return PipelineConfig(**{name: cls(**sections[name]) for name, cls in _SECTIONS.items()},
                          **top)


def _field_default(cls, attr):
    for f in dataclasses.fields(cls):
        if f.name == attr:
            # optional fields default to None; treat them as strings
            return f.default if f.default is not None else ""
    raise ConfigError(f"unknown field {attr}")


def parse_config_text(text: str) -> dict[str, str]:
    settings = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        settings[key.strip()] = value.strip()
    return settings


def load_config(path: str | Path | None = None,
                overrides: Mapping[str, str] | None = None) -> PipelineConfig:
    settings = {}
    if path is not None:
        settings.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    settings.update(overrides or {})
    return apply_settings(PipelineConfig(), settings)


def config_to_dict(config: PipelineConfig) -> dict:
    return dataclasses.asdict(config)
