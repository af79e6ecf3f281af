"""Run configuration: flat ``key = value`` files (a TOML subset) plus flag overrides."""

from __future__ import annotations

import os
import sys
from dataclasses import asdict, dataclass, field, fields

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .czinb import CzinbPriors
from .dmfm import DmfmConfig
from .models import MODELS
from .sampler import SamplerConfig
from .zinb import ZinbPriors
from .zip_sbm import ZipPriors

SEED_ENV = "BLOCKSAMPLER_SEED"

# keys forwarded to the model builder rather than stored as run fields
_MODEL_KEYS = {f.name for cls in (ZinbPriors, CzinbPriors, ZipPriors, DmfmConfig) for f in fields(cls)}
_MODEL_KEYS |= {"marginal_label_step", "warm_start"}
_SAMPLER_KEYS = {f.name for f in fields(SamplerConfig)} - {"seed"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model: str = "zinb"
    adjacency: str | None = None
    covariates: str | None = None
    adjacency_format: str = "edge-list"
    n: int | None = None
    seed: int = 0
    chains: int = 1
    jobs: int = 1
    standardize: bool = True
    intercept: bool = False
    out: str = "runs"
    sampler: dict = field(default_factory=dict)
    settings: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}; choose from {', '.join(MODELS)}")
        if self.chains < 1 or self.jobs < 1:
            raise ConfigError("chains and jobs must be at least 1")
        try:
            self.sampler_config()
            DmfmConfig(**{k: v for k, v in self.settings.items() if k in {f.name for f in fields(DmfmConfig)}})
        except (TypeError, ValueError) as err:
            raise ConfigError(str(err)) from err
        return self

    def sampler_config(self, chain: int = 0) -> SamplerConfig:
        return SamplerConfig(**{**self.sampler, "seed": self.seed + chain})

    def as_dict(self) -> dict:
        return asdict(self)


def read_config_file(path) -> dict:
    """Parse a flat key=value file; nested tables are rejected."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from err
    for key, val in data.items():
        if isinstance(val, dict):
            raise ConfigError(f"config must be flat key = value pairs; got table [{key}]")
    return data


def apply_settings(cfg: RunConfig, values: dict) -> RunConfig:
    """Route flat settings into run fields, sampler settings or model settings."""
    run_fields = {f.name for f in fields(RunConfig)} - {"sampler", "settings"}
    for key, val in values.items():
        if val is None:
            continue
        key = key.replace("-", "_")
        if key in run_fields:
            setattr(cfg, key, val)
        elif key in _SAMPLER_KEYS:
            cfg.sampler[key] = val
        elif key in _MODEL_KEYS:
            cfg.settings[key] = val
        else:
            raise ConfigError(f"unknown config key {key!r}")
    return cfg


def resolve_seed(flag_seed, file_seed=None) -> int:
    """Flag beats config file beats the environment variable; default 0."""
    if flag_seed is not None:
        return int(flag_seed)
    if file_seed is not None:
        return int(file_seed)
    env = os.environ.get(SEED_ENV)
    if env not in (None, ""):
        try:
            return int(env)
        except ValueError as err:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {env!r}") from err
    return 0


def build_config(config_path=None, overrides: dict | None = None) -> RunConfig:
    file_values = read_config_file(config_path) if config_path else {}
    overrides = dict(overrides or {})
    seed = resolve_seed(overrides.pop("seed", None), file_values.pop("seed", None))
    cfg = RunConfig()
    apply_settings(cfg, file_values)
    apply_settings(cfg, overrides)
    cfg.seed = seed
    return cfg.validate()
