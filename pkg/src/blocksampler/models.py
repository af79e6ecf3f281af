"""Model registry: build a kernel by name from flat settings."""

from __future__ import annotations

from dataclasses import fields

from .czinb import CzinbPriors, CzinbSBM
from .dmfm import DmfmConfig
from .zinb import ZinbPriors, ZinbSBM
from .zip_sbm import ZipPriors, ZipSBM

MODELS = ("zinb", "czinb", "zip")
_PRIORS = {"zinb": ZinbPriors, "czinb": CzinbPriors, "zip": ZipPriors}


def pick(cls, settings: dict) -> dict:
    """Subset of ``settings`` that names fields of dataclass ``cls``."""
    names = {f.name for f in fields(cls)}
    return {key: val for key, val in (settings or {}).items() if key in names}


def build_model(kind: str, A, Y=None, settings: dict | None = None):
    """Construct a sampler; ``settings`` may mix prior, DMFM and kernel options."""
    settings = settings or {}
    if kind not in MODELS:
        raise ValueError(f"unknown model {kind!r}; choose from {', '.join(MODELS)}")
    priors = _PRIORS[kind](**pick(_PRIORS[kind], settings))
    dm = DmfmConfig(**pick(DmfmConfig, settings))
    common = dict(
        dmfm_cfg=dm,
        check_stats=bool(settings.get("check_stats", False)),
        random_scan=bool(settings.get("random_scan", False)),
    )
    if kind == "zinb":
        return ZinbSBM(A, priors, **common)
    if kind == "zip":
        return ZipSBM(A, priors, **common)
    if Y is None:
        raise ValueError("covariates required for the czinb model")
    return CzinbSBM(
        A, Y, priors,
        marginal_label_step=bool(settings.get("marginal_label_step", True)),
        warm_start=int(settings.get("warm_start", 0)),
        **common,
    )
