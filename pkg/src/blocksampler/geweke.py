"""Getting-it-right checks: compare forward prior draws with a sampler/regeneration chain.

The marginal-conditional run draws parameters from the prior and data from
the model.  The successive-conditional run alternates one sampler sweep with
a fresh draw of the data given the current parameters.  Both target the same
joint distribution, so means of label-invariant test functions must agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .czinb import CzinbPriors, CzinbSBM
from .dmfm import DmfmConfig
from .zinb import ZinbPriors, ZinbSBM
from .zip_sbm import ZipPriors, ZipSBM


@dataclass
class GewekeConfig:
    n: int = 8
    iterations: int = 100_000
    k_max: int = 3
    q: int = 2
    batches: int = 100
    gamma_sd: float = 0.5
    r_sd: float = 0.3
    seed: int = 0
    extra: dict = field(default_factory=dict)


def geweke_model(kind: str, cfg: GewekeConfig, rng):
    """Kernel with proper, fairly informative priors so every test function has finite variance."""
    A0 = np.zeros((cfg.n, cfg.n), dtype=np.int64)
    dm = DmfmConfig(k_max=cfg.k_max)
    if kind == "zinb":
        pr = ZinbPriors(a_p=2.0, b_p=2.0, a_psi=4.0, b_psi=2.0, a_r=2.0, b_r=2.0)
        return ZinbSBM(A0, pr, dm)
    if kind == "zip":
        return ZipSBM(A0, ZipPriors(a_p=2.0, b_p=2.0, a_lam=2.0, b_lam=1.0), dm)
    if kind == "czinb":
        iu = np.triu_indices(cfg.n, 1)
        rows = np.column_stack([np.ones(iu[0].size), rng.standard_normal((iu[0].size, cfg.q - 1))])
        Y = np.zeros((cfg.n, cfg.n, cfg.q))
        Y[iu] = rows
        Y[(iu[1], iu[0])] = rows
        pr = CzinbPriors(b0=0.5, B0_scale=0.5, a_r=2.0, b_r=2.0)
        return CzinbSBM(A0, Y, pr, dm, **cfg.extra)
    raise ValueError(f"unknown model {kind!r}")


def test_functions(model, state) -> dict[str, float]:
    """Label-invariant summaries of the joint state (parameters and data)."""
    z = state.z
    a, b = z[0], z[1]
    A = model.A[model.iu]
    out = {
        "K": float(state.K),
        "k": float(np.unique(z).size),
        "log_gamma": math.log(state.part.gamma),
        "same_block_01": float(a == b),
        "size_block_0": float(np.sum(z == a)),
        "frac_nonzero": float(np.mean(A > 0)),
        "log1p_total": math.log1p(float(A.sum())),
    }
    blk = state.block
    if model.name == "zinb":
        out.update(p_00=blk["P"][a, a], psi_00=blk["Psi"][a, a], r_00=blk["R"][a, a], p_01=blk["P"][a, b],
                   psi_01=blk["Psi"][a, b])
    elif model.name == "zip":
        out.update(p_00=blk["P"][a, a], lam_00=blk["Lam"][a, a], p_01=blk["P"][a, b], lam_01=blk["Lam"][a, b])
    elif model.name == "czinb":
        out.update(
            r=state.extra["r"],
            beta1_00_0=blk["beta1"][a, a, 0], beta1_00_1=blk["beta1"][a, a, 1],
            beta2_00_0=blk["beta2"][a, a, 0], beta2_01_1=blk["beta2"][a, b, 1],
            beta1_01_0=blk["beta1"][a, b, 0],
        )
    return {key: float(val) for key, val in out.items()}


def marginal_conditional(model, iterations: int, rng) -> dict[str, np.ndarray]:
    rows = []
    for _ in range(iterations):
        state = model.sample_prior_state(rng)
        model.regenerate(state, rng)
        rows.append(test_functions(model, state))
    return {key: np.array([r[key] for r in rows]) for key in rows[0]}


def successive_conditional(model, iterations: int, rng, tuning: dict) -> dict[str, np.ndarray]:
    state = model.sample_prior_state(rng)
    model.regenerate(state, rng)
    rows = []
    for _ in range(iterations):
        model.sweep(state, rng, tuning)
        model.regenerate(state, rng)
        rows.append(test_functions(model, state))
    return {key: np.array([r[key] for r in rows]) for key in rows[0]}


def batch_means_var(x, batches: int) -> float:
    """Variance of the sample mean of a correlated series via batch means."""
    x = np.asarray(x, dtype=float)
    size = x.size // batches
    means = x[: size * batches].reshape(batches, size).mean(axis=1)
    return float(means.var(ddof=1) / batches)


def geweke_zscores(mc: dict, sc: dict, batches: int = 100) -> dict[str, float]:
    out = {}
    for key in mc:
        se2 = mc[key].var(ddof=1) / mc[key].size + batch_means_var(sc[key], batches)
        diff = mc[key].mean() - sc[key].mean()
        out[key] = float(diff / math.sqrt(se2)) if se2 > 0 else (0.0 if diff == 0 else math.inf)
    return out


def run_geweke(kind: str, cfg: GewekeConfig | None = None) -> dict[str, float]:
    from .dists import make_rng

    cfg = cfg or GewekeConfig()
    rng = make_rng(cfg.seed, 0)
    model = geweke_model(kind, cfg, make_rng(cfg.seed, 3))
    mc = marginal_conditional(model, cfg.iterations, rng)
    tuning = {"gamma_sd": cfg.gamma_sd, "r_sd": cfg.r_sd}
    sc = successive_conditional(model, cfg.iterations, make_rng(cfg.seed, 1), tuning)
    return geweke_zscores(mc, sc, cfg.batches)
