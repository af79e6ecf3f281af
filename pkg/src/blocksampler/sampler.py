"""Shared machinery for the partially collapsed SBM samplers.

A kernel (ZINB, CZINB, ZIP) supplies the model-specific steps: collapsed label
updates, block-parameter draws and latent-edge imputation.  :class:`BlockModel`
wraps them with the telescoping steps (auxiliary ``u``, ``gamma``, ``K``,
``S``) and the refresh of parameters attached to empty components.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import dmfm
from .dmfm import DmfmConfig
from .partition import PartitionState, relabel_occupied


@dataclass
class SamplerConfig:
    iterations: int = 4000
    burn_in: int = 2000
    thin: int = 1
    seed: int = 0
    k_init: int = 10
    gamma_init: float = 1.0
    random_scan: bool = False
    adapt: bool = True
    target_accept: float = 0.44
    check_stats: bool = False

    def __post_init__(self):
        if self.iterations <= self.burn_in:
            raise ValueError("iterations must exceed burn_in")
        if self.burn_in < 0 or self.thin < 1 or self.k_init < 1:
            raise ValueError("need burn_in >= 0, thin >= 1, k_init >= 1")

    @property
    def n_kept(self) -> int:
        return (self.iterations - self.burn_in) // self.thin


@dataclass
class SbmState:
    """Full sampler state; ``block`` holds arrays indexed by block pair on axes 0, 1."""

    part: PartitionState
    block: dict[str, np.ndarray]
    X: np.ndarray
    W: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def z(self) -> np.ndarray:
        return self.part.z

    @property
    def K(self) -> int:
        return self.part.K


@lru_cache(maxsize=256)
def _strict_lower(K: int):
    return np.tril_indices(K, -1)


def symmetrize_upper(M: np.ndarray) -> np.ndarray:
    """Mirror the upper triangle (incl. diagonal) of the leading two axes."""
    M = np.array(M, copy=True)
    lo = _strict_lower(M.shape[0])
    M[lo] = M[(lo[1], lo[0])]
    return M


def fill_symmetric(n: int, iu, values, dtype=None) -> np.ndarray:
    values = np.asarray(values)
    out = np.zeros((n, n) + values.shape[1:], dtype=dtype or values.dtype)
    out[iu] = values
    out[(iu[1], iu[0])] = values
    return out


class BlockModel:
    """Base class: subclasses implement the kernel-specific hooks."""

    name = "base"
    block_keys: tuple[str, ...] = ()

    def __init__(self, A, dmfm_cfg: DmfmConfig | None = None, check_stats: bool = False):
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(A, A.T) or np.any(np.diag(A) != 0):
            raise ValueError("adjacency must be symmetric with zero diagonal")
        self.A = A.astype(np.int64)
        self.n = A.shape[0]
        self.iu = np.triu_indices(self.n, 1)
        self.a_pairs = self.A[self.iu]
        self.dmfm = dmfm_cfg or DmfmConfig()
        self.check_stats = check_stats

    # -- hooks -------------------------------------------------------------
    def prior_block_params(self, K: int, rng) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def init_state(self, rng, k_init: int = 10, gamma: float = 1.0) -> SbmState:
        raise NotImplementedError

    def kernel_steps(self, state: SbmState, rng, tuning: dict) -> dict:
        """Kernel part of a sweep: labels, block parameters, dispersion, latent edges."""
        raise NotImplementedError

    def record(self, state: SbmState) -> dict:
        raise NotImplementedError

    def simulate_latent(self, state: SbmState, rng):
        """Draw (X, W) from the model given labels and parameters."""
        raise NotImplementedError

    def prior_extra(self, rng) -> dict:
        """Global (non-block) parameters drawn from their prior."""
        return {}

    def refresh_aux(self, state: SbmState, rng, eta=None):
        """Redraw auxiliary variables that depend on the latent edges (none by default)."""

    # -- shared pieces -----------------------------------------------------
    def set_adjacency(self, A):
        self.A = np.asarray(A, dtype=np.int64)
        self.a_pairs = self.A[self.iu]

    def sample_prior_state(self, rng) -> SbmState:
        """Forward draw of every parameter from the prior (latent edges left at zero)."""
        K = dmfm.sample_prior_K(self.dmfm, rng)
        gamma = dmfm.sample_prior_gamma(rng)
        while True:
            S = rng.gamma(gamma / K, 1.0, size=K)
            if S.sum() > 0:
                break
        z = rng.choice(K, size=self.n, p=S / S.sum())
        u = dmfm.sample_auxiliary_u(self.n, S, rng)
        part = PartitionState(z=z, K=K, S=S, u=u, gamma=gamma)
        zeros = np.zeros((self.n, self.n), dtype=np.int64)
        return SbmState(part, self.prior_block_params(K, rng), zeros, zeros.copy(), extra=self.prior_extra(rng))

    def regenerate(self, state: SbmState, rng) -> np.ndarray:
        """Draw (X, W, A) and auxiliaries given the parameters; the model's data becomes A."""
        x, w = self.simulate_latent(state, rng)
        self.set_latent(state, x, w)
        A = state.W * (1 - state.X)
        self.set_adjacency(A)
        self.refresh_aux(state, rng)
        return A

    def initial_partition(self, rng, k_init: int, gamma: float) -> PartitionState:
        K = int(min(k_init, self.n, self.dmfm.k_max))
        z = rng.integers(0, K, size=self.n)
        # weights from their conditional given the initial labels, so the
        # first label sweep does not collapse onto a few heavy components
        S = rng.gamma(gamma / K + np.bincount(z, minlength=K), 1.0)
        return PartitionState(z=z, K=K, S=S, u=1.0, gamma=gamma)

    def pair_blocks(self, z) -> tuple[np.ndarray, np.ndarray]:
        zi, zj = z[self.iu[0]], z[self.iu[1]]
        return np.minimum(zi, zj), np.maximum(zi, zj)

    def set_latent(self, state: SbmState, x, w):
        state.X = fill_symmetric(self.n, self.iu, np.asarray(x, dtype=np.int64))
        state.W = fill_symmetric(self.n, self.iu, np.asarray(w, dtype=np.int64))

    def sweep(self, state: SbmState, rng, tuning: dict | None = None) -> dict:
        tuning = {} if tuning is None else tuning
        part = state.part
        part.u = dmfm.sample_auxiliary_u(self.n, part.S, rng)  # auxiliary u
        diag = self.kernel_steps(state, rng, tuning)  # kernel updates
        self.dmfm_steps(state, rng, tuning, diag)  # gamma, K, S, empty blocks
        return diag

    def dmfm_steps(self, state: SbmState, rng, tuning: dict, diag: dict):
        part = state.part
        keys = list(state.block)
        z, k, _, permuted, S = relabel_occupied(part.z, part.K, *(state.block[key] for key in keys), S=part.S)
        counts = np.bincount(z, minlength=k)[:k]
        gamma, acc = dmfm.update_concentration(
            part.gamma, part.u, counts, part.K, self.dmfm, rng, tuning.get("gamma_sd")
        )
        K_new, capped = dmfm.sample_num_components(counts, gamma, part.u, self.dmfm, rng)
        full_counts = np.zeros(K_new)
        full_counts[:k] = counts
        S = dmfm.sample_unnormalized_weights(full_counts, gamma, K_new, part.u, rng)
        fresh = self.prior_block_params(K_new, rng)  # empty components get prior draws
        for key, old in zip(keys, permuted):
            fresh[key][:k, :k] = old[:k, :k]
        state.block = fresh
        state.part = PartitionState(z=z, K=K_new, S=S, u=part.u, gamma=gamma)
        diag["gamma_accept"] = float(acc)
        diag["K_capped"] = bool(capped)

    def default_tuning(self) -> dict:
        return {"gamma_sd": self.dmfm.gamma_proposal_sd}


def adapt_scales(tuning: dict, diag: dict, t: int, target: float = 0.44):
    """Robbins-Monro step on log proposal scales (burn-in only)."""
    step = (t + 1) ** -0.6
    for key, acc_key in (("gamma_sd", "gamma_accept"), ("r_sd", "r_accept")):
        if key in tuning and acc_key in diag and diag[acc_key] is not None:
            tuning[key] = float(np.clip(tuning[key] * math.exp(step * (diag[acc_key] - target)), 1e-3, 5.0))


def run_chain(model: BlockModel, cfg: SamplerConfig, rng, state: SbmState | None = None, progress=None):
    """Run one chain; returns ``(records, state, diagnostics)``."""
    if state is None:
        state = model.init_state(rng, k_init=cfg.k_init, gamma=cfg.gamma_init)
    tuning = model.default_tuning()
    records = []
    acc_sum: dict[str, float] = {}
    acc_n = 0
    capped = 0
    for t in range(cfg.iterations):
        diag = model.sweep(state, rng, tuning)
        capped += int(diag.get("K_capped", False))
        if t < cfg.burn_in:
            if cfg.adapt:
                adapt_scales(tuning, diag, t, cfg.target_accept)
            continue
        for key, val in diag.items():
            if key.endswith("_accept") and val is not None:
                acc_sum[key] = acc_sum.get(key, 0.0) + float(val)
        acc_n += 1
        if (t - cfg.burn_in) % cfg.thin == 0:
            rec = model.record(state)
            rec["iter"] = t + 1
            records.append(rec)
        if progress is not None:
            progress(t, state)
    diagnostics = {key: val / max(acc_n, 1) for key, val in sorted(acc_sum.items())}
    diagnostics["K_cap_hits"] = capped
    diagnostics["tuning"] = dict(tuning)
    return records, state, diagnostics
