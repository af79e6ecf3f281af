"""Telescoping-sampler steps for the dynamic mixture of finite mixtures.

These updates only see the partition (occupied block sizes), the auxiliary
variable ``u``, the concentration ``gamma``, the component count ``K`` and
the unnormalised weights ``S``; they are shared by every kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .dists import bnb_log_pmf, f_logpdf, log_gamma_laplace


@dataclass
class DmfmConfig:
    bnb_alpha: float = 1.0
    bnb_a: float = 4.0
    bnb_b: float = 3.0
    gamma_proposal_sd: float = 0.1
    k_max: int = 150
    tail_tol: float = 1e-10

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if not 0 < self.tail_tol <= 1e-6:
            raise ValueError("tail_tol must lie in (0, 1e-6]")
        for name in ("bnb_alpha", "bnb_a", "bnb_b", "gamma_proposal_sd"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    def log_prior_K(self, m):
        """log P(K = m) under the (untruncated) BNB prior on K - 1."""
        return bnb_log_pmf(np.asarray(m) - 1, self.bnb_alpha, self.bnb_a, self.bnb_b)

    def prior_K_pmf(self) -> np.ndarray:
        """P(K = m) for m = 1..k_max, renormalised over the truncated support."""
        lp = self.log_prior_K(np.arange(1, self.k_max + 1))
        pmf = np.exp(lp - lp.max())
        return pmf / pmf.sum()


def sample_prior_K(cfg: DmfmConfig, rng: np.random.Generator) -> int:
    pmf = cfg.prior_K_pmf()
    return int(np.searchsorted(np.cumsum(pmf), rng.random() * pmf.sum(), side="right")) + 1


def sample_prior_gamma(rng: np.random.Generator) -> float:
    return float(rng.f(6.0, 3.0))


def sample_auxiliary_u(n: int, S, rng: np.random.Generator) -> float:
    T = float(np.sum(S))
    if not T > 0:
        raise FloatingPointError(f"total weight T={T} must be positive")
    return float(rng.gamma(n, 1.0 / T))


def log_gamma_target(gamma: float, u: float, occupied_counts, K: int) -> float:
    """log of prod_j kappa(u; n_j, K) * psi(u; K)^(K - k) * p(gamma)."""
    occupied_counts = np.asarray(occupied_counts)
    k = occupied_counts.size
    g = gamma / K
    log1u = math.log1p(u)
    log_kappa = np.sum(gammaln(g + occupied_counts)) - k * math.lgamma(g) - (k * g + occupied_counts.sum()) * log1u
    log_psi = -g * log1u
    return float(log_kappa + (K - k) * log_psi + f_logpdf(gamma))


def gamma_log_accept_ratio(gamma: float, gamma_pro: float, u: float, occupied_counts, K: int) -> float:
    return (
        log_gamma_target(gamma_pro, u, occupied_counts, K)
        - log_gamma_target(gamma, u, occupied_counts, K)
        + math.log(gamma_pro / gamma)
    )


def update_concentration(gamma, u, occupied_counts, K, cfg: DmfmConfig, rng, sd=None):
    """Log-scale random-walk MH for gamma.  Returns ``(gamma, accepted)``."""
    sd = cfg.gamma_proposal_sd if sd is None else sd
    gamma_pro = gamma * math.exp(sd * rng.standard_normal())
    log_alpha = gamma_log_accept_ratio(gamma, gamma_pro, u, occupied_counts, K)
    if math.log(rng.random()) < log_alpha:
        return gamma_pro, True
    return gamma, False


def num_components_logweights(occupied_counts, gamma: float, u: float, cfg: DmfmConfig, m_max: int | None = None):
    """Unnormalised log P(K = m | rest) for m = k..m_max (default ``cfg.k_max``)."""
    occupied_counts = np.asarray(occupied_counts, dtype=float)
    k = occupied_counts.size
    m_max = cfg.k_max if m_max is None else m_max
    ms = np.arange(k, max(k, m_max) + 1)
    g = gamma / ms
    log1u = math.log1p(u)
    log_kappa = (
        gammaln(g[:, None] + occupied_counts[None, :]).sum(axis=1)
        - k * gammaln(g)
        - (k * g + occupied_counts.sum()) * log1u
    )
    log_psi = -g * log1u
    logw = gammaln(ms + 1) - gammaln(ms - k + 1) + log_kappa + (ms - k) * log_psi + cfg.log_prior_K(ms)
    return ms, logw


def _log_tail_bound(occupied_counts, gamma, u, cfg: DmfmConfig, ms):
    """Upper bound on log sum_{m' > M} weight(m') for each M in ``ms``."""
    occupied_counts = np.asarray(occupied_counts, dtype=float)
    k = occupied_counts.size
    g = gamma / ms
    # m!/(m-k)! / m^k <= 1, and (g + t) decreases in m: bound the ratio weight/q_K
    log_ratio = (
        k * math.log(gamma)
        + (gammaln(g[:, None] + occupied_counts[None, :]) - gammaln(g[:, None] + 1.0)).sum(axis=1)
        - (gamma + occupied_counts.sum()) * math.log1p(u)
    )
    pmf = np.exp(cfg.log_prior_K(np.arange(1, ms[-1] + 1)))
    surv = np.clip(1.0 - np.cumsum(pmf), 0.0, None)  # P(K > M) for M = 1..
    with np.errstate(divide="ignore"):
        return log_ratio + np.log(surv[ms - 1])


def sample_num_components(occupied_counts, gamma, u, cfg: DmfmConfig, rng):
    """Draw K from its conditional given the partition.

    Returns ``(K, capped)``; ``capped`` is True when the support had to be
    cut at ``cfg.k_max`` before the tail bound fell below ``cfg.tail_tol``.
    """
    occupied_counts = np.asarray(occupied_counts)
    k = occupied_counts.size
    if k < 1:
        raise ValueError("need at least one occupied component")
    ms, logw = num_components_logweights(occupied_counts, gamma, u, cfg)
    if not np.any(np.isfinite(logw)):
        raise FloatingPointError(
            f"all K weights underflow: k={k}, gamma={gamma}, u={u}, counts={occupied_counts.tolist()}"
        )
    top = logw.max()
    w = np.exp(logw - top)
    csum = np.cumsum(w)
    bound = _log_tail_bound(occupied_counts, gamma, u, cfg, ms)
    ok = np.nonzero(bound - top - np.log(csum) < math.log(cfg.tail_tol))[0]
    capped = ok.size == 0
    stop = ms.size - 1 if capped else int(ok[0])
    total = csum[stop]
    idx = int(np.searchsorted(csum[: stop + 1], rng.random() * total, side="right"))
    return int(ms[min(idx, stop)]), bool(capped and ms[-1] == cfg.k_max)


def sample_unnormalized_weights(counts, gamma: float, K: int, u: float, rng):
    """S_m ~ Gamma(gamma/K + n_m, rate u + 1); ``counts`` is length K (zeros for empty)."""
    counts = np.asarray(counts, dtype=float)
    if counts.shape != (K,):
        raise ValueError("counts must have length K")
    return rng.gamma(gamma / K + counts, 1.0 / (u + 1.0))


def log_K_weight_literal(m: int, occupied_counts, gamma: float, u: float, cfg: DmfmConfig) -> float:
    """Scalar K weight built from the Laplace/cumulant functions (reference path)."""
    k = len(occupied_counts)
    total = math.lgamma(m + 1) - math.lgamma(m - k + 1)
    for nj in occupied_counts:
        total += log_gamma_laplace(u, gamma, m, int(nj))[1]
    total += (m - k) * log_gamma_laplace(u, gamma, m, 0)[0]
    return total + float(cfg.log_prior_K(m))
