"""ZIP-SBM baseline: zero-inflated Poisson kernel on the same DMFM scaffolding.

Both block parameters are conjugate (Beta for p, Gamma for lambda), so the
label update integrates both out.  Latent interactions are imputed for every
pair (``w ~ Poisson(lambda)`` for structural zeros), which makes
``lambda | rest ~ Gamma(a_lam + w_lm, b_lam + n_lm)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .partition import block_sufficient_stats
from .sampler import BlockModel, SbmState, symmetrize_upper
from .zinb import LatentEdges, _lbeta, _move_node, _node_totals, _safe_log, _sample_log_categorical


@dataclass
class ZipPriors:
    a_p: float = 1.0
    b_p: float = 1.0
    a_lam: float = 1.0
    b_lam: float = 1.0

    def __post_init__(self):
        for key, val in vars(self).items():
            if not val > 0:
                raise ValueError(f"{key} must be positive")


@numba.njit(cache=True)
def _log_gamma_poisson(w, npairs, a, b):
    """log of Gamma(a + w) / (b + n)^(a + w), the lambda-integrated Poisson block term."""
    return math.lgamma(a + w) - (a + w) * math.log(b + npairs)


@numba.njit(cache=True)
def _zip_node_logweights(counts, xs, ws, logS, xi, wi, ni, a_p, b_p, a_lam, b_lam, out):
    K = counts.shape[0]
    for c in range(K):
        lw = logS[c]
        for m in range(K):
            if ni[m] == 0.0:
                continue
            if m == c:
                n0 = counts[c] * (counts[c] - 1.0) / 2.0
            else:
                n0 = counts[c] * counts[m]
            n1 = n0 + ni[m]
            x0 = xs[c, m]
            x1 = x0 + xi[m]
            w0 = ws[c, m]
            w1 = w0 + wi[m]
            lw += _lbeta(x1 + a_p, n1 - x1 + b_p) - _lbeta(x0 + a_p, n0 - x0 + b_p)
            lw += _log_gamma_poisson(w1, n1, a_lam, b_lam) - _log_gamma_poisson(w0, n0, a_lam, b_lam)
        out[c] = lw


@numba.njit(cache=True)
def _zip_label_scan(z, X, W, counts, xs, ws, logS, order, a_p, b_p, a_lam, b_lam, rng):
    K = counts.shape[0]
    xi = np.empty(K)
    wi = np.empty(K)
    ni = np.empty(K)
    logw = np.empty(K)
    for idx in range(order.shape[0]):
        i = order[idx]
        _node_totals(i, z, X, W, K, xi, wi, ni)
        _move_node(z[i], -1.0, xs, ws, counts, xi, wi)
        _zip_node_logweights(counts, xs, ws, logS, xi, wi, ni, a_p, b_p, a_lam, b_lam, logw)
        for c in range(K):
            if math.isnan(logw[c]) or logw[c] == np.inf:
                raise FloatingPointError("non-finite label log-weight")
        c = _sample_log_categorical(logw, rng)
        z[i] = c
        _move_node(c, 1.0, xs, ws, counts, xi, wi)


def zip_label_logweights(i: int, z, X, W, S, priors: ZipPriors) -> np.ndarray:
    """Unnormalised log P(z_i = c | rest) with P and Lambda integrated out."""
    z = np.asarray(z, dtype=np.int64).copy()
    K = len(S)
    X = np.asarray(X, dtype=np.int64)
    W = np.asarray(W, dtype=np.int64)
    stats = block_sufficient_stats(X, W, z, K)
    xs, ws = stats.x.astype(float), stats.w.astype(float)
    counts = np.bincount(z, minlength=K).astype(float)
    xi, wi, ni = np.empty(K), np.empty(K), np.empty(K)
    _node_totals(i, z, X, W, K, xi, wi, ni)
    _move_node(z[i], -1.0, xs, ws, counts, xi, wi)
    out = np.empty(K)
    _zip_node_logweights(counts, xs, ws, _safe_log(S), xi, wi, ni, priors.a_p, priors.b_p, priors.a_lam, priors.b_lam, out)
    return out


def sample_latent_edges_zip(A, z, P, Lam, rng) -> LatentEdges:
    A = np.asarray(A)
    n = A.shape[0]
    iu = np.triu_indices(n, 1)
    zi, zj = np.asarray(z)[iu[0]], np.asarray(z)[iu[1]]
    x, w = _zip_latent_pairs(A[iu], P[zi, zj], Lam[zi, zj], rng)
    X = np.zeros((n, n), dtype=np.int64)
    W = np.zeros((n, n), dtype=np.int64)
    X[iu], W[iu] = x, w
    return LatentEdges(X + X.T, W + W.T)


def _zip_latent_pairs(a, p, lam, rng):
    theta = p / (np.exp(-lam) * (1.0 - p) + p)
    x = (rng.random(a.shape[0]) < theta) & (a == 0)
    w = a.astype(np.int64)
    idx = np.nonzero(x)[0]
    if idx.size:
        w[idx] = rng.poisson(lam[idx])
    return x.astype(np.int64), w


class ZipSBM(BlockModel):
    """Zero-inflated Poisson SBM used as the comparison baseline."""

    name = "zip"

    def __init__(self, A, priors: ZipPriors | None = None, dmfm_cfg=None, check_stats=False, random_scan=False):
        super().__init__(A, dmfm_cfg, check_stats)
        self.priors = priors or ZipPriors()
        self.random_scan = random_scan

    def prior_block_params(self, K, rng):
        pr = self.priors
        return {
            "P": symmetrize_upper(rng.beta(pr.a_p, pr.b_p, size=(K, K))),
            "Lam": symmetrize_upper(rng.gamma(pr.a_lam, 1.0 / pr.b_lam, size=(K, K))),
        }

    def init_state(self, rng, k_init=10, gamma=1.0):
        part = self.initial_partition(rng, k_init, gamma)
        K = part.K
        pos = self.a_pairs[self.a_pairs > 0]
        lam0 = float(pos.mean()) if pos.size else 1.0
        block = {"P": np.full((K, K), 0.5), "Lam": np.full((K, K), lam0)}
        state = SbmState(part, block, np.zeros_like(self.A), np.zeros_like(self.A))
        state.X, state.W = sample_latent_edges_zip(self.A, part.z, block["P"], block["Lam"], rng)
        return state

    def kernel_steps(self, state, rng, tuning):
        part = state.part
        K = part.K
        stats = block_sufficient_stats(state.X, state.W, part.z, K)
        xs, ws = stats.x.astype(float), stats.w.astype(float)
        counts = np.bincount(part.z, minlength=K).astype(float)
        order = rng.permutation(self.n) if self.random_scan else np.arange(self.n)
        pr = self.priors
        _zip_label_scan(part.z, state.X, state.W, counts, xs, ws, _safe_log(part.S), order,
                        pr.a_p, pr.b_p, pr.a_lam, pr.b_lam, rng)
        stats = block_sufficient_stats(state.X, state.W, part.z, K)
        if self.check_stats and not (np.array_equal(stats.x, xs) and np.array_equal(stats.w, ws)):
            raise AssertionError("incrementally maintained block stats drifted")
        x, w, npairs = (np.asarray(a, dtype=float) for a in (stats.x, stats.w, stats.n))
        state.block["P"] = symmetrize_upper(rng.beta(x + pr.a_p, npairs - x + pr.b_p))
        state.block["Lam"] = symmetrize_upper(rng.gamma(w + pr.a_lam, 1.0 / (npairs + pr.b_lam)))
        state.X, state.W = sample_latent_edges_zip(self.A, part.z, state.block["P"], state.block["Lam"], rng)
        return {}

    def simulate_latent(self, state, rng):
        lo, hi = self.pair_blocks(state.z)
        b = state.block
        x = (rng.random(lo.shape[0]) < b["P"][lo, hi]).astype(np.int64)
        w = rng.poisson(b["Lam"][lo, hi]).astype(np.int64)
        return x, w

    def record(self, state):
        k = state.part.k
        b = state.block
        return {
            "K": int(state.K),
            "k": int(k),
            "gamma": float(state.part.gamma),
            "z": state.z.tolist(),
            "P": b["P"][:k, :k].tolist(),
            "Lam": b["Lam"][:k, :k].tolist(),
        }
