"""ZINB-SBM kernel: collapsed label updates, conjugate Beta draws, dispersion MH."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np
from scipy.special import gammaln

from .dists import gamma_logpdf
from .partition import block_sufficient_stats
from .sampler import BlockModel, SbmState, symmetrize_upper


@dataclass
class ZinbPriors:
    a_p: float = 1.0
    b_p: float = 1.0
    a_psi: float = 1.0
    b_psi: float = 1.0
    a_r: float = 1.0
    b_r: float = 1.0
    r_proposal_sd: float = 0.2

    def __post_init__(self):
        for key, val in vars(self).items():
            if not val > 0:
                raise ValueError(f"{key} must be positive")


class LatentEdges(NamedTuple):
    X: np.ndarray
    W: np.ndarray


# ---------------------------------------------------------------------------
# collapsed label update


@numba.njit(cache=True)
def _lbeta(a, b):
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


@numba.njit(cache=True)
def _node_totals(i, z, X, W, K, xi, wi, ni):
    xi[:] = 0.0
    wi[:] = 0.0
    ni[:] = 0.0
    for j in range(z.shape[0]):
        if j == i:
            continue
        m = z[j]
        xi[m] += X[i, j]
        wi[m] += W[i, j]
        ni[m] += 1.0


@numba.njit(cache=True)
def _move_node(c, sign, xs, ws, counts, xi, wi):
    K = counts.shape[0]
    for m in range(K):
        xs[c, m] += sign * xi[m]
        ws[c, m] += sign * wi[m]
        if m != c:
            xs[m, c] += sign * xi[m]
            ws[m, c] += sign * wi[m]
    counts[c] += sign


@numba.njit(cache=True)
def _zinb_node_logweights(i, z, W, counts, xs, ws, R, logS, xi, wi, ni, a_p, b_p, a_psi, b_psi, out):
    """Log label weights for node i; block totals must already exclude node i."""
    K = counts.shape[0]
    n = z.shape[0]
    G = np.zeros((K, K))
    for j in range(n):
        if j == i or W[i, j] == 0:
            continue
        m = z[j]
        wij = W[i, j]
        for c in range(K):
            G[c, m] += math.lgamma(wij + R[c, m]) - math.lgamma(R[c, m])
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
            r = R[c, m]
            lw += _lbeta(x1 + a_p, n1 - x1 + b_p) - _lbeta(x0 + a_p, n0 - x0 + b_p)
            lw += _lbeta(r * n1 + a_psi, w1 + b_psi) - _lbeta(r * n0 + a_psi, w0 + b_psi)
            lw += G[c, m]
        out[c] = lw


@numba.njit(cache=True)
def _sample_log_categorical(logw, rng):
    top = -np.inf
    for v in logw:
        if v > top:
            top = v
    total = 0.0
    probs = np.empty(logw.shape[0])
    for c in range(logw.shape[0]):
        probs[c] = math.exp(logw[c] - top)
        total += probs[c]
    u = rng.random() * total
    acc = 0.0
    for c in range(logw.shape[0]):
        acc += probs[c]
        if u < acc:
            return c
    return logw.shape[0] - 1


@numba.njit(cache=True)
def _zinb_label_scan(z, X, W, counts, xs, ws, R, logS, order, a_p, b_p, a_psi, b_psi, rng):
    K = counts.shape[0]
    xi = np.empty(K)
    wi = np.empty(K)
    ni = np.empty(K)
    logw = np.empty(K)
    for idx in range(order.shape[0]):
        i = order[idx]
        _node_totals(i, z, X, W, K, xi, wi, ni)
        _move_node(z[i], -1.0, xs, ws, counts, xi, wi)
        _zinb_node_logweights(i, z, W, counts, xs, ws, R, logS, xi, wi, ni, a_p, b_p, a_psi, b_psi, logw)
        for c in range(K):
            if math.isnan(logw[c]) or logw[c] == np.inf:
                raise FloatingPointError("non-finite label log-weight")
        c = _sample_log_categorical(logw, rng)
        z[i] = c
        _move_node(c, 1.0, xs, ws, counts, xi, wi)


def _safe_log(S):
    with np.errstate(divide="ignore"):
        return np.log(np.asarray(S, dtype=float))


def collapsed_label_logweights(i: int, z, X, W, R, S, priors: ZinbPriors) -> np.ndarray:
    """Unnormalised log P(z_i = c | rest) for c = 0..K-1, with P and Psi integrated out."""
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
    _zinb_node_logweights(
        i, z, W, counts, xs, ws, np.asarray(R, dtype=float), _safe_log(S), xi, wi, ni,
        priors.a_p, priors.b_p, priors.a_psi, priors.b_psi, out,
    )
    bad = ~np.isfinite(out) & ~(out == -np.inf)
    if np.any(bad):
        raise FloatingPointError(f"non-finite label log-weight for candidates {np.nonzero(bad)[0].tolist()}")
    return out


# ---------------------------------------------------------------------------
# conjugate and MH block updates


def gibbs_block_params(stats, R, priors: ZinbPriors, rng):
    """Beta draws of P and Psi for every block pair l <= m, mirrored."""
    x, w, n = (np.asarray(a, dtype=float) for a in (stats.x, stats.w, stats.n))
    shapes = (x + priors.a_p, n - x + priors.b_p, R * n + priors.a_psi, w + priors.b_psi)
    if any(np.any(s <= 0) for s in shapes):
        raise ValueError("nonpositive Beta shape in block update")
    P = symmetrize_upper(rng.beta(shapes[0], shapes[1]))
    Psi = symmetrize_upper(rng.beta(shapes[2], shapes[3]))
    return P, Psi


def dispersion_log_ratio(r, r_pro, w_block, psi, n_block, priors: ZinbPriors):
    """Log MH ratio for one block's r (the Jacobian r_pro / r included)."""
    w_block = np.asarray(w_block, dtype=float)
    lik = np.sum(gammaln(w_block + r_pro) - gammaln(r_pro) - gammaln(w_block + r) + gammaln(r))
    lik += (r_pro - r) * n_block * math.log(psi)
    prior = gamma_logpdf(r_pro, priors.a_r, priors.b_r) - gamma_logpdf(r, priors.a_r, priors.b_r)
    return float(lik + prior + math.log(r_pro / r))


def mh_update_dispersion(r, w_block, psi, n_block, priors: ZinbPriors, rng, sd=None):
    """Scalar log-normal random-walk update of one block's r.  Returns ``(r, accepted)``."""
    sd = priors.r_proposal_sd if sd is None else sd
    r_pro = r * math.exp(sd * rng.standard_normal())
    if math.log(rng.random()) < dispersion_log_ratio(r, r_pro, w_block, psi, n_block, priors):
        return r_pro, True
    return r, False


def sample_latent_edges(A, z, P, Psi, R, rng) -> LatentEdges:
    """Impute structural-zero flags X and latent interactions W given block parameters."""
    A = np.asarray(A)
    n = A.shape[0]
    iu = np.triu_indices(n, 1)
    zi, zj = np.asarray(z)[iu[0]], np.asarray(z)[iu[1]]
    x, w = _latent_pairs(A[iu], P[zi, zj], Psi[zi, zj], R[zi, zj], rng)
    X = np.zeros((n, n), dtype=np.int64)
    W = np.zeros((n, n), dtype=np.int64)
    X[iu], W[iu] = x, w
    return LatentEdges(X + X.T, W + W.T)


def structural_zero_prob(p, psi, r):
    """theta = p / (psi^r (1 - p) + p), probability that an observed zero is structural."""
    p = np.asarray(p, dtype=float)
    return p / (np.exp(r * np.log(psi)) * (1.0 - p) + p)


def _latent_pairs(a, p, psi, r, rng):
    theta = structural_zero_prob(p, psi, r)
    x = (rng.random(a.shape[0]) < theta) & (a == 0)
    w = a.astype(np.int64)
    idx = np.nonzero(x)[0]
    if idx.size:
        w[idx] = rng.negative_binomial(r[idx], psi[idx])
    return x.astype(np.int64), w


# ---------------------------------------------------------------------------


class ZinbSBM(BlockModel):
    """ZINB stochastic block model with a DMFM prior on the partition."""

    name = "zinb"

    def __init__(self, A, priors: ZinbPriors | None = None, dmfm_cfg=None, check_stats=False, random_scan=False):
        super().__init__(A, dmfm_cfg, check_stats)
        self.priors = priors or ZinbPriors()
        self.random_scan = random_scan

    def default_tuning(self) -> dict:
        return {"gamma_sd": self.dmfm.gamma_proposal_sd, "r_sd": self.priors.r_proposal_sd}

    def prior_block_params(self, K, rng):
        pr = self.priors
        return {
            "P": symmetrize_upper(rng.beta(pr.a_p, pr.b_p, size=(K, K))),
            "Psi": symmetrize_upper(rng.beta(pr.a_psi, pr.b_psi, size=(K, K))),
            "R": symmetrize_upper(rng.gamma(pr.a_r, 1.0 / pr.b_r, size=(K, K))),
        }

    def init_state(self, rng, k_init=10, gamma=1.0):
        part = self.initial_partition(rng, k_init, gamma)
        K = part.K
        block = {"P": np.full((K, K), 0.5), "Psi": np.full((K, K), 0.5), "R": np.ones((K, K))}
        state = SbmState(part, block, np.zeros_like(self.A), np.zeros_like(self.A))
        state.X, state.W = sample_latent_edges(self.A, part.z, block["P"], block["Psi"], block["R"], rng)
        return state

    def label_step(self, state, rng):
        part = state.part
        K = part.K
        stats = block_sufficient_stats(state.X, state.W, part.z, K)
        xs, ws = stats.x.astype(float), stats.w.astype(float)
        counts = np.bincount(part.z, minlength=K).astype(float)
        order = rng.permutation(self.n) if self.random_scan else np.arange(self.n)
        pr = self.priors
        _zinb_label_scan(
            part.z, state.X, state.W, counts, xs, ws, state.block["R"], _safe_log(part.S), order,
            pr.a_p, pr.b_p, pr.a_psi, pr.b_psi, rng,
        )
        stats = block_sufficient_stats(state.X, state.W, part.z, K)
        if self.check_stats and not (np.array_equal(stats.x, xs) and np.array_equal(stats.w, ws)):
            raise AssertionError("incrementally maintained block stats drifted")
        return stats

    def dispersion_step(self, state, rng, sd):
        """Vectorised dispersion update: independent MH updates of every block's r."""
        K = state.K
        R, Psi = state.block["R"], state.block["Psi"]
        lo, hi = self.pair_blocks(state.z)
        bidx = lo * K + hi
        w = state.W[self.iu].astype(float)
        n_block = np.bincount(bidx, minlength=K * K).reshape(K, K)
        R_pro = symmetrize_upper(R * np.exp(sd * rng.standard_normal((K, K))))
        r_old, r_new = R[lo, hi], R_pro[lo, hi]
        delta = gammaln(w + r_new) - gammaln(r_new) - gammaln(w + r_old) + gammaln(r_old)
        lik = np.bincount(bidx, weights=delta, minlength=K * K).reshape(K, K)
        lik += (R_pro - R) * n_block * np.log(Psi)
        pr = self.priors
        log_alpha = (
            lik + gamma_logpdf(R_pro, pr.a_r, pr.b_r) - gamma_logpdf(R, pr.a_r, pr.b_r) + np.log(R_pro / R)
        )
        accept = symmetrize_upper(np.log(rng.random((K, K))) < log_alpha)
        state.block["R"] = np.where(accept, R_pro, R)
        return float(accept[np.triu_indices(K)].mean())

    def kernel_steps(self, state, rng, tuning):
        stats = self.label_step(state, rng)  # labels
        state.block["P"], state.block["Psi"] = gibbs_block_params(stats, state.block["R"], self.priors, rng)  # block parameters
        r_acc = self.dispersion_step(state, rng, tuning.get("r_sd", self.priors.r_proposal_sd))  # dispersion
        z = state.z
        state.X, state.W = sample_latent_edges(
            self.A, z, state.block["P"], state.block["Psi"], state.block["R"], rng
        )  # latent edges
        return {"r_accept": r_acc}

    def simulate_latent(self, state, rng):
        lo, hi = self.pair_blocks(state.z)
        b = state.block
        m = lo.shape[0]
        x = (rng.random(m) < b["P"][lo, hi]).astype(np.int64)
        w = rng.negative_binomial(b["R"][lo, hi], b["Psi"][lo, hi]).astype(np.int64)
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
            "Psi": b["Psi"][:k, :k].tolist(),
            "R": b["R"][:k, :k].tolist(),
        }
