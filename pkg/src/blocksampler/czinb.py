"""CZINB-SBM kernel: block-specific logistic regressions with Polya-Gamma augmentation.

Given the Polya-Gamma variables, the coefficients of each block pair have a
Gaussian conditional, so the label update integrates them out.  Every block
is tracked through its information-form statistics

    Q[l, m, s] = sum_{ij in lm} omega_ij,s y_ij y_ij'
    H[l, m, s] = sum_{ij in lm} kappa_ij,s y_ij

(without the prior), and moving a node adds or removes its q x q rank
contributions.  ``s = 0`` refers to psi (counts), ``s = 1`` to p (zero
inflation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import gammaln

from .dists import _pg_fill, gamma_logpdf, logistic
from .sampler import BlockModel, SbmState, symmetrize_upper
from .zinb import _latent_pairs, _safe_log, _sample_log_categorical


@dataclass
class CzinbPriors:
    b0: float = 0.0
    B0_scale: float = 10.0
    a_r: float = 1.0
    b_r: float = 1.0
    r_proposal_sd: float = 0.1

    def __post_init__(self):
        for key in ("B0_scale", "a_r", "b_r", "r_proposal_sd"):
            if not getattr(self, key) > 0:
                raise ValueError(f"{key} must be positive")

    def mean(self, q: int) -> np.ndarray:
        return np.full(q, float(self.b0))

    def cov(self, q: int) -> np.ndarray:
        return self.B0_scale * np.eye(q)


def logistic_links(y, beta1, beta2):
    """``(psi, p)`` from the linear predictors ``y'beta1`` and ``y'beta2``."""
    y = np.asarray(y, dtype=float)
    eta1 = y @ np.asarray(beta1, dtype=float)
    eta2 = y @ np.asarray(beta2, dtype=float)
    return logistic(eta1), logistic(eta2)


def block_gaussian_params(Y_lm, omega, kappa, b0, B0):
    """Conditional mean ``b`` and covariance ``B`` of one block's coefficients.

    ``B = (B0^-1 + Y' diag(omega) Y)^-1`` and ``b = B (B0^-1 b0 + Y' kappa)``.
    """
    b0 = np.asarray(b0, dtype=float)
    B0 = np.asarray(B0, dtype=float)
    P0 = np.linalg.inv(B0)
    Y_lm = np.asarray(Y_lm, dtype=float).reshape(-1, b0.shape[0])
    omega = np.asarray(omega, dtype=float).ravel()
    kappa = np.asarray(kappa, dtype=float).ravel()
    Q = P0 + (Y_lm * omega[:, None]).T @ Y_lm
    h = P0 @ b0 + Y_lm.T @ kappa
    try:
        L = np.linalg.cholesky(Q)
    except np.linalg.LinAlgError as err:
        raise np.linalg.LinAlgError(f"block precision not positive definite (cond {np.linalg.cond(Q):.3g})") from err
    Linv = np.linalg.inv(L)
    B = Linv.T @ Linv
    return B @ h, B


# ---------------------------------------------------------------------------
# collapsed label update


@numba.njit(cache=True)
def _gauss_log_evidence(Q, h, work):
    """-1/2 log|Q| + 1/2 h'Q^-1 h via an in-place Cholesky of ``work``."""
    q = Q.shape[0]
    for a in range(q):
        for b in range(q):
            work[a, b] = Q[a, b]
    logdet = 0.0
    for j in range(q):
        d = work[j, j]
        for k in range(j):
            d -= work[j, k] * work[j, k]
        if not d > 0.0:
            return np.nan
        d = math.sqrt(d)
        work[j, j] = d
        logdet += math.log(d)
        for a in range(j + 1, q):
            v = work[a, j]
            for k in range(j):
                v -= work[a, k] * work[j, k]
            work[a, j] = v / d
    quad = 0.0
    v = np.empty(q)
    for a in range(q):
        t = h[a]
        for k in range(a):
            t -= work[a, k] * v[k]
        v[a] = t / work[a, a]
        quad += v[a] * v[a]
    return -logdet + 0.5 * quad


@numba.njit(cache=True)
def _cov_node_totals(i, z, Y, Om, Kap, K, dQ, dH, ni):
    q = Y.shape[2]
    dQ[:] = 0.0
    dH[:] = 0.0
    ni[:] = 0.0
    for j in range(z.shape[0]):
        if j == i:
            continue
        m = z[j]
        ni[m] += 1.0
        for s in range(2):
            om = Om[s, i, j]
            ka = Kap[s, i, j]
            for a in range(q):
                ya = Y[i, j, a]
                dH[m, s, a] += ka * ya
                for b in range(q):
                    dQ[m, s, a, b] += om * ya * Y[i, j, b]


@numba.njit(cache=True)
def _cov_move_node(c, sign, Q, H, counts, dQ, dH):
    K = counts.shape[0]
    for m in range(K):
        Q[c, m] += sign * dQ[m]
        H[c, m] += sign * dH[m]
        if m != c:
            Q[m, c] += sign * dQ[m]
            H[m, c] += sign * dH[m]
    counts[c] += sign


@numba.njit(cache=True)
def _cov_node_logweights(Q, H, P0, h0, logS, dQ, dH, ni, out):
    K = ni.shape[0]
    q = P0.shape[0]
    work = np.empty((q, q))
    Qa = np.empty((q, q))
    ha = np.empty(q)
    for c in range(K):
        lw = logS[c]
        for m in range(K):
            if ni[m] == 0.0:
                continue
            for s in range(2):
                for a in range(q):
                    ha[a] = h0[a] + H[c, m, s, a]
                    for b in range(q):
                        Qa[a, b] = P0[a, b] + Q[c, m, s, a, b]
                before = _gauss_log_evidence(Qa, ha, work)
                for a in range(q):
                    ha[a] += dH[m, s, a]
                    for b in range(q):
                        Qa[a, b] += dQ[m, s, a, b]
                after = _gauss_log_evidence(Qa, ha, work)
                lw += after - before
        out[c] = lw


@numba.njit(cache=True)
def _czinb_label_scan(z, Y, Om, Kap, counts, Q, H, P0, h0, logS, order, rng):
    K = counts.shape[0]
    q = Y.shape[2]
    dQ = np.empty((K, 2, q, q))
    dH = np.empty((K, 2, q))
    ni = np.empty(K)
    logw = np.empty(K)
    for idx in range(order.shape[0]):
        i = order[idx]
        _cov_node_totals(i, z, Y, Om, Kap, K, dQ, dH, ni)
        _cov_move_node(z[i], -1.0, Q, H, counts, dQ, dH)
        _cov_node_logweights(Q, H, P0, h0, logS, dQ, dH, ni, logw)
        for c in range(K):
            if math.isnan(logw[c]) or logw[c] == np.inf:
                raise FloatingPointError("non-finite label log-weight")
        c = _sample_log_categorical(logw, rng)
        z[i] = c
        _cov_move_node(c, 1.0, Q, H, counts, dQ, dH)


@numba.njit(cache=True)
def _log_expit_scalar(x):
    if x >= 0.0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@numba.njit(cache=True)
def _pair_obs_loglik(y, b1, b2, a, r):
    """Observed-data ZINB log-likelihood of one pair, up to terms free of the coefficients."""
    eta1 = 0.0
    eta2 = 0.0
    for k in range(y.shape[0]):
        eta1 += y[k] * b1[k]
        eta2 += y[k] * b2[k]
    log_p = _log_expit_scalar(eta2)
    log_1mp = _log_expit_scalar(-eta2)
    log_psi = _log_expit_scalar(eta1)
    if a > 0:
        return log_1mp + r * log_psi + a * _log_expit_scalar(-eta1)
    # P(A = 0) = p + (1 - p) psi^r
    u = log_p
    v = log_1mp + r * log_psi
    if u > v:
        return u + math.log1p(math.exp(v - u))
    return v + math.log1p(math.exp(u - v))


@numba.njit(cache=True)
def _czinb_marginal_label_scan(z, Y, A, beta1, beta2, r, logS, order, rng):
    """Label scan given coefficients and r, with the latent edges and Polya-Gamma variables integrated out."""
    K = logS.shape[0]
    n = z.shape[0]
    logw = np.empty(K)
    for idx in range(order.shape[0]):
        i = order[idx]
        for c in range(K):
            lw = logS[c]
            for j in range(n):
                if j == i:
                    continue
                lw += _pair_obs_loglik(Y[i, j], beta1[c, z[j]], beta2[c, z[j]], A[i, j], r)
            logw[c] = lw
        for c in range(K):
            if math.isnan(logw[c]) or logw[c] == np.inf:
                raise FloatingPointError("non-finite label log-weight")
        z[i] = _sample_log_categorical(logw, rng)


def block_information(Y, Om, Kap, z, K):
    """Data part of the per-block information matrices, ``Q`` (K,K,2,q,q) and ``H`` (K,K,2,q)."""
    n, _, q = Y.shape
    iu = np.triu_indices(n, 1)
    z = np.asarray(z)
    zi, zj = z[iu[0]], z[iu[1]]
    lo, hi = np.minimum(zi, zj), np.maximum(zi, zj)
    bidx = lo * K + hi
    rows = Y[iu]
    outer = (rows[:, :, None] * rows[:, None, :]).reshape(-1, q * q)
    Q = np.zeros((K * K, 2, q * q))
    H = np.zeros((K * K, 2, q))
    for s in range(2):
        om = Om[s][iu]
        ka = Kap[s][iu]
        for col in range(q * q):
            Q[:, s, col] = np.bincount(bidx, weights=om * outer[:, col], minlength=K * K)
        for col in range(q):
            H[:, s, col] = np.bincount(bidx, weights=ka * rows[:, col], minlength=K * K)
    Q = symmetrize_upper(Q.reshape(K, K, 2, q, q))
    H = symmetrize_upper(H.reshape(K, K, 2, q))
    return Q, H


def collapsed_label_logweights_cov(i, z, Y, Om, Kap, S, priors: CzinbPriors) -> np.ndarray:
    """Unnormalised log P(z_i = c | rest) with the coefficients integrated out.

    ``Om`` and ``Kap`` are ``(2, n, n)`` arrays of Polya-Gamma variables and
    the matching kappa values.
    """
    z = np.asarray(z, dtype=np.int64).copy()
    Y = np.asarray(Y, dtype=float)
    K = len(S)
    q = Y.shape[2]
    Q, H = block_information(Y, Om, Kap, z, K)
    counts = np.bincount(z, minlength=K).astype(float)
    dQ, dH, ni = np.empty((K, 2, q, q)), np.empty((K, 2, q)), np.empty(K)
    _cov_node_totals(i, z, Y, np.asarray(Om, float), np.asarray(Kap, float), K, dQ, dH, ni)
    _cov_move_node(z[i], -1.0, Q, H, counts, dQ, dH)
    P0 = np.linalg.inv(priors.cov(q))
    h0 = P0 @ priors.mean(q)
    out = np.empty(K)
    _cov_node_logweights(Q, H, P0, h0, _safe_log(S), dQ, dH, ni, out)
    bad = np.isnan(out) | (out == np.inf)
    if np.any(bad):
        raise FloatingPointError(f"non-finite label log-weight for candidates {np.nonzero(bad)[0].tolist()}")
    return out


# ---------------------------------------------------------------------------
# coefficient, dispersion and latent updates


def gibbs_regression_coeffs(Q, H, priors: CzinbPriors, rng):
    """One Gaussian draw per block pair and link, mirrored.  Returns ``(beta1, beta2)``."""
    K, _, _, q, _ = Q.shape
    P0 = np.linalg.inv(priors.cov(q))
    h0 = P0 @ priors.mean(q)
    Qp = Q + P0
    Hp = H + h0
    try:
        L = np.linalg.cholesky(Qp)
    except np.linalg.LinAlgError as err:
        raise np.linalg.LinAlgError("block precision not positive definite") from err
    mean = np.linalg.solve(Qp, Hp[..., None])[..., 0]
    eps = rng.standard_normal(mean.shape)
    # L' x = eps gives x ~ N(0, Q^-1)
    dev = np.linalg.solve(np.swapaxes(L, -1, -2), eps[..., None])[..., 0]
    beta = symmetrize_upper(mean + dev)
    return beta[:, :, 0, :], beta[:, :, 1, :]


def global_dispersion_log_ratio(r, r_pro, w, log_psi, priors: CzinbPriors) -> float:
    """Log MH ratio for the global r over all unordered pairs, Jacobian included."""
    w = np.asarray(w, dtype=float)
    lik = np.sum(gammaln(w + r_pro) - gammaln(w + r)) - w.size * (gammaln(r_pro) - gammaln(r))
    lik += (r_pro - r) * np.sum(log_psi)
    prior = gamma_logpdf(r_pro, priors.a_r, priors.b_r) - gamma_logpdf(r, priors.a_r, priors.b_r)
    return float(lik + prior + math.log(r_pro / r))


def mh_update_global_dispersion(r, w, log_psi, priors: CzinbPriors, rng, sd=None):
    """Log-normal random walk on r.  Returns ``(r, accepted)``."""
    sd = priors.r_proposal_sd if sd is None else sd
    r_pro = r * math.exp(sd * rng.standard_normal())
    if math.log(rng.random()) < global_dispersion_log_ratio(r, r_pro, w, log_psi, priors):
        return r_pro, True
    return r, False


def _log_expit(x):
    return -np.logaddexp(0.0, -x)


def pair_predictors(Yp, lo, hi, beta1, beta2):
    """Linear predictors ``(eta1, eta2)`` for the upper-triangle pairs."""
    eta1 = np.einsum("pq,pq->p", Yp, beta1[lo, hi])
    eta2 = np.einsum("pq,pq->p", Yp, beta2[lo, hi])
    return eta1, eta2


def sample_polya_gamma_pairs(w, r, eta1, eta2, rng):
    """omega_1 ~ PG(w + r, eta1) and omega_2 ~ PG(1, eta2), pairwise."""
    b1 = np.ascontiguousarray(w + r, dtype=np.float64)
    om1 = np.empty(b1.shape[0])
    _pg_fill(b1, np.ascontiguousarray(eta1, dtype=np.float64), rng, om1)
    om2 = np.empty(b1.shape[0])
    _pg_fill(np.ones(b1.shape[0]), np.ascontiguousarray(eta2, dtype=np.float64), rng, om2)
    return om1, om2


def kappa_pairs(x, w, r):
    return (r - np.asarray(w, dtype=float)) / 2.0, np.asarray(x, dtype=float) - 0.5


class CzinbSBM(BlockModel):
    """ZINB SBM with block-specific logistic regressions on pairwise covariates."""

    name = "czinb"

    def __init__(
        self, A, Y, priors: CzinbPriors | None = None, dmfm_cfg=None, check_stats=False, random_scan=False,
        marginal_label_step: bool = True, warm_start: int = 0,
    ):
        super().__init__(A, dmfm_cfg, check_stats)
        if warm_start < 0:
            raise ValueError("warm_start must be nonnegative")
        self.warm_start = int(warm_start)
        self.marginal_label_step = marginal_label_step
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == 2:
            Y = Y[:, :, None]
        if Y.shape[:2] != (self.n, self.n):
            raise ValueError(f"covariates have shape {Y.shape[:2]}, expected {(self.n, self.n)}")
        if not np.all(np.isfinite(Y)):
            raise ValueError("covariates must be finite")
        self.Y = np.ascontiguousarray(Y)
        self.q = Y.shape[2]
        self.Yp = self.Y[self.iu]
        self.priors = priors or CzinbPriors()
        self.random_scan = random_scan
        self.L0 = np.linalg.cholesky(self.priors.cov(self.q))
        self.P0 = np.linalg.inv(self.priors.cov(self.q))
        self.h0 = self.P0 @ self.priors.mean(self.q)

    def default_tuning(self) -> dict:
        return {"gamma_sd": self.dmfm.gamma_proposal_sd, "r_sd": self.priors.r_proposal_sd}

    def prior_block_params(self, K, rng):
        mean = self.priors.mean(self.q)
        draws = mean + rng.standard_normal((2, K, K, self.q)) @ self.L0.T
        return {"beta1": symmetrize_upper(draws[0]), "beta2": symmetrize_upper(draws[1])}

    def prior_extra(self, rng):
        return {"r": float(rng.gamma(self.priors.a_r, 1.0 / self.priors.b_r))}

    def init_state(self, rng, k_init=10, gamma=1.0):
        if self.warm_start > 0:
            part = self.warm_start_partition(rng, k_init, gamma)
        else:
            part = self.initial_partition(rng, k_init, gamma)
        K = part.K
        b0 = self.priors.mean(self.q)
        block = {"beta1": np.tile(b0, (K, K, 1)), "beta2": np.tile(b0, (K, K, 1))}
        state = SbmState(part, block, np.zeros_like(self.A), np.zeros_like(self.A), extra={"r": 1.0})
        self.latent_step(state, rng)
        return state

    def warm_start_partition(self, rng, k_init, gamma):
        """Initial labels from a short covariate-free ZINB-SBM run on the same network."""
        from .partition import PartitionState
        from .zinb import ZinbSBM

        base = ZinbSBM(self.A, dmfm_cfg=self.dmfm, random_scan=self.random_scan)
        st = base.init_state(rng, k_init=k_init, gamma=gamma)
        tuning = base.default_tuning()
        for _ in range(self.warm_start):
            base.sweep(st, rng, tuning)
        part = st.part
        return PartitionState(z=part.z.copy(), K=part.K, S=part.S.copy(), u=part.u, gamma=part.gamma)

    # -- pieces --------------------------------------------------------------
    def _to_matrix(self, vals):
        out = np.zeros((self.n, self.n))
        out[self.iu] = vals
        return out + out.T

    def latent_step(self, state, rng):
        """Latent update: (x, w) given the links, then the Polya-Gamma variables."""
        lo, hi = self.pair_blocks(state.z)
        r = state.extra["r"]
        eta1, eta2 = pair_predictors(self.Yp, lo, hi, state.block["beta1"], state.block["beta2"])
        psi = np.clip(logistic(eta1), 1e-300, 1.0)
        p = logistic(eta2)
        x, w = _latent_pairs(self.a_pairs, p, psi, np.full(p.shape[0], r), rng)
        self.set_latent(state, x, w)
        self.refresh_aux(state, rng, eta=(eta1, eta2))

    def refresh_aux(self, state, rng, eta=None):
        """Draw the Polya-Gamma variables given (x, w), r and the coefficients."""
        if eta is None:
            lo, hi = self.pair_blocks(state.z)
            eta = pair_predictors(self.Yp, lo, hi, state.block["beta1"], state.block["beta2"])
        x, w = state.X[self.iu], state.W[self.iu]
        r = state.extra["r"]
        om1, om2 = sample_polya_gamma_pairs(w, r, eta[0], eta[1], rng)
        k1, k2 = kappa_pairs(x, w, r)
        state.extra["Omega"] = np.stack([self._to_matrix(om1), self._to_matrix(om2)])
        state.extra["Kappa"] = np.stack([self._to_matrix(k1), self._to_matrix(k2)])

    def label_step(self, state, rng):
        part = state.part
        K = part.K
        Om, Kap = state.extra["Omega"], state.extra["Kappa"]
        Q, H = block_information(self.Y, Om, Kap, part.z, K)
        counts = np.bincount(part.z, minlength=K).astype(float)
        order = rng.permutation(self.n) if self.random_scan else np.arange(self.n)
        _czinb_label_scan(part.z, self.Y, Om, Kap, counts, Q, H, self.P0, self.h0, _safe_log(part.S), order, rng)
        if self.check_stats:
            Q2, H2 = block_information(self.Y, Om, Kap, part.z, K)
            scale = 1.0 + np.abs(Q2).max()
            if not (np.allclose(Q, Q2, rtol=0, atol=1e-9 * scale) and np.allclose(H, H2, rtol=0, atol=1e-9 * scale)):
                raise AssertionError("incrementally maintained block information drifted")
        return Q, H

    def dispersion_step(self, state, rng, sd):
        lo, hi = self.pair_blocks(state.z)
        eta1 = np.einsum("pq,pq->p", self.Yp, state.block["beta1"][lo, hi])
        w = state.W[self.iu]
        r, acc = mh_update_global_dispersion(state.extra["r"], w, _log_expit(eta1), self.priors, rng, sd)
        state.extra["r"] = r
        return float(acc)

    def marginal_label_move(self, state, rng):
        """Relabel nodes from the observed-data likelihood, then redraw (X, W, Omega).

        Together the two draws form a blocked update of (z, X, W, Omega).
        Without it nodes tend to freeze, because each node's latent edges and
        Polya-Gamma variables were drawn under its current block's parameters.
        """
        part = state.part
        order = rng.permutation(self.n) if self.random_scan else np.arange(self.n)
        _czinb_marginal_label_scan(
            part.z, self.Y, self.A, state.block["beta1"], state.block["beta2"],
            float(state.extra["r"]), _safe_log(part.S), order, rng,
        )
        self.latent_step(state, rng)

    def kernel_steps(self, state, rng, tuning):
        if self.marginal_label_step:
            self.marginal_label_move(state, rng)
        Q, H = self.label_step(state, rng)  # labels
        state.block["beta1"], state.block["beta2"] = gibbs_regression_coeffs(Q, H, self.priors, rng)  # coefficients
        acc = self.dispersion_step(state, rng, tuning.get("r_sd", self.priors.r_proposal_sd))  # dispersion
        self.latent_step(state, rng)  # latent edges
        return {"r_accept": acc}

    def simulate_latent(self, state, rng):
        lo, hi = self.pair_blocks(state.z)
        eta1, eta2 = pair_predictors(self.Yp, lo, hi, state.block["beta1"], state.block["beta2"])
        x = (rng.random(lo.shape[0]) < logistic(eta2)).astype(np.int64)
        psi = np.clip(logistic(eta1), 1e-300, 1.0)
        w = rng.negative_binomial(state.extra["r"], psi).astype(np.int64)
        return x, w

    def pair_links(self, state, pairs=None):
        """``(p, psi)`` for the given ``(i, j)`` pairs (default: all upper pairs)."""
        z = state.z
        if pairs is None:
            i, j = self.iu
        else:
            pairs = np.asarray(pairs)
            i, j = pairs[:, 0], pairs[:, 1]
        lo, hi = np.minimum(z[i], z[j]), np.maximum(z[i], z[j])
        y = self.Y[i, j]
        psi, p = logistic(np.einsum("pq,pq->p", y, state.block["beta1"][lo, hi])), logistic(
            np.einsum("pq,pq->p", y, state.block["beta2"][lo, hi])
        )
        return p, psi

    def record(self, state):
        k = state.part.k
        b = state.block
        return {
            "K": int(state.K),
            "k": int(k),
            "gamma": float(state.part.gamma),
            "z": state.z.tolist(),
            "r": float(state.extra["r"]),
            "beta1": b["beta1"][:k, :k].tolist(),
            "beta2": b["beta2"][:k, :k].tolist(),
        }

