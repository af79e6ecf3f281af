"""Collapsed label weights against quadrature of the full joint on tiny networks."""

import numpy as np
import pytest
from scipy.special import logsumexp

from blocksampler.czinb import CzinbPriors, collapsed_label_logweights_cov
from blocksampler.zinb import ZinbPriors, collapsed_label_logweights
from blocksampler.zip_sbm import ZipPriors, zip_label_logweights

from oracles import (
    gauss_block_logmarginal, label_probs_oracle, zinb_block_logmarginal, zip_block_logmarginal,
)

N_INSTANCES = 50
RTOL = 1e-6


def _normalise(logw):
    return np.exp(logw - logsumexp(logw))


def _symmetric(n, rng, draw):
    M = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            M[i, j] = M[j, i] = draw(rng)
    return M


def zinb_instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 5))
    K = int(rng.integers(1, 5))
    z = rng.integers(0, K, size=n)
    X = _symmetric(n, rng, lambda g: g.random() < 0.3)
    W = _symmetric(n, rng, lambda g: g.integers(0, 8))
    R = rng.uniform(0.3, 4.0, (K, K))
    R = np.triu(R) + np.triu(R, 1).T
    S = rng.gamma(1.0, 1.0, K) + 0.05
    pri = ZinbPriors(*rng.uniform(0.5, 3.0, 4))
    i = int(rng.integers(0, n))
    return i, z, X, W, R, S, pri


def zinb_oracle(i, z, X, W, R, S, pri):
    def block(pairs, l, m):
        x = [X[a, b] for a, b in pairs]
        w = [W[a, b] for a, b in pairs]
        return zinb_block_logmarginal(x, w, R[l, m], pri.a_p, pri.b_p, pri.a_psi, pri.b_psi)

    return label_probs_oracle(i, z, S, block)


@pytest.mark.parametrize("seed", range(N_INSTANCES))
def test_zinb_label_weights_match_quadrature(seed):
    i, z, X, W, R, S, pri = zinb_instance(seed)
    got = _normalise(collapsed_label_logweights(i, z, X, W, R, S, pri))
    want = zinb_oracle(i, z, X, W, R, S, pri)
    np.testing.assert_allclose(got, want, rtol=RTOL, atol=1e-300)


def zip_instance(seed):
    rng = np.random.default_rng(10_000 + seed)
    n = int(rng.integers(2, 5))
    K = int(rng.integers(1, 5))
    z = rng.integers(0, K, size=n)
    X = _symmetric(n, rng, lambda g: g.random() < 0.3)
    W = _symmetric(n, rng, lambda g: g.integers(0, 8))
    S = rng.gamma(1.0, 1.0, K) + 0.05
    pri = ZipPriors(*rng.uniform(0.5, 3.0, 4))
    return int(rng.integers(0, n)), z, X, W, S, pri


@pytest.mark.parametrize("seed", range(N_INSTANCES))
def test_zip_label_weights_match_quadrature(seed):
    i, z, X, W, S, pri = zip_instance(seed)

    def block(pairs, l, m):
        return zip_block_logmarginal([X[a, b] for a, b in pairs], [W[a, b] for a, b in pairs],
                                     pri.a_p, pri.b_p, pri.a_lam, pri.b_lam)

    got = _normalise(zip_label_logweights(i, z, X, W, S, pri))
    np.testing.assert_allclose(got, label_probs_oracle(i, z, S, block), rtol=RTOL, atol=1e-300)


def czinb_instance(seed):
    rng = np.random.default_rng(20_000 + seed)
    n = int(rng.integers(2, 5))
    K = int(rng.integers(1, 5))
    z = rng.integers(0, K, size=n)
    Y = np.zeros((n, n, 1))
    Om = np.zeros((2, n, n))
    Kap = np.zeros((2, n, n))
    for a in range(n):
        for b in range(a + 1, n):
            Y[a, b, 0] = Y[b, a, 0] = rng.normal()
            for s in range(2):
                Om[s, a, b] = Om[s, b, a] = rng.gamma(1.0, 0.5)
                Kap[s, a, b] = Kap[s, b, a] = rng.uniform(-3, 3)
    S = rng.gamma(1.0, 1.0, K) + 0.05
    pri = CzinbPriors(b0=float(rng.normal()), B0_scale=float(rng.uniform(0.5, 5.0)))
    return int(rng.integers(0, n)), z, Y, Om, Kap, S, pri


def czinb_oracle(i, z, Y, Om, Kap, S, pri):
    def block(pairs, l, m):
        total = 0.0
        for s in range(2):
            total += gauss_block_logmarginal([Y[a, b, 0] for a, b in pairs], [Om[s, a, b] for a, b in pairs],
                                             [Kap[s, a, b] for a, b in pairs], pri.b0, pri.B0_scale)
        return total

    return label_probs_oracle(i, z, S, block)


@pytest.mark.parametrize("seed", range(N_INSTANCES))
def test_czinb_label_weights_match_quadrature(seed):
    i, z, Y, Om, Kap, S, pri = czinb_instance(seed)
    got = _normalise(collapsed_label_logweights_cov(i, z, Y, Om, Kap, S, pri))
    np.testing.assert_allclose(got, czinb_oracle(i, z, Y, Om, Kap, S, pri), rtol=RTOL, atol=1e-300)


def test_identical_candidates_get_equal_weights():
    # node 0 and two empty components with equal S: both empty candidates tie
    z = np.array([0, 1, 1])
    X = np.zeros((3, 3), dtype=np.int64)
    W = np.array([[0, 2, 3], [2, 0, 1], [3, 1, 0]])
    R = np.ones((4, 4))
    S = np.array([1.0, 1.0, 0.5, 0.5])
    lw = collapsed_label_logweights(0, z, X, W, R, S, ZinbPriors())
    assert lw[2] == pytest.approx(lw[3], rel=1e-14)


def test_czinb_prior_washout():
    # with a very diffuse prior and tiny data every candidate gets nearly the same weight
    i, z, Y, Om, Kap, S, _ = czinb_instance(3)
    Om = Om * 1e-9
    Kap = Kap * 1e-9
    S = np.ones_like(S)
    lw = collapsed_label_logweights_cov(i, z, Y, Om, Kap, S, CzinbPriors(B0_scale=1e6))
    np.testing.assert_allclose(_normalise(lw), np.full(len(S), 1 / len(S)), rtol=1e-4)
