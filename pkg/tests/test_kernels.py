import math

import numpy as np
import pytest

from blocksampler.czinb import (
    CzinbPriors, CzinbSBM, block_gaussian_params, block_information, global_dispersion_log_ratio,
    gibbs_regression_coeffs, kappa_pairs, logistic_links,
)
from blocksampler.dists import gamma_logpdf, make_rng
from blocksampler.netdata import generate_linkpred_network, generate_scenario
from blocksampler.partition import BlockStats
from blocksampler.sampler import SamplerConfig, run_chain
from blocksampler.summary import summarize_partitions
from blocksampler.zinb import (
    ZinbPriors, ZinbSBM, dispersion_log_ratio, gibbs_block_params, sample_latent_edges, structural_zero_prob,
)
from blocksampler.zip_sbm import ZipPriors, ZipSBM, sample_latent_edges_zip

# -- ZINB -------------------------------------------------------------------


def test_theta_hand_values():
    assert structural_zero_prob(0.5, 0.5, 1.0) == pytest.approx(2 / 3, abs=1e-15)
    assert structural_zero_prob(0.0, 0.3, 2.0) == 0.0


def test_beta_update_full_block():
    n = np.array([[7]])
    stats = BlockStats(n.copy(), np.zeros((1, 1), int), n)
    rng = make_rng(1)
    draws = np.array([gibbs_block_params(stats, np.ones((1, 1)), ZinbPriors(), rng)[0][0, 0] for _ in range(20_000)])
    assert draws.mean() == pytest.approx(8 / 9, abs=0.005)


def test_beta_update_empty_block_is_prior():
    z = np.zeros((1, 1), int)
    stats = BlockStats(z, z, z)
    pri = ZinbPriors(a_p=2.0, b_p=5.0)
    rng = make_rng(2)
    draws = np.array([gibbs_block_params(stats, np.ones((1, 1)), pri, rng)[0][0, 0] for _ in range(20_000)])
    assert draws.mean() == pytest.approx(2 / 7, abs=0.005)


def test_dispersion_ratio_identity_and_empty_block():
    pri = ZinbPriors(a_r=2.0, b_r=1.5)
    assert dispersion_log_ratio(1.3, 1.3, [2, 0, 5], 0.4, 3, pri) == pytest.approx(0.0, abs=1e-12)
    got = dispersion_log_ratio(1.0, 2.0, [], 0.4, 0, pri)
    want = gamma_logpdf(2.0, 2.0, 1.5) - gamma_logpdf(1.0, 2.0, 1.5) + math.log(2.0)
    assert got == pytest.approx(want, rel=1e-12)


def test_latent_edges_respect_observed():
    A, _ = generate_scenario(1, 30, 0)
    z = np.zeros(30, int)
    X, W = sample_latent_edges(A, z, np.full((1, 1), 0.4), np.full((1, 1), 0.2), np.full((1, 1), 2.0), make_rng(0))
    pos = A > 0
    assert np.all(X[pos] == 0) and np.array_equal(W[pos], A[pos])
    np.testing.assert_array_equal(W * (1 - X), A)
    X0, _ = sample_latent_edges(A, z, np.zeros((1, 1)), np.full((1, 1), 0.2), np.full((1, 1), 2.0), make_rng(0))
    assert X0.sum() == 0


def test_zinb_sampler_recovers_scenario2():
    A, truth = generate_scenario(2, 60, 11)
    model = ZinbSBM(A, check_stats=True)
    records, _, diag = run_chain(model, SamplerConfig(iterations=600, burn_in=300, seed=1), make_rng(1))
    summ = summarize_partitions([r["z"] for r in records], truth.z_true)
    assert summ.K_hat == 3 and summ.vi_to_truth <= 0.05
    assert 0 < diag["r_accept"] < 1


# -- ZIP --------------------------------------------------------------------


def test_zip_latent_poisson_fill():
    A = np.zeros((40, 40), dtype=int)
    X, W = sample_latent_edges_zip(A, np.zeros(40, int), np.full((1, 1), 0.5), np.full((1, 1), 3.0), make_rng(4))
    iu = np.triu_indices(40, 1)
    # theta = 0.5 / (0.5 e^-3 + 0.5)
    assert X[iu].mean() == pytest.approx(1 / (1 + math.exp(-3)), abs=0.03)
    np.testing.assert_array_equal(W * (1 - X), A)


def test_zip_sampler_runs():
    A, truth = generate_scenario(2, 40, 3)
    model = ZipSBM(A, ZipPriors())
    records, _, _ = run_chain(model, SamplerConfig(iterations=300, burn_in=150), make_rng(3))
    assert {"P", "Lam", "z"} <= set(records[0])


# -- CZINB ------------------------------------------------------------------


def test_logistic_links_hand_values():
    psi, p = logistic_links(np.array([2.0]), np.array([1.0]), np.array([0.0]))
    assert psi == pytest.approx(math.exp(2) / (1 + math.exp(2)), rel=1e-14)
    assert p == 0.5


def test_block_gaussian_hand_case():
    b, B = block_gaussian_params([[1.0]], [1.0], [0.5], [0.0], [[1.0]])
    assert B[0, 0] == pytest.approx(0.5) and b[0] == pytest.approx(0.25)


def test_block_gaussian_prior_limit():
    Y = np.array([[1.0, 2.0], [0.5, -1.0]])
    kap = np.array([0.3, -0.2])
    B0 = np.diag([2.0, 3.0])
    b0 = np.array([0.1, -0.1])
    b, B = block_gaussian_params(Y, np.zeros(2), kap, b0, B0)
    np.testing.assert_allclose(B, B0)
    np.testing.assert_allclose(b, b0 + B0 @ Y.T @ kap)


def test_block_gaussian_non_pd():
    with pytest.raises(np.linalg.LinAlgError):
        block_gaussian_params([[1.0]], [-5.0], [0.0], [0.0], [[1.0]])


def test_kappa():
    k1, k2 = kappa_pairs(np.array([1, 0]), np.array([3, 0]), 3.0)
    assert k1[0] == 0.0 and k2[0] == 0.5 and k2[1] == -0.5


def test_empty_block_coefficients_from_prior():
    K, q = 2, 2
    Q = np.zeros((K, K, 2, q, q))
    H = np.zeros((K, K, 2, q))
    pri = CzinbPriors(b0=1.0, B0_scale=4.0)
    rng = make_rng(6)
    draws = np.array([gibbs_regression_coeffs(Q, H, pri, rng)[0][0, 1] for _ in range(20_000)])
    np.testing.assert_allclose(draws.mean(axis=0), 1.0, atol=0.05)
    np.testing.assert_allclose(draws.var(axis=0), 4.0, rtol=0.05)


def test_coefficient_draw_matches_block_gaussian():
    rng = make_rng(9)
    n, q = 6, 2
    Y = rng.normal(size=(n, n, q))
    Y = (Y + Y.transpose(1, 0, 2)) / 2
    Om = rng.gamma(1.0, 1.0, (2, n, n))
    Om = (Om + Om.transpose(0, 2, 1)) / 2
    Kap = rng.normal(size=(2, n, n))
    Kap = (Kap + Kap.transpose(0, 2, 1)) / 2
    z = np.zeros(n, int)
    Q, H = block_information(Y, Om, Kap, z, 1)
    pri = CzinbPriors(B0_scale=2.0)
    iu = np.triu_indices(n, 1)
    b, B = block_gaussian_params(Y[iu], Om[0][iu], Kap[0][iu], pri.mean(q), pri.cov(q))
    draws = np.array([gibbs_regression_coeffs(Q, H, pri, rng)[0][0, 0] for _ in range(20_000)])
    np.testing.assert_allclose(draws.mean(axis=0), b, atol=0.03)
    np.testing.assert_allclose(np.cov(draws.T), B, atol=0.03)


def test_global_dispersion_ratio():
    pri = CzinbPriors(a_r=2.0, b_r=1.0)
    assert global_dispersion_log_ratio(1.5, 1.5, [1, 2], np.log([0.3, 0.4]), pri) == pytest.approx(0.0, abs=1e-12)
    log_psi = np.log([0.3, 0.4, 0.8])
    got = global_dispersion_log_ratio(1.0, 1.7, [0, 0, 0], log_psi, pri)
    want = 0.7 * log_psi.sum() + gamma_logpdf(1.7, 2.0, 1.0) - gamma_logpdf(1.0, 2.0, 1.0) + math.log(1.7)
    assert got == pytest.approx(want, rel=1e-12)


def test_czinb_sampler_recovers_linkpred_network():
    A, cov, truth = generate_linkpred_network(40, 2)
    model = CzinbSBM(A, cov.Y, check_stats=True)
    records, _, diag = run_chain(model, SamplerConfig(iterations=300, burn_in=150), make_rng(2))
    summ = summarize_partitions([r["z"] for r in records], truth.z_true)
    assert summ.K_hat == 2 and summ.vi_to_truth <= 0.05
    assert 0 < diag["r_accept"] < 1


def test_czinb_requires_matching_covariates():
    A, cov, _ = generate_linkpred_network(20, 0)
    with pytest.raises(ValueError):
        CzinbSBM(A, cov.Y[:10, :10])
