import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from blocksampler.dists import (
    ZinbParams, bnb_log_pmf, f_logpdf, gamma_laplace, logistic, make_rng, polya_gamma_mean,
    sample_polya_gamma, zinb_moments, zinb_pmf, zip_moments,
)


def test_zinb_pmf_geometric_reduction():
    a = np.arange(6)
    np.testing.assert_allclose(zinb_pmf(a, p=0.0, psi=0.3, r=1.0), 0.3 * 0.7 ** a, rtol=1e-12)


def test_zinb_pmf_zero_hand_value():
    assert zinb_pmf(0, p=0.5, psi=0.5, r=1.0) == pytest.approx(0.75, abs=1e-15)


def test_zinb_pmf_sums_to_one():
    total = zinb_pmf(np.arange(2001), ZinbParams(0.1, 0.1, 5.0)).sum()
    assert total == pytest.approx(1.0, abs=1e-10)


def test_zinb_pmf_matches_scipy_nbinom():
    a = np.arange(1, 30)
    np.testing.assert_allclose(zinb_pmf(a, p=0.2, psi=0.4, r=2.5), 0.8 * stats.nbinom.pmf(a, 2.5, 0.4), rtol=1e-12)


def test_zinb_domain_errors():
    with pytest.raises(ValueError):
        ZinbParams(0.1, float("nan"), 1.0)
    with pytest.raises(ValueError):
        zinb_pmf(1, p=0.1, psi=np.inf, r=1.0)
    with pytest.raises(ValueError):
        zinb_moments(_raw(0.1, 0.0, 1.0))


def _raw(p, psi, r):
    obj = object.__new__(ZinbParams)
    object.__setattr__(obj, "p", p)
    object.__setattr__(obj, "psi", psi)
    object.__setattr__(obj, "r", r)
    return obj


@pytest.mark.parametrize("params, expected", [
    ((0.1, 0.1, 5.0), (40.5, 587.25)),
    ((0.7, 0.2, 3.0), (3.6, 48.24)),
    ((1.0, 0.5, 2.0), (0.0, 0.0)),
])
def test_zinb_moments(params, expected):
    mean, var = zinb_moments(ZinbParams(*params))
    assert mean == pytest.approx(expected[0], abs=1e-9)
    assert var == pytest.approx(expected[1], abs=1e-9)


@pytest.mark.parametrize("p, lam, expected", [
    (0.1, 3.0, (2.70, 3.510)),
    (0.7, 1.5, (0.45, 0.9225)),
    (0.0, 2.2, (2.2, 2.2)),
])
def test_zip_moments(p, lam, expected):
    mean, var = zip_moments(p, lam)
    assert mean == pytest.approx(expected[0], abs=1e-9)
    assert var == pytest.approx(expected[1], abs=1e-9)


def test_zinb_moments_match_pmf_sums():
    par = ZinbParams(0.3, 0.25, 1.7)
    a = np.arange(3000)
    pmf = zinb_pmf(a, par)
    mean, var = zinb_moments(par)
    assert (a * pmf).sum() == pytest.approx(mean, rel=1e-10)
    assert ((a - mean) ** 2 * pmf).sum() == pytest.approx(var, rel=1e-10)


def test_bnb_pmf():
    assert bnb_log_pmf(0, 1.0, 4.0, 3.0) == pytest.approx(math.log(4 / 7), abs=1e-14)
    total = np.exp(bnb_log_pmf(np.arange(5001), 1.0, 4.0, 3.0)).sum()
    assert total == pytest.approx(1.0, abs=1e-8)


def test_gamma_laplace_hand_values():
    psi, kappa = gamma_laplace(1.0, 1.0, 1, 2)
    assert kappa == pytest.approx(0.25, abs=1e-15)
    psi0, kappa0 = gamma_laplace(0.7, 2.0, 3, 0)
    assert kappa0 == pytest.approx(psi0, rel=1e-14)
    assert gamma_laplace(0.0, 2.0, 3, 4)[0] == 1.0


def test_f_logpdf_matches_scipy():
    for x in (0.1, 1.0, 4.0):
        assert f_logpdf(x) == pytest.approx(stats.f.logpdf(x, 6, 3), rel=1e-12)


def test_logistic_stable():
    assert logistic(0.0) == 0.5
    assert logistic(700.0) == pytest.approx(1.0)
    assert np.isfinite(logistic(-800.0))
    assert logistic(2.0) == pytest.approx(math.e ** 2 / (1 + math.e ** 2), rel=1e-14)


def test_make_rng_reproducible():
    a = make_rng(5, 2).random(4)
    b = make_rng(5, 2).random(4)
    c = make_rng(5, 3).random(4)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_polya_gamma_domain():
    with pytest.raises(ValueError):
        sample_polya_gamma(0.0, 1.0, make_rng(0))


@pytest.mark.parametrize("b, c", [(1.0, 0.0), (2.5, 3.0)])
def test_polya_gamma_mean(b, c):
    draws = sample_polya_gamma(b, c, make_rng(11), size=10**6)
    assert draws.mean() == pytest.approx(float(polya_gamma_mean(b, c)), rel=0.01)


@pytest.mark.parametrize("b, c", [(1.0, 1.5), (0.6, 0.2), (5.5, 2.0)])
def test_polya_gamma_variance(b, c):
    # var PG(b, c) = b / (4 c^3) (sinh c - c) / cosh^2(c / 2)
    draws = sample_polya_gamma(b, c, make_rng(12), size=400_000)
    var = b / (4 * c ** 3) * (math.sinh(c) - c) / math.cosh(c / 2) ** 2
    assert draws.var() == pytest.approx(var, rel=0.02)


@settings(max_examples=25, deadline=None)
@given(b=st.floats(0.05, 30.0), c=st.floats(-20.0, 20.0))
def test_polya_gamma_positive(b, c):
    draws = sample_polya_gamma(b, c, make_rng(1), size=50)
    assert np.all(draws > 0) and np.all(np.isfinite(draws))
