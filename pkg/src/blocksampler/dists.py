"""Distributions used by the samplers.

Negative binomial convention used everywhere in this package::

    NB(w; psi, r) = Gamma(w + r) / (Gamma(r) w!) * psi**r * (1 - psi)**w

so ``psi`` is the probability mass pushed toward zero and the mean is
``r (1 - psi) / psi``.  This is exactly numpy's ``negative_binomial(n=r, p=psi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.special import gammaln, log_expit

LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))


def make_rng(seed: int, stream_id: int = 0) -> np.random.Generator:
    return RngStream(int(seed), int(stream_id)).generator()


@dataclass(frozen=True)
class ZinbParams:
    p: float
    psi: float
    r: float

    def __post_init__(self):
        for name in ("p", "psi", "r"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"ZINB parameter {name} is not finite")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p} outside [0, 1]")
        if not 0.0 < self.psi <= 1.0:
            raise ValueError(f"psi={self.psi} outside (0, 1]")
        if self.r <= 0:
            raise ValueError(f"r={self.r} must be positive")


# ---------------------------------------------------------------------------
# pmfs and moments


def nb_logpmf(w, psi, r):
    w = np.asarray(w, dtype=float)
    return gammaln(w + r) - gammaln(r) - gammaln(w + 1) + r * np.log(psi) + w * np.log1p(-psi)


def zinb_logpmf(a, p, psi, r):
    """Log ZINB pmf, vectorised over all arguments."""
    a, p, psi, r = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (a, p, psi, r)))
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(psi)) and np.all(np.isfinite(r))):
        raise ValueError("non-finite ZINB parameter")
    with np.errstate(divide="ignore"):
        log_nb = np.log1p(-p) + nb_logpmf(a, psi, r)
        out = np.where(a == 0, np.logaddexp(np.log(p), log_nb), log_nb)
    return out if out.ndim else float(out)


def zinb_pmf(a, params: ZinbParams | None = None, *, p=None, psi=None, r=None):
    if params is not None:
        p, psi, r = params.p, params.psi, params.r
    a_arr = np.asarray(a)
    if np.any(a_arr < 0) or np.any(a_arr != np.floor(a_arr)):
        raise ValueError("ZINB support is the nonnegative integers")
    return np.exp(zinb_logpmf(a, p, psi, r))


def zinb_moments(params: ZinbParams) -> tuple[float, float]:
    p, psi, r = params.p, params.psi, params.r
    if psi <= 0:
        raise ValueError("psi = 0 gives an infinite mean")
    mu = r * (1 - psi) / psi
    var_nb = mu / psi
    mean = (1 - p) * mu
    # zero-inflated mixture: E[A^2] = (1-p)(var + mu^2)
    var = (1 - p) * (var_nb + mu * mu) - mean * mean
    return mean, var


def zip_moments(p: float, lam: float) -> tuple[float, float]:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    if lam <= 0:
        raise ValueError(f"lambda={lam} must be positive")
    mean = (1 - p) * lam
    return mean, mean * (1 + p * lam)


def bnb_log_pmf(m, alpha: float, a: float, b: float):
    """Beta-negative-binomial log pmf at m = 0, 1, 2, ..."""
    m = np.asarray(m, dtype=float)
    out = (
        gammaln(alpha + m) - gammaln(alpha) - gammaln(m + 1)
        + _lbeta(alpha + a, m + b) - _lbeta(a, b)
    )
    return out if out.ndim else float(out)


def _lbeta(a, b):
    return gammaln(a) + gammaln(b) - gammaln(a + b)


def gamma_laplace(u: float, gamma: float, K: int, n: int) -> tuple[float, float]:
    """Laplace transform and cumulant of Gamma(gamma/K, 1) at ``u``.

    Returns ``(psi(u; K), kappa(u; n, K))`` on the natural scale.
    """
    lp, lk = log_gamma_laplace(u, gamma, K, n)
    return math.exp(lp), math.exp(lk)


def log_gamma_laplace(u: float, gamma: float, K: int, n: int) -> tuple[float, float]:
    if u < 0 or gamma <= 0 or K < 1 or n < 0:
        raise ValueError("need u >= 0, gamma > 0, K >= 1, n >= 0")
    g = gamma / K
    log1u = math.log1p(u)
    log_psi = -g * log1u
    log_kappa = math.lgamma(g + n) - math.lgamma(g) - (g + n) * log1u
    return log_psi, log_kappa


def f_logpdf(x: float, d1: float = 6.0, d2: float = 3.0) -> float:
    """Log density of the F(d1, d2) distribution."""
    if x <= 0:
        return -math.inf
    h1, h2 = 0.5 * d1, 0.5 * d2
    return (
        h1 * math.log(d1 / d2) + (h1 - 1) * math.log(x)
        - (h1 + h2) * math.log1p(d1 * x / d2)
        - (math.lgamma(h1) + math.lgamma(h2) - math.lgamma(h1 + h2))
    )


def gamma_logpdf(x, shape: float, rate: float):
    """Gamma(shape, rate) log density, vectorised over ``x``."""
    x = np.asarray(x, dtype=float)
    out = shape * np.log(rate) - gammaln(shape) + (shape - 1) * np.log(x) - rate * x
    return out if out.ndim else float(out)


def logistic(eta):
    """Numerically stable inverse logit."""
    return np.exp(log_expit(eta))


def lognormal_proposal(x, sd: float, rng: np.random.Generator):
    """Random-walk proposal on log scale; returns ``(proposal, log Jacobian term)``.

    The log Jacobian term is ``log(x_pro / x)``, the correction the MH ratio
    needs when the target is expressed as a density in ``x``.
    """
    x = np.asarray(x, dtype=float)
    step = sd * rng.standard_normal(x.shape)
    prop = x * np.exp(step)
    return (prop, step) if prop.ndim else (float(prop), float(step))


def sample_nb(psi, r, rng: np.random.Generator):
    return rng.negative_binomial(r, psi)


# ---------------------------------------------------------------------------
# Polya-Gamma
#
# PG(1, c) uses Devroye's alternating-series sampler for J*(1, c/2), as in
# Polson, Scott & Windle.  PG(b, c) for real b adds floor(b) unit draws and a
# fractional-b draw from the truncated sum-of-gammas representation.

_TRUNC = 0.64
_TRUNC_RECIP = 1.0 / _TRUNC
_PI2 = math.pi * math.pi
_N_TERMS = 20
_SERIES_SHAPE = 4.0


@numba.njit(cache=True)
def _log_norm_cdf(x):
    if x > -30.0:
        v = 0.5 * math.erfc(-x / math.sqrt(2.0))
        return math.log(v) if v > 0.0 else -math.inf
    # asymptotic expansion far in the lower tail
    return -0.5 * x * x - math.log(-x) - 0.5 * math.log(2.0 * math.pi)


@numba.njit(cache=True)
def _a_coef(n, x):
    k = (n + 0.5) * math.pi
    if x > _TRUNC:
        return k * math.exp(-0.5 * k * k * x)
    elif x > 0.0:
        expnt = -1.5 * (math.log(0.5 * math.pi) + math.log(x)) + math.log(k) - 2.0 * (n + 0.5) * (n + 0.5) / x
        return math.exp(expnt)
    return 0.0


@numba.njit(cache=True)
def _mass_texpon(z):
    t = _TRUNC
    fz = 0.125 * _PI2 + 0.5 * z * z
    b = math.sqrt(1.0 / t) * (t * z - 1.0)
    a = -math.sqrt(1.0 / t) * (t * z + 1.0)
    x0 = math.log(fz) + fz * t
    xb = x0 - z + _log_norm_cdf(b)
    xa = x0 + z + _log_norm_cdf(a)
    qdivp = 4.0 / math.pi * (math.exp(xb) + math.exp(xa))
    return 1.0 / (1.0 + qdivp)


@numba.njit(cache=True)
def _rtigauss(z, rng):
    """Inverse-Gaussian(1/z, 1) truncated to (0, TRUNC)."""
    t = _TRUNC
    x = t + 1.0
    if _TRUNC_RECIP > z:
        alpha = 0.0
        while rng.random() > alpha:
            e1 = rng.standard_exponential()
            e2 = rng.standard_exponential()
            while e1 * e1 > 2.0 * e2 / t:
                e1 = rng.standard_exponential()
                e2 = rng.standard_exponential()
            x = 1.0 + e1 * t
            x = t / (x * x)
            alpha = math.exp(-0.5 * z * z * x)
    else:
        mu = 1.0 / z
        while x > t:
            y = rng.standard_normal()
            half_mu = 0.5 * mu
            mu_y = mu * y * y
            x = mu + half_mu * mu_y - half_mu * math.sqrt(4.0 * mu_y + mu_y * mu_y)
            if rng.random() > mu / (mu + x):
                x = mu * mu / x
    return x


@numba.njit(cache=True)
def _pg1(c, rng):
    z = abs(c) * 0.5
    fz = 0.125 * _PI2 + 0.5 * z * z
    mass = _mass_texpon(z)
    while True:
        if rng.random() < mass:
            x = _TRUNC + rng.standard_exponential() / fz
        else:
            x = _rtigauss(z, rng)
        s = _a_coef(0, x)
        y = rng.random() * s
        n = 0
        while True:
            n += 1
            if n % 2 == 1:
                s = s - _a_coef(n, x)
                if y <= s:
                    return 0.25 * x
            else:
                s = s + _a_coef(n, x)
                if y > s:
                    break


@numba.njit(cache=True)
def _pg_tail_sums(c2):
    """Sums over k > N of 1/d_k and 1/d_k^2, with d_k = (k - 1/2)^2 + c2."""
    head1 = 0.0
    head2 = 0.0
    for k in range(1, _N_TERMS + 1):
        d = (k - 0.5) * (k - 0.5) + c2
        head1 += 1.0 / d
        head2 += 1.0 / (d * d)
    a = math.sqrt(c2)
    if a < 1e-4:
        full1 = 0.5 * _PI2
        full2 = _PI2 * _PI2 / 6.0
    else:
        x = math.pi * a
        th = math.tanh(x)
        sech2 = 1.0 - th * th
        full1 = math.pi * th / (2.0 * a)
        full2 = math.pi * (th - x * sech2) / (4.0 * a * a * a)
    return max(full1 - head1, 0.0), max(full2 - head2, 0.0)


@numba.njit(cache=True)
def _pg_sum_of_gammas(b, c, rng):
    """PG(b, c) for small b from the gamma-series representation.

    The first terms are drawn exactly; the remaining tail is replaced by a
    gamma variable with the same mean and variance.
    """
    c2 = c * c / (4.0 * _PI2)
    acc = 0.0
    for k in range(1, _N_TERMS + 1):
        d = (k - 0.5) * (k - 0.5) + c2
        acc += rng.standard_gamma(b) / d
    t1, t2 = _pg_tail_sums(c2)
    if t1 > 0.0 and t2 > 0.0:
        # tail mean b*t1, variance b*t2
        acc += rng.standard_gamma(b * t1 * t1 / t2) * (t2 / t1)
    return acc / (2.0 * _PI2)


@numba.njit(cache=True)
def _pg_draw(b, c, rng):
    if b >= _SERIES_SHAPE:
        # cost of the series does not grow with b
        return _pg_sum_of_gammas(b, c, rng)
    nb = int(math.floor(b))
    frac = b - nb
    out = 0.0
    for _ in range(nb):
        out += _pg1(c, rng)
    if frac > 1e-12:
        out += _pg_sum_of_gammas(frac, c, rng)
    return out


@numba.njit(cache=True)
def _pg_fill(b, c, rng, out):
    for i in range(out.shape[0]):
        out[i] = _pg_draw(b[i], c[i], rng)


def sample_polya_gamma(b, c, rng: np.random.Generator, size=None):
    """Draw PG(b, c); ``b`` and ``c`` broadcast against each other and ``size``."""
    b_arr = np.asarray(b, dtype=float)
    c_arr = np.asarray(c, dtype=float)
    shape = np.broadcast_shapes(b_arr.shape, c_arr.shape, () if size is None else np.atleast_1d(size).tolist())
    if np.any(b_arr <= 0):
        raise ValueError("Polya-Gamma shape b must be positive")
    bb = np.ascontiguousarray(np.broadcast_to(b_arr, shape), dtype=np.float64).ravel()
    cc = np.ascontiguousarray(np.broadcast_to(c_arr, shape), dtype=np.float64).ravel()
    out = np.empty(bb.shape[0])
    _pg_fill(bb, cc, rng, out)
    out = out.reshape(shape)
    return out if out.ndim else float(out)


def polya_gamma_mean(b, c):
    c = np.asarray(c, dtype=float)
    small = np.abs(c) < 1e-8
    safe = np.where(small, 1.0, c)
    return np.where(small, np.asarray(b) / 4.0, np.asarray(b) / (2 * safe) * np.tanh(safe / 2))
