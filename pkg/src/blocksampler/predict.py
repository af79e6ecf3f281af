"""Posterior-predictive link scoring and the masked-pair prediction experiment."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from .dists import logistic, make_rng
from .netdata import DataError, mask_nonzero
from .sampler import SamplerConfig, run_chain


@dataclass
class PredictiveScores:
    pairs: np.ndarray
    prob_nonzero: np.ndarray
    expected_weight: np.ndarray


def _draw_links(rec, i, j, model: str, Y):
    """Per-pair ``(p, psi, r)`` (ZINB family) or ``(p, lam)`` (ZIP) for one stored draw."""
    z = np.asarray(rec["z"])
    lo, hi = np.minimum(z[i], z[j]), np.maximum(z[i], z[j])
    if model == "zip":
        return np.asarray(rec["P"])[lo, hi], np.asarray(rec["Lam"])[lo, hi]
    if model == "zinb":
        return np.asarray(rec["P"])[lo, hi], np.asarray(rec["Psi"])[lo, hi], np.asarray(rec["R"])[lo, hi]
    y = Y[i, j]
    b1 = np.asarray(rec["beta1"])[lo, hi]
    b2 = np.asarray(rec["beta2"])[lo, hi]
    psi = logistic(np.einsum("pq,pq->p", y, b1))
    p = logistic(np.einsum("pq,pq->p", y, b2))
    return p, psi, np.full(p.shape, float(rec["r"]))


def draw_scores(p, psi, r):
    """P(A > 0) and E[A] under ZINB(p, psi, r)."""
    p, psi, r = (np.asarray(a, dtype=float) for a in (p, psi, r))
    prob = (1.0 - p) * -np.expm1(r * np.log(psi))
    expected = (1.0 - p) * r * (1.0 - psi) / psi
    return prob, expected


def predictive_scores(records, pairs, model: str, Y=None) -> PredictiveScores:
    """Average the per-draw predictive probability of a nonzero edge and its expected weight."""
    if not records:
        raise ValueError("empty chain")
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    n = len(records[0]["z"])
    if pairs.size and (pairs.min() < 0 or pairs.max() >= n or np.any(pairs[:, 0] == pairs[:, 1])):
        raise ValueError(f"pair indices must be distinct nodes in [0, {n})")
    if model == "czinb":
        if Y is None:
            raise ValueError("covariates required for the czinb model")
        Y = np.asarray(Y, dtype=float)
        if Y.ndim == 2:
            Y = Y[:, :, None]
    i, j = pairs[:, 0], pairs[:, 1]
    prob = np.zeros(len(pairs))
    expected = np.zeros(len(pairs))
    for rec in records:
        links = _draw_links(rec, i, j, model, Y)
        if model == "zip":
            p, lam = links
            pr, ex = (1.0 - p) * -np.expm1(-lam), (1.0 - p) * lam
        else:
            pr, ex = draw_scores(*links)
        prob += pr
        expected += ex
    return PredictiveScores(pairs, prob / len(records), expected / len(records))


def auc(scores, labels) -> float:
    """Mann-Whitney AUC; tied scores count one half."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    n1 = int(labels.sum())
    n0 = labels.size - n1
    if n1 == 0 or n0 == 0:
        raise ValueError("AUC needs both classes")
    ranks = rankdata(scores)
    return float((ranks[labels].sum() - n1 * (n1 + 1) / 2.0) / (n1 * n0))


def rmse(predicted, truth) -> float:
    predicted = np.asarray(predicted, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if predicted.shape != truth.shape:
        raise ValueError("length mismatch")
    if predicted.size == 0:
        raise ValueError("rmse of an empty set")
    return float(np.sqrt(np.mean((predicted - truth) ** 2)))


# ---------------------------------------------------------------------------
# experiment loop


@dataclass
class LinkpredConfig:
    model: str = "czinb"
    replications: int = 10
    fraction: float = 0.2
    seed: int = 0
    jobs: int = 1
    sampler: dict = field(default_factory=dict)
    settings: dict = field(default_factory=dict)


@dataclass
class LinkpredReport:
    model: str
    auc: list[float]
    rmse: list[float]
    failed: list[tuple[int, str]]
    config: dict

    @property
    def auc_mean(self) -> float:
        return float(np.mean(self.auc)) if self.auc else math.nan

    @property
    def auc_sd(self) -> float:
        return float(np.std(self.auc, ddof=1)) if len(self.auc) > 1 else 0.0

    @property
    def rmse_mean(self) -> float:
        return float(np.mean(self.rmse)) if self.rmse else math.nan

    @property
    def rmse_sd(self) -> float:
        return float(np.std(self.rmse, ddof=1)) if len(self.rmse) > 1 else 0.0


def evaluation_set(A, mask):
    """Masked pairs (label 1) plus every unmasked pair that is zero in ``A`` (label 0)."""
    A = np.asarray(A)
    n = A.shape[0]
    iu = np.triu_indices(n, 1)
    masked = np.zeros((n, n), dtype=bool)
    masked[mask.pairs[:, 0], mask.pairs[:, 1]] = True
    neg = (A[iu] == 0) & ~masked[iu]
    pairs = np.vstack([mask.pairs, np.column_stack([iu[0][neg], iu[1][neg]])])
    labels = np.concatenate([np.ones(len(mask), dtype=int), np.zeros(int(neg.sum()), dtype=int)])
    return pairs, labels


def linkpred_replication(A, Y, cfg: LinkpredConfig, rep: int):
    """One masked-fit-score replication; returns ``(auc, rmse)``."""
    from .models import build_model

    A_train, mask = mask_nonzero(A, cfg.fraction, make_rng(cfg.seed, 2 * rep))
    if len(mask) == 0:
        raise DataError("empty mask")
    model = build_model(cfg.model, A_train, Y, cfg.settings)
    scfg = SamplerConfig(**{**cfg.sampler, "seed": cfg.seed})
    records, _, _ = run_chain(model, scfg, make_rng(cfg.seed, 2 * rep + 1))
    pairs, labels = evaluation_set(A, mask)
    scores = predictive_scores(records, pairs, cfg.model, Y)
    m = len(mask)
    return auc(scores.prob_nonzero, labels), rmse(scores.expected_weight[:m], mask.original)


def _safe_replication(args):
    A, Y, cfg, rep = args
    try:
        return rep, linkpred_replication(A, Y, cfg, rep), None
    except DataError:
        raise
    except Exception as err:  # a failed fit is reported, not fatal
        return rep, None, f"{type(err).__name__}: {err}"


def run_linkpred_experiment(A, Y, cfg: LinkpredConfig) -> LinkpredReport:
    A = np.asarray(A)
    if not np.any(A > 0):
        raise DataError("network has no nonzero pairs")
    if cfg.model == "czinb" and Y is None:
        raise DataError("covariates required")
    if not 0.0 < cfg.fraction < 1.0:
        raise DataError("empty mask" if cfg.fraction == 0 else f"mask fraction {cfg.fraction} outside (0, 1)")
    tasks = [(A, Y, cfg, rep) for rep in range(cfg.replications)]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_safe_replication, tasks))
    else:
        results = [_safe_replication(t) for t in tasks]
    results.sort(key=lambda item: item[0])
    aucs, rmses, failed = [], [], []
    for rep, res, err in results:
        if res is None:
            failed.append((rep, err))
        else:
            aucs.append(res[0])
            rmses.append(res[1])
    return LinkpredReport(cfg.model, aucs, rmses, failed, asdict(cfg))
