"""Posterior summaries: VI distance, minVI point estimate, credible ball, chain storage."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .partition import canonical_labels


def _entropy(counts: np.ndarray, n: int) -> float:
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def vi_distance(z1, z2) -> float:
    """Variation of information H(z1) + H(z2) - 2 I(z1, z2), natural log."""
    z1 = np.asarray(z1)
    z2 = np.asarray(z2)
    if z1.shape != z2.shape:
        raise ValueError(f"partitions have different lengths {z1.shape} and {z2.shape}")
    n = z1.shape[0]
    if n == 0:
        return 0.0
    a = canonical_labels(z1)
    b = canonical_labels(z2)
    table = np.bincount(a * (b.max() + 1) + b).astype(float)
    h_joint = _entropy(table, n)
    vi = 2.0 * h_joint - _entropy(np.bincount(a), n) - _entropy(np.bincount(b), n)
    return max(vi, 0.0)


def _unique_partitions(chain) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Canonical unique partitions, their counts, and first-occurrence index."""
    Z = np.array([canonical_labels(z) for z in chain])
    uniq, first, inverse, counts = np.unique(Z, axis=0, return_index=True, return_inverse=True, return_counts=True)
    order = np.argsort(first)
    return uniq[order], counts[order], first[order]


def _vi_matrix(U: np.ndarray) -> np.ndarray:
    """Pairwise VI between rows of ``U`` (canonical labels)."""
    m, n = U.shape
    kmax = int(U.max()) + 1
    H = np.array([_entropy(np.bincount(u), n) for u in U])
    out = np.zeros((m, m))
    for a in range(m):
        codes = U[a][None, :] * kmax + U  # (m, n)
        offsets = codes + (np.arange(m) * kmax * kmax)[:, None]
        tab = np.bincount(offsets.ravel(), minlength=m * kmax * kmax).reshape(m, kmax * kmax) / n
        with np.errstate(divide="ignore", invalid="ignore"):
            hj = -np.where(tab > 0, tab * np.log(tab), 0.0).sum(axis=1)
        out[a] = np.maximum(2 * hj - H[a] - H, 0.0)
    return out


def expected_vi(chain) -> tuple[np.ndarray, np.ndarray]:
    """Posterior expected VI of every distinct sampled partition.

    Returns ``(partitions, expected_losses)`` in order of first occurrence.
    """
    U, counts, _ = _unique_partitions(chain)
    D = _vi_matrix(U)
    return U, D @ counts / counts.sum()


def minvi_point_estimate(chain) -> np.ndarray:
    """Sampled partition minimising the average VI to all draws (ties: first occurrence)."""
    if len(chain) == 0:
        raise ValueError("empty chain")
    U, loss = expected_vi(chain)
    # losses equal up to rounding count as ties
    return U[int(np.nonzero(loss <= loss.min() + 1e-12)[0][0])]


def credible_ball_radius(chain, z_hat, level: float = 0.95) -> float:
    """Smallest eps with at least ``level`` of the draws inside VI(z_hat, .) <= eps."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must lie in (0, 1)")
    d = np.sort([vi_distance(z_hat, z) for z in chain])
    idx = max(int(math.ceil(level * d.size - 1e-12)) - 1, 0)
    return float(d[idx])


@dataclass
class ClusterSummary:
    z_hat: np.ndarray
    K_hat: int
    ball_radius: float
    vi_to_truth: float | None = None


def summarize_partitions(chain, z_true=None, level: float = 0.95) -> ClusterSummary:
    z_hat = minvi_point_estimate(chain)
    return ClusterSummary(
        z_hat=z_hat,
        K_hat=int(np.unique(z_hat).size),
        ball_radius=credible_ball_radius(chain, z_hat, level),
        vi_to_truth=None if z_true is None else vi_distance(z_hat, z_true),
    )


# ---------------------------------------------------------------------------
# coefficient summaries


def align_blocks(z_hat, z_draw) -> np.ndarray:
    """Map each block of ``z_hat`` to the draw's label with maximal overlap."""
    z_hat = np.asarray(z_hat)
    z_draw = np.asarray(z_draw)
    kh, kd = z_hat.max() + 1, z_draw.max() + 1
    table = np.zeros((kh, kd), dtype=np.int64)
    np.add.at(table, (z_hat, z_draw), 1)
    return table.argmax(axis=1)


def summarize_coefficients(records, z_hat, l: int, m: int, s: int, key_fmt: str = "beta{}"):
    """Posterior mean and 95% equal-tailed interval of beta_{lm,s} (0-based blocks of z_hat).

    Draws whose partition equals ``z_hat`` are used when there are any;
    otherwise every draw contributes with its blocks matched to ``z_hat``
    by maximal overlap.
    """
    z_hat = canonical_labels(z_hat)
    if max(l, m) >= z_hat.max() + 1:
        raise ValueError(f"block pair ({l + 1}, {m + 1}) is not occupied in the point estimate")
    key = key_fmt.format(s)
    exact = [rec for rec in records if np.array_equal(canonical_labels(rec["z"]), z_hat)]
    use = exact or records
    draws = []
    for rec in use:
        mp = align_blocks(z_hat, canonical_labels(rec["z"]))
        # canonical relabelling of a stored draw keeps first-appearance order,
        # which matches how records store their occupied blocks
        draws.append(np.asarray(rec[key])[mp[l], mp[m]])
    return summarize_draws(np.array(draws))


def summarize_draws(draws) -> tuple[np.ndarray, np.ndarray]:
    draws = np.asarray(draws, dtype=float)
    if draws.ndim == 1:
        draws = draws[:, None]
    mean = draws.mean(axis=0)
    interval = np.percentile(draws, [2.5, 97.5], axis=0).T
    return mean, interval


# ---------------------------------------------------------------------------
# chain storage


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class ChainStore:
    records: list[dict]
    meta: dict = field(default_factory=dict)

    @property
    def partitions(self) -> list[np.ndarray]:
        return [np.asarray(rec["z"], dtype=np.int64) for rec in self.records]

    def trace(self, key: str) -> np.ndarray:
        return np.array([rec[key] for rec in self.records])

    def save(self, directory, tag: str = "0"):
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        with (d / f"chain_{tag}.jsonl").open("w") as fh:
            for rec in self.records:
                out = dict(rec)
                out["z"] = [int(c) + 1 for c in rec["z"]]
                fh.write(json.dumps(out, sort_keys=True) + "\n")
        with (d / f"partitions_{tag}.csv").open("w", newline="") as fh:
            wr = csv.writer(fh)
            n = len(self.records[0]["z"]) if self.records else 0
            wr.writerow(["iter"] + [f"node{i + 1}" for i in range(n)])
            for rec in self.records:
                wr.writerow([rec["iter"]] + [int(c) + 1 for c in rec["z"]])
        with (d / f"meta_{tag}.json").open("w") as fh:
            json.dump(self.meta, fh, sort_keys=True, indent=1, default=str)

    @classmethod
    def load(cls, directory, tag: str = "0") -> "ChainStore":
        d = Path(directory)
        records = []
        with (d / f"chain_{tag}.jsonl").open() as fh:
            for line in fh:
                rec = json.loads(line)
                rec["z"] = [c - 1 for c in rec["z"]]
                records.append(rec)
        meta_path = d / f"meta_{tag}.json"
        meta = json.loads(meta_path.read_text()) if meta_path.exists() else {}
        return cls(records, meta)
