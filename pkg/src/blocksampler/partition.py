"""Label bookkeeping and block-pair sufficient statistics.

Labels are 0-based internally (``0..K-1``); file formats use 1-based labels.
Block-pair matrices are symmetric ``K x K``.  Off-diagonal entries count each
unordered node pair once (``n_lm = n_l n_m``), diagonal entries count
unordered within-block pairs (``n_ll = n_l (n_l - 1) / 2``).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class PartitionState:
    z: np.ndarray
    K: int
    S: np.ndarray
    u: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        self.z = np.asarray(self.z, dtype=np.int64)
        self.S = np.asarray(self.S, dtype=float)
        if self.z.size and (self.z.min() < 0 or self.z.max() >= self.K):
            raise ValueError("labels must lie in 0..K-1")
        if self.S.shape != (self.K,):
            raise ValueError(f"S has shape {self.S.shape}, expected ({self.K},)")

    @property
    def n(self) -> int:
        return self.z.shape[0]

    @property
    def counts(self) -> np.ndarray:
        return np.bincount(self.z, minlength=self.K)

    @property
    def k(self) -> int:
        return int(np.count_nonzero(self.counts))


@dataclass
class BlockStats:
    x: np.ndarray
    w: np.ndarray
    n: np.ndarray = field(repr=False)

    def copy(self) -> "BlockStats":
        return BlockStats(self.x.copy(), self.w.copy(), self.n.copy())

    def __eq__(self, other):
        return (
            isinstance(other, BlockStats)
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.w, other.w)
            and np.array_equal(self.n, other.n)
        )


def pair_counts(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.int64)
    npairs = np.outer(counts, counts)
    np.fill_diagonal(npairs, counts * (counts - 1) // 2)
    return npairs


def block_sum(M: np.ndarray, z: np.ndarray, K: int) -> np.ndarray:
    """Sum a symmetric zero-diagonal pair matrix into K x K block totals."""
    M = np.asarray(M)
    onehot = np.eye(K, dtype=M.dtype)[np.asarray(z, dtype=np.int64)]
    tot = onehot.T @ M @ onehot
    d = np.diag_indices(K)
    # within-block pairs were counted in both orientations
    tot[d] = tot[d] // 2 if tot.dtype.kind in "iu" else tot[d] / 2
    return tot


def block_sufficient_stats(X, W, z, K: int) -> BlockStats:
    X = np.asarray(X)
    W = np.asarray(W)
    z = np.asarray(z, dtype=np.int64)
    n = z.shape[0]
    if X.shape != (n, n) or W.shape != (n, n):
        raise ValueError(f"expected {n}x{n} matrices, got {X.shape} and {W.shape}")
    return BlockStats(
        block_sum(X.astype(np.int64), z, K),
        block_sum(W.astype(np.int64), z, K),
        pair_counts(np.bincount(z, minlength=K)),
    )


def node_block_totals(i: int, z, K: int, M) -> np.ndarray:
    """Per-block totals of row ``i`` of ``M`` (the diagonal entry is excluded)."""
    row = np.asarray(M[i], dtype=float).copy()
    row[i] = 0
    return np.bincount(z, weights=row, minlength=K)


def leave_one_out(stats: BlockStats, i: int, z, X, W) -> BlockStats:
    """Block statistics of the network with node ``i`` removed, in O(n)."""
    z = np.asarray(z, dtype=np.int64)
    K = stats.x.shape[0]
    c = z[i]
    xi = node_block_totals(i, z, K, X).astype(np.int64)
    wi = node_block_totals(i, z, K, W).astype(np.int64)
    ni = np.bincount(z, minlength=K).astype(np.int64)
    ni[c] -= 1
    out = stats.copy()
    for arr, d in ((out.x, xi), (out.w, wi), (out.n, ni)):
        arr[c, :] -= d
        arr[:, c] -= d
        arr[c, c] += d[c]
    return out


def add_node(stats: BlockStats, i: int, c: int, z, X, W) -> BlockStats:
    """Inverse of :func:`leave_one_out`: put node ``i`` into block ``c``.

    ``z[i]`` is ignored; the other labels define the incident blocks.
    """
    z = np.asarray(z, dtype=np.int64).copy()
    K = stats.x.shape[0]
    mask = np.ones(z.shape[0], dtype=bool)
    mask[i] = False
    xi = np.bincount(z[mask], weights=np.asarray(X[i], dtype=float)[mask], minlength=K).astype(np.int64)
    wi = np.bincount(z[mask], weights=np.asarray(W[i], dtype=float)[mask], minlength=K).astype(np.int64)
    ni = np.bincount(z[mask], minlength=K).astype(np.int64)
    out = stats.copy()
    for arr, d in ((out.x, xi), (out.w, wi), (out.n, ni)):
        arr[c, :] += d
        arr[:, c] += d
        arr[c, c] -= d[c]
    return out


def canonical_order(z, K: int) -> np.ndarray:
    """Permutation ``order`` with ``order[new] = old``.

    Occupied labels come first in order of first appearance in ``z``; empty
    labels follow in their original order.
    """
    z = np.asarray(z, dtype=np.int64)
    _, first = np.unique(z, return_index=True)
    occupied = z[np.sort(first)]
    empty = np.setdiff1d(np.arange(K), occupied, assume_unique=True)
    return np.concatenate([occupied, empty]).astype(np.int64)


def relabel_occupied(z, K: int, *block_arrays, S=None):
    """Move occupied components to labels ``0..k-1``.

    Block-indexed arrays are permuted on their first two axes, ``S`` on its
    only axis.  Returns ``(z_new, k, order, permuted_arrays, S_new)``.
    """
    z = np.asarray(z, dtype=np.int64)
    order = canonical_order(z, K)
    inverse = np.empty(K, dtype=np.int64)
    inverse[order] = np.arange(K)
    z_new = inverse[z]
    k = int(np.unique(z).size)
    permuted = tuple(np.asarray(a)[np.ix_(order, order)] for a in block_arrays)
    S_new = None if S is None else np.asarray(S)[order]
    return z_new, k, order, permuted, S_new


def canonical_labels(z) -> np.ndarray:
    """Relabel a partition by order of first appearance (0-based)."""
    z = np.asarray(z)
    _, first, inv = np.unique(z, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first)] = np.arange(first.size)
    return rank[inv.ravel()]
