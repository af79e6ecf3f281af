import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blocksampler.partition import (
    BlockStats, PartitionState, add_node, block_sufficient_stats, canonical_labels, leave_one_out,
    relabel_occupied,
)


def brute_stats(X, W, z, K):
    x = np.zeros((K, K), dtype=np.int64)
    w = np.zeros((K, K), dtype=np.int64)
    n = np.zeros((K, K), dtype=np.int64)
    for i in range(len(z)):
        for j in range(i + 1, len(z)):
            l, m = z[i], z[j]
            for a, b in {(l, m), (m, l)}:
                x[a, b] += X[i, j]
                w[a, b] += W[i, j]
                n[a, b] += 1
    return BlockStats(x, w, n)


def test_hand_case():
    X = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]])
    z = np.array([0, 0, 1])
    st_ = block_sufficient_stats(X, X, z, 2)
    assert st_.x[0, 0] == 1 and st_.x[0, 1] == 1 and st_.x[1, 0] == 1
    assert st_.n[0, 0] == 1 and st_.n[0, 1] == 2 and st_.n[1, 1] == 0


def test_one_block_counts_all_pairs():
    n = 6
    X = np.zeros((n, n), dtype=int)
    assert block_sufficient_stats(X, X, np.zeros(n, int), 1).n[0, 0] == n * (n - 1) // 2


def test_shape_mismatch():
    with pytest.raises(ValueError):
        block_sufficient_stats(np.zeros((3, 3)), np.zeros((2, 2)), [0, 0, 0], 1)


def test_partition_state_validation():
    with pytest.raises(ValueError):
        PartitionState(z=[0, 3], K=2, S=np.ones(2))
    with pytest.raises(ValueError):
        PartitionState(z=[0, 1], K=2, S=np.ones(3))


@st.composite
def networks(draw):
    n = draw(st.integers(2, 9))
    K = draw(st.integers(1, 4))
    z = np.array(draw(st.lists(st.integers(0, K - 1), min_size=n, max_size=n)))
    vals = draw(st.lists(st.integers(0, 5), min_size=n * n, max_size=n * n))
    W = np.triu(np.array(vals).reshape(n, n), 1)
    W = W + W.T
    X = (W % 2 == 0).astype(np.int64)
    np.fill_diagonal(X, 0)
    return X, W, z, K


@settings(max_examples=60, deadline=None)
@given(networks())
def test_block_stats_match_brute_force(net):
    X, W, z, K = net
    assert block_sufficient_stats(X, W, z, K) == brute_stats(X, W, z, K)


@settings(max_examples=60, deadline=None)
@given(networks(), st.data())
def test_leave_one_out_and_add_node(net, data):
    X, W, z, K = net
    i = data.draw(st.integers(0, len(z) - 1))
    c = data.draw(st.integers(0, K - 1))
    full = block_sufficient_stats(X, W, z, K)
    loo = leave_one_out(full, i, z, X, W)
    mask = np.arange(len(z)) != i
    sub = brute_stats(X[np.ix_(mask, mask)], W[np.ix_(mask, mask)], z[mask], K)
    assert loo == sub
    z2 = z.copy()
    z2[i] = c
    assert add_node(loo, i, c, z, X, W) == block_sufficient_stats(X, W, z2, K)


def test_relabel_example():
    P = np.arange(16.0).reshape(4, 4)
    z, k, order, (P2,), S2 = relabel_occupied([2, 2, 0], 4, P, S=np.array([10.0, 11, 12, 13]))
    np.testing.assert_array_equal(z, [0, 0, 1])
    assert k == 2
    # old labels 2 and 0 now sit at 0 and 1
    assert P2[0, 1] == P[2, 0] and P2[1, 1] == P[0, 0]
    assert S2[0] == 12.0 and S2[1] == 10.0


def test_relabel_canonical_is_identity():
    z, k, order, _, _ = relabel_occupied([0, 1, 1, 2], 3)
    np.testing.assert_array_equal(order, [0, 1, 2])
    np.testing.assert_array_equal(z, [0, 1, 1, 2])


@given(st.lists(st.integers(0, 6), min_size=1, max_size=20))
def test_canonical_labels_idempotent(z):
    c = canonical_labels(z)
    np.testing.assert_array_equal(canonical_labels(c), c)
    assert c[0] == 0
