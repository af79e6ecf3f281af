import numpy as np
import pytest

from blocksampler.netdata import (
    DataError, check_adjacency, generate_czinb_network, generate_linkpred_network, generate_scenario,
    load_adjacency, load_covariates, load_mask, mask_nonzero, save_adjacency, save_covariates, save_mask,
)


def test_dense_adjacency(tmp_path):
    f = tmp_path / "a.csv"
    f.write_text("0,2,0\n2,0,0\n0,0,0\n")
    A = load_adjacency(f, "dense")
    assert np.count_nonzero(A) == 2


def test_edge_list(tmp_path):
    f = tmp_path / "e.csv"
    f.write_text("i,j,w\n1,2,2\n2,3,5\n")
    A = load_adjacency(f)
    assert A[0, 1] == 2 and A[2, 1] == 5 and A[0, 2] == 0


def test_edge_list_self_loop(tmp_path):
    f = tmp_path / "e.csv"
    f.write_text("1,1,4\n")
    with pytest.raises(DataError, match="self-loop"):
        load_adjacency(f)


def test_dense_checks():
    with pytest.raises(DataError, match=r"\(1, 2\)"):
        check_adjacency(np.array([[0, 1], [2, 0]]))
    with pytest.raises(DataError):
        check_adjacency(np.array([[1, 0], [0, 0]]))
    with pytest.raises(DataError):
        check_adjacency(np.array([[0, -1], [-1, 0]]))


def test_adjacency_round_trip(tmp_path):
    A, _ = generate_scenario(2, 20, 1)
    save_adjacency(tmp_path / "a.csv", A)
    np.testing.assert_array_equal(load_adjacency(tmp_path / "a.csv", n=20), A)


def test_covariates(tmp_path):
    f = tmp_path / "y.csv"
    f.write_text("i,j,y1\n1,2,0.5\n1,3,1.5\n2,3,-1\n")
    cov = load_covariates(f, 3)
    assert cov.Y[2, 1, 0] == -1 and cov.q == 1
    f.write_text("i,j,y1\n1,2,0.5\n1,3,1.5\n")
    with pytest.raises(DataError, match=r"\(2, 3\)"):
        load_covariates(f, 3)
    f.write_text("i,j,y1\n1,2,0.5\n2,1,0.7\n1,3,1.5\n2,3,1\n")
    with pytest.raises(DataError, match="conflicting"):
        load_covariates(f, 3)


def test_standardization_and_intercept(tmp_path):
    _, cov, _ = generate_linkpred_network(20, 0)
    std = cov.standardized()
    rows = std.pairs()
    np.testing.assert_allclose(rows[:, 0], 1.0)  # the constant column passes through
    np.testing.assert_allclose(rows[:, 1:].mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(rows[:, 1:].std(axis=0, ddof=1), 1.0)
    save_covariates(tmp_path / "c.csv", cov)
    back = load_covariates(tmp_path / "c.csv", 20)
    np.testing.assert_allclose(back.Y, cov.Y)


def test_scenario_means():
    # within-block mean 40.5 (scenario 1), between-block mean 0.45 (scenario 2)
    within, between = [], []
    for seed in range(8):
        A, truth = generate_scenario(1, 150, seed)
        z = truth.z_true
        iu = np.triu_indices(150, 1)
        within.append(A[iu][z[iu[0]] == z[iu[1]]])
        A2, t2 = generate_scenario(2, 150, seed)
        z2 = t2.z_true
        between.append(A2[iu][z2[iu[0]] != z2[iu[1]]])
    assert np.concatenate(within).mean() == pytest.approx(40.5, rel=0.05)
    assert np.concatenate(between).mean() == pytest.approx(0.45, rel=0.05)


def test_scenario_deterministic():
    a, _ = generate_scenario(1, 30, 7)
    b, _ = generate_scenario(1, 30, 7)
    np.testing.assert_array_equal(a, b)
    with pytest.raises(DataError):
        generate_scenario(3, 30, 7)


def test_czinb_zero_coefficients_and_zero_rate():
    b = np.zeros((1, 1, 1))
    # beta2 with logit(0.9) and psi = 0.5, r = 1: P(A = 0) = 0.95
    b2 = np.full((1, 1, 1), np.log(9.0))
    A, cov, _ = generate_czinb_network(400, 1, 1, b, b2, 1.0, 3, intercept=True)
    zeros = (A[np.triu_indices(400, 1)] == 0).mean()
    assert zeros == pytest.approx(0.95, abs=0.02)


def test_mask_counts(tmp_path):
    A = np.zeros((12, 12), dtype=int)
    iu = np.triu_indices(12, 1)
    idx = np.arange(40)
    A[iu[0][idx], iu[1][idx]] = 1 + idx % 3
    A = A + A.T
    A_train, mask = mask_nonzero(A, 0.2, 5)
    assert len(mask) == 8
    assert np.count_nonzero(A_train) == 2 * 32
    np.testing.assert_array_equal(mask.restore(A_train), A)
    A0, m0 = mask_nonzero(A, 0.0, 5)
    assert len(m0) == 0 and np.array_equal(A0, A)
    with pytest.raises(DataError):
        mask_nonzero(A, 1.2, 5)
    save_mask(tmp_path / "m.csv", mask)
    back = load_mask(tmp_path / "m.csv")
    np.testing.assert_array_equal(back.pairs, mask.pairs)
