import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blocksampler.netdata import DataError, MaskSet
from blocksampler.predict import (
    LinkpredConfig, auc, draw_scores, evaluation_set, predictive_scores, rmse, run_linkpred_experiment,
)
from blocksampler.summary import (
    ChainStore, credible_ball_radius, expected_vi, minvi_point_estimate, summarize_coefficients, summarize_draws,
    vi_distance,
)

from oracles import expected_vi_bruteforce, set_partitions, vi_from_definition

# -- VI and point estimates ---------------------------------------------------


def test_vi_hand_cases():
    assert vi_distance([0, 0, 1, 1], [5, 5, 2, 2]) == 0.0
    assert vi_distance([0, 1, 2, 3], [0, 0, 0, 0]) == pytest.approx(math.log(4), abs=1e-12)
    with pytest.raises(ValueError):
        vi_distance([0, 1], [0, 1, 2])


labels = st.lists(st.integers(0, 4), min_size=7, max_size=7)


@settings(max_examples=1000, deadline=None)
@given(labels, labels, labels)
def test_vi_metric_properties(a, b, c):
    ab, ba = vi_distance(a, b), vi_distance(b, a)
    assert ab >= 0 and ab == pytest.approx(ba, abs=1e-12)
    assert ab == pytest.approx(vi_from_definition(a, b), abs=1e-12)
    assert vi_distance(a, c) <= ab + vi_distance(b, c) + 1e-12
    assert (ab < 1e-12) == (len({(x, y) for x, y in zip(a, b)}) == len(set(a)) == len(set(b)))


def test_minvi_trivial_cases():
    z = [0, 0, 1, 2]
    np.testing.assert_array_equal(minvi_point_estimate([z] * 5), [0, 0, 1, 2])
    A, B = [0, 0, 1, 1], [0, 1, 1, 1]
    np.testing.assert_array_equal(minvi_point_estimate([A] * 9 + [B]), A)
    with pytest.raises(ValueError):
        minvi_point_estimate([])


@pytest.mark.parametrize("seed", range(30))
def test_minvi_matches_bruteforce(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    pool = list(set_partitions(n))
    chain = [pool[k] for k in rng.integers(0, len(pool), size=int(rng.integers(1, 21)))]
    losses = expected_vi_bruteforce(chain, vi_from_definition)
    U, got = expected_vi(chain)
    # every distinct draw gets the brute-force expected loss
    for u, loss in zip(U, got):
        k = next(idx for idx, z in enumerate(chain) if np.array_equal(np.asarray(z), u))
        assert loss == pytest.approx(losses[k], abs=1e-12)
    best = minvi_point_estimate(chain)
    best_loss = np.mean([vi_from_definition(list(best), z) for z in chain])
    assert best_loss == pytest.approx(losses.min(), abs=1e-12)


def test_credible_ball():
    z = [0, 0, 1, 1]
    assert credible_ball_radius([z] * 4, z) == 0.0
    # draws at VI {0, 0, 0.5-ish, 1-ish} distances: at level 0.75 the radius is the third smallest
    d1 = [0, 0, 1, 2]
    d2 = [0, 1, 2, 3]
    chain = [z, z, d1, d2]
    assert credible_ball_radius(chain, z, 0.75) == pytest.approx(vi_distance(z, d1))
    assert credible_ball_radius(chain, z, 1e-9) == 0.0


def test_coefficient_summaries():
    recs = [{"z": [0, 0, 1], "beta1": np.full((2, 2, 2), 1.5)} for _ in range(10)]
    mean, ci = summarize_coefficients(recs, [0, 0, 1], 0, 1, 1)
    np.testing.assert_allclose(mean, 1.5)
    np.testing.assert_allclose(ci, [[1.5, 1.5], [1.5, 1.5]])
    with pytest.raises(ValueError):
        summarize_coefficients(recs, [0, 0, 0], 0, 1, 1)
    draws = np.random.default_rng(0).standard_normal(100_000)
    _, ci = summarize_draws(draws)
    np.testing.assert_allclose(ci[0], [-1.96, 1.96], atol=0.02)


def test_chain_store_round_trip(tmp_path):
    recs = [{"iter": 1, "z": [0, 1, 1], "K": 3, "k": 2, "gamma": 0.5}]
    ChainStore(recs, {"model": "zinb"}).save(tmp_path)
    back = ChainStore.load(tmp_path)
    assert back.records[0]["z"] == [0, 1, 1] and back.meta["model"] == "zinb"
    assert (tmp_path / "partitions_0.csv").read_text().splitlines()[1] == "1,1,2,2"


# -- predictive scores and metrics -------------------------------------------


def test_draw_scores_hand_case():
    prob, mean = draw_scores(0.5, 0.5, 1.0)
    assert prob == pytest.approx(0.25) and mean == pytest.approx(0.5)
    assert draw_scores(1.0, 0.3, 2.0) == (0.0, 0.0)


def _rec(p):
    return {"z": [0, 0, 0], "P": np.full((1, 1), p), "Psi": np.full((1, 1), 0.5), "R": np.ones((1, 1))}


def test_predictive_averaging():
    # prob_nonzero = (1 - p) / 2 for psi = 0.5, r = 1: 0.2 and 0.4 average to 0.3
    sc = predictive_scores([_rec(0.6), _rec(0.2)], [[0, 1]], "zinb")
    assert sc.prob_nonzero[0] == pytest.approx(0.3)
    with pytest.raises(ValueError):
        predictive_scores([_rec(0.6)], [[0, 5]], "zinb")


def test_auc_and_rmse():
    assert auc([0.9, 0.8, 0.4], [1, 0, 1]) == pytest.approx(0.5)
    assert auc([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0
    assert auc([0.3, 0.3, 0.3, 0.3], [1, 0, 1, 0]) == 0.5
    with pytest.raises(ValueError):
        auc([0.2, 0.4], [1, 1])
    assert rmse([1, 2], [1, 2]) == 0.0
    assert rmse([0, 0], [3, 4]) == pytest.approx(3.5355339, abs=1e-7)
    with pytest.raises(ValueError):
        rmse([], [])


def test_evaluation_set():
    A = np.array([[0, 2, 0], [2, 0, 0], [0, 0, 0]])
    mask = MaskSet(np.array([[0, 1]]), np.array([2]))
    pairs, lab = evaluation_set(A, mask)
    assert pairs.tolist() == [[0, 1], [0, 2], [1, 2]] and lab.tolist() == [1, 0, 0]


def test_linkpred_empty_mask():
    A = np.array([[0, 2], [2, 0]])
    with pytest.raises(DataError, match="empty mask"):
        run_linkpred_experiment(A, None, LinkpredConfig(model="zinb", fraction=0.0))
