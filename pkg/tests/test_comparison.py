import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from cogforge.comparison import compare, exceedance_probability
from cogforge.errors import NonFiniteEvidence, ParticipantSetMismatch
from cogforge.fitting import FitResult, bic

MC = 100_000


def fits_from(name, bics, k=2):
    return [FitResult(name, f"p{i}", [0.0] * k, b / 2, b, b, 100, k, 1, True) for i, b in enumerate(bics)]


def test_identical_columns():
    b = np.random.default_rng(0).uniform(50, 150, 20)
    rep = compare({"A": fits_from("A", b), "B": fits_from("B", b)}, mc_samples=MC)
    assert rep.t_stat == 0
    assert rep.exceedance.tolist() == [0.5, 0.5]


def test_ten_bic_dominance_matches_oracle():
    b = np.random.default_rng(1).uniform(60, 120, 50)
    rep = compare({"A": fits_from("A", b), "B": fits_from("B", b + 10)}, mc_samples=MC)
    ref = oracles.exceedance_mc(-0.5 * np.column_stack([b, b + 10]))
    assert rep.exceedance[0] >= 0.99 and ref[0] >= 0.99
    assert rep.exceedance[0] == pytest.approx(ref[0], abs=0.01)
    assert rep.best == "A" and rep.p_value == 0.0


def test_three_models_dominated():
    r = np.random.default_rng(2)
    b = r.uniform(60, 120, 40)
    cols = {"A": b, "B": b + 8 + r.normal(0, 1, 40), "C": b + 12 + r.normal(0, 1, 40)}
    rep = compare({m: fits_from(m, v) for m, v in cols.items()}, mc_samples=MC)
    ref = oracles.exceedance_mc(-0.5 * np.column_stack(list(cols.values())))
    assert rep.exceedance[1] < 0.05 and rep.exceedance[2] < 0.05
    assert np.allclose(rep.exceedance, ref, atol=0.01)


def test_vb_matches_oracle():
    L = np.random.default_rng(3).normal(0, 3, (30, 4))
    _, alpha = exceedance_probability(L, 1000, return_alpha=True)
    assert np.allclose(alpha, oracles.vb_dirichlet(L), atol=1e-4)


def test_symmetric_evidence():
    ex = exceedance_probability(np.zeros((25, 2)), MC)
    assert ex.tolist() == [0.5, 0.5]


def test_large_evidence_gap():
    L = np.zeros((20, 2))
    L[:, 0] = 1000
    ex = exceedance_probability(L, MC)
    assert ex[0] > 0.999 and ex[1] < 0.001


def test_zero_participants_is_prior():
    ex = exceedance_probability(np.zeros((0, 4)), MC)
    assert np.allclose(ex, 0.25, atol=0.01)


def test_non_finite():
    L = np.zeros((3, 2))
    L[1, 1] = np.nan
    with pytest.raises(NonFiniteEvidence):
        exceedance_probability(L)


evidence = st.integers(1, 12).flatmap(
    lambda n: st.integers(2, 4).flatmap(
        lambda k: st.lists(st.floats(-50, 50), min_size=n * k, max_size=n * k).map(
            lambda v: np.array(v).reshape(n, k))))


@settings(max_examples=30)
@given(evidence, st.randoms(use_true_random=False))
def test_permutation_equivariance(L, rnd):
    perm = list(range(L.shape[1]))
    rnd.shuffle(perm)
    a = exceedance_probability(L, 20_000, seed=5)
    b = exceedance_probability(L[:, perm], 20_000, seed=5)
    assert np.array_equal(a[perm], b)
    assert abs(a.sum() - 1) < 1e-3 and np.all(a >= 0)


@settings(max_examples=30)
@given(evidence, st.integers(0, 11), st.floats(-100, 100))
def test_row_shift_invariance(L, row, c):
    M = L.copy()
    M[row % L.shape[0]] += c
    a = exceedance_probability(L, 20_000, seed=1)
    b = exceedance_probability(M, 20_000, seed=1)
    assert np.allclose(a, b, atol=1e-6)


def test_participant_set_mismatch():
    a = fits_from("A", [1.0, 2.0])
    b = fits_from("B", [1.0, 2.0])
    b[1].participant_id = "zz"
    with pytest.raises(ParticipantSetMismatch):
        compare({"A": a, "B": b})


def test_failed_fits_dropped_and_report_io(tmp_path):
    a = fits_from("A", [100.0, 110.0, 90.0])
    b = fits_from("B", [105.0, 111.0, 99.0])
    b[1].bic = float("inf")
    rep = compare({"A": a, "B": b}, mc_samples=1000)
    assert rep.participants == ["p0", "p2"] and rep.meta["dropped"] == ["p1"]
    assert rep.meta["df"] == 1
    rep.to_json(tmp_path / "c.json")
    rep.to_csv(tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines()[0] == "participant,A,B"


def test_t_test_direction():
    r = np.random.default_rng(4)
    b = r.uniform(60, 120, 30)
    rep = compare({"B": fits_from("B", b + 3 + r.normal(0, 2, 30)), "A": fits_from("A", b)},
                  mc_samples=1000)
    assert rep.best == "A" and rep.runner_up == "B"
    assert rep.t_stat < 0 and rep.p_value < 0.01


def test_aic_metric():
    a = fits_from("A", [100.0, 110.0])
    a[0].aic = 50.0
    rep = compare({"A": a, "B": fits_from("B", [100.0, 110.0])}, metric="aic", mc_samples=1000)
    assert rep.metric == "aic" and rep.per_participant_bic[0, 0] == 50.0
    assert bic(10, 1, 1) == 20
