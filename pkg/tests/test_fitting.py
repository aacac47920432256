import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cogforge.baselines import get_baseline
from cogforge.dataset import Dataset, LearningTrial, ParadigmKind, ParticipantData
from cogforge.errors import AllRestartsFailed, NonFiniteObjective
from cogforge.fitting import (FitResult, aic, bic, fit_all, fit_one, read_jsonl, starting_points,
                              write_csv, write_jsonl)
from cogforge.mdl import NumericsError
from cogforge.synthgen import Bandit, gen_bandit_agents, gen_rlwm_agents


class Toy:
    """Stand-in model with a hand-written objective."""

    def __init__(self, fn, bounds=((0.0, 1.0),), name="toy"):
        self.fn = fn
        self.bounds = list(bounds)
        self.param_names = [f"x{i}" for i in range(len(self.bounds))]
        self.k = len(self.bounds)
        self.name = name

    def objective(self, p, kind=None, backend=None):
        return lambda th: self.fn(p, th)

    def n_obs(self, p):
        return len(p.trials)


def quad(p, th):
    return (th[0] - 0.3) ** 2


def nan_for_bad(p, th):
    return math.nan if p.participant_id == "bad" else (th[0] - 0.5) ** 2


def boom(p, th):
    raise NumericsError("division by zero")


def _p(pid="a", n=10):
    return ParticipantData(pid, [LearningTrial(0, i % 2, 1) for i in range(n)])


def test_quadratic_minimum():
    r = fit_one(Toy(quad), _p(), restarts=5)
    assert r.theta_hat[0] == pytest.approx(0.3, abs=1e-4)
    assert r.n_restarts == 6


def test_recovered_nll_beats_truth():
    rw = get_baseline("rw")
    p = rw.simulate(Bandit(), [0.3, 5.0], 150, seed=8)
    r = fit_one(rw, p, restarts=10)
    assert r.nll <= rw.evaluate_nll(p, [0.3, 5.0]) + 1e-9


def test_information_criteria():
    assert bic(78.0, 2, 150) == pytest.approx(166.02, abs=0.005)
    assert bic(33.3, 0, 17) == 66.6
    assert bic(100.0, 4, 96) == pytest.approx(218.26, abs=0.005)
    assert aic(100.0, 4) == 208.0


def test_planning_counts_two_decisions():
    from cogforge.synthgen import gen_twostep_agents
    d, _ = gen_twostep_agents(n_agents=1, n_trials=30, seed=0)
    r = fit_one(get_baseline("hybrid"), d.participants[0], restarts=0)
    assert r.n_obs == 60
    assert r.bic == pytest.approx(2 * r.nll + 7 * math.log(60))


def test_wm_cardinality():
    d, _ = gen_rlwm_agents(n_agents=25, seed=1, set_sizes=(3, 6))
    res = fit_all(get_baseline("rlwm"), d, restarts=0)
    assert [r.participant_id for r in res] == d.ids


def test_parallel_matches_serial():
    d, _ = gen_bandit_agents("rw", n_agents=4, n_trials=60, seed=2)
    a = fit_all(get_baseline("rw"), d, restarts=2, parallelism=1)
    b = fit_all(get_baseline("rw"), d, restarts=2, parallelism=8)
    assert [r.theta_hat for r in a] == [r.theta_hat for r in b]


def test_nan_participant_is_isolated():
    parts = [_p("ok1"), _p("bad"), _p("ok2")]
    res = fit_all(Toy(nan_for_bad), parts, restarts=2)
    assert [r.converged for r in res] == [True, False, True]
    assert res[1].error and "NonFiniteObjective" in res[1].error
    assert res[0].theta_hat[0] == pytest.approx(0.5, abs=1e-4)


def test_all_numerics_errors():
    with pytest.raises(AllRestartsFailed):
        fit_one(Toy(boom), _p(), restarts=2)
    with pytest.raises(NonFiniteObjective):
        fit_one(Toy(nan_for_bad), _p("bad"), restarts=1)


def test_zero_parameter_model():
    r = fit_one(get_baseline("ttb"), _decision_participant(), restarts=5)
    assert r.k == 0 and r.bic == 2 * r.nll and r.theta_hat == []


def _decision_participant():
    from cogforge.dataset import DecisionTrial
    v = (0.9, 0.8, 0.7, 0.6)
    return ParticipantData("d", [DecisionTrial((1, 0, 0, 0), (0, 1, 1, 1), v, 0),
                                 DecisionTrial((0, 1, 0, 0), (0, 0, 1, 1), v, 1)])


def test_starting_points_prefix():
    b = [(0, 1), (0, 20)]
    short = starting_points(b, 3, np.random.default_rng(1))
    long = starting_points(b, 7, np.random.default_rng(1))
    for x, y in zip(short[:3], long[:3]):
        assert np.array_equal(x, y)
    assert np.array_equal(short[-1], [0.5, 10.0])


@settings(max_examples=8)
@given(st.integers(0, 10**6), st.integers(0, 3), st.integers(1, 4))
def test_monotone_restarts(seed, r_small, extra):
    rw = get_baseline("rw_pm")
    p = rw.simulate(Bandit(), [0.5, 0.2, 4.0], 60, seed=seed)
    a = fit_one(rw, p, restarts=r_small, seed=seed)
    b = fit_one(rw, p, restarts=r_small + extra, seed=seed)
    assert b.nll <= a.nll


@settings(max_examples=8)
@given(st.integers(0, 10**6))
def test_bounds_respected(seed):
    seen = []
    rw = get_baseline("rw_kappa")
    p = rw.simulate(Bandit(), [0.9, 19.0, -1.9], 40, seed=seed)

    def fn(part, th):
        seen.append(np.array(th, copy=True))
        return rw.evaluate_nll(part, th)
    r = fit_one(Toy(fn, rw.bounds), p, restarts=2, seed=seed)
    lo = np.array([b[0] for b in rw.bounds])
    hi = np.array([b[1] for b in rw.bounds])
    for x in seen + [np.array(r.theta_hat)]:
        assert np.all(x >= lo) and np.all(x <= hi)


def test_serialization(tmp_path):
    d, _ = gen_bandit_agents("rw", n_agents=2, n_trials=40, seed=0)
    res = fit_all(get_baseline("rw"), d, restarts=1)
    res.append(fit_all(Toy(nan_for_bad), [_p("bad")], restarts=0)[0])
    write_jsonl(res, tmp_path / "f.jsonl")
    back = read_jsonl(tmp_path / "f.jsonl")
    assert [r.participant_id for r in back] == [r.participant_id for r in res]
    assert back[0] == res[0]
    assert back[-1].nll == math.inf and math.isnan(back[-1].theta_hat[0])
    write_csv(res, tmp_path / "f.csv")
    header = (tmp_path / "f.csv").read_text().splitlines()[0]
    assert header == "model,participant,nll,bic,aic,k,n,theta0,theta1"
    assert isinstance(back[0], FitResult)


def test_parallel_mdl_program():
    from cogforge.mdl import load_library
    d, _ = gen_bandit_agents("rw", n_agents=3, n_trials=40, seed=4)
    a = fit_all(load_library("rw"), d, restarts=1, parallelism=1)
    b = fit_all(load_library("rw"), d, restarts=1, parallelism=2)
    assert [r.nll for r in a] == [r.nll for r in b]
