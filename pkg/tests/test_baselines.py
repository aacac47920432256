import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from cogforge.baselines import get_baseline
from cogforge.baselines.heuristics import heuristic_choice, heuristic_prediction
from cogforge.dataset import (DecisionTrial, LearningTrial, ParticipantData, PlanningTrial, WMTrial)
from cogforge.errors import ArityError, BoundsError, ParadigmMismatch, UnknownModel
from cogforge.synthgen import Bandit, RLWMTask, TwoStep, gen_rlwm_agents, gen_twostep_agents

VAL = (0.9, 0.8, 0.7, 0.6)


def decision_data(seed, n=40):
    r = np.random.default_rng(seed)
    tr = [DecisionTrial(tuple(r.integers(0, 2, 4)), tuple(r.integers(0, 2, 4)), VAL, int(r.integers(2)))
          for _ in range(n)]
    return ParticipantData("d", tr)


def full_data(seed, n=120):
    r = np.random.default_rng(seed)
    return ParticipantData("f", [LearningTrial(t // 40, int(r.integers(2)), int(r.choice([-1, 1])),
                                               int(r.choice([-1, 1]))) for t in range(n)])


def test_pwadd_beta_zero():
    p = decision_data(0, 33)
    assert get_baseline("pwadd").evaluate_nll(p, [0.3, 0.9, 0.1, 0.5, 0.0]) == pytest.approx(33 * math.log(2))


@given(st.integers(0, 1000), st.lists(st.floats(0, 1), min_size=4, max_size=4), st.floats(0, 20))
def test_pwadd_matches_oracle(seed, w, beta):
    p = decision_data(seed)
    got = get_baseline("pwadd").evaluate_nll(p, w + [beta])
    ref = oracles.pwadd_nll([t.features_a for t in p.trials], [t.features_b for t in p.trials],
                            [t.choice for t in p.trials], w, beta)
    assert got == pytest.approx(ref, abs=1e-9)


def test_rw_single_update():
    ag = get_baseline("rw").agent([0.1, 5.0])
    ag.start_block({})
    ag.learn({"action": 0, "reward": 1})
    assert ag.v[0] == pytest.approx(0.55)


def test_rlwm_positive_feedback_sets_memory():
    ag = get_baseline("rlwm").agent([0.2, 0.1, 0.3, 0.9, 0.05, 5.0])
    ag.start_block({"set_size": 3})
    ag.learn({"stimulus": 1, "action": 2, "reward": 1})
    assert ag.wm[1, 2] == 1.0
    assert ag.wm[0, 0] == pytest.approx(1 / 3)


def _hybrid_w1_oracle(p, a2, b1, b2):
    q2 = [[0.0, 0.0], [0.0, 0.0]]
    nll = 0.0
    for t in p.trials:
        m = [max(q2[0]), max(q2[1])]
        mb = [0.7 * m[0] + 0.3 * m[1], 0.3 * m[0] + 0.7 * m[1]]
        e = [math.exp(b1 * x) for x in mb]
        nll -= math.log(oracles.clamp(e[t.action_1] / sum(e)))
        e = [math.exp(b2 * x) for x in q2[t.state_2]]
        nll -= math.log(oracles.clamp(e[t.action_2] / sum(e)))
        q2[t.state_2][t.action_2] += a2 * (t.reward - q2[t.state_2][t.action_2])
    return nll


def test_hybrid_w1_first_stage_is_planned():
    d, _ = gen_twostep_agents(n_agents=1, n_trials=120, seed=5)
    p = d.participants[0]
    ref = _hybrid_w1_oracle(p, 0.4, 3.0, 2.0)
    h = get_baseline("hybrid")
    for a1, lam in ((0.1, 0.0), (0.9, 1.0), (0.5, 0.5)):
        assert h.evaluate_nll(p, [a1, 0.4, lam, 1.0, 3.0, 2.0, 0.0]) == pytest.approx(ref, abs=1e-9)


def test_hybrid_lambda0_w0_is_one_step_bootstrap():
    d, _ = gen_twostep_agents(n_agents=1, n_trials=80, seed=6)
    p = d.participants[0]
    q1, q2, nll = [0.0, 0.0], [[0.0, 0.0], [0.0, 0.0]], 0.0
    a1r, a2r, b1, b2 = 0.3, 0.6, 4.0, 2.0
    for t in p.trials:
        e = [math.exp(b1 * x) for x in q1]
        nll -= math.log(e[t.action_1] / sum(e))
        e = [math.exp(b2 * x) for x in q2[t.state_2]]
        nll -= math.log(e[t.action_2] / sum(e))
        q = q2[t.state_2][t.action_2]
        q1[t.action_1] += a1r * (q - q1[t.action_1])
        q2[t.state_2][t.action_2] = q + a2r * (t.reward - q)
    got = get_baseline("hybrid").evaluate_nll(p, [a1r, a2r, 0.0, 0.0, b1, b2, 0.0])
    assert got == pytest.approx(nll, abs=1e-9)


def test_rlwm_lapse_one_is_uniform():
    d, _ = gen_rlwm_agents(n_agents=1, seed=2)
    p = d.participants[0]
    nll = get_baseline("rlwm").evaluate_nll(p, [0.2, 0.1, 0.3, 0.8, 1.0, 7.0])
    assert nll == pytest.approx(len(p) * math.log(3), abs=1e-9)


def test_rlwm_omega_zero_is_rl_with_lapse():
    d, _ = gen_rlwm_agents(n_agents=1, seed=3)
    p = d.participants[0]
    ap, an, eps, beta = 0.3, 0.1, 0.1, 6.0
    nll, q = 0.0, None
    for i, t in enumerate(p.trials):
        if i == 0 or t.block != p.trials[i - 1].block:
            q = np.full((t.set_size, 3), 1 / 3)
        e = np.exp(beta * q[t.stimulus] - (beta * q[t.stimulus]).max())
        pr = (1 - eps) * e / e.sum() + eps / 3
        nll -= math.log(pr[t.action])
        d_ = t.reward - q[t.stimulus, t.action]
        q[t.stimulus, t.action] += (ap if d_ > 0 else an) * d_
    got = get_baseline("rlwm").evaluate_nll(p, [ap, an, 0.5, 0.0, eps, beta])
    assert got == pytest.approx(nll, abs=1e-9)


@given(st.integers(0, 500), st.floats(0, 1), st.floats(0, 20))
def test_kappa_zero_is_rw(seed, a, b):
    p = full_data(seed, 60)
    assert get_baseline("rw_kappa").evaluate_nll(p, [a, b, 0.0]) == get_baseline("rw").evaluate_nll(p, [a, b])


@given(st.integers(0, 500), st.floats(0, 1), st.floats(0, 1), st.floats(0, 20))
def test_rw4a_without_unchosen_updates_is_rw_pm(seed, ap, an, b):
    p = full_data(seed, 60)
    got = get_baseline("rw4a").evaluate_nll(p, [ap, an, 0.0, 0.0, b, 0.0])
    assert got == pytest.approx(get_baseline("rw_pm").evaluate_nll(p, [ap, an, b]), abs=1e-12)


def test_errors():
    p = full_data(0, 10)
    with pytest.raises(ArityError):
        get_baseline("rw").evaluate_nll(p, [0.1])
    with pytest.raises(BoundsError):
        get_baseline("rw").evaluate_nll(p, [1.5, 2.0])
    with pytest.raises(ParadigmMismatch):
        get_baseline("rw4a").evaluate_nll(decision_data(0), [0.1] * 4 + [1.0, 0.0])
    with pytest.raises(UnknownModel):
        get_baseline("nope")


def test_ttb_and_eqw_examples():
    a, b = (1, 0, 0, 0), (0, 1, 1, 1)
    assert heuristic_prediction("ttb", a, b, VAL) == 0
    assert heuristic_prediction("eqw", a, b, VAL) == 1


def test_wadd_example():
    assert heuristic_prediction("wadd", (0, 1, 1, 1), (1, 1, 1, 0), VAL) == 1


def test_wadd_brute_force():
    patterns = list(itertools.product((0, 1), repeat=4))
    for a in patterns:
        for b in patterns:
            sa = sum(v * x for v, x in zip(VAL, a))
            sb = sum(v * x for v, x in zip(VAL, b))
            want = None if abs(sa - sb) < 1e-9 else (0 if sa > sb else 1)
            assert heuristic_prediction("wadd", a, b, VAL) == want


def test_ttb_falls_back_to_second_feature():
    assert heuristic_prediction("ttb", (1, 0, 0, 0), (1, 1, 0, 0), VAL) == 1


def test_all_equal_is_a_coin():
    a = (1, 0, 1, 0)
    for h in ("ttb", "eqw", "wadd", "tallying"):
        assert heuristic_prediction(h, a, a, VAL) is None
    picks = [heuristic_choice("ttb", a, a, VAL, np.random.default_rng(s)) for s in range(400)]
    assert 0.4 < np.mean(picks) < 0.6


RW_SHARE_ORACLE = 0.9154  # oracles.rw_agent_better_arm_share(0.3, 5.0), 1000 seeds


def _rw_share():
    rw = get_baseline("rw")
    return float(np.mean([rw.simulate(Bandit((0.2, 0.8)), [0.3, 5.0], 150, seed=s).column("action").mean()
                          for s in range(1000)]))


def test_rw_agent_share_matches_oracle():
    assert _rw_share() == pytest.approx(RW_SHARE_ORACLE, abs=0.006)


@pytest.mark.xfail(strict=True, reason="a 65-75% band is not reachable at alpha=.3, beta=5 with "
                                       "0/1 rewards; the simulation oracle gives ~0.915")
def test_rw_agent_share_stated_band():
    assert 0.65 <= _rw_share() <= 0.75


def test_simulation_shapes():
    d = get_baseline("hybrid").simulate(TwoStep(), [0.5] * 4 + [5.0, 5.0, 0.0], 30, seed=0)
    assert len(d) == 30 and isinstance(d.trials[0], PlanningTrial)
    d = get_baseline("rlwm").simulate(RLWMTask((3,)), [0.2, 0.1, 0.1, 0.9, 0.02, 8.0], seed=0)
    assert len(d) == 27 and isinstance(d.trials[0], WMTrial)
