import copy
import math

import numpy as np
import pytest

from cogforge.baselines import get_baseline
from cogforge.dataset import Dataset, LearningTrial, ParadigmKind, ParticipantData, PlanningTrial, WMTrial
from cogforge.errors import MissingCorrectMap, MissingLabels
from cogforge.fitting import fit_all
from cogforge.ppc import (correlate, curve, ppc_decision, ppc_learning, ppc_planning, ppc_rlwm,
                          run_ppc, simulate_fitted)
from cogforge.synthgen import (Bandit, binomial_ci, gen_decision_problems, gen_rlwm_agents,
                               gen_twostep_agents, simulate_heuristic_agents)

K = ParadigmKind


def _learning(theta, model="rw", n=20, seed=0):
    m = get_baseline(model)
    parts = [m.simulate(Bandit.high_low(), theta, None, seed=seed + i, participant_id=f"s{i}")
             for i in range(n)]
    return Dataset(K.LEARNING_FULL, parts)


def test_exact_ttb_agent():
    ps = gen_decision_problems(80, n_features=4, seed=0, binary=True)
    d = simulate_heuristic_agents("ttb", ps, 0.0, n_agents=3, seed=1)
    t = ppc_decision(d)
    assert t.mean("ttb") == 1.0
    for r in t.rows:
        assert r["value"] is None or 0 <= r["value"] <= 1


def test_random_decisions_near_half():
    ps = gen_decision_problems(80, n_features=4, seed=2)
    d = simulate_heuristic_agents("ttb", ps, 0.5, n_agents=10, seed=3)
    t = ppc_decision(d)
    for h in ("ttb", "eqw", "wadd"):
        n = sum(r["n"] for r in t.rows if r["statistic"] == h)
        lo, hi = binomial_ci(0.5, n)
        assert lo - 0.01 <= t.pooled(h) <= hi + 0.01


def test_pwadd_resimulation_correlation():
    ps = gen_decision_problems(80, n_features=4, seed=4, binary=True)
    parts = []
    for i, noise in enumerate(np.linspace(0, 0.45, 12)):
        parts += simulate_heuristic_agents("ttb", ps, float(noise), 1, seed=i, id_prefix=f"n{i}").participants
    d = Dataset(K.DECISION, parts)
    pw = get_baseline("pwadd")
    fits = fit_all(pw, d, restarts=2)
    sim = simulate_fitted(pw, d, fits, seed=0)
    h, s = ppc_decision(d), ppc_decision(sim)
    r = {st: correlate(h, s, st) for st in ("eqw", "ttb", "wadd")}
    assert r["ttb"] > 0.5
    assert all(math.isnan(v) or -1 <= v <= 1 for v in r.values())


def test_learning_optimal_and_random():
    d = _learning([0.3, 5.0], n=3)
    best = []
    for p in d.participants:
        probs = p.meta["block_probs"]
        tr = [LearningTrial(t.block, int(probs[t.block][1] > probs[t.block][0]), t.reward, t.forgone_reward)
              for t in p.trials]
        best.append(ParticipantData(p.participant_id, tr, p.meta))
    t = ppc_learning(Dataset(K.LEARNING_FULL, best))
    for st in ("high_early", "high_late", "low_early", "low_late"):
        assert t.mean(st) == 1.0
    rnd = ppc_learning(_learning([0.3, 0.0], n=30))
    for st in ("high_early", "high_late", "low_early", "low_late"):
        n = sum(r["n"] for r in rnd.rows if r["statistic"] == st)
        lo, hi = binomial_ci(0.5, n)
        assert lo <= rnd.pooled(st) <= hi


def test_learning_curve_rises():
    t = ppc_learning(_learning([0.3, 5.0], n=200))
    assert t.mean("high_late") > t.mean("high_early")
    assert t.mean("low_late") > t.mean("low_early")


def test_learning_needs_labels():
    d = Dataset(K.LEARNING_PARTIAL, [ParticipantData("a", [LearningTrial(0, 0, 1)])])
    with pytest.raises(MissingLabels):
        ppc_learning(d)


def _stays(params, seed):
    d, _ = gen_twostep_agents(n_agents=1, n_trials=10_000, seed=seed, params=params)
    t = ppc_planning(d)
    return {s: t.mean(s) for s in t.statistics}


def test_model_free_stays():
    s = _stays([0.5, 0.5, 1.0, 0.0, 8.0, 8.0, 0.0], 1)
    assert s["rewarded_common"] > s["unrewarded_common"]
    assert s["rewarded_rare"] > s["unrewarded_rare"]
    trans = 0.5 * ((s["rewarded_common"] - s["rewarded_rare"])
                   + (s["unrewarded_common"] - s["unrewarded_rare"]))
    assert abs(trans) < 0.02


def test_model_based_stays():
    s = _stays([0.5, 0.5, 1.0, 1.0, 8.0, 8.0, 0.0], 2)
    assert s["rewarded_common"] > s["rewarded_rare"]
    assert s["unrewarded_rare"] > s["unrewarded_common"]


def test_single_trial_planning():
    d = Dataset(K.PLANNING, [ParticipantData("one", [PlanningTrial(0, 0, 1, 1)])])
    t = ppc_planning(d)
    assert "one" in t.flags
    assert all(r["value"] is None and r["n"] == 0 for r in t.rows)


def _wm(theta, n=20, seed=0):
    d, _ = gen_rlwm_agents(n_agents=n, seed=seed, params=theta, set_sizes=(3, 6, 3, 6))
    return d


def test_rlwm_perfect_and_random():
    d = _wm([0.1, 0.05, 0.1, 0.9, 0.02, 8.0], n=2)
    perfect = []
    for p in d.participants:
        c = p.meta["correct"]
        tr = [WMTrial(t.block, t.set_size, t.stimulus, c[t.block][t.stimulus], 1) for t in p.trials]
        perfect.append(ParticipantData(p.participant_id, tr, p.meta))
    t = ppc_rlwm(Dataset(K.WORKING_MEMORY, perfect))
    assert curve(t, 3) == [1.0] * 9 and curve(t, 6) == [1.0] * 9
    rnd = ppc_rlwm(_wm([0.1, 0.05, 0.1, 0.9, 1.0, 8.0], n=40))
    for ns in (3, 6):
        assert np.allclose(curve(rnd, ns, pooled=True), 1 / 3, atol=0.06)


def test_rlwm_set_size_effect():
    t = ppc_rlwm(_wm([0.1, 0.05, 0.1, 0.9, 0.02, 8.0], n=50))
    assert t.mean("ns3_iter2") > t.mean("ns6_iter2")


def test_rlwm_needs_correct_map():
    d = Dataset(K.WORKING_MEMORY, [ParticipantData("a", [WMTrial(0, 3, 0, 0, 1)])])
    with pytest.raises(MissingCorrectMap):
        ppc_rlwm(d)
    t = ppc_rlwm(d, correct={0: [0, 1, 2]})
    assert t.value("a", "ns3_iter1") == 1.0


def test_copy_agrees_exactly():
    d = _learning([0.4, 4.0], n=5)
    assert run_ppc(d).rows == run_ppc(copy.deepcopy(d)).rows


@pytest.mark.parametrize("kind", ["learning", "planning", "wm"])
def test_simulate_then_check_closure(kind):
    if kind == "learning":
        d, m = _learning([0.3, 5.0], n=4), get_baseline("rw")
    elif kind == "planning":
        d, _ = gen_twostep_agents(n_agents=3, n_trials=100, seed=0)
        m = get_baseline("hybrid")
    else:
        d, m = _wm([0.1, 0.05, 0.1, 0.9, 0.02, 8.0], n=3), get_baseline("rlwm")
    fits = fit_all(m, d, restarts=0)
    sim = simulate_fitted(m, d, fits, seed=1)
    h, s = run_ppc(d), run_ppc(sim)
    for r in h.rows:
        if r["value"] is not None:
            v = s.value(r["participant"], r["statistic"])
            assert v is not None and math.isfinite(v)


def test_csv(tmp_path):
    t = ppc_planning(gen_twostep_agents(n_agents=2, n_trials=30, seed=0)[0])
    t.to_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "participant,statistic,value,n" and len(lines) == 9
