import json

import pytest
from hypothesis import given, strategies as st

from cogforge.dataset import (Dataset, DecisionTrial, LearningTrial, ParadigmKind, ParticipantData,
                              PlanningTrial, SplitSpec, WMTrial, load, save, split, to_prompt_text,
                              trial_lines)
from cogforge.errors import DomainError, EmptyDataset, SchemaMismatch, TooFewParticipants

K = ParadigmKind


def _learning(n_part=3, n_trials=6, full=True, seed=0):
    import numpy as np
    r = np.random.default_rng(seed)
    parts = []
    for i in range(n_part):
        tr = [LearningTrial(t // 3, int(r.integers(2)), int(r.choice([-1, 1])),
                            int(r.choice([-1, 1])) if full else None) for t in range(n_trials)]
        parts.append(ParticipantData(f"p{i}", tr))
    return Dataset(K.LEARNING_FULL if full else K.LEARNING_PARTIAL, parts, "unit")


def test_wm_csv_row(tmp_path):
    f = tmp_path / "wm.csv"
    f.write_text("participant,block,set_size,trial,stimulus,action,reward\np1,0,3,0,0,0,1\n")
    d = load(f, "wm")
    assert d.participants[0].trials[0] == WMTrial(block=0, set_size=3, stimulus=0, action=0, reward=1)


def test_zero_rows_is_empty(tmp_path):
    f = tmp_path / "wm.csv"
    f.write_text("participant,block,set_size,trial,stimulus,action,reward\n")
    with pytest.raises(EmptyDataset):
        load(f, "wm")


def test_full_feedback_without_forgone_column(tmp_path):
    f = tmp_path / "l.csv"
    f.write_text("participant,block,trial,action,reward\np1,0,0,1,1\n")
    with pytest.raises(SchemaMismatch):
        load(f, K.LEARNING_FULL)


def test_out_of_range_action(tmp_path):
    f = tmp_path / "l.csv"
    f.write_text("participant,block,trial,action,reward\np1,0,0,5,1\n")
    with pytest.raises(DomainError):
        load(f, K.LEARNING_PARTIAL)


def test_trial_order_follows_file(tmp_path):
    f = tmp_path / "p.csv"
    f.write_text("participant,trial,action1,state2,action2,reward\n"
                 "a,0,1,1,0,1\nb,0,0,0,0,0\na,1,0,1,1,0\n")
    d = load(f, "planning")
    assert d.ids == ["a", "b"]
    assert d.participants[0].trials == (PlanningTrial(1, 1, 0, 1), PlanningTrial(0, 1, 1, 0))


def test_split_sizes_and_determinism():
    d = _learning(10)
    s = SplitSpec(0.2, 0.4, 0.4, seed=7)
    a = split(d, s)
    assert [len(x) for x in a] == [2, 4, 4]
    ids = [set(x.ids) for x in a]
    assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])
    assert [x.ids for x in split(d, s)] == [x.ids for x in a]


def test_split_too_few():
    with pytest.raises(TooFewParticipants):
        split(_learning(2))


@given(n=st.integers(3, 30), seed=st.integers(0, 10_000))
def test_split_partitions(n, seed):
    d = _learning(n, 2)
    parts = split(d, SplitSpec(seed=seed))
    got = sorted(i for x in parts for i in x.ids)
    assert got == sorted(d.ids)


def test_learning_full_line():
    p = ParticipantData("x", [LearningTrial(0, 1, -1, 1)])
    assert trial_lines(K.LEARNING_FULL, p) == [
        "Block: 1, Trial: 1, Chosen action: 1, Reward for the chosen action: -1, "
        "Reward for the unchosen action: 1"]


def test_decision_line():
    p = ParticipantData("x", [DecisionTrial((1, 1, 1, 1), (0, 0, 1, 1), (.9, .8, .7, .6), 0)])
    assert trial_lines(K.DECISION, p)[0] == (
        "Trial 1: Product A ratings: [1 1 1 1]. Product B ratings: [0 0 1 1]. Chosen option: A")


def test_max_trials_zero_keeps_headers():
    d = _learning(2)
    text = to_prompt_text(d, max_trials=0)
    lines = [ln for ln in text.splitlines() if ln]
    assert lines == ["Data from participant 1:", "Data from participant 2:"]


def test_prompt_text_hides_ids():
    d = _learning(3)
    text = to_prompt_text(d)
    assert "p0" not in text and "p2" not in text


trial_st = st.builds(LearningTrial, st.integers(0, 3), st.integers(0, 1), st.sampled_from([-1, 1]),
                     st.sampled_from([-1, 1]))


@given(st.lists(st.lists(trial_st, min_size=1, max_size=8), min_size=1, max_size=4),
       st.sampled_from(["csv", "json"]))
def test_round_trip(tmp_path_factory, groups, fmt):
    groups = [sorted(g, key=lambda t: t.block) for g in groups]
    d = Dataset(K.LEARNING_FULL, [ParticipantData(f"s{i}", g) for i, g in enumerate(groups)], "rt")
    path = tmp_path_factory.mktemp("rt") / f"d.{fmt}"
    save(d, path)
    back = load(path, K.LEARNING_FULL)
    assert back.participants == d.participants


def test_round_trip_decision_and_wm(tmp_path):
    dm = Dataset(K.DECISION, [ParticipantData("a", [
        DecisionTrial((1, 0, 1, 0), (0, 1, 1, 1), (.9, .8, .7, .6), 1),
        DecisionTrial((0, 0, 1, 0), (0, 1, 0, 1), (.9, .8, .7, .6), 0)])], "dm")
    wm = Dataset(K.WORKING_MEMORY, [ParticipantData("a", [WMTrial(0, 3, 2, 1, 0), WMTrial(1, 6, 5, 2, 1)])])
    for d, name in ((dm, "dm"), (wm, "wm")):
        for fmt in ("csv", "json"):
            path = tmp_path / f"{name}.{fmt}"
            save(d, path)
            assert load(path, d.kind).participants == d.participants


def test_json_meta_survives(tmp_path):
    p = ParticipantData("a", [LearningTrial(0, 0, 1, None)], {"true_params": [0.1, 2.0],
                                                               "block_labels": {0: "high"}})
    d = Dataset(K.LEARNING_PARTIAL, [p])
    save(d, tmp_path / "d.json")
    back = load(tmp_path / "d.json")
    assert back.participants[0].meta == {"true_params": [0.1, 2.0], "block_labels": {0: "high"}}


def test_json_wrong_kind(tmp_path):
    save(_learning(1), tmp_path / "d.json")
    with pytest.raises(SchemaMismatch):
        load(tmp_path / "d.json", "wm")
    raw = json.loads((tmp_path / "d.json").read_text())
    raw["participants"] = []
    (tmp_path / "e.json").write_text(json.dumps(raw))
    with pytest.raises(EmptyDataset):
        load(tmp_path / "e.json")


@given(st.lists(trial_st, min_size=2, max_size=6), st.integers(0, 5), st.integers(1, 6))
def test_prompt_text_injective_in_window(trials, pos, window):
    trials = sorted(trials, key=lambda t: t.block)
    pos = pos % len(trials)
    t = trials[pos]
    changed = list(trials)
    changed[pos] = LearningTrial(t.block, 1 - t.action, t.reward, t.forgone_reward)
    a = Dataset(K.LEARNING_FULL, [ParticipantData("a", trials)])
    b = Dataset(K.LEARNING_FULL, [ParticipantData("a", changed)])
    same = to_prompt_text(a, max_trials=window) == to_prompt_text(b, max_trials=window)
    assert same == (pos >= window)
