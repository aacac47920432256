"""Which trial fields a program can read in each paradigm, and when."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import (DecisionTrial, LearningTrial, ParadigmKind, PlanningTrial,
                       WMTrial)
from .errors import BindingError


@dataclass(frozen=True)
class Decision:
    name: str
    n_options: int
    outcomes: tuple  # fields revealed once the decision is made


@dataclass(frozen=True)
class ParadigmBindings:
    kind: ParadigmKind
    pre: tuple  # (name, is_vector) readable from the start of a trial
    decisions: tuple

    @property
    def pre_names(self):
        return tuple(n for n, _ in self.pre)

    @property
    def late_names(self):
        out = []
        for d in self.decisions:
            out.append(d.name)
            out.extend(d.outcomes)
        return tuple(out)

    @property
    def all_names(self):
        return self.pre_names + self.late_names

    @property
    def decision_names(self):
        return tuple(d.name for d in self.decisions)

    def decision(self, name):
        for d in self.decisions:
            if d.name == name:
                return d
        return None

    def available_after(self, name):
        """Index of the decision whose choose reveals ``name`` (None if pre-trial)."""
        for i, d in enumerate(self.decisions):
            if name == d.name or name in d.outcomes:
                return i
        return None

    def columns(self, n_features=0):
        """Binding matrix column layout: list of (name, element or None)."""
        cols = []
        for name, vec in self.pre:
            if vec:
                cols.extend((name, j) for j in range(n_features))
            else:
                cols.append((name, None))
        for name in self.late_names:
            cols.append((name, None))
        return cols


BINDINGS = {
    ParadigmKind.DECISION: ParadigmBindings(
        ParadigmKind.DECISION,
        (("trial", False), ("features_a", True), ("features_b", True), ("validities", True)),
        (Decision("choice", 2, ()),)),
    ParadigmKind.LEARNING_PARTIAL: ParadigmBindings(
        ParadigmKind.LEARNING_PARTIAL,
        (("trial", False), ("block", False)),
        (Decision("action", 2, ("reward",)),)),
    ParadigmKind.LEARNING_FULL: ParadigmBindings(
        ParadigmKind.LEARNING_FULL,
        (("trial", False), ("block", False)),
        (Decision("action", 2, ("reward", "forgone_reward")),)),
    ParadigmKind.PLANNING: ParadigmBindings(
        ParadigmKind.PLANNING,
        (("trial", False),),
        (Decision("action_1", 2, ("state_2",)), Decision("action_2", 2, ("reward",)))),
    ParadigmKind.WORKING_MEMORY: ParadigmBindings(
        ParadigmKind.WORKING_MEMORY,
        (("trial", False), ("block", False), ("set_size", False), ("stimulus", False)),
        (Decision("action", 3, ("reward",)),)),
}

ALL_BINDING_NAMES = frozenset(n for b in BINDINGS.values() for n in b.all_names)
ALL_DECISION_NAMES = frozenset(n for b in BINDINGS.values() for n in b.decision_names)


def kind_of(participant):
    """Infer the paradigm of a participant from its record type."""
    t = participant.trials[0]
    if isinstance(t, DecisionTrial):
        return ParadigmKind.DECISION
    if isinstance(t, LearningTrial):
        return ParadigmKind.LEARNING_FULL if t.forgone_reward is not None else ParadigmKind.LEARNING_PARTIAL
    if isinstance(t, PlanningTrial):
        return ParadigmKind.PLANNING
    if isinstance(t, WMTrial):
        return ParadigmKind.WORKING_MEMORY
    raise BindingError(f"unsupported trial record {type(t).__name__}")


def trial_values(trial, index):
    """Binding values of one record, keyed by binding name."""
    v = {"trial": index}
    if isinstance(trial, DecisionTrial):
        v.update(features_a=trial.features_a, features_b=trial.features_b,
                 validities=trial.validities, choice=trial.choice)
    elif isinstance(trial, LearningTrial):
        v.update(block=trial.block, action=trial.action, reward=trial.reward)
        if trial.forgone_reward is not None:
            v["forgone_reward"] = trial.forgone_reward
    elif isinstance(trial, PlanningTrial):
        v.update(action_1=trial.action_1, state_2=trial.state_2,
                 action_2=trial.action_2, reward=trial.reward)
    else:
        v.update(block=trial.block, set_size=trial.set_size, stimulus=trial.stimulus,
                 action=trial.action, reward=trial.reward)
    return v


def binding_matrix(kind, participant, n_features=0):
    """Float matrix (trials x columns) in the layout of ``BINDINGS[kind].columns``."""
    cols = BINDINGS[kind].columns(n_features)
    out = np.empty((len(participant.trials), len(cols)), dtype=np.float64)
    for i, t in enumerate(participant.trials):
        vals = trial_values(t, i)
        for j, (name, el) in enumerate(cols):
            x = vals[name]
            out[i, j] = x[el] if el is not None else x
    return out
