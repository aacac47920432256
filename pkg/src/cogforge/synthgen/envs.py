"""Task environments that feed simulated agents and reveal outcomes.

Protocol used by both simulators:

``start(n_trials, rng) -> n``  prepare a run and return its length
``pre(t) -> dict``             fields visible before the first choice
``respond(t, decision, value, rng) -> dict``  outcomes revealed by a choice
``record(t, values) -> trial record``
``meta() -> dict``             per-participant metadata (labels, answer keys)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataset import (DecisionTrial, LearningTrial, ParadigmKind, PlanningTrial,
                       WMTrial)

HIGH_BLOCK = (0.9, 0.6)
LOW_BLOCK = (0.4, 0.1)


class Bandit:
    """Two-armed bandit with optional blocks and counterfactual feedback."""

    def __init__(self, p_reward=(0.2, 0.8), reward_alphabet=(0, 1), feedback="partial",
                 block_probs=None, block_labels=None, trials_per_block=None, block_sequence=None):
        if feedback not in ("partial", "full"):
            raise ValueError("feedback must be 'partial' or 'full'")
        self.block_probs = [tuple(map(float, p)) for p in (block_probs or [p_reward])]
        for p in self.block_probs:
            if len(p) != 2 or not all(0.0 <= x <= 1.0 for x in p):
                raise ValueError(f"reward probabilities must be two values in [0, 1], got {p}")
        self.block_labels = list(block_labels) if block_labels is not None else None
        self.trials_per_block = trials_per_block
        self.block_sequence = list(block_sequence) if block_sequence is not None else None
        self.reward_alphabet = tuple(reward_alphabet)
        self.feedback = feedback
        self.kind = ParadigmKind.LEARNING_FULL if feedback == "full" else ParadigmKind.LEARNING_PARTIAL

    @classmethod
    def high_low(cls, n_blocks=4, trials_per_block=40, feedback="full", reward_alphabet=(-1, 1)):
        """Alternating rich and lean blocks; the better arm alternates too."""
        probs, labels = [], []
        for b in range(n_blocks):
            hi = b % 2 == 0
            p = HIGH_BLOCK if hi else LOW_BLOCK
            probs.append(p if (b // 2) % 2 == 0 else p[::-1])
            labels.append("high" if hi else "low")
        return cls(feedback=feedback, reward_alphabet=reward_alphabet, block_probs=probs,
                   block_labels=labels, trials_per_block=trials_per_block)

    def start(self, n_trials, rng):
        nb = len(self.block_probs)
        if self.block_sequence is not None:
            self.blocks = self.block_sequence[:n_trials] if n_trials is not None else self.block_sequence
            self.n = len(self.blocks)
            return self.n
        if n_trials is None:
            n_trials = (self.trials_per_block or 150) * nb if nb > 1 else (self.trials_per_block or 150)
        self.n = int(n_trials)
        per = self.trials_per_block or -(-self.n // nb)
        self.blocks = [min(t // per, nb - 1) for t in range(self.n)]
        return self.n

    def pre(self, t):
        return {"trial": t, "block": self.blocks[t]}

    def _draw(self, p, rng):
        lo, hi = self.reward_alphabet
        return hi if rng.random() < p else lo

    def respond(self, t, decision, value, rng):
        p = self.block_probs[self.blocks[t]]
        out = {"reward": self._draw(p[value], rng)}
        if self.feedback == "full":
            out["forgone_reward"] = self._draw(p[1 - value], rng)
        return out

    def record(self, t, v):
        return LearningTrial(v["block"], v["action"], v["reward"],
                             v.get("forgone_reward") if self.feedback == "full" else None)

    def meta(self):
        used = sorted(set(self.blocks))
        m = {"block_probs": {b: list(self.block_probs[b]) for b in used}}
        if self.block_labels is not None:
            m["block_labels"] = {b: self.block_labels[b] for b in used}
        return m


class TwoStep:
    """Two-stage task: carpets lead to mountains (70/30), genies pay out."""

    def __init__(self, reward_probs=((0.7, 0.3), (0.4, 0.6)), transition=0.7, drift=False,
                 sigma=0.025, bounds=(0.25, 0.75)):
        self.reward_probs = np.asarray(reward_probs, dtype=np.float64)
        if self.reward_probs.shape != (2, 2):
            raise ValueError("reward_probs must be 2 x 2")
        self.transition = float(transition)
        self.drift = bool(drift)
        self.sigma = float(sigma)
        self.bounds = tuple(bounds)
        self.kind = ParadigmKind.PLANNING

    def start(self, n_trials, rng):
        self.n = int(n_trials if n_trials is not None else 200)
        p = np.empty((self.n, 2, 2))
        cur = self.reward_probs.copy()
        lo, hi = self.bounds
        for t in range(self.n):
            p[t] = cur
            if self.drift:
                cur = cur + rng.normal(0.0, self.sigma, size=(2, 2))
                # reflect at the bounds
                cur = np.where(cur > hi, 2 * hi - cur, cur)
                cur = np.where(cur < lo, 2 * lo - cur, cur)
        self.probs = p
        return self.n

    def pre(self, t):
        return {"trial": t}

    def respond(self, t, decision, value, rng):
        if decision == "action_1":
            common = rng.random() < self.transition
            self._state = value if common else 1 - value
            return {"state_2": self._state}
        return {"reward": int(rng.random() < self.probs[t, self._state, value])}

    def record(self, t, v):
        return PlanningTrial(v["action_1"], v["state_2"], v["action_2"], v["reward"])

    def meta(self):
        return {"transition": self.transition}


class RLWMTask:
    """Blocks of stimuli, each with one rewarded action out of three."""

    def __init__(self, set_sizes=(3, 6, 3, 6), presentations=9, rows=None, correct=None):
        self.set_sizes = tuple(int(s) for s in set_sizes)
        self.presentations = int(presentations)
        # a fixed (block, set_size, stimulus) sequence and answer key replays a recorded session
        self.fixed_rows = list(rows) if rows is not None else None
        self.fixed_correct = {int(b): list(v) for b, v in correct.items()} if correct is not None else None
        self.kind = ParadigmKind.WORKING_MEMORY

    def start(self, n_trials, rng):
        if self.fixed_rows is not None:
            self.rows = self.fixed_rows[:n_trials] if n_trials is not None else list(self.fixed_rows)
            self.correct = self.fixed_correct
            return len(self.rows)
        self.rows = []
        self.correct = {}
        for b, ns in enumerate(self.set_sizes):
            self.correct[b] = [int(x) for x in rng.integers(0, 3, ns)]
            order = rng.permutation(np.repeat(np.arange(ns), self.presentations))
            self.rows.extend((b, ns, int(s)) for s in order)
        if n_trials is not None:
            self.rows = self.rows[:int(n_trials)]
        return len(self.rows)

    def pre(self, t):
        b, ns, s = self.rows[t]
        return {"trial": t, "block": b, "set_size": ns, "stimulus": s}

    def respond(self, t, decision, value, rng):
        b, _, s = self.rows[t]
        return {"reward": int(value == self.correct[b][s])}

    def record(self, t, v):
        return WMTrial(v["block"], v["set_size"], v["stimulus"], v["action"], v["reward"])

    def meta(self):
        used = sorted({r[0] for r in self.rows})
        return {"correct": {b: list(self.correct[b]) for b in used}}


@dataclass
class DecisionProblemSet:
    """Fixed list of paired options with expert validities."""

    problems: list  # [(features_a, features_b)]
    validities: tuple
    priority: tuple | None = None  # feature order take-the-best inspects

    def __post_init__(self):
        self.problems = [(tuple(int(x) for x in a), tuple(int(x) for x in b)) for a, b in self.problems]
        self.validities = tuple(float(v) for v in self.validities)
        self.kind = ParadigmKind.DECISION

    @property
    def n_features(self):
        return len(self.validities)

    def __len__(self):
        return len(self.problems)

    def start(self, n_trials, rng):
        self.n = len(self.problems) if n_trials is None else min(int(n_trials), len(self.problems))
        return self.n

    def pre(self, t):
        a, b = self.problems[t]
        return {"trial": t, "features_a": a, "features_b": b, "validities": self.validities}

    def respond(self, t, decision, value, rng):
        return {}

    def record(self, t, v):
        return DecisionTrial(v["features_a"], v["features_b"], v["validities"], v["choice"])

    def meta(self):
        return {"priority": list(self.priority)} if self.priority is not None else {}
