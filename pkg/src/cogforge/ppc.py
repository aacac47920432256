"""Posterior predictive checks: behavioural summaries and fitted-model resimulation."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .baselines.heuristics import heuristic_prediction
from .dataset import Dataset, ParadigmKind
from .errors import MissingCorrectMap, MissingLabels, ParadigmMismatch
from .synthgen.envs import Bandit, DecisionProblemSet, RLWMTask, TwoStep

DECISION_STATS = ("eqw", "ttb", "wadd")
LEARNING_STATS = ("high_early", "high_late", "low_early", "low_late")
PLANNING_STATS = ("rewarded_common", "rewarded_rare", "unrewarded_common", "unrewarded_rare")
ITERATIONS = 9


@dataclass
class PPCTable:
    """Tidy rows of (participant, statistic, value, n); ``value`` is None when n == 0."""

    kind: str
    rows: list = field(default_factory=list)
    flags: dict = field(default_factory=dict)  # participant -> reason a table is empty

    def add(self, pid, stat, hits, n):
        self.rows.append({"participant": pid, "statistic": stat,
                          "value": hits / n if n else None, "n": int(n)})

    @property
    def statistics(self):
        return list(dict.fromkeys(r["statistic"] for r in self.rows))

    @property
    def participants(self):
        return list(dict.fromkeys(r["participant"] for r in self.rows))

    def value(self, pid, stat):
        for r in self.rows:
            if r["participant"] == pid and r["statistic"] == stat:
                return r["value"]
        raise KeyError((pid, stat))

    def values(self, stat):
        """Per-participant values of one statistic (participants with n == 0 skipped)."""
        return {r["participant"]: r["value"] for r in self.rows
                if r["statistic"] == stat and r["value"] is not None}

    def mean(self, stat):
        v = list(self.values(stat).values())
        return float(np.mean(v)) if v else math.nan

    def pooled(self, stat):
        num = sum(r["value"] * r["n"] for r in self.rows if r["statistic"] == stat and r["n"])
        den = sum(r["n"] for r in self.rows if r["statistic"] == stat)
        return num / den if den else math.nan

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, ["participant", "statistic", "value", "n"])
            w.writeheader()
            for r in self.rows:
                w.writerow({**r, "value": "" if r["value"] is None else repr(r["value"])})


def _require(d, *kinds):
    if d.kind not in kinds:
        raise ParadigmMismatch(f"this check needs {'/'.join(k.value for k in kinds)} data, "
                               f"got {d.kind.value}")


def ppc_decision(d):
    """Share of choices each heuristic predicts; trials where it ties are left out."""
    _require(d, ParadigmKind.DECISION)
    out = PPCTable("decision")
    for p in d.participants:
        prio = p.meta.get("priority")
        for h in DECISION_STATS:
            hits = n = 0
            for t in p.trials:
                pred = heuristic_prediction(h, t.features_a, t.features_b, t.validities,
                                            prio if h == "ttb" else None)
                if pred is None:
                    continue
                n += 1
                hits += pred == t.choice
            out.add(p.participant_id, h, hits, n)
    return out


def _blocks(p):
    starts = np.flatnonzero(p.block_starts()).tolist() + [len(p.trials)]
    return [(p.trials[s].block, s, e) for s, e in zip(starts[:-1], starts[1:])]


def _better_arm(p, block, s, e):
    probs = p.meta.get("block_probs", {})
    if block in probs:
        q = probs[block]
        return None if q[0] == q[1] else int(q[1] > q[0])
    # no generative key: use the observed mean payoff of each arm in the block
    tot, cnt = [0.0, 0.0], [0, 0]
    for t in p.trials[s:e]:
        tot[t.action] += t.reward
        cnt[t.action] += 1
        if t.forgone_reward is not None:
            tot[1 - t.action] += t.forgone_reward
            cnt[1 - t.action] += 1
    if not all(cnt):
        return None
    m0, m1 = tot[0] / cnt[0], tot[1] / cnt[1]
    return None if m0 == m1 else int(m1 > m0)


def ppc_learning(d, block_labels=None):
    """Higher-value choice rate by block type (high/low) and phase (first vs last third)."""
    _require(d, ParadigmKind.LEARNING_PARTIAL, ParadigmKind.LEARNING_FULL)
    out = PPCTable("learning")
    for p in d.participants:
        labels = block_labels if block_labels is not None else p.meta.get("block_labels")
        if labels is None:
            raise MissingLabels(f"participant {p.participant_id!r} has no high/low block labels")
        if callable(getattr(labels, "get", None)) and p.participant_id in labels:
            labels = labels[p.participant_id]
        acc = {s: [0, 0] for s in LEARNING_STATS}
        for b, s, e in _blocks(p):
            lab = labels.get(b) if hasattr(labels, "get") else labels[b]
            if lab not in ("high", "low"):
                raise MissingLabels(f"block {b} of {p.participant_id!r} is not labelled high/low")
            best = _better_arm(p, b, s, e)
            if best is None:
                continue
            third = (e - s) // 3
            for phase, lo, hi in (("early", s, s + third), ("late", e - third, e)):
                cell = acc[f"{lab}_{phase}"]
                for t in p.trials[lo:hi]:
                    cell[0] += t.action == best
                    cell[1] += 1
        for stat in LEARNING_STATS:
            out.add(p.participant_id, stat, *acc[stat])
    return out


def ppc_planning(d):
    """P(repeat first-stage action) by previous reward and transition type."""
    _require(d, ParadigmKind.PLANNING)
    out = PPCTable("planning")
    for p in d.participants:
        cells = {s: [0, 0] for s in PLANNING_STATS}
        tr = p.trials
        for t in range(len(tr) - 1):
            rew = "rewarded" if tr[t].reward > 0 else "unrewarded"
            trans = "common" if tr[t].state_2 == tr[t].action_1 else "rare"
            c = cells[f"{rew}_{trans}"]
            c[0] += tr[t + 1].action_1 == tr[t].action_1
            c[1] += 1
        if len(tr) < 2:
            out.flags[p.participant_id] = "fewer than two trials"
        for stat in PLANNING_STATS:
            out.add(p.participant_id, stat, *cells[stat])
    return out


def rlwm_stat(set_size, iteration):
    return f"ns{set_size}_iter{iteration}"


def ppc_rlwm(d, correct=None):
    """P(correct) against how many times the stimulus has been seen, per set size."""
    _require(d, ParadigmKind.WORKING_MEMORY)
    out = PPCTable("working_memory")
    sizes = sorted({t.set_size for p in d.participants for t in p.trials})
    for p in d.participants:
        key = correct if correct is not None else p.meta.get("correct")
        if key is None:
            raise MissingCorrectMap(f"participant {p.participant_id!r} has no correct-action map")
        if p.participant_id in key and not isinstance(next(iter(key)), int):
            key = key[p.participant_id]
        cells = {}
        seen = {}
        for t in p.trials:
            n = seen.get((t.block, t.stimulus), 0) + 1
            seen[(t.block, t.stimulus)] = n
            if n > ITERATIONS:
                continue
            c = cells.setdefault((t.set_size, n), [0, 0])
            c[0] += t.action == key[t.block][t.stimulus]
            c[1] += 1
        for ns in sizes:
            for it in range(1, ITERATIONS + 1):
                out.add(p.participant_id, rlwm_stat(ns, it), *cells.get((ns, it), [0, 0]))
    return out


def curve(table, set_size, pooled=False):
    f = table.pooled if pooled else table.mean
    return [f(rlwm_stat(set_size, it)) for it in range(1, ITERATIONS + 1)]


def run_ppc(d, **kw):
    if d.kind is ParadigmKind.DECISION:
        return ppc_decision(d)
    if d.kind.is_learning:
        return ppc_learning(d, **kw)
    if d.kind is ParadigmKind.PLANNING:
        return ppc_planning(d)
    return ppc_rlwm(d, **kw)


# -- resimulation ---------------------------------------------------------------

def env_for(p, kind, alphabet=(0, 1)):
    """A task environment that reproduces one participant's session structure."""
    if kind is ParadigmKind.DECISION:
        return DecisionProblemSet([(t.features_a, t.features_b) for t in p.trials],
                                  p.trials[0].validities, p.meta.get("priority"))
    if kind.is_learning:
        blocks = [t.block for t in p.trials]
        nb = max(blocks) + 1
        probs = []
        for b in range(nb):
            if b in p.meta.get("block_probs", {}):
                probs.append(tuple(p.meta["block_probs"][b]))
                continue
            # empirical win rates stand in for unknown contingencies
            lo, hi = alphabet
            wins, cnt = [0, 0], [0, 0]
            for t in p.trials:
                if t.block != b:
                    continue
                wins[t.action] += t.reward == hi
                cnt[t.action] += 1
                if t.forgone_reward is not None:
                    wins[1 - t.action] += t.forgone_reward == hi
                    cnt[1 - t.action] += 1
            probs.append(tuple(w / c if c else 0.5 for w, c in zip(wins, cnt)))
        labels = p.meta.get("block_labels")
        lab = [labels.get(b, "high") for b in range(nb)] if labels else None
        fb = "full" if kind is ParadigmKind.LEARNING_FULL else "partial"
        return Bandit(reward_alphabet=alphabet, feedback=fb, block_probs=probs, block_labels=lab,
                      block_sequence=blocks)
    if kind is ParadigmKind.PLANNING:
        return TwoStep(drift=True)
    rows = [(t.block, t.set_size, t.stimulus) for t in p.trials]
    corr = p.meta.get("correct")
    if corr is None:
        raise MissingCorrectMap(f"participant {p.participant_id!r} has no correct-action map")
    return RLWMTask(rows=rows, correct=corr)


def simulate_fitted(model, d, fits, seed=0):
    """Simulate each participant's session from their fitted parameters."""
    by = {f.participant_id: f for f in fits}
    parts = []
    for i, p in enumerate(d.participants):
        f = by.get(p.participant_id)
        if f is None or not all(math.isfinite(x) for x in f.theta_hat):
            continue
        env = env_for(p, d.kind, d.reward_alphabet)
        sim = model.simulate(env, f.theta_hat, len(p.trials), seed=seed + i,
                             participant_id=p.participant_id)
        parts.append(sim)
    return Dataset(d.kind, tuple(parts), f"simulated from fitted {getattr(model, 'name', model)}")


def correlate(human, simulated, stat):
    """Pearson correlation of one statistic across participants present in both tables."""
    a, b = human.values(stat), simulated.values(stat)
    ids = [k for k in a if k in b]
    if len(ids) < 3:
        return math.nan
    x = np.array([a[k] for k in ids])
    y = np.array([b[k] for k in ids])
    if x.std() == 0 or y.std() == 0:
        return math.nan
    return float(np.corrcoef(x, y)[0, 1])
