"""Prompt-component ablations: rerun the loop without one component at a time."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .prompt import ABLATABLE
from .run import run


@dataclass
class AblationRow:
    ablated: str  # "none" for the full prompt
    mean_test: float
    mean_delta: float
    t_stat: float
    p_value: float
    deltas: dict = field(default_factory=dict)  # participant -> score minus full-prompt score
    best_model: str = ""


@dataclass
class AblationTable:
    metric: str
    rows: list
    results: dict

    def row(self, name):
        for r in self.rows:
            if r.ablated == name:
                return r
        raise KeyError(name)

    def worst(self):
        """Ablation with the largest mean increase over the full prompt."""
        cands = [r for r in self.rows if r.ablated != "none"]
        return max(cands, key=lambda r: r.mean_delta).ablated if cands else None

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["ablated", f"mean_test_{self.metric}", "mean_delta", "t", "p", "best_model"])
            for r in self.rows:
                w.writerow([r.ablated, repr(r.mean_test), repr(r.mean_delta), repr(r.t_stat),
                            repr(r.p_value), r.best_model])


def _scores(result, metric):
    return {f.participant_id: f.metric(metric) for f in result.test_fits}


def ablate(config, components=ABLATABLE):
    """Full-prompt run plus one run per removed component.

    Each row carries per-participant deltas against the full prompt and a
    paired t-test of those deltas (two-sided).
    """
    comps = list(components)
    bad = [c for c in comps if c not in ABLATABLE]
    if bad:
        raise ValueError(f"cannot ablate {bad}; choose from {list(ABLATABLE)}")
    full = run(config)
    ref = _scores(full, config.metric)
    rows = [AblationRow("none", float(np.mean(list(ref.values()))), 0.0, math.nan, math.nan,
                        {k: 0.0 for k in ref}, full.best_model.name)]
    results = {"none": full}
    for c in comps:
        flags = dict(config.components or {})
        flags[c] = False
        res = run(replace(config, components=flags))
        sc = _scores(res, config.metric)
        ids = [k for k in ref if k in sc]
        d = np.array([sc[k] - ref[k] for k in ids])
        if len(d) > 1 and np.any(d != d[0]):
            tt = stats.ttest_1samp(d, 0.0)
            t, p = float(tt.statistic), float(tt.pvalue)
        else:
            t, p = (0.0, 1.0) if len(d) and np.all(d == 0) else (math.nan, math.nan)
        rows.append(AblationRow(c, float(np.mean(list(sc.values()))), float(d.mean()) if len(d) else math.nan,
                                t, p, dict(zip(ids, d.tolist())), res.best_model.name))
        results[c] = res
    return AblationTable(config.metric, rows, results)
