"""Group-level model comparison: BIC tables, paired tests, exceedance probabilities."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.special import digamma

from .errors import NonFiniteEvidence, ParticipantSetMismatch

VB_TOL = 1e-6
VB_MAX_ITER = 10_000
MC_CHUNK = 100_000


def _log_softmax_rows(x):
    m = x.max(axis=1, keepdims=True)
    z = x - m
    # sorting each row first makes the sum independent of column order
    return z - np.log(np.sort(np.exp(z), axis=1).sum(axis=1, keepdims=True))


def _vb_alpha(lme, alpha0=1.0):
    """Variational Dirichlet posterior over model frequencies."""
    n, K = lme.shape
    a0 = np.full(K, float(alpha0))
    alpha = a0.copy()
    if n == 0:
        return alpha
    for _ in range(VB_MAX_ITER):
        log_u = lme + (digamma(alpha) - digamma(np.sort(alpha).sum()))
        g = np.exp(_log_softmax_rows(log_u))
        # sorted sums keep the result independent of participant order
        beta = np.array([math.fsum(np.sort(g[:, k])) for k in range(K)])
        new = a0 + beta
        done = math.sqrt(math.fsum(np.sort((new - alpha) ** 2))) < VB_TOL
        alpha = new
        if done:
            break
    return alpha


def _mc_exceedance(alpha, mc_samples, rng):
    K = alpha.shape[0]
    wins = np.zeros(K)
    left = int(mc_samples)
    while left > 0:
        m = min(left, MC_CHUNK)
        r = rng.standard_gamma(alpha, size=(m, K))
        np.add.at(wins, r.argmax(axis=1), 1.0)
        left -= m
    return wins / float(mc_samples)


def exceedance_probability(log_evidence, mc_samples=1_000_000, seed=0, alpha0=1.0,
                           return_alpha=False):
    """Probability that each model is the most frequent one in the population.

    Random-effects selection: a Dirichlet(alpha0) prior over model
    frequencies, a mean-field posterior from fixed-point updates, and a
    Monte Carlo estimate of which frequency is largest.  The estimate is
    exactly equivariant under column permutations: sampling happens in a
    canonical column order and models with equal posterior counts share
    their wins evenly.
    """
    L = np.asarray(log_evidence, dtype=np.float64)
    if L.ndim != 2:
        raise ValueError("log evidence must be participants x models")
    if not np.all(np.isfinite(L)):
        raise NonFiniteEvidence("log evidence has non-finite entries")
    K = L.shape[1]
    if K == 0:
        raise ValueError("no models")
    alpha = _vb_alpha(L, alpha0)
    order = np.lexsort((np.arange(K), alpha))  # canonical order by alpha
    rng = np.random.default_rng(seed)
    a_sorted = alpha[order]
    ex_sorted = _mc_exceedance(a_sorted, mc_samples, rng)
    # pool the estimate within groups of identical alpha
    i = 0
    while i < K:
        j = i
        while j + 1 < K and a_sorted[j + 1] == a_sorted[i]:
            j += 1
        ex_sorted[i:j + 1] = ex_sorted[i:j + 1].sum() / (j + 1 - i)
        i = j + 1
    ex = np.empty(K)
    ex[order] = ex_sorted
    return (ex, alpha) if return_alpha else ex


@dataclass
class ComparisonReport:
    models: list
    participants: list
    per_participant_bic: np.ndarray
    mean_bic: np.ndarray
    sem_bic: np.ndarray
    t_stat: float
    p_value: float
    exceedance: np.ndarray
    alpha: np.ndarray = None
    metric: str = "bic"
    best: str = ""
    runner_up: str = ""
    meta: dict = field(default_factory=dict)

    def to_dict(self):
        f = lambda x: None if x is None or (isinstance(x, float) and not math.isfinite(x)) else x
        return {"models": self.models, "participants": self.participants, "metric": self.metric,
                "per_participant_bic": self.per_participant_bic.tolist(),
                "mean_bic": self.mean_bic.tolist(), "sem_bic": self.sem_bic.tolist(),
                "t_stat": f(self.t_stat), "p_value": f(self.p_value),
                "exceedance": self.exceedance.tolist(),
                "alpha": None if self.alpha is None else self.alpha.tolist(),
                "best": self.best, "runner_up": self.runner_up, "meta": self.meta}

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["participant"] + list(self.models))
            for pid, row in zip(self.participants, self.per_participant_bic):
                w.writerow([pid] + [repr(float(x)) for x in row])


def compare(fits, metric="bic", mc_samples=1_000_000, seed=0):
    """Compare models fitted to the same participants.

    ``fits`` maps model name to a list of fit results.  Participants whose
    fit failed under any model are dropped from every column.
    """
    models = list(fits)
    if not models:
        raise ValueError("nothing to compare")
    sets = {m: {r.participant_id for r in fits[m]} for m in models}
    ref = sets[models[0]]
    for m in models[1:]:
        if sets[m] != ref:
            raise ParticipantSetMismatch(f"{m} was fitted to a different participant set "
                                         f"than {models[0]}")
    order = [r.participant_id for r in fits[models[0]]]
    table = {m: {r.participant_id: r for r in fits[m]} for m in models}
    keep = [pid for pid in order if all(math.isfinite(table[m][pid].metric(metric)) for m in models)]
    dropped = [pid for pid in order if pid not in keep]
    M = np.array([[table[m][pid].metric(metric) for m in models] for pid in keep],
                 dtype=np.float64).reshape(len(keep), len(models))
    n = M.shape[0]
    mean = M.mean(axis=0) if n else np.full(len(models), np.nan)
    sem = M.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.full(len(models), np.nan)
    rank = np.argsort(mean, kind="stable")
    best = models[rank[0]]
    t = p = math.nan
    runner = ""
    if len(models) > 1:
        runner = models[rank[1]]
        if n > 1:
            diff = M[:, rank[0]] - M[:, rank[1]]
            if np.all(diff == 0):
                t, p = 0.0, 0.5
            elif np.ptp(diff) <= 1e-9 * max(1.0, float(np.abs(diff).max())):
                # constant difference (up to rounding): zero variance, the test degenerates
                t = -math.inf if diff[0] < 0 else math.inf
                p = 0.0 if diff[0] < 0 else 1.0
            else:
                res = stats.ttest_rel(M[:, rank[0]], M[:, rank[1]], alternative="less")
                t, p = float(res.statistic), float(res.pvalue)
    ex, alpha = exceedance_probability(-0.5 * M, mc_samples, seed, return_alpha=True)
    meta = {"log_evidence": "-metric/2", "t_test": "paired, one-sided: best < runner-up",
            "df": n - 1, "dropped": dropped, "mc_samples": mc_samples, "seed": seed}
    return ComparisonReport(models, keep, M, mean, sem, t, p, ex, alpha, metric, best, runner, meta)
