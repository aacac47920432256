"""Synthetic agents, decision problems and model-recovery studies."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..baselines import get_baseline
from ..baselines.heuristics import heuristic_prediction
from ..dataset import Dataset, DecisionTrial, ParadigmKind, ParticipantData, with_meta
from ..fitting import fit_one, participant_rng
from .envs import Bandit, DecisionProblemSet, RLWMTask, TwoStep

AGENT_BETA = (1.0, 10.0)
BETA_NAMES = ("beta", "beta1", "beta2", "beta_rl")
DEFAULT_VALIDITIES = (0.9, 0.8, 0.7, 0.6)
TTB_FIRST = 1  # take-the-best inspects the second feature first


def ttb_priority(n_features, first=TTB_FIRST):
    return (first,) + tuple(j for j in range(n_features) if j != first)


def _draw_option(rng, n_features, binary):
    if binary:
        return rng.integers(0, 2, n_features)
    return rng.integers(0, 101, n_features)


def gen_decision_problems(n=80, n_features=3, seed=0, binary=False, priority=None,
                          validities=None):
    """Balanced, unambiguous problems.

    Every accepted pair has a strict take-the-best answer and a strict
    tallying answer, and the two disagree; exactly half the problems have A
    superior under take-the-best.
    """
    if n % 2:
        raise ValueError("n must be even so that A and B can be balanced")
    if n_features not in (3, 4):
        raise ValueError("n_features must be 3 or 4")
    priority = tuple(priority) if priority is not None else ttb_priority(n_features)
    validities = tuple(validities) if validities is not None else DEFAULT_VALIDITIES[:n_features]
    rng = np.random.default_rng(seed)
    want = {0: n // 2, 1: n // 2}
    problems = []
    while len(problems) < n:
        a = _draw_option(rng, n_features, binary)
        b = _draw_option(rng, n_features, binary)
        ttb = heuristic_prediction("ttb", a, b, priority=priority)
        tal = heuristic_prediction("tallying", a, b)
        if ttb is None or tal is None or ttb == tal or want[ttb] == 0:
            continue
        want[ttb] -= 1
        problems.append((a, b))
    return DecisionProblemSet(problems, validities, priority)


def simulate_heuristic_agents(kind, problems, noise, n_agents=1, seed=0, id_prefix=None):
    """Agents that follow a heuristic and flip each answer with prob ``noise``."""
    kind = kind.lower()
    if not 0.0 <= noise <= 1.0:
        raise ValueError("noise must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    prefix = id_prefix or kind
    parts = []
    for i in range(n_agents):
        trials = []
        for a, b in problems.problems:
            pred = heuristic_prediction(kind, a, b, problems.validities,
                                        problems.priority if kind == "ttb" else None)
            c = int(rng.integers(2)) if pred is None else pred
            if rng.random() < noise:
                c = 1 - c
            trials.append(DecisionTrial(a, b, problems.validities, c))
        parts.append(ParticipantData(f"{prefix}_{i:03d}", tuple(trials),
                                     {"heuristic": kind, "noise": noise,
                                      "priority": list(problems.priority)}))
    return Dataset(ParadigmKind.DECISION, tuple(parts),
                   f"simulated {kind} agents, noise={noise}, seed={seed}")


def sample_params(model, rng, beta_range=AGENT_BETA):
    th = []
    for name, (lo, hi) in zip(model.param_names, model.bounds):
        if name in BETA_NAMES and beta_range is not None:
            lo, hi = beta_range
        th.append(float(rng.uniform(lo, hi)))
    return th


def _agents(model, make_env, n_agents, n_trials, seed, params, beta_range, prefix, kind):
    model = get_baseline(model) if isinstance(model, str) else model
    ss = np.random.SeedSequence(seed)
    parts, truths = [], []
    for i, child in enumerate(ss.spawn(n_agents)):
        rng = np.random.default_rng(child)
        if params is None:
            th = sample_params(model, rng, beta_range)
        elif isinstance(params[0], (list, tuple, np.ndarray)):
            th = [float(x) for x in params[i]]
        else:
            th = [float(x) for x in params]
        pid = f"{prefix}_{i:03d}"
        sim_seed = int(rng.integers(2**63))
        p = model.simulate(make_env(), th, n_trials, seed=sim_seed, participant_id=pid)
        truths.append(dict(zip(model.param_names, th)))
        parts.append(with_meta(p, true_params=truths[-1], generating_model=model.name))
    if not parts:
        return None, truths
    return Dataset(kind, tuple(parts), f"simulated {model.name} agents, seed={seed}"), truths


def gen_bandit_agents(kind="rw_pm", n_agents=100, n_trials=150, contingencies=(0.2, 0.8), seed=0,
                      params=None, beta_range=AGENT_BETA, feedback="partial"):
    """Bandit agents with binary rewards; returns the dataset and true parameters."""
    model = get_baseline(kind) if isinstance(kind, str) else kind
    env = lambda: Bandit(tuple(contingencies), (0, 1), feedback)
    lk = ParadigmKind.LEARNING_FULL if feedback == "full" else ParadigmKind.LEARNING_PARTIAL
    return _agents(model, env, n_agents, n_trials, seed, params, beta_range, model.name, lk)


def gen_twostep_agents(kind="hybrid", n_agents=1, n_trials=200, seed=0, params=None,
                       beta_range=AGENT_BETA, drift=True, reward_probs=None):
    model = get_baseline(kind) if isinstance(kind, str) else kind
    kw = {"drift": drift}
    if reward_probs is not None:
        kw["reward_probs"] = reward_probs
    env = lambda: TwoStep(**kw)
    return _agents(model, env, n_agents, n_trials, seed, params, beta_range, model.name,
                   ParadigmKind.PLANNING)


def gen_rlwm_agents(kind="rlwm", n_agents=1, set_sizes=(3, 6, 3, 6), seed=0, params=None,
                    beta_range=AGENT_BETA, presentations=9):
    model = get_baseline(kind) if isinstance(kind, str) else kind
    env = lambda: RLWMTask(set_sizes, presentations)
    return _agents(model, env, n_agents, None, seed, params, beta_range, model.name,
                   ParadigmKind.WORKING_MEMORY)


# -- identification -----------------------------------------------------------

def _name(m):
    return getattr(m, "name", None) or m.model_id


def identify_model(p, candidates, restarts=20, seed=0, return_fits=False):
    """Candidate with the lowest fitted NLL; ties go to fewer parameters, then a seeded coin."""
    candidates = [get_baseline(c) if isinstance(c, str) else c for c in candidates]
    if not candidates:
        raise ValueError("no candidate models")
    if len(candidates) == 1 and not return_fits:
        return _name(candidates[0])
    fits = [fit_one(m, p, restarts, seed) for m in candidates]
    key = [(f.nll, m.k) for f, m in zip(fits, candidates)]
    best = min(key)
    tied = [i for i, kv in enumerate(key) if kv == best]
    if len(tied) > 1:
        rng = participant_rng(seed + 1, p.participant_id)
        pick = tied[int(rng.integers(len(tied)))]
    else:
        pick = tied[0]
    name = _name(candidates[pick])
    return (name, fits) if return_fits else name


@dataclass
class RecoveryEntry:
    participant_id: str
    true_model: str
    identified_model: str
    bic_true: float
    bic_alt: float
    nll: dict


@dataclass
class RecoveryReport:
    entries: list = field(default_factory=list)
    accuracy: dict = field(default_factory=dict)  # generating model -> accuracy or None
    n_agents: dict = field(default_factory=dict)
    mean_bic_true: dict = field(default_factory=dict)
    undefined: list = field(default_factory=list)

    def to_dict(self):
        return {"accuracy": self.accuracy, "n_agents": self.n_agents,
                "mean_bic_true": self.mean_bic_true, "undefined": self.undefined,
                "entries": [e.__dict__ for e in self.entries]}


@dataclass
class RecoveryConfig:
    generating: tuple = ("rw_pm", "rw_kappa")
    candidates: tuple = ("rw_pm", "rw_kappa")
    n_agents: int = 100
    n_trials: int = 150
    contingencies: tuple = (0.2, 0.8)
    restarts: int = 20
    seed: int = 0
    beta_range: tuple = AGENT_BETA


def recovery_study(config=None, **overrides):
    """Generate agents from each model, identify them among the candidates, tally accuracy."""
    cfg = config or RecoveryConfig()
    if overrides:
        cfg = RecoveryConfig(**{**cfg.__dict__, **overrides})
    report = RecoveryReport()
    cands = [get_baseline(c) if isinstance(c, str) else c for c in cfg.candidates]
    for gi, gen in enumerate(cfg.generating):
        gm = get_baseline(gen) if isinstance(gen, str) else gen
        gname = _name(gm)
        d, _ = gen_bandit_agents(gm, cfg.n_agents, cfg.n_trials, cfg.contingencies,
                                 seed=cfg.seed + 1000 * gi, beta_range=cfg.beta_range)
        hits, bics = 0, []
        agents = d.participants if d is not None else ()
        for p in agents:
            name, fits = identify_model(p, cands, cfg.restarts, cfg.seed, return_fits=True)
            by = {_name(m): f for m, f in zip(cands, fits)}
            bt = by[gname].bic if gname in by else math.nan
            alt = [f.bic for n, f in by.items() if n != gname]
            report.entries.append(RecoveryEntry(p.participant_id, gname, name, bt,
                                                min(alt) if alt else math.nan,
                                                {n: f.nll for n, f in by.items()}))
            hits += name == gname
            bics.append(bt)
        report.n_agents[gname] = len(agents)
        if agents:
            report.accuracy[gname] = hits / len(agents)
            report.mean_bic_true[gname] = float(np.mean(bics))
        else:
            report.accuracy[gname] = None
            report.mean_bic_true[gname] = None
            report.undefined.append(gname)
    return report


# -- heuristic noise sweep ----------------------------------------------------

def binomial_ci(p, n, z=1.959963984540054):
    half = z * math.sqrt(p * (1 - p) / n) if n else math.inf
    return p - half, p + half


def decision_attribution(p, problems):
    """Label each choice with the heuristic it is consistent with.

    Problems are built so that take-the-best and tallying disagree on every
    pair, which makes the label unique.
    """
    labels = []
    for t in p.trials:
        ttb = heuristic_prediction("ttb", t.features_a, t.features_b, priority=problems.priority)
        tal = heuristic_prediction("tallying", t.features_a, t.features_b)
        labels.append("ttb" if t.choice == ttb else ("tallying" if t.choice == tal else None))
    return labels


def noise_sweep(noises=(0.0, 0.25, 0.5), n_agents=10, n_problems=80, n_features=3, seed=0,
                binary=False):
    """Identification accuracy of TTB and tallying agents across noise levels.

    ``accuracy`` is the share of decisions attributed to the generating
    heuristic; ``agent_accuracy`` is the share of agents whose majority label
    is the generating heuristic (ties count half).
    """
    problems = gen_decision_problems(n_problems, n_features, seed, binary)
    rows = []
    for hi, kind in enumerate(("ttb", "tallying")):
        for ni, noise in enumerate(noises):
            d = simulate_heuristic_agents(kind, problems, noise, n_agents,
                                          seed=seed + 1 + 100 * hi + ni)
            hits = total = 0
            agent_hits = 0.0
            for p in d.participants:
                lab = decision_attribution(p, problems)
                mine = sum(x == kind for x in lab)
                other = sum(x is not None and x != kind for x in lab)
                hits += mine
                total += len(lab)
                agent_hits += 1.0 if mine > other else (0.5 if mine == other else 0.0)
            acc = hits / total
            rows.append({"heuristic": kind, "noise": noise, "accuracy": acc, "n": total,
                         "ci_half_null": 1.959963984540054 * math.sqrt(0.25 / total),
                         "agent_accuracy": agent_hits / n_agents})
    return rows
