"""The propose, fit, feed back loop."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..baselines import get_baseline
from ..comparison import compare
from ..dataset import SplitSpec, split, to_prompt_text, trial_lines
from ..errors import ConfigError, EngineError, NoBlocksFound, RunAborted
from ..fitting import fit_all
from .engines import propose
from .extract import extract_candidates
from .feedback import construct_feedback
from .prompt import COMPONENTS, build_prompt, default_spec


@dataclass
class RunConfig:
    dataset: object
    engine: object
    split: SplitSpec = field(default_factory=SplitSpec)
    metric: str = "bic"
    iterations: int = 10
    candidates_per_iter: int = 3
    max_retries: int = 3
    seed: int = 0
    restarts: int = 20
    baselines: tuple = ()
    components: dict = None
    prompt_participants: int | None = None
    prompt_trials: int | None = None
    temperature: float | None = None
    any_overlap: bool = False
    parallelism: int = 1
    mc_samples: int = 100_000

    def __post_init__(self):
        if self.metric.lower() not in ("bic", "aic"):
            raise ConfigError(f"metric must be bic or aic, got {self.metric!r}")
        self.metric = self.metric.lower()
        if self.iterations < 1 or self.candidates_per_iter < 1 or self.max_retries < 0:
            raise ConfigError("iterations and candidates_per_iter must be positive")
        bad = set(self.components or {}) - set(COMPONENTS)
        if bad:
            raise ConfigError(f"unknown prompt components: {sorted(bad)}")

    def summary(self):
        return {"metric": self.metric, "iterations": self.iterations,
                "candidates_per_iter": self.candidates_per_iter, "max_retries": self.max_retries,
                "seed": self.seed, "restarts": self.restarts, "baselines": list(self.baselines),
                "components": {c: bool((self.components or {}).get(c, True)) for c in COMPONENTS},
                "split": [self.split.prompt_fraction, self.split.validation_fraction,
                          self.split.test_fraction, self.split.seed],
                "dataset": self.dataset.provenance, "kind": self.dataset.kind.value,
                "any_overlap": self.any_overlap}


@dataclass
class CandidateLog:
    index: int
    name: str
    param_names: list
    score: float | None = None
    error: str | None = None
    error_type: str | None = None
    source: str = ""

    def to_dict(self):
        d = dict(self.__dict__)
        if d["score"] is not None and not math.isfinite(d["score"]):
            d["score"] = None
        return d


@dataclass
class IterationLog:
    iteration: int
    candidates: list
    fits: list
    best_so_far: tuple  # (model name, score)
    feedback_sent: str
    retries: int
    prompts: list = field(default_factory=list)
    responses: list = field(default_factory=list)

    def to_dict(self):
        return {"iteration": self.iteration, "retries": self.retries,
                "best_so_far": list(self.best_so_far), "feedback_sent": self.feedback_sent,
                "candidates": [c.to_dict() for c in self.candidates],
                "fits": [f.to_dict() for f in self.fits],
                "prompt_sha256": [hashlib.sha256(p.encode()).hexdigest() for p in self.prompts]}


@dataclass
class RunResult:
    run_id: str
    config: dict
    iterations: list
    best_model: object
    best_score: float
    test_fits: list
    baseline_fits: dict
    comparison: object
    leaks: list

    @property
    def prompts(self):
        return [p for it in self.iterations for p in it.prompts]

    @property
    def best_trace(self):
        return [it.best_so_far[1] for it in self.iterations]

    def to_dict(self):
        return {"run_id": self.run_id, "config": self.config,
                "best_model": {"name": self.best_model.name, "source": self.best_model.source,
                               "params": self.best_model.param_names},
                "best_score": self.best_score,
                "iterations": [it.to_dict() for it in self.iterations],
                "test_fits": [f.to_dict() for f in self.test_fits],
                "baseline_fits": {k: [f.to_dict() for f in v] for k, v in self.baseline_fits.items()},
                "comparison": self.comparison.to_dict() if self.comparison is not None else None,
                "leaks": self.leaks}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def audit_prompts(prompts, test, max_trials=None):
    """Return descriptions of any test-split data found in the prompts."""
    leaks = []
    for p in test.participants:
        lines = trial_lines(test.kind, p, max_trials)
        needle = "\n".join(lines)
        for i, text in enumerate(prompts):
            if p.participant_id in text:
                leaks.append(f"prompt {i}: test participant id {p.participant_id}")
            if needle and needle in text:
                leaks.append(f"prompt {i}: trial data of test participant {p.participant_id}")
    return leaks


def _score(fits, metric):
    vals = [f.metric(metric) for f in fits]
    if not vals or not all(math.isfinite(v) for v in vals):
        return math.inf
    return float(np.mean(vals))


def _run_id(cfg):
    blob = json.dumps(cfg.summary(), sort_keys=True) + "|" + ",".join(cfg.dataset.ids)
    return "run-" + hashlib.sha256(blob.encode()).hexdigest()[:12]


def run(config):
    cfg = config
    d = cfg.dataset
    kind = d.kind
    if hasattr(cfg.engine, "reset"):
        cfg.engine.reset()
    prompt_d, val_d, test_d = split(d, cfg.split)
    data_text = to_prompt_text(prompt_d, cfg.prompt_participants, cfg.prompt_trials)
    spec = default_spec(kind, data_text, cfg.candidates_per_iter, cfg.components)
    nf = d.n_features or 4

    history = []  # accepted parameter-name sets, in order
    best = None  # (program, score)
    logs = []
    for it in range(1, cfg.iterations + 1):
        feedback = construct_feedback(best, history, cfg.metric) if best is not None else ""
        cur = replace(spec, feedback=feedback or None)
        prompt = build_prompt(cur)
        retries = 0
        prompts, responses = [], []
        while True:
            prompts.append(prompt)
            try:
                text = propose(prompt, cfg.engine, cfg.temperature)
            except EngineError as e:
                raise RunAborted(it, e) from e
            responses.append(text)
            cause = None
            cands, fits = [], []
            try:
                found = extract_candidates(text, kind, history, cfg.any_overlap,
                                           cfg.candidates_per_iter, nf, f"it{it:02d}_")
            except NoBlocksFound as e:
                found, cause = [], e
            for c in found:
                log = CandidateLog(c.index, f"it{it:02d}_model{c.index}", sorted(c.param_names),
                                   error=c.error, error_type=c.error_type, source=c.raw_text)
                if c.ok:
                    fr = fit_all(c.program, val_d, cfg.restarts, cfg.seed, cfg.parallelism, kind)
                    fits.extend(fr)
                    failed = [f for f in fr if f.error]
                    if failed:
                        log.error = f"fit failed for {len(failed)} participant(s): {failed[0].error}"
                        log.error_type = "FitFailure"
                    else:
                        log.score = _score(fr, cfg.metric)
                        history.append(frozenset(c.param_names))
                        if best is None or log.score < best[1]:
                            best = (c.program, log.score)
                cands.append(log)
            if any(c.score is not None for c in cands):
                break
            if cause is None:
                errs = [c.error for c in cands if c.error]
                cause = RuntimeError(errs[0] if errs else "no usable candidates")
            if retries >= cfg.max_retries:
                raise RunAborted(it, cause)
            retries += 1
        logs.append(IterationLog(it, cands, fits, (best[0].name, best[1]), feedback, retries,
                                 prompts, responses))

    model = best[0]
    test_fits = fit_all(model, test_d, cfg.restarts, cfg.seed, cfg.parallelism, kind)
    base = {}
    for b in cfg.baselines:
        bm = get_baseline(b)
        if bm.supports(kind):
            base[bm.name] = fit_all(bm, test_d, cfg.restarts, cfg.seed, cfg.parallelism, kind)
    comp = None
    if base:
        comp = compare({model.name: test_fits, **base}, cfg.metric, cfg.mc_samples, cfg.seed)
    leaks = audit_prompts([p for lg in logs for p in lg.prompts], test_d, cfg.prompt_trials)
    return RunResult(_run_id(cfg), cfg.summary(), logs, model, best[1], test_fits, base, comp, leaks)
