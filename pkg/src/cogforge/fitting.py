"""Multi-start bounded maximum-likelihood fitting and information criteria."""
from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import AllRestartsFailed, CogforgeError, EmptyDataset, NonFiniteObjective

FATOL = 1e-6
XATOL = 1e-5
MAXFEV = 2000
SIMPLEX_STEP = 0.05  # initial simplex edge, as a fraction of the box width


def bic(nll, k, n):
    if n < 1:
        raise ValueError("BIC needs at least one scored observation")
    return 2.0 * nll + k * math.log(n)


def aic(nll, k):
    return 2.0 * nll + 2.0 * k


@dataclass
class FitResult:
    model_id: str
    participant_id: str
    theta_hat: list
    nll: float
    bic: float
    aic: float
    n_obs: int
    k: int
    n_restarts: int
    converged: bool
    restart_nlls: list = field(default_factory=list)
    param_names: list = field(default_factory=list)
    error: str | None = None

    def to_dict(self):
        d = asdict(self)
        for key in ("nll", "bic", "aic"):
            if not math.isfinite(d[key]):
                d[key] = None
        d["restart_nlls"] = [x if math.isfinite(x) else None for x in d["restart_nlls"]]
        d["theta_hat"] = [x if math.isfinite(x) else None for x in d["theta_hat"]]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        inf = float("inf")
        for key in ("nll", "bic", "aic"):
            d[key] = inf if d.get(key) is None else float(d[key])
        d["restart_nlls"] = [inf if x is None else float(x) for x in d.get("restart_nlls", [])]
        d["theta_hat"] = [float("nan") if x is None else float(x) for x in d["theta_hat"]]
        return cls(**d)

    def metric(self, name):
        return {"bic": self.bic, "aic": self.aic, "nll": self.nll}[name.lower()]


def participant_rng(seed, participant_id):
    """Stream that depends only on the run seed and the participant id."""
    h = hashlib.blake2b(str(participant_id).encode(), digest_size=8).digest()
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF,
                                                          int.from_bytes(h, "little")]))


def starting_points(bounds, restarts, rng):
    """``restarts`` uniform draws followed by the box centre.

    Draws are taken one start at a time, so a smaller ``restarts`` gives a
    prefix of a larger one under the same stream.
    """
    lo = np.array([b[0] for b in bounds], dtype=np.float64)
    hi = np.array([b[1] for b in bounds], dtype=np.float64)
    pts = [lo + (hi - lo) * rng.random(lo.shape[0]) for _ in range(restarts)]
    pts.append(0.5 * (lo + hi))
    return pts


def _simplex(x0, lo, hi):
    n = x0.shape[0]
    sim = np.tile(x0, (n + 1, 1))
    for j in range(n):
        step = SIMPLEX_STEP * (hi[j] - lo[j]) or 1e-4
        # step away from the nearer bound so the vertex stays inside
        sim[j + 1, j] += step if x0[j] + step <= hi[j] else -step
    return sim


class _Abort(Exception):
    pass


class _Wrapped:
    """Objective guard: clips into the box and maps numerical failures to +inf."""

    def __init__(self, fn, lo, hi):
        self.fn, self.lo, self.hi = fn, lo, hi
        self.errors = 0
        self.nonfinite = 0
        self.calls = 0
        self.ok = 0

    def __call__(self, x):
        self.calls += 1
        x = np.clip(x, self.lo, self.hi)
        try:
            v = float(self.fn(x))
        except ArithmeticError:
            self.errors += 1
            v = math.inf
        if not math.isfinite(v):
            if v != math.inf:
                self.nonfinite += 1
            v = math.inf
        else:
            self.ok += 1
        if self.ok == 0 and self.calls > self.n_init:
            raise _Abort
        return v


def _model_id(model):
    return getattr(model, "model_id", None) or model.name


def fit_one(model, p, restarts=20, seed=0, kind=None, backend=None):
    """Best of ``restarts`` + 1 bounded simplex searches for one participant."""
    obj = model.objective(p, kind, backend)
    n_obs = model.n_obs(p)
    k = model.k
    names = list(model.param_names)
    bounds = model.bounds
    if k == 0:
        try:
            nll = float(obj(np.empty(0)))
        except ArithmeticError as e:
            raise AllRestartsFailed(f"{_model_id(model)} failed on {p.participant_id}: {e}") from e
        if not math.isfinite(nll):
            raise NonFiniteObjective(f"{_model_id(model)} gave {nll} on {p.participant_id}")
        return FitResult(_model_id(model), p.participant_id, [], nll, bic(nll, 0, n_obs), aic(nll, 0),
                         n_obs, 0, 0, True, [nll], names)

    lo = np.array([b[0] for b in bounds], dtype=np.float64)
    hi = np.array([b[1] for b in bounds], dtype=np.float64)
    rng = participant_rng(seed, p.participant_id)
    best_x, best_f, best_ok = None, math.inf, False
    nlls = []
    errors = nonfinite = 0
    for x0 in starting_points(bounds, restarts, rng):
        f = _Wrapped(obj, lo, hi)
        f.n_init = k + 1
        try:
            res = minimize(f, x0, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                           options={"initial_simplex": _simplex(x0, lo, hi), "fatol": FATOL,
                                    "xatol": XATOL, "maxfev": MAXFEV, "maxiter": MAXFEV})
            x, fx, ok = np.clip(res.x, lo, hi), float(res.fun), bool(res.success)
        except _Abort:
            x, fx, ok = x0, math.inf, False
        errors += f.errors
        nonfinite += f.nonfinite
        nlls.append(fx)
        if fx < best_f:
            best_x, best_f, best_ok = x, fx, ok
    if best_x is None:
        who = f"{_model_id(model)} on {p.participant_id}"
        if errors and not nonfinite:
            raise AllRestartsFailed(f"every start of {who} hit a numerical error")
        raise NonFiniteObjective(f"objective of {who} was never finite")
    # the optimizer's reported value came from the same clipped point
    theta = [float(v) for v in best_x]
    return FitResult(_model_id(model), p.participant_id, theta, best_f, bic(best_f, k, n_obs),
                     aic(best_f, k), n_obs, k, len(nlls), best_ok, nlls, names)


def failed_result(model, p, err):
    k = model.k
    try:
        n_obs = model.n_obs(p)
    except CogforgeError:
        n_obs = len(p.trials)
    inf = math.inf
    return FitResult(_model_id(model), p.participant_id, [math.nan] * k, inf, inf, inf, n_obs, k, 0,
                     False, [], list(model.param_names), f"{type(err).__name__}: {err}")


def _fit_guarded(args):
    model, p, restarts, seed, kind, backend = args
    try:
        return fit_one(model, p, restarts, seed, kind, backend)
    except (CogforgeError, ArithmeticError, IndexError) as e:
        return failed_result(model, p, e)


def fit_all(model, d, restarts=20, seed=0, parallelism=1, kind=None, backend=None):
    """Fit every participant; failures come back as flagged entries."""
    parts = list(d.participants) if hasattr(d, "participants") else list(d)
    if not parts:
        raise EmptyDataset("no participants to fit")
    if kind is None and hasattr(d, "kind"):
        kind = d.kind
    jobs = [(model, p, restarts, seed, kind, backend) for p in parts]
    if parallelism <= 1 or len(jobs) == 1:
        return [_fit_guarded(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=int(parallelism)) as ex:
        return list(ex.map(_fit_guarded, jobs, chunksize=max(1, len(jobs) // (4 * parallelism))))


# -- serialization ------------------------------------------------------------

def write_jsonl(results, path):
    with open(path, "w") as fh:
        for r in results:
            fh.write(json.dumps(r.to_dict(), sort_keys=True) + "\n")


def read_jsonl(path):
    with open(path) as fh:
        return [FitResult.from_dict(json.loads(line)) for line in fh if line.strip()]


def write_csv(results, path):
    width = max((len(r.theta_hat) for r in results), default=0)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["model", "participant", "nll", "bic", "aic", "k", "n"]
                   + [f"theta{i}" for i in range(width)])
        for r in results:
            w.writerow([r.model_id, r.participant_id, repr(r.nll), repr(r.bic), repr(r.aic), r.k,
                        r.n_obs] + [repr(x) for x in r.theta_hat])
