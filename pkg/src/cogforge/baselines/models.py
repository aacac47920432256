"""Native reference models: likelihoods, simulated agents and the name registry."""
from __future__ import annotations

import enum
import math

import numpy as np

from .. import core
from ..dataset import ParadigmKind, ParticipantData
from ..errors import ParadigmMismatch, UnknownModel
from ..mdl.bindings import BINDINGS, kind_of
from ..mdl.runtime import ParameterSpec, check_theta
from .heuristics import heuristic_prediction

P_MIN = 1e-10
P_MAX = 1.0 - 1e-10
WM_BETA = 50.0

RATE = (0.0, 1.0)
BETA = (0.0, 20.0)
STICK = (-2.0, 2.0)

_LEARNING = (ParadigmKind.LEARNING_PARTIAL, ParadigmKind.LEARNING_FULL)


class BaselineKind(enum.Enum):
    TTB = "ttb"
    EQW = "eqw"
    WADD = "wadd"
    PWADD = "pwadd"
    RW = "rw"
    RW_PLUS_MINUS = "rw_pm"
    RW_KAPPA = "rw_kappa"
    RW_4ALPHA = "rw4a"
    HYBRID = "hybrid"
    RLWM = "rlwm"


_SPECS = {
    BaselineKind.TTB: ((), (ParadigmKind.DECISION,)),
    BaselineKind.EQW: ((), (ParadigmKind.DECISION,)),
    BaselineKind.WADD: ((), (ParadigmKind.DECISION,)),
    BaselineKind.PWADD: ((("w1",) + RATE, ("w2",) + RATE, ("w3",) + RATE, ("w4",) + RATE,
                          ("beta",) + BETA), (ParadigmKind.DECISION,)),
    BaselineKind.RW: ((("alpha",) + RATE, ("beta",) + BETA), _LEARNING),
    BaselineKind.RW_PLUS_MINUS: ((("alpha_pos",) + RATE, ("alpha_neg",) + RATE,
                                  ("beta",) + BETA), _LEARNING),
    BaselineKind.RW_KAPPA: ((("alpha",) + RATE, ("beta",) + BETA, ("kappa",) + STICK), _LEARNING),
    BaselineKind.RW_4ALPHA: ((("alpha_cp",) + RATE, ("alpha_cn",) + RATE, ("alpha_up",) + RATE,
                              ("alpha_un",) + RATE, ("beta",) + BETA, ("kappa",) + STICK),
                             (ParadigmKind.LEARNING_FULL,)),
    BaselineKind.HYBRID: ((("alpha1",) + RATE, ("alpha2",) + RATE, ("lam",) + RATE, ("w",) + RATE,
                           ("beta1",) + BETA, ("beta2",) + BETA, ("p",) + STICK),
                          (ParadigmKind.PLANNING,)),
    BaselineKind.RLWM: ((("alpha_pos",) + RATE, ("alpha_neg",) + RATE, ("phi",) + RATE,
                         ("omega",) + RATE, ("epsilon",) + RATE, ("beta_rl",) + BETA),
                        (ParadigmKind.WORKING_MEMORY,)),
}

_ALIASES = {
    "rwpm": "rw_pm", "rw+-": "rw_pm", "rw_plus_minus": "rw_pm", "rwplusminus": "rw_pm",
    "rwk": "rw_kappa", "rwkappa": "rw_kappa", "rw+k": "rw_kappa",
    "rw4alpha": "rw4a", "rw_4alpha": "rw4a", "take_the_best": "ttb",
}


def _clamp(p):
    return P_MIN if p < P_MIN else (P_MAX if p > P_MAX else p)


# ---------------------------------------------------------------------------
# objectives
# ---------------------------------------------------------------------------

def _rw_objective(kind, p, backend):
    k = core.get_kernels(backend)
    a = core._i(p.column("action"))
    r = core._f(p.column("reward"))
    fg = [t.forgone_reward for t in p.trials]
    f = core._f([0 if x is None else x for x in fg])
    bs = core._b(p.block_starts())
    if k.BACKEND == "python":
        a, r, f, bs = a.tolist(), r.tolist(), f.tolist(), bs.tolist()
    if kind is BaselineKind.RW:
        return lambda th: k.rw_nll(a, r, f, bs, th[0], th[0], 0.0, 0.0, th[1], 0.0, False)
    if kind is BaselineKind.RW_PLUS_MINUS:
        return lambda th: k.rw_nll(a, r, f, bs, th[0], th[1], 0.0, 0.0, th[2], 0.0, False)
    if kind is BaselineKind.RW_KAPPA:
        return lambda th: k.rw_nll(a, r, f, bs, th[0], th[0], 0.0, 0.0, th[1], th[2], False)
    return lambda th: k.rw_nll(a, r, f, bs, th[0], th[1], th[2], th[3], th[4], th[5], True)


def _heuristic_objective(kind, p):
    # an explicit inspection order in the participant meta overrides validity order
    prio = p.meta.get("priority") if kind is BaselineKind.TTB else None
    probs = []
    for t in p.trials:
        pred = heuristic_prediction(kind.value, t.features_a, t.features_b, t.validities, prio)
        probs.append(0.5 if pred is None else (P_MAX if pred == t.choice else P_MIN))
    nll = -sum(math.log(x) for x in probs)
    return lambda th: nll


def _pwadd_objective(p, backend):
    k = core.get_kernels(backend)
    fa = core._f([t.features_a for t in p.trials])
    fb = core._f([t.features_b for t in p.trials])
    if fa.shape[1] != 4:
        raise ParadigmMismatch(f"pwadd expects 4 features, data have {fa.shape[1]}")
    c = core._i(p.column("choice"))
    if k.BACKEND == "python":
        fa, fb, c = fa.tolist(), fb.tolist(), c.tolist()
    return lambda th: k.pwadd_nll(fa, fb, c, core._f(th[:4]) if k.BACKEND != "python" else list(th[:4]),
                                  th[4])


def _hybrid_objective(p, backend):
    k = core.get_kernels(backend)
    cols = [core._i(p.column(n)) for n in ("action_1", "state_2", "action_2")]
    r = core._f(p.column("reward"))
    if k.BACKEND == "python":
        cols, r = [c.tolist() for c in cols], r.tolist()
    return lambda th: k.hybrid_nll(cols[0], cols[1], cols[2], r, *th)


def _rlwm_objective(p, backend):
    k = core.get_kernels(backend)
    bs = core._b(p.block_starts())
    ss = core._i(p.column("set_size"))
    st = core._i(p.column("stimulus"))
    a = core._i(p.column("action"))
    r = core._f(p.column("reward"))
    if k.BACKEND == "python":
        bs, ss, st, a, r = bs.tolist(), ss.tolist(), st.tolist(), a.tolist(), r.tolist()
    return lambda th: k.rlwm_nll(bs, ss, st, a, r, *th)


class _Checked:
    def __init__(self, model, fn, n_obs):
        self.model = model
        self.fn = fn
        self.n_obs = n_obs

    def __call__(self, theta):
        th = check_theta(theta, self.model.params)
        return float(self.fn([float(x) for x in th]))


# ---------------------------------------------------------------------------
# agents for simulation
# ---------------------------------------------------------------------------

class _Agent:
    def start_block(self, pre):
        pass

    def learn(self, values):
        pass


class _HeuristicAgent(_Agent):
    def __init__(self, kind, theta):
        self.kind = kind
        self.theta = theta

    def probs(self, name, v):
        if self.kind is BaselineKind.PWADD:
            s = 0.0
            for j in range(4):
                s += self.theta[j] * (v["features_a"][j] - v["features_b"][j])
            pa = 1.0 / (1.0 + math.exp(min(-self.theta[4] * s, 700.0)))
            return [pa, 1.0 - pa]
        pred = heuristic_prediction(self.kind.value, v["features_a"], v["features_b"], v["validities"])
        if pred is None:
            return [0.5, 0.5]
        return [1.0, 0.0] if pred == 0 else [0.0, 1.0]


class _RWAgent(_Agent):
    def __init__(self, kind, th):
        if kind is BaselineKind.RW:
            self.r = (th[0], th[0], 0.0, 0.0, th[1], 0.0)
        elif kind is BaselineKind.RW_PLUS_MINUS:
            self.r = (th[0], th[1], 0.0, 0.0, th[2], 0.0)
        elif kind is BaselineKind.RW_KAPPA:
            self.r = (th[0], th[0], 0.0, 0.0, th[1], th[2])
        else:
            self.r = tuple(th)
        self.unchosen = kind is BaselineKind.RW_4ALPHA

    def start_block(self, pre):
        self.v = [0.5, 0.5]
        self.prev = -1

    def probs(self, name, values):
        beta, kappa = self.r[4], self.r[5]
        x0 = beta * self.v[0] + (kappa if self.prev == 0 else 0.0)
        x1 = beta * self.v[1] + (kappa if self.prev == 1 else 0.0)
        p0 = 1.0 / (1.0 + math.exp(min(x1 - x0, 700.0)))
        return [p0, 1.0 - p0]

    def learn(self, values):
        a_cp, a_cn, a_up, a_un = self.r[:4]
        a = values["action"]
        d = values["reward"] - self.v[a]
        self.v[a] += (a_cp if d >= 0 else a_cn) * d
        if self.unchosen:
            u = 1 - a
            d = values["forgone_reward"] - self.v[u]
            self.v[u] += (a_up if d >= 0 else a_un) * d
        self.prev = a


class _HybridAgent(_Agent):
    def __init__(self, th):
        self.a1, self.a2, self.lam, self.w, self.b1, self.b2, self.p = th

    def start_block(self, pre):
        self.q1 = [0.0, 0.0]
        self.q2 = [[0.0, 0.0], [0.0, 0.0]]
        self.prev = -1

    def probs(self, name, v):
        if name == "action_1":
            m0, m1 = max(self.q2[0]), max(self.q2[1])
            mb = (0.7 * m0 + 0.3 * m1, 0.3 * m0 + 0.7 * m1)
            x = [self.b1 * (self.w * mb[i] + (1 - self.w) * self.q1[i]
                            + self.p * (1.0 if self.prev == i else 0.0)) for i in (0, 1)]
        else:
            x = [self.b2 * q for q in self.q2[v["state_2"]]]
        p0 = 1.0 / (1.0 + math.exp(min(x[1] - x[0], 700.0)))
        return [p0, 1.0 - p0]

    def learn(self, v):
        a1, s, a2, r = v["action_1"], v["state_2"], v["action_2"], v["reward"]
        q = self.q2[s][a2]
        d2 = r - q
        self.q1[a1] = self.q1[a1] + self.a1 * (q - self.q1[a1]) + self.a1 * self.lam * d2
        self.q2[s][a2] = q + self.a2 * d2
        self.prev = a1


class _RLWMAgent(_Agent):
    def __init__(self, th):
        self.ap, self.an, self.phi, self.omega, self.eps, self.beta = th
        self.v = core.wm_neglect(self.ap, self.an)

    def start_block(self, pre):
        ns = pre["set_size"]
        self.ns = ns
        self.q = np.full((ns, 3), 1.0 / 3.0)
        self.wm = np.full((ns, 3), 1.0 / 3.0)

    @staticmethod
    def _soft(x):
        e = np.exp(x - x.max())
        return e / e.sum()

    def probs(self, name, v):
        s = v["stimulus"]
        prl = self._soft(self.beta * self.q[s])
        pwm = self._soft(WM_BETA * self.wm[s])
        wt = self.omega ** self.ns
        p = (1.0 - self.eps) * (wt * pwm + (1.0 - wt) * prl) + self.eps / 3.0
        return list(p)

    def learn(self, v):
        s, a, r = v["stimulus"], v["action"], v["reward"]
        dq = r - self.q[s, a]
        self.q[s, a] += (self.ap if dq > 0 else self.an) * dq
        old = self.wm[s, a]
        dw = r - old
        self.wm += self.phi * (1.0 / 3.0 - self.wm)
        self.wm[s, a] = r if dw > 0 else old + self.v * dw


def _sample(probs, rng):
    p = np.clip(np.asarray(probs, dtype=np.float64) / np.sum(probs), P_MIN, P_MAX)
    u = rng.random()
    c = int(np.searchsorted(np.cumsum(p) / p.sum(), u, side="right"))
    return min(c, len(p) - 1)


def run_agent(agent, env, n_trials, seed, participant_id="sim"):
    """Drive ``agent`` through ``env``; the random stream matches MDL simulation."""
    rng = np.random.default_rng(seed)
    n = env.start(n_trials, rng)
    decisions = BINDINGS[env.kind].decisions
    records = []
    prev_block = object()
    for t in range(n):
        pre = env.pre(t)
        values = dict(pre)
        values["trial"] = t
        block = pre.get("block")
        if t == 0 or block != prev_block:
            agent.start_block(pre)
        prev_block = block
        for d in decisions:
            c = _sample(agent.probs(d.name, values), rng)
            values[d.name] = c
            values.update(env.respond(t, d.name, c, rng))
        agent.learn(values)
        records.append(env.record(t, values))
    return ParticipantData(participant_id, records, env.meta())


# ---------------------------------------------------------------------------
# public model objects
# ---------------------------------------------------------------------------

class Baseline:
    """A literature model with a native likelihood and simulator."""

    def __init__(self, kind):
        self.kind = kind
        params, paradigms = _SPECS[kind]
        self.params = ParameterSpec(params)
        self.paradigms = paradigms

    @property
    def name(self):
        return self.kind.value

    model_id = name

    @property
    def param_names(self):
        return self.params.names

    @property
    def bounds(self):
        return self.params.bounds

    @property
    def k(self):
        return len(self.params)

    def __repr__(self):
        return f"Baseline({self.name!r})"

    def __eq__(self, other):
        return isinstance(other, Baseline) and other.kind is self.kind

    def __hash__(self):
        return hash(self.kind)

    def supports(self, kind):
        return ParadigmKind.parse(kind) in self.paradigms

    def require(self, kind):
        kind = ParadigmKind.parse(kind)
        if kind not in self.paradigms:
            ok = ", ".join(k.value for k in self.paradigms)
            raise ParadigmMismatch(f"{self.name} is defined for {ok}, not {kind.value}")
        return kind

    def n_obs(self, participant):
        return len(participant.trials) * len(BINDINGS[kind_of(participant)].decisions)

    def objective(self, participant, kind=None, backend=None):
        self.require(kind if kind is not None else kind_of(participant))
        k = self.kind
        if k in (BaselineKind.TTB, BaselineKind.EQW, BaselineKind.WADD):
            fn = _heuristic_objective(k, participant)
        elif k is BaselineKind.PWADD:
            fn = _pwadd_objective(participant, backend)
        elif k is BaselineKind.HYBRID:
            fn = _hybrid_objective(participant, backend)
        elif k is BaselineKind.RLWM:
            fn = _rlwm_objective(participant, backend)
        else:
            fn = _rw_objective(k, participant, backend)
        return _Checked(self, fn, self.n_obs(participant))

    def evaluate_nll(self, participant, theta, kind=None):
        return self.objective(participant, kind)(theta)

    def agent(self, theta):
        th = [float(x) for x in check_theta(theta, self.params)]
        k = self.kind
        if k in (BaselineKind.TTB, BaselineKind.EQW, BaselineKind.WADD, BaselineKind.PWADD):
            return _HeuristicAgent(k, th)
        if k is BaselineKind.HYBRID:
            return _HybridAgent(th)
        if k is BaselineKind.RLWM:
            return _RLWMAgent(th)
        return _RWAgent(k, th)

    def simulate(self, env, theta, n_trials=None, seed=0, participant_id="sim"):
        self.require(env.kind)
        return run_agent(self.agent(theta), env, n_trials, seed, participant_id)


REGISTRY = {k.value: Baseline(k) for k in BaselineKind}


def get_baseline(name):
    if isinstance(name, Baseline):
        return name
    if isinstance(name, BaselineKind):
        return REGISTRY[name.value]
    key = str(name).strip().lower().replace("-", "_")
    key = _ALIASES.get(key, key)
    if key not in REGISTRY:
        raise UnknownModel(f"unknown baseline {name!r}; choose from {', '.join(REGISTRY)}")
    return REGISTRY[key]


def baseline_nll(kind, participant, theta):
    return get_baseline(kind).evaluate_nll(participant, theta)


def baseline_simulate(kind, env, theta, n_trials=None, seed=0, participant_id="sim"):
    return get_baseline(kind).simulate(env, theta, n_trials, seed, participant_id)
