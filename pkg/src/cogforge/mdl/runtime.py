"""Model programs: validated trees plus scoring and simulation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import core
from ..dataset import ParadigmKind, ParticipantData
from ..errors import ArityError, BoundsError, ParadigmMismatch
from . import ast as A
from .bindings import BINDINGS, binding_matrix, kind_of
from .compiler import compile_program
from .errors import (BindingError, MDLIndexError, NumericsError, StepBudgetExceeded,
                     ValidationError)
from .parser import parse_syntax
from .printer import to_source
from .validate import DYNAMIC_DIM, uses_dynamic_dims, validate, validate_any

STEP_BUDGET = 10_000
P_MIN = 1e-10
P_MAX = 1.0 - 1e-10


@dataclass(frozen=True)
class ParamBound:
    name: str
    lower: float
    upper: float


class ParameterSpec(tuple):
    """Ordered, name-unique parameter bounds."""

    def __new__(cls, items):
        return super().__new__(cls, (ParamBound(n, float(lo), float(hi)) for n, lo, hi in items))

    def __getnewargs__(self):
        return (tuple((p.name, p.lower, p.upper) for p in self),)

    @property
    def names(self):
        return [p.name for p in self]

    @property
    def bounds(self):
        return [(p.lower, p.upper) for p in self]


def check_theta(theta, spec, tol=0.0):
    theta = np.asarray(theta, dtype=np.float64).ravel()
    if theta.shape[0] != len(spec):
        raise ArityError(f"expected {len(spec)} parameters ({', '.join(spec.names)}), got {theta.shape[0]}")
    for x, p in zip(theta, spec):
        if not math.isfinite(x) or x < p.lower - tol or x > p.upper + tol:
            raise BoundsError(f"{p.name}={x} outside [{p.lower}, {p.upper}]")
    return theta


def _status_error(status, prog_c, t, pc):
    if pc < 0:
        spans, pc = prog_c.init_spans, -1 - pc
    else:
        spans = prog_c.trial_spans
    sp = spans[pc] if 0 <= pc < len(spans) and spans[pc] else (None, None)
    where = f" on trial {t}"
    if status == core.ST_NUMERICS:
        return NumericsError("non-finite value or division by ~0" + where, *sp)
    if status == core.ST_INDEX:
        return MDLIndexError("index outside the declared shape" + where, *sp)
    if status == core.ST_BUDGET:
        return StepBudgetExceeded(f"more than {STEP_BUDGET} operations" + where, *sp)
    if status == core.ST_PROB:
        return NumericsError("choice probabilities must be finite, non-negative and not all zero" + where, *sp)
    if status == core.ST_OBS:
        return BindingError("observed choice is outside the probability vector" + where, *sp)
    return NumericsError(f"VM status {status}" + where, *sp)


class ModelProgram:
    """A parsed and validated model in the description language."""

    def __init__(self, program, name=None, kinds=None):
        self.ast = program
        self.name = name or "mdl"
        self.params = ParameterSpec((p.name, p.lower, p.upper) for p in program.params)
        self.kinds = tuple(kinds) if kinds is not None else tuple(validate_any(program))
        self.dynamic = uses_dynamic_dims(program)
        self._validated = set(self.kinds)
        self._compiled = {}

    # -- identity ----------------------------------------------------------
    @property
    def source(self):
        return self.ast.source or to_source(self.ast)

    @property
    def canonical_source(self):
        return to_source(self.ast)

    @property
    def model_id(self):
        return self.name

    @property
    def param_names(self):
        return self.params.names

    @property
    def bounds(self):
        return self.params.bounds

    @property
    def k(self):
        return len(self.params)

    @property
    def state_decls(self):
        return self.ast.state

    @property
    def trial_block(self):
        return self.ast.trial

    def __eq__(self, other):
        return isinstance(other, ModelProgram) and self.ast == other.ast

    def __hash__(self):
        return hash(to_source(self.ast))

    def __repr__(self):
        return f"ModelProgram({self.name!r}, params={self.param_names})"

    def __getstate__(self):
        d = dict(self.__dict__)
        d["_compiled"] = {}
        return d

    # -- compilation ---------------------------------------------------------
    def supports(self, kind):
        kind = ParadigmKind.parse(kind)
        if kind in self._validated:
            return True
        try:
            validate(self.ast, kind)
        except (ValidationError, BindingError):
            return False
        self._validated.add(kind)
        return True

    def require(self, kind):
        kind = ParadigmKind.parse(kind)
        if kind not in self._validated:
            try:
                validate(self.ast, kind)
            except BindingError as exc:
                raise ParadigmMismatch(f"model {self.name!r} does not fit {kind.value} data: {exc}") from exc
            self._validated.add(kind)
        return kind

    def compiled(self, kind, n_features=0, set_size=None):
        dims = {DYNAMIC_DIM: set_size} if (self.dynamic and set_size is not None) else {}
        key = (kind, n_features, tuple(sorted(dims.items())))
        c = self._compiled.get(key)
        if c is None:
            c = compile_program(self.ast, kind, n_features, dims)
            self._compiled[key] = c
        return c

    def check(self, kind, n_features=4):
        """Compile for ``kind`` to surface shape errors before any data is seen."""
        kind = self.require(kind)
        sizes = (3, 6) if (self.dynamic and kind is ParadigmKind.WORKING_MEMORY) else (None,)
        for s in sizes:
            self.compiled(kind, n_features if kind is ParadigmKind.DECISION else 0, s)

    # -- scoring -------------------------------------------------------------
    def n_obs(self, participant):
        return len(participant.trials) * len(BINDINGS[kind_of(participant)].decisions)

    def objective(self, participant, kind=None, backend=None):
        return _Objective(self, participant, kind, backend)

    def evaluate_nll(self, participant, theta, kind=None):
        return self.objective(participant, kind)(theta)

    def choice_probabilities(self, participant, theta, kind=None):
        """Probability vectors at every choose, replayed on observed data."""
        return _replay(self, participant, theta, kind)

    # -- simulation ----------------------------------------------------------
    def simulate(self, env, theta, n_trials=None, seed=0, participant_id="sim"):
        return _simulate(self, env, theta, n_trials, seed, participant_id)


def _groups(participant, dynamic, reset):
    """Contiguous trial ranges sharing one compiled variant."""
    n = len(participant.trials)
    if not dynamic:
        return [(0, n, None)]
    out = []
    start = 0
    sizes = [getattr(t, "set_size", None) for t in participant.trials]
    for i in range(1, n + 1):
        if i == n or sizes[i] != sizes[start]:
            if i < n and not reset[i]:
                raise BindingError(f"set_size changes inside a block at trial {i}")
            out.append((start, i, sizes[start]))
            start = i
    return out


def _reset_flags(prog, participant):
    if prog.ast.reset_per_block:
        return participant.block_starts()
    r = np.zeros(len(participant.trials), dtype=bool)
    r[0] = True
    return r


class _Objective:
    """theta -> NLL for one program and one participant."""

    def __init__(self, prog, participant, kind=None, backend=None):
        kind = ParadigmKind.parse(kind) if kind is not None else kind_of(participant)
        self.kind = prog.require(kind)
        self.prog = prog
        self.nf = len(participant.trials[0].features_a) if kind is ParadigmKind.DECISION else 0
        self.kernels = core.get_kernels(backend)
        reset = _reset_flags(prog, participant)
        bind = binding_matrix(kind, participant, self.nf)
        self.parts = []
        for start, stop, ss in _groups(participant, prog.dynamic, reset):
            c = prog.compiled(kind, self.nf, ss)
            vm = core.VM(c.init_code, c.trial_code, self.kernels)
            if vm.compiled:
                bnd, rst = np.ascontiguousarray(bind), np.ascontiguousarray(reset, dtype=np.uint8)
            else:
                bnd, rst = bind.tolist(), [bool(x) for x in reset]
            self.parts.append((c, vm, c.register_template(), bnd, c.bind_slots, rst, start, stop))
        self.n_obs = len(participant.trials) * len(BINDINGS[kind].decisions)

    def __call__(self, theta):
        theta = check_theta(theta, self.prog.params)
        total = 0.0
        for c, vm, tmpl, bind, slots, reset, start, stop in self.parts:
            R = tmpl.copy()
            R[c.param_slots] = theta
            if not vm.compiled:
                R = R.tolist()
            st, nll, t, pc = vm.score(R, bind, slots, reset, start, stop, STEP_BUDGET)
            if st != core.ST_OK:
                raise _status_error(st, c, t, pc)
            total += nll
        if not math.isfinite(total):
            raise NumericsError("negative log-likelihood is not finite")
        return total


def _clamped(p):
    p = np.asarray(p, dtype=np.float64)
    if not np.all(np.isfinite(p)) or np.any(p < 0) or not p.sum() > 0:
        raise NumericsError("choice probabilities must be finite, non-negative and not all zero")
    p = p / p.sum()
    return np.clip(p, P_MIN, P_MAX)


class _Stepper:
    """Drives one compiled variant trial by trial, pausing at every choose."""

    def __init__(self, c, theta, kernels=None):
        self.c = c
        self.vm = core.VM(c.init_code, c.trial_code, kernels)
        R = c.register_template()
        R[c.param_slots] = theta
        self.R = R if self.vm.compiled else R.tolist()
        self.choose_at = {}
        code = np.asarray(c.trial_code)
        for pc in range(code.shape[0]):
            if code[pc, 0] == core._pycore.OP_CHOOSE:
                self.choose_at[pc] = int(code[pc, 1]), int(code[pc, 2]), int(code[pc, 3])

    def set(self, name, value):
        slot = self.c.slot_of[name]
        if isinstance(value, (tuple, list, np.ndarray)):
            for j, v in enumerate(value):
                self.R[slot + j] = float(v)
        else:
            self.R[slot] = float(value)

    def run_trial(self, t, reset, decide):
        """Execute one trial; ``decide(name, probs) -> (value, outcomes)``."""
        state = [0.0, 0]
        if reset:
            st, pc = self.vm.exec("init", self.R, 0, False, STEP_BUDGET, state)
            if st != core.ST_OK:
                raise _status_error(st, self.c, t, -1 - pc)
        pc = 0
        names = [s.decision for s in self.c.chooses]
        k = 0
        while True:
            st, pc = self.vm.exec("trial", self.R, pc, True, STEP_BUDGET, state)
            if st == core.ST_OK:
                return
            if st != core.ST_PAUSE:
                raise _status_error(st, self.c, t, pc)
            ps, n, obs = self.choose_at[pc]
            probs = _clamped([self.R[ps + i] for i in range(n)])
            value, outcomes = decide(names[k], probs)
            self.R[obs] = float(value)
            for name, v in outcomes.items():
                self.set(name, v)
            state[1] += n
            if state[1] > STEP_BUDGET:
                raise _status_error(core.ST_BUDGET, self.c, t, pc)
            k += 1
            pc += 1


def _replay(prog, participant, theta, kind=None):
    kind = prog.require(kind if kind is not None else kind_of(participant))
    theta = check_theta(theta, prog.params)
    nf = len(participant.trials[0].features_a) if kind is ParadigmKind.DECISION else 0
    reset = _reset_flags(prog, participant)
    out = []
    from .bindings import trial_values
    for start, stop, ss in _groups(participant, prog.dynamic, reset):
        step = _Stepper(prog.compiled(kind, nf, ss), theta)
        for t in range(start, stop):
            vals = trial_values(participant.trials[t], t)
            for name in BINDINGS[kind].pre_names:
                step.set(name, vals[name])

            def decide(name, probs, vals=vals):
                out.append((t, name, probs))
                d = BINDINGS[kind].decision(name)
                return vals[name], {o: vals[o] for o in d.outcomes}
            step.run_trial(t, reset[t], decide)
    return out


def _simulate(prog, env, theta, n_trials, seed, participant_id):
    kind = prog.require(env.kind)
    theta = check_theta(theta, prog.params)
    rng = np.random.default_rng(seed)
    n = env.start(n_trials, rng)
    nf = getattr(env, "n_features", 0) if kind is ParadigmKind.DECISION else 0
    records = []
    prev_block = None
    cur, cur_ss = None, None
    for t in range(n):
        pre = env.pre(t)
        block = pre.get("block")
        reset = t == 0 or (prog.ast.reset_per_block and block != prev_block)
        prev_block = block
        ss = pre.get("set_size") if prog.dynamic else None
        if cur is None or (prog.dynamic and reset):
            cur, cur_ss = _Stepper(prog.compiled(kind, nf, ss), theta), ss
        elif ss != cur_ss:
            raise BindingError(f"set_size changes inside a block at trial {t}")
        for name in BINDINGS[kind].pre_names:
            cur.set(name, pre[name] if name != "trial" else t)
        values = dict(pre)

        def decide(name, probs, values=values, t=t):
            u = rng.random()
            c = int(np.searchsorted(np.cumsum(probs) / probs.sum(), u, side="right"))
            c = min(c, len(probs) - 1)
            values[name] = c
            outcomes = env.respond(t, name, c, rng)
            values.update(outcomes)
            return c, outcomes
        cur.run_trial(t, reset, decide)
        records.append(env.record(t, values))
    return ParticipantData(participant_id, records, env.meta())


def parse(source, kind=None, name=None):
    """Parse and validate a model program.

    With ``kind`` the program is checked against that paradigm's trial fields;
    otherwise it must fit at least one paradigm.
    """
    prog = parse_syntax(source)
    if kind is not None:
        kind = ParadigmKind.parse(kind)
        validate(prog, kind)
        return ModelProgram(prog, name, kinds=[kind])
    return ModelProgram(prog, name)


def evaluate_nll(model, participant, theta, kind=None):
    return model.evaluate_nll(participant, theta, kind)


def simulate(model, env, theta, n_trials=None, seed=0, participant_id="sim"):
    return model.simulate(env, theta, n_trials, seed, participant_id)


def program_from_ast(program, name=None):
    return ModelProgram(program, name)


__all__ = ["ModelProgram", "ParameterSpec", "parse", "evaluate_nll", "simulate",
           "check_theta", "STEP_BUDGET", "A"]
