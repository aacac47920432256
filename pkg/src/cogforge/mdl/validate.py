"""Static checks on a parsed program: names, assignment order, choose placement."""
from __future__ import annotations

import math

from . import ast as A
from .bindings import ALL_BINDING_NAMES, ALL_DECISION_NAMES, BINDINGS
from .errors import (BindingError, DuplicateParameter, NameConflict, UnknownIdentifier,
                     UnusedParameter, ValidationError)

# name -> (min args, max args)
BUILTINS = {
    "exp": (1, 1), "log": (1, 1), "abs": (1, 1),
    "min": (1, 2), "max": (1, 2), "pow": (2, 2), "sum": (1, 1), "argmax": (1, 1),
    "softmax": (1, 2), "clamp": (3, 3), "vector": (2, 2), "matrix": (3, 3),
}
DIM_ARGS = {"vector": 1, "matrix": 2}  # leading arguments that are dimensions
DYNAMIC_DIM = "set_size"


def _loc(node):
    return node.span if node is not None and node.span else (None, None)


def _err(cls, msg, node):
    line, col = _loc(node)
    return cls(msg, line, col)


def _root(target):
    while isinstance(target, A.Index):
        target = target.base
    return target


def uses_dynamic_dims(prog):
    for node in A.walk(prog):
        if isinstance(node, A.Call) and node.func in DIM_ARGS:
            for a in node.args[:DIM_ARGS[node.func]]:
                if isinstance(a, A.Name) and a.id == DYNAMIC_DIM:
                    return True
    return False


class _Checker:
    def __init__(self, prog, bindings):
        self.prog = prog
        self.b = bindings
        self.params = {p.name: p for p in prog.params}
        self.state = {}
        self.used = set()
        self.local_names = set()
        self.revealed = -1  # index of the last decision chosen so far

    # expressions -----------------------------------------------------------
    def expr(self, e, assigned, in_init=False):
        if isinstance(e, A.Num):
            if not math.isfinite(e.value):
                raise _err(ValidationError, "non-finite literal", e)
            return
        if isinstance(e, A.Name):
            self.name(e, assigned, in_init)
            return
        if isinstance(e, A.Index):
            self.expr(e.base, assigned, in_init)
            for i in e.indices:
                self.expr(i, assigned, in_init)
            return
        if isinstance(e, A.Unary):
            self.expr(e.operand, assigned, in_init)
            return
        if isinstance(e, A.Binary):
            self.expr(e.left, assigned, in_init)
            self.expr(e.right, assigned, in_init)
            return
        if isinstance(e, A.VecLit):
            for i in e.items:
                self.expr(i, assigned, in_init)
            return
        if isinstance(e, A.Call):
            if e.func not in BUILTINS:
                raise _err(UnknownIdentifier, f"unknown function {e.func!r}", e)
            lo, hi = BUILTINS[e.func]
            if not lo <= len(e.args) <= hi:
                want = str(lo) if lo == hi else f"{lo} or {hi}"
                raise _err(ValidationError,
                           f"{e.func}() takes {want} argument(s), got {len(e.args)}", e)
            ndim = DIM_ARGS.get(e.func, 0)
            for a in e.args[:ndim]:
                self.dim(a)
            for a in e.args[ndim:]:
                self.expr(a, assigned, in_init)
            return
        raise _err(ValidationError, f"unsupported expression {type(e).__name__}", e)

    def dim(self, a):
        if isinstance(a, A.Num) and a.value.is_integer() and 1 <= a.value <= 10_000:
            return
        if isinstance(a, A.Name) and a.id == DYNAMIC_DIM:
            if DYNAMIC_DIM not in self.b.pre_names:
                raise _err(BindingError, "set_size is not available in this paradigm", a)
            if not self.prog.reset_per_block:
                raise _err(ValidationError,
                           "set_size-dependent shapes require 'state reset_per_block'", a)
            return
        raise _err(ValidationError,
                   "dimensions must be a positive integer literal or set_size", a)

    def name(self, e, assigned, in_init):
        n = e.id
        if n in self.params:
            self.used.add(n)
            return
        if n in self.state:
            return
        if n in BUILTINS:
            raise _err(UnknownIdentifier, f"{n!r} is a function, not a value", e)
        if n in self.b.pre_names:
            return
        when = self.b.available_after(n)
        if when is not None:
            if in_init:
                raise _err(BindingError, f"{n!r} is not known before the trial starts", e)
            if when > self.revealed:
                d = self.b.decisions[when].name
                raise _err(BindingError, f"{n!r} is read before choose({d}, ...)", e)
            return
        if in_init:
            if n in ALL_BINDING_NAMES:
                raise _err(BindingError, f"{n!r} is not provided in the {self.b.kind.value} paradigm", e)
            raise _err(UnknownIdentifier, f"unknown identifier {n!r}", e)
        if n in assigned:
            return
        if n in self.local_names:
            raise _err(UnknownIdentifier, f"{n!r} may be used before it is assigned", e)
        if n in ALL_BINDING_NAMES:
            raise _err(BindingError, f"{n!r} is not provided in the {self.b.kind.value} paradigm", e)
        raise _err(UnknownIdentifier, f"unknown identifier {n!r}", e)

    # statements ------------------------------------------------------------
    def stmts(self, body, assigned, top):
        for s in body:
            assigned = self.stmt(s, assigned, top)
        return assigned

    def stmt(self, s, assigned, top):
        if isinstance(s, A.Assign):
            root = _root(s.target)
            n = root.id
            if n in self.params:
                raise _err(NameConflict, f"cannot assign to parameter {n!r}", s)
            if n in self.b.all_names or n in ALL_BINDING_NAMES:
                raise _err(NameConflict, f"cannot assign to trial field {n!r}", s)
            if n in BUILTINS:
                raise _err(NameConflict, f"cannot assign to function name {n!r}", s)
            self.expr(s.value, assigned)
            idx = s.target
            while isinstance(idx, A.Index):
                for i in idx.indices:
                    self.expr(i, assigned)
                idx = idx.base
            whole = isinstance(s.target, A.Name) and s.op == "="
            if n not in self.state and not whole and n not in assigned:
                if n in self.local_names:
                    raise _err(UnknownIdentifier, f"{n!r} may be used before it is assigned", s)
                raise _err(UnknownIdentifier, f"unknown identifier {n!r}", s)
            if n not in self.state:
                return assigned | {n}
            return assigned
        if isinstance(s, A.If):
            self.expr(s.cond, assigned)
            a1 = self.stmts(s.body, assigned, False)
            a2 = self.stmts(s.orelse, assigned, False)
            return a1 & a2
        if isinstance(s, A.Choose):
            if not top:
                raise _err(ValidationError, "choose must not appear inside an if block", s)
            d = self.b.decision(s.name)
            if d is None:
                raise _err(BindingError,
                           f"{s.name!r} is not a decision in the {self.b.kind.value} paradigm "
                           f"(expected {', '.join(self.b.decision_names)})", s)
            i = self.b.decision_names.index(s.name)
            if i <= self.revealed:
                raise _err(ValidationError, f"choose({s.name}, ...) appears more than once", s)
            if i != self.revealed + 1:
                want = self.b.decisions[self.revealed + 1].name
                raise _err(ValidationError, f"choose({want}, ...) must come before choose({s.name}, ...)", s)
            self.expr(s.probs, assigned)
            self.revealed = i
            return assigned
        raise _err(ValidationError, f"unsupported statement {type(s).__name__}", s)

    def run(self):
        prog = self.prog
        seen = set()
        for p in prog.params:
            if p.name in seen:
                raise _err(DuplicateParameter, f"parameter {p.name!r} declared twice", p)
            seen.add(p.name)
            if p.name in BUILTINS or p.name in ALL_BINDING_NAMES:
                raise _err(NameConflict, f"parameter name {p.name!r} is reserved", p)
            if not (math.isfinite(p.lower) and math.isfinite(p.upper)) or not p.lower < p.upper:
                raise _err(ValidationError,
                           f"parameter {p.name!r} needs finite bounds with lower < upper", p)
        for d in prog.state:
            if d.name in self.params or d.name in self.state:
                raise _err(NameConflict, f"state variable {d.name!r} clashes with an earlier name", d)
            if d.name in BUILTINS or d.name in ALL_BINDING_NAMES:
                raise _err(NameConflict, f"state name {d.name!r} is reserved", d)
            self.expr(d.init, frozenset(), in_init=True)
            self.state[d.name] = d
        for node in A.walk(prog):
            if isinstance(node, A.Assign):
                r = _root(node.target).id
                if r not in self.state:
                    self.local_names.add(r)
        self.stmts(prog.trial, frozenset(), True)
        if self.revealed != len(self.b.decisions) - 1:
            missing = self.b.decisions[self.revealed + 1].name
            raise ValidationError(f"missing choose({missing}, ...)")
        unused = [p.name for p in prog.params if p.name not in self.used]
        if unused:
            p = self.params[unused[0]]
            raise _err(UnusedParameter, f"parameter(s) declared but never used: {', '.join(unused)}", p)


def validate(prog, kind):
    """Raise an MDL error if ``prog`` is not a valid model for paradigm ``kind``."""
    _Checker(prog, BINDINGS[kind]).run()


def compatible_kinds(prog):
    """Paradigms whose decision names match the program's choose statements."""
    chosen = [s.name for s in prog.trial if isinstance(s, A.Choose)]
    return [k for k, b in BINDINGS.items() if set(b.decision_names) == set(chosen)]


def validate_any(prog):
    """Validate without a known paradigm; returns the paradigms the program fits.

    Errors from the first candidate paradigm are raised if none accepts it.
    """
    kinds = compatible_kinds(prog)
    if not kinds:
        chosen = [s for s in prog.trial if isinstance(s, A.Choose)]
        for s in chosen:
            if s.name not in ALL_DECISION_NAMES:
                raise _err(BindingError, f"{s.name!r} is not a decision in any paradigm", s)
        # walk once against the richest paradigm for a sensible message
        kinds = [max(BINDINGS, key=lambda k: len(BINDINGS[k].all_names))]
        if chosen:
            kinds = [k for k, b in BINDINGS.items() if chosen[0].name in b.decision_names]
    ok, first = [], None
    for k in kinds:
        try:
            validate(prog, k)
            ok.append(k)
        except ValidationError as exc:
            # errors that do not depend on the paradigm surface immediately
            if isinstance(exc, (DuplicateParameter, UnusedParameter)):
                raise
            first = first or exc
        except BindingError as exc:
            first = first or exc
    if not ok:
        raise first
    return ok
