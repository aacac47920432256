"""Lower a validated program to register bytecode for the kernel VM.

Registers are laid out as constants, parameters, trial bindings, state, then
locals and temporaries. Every instruction is a row of eight ints; see
``_pycore`` for the encoding.
"""
from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .. import _pycore as K
from . import ast as A
from .bindings import BINDINGS
from .errors import ShapeError, ValidationError
from .validate import DIM_ARGS, DYNAMIC_DIM

_BIN = {"+": K.F_ADD, "-": K.F_SUB, "*": K.F_MUL, "/": K.F_DIV, "^": K.F_POW,
        "<": K.F_LT, "<=": K.F_LE, ">": K.F_GT, ">=": K.F_GE, "==": K.F_EQ, "!=": K.F_NE,
        "and": K.F_AND, "or": K.F_OR}
_AUG = {"+=": "+", "-=": "-", "*=": "*", "/=": "/"}
_UN_CALL = {"exp": K.U_EXP, "log": K.U_LOG, "abs": K.U_ABS}


def _size(shape):
    return math.prod(shape) if shape else 1


def _shape_str(shape):
    if not shape:
        return "scalar"
    if len(shape) == 1:
        return f"vector({shape[0]})"
    return f"matrix({shape[0]}, {shape[1]})"


@dataclass
class ChooseSite:
    decision: str
    probs: int
    n: int
    obs: int
    outcome_slots: dict


@dataclass
class CompiledProgram:
    n_regs: int
    consts: list  # (slot, value)
    param_slots: list
    bind_slots: list
    bind_columns: list
    state: dict  # name -> (slot, shape)
    init_code: np.ndarray
    trial_code: np.ndarray
    init_spans: list
    trial_spans: list
    chooses: list = field(default_factory=list)
    slot_of: dict = field(default_factory=dict)  # binding name -> first slot

    def register_template(self):
        R = np.zeros(self.n_regs, dtype=np.float64)
        for slot, v in self.consts:
            R[slot] = v
        return R


class _Compiler:
    def __init__(self, prog, kind, n_features, dims):
        self.prog = prog
        self.b = BINDINGS[kind]
        self.nf = n_features
        self.dims = dims
        self.n = 0
        self.consts = {}
        self.code = []
        self.spans = []
        self.vars = {}  # name -> (slot, shape)
        self.params = {}
        self.bindings = {}
        self.state = {}
        self.locals = {}
        self.chooses = []

    def alloc(self, size):
        s = self.n
        self.n += size
        return s

    def const(self, v):
        key = struct.pack("<d", float(v))
        if key not in self.consts:
            self.consts[key] = (self.alloc(1), float(v))
        return self.consts[key][0]

    def emit(self, node, *ins):
        row = list(ins) + [0] * (8 - len(ins))
        self.code.append(row)
        self.spans.append(node.span if node is not None and getattr(node, "span", None) else None)
        return len(self.code) - 1

    def err(self, msg, node):
        sp = getattr(node, "span", None) or (None, None)
        return ShapeError(msg, sp[0], sp[1])

    # layout ---------------------------------------------------------------
    def layout(self):
        for p in self.prog.params:
            self.params[p.name] = self.alloc(1)
        cols = self.b.columns(self.nf)
        self.bind_columns = cols
        self.bind_slots = []
        for name, el in cols:
            if el is None:
                slot = self.alloc(1)
                self.bindings[name] = (slot, ())
            else:
                slot = self.alloc(1)
                if el == 0:
                    self.bindings[name] = (slot, (self.nf,))
            self.bind_slots.append(slot)

    # expressions ----------------------------------------------------------
    def lookup(self, e):
        n = e.id
        if n in self.params:
            return self.params[n], ()
        if n in self.state:
            return self.state[n]
        if n in self.locals:
            return self.locals[n]
        if n in self.bindings:
            return self.bindings[n]
        raise ValidationError(f"unknown identifier {n!r}", *(e.span or (None, None)))

    def dim(self, a):
        if isinstance(a, A.Num):
            return int(a.value)
        if a.id not in self.dims:
            raise self.err(f"{DYNAMIC_DIM} is not known when compiling this program", a)
        return int(self.dims[a.id])

    def broadcast(self, node, sa, sb):
        if sa == sb:
            return sa, 1, 1
        if not sa:
            return sb, 0, 1
        if not sb:
            return sa, 1, 0
        raise self.err(f"shape mismatch: {_shape_str(sa)} vs {_shape_str(sb)}", node)

    def bin(self, node, fn, a, sa, b, sb, dst=None):
        shape, ka, kb = self.broadcast(node, sa, sb)
        n = _size(shape)
        if dst is None:
            dst = self.alloc(n)
        self.emit(node, K.OP_BIN, dst, a, b, n, ka, kb, fn)
        return dst, shape

    def fill(self, node, src, shape):
        n = _size(shape)
        dst = self.alloc(n)
        self.emit(node, K.OP_COPY, dst, src, n, 0)
        return dst

    def expr(self, e):
        if isinstance(e, A.Num):
            return self.const(e.value), ()
        if isinstance(e, A.Name):
            return self.lookup(e)
        if isinstance(e, A.Unary):
            a, sa = self.expr(e.operand)
            n = _size(sa)
            dst = self.alloc(n)
            self.emit(e, K.OP_UN, dst, a, n, K.U_NEG if e.op == "-" else K.U_NOT)
            return dst, sa
        if isinstance(e, A.Binary):
            a, sa = self.expr(e.left)
            b, sb = self.expr(e.right)
            return self.bin(e, _BIN[e.op], a, sa, b, sb)
        if isinstance(e, A.VecLit):
            parts = [self.expr(i) for i in e.items]
            shapes = {s for _, s in parts}
            if shapes == {()}:
                dst = self.alloc(len(parts))
                for i, (s, _) in enumerate(parts):
                    self.emit(e, K.OP_COPY, dst + i, s, 1, 1)
                return dst, (len(parts),)
            if len(shapes) == 1 and len(next(iter(shapes))) == 1:
                c = next(iter(shapes))[0]
                dst = self.alloc(len(parts) * c)
                for i, (s, _) in enumerate(parts):
                    self.emit(e, K.OP_COPY, dst + i * c, s, c, 1)
                return dst, (len(parts), c)
            raise self.err("list elements must be all scalars or all vectors of one length", e)
        if isinstance(e, A.Index):
            return self.index(e)
        if isinstance(e, A.Call):
            return self.call(e)
        raise self.err(f"unsupported expression {type(e).__name__}", e)

    def scalar(self, e, what):
        s, sh = self.expr(e)
        if sh:
            raise self.err(f"{what} must be a scalar, got {_shape_str(sh)}", e)
        return s

    def index(self, e):
        base, bs = self.expr(e.base)
        idx = [self.scalar(i, "index") for i in e.indices]
        if len(bs) == 1 and len(idx) == 1:
            dst = self.alloc(1)
            self.emit(e, K.OP_LOAD1, dst, base, idx[0], bs[0], 1)
            return dst, ()
        if len(bs) == 2 and len(idx) == 1:
            dst = self.alloc(bs[1])
            self.emit(e, K.OP_LOAD1, dst, base, idx[0], bs[0], bs[1])
            return dst, (bs[1],)
        if len(bs) == 2 and len(idx) == 2:
            dst = self.alloc(1)
            self.emit(e, K.OP_LOAD2, dst, base, idx[0], idx[1], bs[0], bs[1])
            return dst, ()
        raise self.err(f"cannot index a {_shape_str(bs)} with {len(idx)} index(es)", e)

    def call(self, e):
        f, args = e.func, e.args
        if f in _UN_CALL:
            a, sa = self.expr(args[0])
            n = _size(sa)
            dst = self.alloc(n)
            self.emit(e, K.OP_UN, dst, a, n, _UN_CALL[f])
            return dst, sa
        if f in ("min", "max") and len(args) == 1 or f in ("sum", "argmax"):
            a, sa = self.expr(args[0])
            if f == "argmax" and len(sa) != 1:
                raise self.err(f"argmax needs a vector, got {_shape_str(sa)}", e)
            fn = {"min": K.R_MIN, "max": K.R_MAX, "sum": K.R_SUM, "argmax": K.R_ARGMAX}[f]
            dst = self.alloc(1)
            self.emit(e, K.OP_RED, dst, a, _size(sa), fn)
            return dst, ()
        if f in ("min", "max", "pow"):
            a, sa = self.expr(args[0])
            b, sb = self.expr(args[1])
            fn = {"min": K.F_MIN, "max": K.F_MAX, "pow": K.F_POW}[f]
            return self.bin(e, fn, a, sa, b, sb)
        if f == "clamp":
            a, sa = self.expr(args[0])
            lo, slo = self.expr(args[1])
            hi, shi = self.expr(args[2])
            t, st = self.bin(e, K.F_MAX, a, sa, lo, slo)
            return self.bin(e, K.F_MIN, t, st, hi, shi)
        if f == "softmax":
            a, sa = self.expr(args[0])
            if len(sa) != 1:
                raise self.err(f"softmax needs a vector, got {_shape_str(sa)}", e)
            beta = -1
            if len(args) == 2:
                beta = self.scalar(args[1], "softmax temperature")
            dst = self.alloc(sa[0])
            self.emit(e, K.OP_SOFTMAX, dst, a, sa[0], beta)
            return dst, sa
        if f in DIM_ARGS:
            nd = DIM_ARGS[f]
            shape = tuple(self.dim(a) for a in args[:nd])
            x = self.scalar(args[nd], f"{f}() fill value")
            return self.fill(e, x, shape), shape
        raise self.err(f"unknown function {f!r}", e)

    # statements -----------------------------------------------------------
    def target_parts(self, t):
        """Flatten ``V[i]``, ``Q[i, j]`` and ``Q[i][j]`` into (name node, indices)."""
        idx = []
        while isinstance(t, A.Index):
            idx = list(t.indices) + idx
            t = t.base
        return t, idx

    def store_whole(self, node, slot, shape, v, sv):
        if sv == shape:
            self.emit(node, K.OP_COPY, slot, v, _size(shape), 1)
        elif not sv:
            self.emit(node, K.OP_COPY, slot, v, _size(shape), 0)
        else:
            raise self.err(f"cannot assign {_shape_str(sv)} to {_shape_str(shape)}", node)

    def assign(self, s):
        name, idx = self.target_parts(s.target)
        n = name.id
        v, sv = self.expr(s.value)
        if n in self.state:
            slot, shape = self.state[n]
        elif n in self.locals:
            slot, shape = self.locals[n]
        else:
            # first assignment defines a local's shape
            shape = sv
            slot = self.alloc(_size(shape))
            self.locals[n] = (slot, shape)
        if not idx:
            if s.op == "=":
                self.store_whole(s, slot, shape, v, sv)
            else:
                if sv and sv != shape:
                    raise self.err(f"cannot combine {_shape_str(sv)} into {_shape_str(shape)}", s)
                self.bin(s, _BIN[_AUG[s.op]], slot, shape, v, sv, dst=slot)
            return
        ix = [self.scalar(i, "index") for i in idx]
        if len(shape) == 1 and len(ix) == 1:
            el, load = (), (K.OP_LOAD1, slot, ix[0], shape[0], 1)
        elif len(shape) == 2 and len(ix) == 1:
            el, load = (shape[1],), (K.OP_LOAD1, slot, ix[0], shape[0], shape[1])
        elif len(shape) == 2 and len(ix) == 2:
            el, load = (), (K.OP_LOAD2, slot, ix[0], ix[1], shape[0], shape[1])
        else:
            raise self.err(f"cannot index a {_shape_str(shape)} with {len(ix)} index(es)", s)
        if s.op == "=":
            if sv == el:
                src = v
            elif not sv:
                src = self.fill(s, v, el)
            else:
                raise self.err(f"cannot assign {_shape_str(sv)} to an element of shape {_shape_str(el)}", s)
        else:
            if sv and sv != el:
                raise self.err(f"cannot combine {_shape_str(sv)} into {_shape_str(el)}", s)
            cur = self.alloc(_size(el))
            self.emit(s, load[0], cur, *load[1:])
            src, _ = self.bin(s, _BIN[_AUG[s.op]], cur, el, v, sv)
        if load[0] == K.OP_LOAD1:
            self.emit(s, K.OP_STORE1, slot, ix[0], load[3], load[4], src)
        else:
            self.emit(s, K.OP_STORE2, slot, ix[0], ix[1], shape[0], shape[1], src)

    def stmt(self, s):
        if isinstance(s, A.Assign):
            self.assign(s)
        elif isinstance(s, A.If):
            c = self.scalar(s.cond, "if condition")
            jz = self.emit(s, K.OP_JZ, c, -1)
            for b in s.body:
                self.stmt(b)
            if s.orelse:
                jmp = self.emit(s, K.OP_JMP, -1)
                self.code[jz][2] = len(self.code)
                for b in s.orelse:
                    self.stmt(b)
                self.code[jmp][1] = len(self.code)
            else:
                self.code[jz][2] = len(self.code)
        elif isinstance(s, A.Choose):
            d = self.b.decision(s.name)
            p, sp = self.expr(s.probs)
            if sp != (d.n_options,):
                raise self.err(f"choose({s.name}, ...) needs a vector of {d.n_options} "
                               f"probabilities, got {_shape_str(sp)}", s)
            obs = self.bindings[s.name][0]
            self.emit(s, K.OP_CHOOSE, p, d.n_options, obs)
            self.chooses.append(ChooseSite(s.name, p, d.n_options, obs,
                                           {o: self.bindings[o][0] for o in d.outcomes}))
        else:
            raise self.err(f"unsupported statement {type(s).__name__}", s)

    def finish(self):
        code = np.asarray(self.code, dtype=np.int64).reshape(-1, 8)
        spans = self.spans
        self.code, self.spans = [], []
        return code, spans

    def run(self):
        self.layout()
        for d in self.prog.state:
            v, sv = self.expr(d.init)
            slot = self.alloc(_size(sv))
            self.emit(d, K.OP_COPY, slot, v, _size(sv), 1)
            self.state[d.name] = (slot, sv)
        init_code, init_spans = self.finish()
        for s in self.prog.trial:
            self.stmt(s)
        trial_code, trial_spans = self.finish()
        slot_of = {name: slot for name, (slot, _) in self.bindings.items()}
        return CompiledProgram(
            n_regs=max(self.n, 1),
            consts=[c for c in self.consts.values()],
            param_slots=[self.params[p.name] for p in self.prog.params],
            bind_slots=self.bind_slots, bind_columns=self.bind_columns,
            state=dict(self.state), init_code=init_code, trial_code=trial_code,
            init_spans=init_spans, trial_spans=trial_spans, chooses=self.chooses,
            slot_of=slot_of)


def compile_program(prog, kind, n_features=0, dims=None):
    """Compile ``prog`` for one paradigm, feature count and dynamic dimensions."""
    return _Compiler(prog, kind, n_features, dict(dims or {})).run()
