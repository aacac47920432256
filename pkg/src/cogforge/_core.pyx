# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels: baseline likelihoods and the model-program VM.

Operation order matches ``_pycore`` exactly; do not build with fast-math.
"""
from libc.math cimport exp, log, pow, floor, isfinite, NAN
from libc.stdlib cimport malloc, free

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"

cdef double P_MIN = 1e-10
cdef double P_MAX = 1.0 - 1e-10
cdef double DIV_EPS = 1e-12
cdef double WM_BETA = 50.0

cdef enum:
    ST_OK = 0
    ST_PAUSE = 1
    ST_NUMERICS = 2
    ST_INDEX = 3
    ST_BUDGET = 4
    ST_PROB = 5
    ST_OBS = 6

cdef enum:
    OP_BIN = 0
    OP_UN = 1
    OP_RED = 2
    OP_SOFTMAX = 3
    OP_COPY = 4
    OP_LOAD1 = 5
    OP_LOAD2 = 6
    OP_STORE1 = 7
    OP_STORE2 = 8
    OP_JZ = 9
    OP_JMP = 10
    OP_CHOOSE = 11

cdef enum:
    F_ADD = 0
    F_SUB = 1
    F_MUL = 2
    F_DIV = 3
    F_POW = 4
    F_LT = 5
    F_LE = 6
    F_GT = 7
    F_GE = 8
    F_EQ = 9
    F_NE = 10
    F_AND = 11
    F_OR = 12
    F_MIN = 13
    F_MAX = 14

cdef enum:
    U_NEG = 0
    U_NOT = 1
    U_EXP = 2
    U_LOG = 3
    U_ABS = 4

cdef enum:
    R_SUM = 0
    R_MAX = 1
    R_MIN = 2
    R_ARGMAX = 3

OPCODES = dict(
    OP_BIN=OP_BIN, OP_UN=OP_UN, OP_RED=OP_RED, OP_SOFTMAX=OP_SOFTMAX,
    OP_COPY=OP_COPY, OP_LOAD1=OP_LOAD1, OP_LOAD2=OP_LOAD2,
    OP_STORE1=OP_STORE1, OP_STORE2=OP_STORE2, OP_JZ=OP_JZ, OP_JMP=OP_JMP,
    OP_CHOOSE=OP_CHOOSE,
)


cdef inline double _clamp(double p) nogil:
    if p < P_MIN:
        return P_MIN
    if p > P_MAX:
        return P_MAX
    return p


# ---------------------------------------------------------------------------
# baseline likelihoods
# ---------------------------------------------------------------------------

def rw_nll(const long[::1] actions, const double[::1] rewards,
           const double[::1] forgone, const unsigned char[::1] block_start,
           double a_cp, double a_cn, double a_up, double a_un,
           double beta, double kappa, bint use_unchosen):
    cdef Py_ssize_t t, n = actions.shape[0]
    cdef double v0 = 0.5, v1 = 0.5, x0, x1, p, d, r
    cdef double nll = 0.0
    cdef long a, prev = -1
    with nogil:
        for t in range(n):
            if block_start[t]:
                v0 = 0.5
                v1 = 0.5
                prev = -1
            a = actions[t]
            x0 = beta * v0
            x1 = beta * v1
            if prev == 0:
                x0 = x0 + kappa
            elif prev == 1:
                x1 = x1 + kappa
            if a == 1:
                p = 1.0 / (1.0 + exp(x0 - x1))
            else:
                p = 1.0 / (1.0 + exp(x1 - x0))
            nll -= log(_clamp(p))
            r = rewards[t]
            if a == 1:
                d = r - v1
                v1 = v1 + (a_cp if d >= 0 else a_cn) * d
                if use_unchosen:
                    d = forgone[t] - v0
                    v0 = v0 + (a_up if d >= 0 else a_un) * d
            else:
                d = r - v0
                v0 = v0 + (a_cp if d >= 0 else a_cn) * d
                if use_unchosen:
                    d = forgone[t] - v1
                    v1 = v1 + (a_up if d >= 0 else a_un) * d
            prev = a
    return nll


def pwadd_nll(const double[:, ::1] features_a, const double[:, ::1] features_b,
              const long[::1] choices, const double[::1] weights, double beta):
    cdef Py_ssize_t t, j, n = choices.shape[0], nf = weights.shape[0]
    cdef double s, p, nll = 0.0
    with nogil:
        for t in range(n):
            s = 0.0
            for j in range(nf):
                s += weights[j] * (features_a[t, j] - features_b[t, j])
            if choices[t] == 0:
                p = 1.0 / (1.0 + exp(-beta * s))
            else:
                p = 1.0 / (1.0 + exp(beta * s))
            nll -= log(_clamp(p))
    return nll


def hybrid_nll(const long[::1] action_1, const long[::1] state_2,
               const long[::1] action_2, const double[::1] reward,
               double alpha1, double alpha2, double lam, double w,
               double beta1, double beta2, double pers):
    cdef Py_ssize_t t, n = action_1.shape[0]
    cdef double q10 = 0.0, q11 = 0.0
    cdef double q2[2][2]
    cdef double m0, m1, mb0, mb1, x0, x1, y0, y1, p, q2sa, d1, d2, r
    cdef double nll = 0.0
    cdef long a1, s, a2, prev = -1
    q2[0][0] = 0.0
    q2[0][1] = 0.0
    q2[1][0] = 0.0
    q2[1][1] = 0.0
    with nogil:
        for t in range(n):
            a1 = action_1[t]
            s = state_2[t]
            a2 = action_2[t]
            r = reward[t]
            m0 = q2[0][0] if q2[0][0] >= q2[0][1] else q2[0][1]
            m1 = q2[1][0] if q2[1][0] >= q2[1][1] else q2[1][1]
            mb0 = 0.7 * m0 + 0.3 * m1
            mb1 = 0.3 * m0 + 0.7 * m1
            x0 = beta1 * (w * mb0 + (1.0 - w) * q10 + pers * (1.0 if prev == 0 else 0.0))
            x1 = beta1 * (w * mb1 + (1.0 - w) * q11 + pers * (1.0 if prev == 1 else 0.0))
            if a1 == 1:
                p = 1.0 / (1.0 + exp(x0 - x1))
            else:
                p = 1.0 / (1.0 + exp(x1 - x0))
            nll -= log(_clamp(p))
            y0 = beta2 * q2[s][0]
            y1 = beta2 * q2[s][1]
            if a2 == 1:
                p = 1.0 / (1.0 + exp(y0 - y1))
            else:
                p = 1.0 / (1.0 + exp(y1 - y0))
            nll -= log(_clamp(p))
            q2sa = q2[s][a2]
            d2 = r - q2sa
            if a1 == 1:
                d1 = q2sa - q11
                q11 = q11 + alpha1 * d1 + alpha1 * lam * d2
            else:
                d1 = q2sa - q10
                q10 = q10 + alpha1 * d1 + alpha1 * lam * d2
            q2[s][a2] = q2sa + alpha2 * d2
            prev = a1
    return nll


cdef inline double _wm_neglect(double a_pos, double a_neg) nogil:
    cdef double v
    if a_pos > DIV_EPS:
        v = a_neg / a_pos
    elif a_neg > 0.0:
        v = 1.0
    else:
        v = 0.0
    if v > 1.0:
        v = 1.0
    return v


def rlwm_nll(const unsigned char[::1] block_start, const long[::1] set_size,
             const long[::1] stimulus, const long[::1] action,
             const double[::1] reward, double a_pos, double a_neg, double phi,
             double omega, double eps, double beta_rl):
    cdef Py_ssize_t t, i, j, n = action.shape[0]
    cdef long ns = 0, s, a, max_ns = 1
    cdef double third = 1.0 / 3.0
    cdef double v = _wm_neglect(a_pos, a_neg)
    cdef double x0, x1, x2, m, e0, e1, e2, prl, pwm, wt, pmix, p, dq, dw, r
    cdef double nll = 0.0
    cdef double *q
    cdef double *wm
    for t in range(n):
        if set_size[t] > max_ns:
            max_ns = set_size[t]
    q = <double *> malloc(max_ns * 3 * sizeof(double))
    wm = <double *> malloc(max_ns * 3 * sizeof(double))
    if q == NULL or wm == NULL:
        free(q)
        free(wm)
        raise MemoryError()
    try:
        with nogil:
            for t in range(n):
                if block_start[t]:
                    ns = set_size[t]
                    for i in range(ns * 3):
                        q[i] = third
                        wm[i] = third
                s = stimulus[t]
                a = action[t]
                r = reward[t]
                x0 = beta_rl * q[s * 3]
                x1 = beta_rl * q[s * 3 + 1]
                x2 = beta_rl * q[s * 3 + 2]
                m = x0
                if x1 > m:
                    m = x1
                if x2 > m:
                    m = x2
                e0 = exp(x0 - m)
                e1 = exp(x1 - m)
                e2 = exp(x2 - m)
                prl = (e0 if a == 0 else (e1 if a == 1 else e2)) / (e0 + e1 + e2)
                x0 = WM_BETA * wm[s * 3]
                x1 = WM_BETA * wm[s * 3 + 1]
                x2 = WM_BETA * wm[s * 3 + 2]
                m = x0
                if x1 > m:
                    m = x1
                if x2 > m:
                    m = x2
                e0 = exp(x0 - m)
                e1 = exp(x1 - m)
                e2 = exp(x2 - m)
                pwm = (e0 if a == 0 else (e1 if a == 1 else e2)) / (e0 + e1 + e2)
                wt = pow(omega, <double> ns)
                pmix = wt * pwm + (1.0 - wt) * prl
                p = (1.0 - eps) * pmix + eps * third
                nll -= log(_clamp(p))
                dq = r - q[s * 3 + a]
                if dq > 0:
                    q[s * 3 + a] = q[s * 3 + a] + a_pos * dq
                else:
                    q[s * 3 + a] = q[s * 3 + a] + a_neg * dq
                dw = r - wm[s * 3 + a]
                for i in range(ns):
                    for j in range(3):
                        if i != s or j != a:
                            wm[i * 3 + j] = wm[i * 3 + j] + phi * (third - wm[i * 3 + j])
                if dw > 0:
                    wm[s * 3 + a] = r
                else:
                    wm[s * 3 + a] = wm[s * 3 + a] + v * dw
    finally:
        free(q)
        free(wm)
    return nll


# ---------------------------------------------------------------------------
# bytecode VM
# ---------------------------------------------------------------------------

cdef inline double _bin(long fn, double x, double y) nogil:
    if fn == F_ADD:
        return x + y
    elif fn == F_SUB:
        return x - y
    elif fn == F_MUL:
        return x * y
    elif fn == F_DIV:
        if -DIV_EPS < y < DIV_EPS:
            return NAN
        return x / y
    elif fn == F_POW:
        if x < 0.0 and y != floor(y):
            return NAN
        if x == 0.0 and y < 0.0:
            return NAN
        return pow(x, y)
    elif fn == F_LT:
        return 1.0 if x < y else 0.0
    elif fn == F_LE:
        return 1.0 if x <= y else 0.0
    elif fn == F_GT:
        return 1.0 if x > y else 0.0
    elif fn == F_GE:
        return 1.0 if x >= y else 0.0
    elif fn == F_EQ:
        return 1.0 if x == y else 0.0
    elif fn == F_NE:
        return 1.0 if x != y else 0.0
    elif fn == F_AND:
        return 1.0 if (x != 0.0 and y != 0.0) else 0.0
    elif fn == F_OR:
        return 1.0 if (x != 0.0 or y != 0.0) else 0.0
    elif fn == F_MIN:
        return x if x <= y else y
    return x if x >= y else y


cdef inline double _un(long fn, double x) nogil:
    if fn == U_NEG:
        return -x
    elif fn == U_NOT:
        return 1.0 if x == 0.0 else 0.0
    elif fn == U_EXP:
        return exp(x)
    elif fn == U_LOG:
        if x <= 0.0:
            return NAN
        return log(x)
    return -x if x < 0.0 else x


cdef inline long _index(double v, long dim) nogil:
    cdef long i
    if not (v >= 0.0 and v < dim):
        return -1
    i = <long> v
    if <double> i != v:
        return -1
    return i


cdef int _exec(const long[:, ::1] code, double *R, long *pc_io, bint pause,
               long budget, double *nll, long *steps_io) nogil:
    cdef long pc = pc_io[0]
    cdef long steps = steps_io[0]
    cdef long n_code = code.shape[0]
    cdef long op, dst, a, b, n, sa, sb, fn, i, j, k, off, base, rows, cols, src
    cdef double v, s, m, e, best, bval, p
    cdef int status = ST_OK
    while pc < n_code:
        op = code[pc, 0]
        if op == OP_BIN:
            dst = code[pc, 1]; a = code[pc, 2]; b = code[pc, 3]; n = code[pc, 4]
            sa = code[pc, 5]; sb = code[pc, 6]; fn = code[pc, 7]
            steps += n
            for i in range(n):
                v = _bin(fn, R[a + i * sa], R[b + i * sb])
                if not isfinite(v):
                    status = ST_NUMERICS
                    break
                R[dst + i] = v
            if status != ST_OK:
                break
        elif op == OP_UN:
            dst = code[pc, 1]; a = code[pc, 2]; n = code[pc, 3]; fn = code[pc, 4]
            steps += n
            for i in range(n):
                v = _un(fn, R[a + i])
                if not isfinite(v):
                    status = ST_NUMERICS
                    break
                R[dst + i] = v
            if status != ST_OK:
                break
        elif op == OP_RED:
            dst = code[pc, 1]; a = code[pc, 2]; n = code[pc, 3]; fn = code[pc, 4]
            steps += n
            if fn == R_SUM:
                s = 0.0
                for i in range(n):
                    s += R[a + i]
                if not isfinite(s):
                    status = ST_NUMERICS
                    break
                R[dst] = s
            elif fn == R_ARGMAX:
                best = R[a]
                k = 0
                for i in range(1, n):
                    if R[a + i] > best:
                        best = R[a + i]
                        k = i
                R[dst] = <double> k
            elif fn == R_MAX:
                best = R[a]
                for i in range(1, n):
                    if R[a + i] > best:
                        best = R[a + i]
                R[dst] = best
            else:
                best = R[a]
                for i in range(1, n):
                    if R[a + i] < best:
                        best = R[a + i]
                R[dst] = best
        elif op == OP_SOFTMAX:
            dst = code[pc, 1]; a = code[pc, 2]; n = code[pc, 3]; b = code[pc, 4]
            steps += 3 * n
            if b >= 0:
                bval = R[b]
                for i in range(n):
                    R[dst + i] = bval * R[a + i]
            else:
                for i in range(n):
                    R[dst + i] = R[a + i]
            m = R[dst]
            for i in range(1, n):
                if R[dst + i] > m:
                    m = R[dst + i]
            if not isfinite(m):
                status = ST_NUMERICS
                break
            s = 0.0
            for i in range(n):
                e = exp(R[dst + i] - m)
                R[dst + i] = e
                s += e
            for i in range(n):
                R[dst + i] = R[dst + i] / s
        elif op == OP_COPY:
            dst = code[pc, 1]; src = code[pc, 2]; n = code[pc, 3]; sa = code[pc, 4]
            steps += n
            for i in range(n):
                R[dst + i] = R[src + i * sa]
        elif op == OP_LOAD1:
            dst = code[pc, 1]; base = code[pc, 2]; a = code[pc, 3]
            n = code[pc, 4]; sa = code[pc, 5]
            steps += sa
            i = _index(R[a], n)
            if i < 0:
                status = ST_INDEX
                break
            off = base + i * sa
            for k in range(sa):
                R[dst + k] = R[off + k]
        elif op == OP_LOAD2:
            dst = code[pc, 1]; base = code[pc, 2]; a = code[pc, 3]; b = code[pc, 4]
            rows = code[pc, 5]; cols = code[pc, 6]
            steps += 1
            i = _index(R[a], rows)
            j = _index(R[b], cols)
            if i < 0 or j < 0:
                status = ST_INDEX
                break
            R[dst] = R[base + i * cols + j]
        elif op == OP_STORE1:
            base = code[pc, 1]; a = code[pc, 2]; n = code[pc, 3]
            sa = code[pc, 4]; src = code[pc, 5]
            steps += sa
            i = _index(R[a], n)
            if i < 0:
                status = ST_INDEX
                break
            off = base + i * sa
            for k in range(sa):
                R[off + k] = R[src + k]
        elif op == OP_STORE2:
            base = code[pc, 1]; a = code[pc, 2]; b = code[pc, 3]
            rows = code[pc, 4]; cols = code[pc, 5]; src = code[pc, 6]
            steps += 1
            i = _index(R[a], rows)
            j = _index(R[b], cols)
            if i < 0 or j < 0:
                status = ST_INDEX
                break
            R[base + i * cols + j] = R[src]
        elif op == OP_JZ:
            steps += 1
            if R[code[pc, 1]] == 0.0:
                pc = code[pc, 2]
                if steps > budget:
                    status = ST_BUDGET
                    break
                continue
        elif op == OP_JMP:
            steps += 1
            pc = code[pc, 1]
            if steps > budget:
                status = ST_BUDGET
                break
            continue
        else:
            if pause:
                status = ST_PAUSE
                break
            a = code[pc, 1]; n = code[pc, 2]; b = code[pc, 3]
            steps += n
            s = 0.0
            for i in range(n):
                p = R[a + i]
                if not (p >= 0.0) or not isfinite(p):
                    status = ST_PROB
                    break
                s += p
            if status != ST_OK:
                break
            if not (s > 0.0) or not isfinite(s):
                status = ST_PROB
                break
            k = _index(R[b], n)
            if k < 0:
                status = ST_OBS
                break
            nll[0] -= log(_clamp(R[a + k] / s))
        if steps > budget:
            status = ST_BUDGET
            break
        pc += 1
    pc_io[0] = pc
    steps_io[0] = steps
    return status


def vm_exec(const long[:, ::1] code, double[::1] R, long pc, bint pause,
            long budget, list state):
    """Same contract as ``_pycore.vm_exec``."""
    cdef double nll = state[0]
    cdef long steps = state[1]
    cdef long pc_io = pc
    cdef int status
    if code.shape[0] == 0:
        return ST_OK, pc
    status = _exec(code, &R[0], &pc_io, pause, budget, &nll, &steps)
    state[0] = nll
    state[1] = steps
    return status, pc_io


def vm_score(const long[:, ::1] init_code, const long[:, ::1] trial_code,
             double[::1] R, const double[:, ::1] bind,
             const long[::1] bind_slots, const unsigned char[::1] reset,
             long start, long stop, long budget):
    """Same contract as ``_pycore.vm_score``; ``R`` is modified in place."""
    cdef long t, k, pc
    cdef long nb = bind_slots.shape[0]
    cdef double nll = 0.0
    cdef long steps
    cdef int status = ST_OK
    cdef double *Rp = &R[0]
    cdef bint has_init = init_code.shape[0] > 0
    with nogil:
        for t in range(start, stop):
            for k in range(nb):
                Rp[bind_slots[k]] = bind[t, k]
            steps = 0
            if reset[t] and has_init:
                pc = 0
                status = _exec(init_code, Rp, &pc, False, budget, &nll, &steps)
                if status != ST_OK:
                    pc = -1 - pc
                    break
            pc = 0
            status = _exec(trial_code, Rp, &pc, False, budget, &nll, &steps)
            if status != ST_OK:
                break
    if status != ST_OK:
        return status, nll, t, pc
    return ST_OK, nll, stop, 0
