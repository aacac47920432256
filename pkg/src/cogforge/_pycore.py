"""Pure-Python kernels.

Mirrors ``_core.pyx`` operation for operation so that both backends return
bit-identical results. Used when the compiled extension is unavailable or
when ``COGFORGE_PURE_PYTHON=1`` is set.
"""
from math import exp, floor, log, isfinite

P_MIN = 1e-10
P_MAX = 1.0 - 1e-10
DIV_EPS = 1e-12
WM_BETA = 50.0

# VM status codes
ST_OK = 0
ST_PAUSE = 1
ST_NUMERICS = 2
ST_INDEX = 3
ST_BUDGET = 4
ST_PROB = 5
ST_OBS = 6

# opcodes
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

# BIN functions
F_ADD, F_SUB, F_MUL, F_DIV, F_POW = 0, 1, 2, 3, 4
F_LT, F_LE, F_GT, F_GE, F_EQ, F_NE = 5, 6, 7, 8, 9, 10
F_AND, F_OR, F_MIN, F_MAX = 11, 12, 13, 14
# UN functions
U_NEG, U_NOT, U_EXP, U_LOG, U_ABS = 0, 1, 2, 3, 4
# RED functions
R_SUM, R_MAX, R_MIN, R_ARGMAX = 0, 1, 2, 3

BACKEND = "python"


def _clamp(p):
    if p < P_MIN:
        return P_MIN
    if p > P_MAX:
        return P_MAX
    return p


def _exp(x):
    # C exp() saturates to inf; math.exp raises instead
    try:
        return exp(x)
    except OverflowError:
        return float("inf")


def _as_list(x):
    return x.tolist() if hasattr(x, "tolist") else list(x)


# ---------------------------------------------------------------------------
# baseline likelihoods
# ---------------------------------------------------------------------------

def rw_nll(actions, rewards, forgone, block_start, a_cp, a_cn, a_up, a_un,
           beta, kappa, use_unchosen):
    actions = _as_list(actions)
    rewards = _as_list(rewards)
    forgone = _as_list(forgone)
    block_start = _as_list(block_start)
    v0 = 0.5
    v1 = 0.5
    prev = -1
    nll = 0.0
    for t in range(len(actions)):
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
            p = 1.0 / (1.0 + _exp(x0 - x1))
        else:
            p = 1.0 / (1.0 + _exp(x1 - x0))
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


def pwadd_nll(features_a, features_b, choices, weights, beta):
    fa = _as_list(features_a)
    fb = _as_list(features_b)
    choices = _as_list(choices)
    weights = _as_list(weights)
    nll = 0.0
    nf = len(weights)
    for t in range(len(choices)):
        s = 0.0
        ra = fa[t]
        rb = fb[t]
        for j in range(nf):
            s += weights[j] * (ra[j] - rb[j])
        # logistic of the signed difference; avoids 1 - p cancellation
        if choices[t] == 0:
            p = 1.0 / (1.0 + _exp(-beta * s))
        else:
            p = 1.0 / (1.0 + _exp(beta * s))
        nll -= log(_clamp(p))
    return nll


def hybrid_nll(action_1, state_2, action_2, reward, alpha1, alpha2, lam, w,
               beta1, beta2, pers):
    a1s = _as_list(action_1)
    s2s = _as_list(state_2)
    a2s = _as_list(action_2)
    rs = _as_list(reward)
    q10 = 0.0
    q11 = 0.0
    q2 = [[0.0, 0.0], [0.0, 0.0]]
    prev = -1
    nll = 0.0
    for t in range(len(a1s)):
        a1 = a1s[t]
        s = s2s[t]
        a2 = a2s[t]
        r = rs[t]
        m0 = q2[0][0] if q2[0][0] >= q2[0][1] else q2[0][1]
        m1 = q2[1][0] if q2[1][0] >= q2[1][1] else q2[1][1]
        mb0 = 0.7 * m0 + 0.3 * m1
        mb1 = 0.3 * m0 + 0.7 * m1
        x0 = beta1 * (w * mb0 + (1.0 - w) * q10 + pers * (1.0 if prev == 0 else 0.0))
        x1 = beta1 * (w * mb1 + (1.0 - w) * q11 + pers * (1.0 if prev == 1 else 0.0))
        if a1 == 1:
            p = 1.0 / (1.0 + _exp(x0 - x1))
        else:
            p = 1.0 / (1.0 + _exp(x1 - x0))
        nll -= log(_clamp(p))
        row = q2[s]
        y0 = beta2 * row[0]
        y1 = beta2 * row[1]
        if a2 == 1:
            p = 1.0 / (1.0 + _exp(y0 - y1))
        else:
            p = 1.0 / (1.0 + _exp(y1 - y0))
        nll -= log(_clamp(p))
        q2sa = row[a2]
        d2 = r - q2sa
        if a1 == 1:
            d1 = q2sa - q11
            q11 = q11 + alpha1 * d1 + alpha1 * lam * d2
        else:
            d1 = q2sa - q10
            q10 = q10 + alpha1 * d1 + alpha1 * lam * d2
        row[a2] = q2sa + alpha2 * d2
        prev = a1
    return nll


def wm_neglect(a_pos, a_neg):
    """Working-memory negative-feedback factor, clipped to [0, 1].

    A positive rate at or below the division guard counts as zero.
    """
    if a_pos > DIV_EPS:
        v = a_neg / a_pos
    elif a_neg > 0.0:
        v = 1.0
    else:
        v = 0.0
    if v > 1.0:
        v = 1.0
    return v


def rlwm_nll(block_start, set_size, stimulus, action, reward, a_pos, a_neg,
             phi, omega, eps, beta_rl):
    block_start = _as_list(block_start)
    set_size = _as_list(set_size)
    stimulus = _as_list(stimulus)
    action = _as_list(action)
    reward = _as_list(reward)
    third = 1.0 / 3.0
    v = wm_neglect(a_pos, a_neg)
    q = []
    wm = []
    ns = 0
    nll = 0.0
    for t in range(len(action)):
        if block_start[t]:
            ns = set_size[t]
            q = [[third, third, third] for _ in range(ns)]
            wm = [[third, third, third] for _ in range(ns)]
        s = stimulus[t]
        a = action[t]
        r = reward[t]
        qs = q[s]
        ws = wm[s]
        # RL softmax
        x0 = beta_rl * qs[0]
        x1 = beta_rl * qs[1]
        x2 = beta_rl * qs[2]
        m = x0
        if x1 > m:
            m = x1
        if x2 > m:
            m = x2
        e0 = exp(x0 - m)
        e1 = exp(x1 - m)
        e2 = exp(x2 - m)
        prl = (e0, e1, e2)[a] / (e0 + e1 + e2)
        # WM softmax
        x0 = WM_BETA * ws[0]
        x1 = WM_BETA * ws[1]
        x2 = WM_BETA * ws[2]
        m = x0
        if x1 > m:
            m = x1
        if x2 > m:
            m = x2
        e0 = exp(x0 - m)
        e1 = exp(x1 - m)
        e2 = exp(x2 - m)
        pwm = (e0, e1, e2)[a] / (e0 + e1 + e2)
        wt = omega ** ns
        pmix = wt * pwm + (1.0 - wt) * prl
        p = (1.0 - eps) * pmix + eps * third
        nll -= log(_clamp(p))
        dq = r - qs[a]
        if dq > 0:
            qs[a] = qs[a] + a_pos * dq
        else:
            qs[a] = qs[a] + a_neg * dq
        dw = r - ws[a]
        for i in range(ns):
            row = wm[i]
            for j in range(3):
                if i != s or j != a:
                    row[j] = row[j] + phi * (third - row[j])
        if dw > 0:
            ws[a] = r
        else:
            ws[a] = ws[a] + v * dw
    return nll


# ---------------------------------------------------------------------------
# bytecode VM
# ---------------------------------------------------------------------------

def _bin(fn, x, y):
    if fn == F_ADD:
        return x + y
    if fn == F_SUB:
        return x - y
    if fn == F_MUL:
        return x * y
    if fn == F_DIV:
        if -DIV_EPS < y < DIV_EPS:
            return float("nan")
        return x / y
    if fn == F_POW:
        if x < 0.0 and y != floor(y):
            return float("nan")
        if x == 0.0 and y < 0.0:
            return float("nan")
        try:
            return x ** y
        except OverflowError:
            return float("inf")
    if fn == F_LT:
        return 1.0 if x < y else 0.0
    if fn == F_LE:
        return 1.0 if x <= y else 0.0
    if fn == F_GT:
        return 1.0 if x > y else 0.0
    if fn == F_GE:
        return 1.0 if x >= y else 0.0
    if fn == F_EQ:
        return 1.0 if x == y else 0.0
    if fn == F_NE:
        return 1.0 if x != y else 0.0
    if fn == F_AND:
        return 1.0 if (x != 0.0 and y != 0.0) else 0.0
    if fn == F_OR:
        return 1.0 if (x != 0.0 or y != 0.0) else 0.0
    if fn == F_MIN:
        return x if x <= y else y
    # F_MAX
    return x if x >= y else y


def _un(fn, x):
    if fn == U_NEG:
        return -x
    if fn == U_NOT:
        return 1.0 if x == 0.0 else 0.0
    if fn == U_EXP:
        return _exp(x)
    if fn == U_LOG:
        if x <= 0.0:
            return float("nan")
        return log(x)
    # U_ABS
    return -x if x < 0.0 else x


def _index(v, dim):
    if not (v >= 0.0 and v < dim):
        return -1
    i = int(v)
    if i != v:
        return -1
    return i


def vm_exec(code, R, pc, pause, budget, state):
    """Run ``code`` from ``pc`` on register list ``R``.

    ``state`` is a two-element list ``[nll, steps]`` updated in place.
    Returns ``(status, pc)``; on ``ST_PAUSE`` the pc points at the CHOOSE.
    """
    n_code = len(code)
    steps = state[1]
    while pc < n_code:
        ins = code[pc]
        op = ins[0]
        if op == OP_BIN:
            dst, a, b, n, sa, sb, fn = ins[1], ins[2], ins[3], ins[4], ins[5], ins[6], ins[7]
            steps += n
            for i in range(n):
                v = _bin(fn, R[a + i * sa], R[b + i * sb])
                if not isfinite(v):
                    state[1] = steps
                    return ST_NUMERICS, pc
                R[dst + i] = v
        elif op == OP_UN:
            dst, a, n, fn = ins[1], ins[2], ins[3], ins[4]
            steps += n
            for i in range(n):
                v = _un(fn, R[a + i])
                if not isfinite(v):
                    state[1] = steps
                    return ST_NUMERICS, pc
                R[dst + i] = v
        elif op == OP_RED:
            dst, a, n, fn = ins[1], ins[2], ins[3], ins[4]
            steps += n
            if fn == R_SUM:
                s = 0.0
                for i in range(n):
                    s += R[a + i]
                if not isfinite(s):
                    state[1] = steps
                    return ST_NUMERICS, pc
                R[dst] = s
            elif fn == R_ARGMAX:
                best = R[a]
                k = 0
                for i in range(1, n):
                    if R[a + i] > best:
                        best = R[a + i]
                        k = i
                R[dst] = float(k)
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
            dst, a, n, bslot = ins[1], ins[2], ins[3], ins[4]
            steps += 3 * n
            if bslot >= 0:
                b = R[bslot]
                for i in range(n):
                    R[dst + i] = b * R[a + i]
            else:
                for i in range(n):
                    R[dst + i] = R[a + i]
            m = R[dst]
            for i in range(1, n):
                if R[dst + i] > m:
                    m = R[dst + i]
            if not isfinite(m):
                state[1] = steps
                return ST_NUMERICS, pc
            s = 0.0
            for i in range(n):
                e = exp(R[dst + i] - m)
                R[dst + i] = e
                s += e
            for i in range(n):
                R[dst + i] = R[dst + i] / s
        elif op == OP_COPY:
            dst, src, n, stride = ins[1], ins[2], ins[3], ins[4]
            steps += n
            for i in range(n):
                R[dst + i] = R[src + i * stride]
        elif op == OP_LOAD1:
            dst, base, islot, dim, esize = ins[1], ins[2], ins[3], ins[4], ins[5]
            steps += esize
            i = _index(R[islot], dim)
            if i < 0:
                state[1] = steps
                return ST_INDEX, pc
            off = base + i * esize
            for k in range(esize):
                R[dst + k] = R[off + k]
        elif op == OP_LOAD2:
            dst, base, islot, jslot, rows, cols = ins[1], ins[2], ins[3], ins[4], ins[5], ins[6]
            steps += 1
            i = _index(R[islot], rows)
            j = _index(R[jslot], cols)
            if i < 0 or j < 0:
                state[1] = steps
                return ST_INDEX, pc
            R[dst] = R[base + i * cols + j]
        elif op == OP_STORE1:
            base, islot, dim, esize, src = ins[1], ins[2], ins[3], ins[4], ins[5]
            steps += esize
            i = _index(R[islot], dim)
            if i < 0:
                state[1] = steps
                return ST_INDEX, pc
            off = base + i * esize
            for k in range(esize):
                R[off + k] = R[src + k]
        elif op == OP_STORE2:
            base, islot, jslot, rows, cols, src = ins[1], ins[2], ins[3], ins[4], ins[5], ins[6]
            steps += 1
            i = _index(R[islot], rows)
            j = _index(R[jslot], cols)
            if i < 0 or j < 0:
                state[1] = steps
                return ST_INDEX, pc
            R[base + i * cols + j] = R[src]
        elif op == OP_JZ:
            steps += 1
            if R[ins[1]] == 0.0:
                pc = ins[2]
                if steps > budget:
                    state[1] = steps
                    return ST_BUDGET, pc
                continue
        elif op == OP_JMP:
            steps += 1
            pc = ins[1]
            if steps > budget:
                state[1] = steps
                return ST_BUDGET, pc
            continue
        else:  # OP_CHOOSE
            if pause:
                state[1] = steps
                return ST_PAUSE, pc
            pslot, n, oslot = ins[1], ins[2], ins[3]
            steps += n
            s = 0.0
            for i in range(n):
                p = R[pslot + i]
                if not (p >= 0.0) or not isfinite(p):
                    state[1] = steps
                    return ST_PROB, pc
                s += p
            if not (s > 0.0) or not isfinite(s):
                state[1] = steps
                return ST_PROB, pc
            o = _index(R[oslot], n)
            if o < 0:
                state[1] = steps
                return ST_OBS, pc
            state[0] -= log(_clamp(R[pslot + o] / s))
        if steps > budget:
            state[1] = steps
            return ST_BUDGET, pc
        pc += 1
    state[1] = steps
    return ST_OK, pc


def vm_score(init_code, trial_code, R, bind, bind_slots, reset, start, stop,
             budget):
    """Score trials ``start..stop`` of a binding matrix.

    Returns ``(status, nll, trial, pc)``; ``trial``/``pc`` locate a failure.
    """
    R = _as_list(R)
    bind = _as_list(bind)
    bind_slots = _as_list(bind_slots)
    reset = _as_list(reset)
    nb = len(bind_slots)
    state = [0.0, 0]
    for t in range(start, stop):
        row = bind[t]
        for k in range(nb):
            R[bind_slots[k]] = row[k]
        state[1] = 0
        if reset[t]:
            st, pc = vm_exec(init_code, R, 0, False, budget, state)
            if st != ST_OK:
                return st, state[0], t, -1 - pc
        st, pc = vm_exec(trial_code, R, 0, False, budget, state)
        if st != ST_OK:
            return st, state[0], t, pc
    return ST_OK, state[0], stop, 0
