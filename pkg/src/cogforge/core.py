"""Kernel backend selection.

The compiled extension is used when it imports; set ``COGFORGE_PURE_PYTHON=1``
to force the pure-Python kernels. Both expose identical functions and give
bit-identical results.
"""
import os

import numpy as np

from . import _pycore

_k = _pycore
if os.environ.get("COGFORGE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core as _k  # noqa: F811
    except ImportError:  # extension not built
        _k = _pycore

BACKEND = _k.BACKEND
COMPILED = BACKEND == "compiled"

ST_OK = _pycore.ST_OK
ST_PAUSE = _pycore.ST_PAUSE
ST_NUMERICS = _pycore.ST_NUMERICS
ST_INDEX = _pycore.ST_INDEX
ST_BUDGET = _pycore.ST_BUDGET
ST_PROB = _pycore.ST_PROB
ST_OBS = _pycore.ST_OBS


def _i(x):
    return np.ascontiguousarray(x, dtype=np.int64)


def _f(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def _b(x):
    return np.ascontiguousarray(x, dtype=np.uint8)


def get_kernels(backend=None):
    """Return the kernel module for ``backend`` ('compiled', 'python' or None)."""
    if backend is None:
        return _k
    if backend == "python":
        return _pycore
    if backend == "compiled":
        from . import _core
        return _core
    raise ValueError(f"unknown backend {backend!r}")


def rw_nll(actions, rewards, forgone, block_start, a_cp, a_cn, a_up, a_un,
           beta, kappa, use_unchosen, kernels=None):
    k = kernels or _k
    return k.rw_nll(_i(actions), _f(rewards), _f(forgone), _b(block_start),
                    float(a_cp), float(a_cn), float(a_up), float(a_un),
                    float(beta), float(kappa), bool(use_unchosen))


def pwadd_nll(features_a, features_b, choices, weights, beta, kernels=None):
    k = kernels or _k
    return k.pwadd_nll(_f(features_a), _f(features_b), _i(choices),
                       _f(weights), float(beta))


def hybrid_nll(action_1, state_2, action_2, reward, alpha1, alpha2, lam, w,
               beta1, beta2, pers, kernels=None):
    k = kernels or _k
    return k.hybrid_nll(_i(action_1), _i(state_2), _i(action_2), _f(reward),
                        float(alpha1), float(alpha2), float(lam), float(w),
                        float(beta1), float(beta2), float(pers))


def rlwm_nll(block_start, set_size, stimulus, action, reward, a_pos, a_neg,
             phi, omega, eps, beta_rl, kernels=None):
    k = kernels or _k
    return k.rlwm_nll(_b(block_start), _i(set_size), _i(stimulus), _i(action),
                      _f(reward), float(a_pos), float(a_neg), float(phi),
                      float(omega), float(eps), float(beta_rl))


wm_neglect = _pycore.wm_neglect


class VM:
    """Backend-specific holder for one compiled program's code arrays."""

    def __init__(self, init_code, trial_code, kernels=None):
        self.k = kernels or _k
        self.compiled = self.k.BACKEND == "compiled"
        init_code = np.asarray(init_code, dtype=np.int64).reshape(-1, 8)
        trial_code = np.asarray(trial_code, dtype=np.int64).reshape(-1, 8)
        if self.compiled:
            self.init_code = np.ascontiguousarray(init_code)
            self.trial_code = np.ascontiguousarray(trial_code)
        else:
            self.init_code = [tuple(r) for r in init_code.tolist()]
            self.trial_code = [tuple(r) for r in trial_code.tolist()]

    def registers(self, values):
        if self.compiled:
            return np.array(values, dtype=np.float64)
        return [float(v) for v in values]

    def exec(self, which, R, pc, pause, budget, state):
        code = self.init_code if which == "init" else self.trial_code
        return self.k.vm_exec(code, R, pc, pause, budget, state)

    def score(self, R, bind, bind_slots, reset, start, stop, budget):
        if self.compiled:
            return self.k.vm_score(self.init_code, self.trial_code, R,
                                   _f(bind).reshape(len(reset), -1),
                                   _i(bind_slots), _b(reset),
                                   start, stop, budget)
        return self.k.vm_score(self.init_code, self.trial_code, R, bind,
                               bind_slots, reset, start, stop, budget)
