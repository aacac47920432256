"""Decision heuristics over two rated options."""
from __future__ import annotations

import numpy as np

from ..errors import LengthMismatch

HEURISTICS = ("ttb", "eqw", "wadd", "tallying")
_EPS = 1e-12


def _prep(features_a, features_b, validities):
    a = np.asarray(features_a, dtype=np.float64)
    b = np.asarray(features_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatch(f"option vectors differ in length: {a.shape} vs {b.shape}")
    v = None
    if validities is not None:
        v = np.asarray(validities, dtype=np.float64)
        if v.shape != a.shape:
            raise LengthMismatch(f"{v.shape[0]} validities for {a.shape[0]} features")
    return a, b, v


def _sign(x):
    if x > _EPS:
        return 0
    if x < -_EPS:
        return 1
    return None


def heuristic_prediction(kind, features_a, features_b, validities=None, priority=None):
    """Option a heuristic picks: 0 for A, 1 for B, None when it cannot decide.

    ``priority`` is an explicit feature order for take-the-best; by default
    features are inspected from highest to lowest validity (ties in validity
    keep their listed order).
    """
    kind = kind.lower()
    a, b, v = _prep(features_a, features_b, validities)
    if kind == "ttb":
        if priority is not None:
            order = list(priority)
        elif v is not None:
            order = list(np.argsort(-v, kind="stable"))
        else:
            order = list(range(a.shape[0]))
        for j in order:
            if a[j] != b[j]:
                return 0 if a[j] > b[j] else 1
        return None
    if kind == "eqw":
        return _sign(a.sum() - b.sum())
    if kind == "wadd":
        if v is None:
            raise LengthMismatch("WADD needs validities")
        return _sign(float(v @ a) - float(v @ b))
    if kind == "tallying":
        return _sign(float(np.sum(a > b)) - float(np.sum(b > a)))
    raise ValueError(f"unknown heuristic {kind!r}")


def heuristic_choice(kind, features_a, features_b, validities=None, rng=None, priority=None):
    """Like :func:`heuristic_prediction` but breaks ties with a fair coin from ``rng``."""
    pred = heuristic_prediction(kind, features_a, features_b, validities, priority)
    if pred is not None:
        return pred
    rng = rng if rng is not None else np.random.default_rng()
    return int(rng.integers(2))
