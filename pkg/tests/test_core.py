import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cogforge import core
from cogforge.baselines import get_baseline
from cogforge.dataset import Dataset, ParadigmKind
from cogforge.mdl import load_library
from cogforge.synthgen import (gen_bandit_agents, gen_decision_problems, gen_rlwm_agents,
                               gen_twostep_agents, simulate_heuristic_agents)

needs_compiled = pytest.mark.skipif(not core.COMPILED, reason="compiled extension not built")

unit = st.floats(0, 1)
beta = st.floats(0, 20)
stick = st.floats(-2, 2)


def _data(name, seed):
    if name in ("rw", "rw_pm", "rw_kappa", "rw4a"):
        d, _ = gen_bandit_agents("rw_pm", 1, 80, seed=seed, feedback="full")
    elif name == "hybrid":
        d, _ = gen_twostep_agents(n_agents=1, n_trials=60, seed=seed)
    elif name == "rlwm":
        d, _ = gen_rlwm_agents(n_agents=1, seed=seed, set_sizes=(3, 6))
    else:
        ps = gen_decision_problems(40, n_features=4, seed=seed, binary=True)
        d = simulate_heuristic_agents("ttb", ps, 0.2, 1, seed=seed)
    return d.participants[0]


THETA = {
    "rw": st.tuples(unit, beta), "rw_pm": st.tuples(unit, unit, beta),
    "rw_kappa": st.tuples(unit, beta, stick), "rw4a": st.tuples(unit, unit, unit, unit, beta, stick),
    "hybrid": st.tuples(unit, unit, unit, unit, beta, beta, stick),
    "rlwm": st.tuples(unit, unit, unit, unit, unit, beta),
    "pwadd": st.tuples(unit, unit, unit, unit, beta),
}


@needs_compiled
@pytest.mark.parametrize("name", sorted(THETA))
@settings(max_examples=15)
@given(data=st.data(), seed=st.integers(0, 10_000))
def test_native_backends_identical(name, data, seed):
    p = _data(name, seed)
    th = list(data.draw(THETA[name]))
    m = get_baseline(name)
    assert m.objective(p, backend="compiled")(th) == m.objective(p, backend="python")(th)


@needs_compiled
@pytest.mark.parametrize("name", ["rw", "rw_pm", "rw_kappa", "rw4a", "hybrid", "rlwm", "pwadd"])
@settings(max_examples=10)
@given(data=st.data(), seed=st.integers(0, 10_000))
def test_vm_backends_identical(name, data, seed):
    p = _data(name, seed)
    th = list(data.draw(THETA[name]))
    m = load_library(name)
    a = m.objective(p, backend="compiled")(th)
    b = m.objective(p, backend="python")(th)
    assert a == b
    assert abs(a - get_baseline(name).evaluate_nll(p, th)) < 1e-9


def test_env_switch_selects_python():
    code = "import cogforge.core as c; print(c.BACKEND)"
    env = dict(os.environ, COGFORGE_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"


def test_unknown_backend():
    with pytest.raises(ValueError):
        core.get_kernels("fortran")


@pytest.mark.parametrize("a_pos", [5.7e-228, 1e-13, 1e-12, 2e-12])
def test_rlwm_tiny_positive_rate_agrees(a_pos):
    p = _data("rlwm", 0)
    th = [a_pos, 0.5 * a_pos, 0.1, 0.5, 0.1, 3.0]
    a = load_library("rlwm").objective(p)(th)
    assert abs(a - get_baseline("rlwm").evaluate_nll(p, th)) < 1e-9
