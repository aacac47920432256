"""Deterministic stand-ins for a language model, used in tests and demos."""
from __future__ import annotations

import re

from ..mdl import parse
from ..mdl.library import library_source
from .engines import ProposalEngine
from .feedback import FEEDBACK_HEADER
from .prompt import DESCRIPTIONS

BIAS_ONLY = """\
# Fixed preference for one action, no learning.
params {
    bias: [-5, 5]
}
trial {
    choose(action, softmax([bias, 0]))
}
"""

BROKEN = """\
params {
    alpha: [0, 1
}
trial {
    choose(action, softmax(alpha * [1, 0])
}
"""


def renamed(source, tag):
    """Append ``tag`` to every parameter name so repeated proposals stay distinct."""
    names = parse(source).param_names
    for n in sorted(names, key=len, reverse=True):
        source = re.sub(rf"\b{re.escape(n)}\b", f"{n}_{tag}", source)
    return source


def fenced(sources):
    out = []
    for i, s in enumerate(sources, start=1):
        out.append(f"Model {i}:\n```mdl model{i}\n{s.strip()}\n```")
    return "\n\n".join(out) + "\n"


def learning_script(n_iterations=10):
    """RW in round one, RW with split learning rates in round two, then only weaker ideas.

    The weaker ideas include the four-learning-rate model, which needs
    counterfactual feedback and adds parameters the data do not support.
    """
    rw, rwpm = library_source("rw"), library_source("rw_pm")
    rwk, rw4 = library_source("rw_kappa"), library_source("rw4a")
    script = [fenced([renamed(rw, "a"), renamed(BIAS_ONLY, "a"), BROKEN]),
              fenced([renamed(rwpm, "b"), renamed(rw, "b"), renamed(BIAS_ONLY, "b")])]
    pool = [rw4, rwk, rw, BIAS_ONLY]
    for i in range(2, n_iterations):
        tag = chr(ord("a") + i)
        picks = [pool[(i + j) % len(pool)] for j in range(3)]
        script.append(fenced([renamed(s, tag) for s in picks]))
    return script


class LadderEngine(ProposalEngine):
    """Proposes better programs the further it has been guided.

    Rungs are ordered from worst to best.  With feedback in the prompt the
    engine climbs one rung per round of feedback it can see; without it it
    stays near the bottom.  Missing data caps the climb one rung short of the
    top, a missing description slows it down, and a missing template makes
    one of the three blocks malformed.
    """

    def __init__(self, rungs=None):
        self.rungs = list(rungs) if rungs is not None else [
            BIAS_ONLY, library_source("rw_kappa"), library_source("rw"), library_source("rw_pm")]
        self.calls = 0
        self.temperature = 0.0

    def reset(self):
        self.calls = 0

    def complete(self, prompt, temperature=None):
        self.calls += 1
        top = len(self.rungs) - 1
        has_feedback = FEEDBACK_HEADER in prompt
        has_data = "Data from participant" in prompt
        has_desc = any(d in prompt for d in DESCRIPTIONS.values())
        has_template = "A starting model you can build on" in prompt
        if has_feedback:
            seen = prompt.split(FEEDBACK_HEADER, 1)[1].count("\n- ")
            step = 3 if has_desc else 6
            level = min(top, 1 + seen // step)
            if not has_data:
                level = min(level, top - 1)
        else:
            level = 1 if has_data else 0
        tag = f"v{self.calls}"
        picks = [self.rungs[max(level - j, 0)] for j in range(3)]
        blocks = [renamed(s, f"{tag}k{j}") for j, s in enumerate(picks)]
        if not has_template:
            blocks[2] = BROKEN
        return fenced(blocks)
