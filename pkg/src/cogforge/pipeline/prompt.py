"""Prompt assembly for the proposal engine."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from ..dataset import ParadigmKind
from ..errors import AllComponentsDisabled
from ..mdl.bindings import BINDINGS
from ..mdl.library import template_for

COMPONENTS = ("description", "data", "guardrails", "template", "feedback")
ABLATABLE = ("feedback", "data", "description", "template")

DESCRIPTIONS = {
    ParadigmKind.DECISION: (
        "Participants compared two products, A and B, and picked the one they judged to be of "
        "higher quality. Each product came with ratings from several experts, where 1 is a good "
        "rating and 0 a bad one. Experts are listed from most to least reliable, and the "
        "reliability of each expert is given as a validity."),
    ParadigmKind.LEARNING_PARTIAL: (
        "Participants repeatedly chose between two actions to earn rewards. Each action paid "
        "out with its own probability, fixed within a block and possibly different across "
        "blocks. After a choice only the reward of the chosen action was shown."),
    ParadigmKind.LEARNING_FULL: (
        "Participants repeatedly chose between two actions to earn rewards. Each action paid "
        "out with its own probability, fixed within a block and possibly different across "
        "blocks. After a choice participants saw the reward of the chosen action and also "
        "the reward the other action would have paid."),
    ParadigmKind.PLANNING: (
        "Each trial has two stages. First the participant picks one of two magic carpets "
        "(A or B). Carpet A usually flies to the Blue Mountain and carpet B usually to the "
        "Pink Mountain; the other destination happens on a minority of trials. On the "
        "mountain the participant rubs one of two lamps and may receive a coin. Payout "
        "chances of the lamps change slowly over the session."),
    ParadigmKind.WORKING_MEMORY: (
        "In each block participants saw a small set of stimuli, one at a time, and pressed "
        "one of three keys for each. Every stimulus has one correct key and feedback says "
        "whether the response was right. Blocks differ in how many distinct stimuli they "
        "contain, and each stimulus appears several times in its block."),
}

LANGUAGE_RULES = """\
Write each model in the model description language below.

A program has up to three parts:
  params { name: [lower, upper] ... }      free parameters with finite bounds
  state { X = <expr> ... }                 variables kept across trials
  state reset_per_block { ... }            same, re-initialised at every block start
  trial { ... }                            statements run once per trial

Statements: assignment (=, +=, -=, *=, /=) to a name or an element X[i] / X[i, j],
if <cond> { ... } else { ... }, and choose(<decision>, <probability vector>).
Expressions: numbers, + - * / ^, comparisons, and/or/not, indexing, [a, b] vectors and
the functions exp, log, abs, min, max, pow, sum, argmax, softmax(v) or softmax(v, beta),
clamp(x, lo, hi), vector(n, fill) and matrix(rows, cols, fill).
Every parameter must be used. Avoid operations that can divide by zero or overflow.
"""


def guardrails(kind, n_models=3):
    kind = ParadigmKind.parse(kind)
    b = BINDINGS[kind]
    pre = ", ".join(b.pre_names)
    dec = []
    for d in b.decisions:
        s = f"choose({d.name}, p) with p over {d.n_options} options"
        if d.outcomes:
            s += f"; afterwards {', '.join(d.outcomes)} can be read"
        dec.append(s)
    blocks = ", ".join(f"model{i}" for i in range(1, n_models + 1))
    return (
        f"Propose {n_models} different cognitive models that could explain how these "
        f"participants behave. The models should rest on different assumptions and must not "
        f"share the same set of parameter names, including with models you proposed earlier.\n\n"
        + LANGUAGE_RULES +
        f"\nReadable at the start of a trial: {pre}.\n"
        f"Decisions, in this order: {'; '.join(dec)}.\n\n"
        f"Put each model in its own fenced block whose info string is 'mdl' followed by its "
        f"label, in the order {blocks}, for example:\n"
        f"```mdl model1\n...\n```\n"
        f"Add a comment line (starting with #) that explains every parameter.")


@dataclass(frozen=True)
class PromptSpec:
    task_description: str = ""
    data_text: str = ""
    guardrails: str = ""
    template: str = ""
    feedback: str | None = None
    components_enabled: dict = field(default_factory=lambda: {c: True for c in COMPONENTS})

    def enabled(self, name):
        return bool(self.components_enabled.get(name, True))

    def without(self, *names):
        flags = dict(self.components_enabled)
        for n in names:
            if n not in COMPONENTS:
                raise ValueError(f"unknown prompt component {n!r}")
            flags[n] = False
        return replace(self, components_enabled=flags)


def default_spec(kind, data_text, n_models=3, enabled=None):
    flags = {c: True for c in COMPONENTS}
    flags.update(enabled or {})
    tmpl = template_for(kind)
    return PromptSpec(DESCRIPTIONS[ParadigmKind.parse(kind)], data_text, guardrails(kind, n_models),
                      tmpl, None, flags)


def build_prompt(spec):
    """Join the enabled components in a fixed order."""
    if not any(spec.enabled(c) for c in COMPONENTS):
        raise AllComponentsDisabled("every prompt component is switched off")
    parts = []
    if spec.enabled("description") and spec.task_description:
        parts.append(spec.task_description.strip())
    if spec.enabled("data") and spec.data_text:
        parts.append("Here is behavioural data from a few participants:\n\n" + spec.data_text.strip())
    if spec.enabled("guardrails") and spec.guardrails:
        parts.append(spec.guardrails.strip())
    if spec.enabled("template") and spec.template:
        parts.append("A starting model you can build on:\n\n```mdl\n" + spec.template.strip() + "\n```")
    if spec.enabled("feedback") and spec.feedback:
        parts.append(spec.feedback.strip())
    return "\n\n".join(parts) + "\n"
