"""Feedback text carried from one iteration to the next."""
from __future__ import annotations

FEEDBACK_HEADER = "Feedback from earlier iterations."


def construct_feedback(best, used_param_names, metric="bic"):
    """Best program so far, its score, and the parameter sets already tried.

    ``best`` is ``(program, score)`` or None; nothing is produced before any
    parameter set has been used.
    """
    if best is None or not used_param_names:
        return ""
    prog, score = best
    label = metric.upper()
    items = list(used_param_names)
    if all(isinstance(x, str) for x in items):
        items = [items]  # a flat collection of names
    used = sorted(sorted(s) for s in items)
    lines = [FEEDBACK_HEADER,
             f"Best model so far (mean {label} on held-out participants = {score:.2f}, lower is better):",
             "```mdl", prog.source.strip(), "```",
             "Parameter sets already used (do not repeat them):"]
    lines += ["- " + ", ".join(s) for s in used]
    lines.append(f"Try to find models with a lower {label} than the one above.")
    return "\n".join(lines)
