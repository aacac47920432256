"""Pull candidate programs out of an engine response."""
from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import CogforgeError, DuplicateParameterSet, NoBlocksFound
from ..mdl import parse
from ..mdl.errors import MDLError

BLOCK_RE = re.compile(r"```[ \t]*mdl[ \t]+model(\d+)[ \t]*\r?\n(.*?)```", re.S | re.I)


def canonical_name(name):
    return name.lower().replace("_", "")


def canonical_set(names):
    return frozenset(canonical_name(n) for n in names)


@dataclass
class Candidate:
    index: int
    raw_text: str
    program: object = None
    param_names: frozenset = frozenset()
    error: str | None = None
    error_type: str | None = None

    @property
    def ok(self):
        return self.program is not None


def _clash(names, seen, any_overlap):
    for prev in seen:
        if names == prev or (any_overlap and names & prev):
            return prev
    return None


def extract_candidates(response, kind, history=(), any_overlap=False, limit=3, n_features=4,
                       name_prefix=""):
    """Parse every ``mdl modelN`` block.

    Blocks that fail to parse or validate, or whose parameter names repeat
    a sibling's or an earlier accepted set, come back as failed candidates
    with the diagnostic attached.
    """
    found = BLOCK_RE.findall(response or "")
    if not found:
        raise NoBlocksFound("no ```mdl modelN``` blocks in the response")
    out = []
    seen = [canonical_set(h) for h in history]
    for idx, body in found[:limit]:
        c = Candidate(int(idx), body)
        try:
            prog = parse(body, kind=kind, name=f"{name_prefix}model{idx}")
            prog.check(kind, n_features)
        except (MDLError, CogforgeError) as e:
            c.error, c.error_type = str(e), type(e).__name__
            out.append(c)
            continue
        names = canonical_set(prog.param_names)
        c.param_names = frozenset(prog.param_names)
        prev = _clash(names, seen, any_overlap)
        if prev is not None:
            err = DuplicateParameterSet(
                f"model{idx} reuses the parameter set {{{', '.join(sorted(prev))}}}")
            c.error, c.error_type = str(err), type(err).__name__
            out.append(c)
            continue
        c.program = prog
        seen.append(names)
        out.append(c)
    return out
