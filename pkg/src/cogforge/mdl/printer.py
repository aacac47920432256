"""Canonical source printer; ``parse(to_source(p)) == p`` for any parsed tree."""
from __future__ import annotations

import math

from . import ast as A

# binding strength, higher binds tighter
_PREC = {"or": 1, "and": 2, "not": 3,
         "<": 4, "<=": 4, ">": 4, ">=": 4, "==": 4, "!=": 4,
         "+": 5, "-": 5, "*": 6, "/": 6, "neg": 7, "^": 8}
_POSTFIX = 9
_ATOM = 10


def format_number(v):
    v = float(v)
    if not math.isfinite(v):
        raise ValueError(f"cannot print non-finite literal {v}")
    if v.is_integer():
        return str(int(v))
    return repr(v)


def _prec(e):
    if isinstance(e, A.Binary):
        return _PREC[e.op]
    if isinstance(e, A.Unary):
        return _PREC["not"] if e.op == "not" else _PREC["neg"]
    if isinstance(e, A.Num) and e.value < 0:
        return _PREC["neg"]
    if isinstance(e, A.Index):
        return _POSTFIX
    return _ATOM


def _wrap(e, need):
    s = expr_to_source(e)
    return f"({s})" if _prec(e) < need else s


def expr_to_source(e):
    if isinstance(e, A.Num):
        return format_number(e.value)
    if isinstance(e, A.Name):
        return e.id
    if isinstance(e, A.Index):
        idx = ", ".join(expr_to_source(i) for i in e.indices)
        return f"{_wrap(e.base, _POSTFIX)}[{idx}]"
    if isinstance(e, A.Call):
        return f"{e.func}({', '.join(expr_to_source(a) for a in e.args)})"
    if isinstance(e, A.VecLit):
        return f"[{', '.join(expr_to_source(a) for a in e.items)}]"
    if isinstance(e, A.Unary):
        if e.op == "not":
            return f"not {_wrap(e.operand, _PREC['not'])}"
        return f"-{_wrap(e.operand, _PREC['neg'])}"
    if isinstance(e, A.Binary):
        p = _PREC[e.op]
        if e.op == "^":
            return f"{_wrap(e.left, _POSTFIX)} ^ {_wrap(e.right, _PREC['neg'])}"
        if p == 4:  # comparisons do not chain
            return f"{_wrap(e.left, p + 1)} {e.op} {_wrap(e.right, p + 1)}"
        return f"{_wrap(e.left, p)} {e.op} {_wrap(e.right, p + 1)}"
    raise TypeError(f"not an expression node: {e!r}")


def _stmt_lines(s, indent):
    pad = "    " * indent
    if isinstance(s, A.Assign):
        return [f"{pad}{expr_to_source(s.target)} {s.op} {expr_to_source(s.value)}"]
    if isinstance(s, A.Choose):
        return [f"{pad}choose({s.name}, {expr_to_source(s.probs)})"]
    if isinstance(s, A.If):
        lines = [f"{pad}if {expr_to_source(s.cond)} {{"]
        for b in s.body:
            lines += _stmt_lines(b, indent + 1)
        if s.orelse:
            lines.append(f"{pad}}} else {{")
            for b in s.orelse:
                lines += _stmt_lines(b, indent + 1)
        lines.append(f"{pad}}}")
        return lines
    raise TypeError(f"not a statement node: {s!r}")


def to_source(prog):
    """Render a :class:`Program` as canonical source text."""
    lines = ["params {"]
    for p in prog.params:
        lines.append(f"    {p.name}: [{format_number(p.lower)}, {format_number(p.upper)}]")
    lines.append("}")
    if prog.state or prog.reset_per_block:
        lines.append("state reset_per_block {" if prog.reset_per_block else "state {")
        for d in prog.state:
            lines.append(f"    {d.name} = {expr_to_source(d.init)}")
        lines.append("}")
    lines.append("trial {")
    for s in prog.trial:
        lines += _stmt_lines(s, 1)
    lines.append("}")
    return "\n".join(lines) + "\n"
