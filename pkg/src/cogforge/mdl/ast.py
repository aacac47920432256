"""Syntax tree for model programs.

Nodes are frozen dataclasses; source spans are excluded from equality so a
re-parsed printout compares equal to the original tree.
"""
from __future__ import annotations

from dataclasses import dataclass, field


def _span():
    return field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Num:
    value: float
    span: tuple | None = _span()


@dataclass(frozen=True)
class Name:
    id: str
    span: tuple | None = _span()


@dataclass(frozen=True)
class Index:
    base: object
    indices: tuple
    span: tuple | None = _span()


@dataclass(frozen=True)
class Unary:
    op: str  # '-' or 'not'
    operand: object
    span: tuple | None = _span()


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object
    span: tuple | None = _span()


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    span: tuple | None = _span()


@dataclass(frozen=True)
class VecLit:
    items: tuple
    span: tuple | None = _span()


@dataclass(frozen=True)
class Param:
    name: str
    lower: float
    upper: float
    span: tuple | None = _span()


@dataclass(frozen=True)
class StateDecl:
    name: str
    init: object
    span: tuple | None = _span()


@dataclass(frozen=True)
class Assign:
    target: object  # Name or Index
    op: str  # '=', '+=', '-=', '*=', '/='
    value: object
    span: tuple | None = _span()


@dataclass(frozen=True)
class If:
    cond: object
    body: tuple
    orelse: tuple = ()
    span: tuple | None = _span()


@dataclass(frozen=True)
class Choose:
    name: str
    probs: object
    span: tuple | None = _span()


@dataclass(frozen=True)
class Program:
    params: tuple
    state: tuple
    reset_per_block: bool
    trial: tuple
    source: str = field(default="", compare=False, repr=False)


def walk(node):
    """Yield ``node`` and every node below it (pre-order)."""
    yield node
    if isinstance(node, Program):
        for p in node.params:
            yield from walk(p)
        for s in node.state:
            yield from walk(s)
        for s in node.trial:
            yield from walk(s)
    elif isinstance(node, Index):
        yield from walk(node.base)
        for i in node.indices:
            yield from walk(i)
    elif isinstance(node, Unary):
        yield from walk(node.operand)
    elif isinstance(node, Binary):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, (Call,)):
        for a in node.args:
            yield from walk(a)
    elif isinstance(node, VecLit):
        for a in node.items:
            yield from walk(a)
    elif isinstance(node, StateDecl):
        yield from walk(node.init)
    elif isinstance(node, Assign):
        yield from walk(node.target)
        yield from walk(node.value)
    elif isinstance(node, If):
        yield from walk(node.cond)
        for s in node.body:
            yield from walk(s)
        for s in node.orelse:
            yield from walk(s)
    elif isinstance(node, Choose):
        yield from walk(node.probs)
