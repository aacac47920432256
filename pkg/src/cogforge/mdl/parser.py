"""Tokenizer and recursive-descent parser for model programs."""
from __future__ import annotations

import re
from dataclasses import dataclass

from . import ast as A
from .errors import MDLSyntaxError

# block names (params, state, trial) stay ordinary identifiers so that the
# ``trial`` binding can be read inside expressions
KEYWORDS = {"reset_per_block", "if", "else", "choose", "and", "or", "not"}
AUG_OPS = ("+=", "-=", "*=", "/=")
COMPARE_OPS = ("<", "<=", ">", ">=", "==", "!=")

_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\*\*|\+=|-=|\*=|/=|<=|>=|==|!=|[-+*/^<>=(){}\[\],:;])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # 'num', 'ident', 'kw', 'op', 'eof'
    text: str
    line: int
    col: int


def tokenize(source):
    toks = []
    pos, line, line_start = 0, 1, 0
    n = len(source)
    while pos < n:
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise MDLSyntaxError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "ident" and text in KEYWORDS:
            kind = "kw"
        if kind == "op" and text == "**":
            text = "^"
        if kind not in ("ws", "comment"):
            toks.append(Token(kind, text, line, col))
        nl = text.count("\n")
        if nl:
            line += nl
            line_start = pos + text.rindex("\n") + 1
        pos = m.end()
    toks.append(Token("eof", "", line, pos - line_start + 1))
    return toks


class Parser:
    def __init__(self, source):
        self.source = source
        self.toks = tokenize(source)
        self.i = 0

    # -- token helpers ---------------------------------------------------
    @property
    def tok(self):
        return self.toks[self.i]

    def peek(self, k=1):
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, text, kind=None):
        t = self.tok
        return t.text == text and (kind is None or t.kind == kind) and t.kind != "eof"

    def advance(self):
        t = self.tok
        self.i += 1
        return t

    def error(self, expected, tok=None):
        t = tok or self.tok
        got = "end of input" if t.kind == "eof" else repr(t.text)
        raise MDLSyntaxError(f"unexpected {got}", t.line, t.col, expected)

    def expect(self, text):
        if not self.at(text):
            self.error(repr(text))
        return self.advance()

    def ident(self, what="identifier"):
        if self.tok.kind != "ident":
            self.error(what)
        return self.advance()

    def skip_semis(self):
        while self.at(";"):
            self.advance()

    # -- program -----------------------------------------------------------
    def program(self):
        params = self.params_block()
        state, reset = (), False
        if self.at("state", "ident"):
            state, reset = self.state_block()
        trial = self.trial_block()
        if self.tok.kind != "eof":
            self.error("end of program")
        return A.Program(tuple(params), tuple(state), reset, tuple(trial), self.source)

    def params_block(self):
        if not self.at("params", "ident"):
            self.error("'params'")
        self.advance()
        self.expect("{")
        out = []
        while not self.at("}"):
            name = self.ident("parameter name")
            self.expect(":")
            self.expect("[")
            lo = self.signed_number()
            self.expect(",")
            hi = self.signed_number()
            self.expect("]")
            out.append(A.Param(name.text, lo, hi, span=(name.line, name.col)))
            while self.at(",") or self.at(";"):
                self.advance()
        if not out:
            self.error("at least one parameter")
        self.expect("}")
        return out

    def signed_number(self):
        sign = 1.0
        if self.at("-"):
            self.advance()
            sign = -1.0
        elif self.at("+"):
            self.advance()
        if self.tok.kind != "num":
            self.error("number")
        return sign * float(self.advance().text)

    def state_block(self):
        self.advance()
        reset = False
        if self.at("reset_per_block", "kw"):
            self.advance()
            reset = True
        self.expect("{")
        out = []
        while not self.at("}"):
            name = self.ident("state variable name")
            self.expect("=")
            init = self.expr()
            out.append(A.StateDecl(name.text, init, span=(name.line, name.col)))
            while self.at(",") or self.at(";"):
                self.advance()
        self.expect("}")
        return out, reset

    def trial_block(self):
        if not self.at("trial", "ident"):
            self.error("'trial'" if self.i else "'params'")
        self.advance()
        self.expect("{")
        body = self.stmts()
        if not body:
            self.error("at least one statement")
        self.expect("}")
        return body

    # -- statements --------------------------------------------------------
    def stmts(self):
        out = []
        self.skip_semis()
        while not self.at("}") and self.tok.kind != "eof":
            out.append(self.stmt())
            self.skip_semis()
        return out

    def block(self):
        self.expect("{")
        body = self.stmts()
        self.expect("}")
        return tuple(body)

    def stmt(self):
        t = self.tok
        if self.at("if", "kw"):
            return self.if_stmt()
        if self.at("choose", "kw"):
            self.advance()
            self.expect("(")
            name = self.ident("decision name")
            self.expect(",")
            probs = self.expr()
            self.expect(")")
            return A.Choose(name.text, probs, span=(t.line, t.col))
        if t.kind != "ident":
            self.error("statement")
        target = A.Name(self.advance().text, span=(t.line, t.col))
        while self.at("["):
            target = A.Index(target, self.index_suffix(), span=(t.line, t.col))
        op = self.tok
        if op.text not in ("=",) + AUG_OPS or op.kind != "op":
            self.error("'=' or an augmented assignment")
        self.advance()
        value = self.expr()
        return A.Assign(target, op.text, value, span=(op.line, op.col))

    def if_stmt(self):
        t = self.advance()
        cond = self.expr()
        body = self.block()
        orelse = ()
        if self.at("else", "kw"):
            self.advance()
            if self.at("if", "kw"):
                orelse = (self.if_stmt(),)
            else:
                orelse = self.block()
        return A.If(cond, body, orelse, span=(t.line, t.col))

    def index_suffix(self):
        self.expect("[")
        idx = [self.expr()]
        if self.at(","):
            self.advance()
            idx.append(self.expr())
        self.expect("]")
        return tuple(idx)

    # -- expressions -------------------------------------------------------
    def expr(self):
        return self.or_expr()

    def or_expr(self):
        left = self.and_expr()
        while self.at("or", "kw"):
            t = self.advance()
            left = A.Binary("or", left, self.and_expr(), span=(t.line, t.col))
        return left

    def and_expr(self):
        left = self.not_expr()
        while self.at("and", "kw"):
            t = self.advance()
            left = A.Binary("and", left, self.not_expr(), span=(t.line, t.col))
        return left

    def not_expr(self):
        if self.at("not", "kw"):
            t = self.advance()
            return A.Unary("not", self.not_expr(), span=(t.line, t.col))
        return self.comparison()

    def comparison(self):
        left = self.additive()
        if self.tok.kind == "op" and self.tok.text in COMPARE_OPS:
            t = self.advance()
            left = A.Binary(t.text, left, self.additive(), span=(t.line, t.col))
        return left

    def additive(self):
        left = self.term()
        while self.tok.kind == "op" and self.tok.text in ("+", "-"):
            t = self.advance()
            left = A.Binary(t.text, left, self.term(), span=(t.line, t.col))
        return left

    def term(self):
        left = self.unary()
        while self.tok.kind == "op" and self.tok.text in ("*", "/"):
            t = self.advance()
            left = A.Binary(t.text, left, self.unary(), span=(t.line, t.col))
        return left

    def unary(self):
        if self.at("-", "op"):
            t = self.advance()
            return A.Unary("-", self.unary(), span=(t.line, t.col))
        if self.at("+", "op"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self):
        base = self.postfix()
        if self.at("^", "op"):
            t = self.advance()
            return A.Binary("^", base, self.unary(), span=(t.line, t.col))
        return base

    def postfix(self):
        t = self.tok
        node = self.atom()
        while self.at("["):
            node = A.Index(node, self.index_suffix(), span=(t.line, t.col))
        return node

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.advance()
            return A.Num(float(t.text), span=(t.line, t.col))
        if t.kind == "ident":
            self.advance()
            if self.at("("):
                self.advance()
                args = []
                if not self.at(")"):
                    args.append(self.expr())
                    while self.at(","):
                        self.advance()
                        args.append(self.expr())
                self.expect(")")
                return A.Call(t.text, tuple(args), span=(t.line, t.col))
            return A.Name(t.text, span=(t.line, t.col))
        if self.at("("):
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if self.at("["):
            self.advance()
            items = []
            if not self.at("]"):
                items.append(self.expr())
                while self.at(","):
                    self.advance()
                    items.append(self.expr())
            self.expect("]")
            if not items:
                self.error("at least one element", t)
            return A.VecLit(tuple(items), span=(t.line, t.col))
        self.error("expression")


def parse_syntax(source):
    """Parse ``source`` into a :class:`Program` without semantic checks."""
    if not isinstance(source, str):
        raise TypeError("model source must be a string")
    return Parser(source).program()


def parse_expr(source):
    p = Parser(source)
    e = p.expr()
    if p.tok.kind != "eof":
        p.error("end of expression")
    return e
