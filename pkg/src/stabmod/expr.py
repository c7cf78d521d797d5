"""Module arithmetic expressions.

Grammar::

    sum     := product ('+' product)*
    product := unary ('*' unary)*
    unary   := 'S^' int unary | 'O^' int unary | 'dual' '(' sum ')' | '(' sum ')' | atom
    atom    := 1 | unit | J | joker | A | free | C<k> | R | R<seed> | F[d,...] | <path>.json

``*`` is the tensor product, ``+`` the direct sum, ``S^t`` shifts by t and
``O^s`` applies Omega s times (negative s for Omega^-1). C<k> is A induced up
from Lambda(p_k); R<seed> is a seeded random module (plain R uses the
parser's default seed).
"""
from __future__ import annotations

import re

from . import gmod, hopf
from . import stable as st
from .gmod import GradedModule


class ExpressionError(ValueError):
    pass


_TOKEN = re.compile(r"\s*(S\^|O\^|dual\b|[\w./-]+\.json|\d+|[()*+,\[\]-]|[A-Za-z_]\w*|\S)")


def tokenize(text: str) -> list[str]:
    pos, out = 0, []
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ExpressionError(f"cannot read {text[pos:]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str, algebra: hopf.HopfAlgebra, seed: int = 0):
        self.text = text
        self.seed = seed
        self.toks = tokenize(text)
        self.i = 0
        self.a = algebra

    def peek(self) -> str | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, want: str | None = None) -> str:
        tok = self.peek()
        if tok is None:
            raise ExpressionError(f"unexpected end of {self.text!r}")
        if want is not None and tok != want:
            raise ExpressionError(f"expected {want!r}, got {tok!r} in {self.text!r}")
        self.i += 1
        return tok

    def integer(self) -> int:
        sign = -1 if self.peek() == "-" else 1
        if sign < 0:
            self.take()
        tok = self.take()
        try:
            return sign * int(tok)
        except ValueError:
            raise ExpressionError(f"expected an integer, got {tok!r}") from None

    def parse(self) -> GradedModule:
        m = self.sum()
        if self.peek() is not None:
            raise ExpressionError(f"trailing {self.peek()!r} in {self.text!r}")
        return m

    def sum(self) -> GradedModule:
        m = self.product()
        while self.peek() == "+":
            self.take()
            m = gmod.direct_sum(m, self.product())
        return m

    def product(self) -> GradedModule:
        m = self.unary()
        while self.peek() == "*":
            self.take()
            m = gmod.tensor(m, self.unary())
        return m

    def unary(self) -> GradedModule:
        tok = self.peek()
        if tok == "S^":
            self.take()
            t = self.integer()
            return gmod.shift(self.unary(), t)
        if tok == "O^":
            self.take()
            s = self.integer()
            return st.omega_power(self.unary(), s)
        if tok == "dual":
            self.take()
            self.take("(")
            m = self.sum()
            self.take(")")
            return gmod.dual(m)
        if tok == "(":
            self.take()
            m = self.sum()
            self.take(")")
            return m
        return self.atom()

    def atom(self) -> GradedModule:
        tok = self.take()
        a = self.a
        if tok in ("1", "unit"):
            return gmod.unit(a)
        if tok in ("J", "joker"):
            if a.name != "A1":
                raise ExpressionError("the joker is only defined over A1")
            return gmod.joker(a)
        if tok in ("A", "free"):
            return gmod.free(a, [0])
        if tok == "F":
            self.take("[")
            degs = [self.integer()]
            while self.peek() == ",":
                self.take()
                degs.append(self.integer())
            self.take("]")
            return gmod.free(a, degs)
        if tok.endswith(".json"):
            return gmod.load_module(tok, a)
        m = re.fullmatch(r"C(\d+)", tok)
        if m:
            k = int(m.group(1))
            if not 1 <= k <= a.N:
                raise ExpressionError(f"C{k}: index must lie in [1,{a.N}]")
            return gmod.induced(a, a.margolis_ops[k - 1])
        m = re.fullmatch(r"R(\d*)", tok)
        if m:
            return gmod.random_module(a, int(m.group(1)) if m.group(1) else self.seed)
        raise ExpressionError(f"unknown module {tok!r}")


def parse_module(text: str, algebra: hopf.HopfAlgebra, seed: int = 0) -> GradedModule:
    m = _Parser(text, algebra, seed).parse()
    if not m.name:
        m.name = text.strip()
    return m
