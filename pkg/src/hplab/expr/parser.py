"""Recursive-descent parser for the expression DSL.

Grammar::

    expr   := term (("+"|"-") term)* ;
    term   := factor (("*"|"/") factor)* ;
    factor := unary ("^" unary)? ;
    unary  := "-" unary | atom ;
    atom   := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")" ;

Note that unary minus binds tighter than ``^``, so ``-x^2`` is ``(-x)^2`` and
``a^b^c`` is rejected.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import nodes as N

# name -> arity
FUNCTIONS = {
    "sinh": 1, "cosh": 1, "tanh": 1, "ln": 1, "exp": 1, "sqrt": 1,
    "pow": 2, "ml": 2, "c0": 1, "cnu": 2,
}
RESERVED = frozenset({N.ETA, N.T, "i"}) | frozenset(FUNCTIONS)


class ParseError(ValueError):
    """Syntax error at a byte offset, with the set of tokens that would fit."""

    def __init__(self, message: str, offset: int, expected=(), source: str = ""):
        self.offset = offset
        self.expected = frozenset(expected)
        self.source = source
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class UnknownIdentifierError(ParseError):
    pass


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER, IDENT, OP, EOF
    text: str
    offset: int


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<NUMBER>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<IDENT>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<OP>[-+*/^(),]))"
)


def tokenize(src: str) -> list[Token]:
    tokens = []
    pos = 0
    while True:
        while pos < len(src) and src[pos].isspace():
            pos += 1
        if pos >= len(src):
            tokens.append(Token("EOF", "", _byte_offset(src, pos)))
            return tokens
        m = _TOKEN_RE.match(src, pos)
        if not m or m.lastgroup is None:
            raise ParseError(f"unexpected character {src[pos]!r}", _byte_offset(src, pos),
                             {"NUMBER", "IDENT", "(", "-"}, src)
        kind = m.lastgroup
        tokens.append(Token(kind, m.group(kind), _byte_offset(src, m.start(kind))))
        pos = m.end()


def _byte_offset(src: str, char_pos: int) -> int:
    return len(src[:char_pos].encode("utf-8"))


class _Parser:
    def __init__(self, src, bindings, complex_mode, functions, params):
        self.src = src
        self.tokens = tokenize(src)
        self.pos = 0
        self.bindings = dict(bindings or {})
        self.complex_mode = complex_mode
        self.functions = dict(FUNCTIONS)
        self.functions.update(functions or {})
        self.params = None if params is None else frozenset(params)

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message, expected=()):
        return ParseError(message, self.tok.offset, expected, self.src)

    def expect(self, text: str) -> Token:
        if self.tok.text != text or self.tok.kind != "OP":
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}", {text})
        return self.advance()

    def parse(self) -> N.Expr:
        e = self.expr()
        if self.tok.kind != "EOF":
            raise self.error(f"unexpected token {self.tok.text!r}", {"+", "-", "*", "/", "^", "EOF"})
        return e

    def expr(self) -> N.Expr:
        e = self.term()
        while self.tok.kind == "OP" and self.tok.text in "+-":
            op = self.advance().text
            rhs = self.term()
            e = N.add(e, rhs) if op == "+" else N.add(e, N.neg(rhs))
        return e

    def term(self) -> N.Expr:
        e = self.factor()
        while self.tok.kind == "OP" and self.tok.text in "*/":
            op = self.advance().text
            rhs = self.factor()
            e = N.mul(e, rhs) if op == "*" else N.div(e, rhs)
        return e

    def factor(self) -> N.Expr:
        base = self.unary()
        if self.tok.kind == "OP" and self.tok.text == "^":
            self.advance()
            exponent = self.unary()
            if self.tok.kind == "OP" and self.tok.text == "^":
                raise self.error("chained '^' is ambiguous; add parentheses",
                                 {"+", "-", "*", "/", ")", "EOF"})
            return N.power(base, exponent)
        return base

    def unary(self) -> N.Expr:
        if self.tok.kind == "OP" and self.tok.text == "-":
            self.advance()
            return N.neg(self.unary())
        return self.atom()

    def atom(self) -> N.Expr:
        tok = self.tok
        if tok.kind == "NUMBER":
            self.advance()
            return N.Const(float(tok.text))
        if tok.kind == "OP" and tok.text == "(":
            self.advance()
            e = self.expr()
            self.expect(")")
            return e
        if tok.kind == "IDENT":
            self.advance()
            if self.tok.kind == "OP" and self.tok.text == "(":
                return self.call(tok)
            return self.identifier(tok)
        found = tok.text or "end of input"
        raise self.error(f"unexpected {found!r}", {"NUMBER", "IDENT", "(", "-"})

    def identifier(self, tok: Token) -> N.Expr:
        name = tok.text
        if name in self.functions:
            raise self.error(f"function {name!r} needs an argument list", {"("})
        if name in (N.ETA, N.T):
            return N.Var(name)
        if name == "i":
            if not self.complex_mode:
                raise ParseError("imaginary unit 'i' is only legal in complex mode",
                                 tok.offset, (), self.src)
            return N.Const(1j)
        if name in self.bindings:
            return N.as_expr(self.bindings[name])
        if self.params is not None and name not in self.params:
            raise UnknownIdentifierError(f"unknown identifier {name!r}", tok.offset, (), self.src)
        return N.Var(name)

    def call(self, tok: Token) -> N.Expr:
        name = tok.text
        if name not in self.functions:
            raise UnknownIdentifierError(f"unknown function {name!r}", tok.offset,
                                         set(self.functions), self.src)
        self.expect("(")
        args = [self.expr()]
        while self.tok.kind == "OP" and self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        arity = self.functions[name]
        if len(args) != arity:
            raise ParseError(f"{name} takes {arity} argument(s), got {len(args)}", tok.offset, (), self.src)
        if name == "pow":
            return N.power(*args)
        if name == "c0":
            return N.cnu(0, args[0])
        if name in ("ml", "cnu") and not isinstance(args[0], N.Const):
            raise ParseError(f"first argument of {name} must be a constant", tok.offset, (), self.src)
        return N.Fun(name, args)


def parse(src: str, bindings=None, *, complex_mode: bool = False, functions=None, params=None) -> N.Expr:
    """Parse DSL text into an :class:`Expr`.

    ``bindings`` maps parameter names to numbers that are substituted as
    constants. Other identifiers become free variables unless ``params`` is
    given, in which case names outside it raise
    :class:`UnknownIdentifierError`. ``functions`` adds extra callable names
    (name -> arity), e.g. ``{"lap": 1}`` for operator text.
    """
    return _Parser(src, bindings, complex_mode, functions, params).parse()
