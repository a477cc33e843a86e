"""Concrete surface syntax.

Statements: if/else (else may take a block or a single statement, which
gives else-if chains), while, do-while, `assert(b);`, actions `p;`,
indicator assignment `x := 3;`, break/continue/return, goto/label, and
`diverge;` which desugars to `while (1) { assert(1); }`. Tests, actions,
indicator variables and labels share one identifier space; the role of a
name is inferred from its position and must stay consistent. A missing
trailing `return;` is appended.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import bexp, syntax
from .bexp import InputError, Registry
from .syntax import Exp, WellFormedProgram

KEYWORDS = {
    "if", "else", "while", "do", "assert", "break", "continue",
    "return", "goto", "label", "diverge",
}

SYMBOLS = ("&&", "||", "==", ":=", "(", ")", "{", "}", ";", "!")


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{line}:{col}: {message}")
        self.line = line
        self.col = col


@dataclass
class Token:
    kind: str  # "ident" | "int" | "sym" | "eof"
    text: str
    line: int
    col: int


def tokenize(source: str) -> list:
    tokens = []
    i, line, col = 0, 1, 1
    n = len(source)
    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c.isspace():
            i += 1
            col += 1
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            tokens.append(Token("ident", source[i:j], line, col))
            col += j - i
            i = j
            continue
        if c.isdigit():
            j = i
            while j < n and source[j].isdigit():
                j += 1
            tokens.append(Token("int", source[i:j], line, col))
            col += j - i
            i = j
            continue
        for sym in SYMBOLS:
            if source.startswith(sym, i):
                tokens.append(Token("sym", sym, line, col))
                i += len(sym)
                col += len(sym)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", line, col)
    tokens.append(Token("eof", "", line, col))
    return tokens


class Parser:
    def __init__(self, source: str, registry: Registry):
        self.tokens = tokenize(source)
        self.pos = 0
        self.registry = registry

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.next()
        if t.text != text or t.kind == "eof":
            raise ParseError(f"expected {text!r}, found {t.text or 'end of input'!r}",
                             t.line, t.col)
        return t

    def error(self, message: str, t: Token):
        raise ParseError(message, t.line, t.col)

    def claim(self, t: Token, role_add) -> int:
        try:
            return role_add(t.text)
        except InputError as exc:
            raise ParseError(str(exc), t.line, t.col) from exc

    # -- Boolean expressions: ! binds tightest, then &&, then || ------------

    def bexp(self):
        left = self.bexp_and()
        while self.peek().text == "||":
            self.next()
            left = bexp.bor(left, self.bexp_and())
        return left

    def bexp_and(self):
        left = self.bexp_not()
        while self.peek().text == "&&":
            self.next()
            left = bexp.band(left, self.bexp_not())
        return left

    def bexp_not(self):
        if self.peek().text == "!":
            self.next()
            return bexp.bnot(self.bexp_not())
        return self.bexp_primary()

    def bexp_primary(self):
        t = self.next()
        if t.text == "(":
            inner = self.bexp()
            self.expect(")")
            return inner
        if t.kind == "int" and t.text in ("0", "1"):
            return bexp.ZERO if t.text == "0" else bexp.ONE
        if t.kind == "ident" and t.text not in KEYWORDS:
            if self.peek().text == "==":
                self.next()
                v = self.next()
                if v.kind != "int":
                    self.error("expected an integer after '=='", v)
                var_id = self.claim(t, self.registry.add_ind_var)
                self.registry.add_value(int(v.text))
                return bexp.ind(var_id, int(v.text))
            tid = self.claim(t, self.registry.add_test)
            return bexp.test(tid)
        self.error(f"expected a Boolean expression, found {t.text!r}", t)

    # -- statements ----------------------------------------------------------

    def block(self) -> list:
        self.expect("{")
        stmts = []
        while self.peek().text != "}":
            if self.peek().kind == "eof":
                self.error("unterminated block", self.peek())
            stmts.append(self.stmt())
        self.next()
        return stmts

    def block_exp(self) -> Exp:
        return syntax.seq_all(self.block())

    def stmt(self) -> Exp:
        t = self.peek()
        if t.text == "if":
            self.next()
            self.expect("(")
            guard = self.bexp()
            self.expect(")")
            then = self.block_exp()
            if self.peek().text == "else":
                self.next()
                if self.peek().text == "{":
                    other = self.block_exp()
                else:
                    other = self.stmt()
            else:
                other = syntax.SKIP
            return syntax.if_(guard, then, other)
        if t.text == "while":
            self.next()
            self.expect("(")
            guard = self.bexp()
            self.expect(")")
            return syntax.while_(guard, self.block_exp())
        if t.text == "do":
            self.next()
            body = self.block_exp()
            self.expect("while")
            self.expect("(")
            guard = self.bexp()
            self.expect(")")
            self.expect(";")
            return syntax.smart_unfold(body, syntax.while_(guard, body))
        if t.text == "assert":
            self.next()
            self.expect("(")
            guard = self.bexp()
            self.expect(")")
            self.expect(";")
            return syntax.btest(guard)
        if t.text == "break":
            self.next()
            self.expect(";")
            return syntax.BREAK_E
        if t.text == "continue":
            self.next()
            self.expect(";")
            return syntax.CONTINUE_E
        if t.text == "return":
            self.next()
            self.expect(";")
            return syntax.RETURN_E
        if t.text == "goto":
            self.next()
            name = self.next()
            if name.kind != "ident" or name.text in KEYWORDS:
                self.error("expected a label name after 'goto'", name)
            self.expect(";")
            return syntax.goto(self.claim(name, self.registry.add_label))
        if t.text == "label":
            self.next()
            name = self.next()
            if name.kind != "ident" or name.text in KEYWORDS:
                self.error("expected a label name after 'label'", name)
            self.expect(";")
            return syntax.label(self.claim(name, self.registry.add_label))
        if t.text == "diverge":
            self.next()
            self.expect(";")
            return syntax.while_(bexp.ONE, syntax.SKIP)
        if t.kind == "ident" and t.text not in KEYWORDS:
            self.next()
            follow = self.peek()
            if follow.text == ";":
                self.next()
                return syntax.act(self.claim(t, self.registry.add_action))
            if follow.text == ":=":
                self.next()
                v = self.next()
                if v.kind != "int":
                    self.error("expected an integer after ':='", v)
                self.expect(";")
                var_id = self.claim(t, self.registry.add_ind_var)
                self.registry.add_value(int(v.text))
                return syntax.assign(var_id, int(v.text))
            self.error(f"expected ';' or ':=' after {t.text!r}", follow)
        self.error(f"expected a statement, found {t.text or 'end of input'!r}", t)

    def program(self) -> Exp:
        stmts = []
        while self.peek().kind != "eof":
            stmts.append(self.stmt())
        exp = syntax.seq_all(stmts)
        tail = exp
        while tail.tag == syntax.SEQ:
            tail = tail.right
        if tail.tag != syntax.RETURN:
            exp = syntax.RETURN_E if exp is syntax.SKIP else syntax.seq(exp, syntax.RETURN_E)
        return exp


def parse_exp(source: str, registry: Registry) -> Exp:
    """Parse one program into a term (trailing return appended if absent)."""
    return Parser(source, registry).program()


def parse_program(source: str, registry: Registry) -> WellFormedProgram:
    """Parse and check well-formedness; raises ParseError or InputError."""
    return WellFormedProgram(parse_exp(source, registry), registry)
