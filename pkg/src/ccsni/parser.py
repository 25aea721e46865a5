"""Concrete syntax for programs.

    program  := decl* "main" "=" proc
    decl     := "values" "{" ident ("," ident)* "}"
              | "levels" ident ("<" ident)+
              | "agent" IDENT "(" [ident ("," ident)*] ")" "=" proc
    proc     := sum ("|" sum)*
    sum      := term ("+" term)*
    term     := "0" | prefix ["." term] | "new" chan "." term
              | IDENT "(" [arg ("," arg)*] ")" | "(" proc ")"
    prefix   := chan "(" ident ")" | chan
              | "'" chan "<" arg ">" | "'" chan
    chan     := ident "_" ident

A prefix without a continuation stands for ``prefix.0``.  A bare channel is
an input binding the dummy variable ``_``; a bare output sends ``u``.
Comments run from ``#`` to end of line.  Declarations may span lines; a
declaration ends where the next keyword starts.

When no ``values`` declaration is present, the value set is every unbound
payload the program mentions (``u`` if there are none).
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from .core import (
    DEFAULT_LATTICE,
    DEFAULT_VALUE,
    DUMMY_VAR,
    AgentDef,
    Call,
    Channel,
    Input,
    Loc,
    Nil,
    Output,
    Par,
    Process,
    Program,
    Restrict,
    SecurityLattice,
    Sum,
    free_args,
)

KEYWORDS = {"values", "levels", "agent", "main", "new"}
MAX_DEPTH = 200


class ParseError(Exception):
    def __init__(self, message: str, line: int, col: int, path: str | None = None):
        self.message = message
        self.line = line
        self.col = col
        self.path = path
        where = f"{path}:" if path else ""
        super().__init__(f"{where}{line}:{col}: {message}")


@dataclass(frozen=True)
class SourceFile:
    text: str
    path: str | None = None

    @classmethod
    def read(cls, path) -> "SourceFile":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read(), str(path))

    @classmethod
    def from_bytes(cls, data: bytes, path: str | None = None) -> "SourceFile":
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"invalid UTF-8 at byte {exc.start}", 1, 1, path) from None
        return cls(text, path)


@dataclass(frozen=True)
class Token:
    kind: str  # word, chan, num, sym, eof
    text: str
    line: int
    col: int

    @property
    def loc(self) -> Loc:
        return Loc(self.line, self.col)


_TOKEN_RE = re.compile(
    r"(?P<ws>[ \t\r\f\v]+)|(?P<nl>\n)|(?P<comment>\#[^\n]*)"
    r"|(?P<word>[A-Za-z_][A-Za-z0-9_]*)|(?P<num>[0-9]+)"
    r"|(?P<sym>[(){},=<>'.|+])"
)
_CHAN_RE = re.compile(r"^([A-Za-z][A-Za-z0-9]*)_([A-Za-z][A-Za-z0-9]*)$")
_IDENT_RE = re.compile(r"^[a-z][A-Za-z0-9]*$")
_AGENT_RE = re.compile(r"^[A-Z][A-Za-z0-9]*$")


def tokenize(text: str, path: str | None = None) -> list[Token]:
    tokens: list[Token] = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col, path)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "word":
            word = m.group()
            if word != DUMMY_VAR and "_" in word:
                if not _CHAN_RE.match(word):
                    raise ParseError(f"malformed channel {word!r} (expected name_level)", line, col, path)
                kind = "chan"
            tokens.append(Token(kind, word, line, col))
        elif kind in ("num", "sym"):
            tokens.append(Token(kind, m.group(), line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, src: SourceFile):
        self.path = src.path
        self.toks = tokenize(src.text, src.path)
        self.i = 0
        self.depth = 0

    # -- token helpers

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def error(self, message: str, tok: Token | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col, self.path)

    def at(self, kind: str, text: str | None = None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def at_sym(self, text: str) -> bool:
        return self.at("sym", text)

    def advance(self) -> Token:
        t = self.tok
        if t.kind != "eof":
            self.i += 1
        return t

    def expect_sym(self, text: str) -> Token:
        if not self.at_sym(text):
            raise self.error(f"expected {text!r}, found {self._describe()}")
        return self.advance()

    def expect_keyword(self, word: str) -> Token:
        if not self.at("word", word):
            raise self.error(f"expected {word!r}, found {self._describe()}")
        return self.advance()

    def _describe(self) -> str:
        t = self.tok
        return "end of input" if t.kind == "eof" else repr(t.text)

    def ident(self, what: str = "identifier") -> str:
        t = self.tok
        if t.kind == "word" and t.text not in KEYWORDS and (_IDENT_RE.match(t.text) or t.text == DUMMY_VAR):
            self.advance()
            return t.text
        raise self.error(f"expected {what}, found {self._describe()}")

    def value_ident(self) -> str:
        name = self.ident("value")
        if name == DUMMY_VAR:
            raise self.error("'_' is not a value", self.toks[self.i - 1])
        return name

    def chan(self) -> Channel:
        t = self.tok
        if t.kind != "chan":
            raise self.error(f"expected channel name_level, found {self._describe()}")
        self.advance()
        base, level = t.text.rsplit("_", 1)
        return Channel(base, level)

    # -- grammar

    def program(self) -> Program:
        values: tuple[str, ...] | None = None
        lattice: SecurityLattice | None = None
        agents: list[AgentDef] = []
        while not self.at("word", "main"):
            t = self.tok
            if t.kind == "eof":
                raise self.error("missing 'main = ...'")
            if self.at("word", "values"):
                if values is not None:
                    raise self.error("duplicate values declaration")
                self.advance()
                self.expect_sym("{")
                names = [self.value_ident()]
                while self.at_sym(","):
                    self.advance()
                    names.append(self.value_ident())
                self.expect_sym("}")
                if len(set(names)) != len(names):
                    raise self.error("duplicate value in declaration", t)
                values = tuple(names)
            elif self.at("word", "levels"):
                if lattice is not None:
                    raise self.error("duplicate levels declaration")
                self.advance()
                chain = [self.ident("level")]
                self.expect_sym("<")
                chain.append(self.ident("level"))
                while self.at_sym("<"):
                    self.advance()
                    chain.append(self.ident("level"))
                if len(set(chain)) != len(chain):
                    raise self.error("levels repeat in chain", t)
                lattice = SecurityLattice.chain(chain)
            elif self.at("word", "agent"):
                self.advance()
                nt = self.tok
                if nt.kind != "word" or not _AGENT_RE.match(nt.text):
                    raise self.error(f"expected agent name (capitalised), found {self._describe()}")
                self.advance()
                self.expect_sym("(")
                params: list[str] = []
                if not self.at_sym(")"):
                    params.append(self.value_ident())
                    while self.at_sym(","):
                        self.advance()
                        params.append(self.value_ident())
                self.expect_sym(")")
                self.expect_sym("=")
                body = self.proc()
                agents.append(AgentDef(nt.text, tuple(params), body, nt.loc))
            else:
                raise self.error(f"expected a declaration or 'main', found {self._describe()}")
        self.advance()
        self.expect_sym("=")
        main = self.proc()
        if not self.at("eof"):
            raise self.error(f"unexpected {self._describe()} after main process")
        if values is None:
            used: set[str] = free_args(main)
            for a in agents:
                used |= free_args(a.body) - set(a.params)
            used.discard(DUMMY_VAR)
            values = tuple(sorted(used)) or (DEFAULT_VALUE,)
        return Program(main, values, tuple(agents), lattice or DEFAULT_LATTICE)

    def proc(self) -> Process:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self.error("nesting too deep")
        start = self.tok
        parts = [self.sum()]
        while self.at_sym("|"):
            self.advance()
            parts.append(self.sum())
        self.depth -= 1
        return parts[0] if len(parts) == 1 else Par(tuple(parts), start.loc)

    def sum(self) -> Process:
        start = self.tok
        terms = [(start, self.term())]
        while self.at_sym("+"):
            self.advance()
            t = self.tok
            terms.append((t, self.term()))
        if len(terms) == 1:
            return terms[0][1]
        branches = []
        for tok, term in terms:
            if not isinstance(term, Sum):
                raise self.error("every summand must start with a prefix", tok)
            branches.extend(term.branches)
        return Sum(tuple(branches), start.loc)

    def term(self) -> Process:
        self.depth += 1
        if self.depth > MAX_DEPTH:
            raise self.error("nesting too deep")
        t = self.tok
        try:
            if t.kind == "num":
                if t.text != "0":
                    raise self.error(f"unexpected number {t.text!r}")
                self.advance()
                return Nil(t.loc)
            if self.at("word", "new"):
                self.advance()
                chan = self.chan()
                self.expect_sym(".")
                return Restrict(chan, self.term(), t.loc)
            if self.at_sym("("):
                self.advance()
                p = self.proc()
                self.expect_sym(")")
                return p
            if t.kind == "chan" or self.at_sym("'"):
                pre = self.prefix()
                if self.at_sym("."):
                    self.advance()
                    cont = self.term()
                else:
                    cont = Nil()
                return Sum(((pre, cont),), t.loc)
            if t.kind == "word" and _AGENT_RE.match(t.text) and t.text not in KEYWORDS:
                self.advance()
                self.expect_sym("(")
                args: list[str] = []
                if not self.at_sym(")"):
                    args.append(self.value_ident())
                    while self.at_sym(","):
                        self.advance()
                        args.append(self.value_ident())
                self.expect_sym(")")
                return Call(t.text, tuple(args), t.loc)
            raise self.error(f"expected a process, found {self._describe()}")
        finally:
            self.depth -= 1

    def prefix(self):
        t = self.tok
        if self.at_sym("'"):
            self.advance()
            chan = self.chan()
            if self.at_sym("<"):
                self.advance()
                arg = self.value_ident()
                self.expect_sym(">")
            else:
                arg = DEFAULT_VALUE
            return Output(chan, arg, t.loc)
        chan = self.chan()
        if self.at_sym("("):
            self.advance()
            var = self.ident("variable")
            self.expect_sym(")")
        else:
            var = DUMMY_VAR
        return Input(chan, var, t.loc)


def parse(src: SourceFile | str | bytes, path: str | None = None) -> Program:
    """Parse program text; raises ParseError with a line and column.

    Bytes are decoded as UTF-8 first.
    """
    if isinstance(src, bytes):
        src = SourceFile.from_bytes(src, path)
    elif isinstance(src, str):
        src = SourceFile(src, path)
    return _Parser(src).program()


def parse_process(text: str) -> Process:
    """Parse a bare process (no declarations)."""
    p = _Parser(SourceFile(text))
    proc = p.proc()
    if not p.at("eof"):
        raise p.error(f"unexpected {p._describe()} after process")
    return proc


# ---------------------------------------------------------------------------
# printing


def format_process(p: Process) -> str:
    if isinstance(p, Nil):
        return "0"
    if isinstance(p, Sum):
        return " + ".join(f"{pre}.{_format_term(cont)}" for pre, cont in p.branches)
    if isinstance(p, Par):
        return "(" + " | ".join(_format_part(q) for q in p.parts) + ")"
    if isinstance(p, Restrict):
        return f"new {p.chan}.{_format_term(p.body)}"
    if isinstance(p, Call):
        return f"{p.name}({', '.join(p.args)})"
    # internal nodes (the Phi sink) have no concrete syntax
    from .core import show

    return show(p)


def _format_term(p: Process) -> str:
    if isinstance(p, Sum) and len(p.branches) > 1:
        return f"({format_process(p)})"
    return format_process(p)


def _format_part(p: Process) -> str:
    # a bare Par inside a Par keeps its own parentheses from format_process
    return format_process(p)


def pretty_print(prog: Program) -> str:
    lines: list[str] = []
    if prog.lattice != DEFAULT_LATTICE:
        chain = prog.lattice.chain_order()
        if chain is None:
            raise ValueError("only chain lattices have concrete syntax; use a levels.json sidecar")
        lines.append("levels " + " < ".join(chain))
    lines.append("values {" + ", ".join(prog.values) + "}")
    for a in prog.agents:
        lines.append(f"agent {a.name}({', '.join(a.params)}) = {format_process(a.body)}")
    lines.append(f"main = {format_process(prog.main)}")
    return "\n".join(lines) + "\n"
