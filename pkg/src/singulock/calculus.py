"""Concurrent calculus: abstract syntax, parser, validator and pretty printer.

The surface syntax is documented in ``docs/grammar.md``. Parsing never
crashes: it either returns a :class:`Program` or raises :class:`ProgramError`
carrying at least one :class:`Diagnostic`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import NamedTuple, Union

DEFAULT_VALUES = frozenset({0, 1})

# diagnostic codes
LEXICAL = "E001"
SYNTAX = "E002"
UNDECLARED = "E003"
UNGUARDED = "E004"
VALUE_DOMAIN = "E005"
UNKNOWN_DEF = "E006"
DUPLICATE = "E007"
MISSING_MAIN = "E008"


class Span(NamedTuple):
    line: int
    column: int
    length: int


NO_SPAN = Span(1, 1, 0)


@dataclass(frozen=True)
class Diagnostic:
    severity: str
    code: str
    message: str
    span: Span

    def __str__(self):
        return f"{self.span.line}:{self.span.column}: {self.severity} {self.code}: {self.message}"


class ProgramError(Exception):
    """Raised when a source text does not denote a valid program."""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


def _span():
    return field(default=None, compare=False, repr=False)


# -- actions -----------------------------------------------------------------


@dataclass(frozen=True)
class Send:
    channel: str
    value: int
    span: Span | None = _span()


@dataclass(frozen=True)
class Receive:
    channel: str
    var: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Acquire:
    resource: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Release:
    resource: str
    span: Span | None = _span()


@dataclass(frozen=True)
class Tau:
    span: Span | None = _span()


Action = Union[Send, Receive, Acquire, Release, Tau]


# -- process terms -----------------------------------------------------------


@dataclass(frozen=True)
class Skip:
    span: Span | None = _span()


@dataclass(frozen=True)
class Prefix:
    action: Action
    body: "Term"
    span: Span | None = _span()


@dataclass(frozen=True)
class Choice:
    left: "Term"
    right: "Term"
    span: Span | None = _span()


@dataclass(frozen=True)
class Par:
    left: "Term"
    right: "Term"
    span: Span | None = _span()


@dataclass(frozen=True)
class Call:
    name: str
    span: Span | None = _span()


Term = Union[Skip, Prefix, Choice, Par, Call]


@dataclass(frozen=True)
class Program:
    main: Term
    definitions: dict = field(default_factory=dict)
    channels: dict = field(default_factory=dict)
    resources: frozenset = frozenset()
    values: frozenset = DEFAULT_VALUES

    def capacity(self, channel: str) -> int:
        return self.channels[channel]


# -- lexer -------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>\#[^\n]*)
  | (?P<int>-?[0-9]+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>\|~\||\|\||[;!?()=,:])
    """,
    re.VERBOSE,
)

KEYWORDS = {"skip", "def", "main", "chan", "res", "values", "acquire", "release", "tau", "none"}


class Token(NamedTuple):
    kind: str  # "int", "name", "kw", "op", "eof"
    text: str
    span: Span


def tokenize(source: str) -> list[Token]:
    tokens = []
    pos, line, col = 0, 1, 1
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ProgramError([Diagnostic("error", LEXICAL, f"unexpected character {source[pos]!r}", Span(line, col, 1))])
        kind, text = m.lastgroup, m.group()
        if kind in ("int", "name", "op"):
            if kind == "name" and text in KEYWORDS:
                kind = "kw"
            tokens.append(Token(kind, text, Span(line, col, len(text))))
        newlines = text.count("\n")
        if newlines:
            line += newlines
            col = len(text) - text.rfind("\n")
        else:
            col += len(text)
        pos = m.end()
    tokens.append(Token("eof", "", Span(line, col, 0)))
    return tokens


# -- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k=1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def fail(self, what: str):
        t = self.tok
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ProgramError([Diagnostic("error", SYNTAX, f"expected {what}, found {found}", t.span)])

    def at(self, kind, text=None) -> bool:
        t = self.tok
        return t.kind == kind and (text is None or t.text == text)

    def expect(self, kind, text=None, what=None) -> Token:
        if not self.at(kind, text):
            self.fail(what or (repr(text) if text else kind))
        return self.advance()

    def end_decl(self):
        if self.at("op", ";"):
            self.advance()
        elif not self.at("eof"):
            self.fail("';'")

    def program(self) -> Program:
        channels: dict = {}
        resources: set = set()
        values: set | None = None
        definitions: dict = {}
        main = None
        while not self.at("eof"):
            t = self.tok
            if self.at("kw", "chan"):
                self.advance()
                if self.at("kw", "none"):
                    self.advance()
                else:
                    while True:
                        name = self.expect("name", what="channel name")
                        cap = 0
                        if self.at("op", ":"):
                            self.advance()
                            ct = self.expect("int", what="channel capacity")
                            cap = int(ct.text)
                            if cap < 0:
                                raise ProgramError([Diagnostic("error", SYNTAX, "channel capacity must be >= 0", ct.span)])
                        if name.text in channels:
                            raise ProgramError([Diagnostic("error", DUPLICATE, f"channel {name.text!r} declared twice", name.span)])
                        channels[name.text] = cap
                        if not self.at("op", ","):
                            break
                        self.advance()
                self.end_decl()
            elif self.at("kw", "res"):
                self.advance()
                if self.at("kw", "none"):
                    self.advance()
                else:
                    while True:
                        name = self.expect("name", what="resource name")
                        if name.text in resources:
                            raise ProgramError([Diagnostic("error", DUPLICATE, f"resource {name.text!r} declared twice", name.span)])
                        resources.add(name.text)
                        if not self.at("op", ","):
                            break
                        self.advance()
                self.end_decl()
            elif self.at("kw", "values"):
                self.advance()
                values = set() if values is None else values
                while True:
                    values.add(int(self.expect("int", what="integer literal").text))
                    if not self.at("op", ","):
                        break
                    self.advance()
                self.end_decl()
            elif self.at("kw", "def"):
                self.advance()
                name = self.expect("name", what="definition name")
                self.expect("op", "=")
                body = self.proc()
                if name.text in definitions:
                    raise ProgramError([Diagnostic("error", DUPLICATE, f"definition {name.text!r} given twice", name.span)])
                definitions[name.text] = body
                self.end_decl()
            elif self.at("kw", "main"):
                self.advance()
                self.expect("op", "=")
                body = self.proc()
                if main is not None:
                    raise ProgramError([Diagnostic("error", DUPLICATE, "main given twice", t.span)])
                main = body
                self.end_decl()
            else:
                self.fail("a declaration (chan, res, values, def, main)")
        if main is None:
            raise ProgramError([Diagnostic("error", MISSING_MAIN, "program has no main", self.tok.span)])
        return Program(
            main=main,
            definitions=definitions,
            channels=channels,
            resources=frozenset(resources),
            values=frozenset(values) if values is not None else DEFAULT_VALUES,
        )

    def proc(self) -> Term:
        left = self.par()
        while self.at("op", "|~|"):
            t = self.advance()
            right = self.par()
            left = Choice(left, right, span=t.span)
        return left

    def par(self) -> Term:
        left = self.seq()
        while self.at("op", "||"):
            t = self.advance()
            right = self.seq()
            left = Par(left, right, span=t.span)
        return left

    def seq(self) -> Term:
        t = self.tok
        action = self.action()
        if action is None:
            return self.atom()
        self.expect("op", ";")
        return Prefix(action, self.seq(), span=t.span)

    def action(self) -> Action | None:
        t = self.tok
        if t.kind == "name" and self.peek().kind == "op" and self.peek().text in "!?":
            self.advance()
            op = self.advance()
            if op.text == "!":
                v = self.expect("int", what="value literal")
                return Send(t.text, int(v.text), span=Span(t.span.line, t.span.column, len(t.text) + 1 + len(v.text)))
            var = self.expect("name", what="variable name")
            return Receive(t.text, var.text, span=Span(t.span.line, t.span.column, len(t.text) + 1 + len(var.text)))
        if t.kind == "kw" and t.text in ("acquire", "release"):
            self.advance()
            self.expect("op", "(")
            r = self.expect("name", what="resource name")
            self.expect("op", ")")
            cls = Acquire if t.text == "acquire" else Release
            return cls(r.text, span=r.span)
        if t.kind == "kw" and t.text == "tau":
            self.advance()
            return Tau(span=t.span)
        return None

    def atom(self) -> Term:
        t = self.tok
        if self.at("kw", "skip"):
            self.advance()
            return Skip(span=t.span)
        if t.kind == "name":
            self.advance()
            return Call(t.text, span=t.span)
        if self.at("op", "("):
            self.advance()
            inner = self.proc()
            self.expect("op", ")")
            return inner
        self.fail("a process (skip, name, action or '(')")


def parse_program(source) -> Program:
    """Parse and validate ``source``; raise :class:`ProgramError` on failure."""
    if isinstance(source, (bytes, bytearray)):
        try:
            source = bytes(source).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProgramError([Diagnostic("error", LEXICAL, "source is not valid UTF-8", Span(1, exc.start + 1, 1))]) from None
    try:
        program = _Parser(tokenize(source)).program()
    except RecursionError:
        raise ProgramError([Diagnostic("error", SYNTAX, "nesting too deep", NO_SPAN)]) from None
    errors = validate(program)
    if errors:
        raise ProgramError(errors)
    return program


# -- validation --------------------------------------------------------------


def _walk_actions(term, out):
    stack = [term]
    while stack:
        t = stack.pop()
        if isinstance(t, Prefix):
            out.append(t.action)
            stack.append(t.body)
        elif isinstance(t, (Choice, Par)):
            stack.append(t.right)
            stack.append(t.left)


def _walk_calls(term, out, guarded_only=False):
    """Collect Call nodes; with ``guarded_only`` stop descending at prefixes."""
    stack = [term]
    while stack:
        t = stack.pop()
        if isinstance(t, Call):
            out.append(t)
        elif isinstance(t, Prefix):
            if not guarded_only:
                stack.append(t.body)
        elif isinstance(t, (Choice, Par)):
            stack.append(t.right)
            stack.append(t.left)


def validate(program: Program) -> list[Diagnostic]:
    diags = []

    def err(code, msg, node):
        diags.append(Diagnostic("error", code, msg, node.span or NO_SPAN))

    if not program.values:
        diags.append(Diagnostic("error", VALUE_DOMAIN, "value domain is empty", NO_SPAN))

    bodies = [program.main, *program.definitions.values()]
    for body in bodies:
        actions = []
        _walk_actions(body, actions)
        for a in actions:
            if isinstance(a, (Send, Receive)):
                if a.channel not in program.channels:
                    err(UNDECLARED, f"undeclared channel {a.channel!r}", a)
                elif isinstance(a, Send) and a.value not in program.values:
                    err(VALUE_DOMAIN, f"value {a.value} outside the declared domain", a)
            elif isinstance(a, (Acquire, Release)):
                if a.resource not in program.resources:
                    err(UNDECLARED, f"undeclared resource {a.resource!r}", a)
        calls = []
        _walk_calls(body, calls)
        for c in calls:
            if c.name not in program.definitions:
                err(UNKNOWN_DEF, f"unknown definition {c.name!r}", c)

    # unguarded call graph must be acyclic
    unguarded = {}
    for name, body in program.definitions.items():
        calls = []
        _walk_calls(body, calls, guarded_only=True)
        unguarded[name] = [c for c in calls if c.name in program.definitions]
    colour = dict.fromkeys(unguarded, 0)
    reported = set()
    for start in sorted(unguarded):
        if colour[start]:
            continue
        colour[start] = 1
        stack = [(start, iter(unguarded[start]))]
        while stack:
            name, it = stack[-1]
            call = next(it, None)
            if call is None:
                colour[name] = 2
                stack.pop()
            elif colour[call.name] == 1:
                if call.name not in reported:
                    reported.add(call.name)
                    err(UNGUARDED, f"recursion through {call.name!r} is not guarded by an action", call)
            elif colour[call.name] == 0:
                colour[call.name] = 1
                stack.append((call.name, iter(unguarded[call.name])))
    return diags


# -- pretty printing ---------------------------------------------------------


def format_action(a: Action) -> str:
    if isinstance(a, Send):
        return f"{a.channel}!{a.value}"
    if isinstance(a, Receive):
        return f"{a.channel}?{a.var}"
    if isinstance(a, Acquire):
        return f"acquire({a.resource})"
    if isinstance(a, Release):
        return f"release({a.resource})"
    return "tau"


def format_term(t: Term) -> str:
    if isinstance(t, Skip):
        return "skip"
    if isinstance(t, Call):
        return t.name
    if isinstance(t, Prefix):
        body = format_term(t.body)
        if isinstance(t.body, (Choice, Par)):
            body = f"({body})"
        return f"{format_action(t.action)}; {body}"
    if isinstance(t, Par):
        left = format_term(t.left)
        if isinstance(t.left, Choice):
            left = f"({left})"
        right = format_term(t.right)
        if isinstance(t.right, (Choice, Par)):
            right = f"({right})"
        return f"{left} || {right}"
    if isinstance(t, Choice):
        right = format_term(t.right)
        if isinstance(t.right, Choice):
            right = f"({right})"
        return f"{format_term(t.left)} |~| {right}"
    raise TypeError(f"not a process term: {t!r}")


def pretty_print(program: Program) -> str:
    lines = []
    if program.channels:
        decls = (name if cap == 0 else f"{name}:{cap}" for name, cap in sorted(program.channels.items()))
        lines.append(f"chan {', '.join(decls)};")
    if program.resources:
        lines.append(f"res {', '.join(sorted(program.resources))};")
    if program.values != DEFAULT_VALUES:
        lines.append(f"values {', '.join(str(v) for v in sorted(program.values))};")
    for name, body in program.definitions.items():
        lines.append(f"def {name} = {format_term(body)};")
    lines.append(f"main = {format_term(program.main)}")
    return "\n".join(lines) + "\n"
