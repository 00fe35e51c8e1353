"""Plan language: statement types, parser and canonical printer.

Grammar::

    plan     := stmt*
    stmt     := "saturate" INT
              | "wait" DURATION
              | "mw" ("on" FREQ | "off")
              | "laser" ("on" | "off")
              | "pulse" NUMBER PHASE
              | "acquire" INT DURATION
              | "loop" INT "{" stmt* "}"
    DURATION := NUMBER ("s" | "ms" | "us")
    FREQ     := NUMBER ("GHz" | "MHz")
    PHASE    := "x" | "y" | "-x" | "-y"

Statements may be separated by newlines or ``;``. ``#`` starts a comment.
A unit may follow its number directly (``40us``) or after whitespace.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..errors import ParseError

DURATION_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6}
FREQ_UNITS = {"GHz": 1.0, "MHz": 1e-3}
PHASES = ("x", "y", "-x", "-y")
PHASE_DEG = {"x": 0.0, "y": 90.0, "-x": 180.0, "-y": 270.0}


@dataclass(frozen=True)
class Quantity:
    value: float
    unit: str

    def __str__(self):
        return f"{_num(self.value)}{self.unit}"


@dataclass(frozen=True)
class Duration(Quantity):
    @property
    def seconds(self):
        return self.value * DURATION_UNITS[self.unit]


@dataclass(frozen=True)
class Frequency(Quantity):
    @property
    def ghz(self):
        return self.value * FREQ_UNITS[self.unit]


@dataclass(frozen=True)
class Stmt:
    pos: tuple = field(default=(0, 0), compare=False, repr=False, kw_only=True)


@dataclass(frozen=True)
class Saturate(Stmt):
    n: int


@dataclass(frozen=True)
class Wait(Stmt):
    duration: Duration


@dataclass(frozen=True)
class MwOn(Stmt):
    frequency: Frequency


@dataclass(frozen=True)
class MwOff(Stmt):
    pass


@dataclass(frozen=True)
class LaserOn(Stmt):
    pass


@dataclass(frozen=True)
class LaserOff(Stmt):
    pass


@dataclass(frozen=True)
class Pulse(Stmt):
    angle: float  # degrees
    phase: str


@dataclass(frozen=True)
class Acquire(Stmt):
    n_points: int
    dwell: Duration


@dataclass(frozen=True)
class Loop(Stmt):
    count: int
    body: tuple


@dataclass(frozen=True)
class PlanAst:
    statements: tuple = ()

    def __len__(self):
        return len(self.statements)

    def __iter__(self):
        return iter(self.statements)


def _num(x):
    if float(x).is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(float(x))


# --- lexer -------------------------------------------------------------------

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<comment>\#[^\n]*)
  | (?P<nl>\n)
  | (?P<semi>;)
  | (?P<lbrace>\{)
  | (?P<rbrace>\})
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)(?P<unit>[A-Za-zµ]+)?
  | (?P<word>-?[A-Za-zµ_][A-Za-z0-9_µ]*)
    """,
    re.VERBOSE,
)


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int
    unit: str | None = None


def tokenize(text):
    tokens = []
    line, line_start, i = 1, 0, 0
    while i < len(text):
        m = _TOKEN.match(text, i)
        col = i - line_start + 1
        if not m:
            raise ParseError(f"unexpected character {text[i]!r}", line, col)
        kind = m.lastgroup if m.lastgroup != "unit" else "number"
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "number":
            tokens.append(Token("number", m.group("number"), line, col, m.group("unit")))
        elif kind in ("word", "lbrace", "rbrace"):
            tokens.append(Token(kind, m.group(), line, col))
        i = m.end()
    tokens.append(Token("eof", "", line, i - line_start + 1))
    return tokens


# --- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, text):
        self.tokens = tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, tok, msg):
        return ParseError(msg, tok.line, tok.col)

    def integer(self, what):
        tok = self.next()
        if tok.kind != "number" or tok.unit or not tok.text.isdigit():
            raise self.error(tok, f"expected integer {what}, got {tok.text or 'end of input'!r}")
        value = int(tok.text)
        if value < 1:
            raise self.error(tok, f"{what} must be at least 1")
        return value

    def number(self, what):
        tok = self.next()
        if tok.kind != "number" or tok.unit:
            raise self.error(tok, f"expected {what}, got {tok.text or 'end of input'!r}")
        return float(tok.text), tok

    def quantity(self, cls, units, what):
        tok = self.next()
        if tok.kind != "number":
            raise self.error(tok, f"expected {what}, got {tok.text or 'end of input'!r}")
        unit = tok.unit
        if unit is None:
            nxt = self.peek()
            if nxt.kind == "word" and nxt.text in units or nxt.text == "µs":
                unit = self.next().text
            else:
                raise self.error(tok, f"{what} needs a unit ({'|'.join(units)})")
        if unit == "µs":
            unit = "us"
        if unit not in units:
            raise self.error(tok, f"malformed unit {unit!r} for {what}; expected one of "
                                  f"{', '.join(units)}")
        value = float(tok.text)
        if not value > 0:
            raise self.error(tok, f"{what} must be positive")
        return cls(value, unit)

    def keyword(self, options):
        tok = self.next()
        if tok.kind != "word" or tok.text not in options:
            raise self.error(tok, f"expected one of {', '.join(options)}, got "
                                  f"{tok.text or 'end of input'!r}")
        return tok.text

    def statements(self, closing=None):
        out = []
        while True:
            tok = self.peek()
            if tok.kind == "eof":
                if closing is not None:
                    raise self.error(closing, "unbalanced braces: '{' is never closed")
                return tuple(out)
            if tok.kind == "rbrace":
                if closing is None:
                    raise self.error(tok, "unbalanced braces: unexpected '}'")
                self.next()
                return tuple(out)
            out.append(self.statement())

    def statement(self):
        tok = self.next()
        pos = (tok.line, tok.col)
        if tok.kind != "word":
            raise self.error(tok, f"expected a statement keyword, got {tok.text!r}")
        kw = tok.text
        if kw == "saturate":
            return Saturate(self.integer("pulse count"), pos=pos)
        if kw == "wait":
            return Wait(self.quantity(Duration, DURATION_UNITS, "duration"), pos=pos)
        if kw == "mw":
            if self.keyword(("on", "off")) == "on":
                return MwOn(self.quantity(Frequency, FREQ_UNITS, "frequency"), pos=pos)
            return MwOff(pos=pos)
        if kw == "laser":
            return (LaserOn if self.keyword(("on", "off")) == "on" else LaserOff)(pos=pos)
        if kw == "pulse":
            angle, atok = self.number("pulse angle in degrees")
            if not 0 < angle < 360:
                raise self.error(atok, "pulse angle must lie in (0, 360) degrees")
            return Pulse(angle, self.keyword(PHASES), pos=pos)
        if kw == "acquire":
            n = self.integer("point count")
            return Acquire(n, self.quantity(Duration, DURATION_UNITS, "dwell time"), pos=pos)
        if kw == "loop":
            count = self.integer("loop count")
            brace = self.next()
            if brace.kind != "lbrace":
                raise self.error(brace, "expected '{' after loop count")
            return Loop(count, self.statements(closing=brace), pos=pos)
        raise self.error(tok, f"unknown keyword {kw!r}")


def parse_plan(text) -> PlanAst:
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    return PlanAst(_Parser(text).statements())


def format_plan(ast, indent="  ") -> str:
    """Canonical text form; ``parse_plan(format_plan(a)) == a``."""
    lines = []

    def emit(stmts, depth):
        pad = indent * depth
        for s in stmts:
            if isinstance(s, Loop):
                lines.append(f"{pad}loop {s.count} {{")
                emit(s.body, depth + 1)
                lines.append(f"{pad}}}")
            else:
                lines.append(pad + format_statement(s))

    emit(ast.statements if isinstance(ast, PlanAst) else ast, 0)
    return "\n".join(lines) + ("\n" if lines else "")


def format_statement(s) -> str:
    if isinstance(s, Saturate):
        return f"saturate {s.n}"
    if isinstance(s, Wait):
        return f"wait {s.duration}"
    if isinstance(s, MwOn):
        return f"mw on {s.frequency}"
    if isinstance(s, MwOff):
        return "mw off"
    if isinstance(s, LaserOn):
        return "laser on"
    if isinstance(s, LaserOff):
        return "laser off"
    if isinstance(s, Pulse):
        return f"pulse {_num(s.angle)} {s.phase}"
    if isinstance(s, Acquire):
        return f"acquire {s.n_points} {s.dwell}"
    if isinstance(s, Loop):
        return f"loop {s.count} {{ " + "; ".join(format_statement(b) for b in s.body) + " }"
    raise TypeError(f"not a plan statement: {s!r}")
