"""Parser for ``approx`` directive clauses.

Accepted clauses (any order, optionally comma separated, optionally preceded
by ``#pragma approx``)::

    memo(in:TSIZE:THRESHOLD[:TPERWARP])    input memoization
    memo(out:HSIZE:PSIZE:THRESHOLD)        output memoization
    perfo(KIND:ARG)                        small|large|herded_small|herded_large:M,
                                           ini|fini:PERCENT
    level(thread|warp|team|block)
    in(SECTION[, SECTION...])  out(SECTION[, SECTION...])

A section is ``base[index]``, ``base[index:len]`` or ``base[index:len:stride]``
where ``index`` is affine in a single loop variable and ``len``/``stride`` are
integers or identifiers.  See docs/grammar.md for the full grammar.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field

from .hierarchy import HierarchyLevel
from .iact import IactConfig
from .perfo import PerfoConfig, PerfoKind
from .taf import TafConfig

DEFAULT_WARP_SIZE = 32


class Technique(enum.Enum):
    TAF = "taf"
    IACT = "iact"
    PERFO = "perfo"


class DiagnosticKind(enum.Enum):
    SYNTAX = "syntax"
    UNKNOWN_CLAUSE = "unknown-clause"
    UNKNOWN_KEYWORD = "unknown-keyword"
    ARITY = "arity"
    NON_NUMERIC = "non-numeric"
    INVALID_VALUE = "invalid-value"
    DUPLICATE_CLAUSE = "duplicate-clause"
    CONFLICTING_TECHNIQUE = "conflicting-technique"
    MISSING_TECHNIQUE = "missing-technique"
    MISSING_INPUT = "missing-input"
    MISSING_OUTPUT = "missing-output"


class DirectiveError(ValueError):
    def __init__(self, kind: DiagnosticKind, message: str, offset: int, text: str = ""):
        self.kind = kind
        self.offset = offset
        self.text = text
        super().__init__(f"{kind.value} at byte {offset}: {message}")


@dataclass(frozen=True)
class IndexExpr:
    """``coef * var + offset``; ``var`` is None for a constant index."""

    coef: int = 0
    var: str | None = None
    offset: int = 0

    def evaluate(self, env: dict[str, int] | int | None = None) -> int:
        if self.var is None:
            return self.offset
        v = env if isinstance(env, int) else (env or {})[self.var]
        return self.coef * v + self.offset

    def __str__(self):
        if self.var is None or self.coef == 0:
            return str(self.offset)
        s = self.var if self.coef == 1 else f"{self.var}*{self.coef}"
        if self.offset > 0:
            s += f"+{self.offset}"
        elif self.offset < 0:
            s += f"-{-self.offset}"
        return s


@dataclass(frozen=True)
class ArraySection:
    base: str
    start: IndexExpr
    length: int | str = 1
    stride: int | str = 1

    def __post_init__(self):
        if isinstance(self.length, int) and self.length < 1:
            raise ValueError("section length must be >= 1")
        if isinstance(self.stride, int) and self.stride < 1:
            raise ValueError("section stride must be >= 1")

    def indices(self, env: dict[str, int] | int) -> list[int]:
        """Element indices touched for a given loop variable binding."""
        sym = env if isinstance(env, dict) else {}
        length = self.length if isinstance(self.length, int) else sym[self.length]
        stride = self.stride if isinstance(self.stride, int) else sym[self.stride]
        s = self.start.evaluate(env)
        return [s + k * stride for k in range(length)]

    def __str__(self):
        if self.length == 1 and self.stride == 1:
            return f"{self.base}[{self.start}]"
        if self.stride == 1:
            return f"{self.base}[{self.start}:{self.length}]"
        return f"{self.base}[{self.start}:{self.length}:{self.stride}]"


@dataclass(frozen=True)
class ApproxSpec:
    technique: Technique
    taf: TafConfig | None = None
    iact: IactConfig | None = None
    perfo: PerfoConfig | None = None
    level: HierarchyLevel = HierarchyLevel.THREAD
    inputs: tuple[ArraySection, ...] = ()
    outputs: tuple[ArraySection, ...] = ()

    def __post_init__(self):
        payloads = {Technique.TAF: self.taf, Technique.IACT: self.iact,
                    Technique.PERFO: self.perfo}
        present = [t for t, p in payloads.items() if p is not None]
        if present != [self.technique]:
            raise ValueError(f"{self.technique.value} spec must carry exactly its own payload")
        if self.technique is Technique.IACT and not self.inputs:
            raise ValueError("input memoization needs at least one input section")
        if self.technique in (Technique.IACT, Technique.TAF) and not self.outputs:
            raise ValueError(f"{self.technique.value} needs at least one output section")

    @classmethod
    def make_taf(cls, h: int, p: int, threshold: float, level=HierarchyLevel.THREAD,
                 outputs=None):
        outputs = outputs or (ArraySection("out", IndexExpr(1, "i")),)
        return cls(Technique.TAF, taf=TafConfig(h, p, threshold), level=level,
                   outputs=tuple(outputs))

    @classmethod
    def make_iact(cls, table_size: int, threshold: float, tables_per_warp: int = 32,
                  level=HierarchyLevel.THREAD, input_dims: int = 1, output_dims: int = 1):
        ins = (ArraySection("in", IndexExpr(input_dims, "i"), input_dims),)
        outs = (ArraySection("out", IndexExpr(output_dims, "i"), output_dims),)
        cfg = IactConfig(table_size, threshold, tables_per_warp, input_dims, output_dims)
        return cls(Technique.IACT, iact=cfg, level=level, inputs=ins, outputs=outs)

    @classmethod
    def make_perfo(cls, kind: PerfoKind | str, arg: int, level=HierarchyLevel.THREAD):
        kind = PerfoKind(kind) if isinstance(kind, str) else kind
        cfg = PerfoConfig(kind, m=arg) if kind.is_modulus else PerfoConfig(kind, skip_percent=arg)
        return cls(Technique.PERFO, perfo=cfg, level=level)


# -- lexer -------------------------------------------------------------------

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r\n]+|\\\n)
  | (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?[fF]?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<punct>[()\[\]:,*+\-\#])
""", re.VERBOSE)


@dataclass
class Token:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[Token]:
    toks, pos = [], 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise DirectiveError(DiagnosticKind.SYNTAX, f"unexpected character {text[pos]!r}",
                                 _byte_offset(text, pos), text)
        if m.lastgroup != "ws":
            toks.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    toks.append(Token("eof", "", len(text)))
    return toks


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


# -- parser ------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str, warp_size: int):
        self.text = text
        self.warp_size = warp_size
        self.toks = _tokenize(text)
        self.i = 0

    def error(self, kind: DiagnosticKind, msg: str, tok: Token | None = None):
        tok = tok or self.peek()
        raise DirectiveError(kind, msg, _byte_offset(self.text, tok.pos), self.text)

    def peek(self) -> Token:
        return self.toks[self.i]

    def take(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> Token:
        t = self.peek()
        if t.text != text:
            shown = repr(t.text) if t.kind != "eof" else "end of input"
            self.error(DiagnosticKind.SYNTAX, f"expected {text!r}, found {shown}")
        return self.take()

    def parse(self) -> ApproxSpec:
        if self.peek().text == "#":
            self.take()
            if self.peek().text != "pragma":
                self.error(DiagnosticKind.SYNTAX, "expected 'pragma' after '#'")
            self.take()
        if self.peek().text == "approx":
            self.take()

        seen: dict[str, Token] = {}
        technique = None
        payload = {}
        level = HierarchyLevel.THREAD
        inputs: list[tuple[ArraySection, Token]] = []
        outputs: list[tuple[ArraySection, Token]] = []

        while self.peek().kind != "eof":
            if self.peek().text == ",":
                self.take()
                continue
            tok = self.take()
            if tok.kind != "ident":
                self.error(DiagnosticKind.SYNTAX, f"expected a clause name, found {tok.text!r}", tok)
            name = tok.text
            if name in ("memo", "perfo"):
                if technique is not None:
                    kind = (DiagnosticKind.DUPLICATE_CLAUSE if name in seen
                            else DiagnosticKind.CONFLICTING_TECHNIQUE)
                    self.error(kind, f"second technique clause {name!r}", tok)
                seen[name] = tok
                technique, payload = (self.memo() if name == "memo" else self.perfo())
            elif name == "level":
                if name in seen:
                    self.error(DiagnosticKind.DUPLICATE_CLAUSE, "duplicate 'level' clause", tok)
                seen[name] = tok
                level = self.level()
            elif name in ("in", "out"):
                target = inputs if name == "in" else outputs
                target.extend(self.sections())
            else:
                self.error(DiagnosticKind.UNKNOWN_CLAUSE, f"unknown clause {name!r}", tok)

        if technique is None:
            self.error(DiagnosticKind.MISSING_TECHNIQUE, "directive has no memo or perfo clause",
                       self.toks[0])
        end = self.peek()
        if technique is Technique.IACT and not inputs:
            self.error(DiagnosticKind.MISSING_INPUT, "input memoization requires in(...)", end)
        if technique in (Technique.IACT, Technique.TAF) and not outputs:
            self.error(DiagnosticKind.MISSING_OUTPUT,
                       f"{'input' if technique is Technique.IACT else 'output'} "
                       "memoization requires out(...)", end)

        if technique is Technique.IACT:
            in_dims = self.dims(inputs)
            out_dims = self.dims(outputs)
            raw = payload["iact"]
            payload["iact"] = IactConfig(raw["tsize"], raw["threshold"], raw["tperwarp"],
                                         in_dims, out_dims)
        elif technique is Technique.TAF:
            for sec, t in outputs:
                if not isinstance(sec.length, int):
                    self.error(DiagnosticKind.INVALID_VALUE,
                               "memoized sections need an integer length", t)
        return ApproxSpec(technique, level=level,
                          inputs=tuple(s for s, _ in inputs),
                          outputs=tuple(s for s, _ in outputs), **payload)

    def dims(self, sections) -> int:
        total = 0
        for sec, t in sections:
            if not isinstance(sec.length, int):
                self.error(DiagnosticKind.INVALID_VALUE,
                           "memoized sections need an integer length", t)
            total += sec.length
        return total

    # clause arguments are NUMBER tokens separated by ':'
    def args(self) -> list[tuple[Token, str]]:
        out = []
        while True:
            start = self.peek()
            parts = []
            while self.peek().text not in (":", ")") and self.peek().kind != "eof":
                parts.append(self.take())
            if not parts:
                self.error(DiagnosticKind.SYNTAX, "empty argument")
            out.append((start, "".join(p.text for p in parts), parts))
            if self.peek().text == ":":
                self.take()
                continue
            self.expect(")")
            return [(t, s) for t, s, _ in out], [p for _, _, p in out]

    def number(self, tok: Token, text: str, parts, integer: bool):
        body = text
        if len(parts) == 2 and parts[0].text == "-":
            sign, body = -1, parts[1].text
            kind = parts[1].kind
        elif len(parts) == 1:
            sign, kind = 1, parts[0].kind
        else:
            self.error(DiagnosticKind.NON_NUMERIC, f"{text!r} is not a number", tok)
        if kind == "ident" and body.lower() in ("inf", "infinity") and not integer:
            return sign * math.inf
        if kind != "num":
            self.error(DiagnosticKind.NON_NUMERIC, f"{text!r} is not a number", tok)
        if integer:
            if not body.isdigit():
                self.error(DiagnosticKind.INVALID_VALUE, f"{text!r} must be an integer", tok)
            return sign * int(body)
        return sign * float(body.rstrip("fF"))

    def memo(self):
        self.expect("(")
        kw = self.take()
        if kw.text not in ("in", "out"):
            self.error(DiagnosticKind.UNKNOWN_KEYWORD,
                       f"memo keyword must be 'in' or 'out', found {kw.text!r}", kw)
        self.expect(":")
        args, parts = self.args()
        if kw.text == "in":
            if len(args) not in (2, 3):
                self.error(DiagnosticKind.ARITY,
                           f"memo(in:...) takes 2 or 3 arguments, got {len(args)}", kw)
            tsize = self.number(*args[0], parts[0], integer=True)
            thr = self.number(*args[1], parts[1], integer=False)
            tpw = self.number(*args[2], parts[2], integer=True) if len(args) == 3 else self.warp_size
            self.check(tsize >= 1, "table size must be >= 1", args[0][0])
            self.check(thr >= 0, "threshold must be >= 0", args[1][0])
            self.check(tpw >= 1 and self.warp_size % tpw == 0,
                       f"tables per warp must divide the warp size {self.warp_size}",
                       args[2][0] if len(args) == 3 else kw)
            return Technique.IACT, {"iact": {"tsize": tsize, "threshold": thr, "tperwarp": tpw}}
        if len(args) != 3:
            self.error(DiagnosticKind.ARITY, f"memo(out:...) takes 3 arguments, got {len(args)}", kw)
        h = self.number(*args[0], parts[0], integer=True)
        p = self.number(*args[1], parts[1], integer=True)
        thr = self.number(*args[2], parts[2], integer=False)
        self.check(h >= 1, "history size must be >= 1", args[0][0])
        self.check(p >= 1, "prediction size must be >= 1", args[1][0])
        self.check(thr >= 0, "threshold must be >= 0", args[2][0])
        return Technique.TAF, {"taf": TafConfig(h, p, thr)}

    def perfo(self):
        self.expect("(")
        kw = self.take()
        try:
            kind = PerfoKind(kw.text)
        except ValueError:
            self.error(DiagnosticKind.UNKNOWN_KEYWORD, f"unknown perforation kind {kw.text!r}", kw)
        self.expect(":")
        args, parts = self.args()
        if len(args) != 1:
            self.error(DiagnosticKind.ARITY, f"perfo({kind.value}:...) takes 1 argument, "
                       f"got {len(args)}", kw)
        val = self.number(*args[0], parts[0], integer=True)
        if kind.is_modulus:
            self.check(val >= 2, "perforation modulus must be >= 2", args[0][0])
            cfg = PerfoConfig(kind, m=val)
        else:
            self.check(1 <= val <= 99, "skip percent must be in 1..99", args[0][0])
            cfg = PerfoConfig(kind, skip_percent=val)
        return Technique.PERFO, {"perfo": cfg}

    def check(self, ok: bool, msg: str, tok: Token):
        if not ok:
            self.error(DiagnosticKind.INVALID_VALUE, msg, tok)

    def level(self) -> HierarchyLevel:
        self.expect("(")
        tok = self.take()
        try:
            lvl = HierarchyLevel.parse(tok.text)
        except ValueError:
            self.error(DiagnosticKind.UNKNOWN_KEYWORD, f"unknown hierarchy level {tok.text!r}", tok)
        self.expect(")")
        return lvl

    def sections(self) -> list[tuple[ArraySection, Token]]:
        self.expect("(")
        out = []
        while True:
            tok = self.peek()
            out.append((self.section(), tok))
            if self.peek().text == ",":
                self.take()
                continue
            self.expect(")")
            return out

    def section(self) -> ArraySection:
        base = self.take()
        if base.kind != "ident":
            self.error(DiagnosticKind.SYNTAX, f"expected an array name, found {base.text!r}", base)
        self.expect("[")
        start = self.index_expr()
        length: int | str = 1
        stride: int | str = 1
        if self.peek().text == ":":
            self.take()
            length = self.extent("length")
            if self.peek().text == ":":
                self.take()
                stride = self.extent("stride")
        self.expect("]")
        return ArraySection(base.text, start, length, stride)

    def extent(self, what: str) -> int | str:
        tok = self.take()
        if tok.kind == "ident":
            return tok.text
        if tok.kind != "num" or not tok.text.isdigit():
            self.error(DiagnosticKind.INVALID_VALUE,
                       f"section {what} must be a positive integer or a name", tok)
        v = int(tok.text)
        self.check(v >= 1, f"section {what} must be >= 1", tok)
        return v

    def index_expr(self) -> IndexExpr:
        coef, var, offset = 0, None, 0
        sign = 1
        first = True
        while True:
            tok = self.peek()
            if tok.text in ("+", "-"):
                self.take()
                sign = 1 if tok.text == "+" else -1
            elif not first:
                break
            first = False
            c, v = self.term()
            if v is None:
                offset += sign * c
            else:
                if var is not None and v != var:
                    self.error(DiagnosticKind.INVALID_VALUE,
                               "index must be affine in a single loop variable", tok)
                var = v
                coef += sign * c
            sign = 1
            if self.peek().text not in ("+", "-"):
                break
        if var is not None and coef == 0:
            var = None
        return IndexExpr(coef, var, offset)

    def term(self) -> tuple[int, str | None]:
        c1, v1 = self.factor()
        if self.peek().text == "*":
            tok = self.take()
            c2, v2 = self.factor()
            if v1 is not None and v2 is not None:
                self.error(DiagnosticKind.INVALID_VALUE, "index must be affine", tok)
            return c1 * c2, v1 or v2
        return c1, v1

    def factor(self) -> tuple[int, str | None]:
        tok = self.take()
        neg = 1
        if tok.text == "-":
            neg, tok = -1, self.take()
        if tok.kind == "ident":
            return neg, tok.text
        if tok.kind == "num" and tok.text.isdigit():
            return neg * int(tok.text), None
        self.error(DiagnosticKind.SYNTAX, f"bad index term {tok.text!r}", tok)


def parse_directive(text: str, warp_size: int = DEFAULT_WARP_SIZE) -> ApproxSpec:
    """Parse one directive into an :class:`ApproxSpec`.

    Raises :class:`DirectiveError` with a diagnostic kind and byte offset.
    """
    return _Parser(text, warp_size).parse()


def _fmt_real(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return repr(float(x))


def unparse(spec: ApproxSpec, warp_size: int = DEFAULT_WARP_SIZE) -> str:
    """Canonical directive text; clauses equal to their defaults are left out."""
    parts = []
    if spec.technique is Technique.TAF:
        c = spec.taf
        parts.append(f"memo(out:{c.h_size}:{c.p_size}:{_fmt_real(c.threshold)})")
    elif spec.technique is Technique.IACT:
        c = spec.iact
        tail = "" if c.tables_per_warp == warp_size else f":{c.tables_per_warp}"
        parts.append(f"memo(in:{c.table_size}:{_fmt_real(c.threshold)}{tail})")
    else:
        c = spec.perfo
        parts.append(f"perfo({c.kind.value}:{c.arg})")
    if spec.level is not HierarchyLevel.THREAD:
        parts.append(f"level({spec.level.value})")
    if spec.inputs:
        parts.append("in(" + ", ".join(str(s) for s in spec.inputs) + ")")
    if spec.outputs:
        parts.append("out(" + ", ".join(str(s) for s in spec.outputs) + ")")
    return " ".join(parts)
