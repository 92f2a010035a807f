"""Plan language: AST, parser, renderer, and vocabulary validation.

The language is function-shaped pseudocode. A plan is one header line
``def <name>():`` followed by an indented body of statements:

    # comment
    action('target')
    variable = expression
    assert('relation' to 'subject')
        else: recovery_statement
    while not PREDICATE:
        body
        if FLAG: break
    if PREDICATE:
        body
    final_answer(expression)

Arguments are single- or double-quoted strings, integers, bare
identifiers (variable references), or keyword pairs ``k=v``. Binding
expressions additionally allow calls and index paths such as
``results[0]['url']``. Rendering is canonical: 4-space indents, single
quotes, recovery on an indented ``else:`` line. Parsing accepts any
consistent indentation; re-parsing a rendered plan yields a structurally
identical tree (source line numbers do not participate in equality).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Union

__all__ = [
    "ActionCall",
    "ActionSig",
    "Argument",
    "AssertRecover",
    "Binding",
    "Call",
    "Comment",
    "CommentStyle",
    "Conditional",
    "Expr",
    "Extract",
    "KwArg",
    "Literal",
    "Loop",
    "MissingTranslation",
    "ParseError",
    "ParseErrorKind",
    "PlanAst",
    "Predicate",
    "Return",
    "Statement",
    "ValidationIssue",
    "ValidationReport",
    "VariableRef",
    "Vocabulary",
    "parse_plan",
    "parse_predicate_text",
    "render_plan",
    "render_statement",
    "validate_plan",
]

MAX_NESTING_DEPTH = 4

IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
PLAN_NAME_RE = re.compile(r"[a-z][a-z0-9_]*")
HEADER_RE = re.compile(r"^def ([a-z][a-z0-9_]*)\(\):$")
INT_RE = re.compile(r"^-?\d+$")

# Relations whose subject must name a declared world object.
OBJECT_RELATIONS = frozenset(
    {"close", "holding", "visible", "sat_on", "eaten", "grabbed", "open", "on"}
)
# Relation used for bare-identifier conditions such as loop sentinels.
FLAG_RELATION = "flag"


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Literal:
    value: Union[str, int]


@dataclass(frozen=True)
class VariableRef:
    name: str


@dataclass(frozen=True)
class KwArg:
    name: str
    value: Union[Literal, VariableRef]


Argument = Union[Literal, VariableRef, KwArg]


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple[Argument, ...] = ()


@dataclass(frozen=True)
class Extract:
    """An index path applied to a call or variable, e.g. ``xs[0]['url']``."""

    source: Union[Call, VariableRef]
    path: tuple[Union[str, int], ...]


Expr = Union[Literal, VariableRef, Call, Extract]


@dataclass(frozen=True)
class Predicate:
    """A checkable condition.

    Three surface forms map onto this one type:
      * ``'close' to 'bread'``            -> relation/subject, probe_tool None
      * ``Tool.contains('growth driver')`` -> relation "contains", probe_tool set
      * ``too_many_pages_scrolled``        -> relation "flag", subject = name
    """

    relation: str
    subject: str
    negated: bool = False
    probe_tool: str | None = None


@dataclass
class Comment:
    text: str  # verbatim, including the leading '#'
    line: int = field(default=0, compare=False)


@dataclass
class ActionCall:
    name: str
    args: tuple[Argument, ...] = ()
    line: int = field(default=0, compare=False)


@dataclass
class Binding:
    target: str
    expr: Expr = Literal(0)
    line: int = field(default=0, compare=False)


@dataclass
class AssertRecover:
    predicate: Predicate = Predicate("close", "")
    recovery: tuple["Statement", ...] = ()
    line: int = field(default=0, compare=False)


@dataclass
class Loop:
    guard: Predicate = Predicate("close", "")
    body: tuple["Statement", ...] = ()
    break_condition: Predicate | None = None
    break_index: int = 0  # body position of the break line, for rendering
    line: int = field(default=0, compare=False)


@dataclass
class Conditional:
    condition: Predicate = Predicate("close", "")
    body: tuple["Statement", ...] = ()
    line: int = field(default=0, compare=False)


@dataclass
class Return:
    expr: Expr = Literal(0)
    line: int = field(default=0, compare=False)


Statement = Union[Comment, ActionCall, Binding, AssertRecover, Loop, Conditional, Return]


@dataclass
class PlanAst:
    name: str
    body: tuple[Statement, ...]


# ---------------------------------------------------------------------------
# Errors


class ParseErrorKind(Enum):
    BAD_HEADER = "BadHeader"
    BAD_INDENT = "BadIndent"
    UNKNOWN_CONSTRUCT = "UnknownConstruct"
    DANGLING_ELSE = "DanglingElse"
    EMPTY_BODY = "EmptyBody"


class ParseError(Exception):
    def __init__(self, kind: ParseErrorKind, line: int, message: str):
        super().__init__(f"{kind.value} at line {line}: {message}")
        self.kind = kind
        self.line = line
        self.message = message


class MissingTranslation(Exception):
    def __init__(self, comment: str):
        super().__init__(f"no translation for comment: {comment!r}")
        self.comment = comment


# ---------------------------------------------------------------------------
# Tokenless scanning helpers


def _split_top_level(text: str, sep: str = ",") -> list[str]:
    """Split on `sep` outside quotes and outside (), [] nesting."""
    parts: list[str] = []
    buf: list[str] = []
    depth = 0
    quote: str | None = None
    for ch in text:
        if quote:
            buf.append(ch)
            if ch == quote:
                quote = None
            continue
        if ch in "'\"":
            quote = ch
            buf.append(ch)
        elif ch in "([":
            depth += 1
            buf.append(ch)
        elif ch in ")]":
            depth -= 1
            buf.append(ch)
        elif ch == sep and depth == 0:
            parts.append("".join(buf))
            buf = []
        else:
            buf.append(ch)
    parts.append("".join(buf))
    return parts


def _match_paren_span(text: str, open_idx: int) -> int:
    """Index of the ')' matching text[open_idx] == '(', or -1."""
    depth = 0
    quote: str | None = None
    for i in range(open_idx, len(text)):
        ch = text[i]
        if quote:
            if ch == quote:
                quote = None
            continue
        if ch in "'\"":
            quote = ch
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth == 0:
                return i
    return -1


def _parse_string_literal(text: str) -> str | None:
    if len(text) >= 2 and text[0] in "'\"" and text[-1] == text[0]:
        inner = text[1:-1]
        if text[0] not in inner:
            return inner
    return None


# ---------------------------------------------------------------------------
# Expression / predicate parsing


def _parse_argument(text: str, line: int) -> Argument:
    text = text.strip()
    if not text:
        raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, line, "empty argument")
    eq = _split_top_level(text, "=")
    if len(eq) == 2 and IDENT_RE.fullmatch(eq[0].strip()):
        value = _parse_argument(eq[1].strip(), line)
        if isinstance(value, KwArg):
            raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, line, f"bad keyword argument: {text}")
        return KwArg(eq[0].strip(), value)
    s = _parse_string_literal(text)
    if s is not None:
        return Literal(s)
    if INT_RE.fullmatch(text):
        return Literal(int(text))
    if IDENT_RE.fullmatch(text):
        return VariableRef(text)
    raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, line, f"bad argument: {text}")


def _parse_args(text: str, line: int) -> tuple[Argument, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(_parse_argument(p, line) for p in _split_top_level(text))


def _parse_call(text: str, line: int) -> Call | None:
    m = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\(", text)
    if not m:
        return None
    close = _match_paren_span(text, m.end() - 1)
    if close != len(text) - 1:
        return None
    return Call(m.group(1), _parse_args(text[m.end() : close], line))


_PATH_STEP_RE = re.compile(r"^\[([^\[\]]+)\]")


def _parse_expr(text: str, line: int) -> Expr:
    text = text.strip()
    s = _parse_string_literal(text)
    if s is not None:
        return Literal(s)
    if INT_RE.fullmatch(text):
        return Literal(int(text))
    if IDENT_RE.fullmatch(text):
        return VariableRef(text)
    # call or indexed primary
    m = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)(\()?", text)
    if not m:
        raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, line, f"bad expression: {text}")
    if m.group(2):
        close = _match_paren_span(text, m.end() - 1)
        if close < 0:
            raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, line, f"unbalanced call: {text}")
        source: Union[Call, VariableRef] = Call(m.group(1), _parse_args(text[m.end() : close], line))
        rest = text[close + 1 :]
    else:
        source = VariableRef(m.group(1))
        rest = text[m.end(1) :]
    path: list[Union[str, int]] = []
    while rest:
        step = _PATH_STEP_RE.match(rest)
        if not step:
            raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, line, f"bad expression: {text}")
        key = step.group(1).strip()
        ks = _parse_string_literal(key)
        if ks is not None:
            path.append(ks)
        elif INT_RE.fullmatch(key):
            path.append(int(key))
        else:
            raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, line, f"bad index: {key}")
        rest = rest[step.end() :]
    if not path:
        if isinstance(source, Call):
            return source
        raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, line, f"bad expression: {text}")
    return Extract(source, tuple(path))


_QUOTED_PRED_RE = re.compile(r"^'([a-z_]+)'\s+to\s+('[^']*'|\"[^\"]*\")$")
_PROBE_PRED_RE = re.compile(
    r"^([A-Za-z_][A-Za-z0-9_]*)\.([a-z_]+)\(\s*('[^']*'|\"[^\"]*\")\s*\)$"
)


def parse_predicate_text(text: str, line: int = 0) -> Predicate:
    """Parse the condition syntax used by assert/while/if."""
    text = text.strip()
    negated = False
    if text.startswith("not "):
        negated = True
        text = text[4:].strip()
    m = _QUOTED_PRED_RE.match(text)
    if m:
        return Predicate(m.group(1), m.group(2)[1:-1], negated)
    m = _PROBE_PRED_RE.match(text)
    if m:
        return Predicate(m.group(2), m.group(3)[1:-1], negated, probe_tool=m.group(1))
    if IDENT_RE.fullmatch(text):
        return Predicate(FLAG_RELATION, text, negated)
    raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, line, f"bad predicate: {text}")


# ---------------------------------------------------------------------------
# Parser


@dataclass
class _Row:
    line: int
    indent: int
    text: str


class _BreakMarker:
    def __init__(self, condition: Predicate, line: int):
        self.condition = condition
        self.line = line


def _scan_rows(source: str) -> list[_Row]:
    rows = []
    for i, raw in enumerate(source.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        indent = len(raw) - len(raw.lstrip(" "))
        if raw[indent : indent + 1] == "\t":
            raise ParseError(ParseErrorKind.BAD_INDENT, i, "tab indentation is not supported")
        rows.append(_Row(i, indent, stripped))
    return rows


def _parse_simple_statement(text: str, line: int) -> Statement:
    """Parse a block-free statement: comment, call, binding, or final_answer."""
    if text.startswith("#"):
        return Comment(text, line)
    if text.endswith(":") or text.endswith(": break") or text.startswith(("while ", "if ", "assert(", "def ")):
        raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, line, f"block statement not allowed here: {text!r}")
    if text.startswith("final_answer(") and text.endswith(")"):
        inner = text[len("final_answer(") : -1].strip()
        if not inner:
            raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, line, "final_answer needs a value")
        return Return(_parse_expr(inner, line), line)
    binding = re.match(r"^([A-Za-z_][A-Za-z0-9_]*)\s*=\s*(.+)$", text)
    if binding:
        return Binding(binding.group(1), _parse_expr(binding.group(2), line), line)
    call = _parse_call(text, line)
    if call is not None:
        for arg in call.args:
            value = arg.value if isinstance(arg, KwArg) else arg
            if not isinstance(value, (Literal, VariableRef)):
                raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, line, "bad call argument")
        return ActionCall(call.name, call.args, line)
    raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, line, f"cannot parse: {text!r}")


class _Parser:
    def __init__(self, rows: list[_Row]):
        self.rows = rows
        self.pos = 0

    def peek(self) -> _Row | None:
        return self.rows[self.pos] if self.pos < len(self.rows) else None

    def parse_plan(self) -> PlanAst:
        if not self.rows:
            raise ParseError(ParseErrorKind.BAD_HEADER, 1, "empty source")
        head = self.rows[0]
        m = HEADER_RE.match(head.text)
        if not m or head.indent != 0:
            raise ParseError(ParseErrorKind.BAD_HEADER, head.line, f"expected 'def <name>():', got {head.text!r}")
        self.pos = 1
        nxt = self.peek()
        if nxt is None:
            raise ParseError(ParseErrorKind.EMPTY_BODY, head.line, "plan has no body")
        if nxt.indent <= head.indent:
            raise ParseError(ParseErrorKind.EMPTY_BODY, nxt.line, "plan has no body")
        body = self.parse_block(enclosing_indent=0, depth=1, in_loop=False)
        trailing = self.peek()
        if trailing is not None:
            raise ParseError(
                ParseErrorKind.UNKNOWN_CONSTRUCT, trailing.line, f"content after plan body: {trailing.text!r}"
            )
        if not body:
            raise ParseError(ParseErrorKind.EMPTY_BODY, head.line, "plan has no body")
        return PlanAst(m.group(1), tuple(body))

    def parse_block(self, enclosing_indent: int, depth: int, in_loop: bool) -> list[Statement]:
        if depth > MAX_NESTING_DEPTH:
            row = self.peek()
            line = row.line if row else 0
            raise ParseError(ParseErrorKind.BAD_INDENT, line, f"nesting deeper than {MAX_NESTING_DEPTH} levels")
        first = self.peek()
        if first is None or first.indent <= enclosing_indent:
            return []
        block_indent = first.indent
        out: list[Statement] = []
        while True:
            row = self.peek()
            if row is None or row.indent < block_indent:
                break
            if row.indent > block_indent:
                raise ParseError(ParseErrorKind.BAD_INDENT, row.line, "unexpected indent")
            out.append(self.parse_statement(row, block_indent, depth, in_loop))
        # Break markers are only meaningful directly inside a loop body.
        if not in_loop:
            for item in out:
                if isinstance(item, _BreakMarker):
                    raise ParseError(
                        ParseErrorKind.UNKNOWN_CONSTRUCT, item.line, "break outside of a loop"
                    )
        return out

    def parse_statement(self, row: _Row, block_indent: int, depth: int, in_loop: bool) -> Statement:
        text = row.text
        self.pos += 1
        if text == "else:" or text.startswith("else:"):
            raise ParseError(ParseErrorKind.DANGLING_ELSE, row.line, "else without a preceding assert")
        if text.startswith("assert(") or text == "assert":
            return self.parse_assert(row, block_indent, depth)
        if text.startswith("while ") and text.endswith(":"):
            guard = parse_predicate_text(text[len("while ") : -1], row.line)
            body = self.parse_block(block_indent, depth + 1, in_loop=True)
            if not body:
                raise ParseError(ParseErrorKind.BAD_INDENT, row.line, "loop without a body")
            return self._build_loop(guard, body, row)
        if text.startswith("if ") and text.endswith(": break"):
            cond = parse_predicate_text(text[3 : -len(": break")], row.line)
            return _BreakMarker(cond, row.line)  # type: ignore[return-value]
        if text.startswith("if ") and text.endswith(":"):
            cond = parse_predicate_text(text[3:-1], row.line)
            body = self.parse_block(block_indent, depth + 1, in_loop=in_loop)
            if not body:
                raise ParseError(ParseErrorKind.BAD_INDENT, row.line, "conditional without a body")
            for item in body:
                if isinstance(item, _BreakMarker):
                    raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, item.line, "break outside of a loop")
            return Conditional(cond, tuple(body), row.line)
        return _parse_simple_statement(text, row.line)

    def parse_assert(self, row: _Row, block_indent: int, depth: int) -> AssertRecover:
        text = row.text
        open_idx = len("assert")
        if open_idx >= len(text) or text[open_idx] != "(":
            raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, row.line, f"bad assert: {text!r}")
        close = _match_paren_span(text, open_idx)
        if close < 0:
            raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, row.line, f"unbalanced assert: {text!r}")
        predicate = parse_predicate_text(text[open_idx + 1 : close], row.line)
        tail = text[close + 1 :].strip()
        recovery: list[Statement] = []
        if tail:
            if not tail.startswith("else:"):
                raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, row.line, f"bad assert tail: {tail!r}")
            inline = tail[len("else:") :].strip()
            if not inline:
                raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, row.line, "empty inline else")
            recovery = [_parse_simple_statement(inline, row.line)]
        else:
            nxt = self.peek()
            if nxt is not None and nxt.indent > block_indent and nxt.text.startswith("else"):
                if nxt.text == "else:":
                    self.pos += 1
                    recovery = self.parse_block(nxt.indent, depth + 2, in_loop=False)
                    if not recovery:
                        raise ParseError(ParseErrorKind.BAD_INDENT, nxt.line, "else without a block")
                elif nxt.text.startswith("else:"):
                    inline = nxt.text[len("else:") :].strip()
                    if not inline:
                        raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, nxt.line, "empty inline else")
                    self.pos += 1
                    recovery = [_parse_simple_statement(inline, nxt.line)]
                else:
                    raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, nxt.line, f"bad else: {nxt.text!r}")
        return AssertRecover(predicate, tuple(recovery), row.line)

    @staticmethod
    def _build_loop(guard: Predicate, body: list[Statement], row: _Row) -> Loop:
        statements: list[Statement] = []
        break_condition: Predicate | None = None
        break_index = 0
        for item in body:
            if isinstance(item, _BreakMarker):
                if break_condition is not None:
                    raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, item.line, "loop has two break lines")
                break_condition = item.condition
                break_index = len(statements)
            else:
                statements.append(item)
        if not statements:
            raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, row.line, "loop body is empty")
        return Loop(guard, tuple(statements), break_condition, break_index, row.line)


def parse_plan(source: str) -> PlanAst:
    """Parse one complete plan; raises ParseError with a line and category."""
    return _Parser(_scan_rows(source)).parse_plan()


# ---------------------------------------------------------------------------
# Rendering


class CommentStyle(Enum):
    KEEP = "keep"
    STRIP = "strip"
    TRANSLATE = "translate"


def _render_value(value: Union[str, int]) -> str:
    if isinstance(value, int):
        return str(value)
    if "'" in value:
        return f'"{value}"'
    return f"'{value}'"


def _render_argument(arg: Argument) -> str:
    if isinstance(arg, KwArg):
        return f"{arg.name}={_render_argument(arg.value)}"
    if isinstance(arg, Literal):
        return _render_value(arg.value)
    return arg.name


def render_expr(expr: Expr) -> str:
    if isinstance(expr, Literal):
        return _render_value(expr.value)
    if isinstance(expr, VariableRef):
        return expr.name
    if isinstance(expr, Call):
        return f"{expr.name}({', '.join(_render_argument(a) for a in expr.args)})"
    steps = "".join(f"[{_render_value(k)}]" for k in expr.path)
    return f"{render_expr(expr.source)}{steps}"


def render_predicate(pred: Predicate) -> str:
    if pred.probe_tool:
        core = f"{pred.probe_tool}.{pred.relation}({_render_value(pred.subject)})"
    elif pred.relation == FLAG_RELATION:
        core = pred.subject
    else:
        core = f"'{pred.relation}' to '{pred.subject}'"
    return f"not {core}" if pred.negated else core


def statement_head_text(stmt: Statement) -> str:
    """The first source line of a statement, without indentation."""
    if isinstance(stmt, Comment):
        return stmt.text
    if isinstance(stmt, ActionCall):
        return f"{stmt.name}({', '.join(_render_argument(a) for a in stmt.args)})"
    if isinstance(stmt, Binding):
        return f"{stmt.target} = {render_expr(stmt.expr)}"
    if isinstance(stmt, AssertRecover):
        return f"assert({render_predicate(stmt.predicate)})"
    if isinstance(stmt, Loop):
        return f"while {render_predicate(stmt.guard)}:"
    if isinstance(stmt, Conditional):
        return f"if {render_predicate(stmt.condition)}:"
    if isinstance(stmt, Return):
        return f"final_answer({render_expr(stmt.expr)})"
    raise TypeError(f"not a statement: {stmt!r}")


def _comment_key(text: str) -> str:
    return text.lstrip("#").strip()


def _render_statement_lines(
    stmt: Statement,
    indent: int,
    style: CommentStyle,
    translations: dict[str, str] | None,
    out: list[str],
) -> None:
    pad = "    " * indent
    if isinstance(stmt, Comment):
        if style is CommentStyle.STRIP:
            return
        text = stmt.text
        if style is CommentStyle.TRANSLATE:
            key = _comment_key(text)
            if translations is None or key not in translations:
                raise MissingTranslation(key)
            text = f"# {translations[key]}"
        out.append(pad + text)
        return
    out.append(pad + statement_head_text(stmt))
    if isinstance(stmt, AssertRecover) and stmt.recovery:
        inner: list[str] = []
        for sub in stmt.recovery:
            _render_statement_lines(sub, indent + 2, style, translations, inner)
        if not inner:
            pass  # recovery was comments only and the style stripped them
        elif len(stmt.recovery) == 1 and len(inner) == 1:
            out.append(pad + "    else: " + inner[0].strip())
        else:
            out.append(pad + "    else:")
            out.extend(inner)
    elif isinstance(stmt, Loop):
        for i, sub in enumerate(stmt.body):
            if stmt.break_condition is not None and i == stmt.break_index:
                out.append(pad + "    " + f"if {render_predicate(stmt.break_condition)}: break")
            _render_statement_lines(sub, indent + 1, style, translations, out)
        if stmt.break_condition is not None and stmt.break_index >= len(stmt.body):
            out.append(pad + "    " + f"if {render_predicate(stmt.break_condition)}: break")
    elif isinstance(stmt, Conditional):
        for sub in stmt.body:
            _render_statement_lines(sub, indent + 1, style, translations, out)


def render_statement(stmt: Statement, indent: int = 0, style: CommentStyle = CommentStyle.KEEP) -> str:
    lines: list[str] = []
    _render_statement_lines(stmt, indent, style, None, lines)
    return "\n".join(lines)


def render_plan(
    plan: PlanAst,
    style: CommentStyle = CommentStyle.KEEP,
    translations: dict[str, str] | None = None,
) -> str:
    """Canonical text for a plan. Raises MissingTranslation under TRANSLATE."""
    lines = [f"def {plan.name}():"]
    for stmt in plan.body:
        _render_statement_lines(stmt, 1, style, translations, lines)
    return "\n".join(lines) + "\n"


def strip_asserts(plan: PlanAst) -> PlanAst:
    """A copy of the plan with every AssertRecover removed (recovery included)."""

    def walk(statements: Iterable[Statement]) -> tuple[Statement, ...]:
        out: list[Statement] = []
        for stmt in statements:
            if isinstance(stmt, AssertRecover):
                continue
            if isinstance(stmt, Loop):
                stmt = Loop(stmt.guard, walk(stmt.body), stmt.break_condition, stmt.break_index, stmt.line)
                if not stmt.body:
                    continue
            elif isinstance(stmt, Conditional):
                stmt = Conditional(stmt.condition, walk(stmt.body), stmt.line)
                if not stmt.body:
                    continue
            out.append(stmt)
        return tuple(out)

    return PlanAst(plan.name, walk(plan.body))


# ---------------------------------------------------------------------------
# Vocabulary and validation


@dataclass(frozen=True)
class ActionSig:
    name: str
    arity: int
    kinds: tuple[str, ...] = ()

    def __post_init__(self):
        if self.arity < 0:
            raise ValueError(f"negative arity for {self.name}")
        if not self.kinds:
            object.__setattr__(self, "kinds", ("obj",) * self.arity)


@dataclass
class Vocabulary:
    """Declared action signatures and object identifiers.

    File format, line oriented: ``action <name>/<arity>``,
    ``object <name>``; ``#`` comments ignored.
    """

    actions: dict[str, ActionSig] = field(default_factory=dict)
    objects: set[str] = field(default_factory=set)

    def add_action(self, sig: ActionSig) -> None:
        if sig.name in self.actions:
            raise ValueError(f"duplicate action: {sig.name}")
        self.actions[sig.name] = sig

    @classmethod
    def loads(cls, text: str) -> "Vocabulary":
        vocab = cls()
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            if fields[0] == "action" and len(fields) == 2 and "/" in fields[1]:
                name, _, arity = fields[1].partition("/")
                if not IDENT_RE.fullmatch(name) or not arity.isdigit():
                    raise ValueError(f"bad action record at line {lineno}: {raw!r}")
                vocab.add_action(ActionSig(name, int(arity)))
            elif fields[0] == "object" and len(fields) == 2:
                vocab.objects.add(fields[1])
            else:
                raise ValueError(f"bad vocabulary record at line {lineno}: {raw!r}")
        return vocab

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        return cls.loads(Path(path).read_text(encoding="utf-8"))

    def dumps(self) -> str:
        lines = [f"action {a.name}/{a.arity}" for a in self.actions.values()]
        lines += [f"object {name}" for name in sorted(self.objects)]
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ValidationIssue:
    kind: str  # unknown-action | arity-mismatch | bad-argument | unknown-object | unbound-variable
    line: int
    detail: str


@dataclass
class ValidationReport:
    issues: list[ValidationIssue] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.issues

    def __len__(self) -> int:
        return len(self.issues)

    def __iter__(self):
        return iter(self.issues)


def _check_arg_kind(arg: Argument, kind: str) -> bool:
    if isinstance(arg, KwArg):
        return True  # named arguments are schema-checked downstream
    if isinstance(arg, VariableRef):
        return True
    value = arg.value
    if kind == "obj" or kind == "str":
        return isinstance(value, str)
    if kind == "int":
        return isinstance(value, int)
    return True


def validate_plan(plan: PlanAst, vocab: Vocabulary) -> ValidationReport:
    """Report every vocabulary violation; an empty report means valid."""
    report = ValidationReport()
    bound: set[str] = set()

    def check_ref(ref: VariableRef, line: int) -> None:
        if ref.name not in bound:
            report.issues.append(ValidationIssue("unbound-variable", line, ref.name))

    def check_expr(expr: Expr, line: int) -> None:
        if isinstance(expr, VariableRef):
            check_ref(expr, line)
        elif isinstance(expr, Call):
            for arg in expr.args:
                value = arg.value if isinstance(arg, KwArg) else arg
                if isinstance(value, VariableRef):
                    check_ref(value, line)
        elif isinstance(expr, Extract):
            check_expr(expr.source, line)

    def check_predicate(pred: Predicate, line: int) -> None:
        if pred.relation in OBJECT_RELATIONS and pred.subject not in vocab.objects:
            report.issues.append(ValidationIssue("unknown-object", line, pred.subject))

    def check_call(stmt: ActionCall) -> None:
        sig = vocab.actions.get(stmt.name)
        if sig is None:
            report.issues.append(ValidationIssue("unknown-action", stmt.line, stmt.name))
            return
        if len(stmt.args) != sig.arity:
            report.issues.append(
                ValidationIssue("arity-mismatch", stmt.line, f"{stmt.name} takes {sig.arity} arguments")
            )
        for arg, kind in zip(stmt.args, sig.kinds):
            if not _check_arg_kind(arg, kind):
                report.issues.append(
                    ValidationIssue("bad-argument", stmt.line, f"{stmt.name} expects {kind}")
                )
            value = arg.value if isinstance(arg, KwArg) else arg
            if isinstance(value, VariableRef):
                check_ref(value, stmt.line)

    def walk(statements: Iterable[Statement]) -> None:
        for stmt in statements:
            if isinstance(stmt, Comment):
                continue
            if isinstance(stmt, ActionCall):
                check_call(stmt)
            elif isinstance(stmt, Binding):
                check_expr(stmt.expr, stmt.line)
                bound.add(stmt.target)
            elif isinstance(stmt, AssertRecover):
                check_predicate(stmt.predicate, stmt.line)
                walk(stmt.recovery)
            elif isinstance(stmt, Loop):
                check_predicate(stmt.guard, stmt.line)
                if stmt.break_condition is not None:
                    check_predicate(stmt.break_condition, stmt.line)
                walk(stmt.body)
            elif isinstance(stmt, Conditional):
                check_predicate(stmt.condition, stmt.line)
                walk(stmt.body)
            elif isinstance(stmt, Return):
                check_expr(stmt.expr, stmt.line)

    walk(plan.body)
    return report
