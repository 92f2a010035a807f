"""Sentence-per-statement natural-language mirror of the plan language.

Every plan statement maps to one fixed English sentence with the operative
content carried in backticks, e.g.::

    Next, perform the action `walk('livingroom')`.
    Check that `'close' to 'bread'` holds; if it does not, recover by
    doing `find('bread')`, then re-check.

The mapping is mechanical in both directions so natural-language episodes
can actually execute and score. Wordier than the code format on purpose:
the two formats carry the same information statement for statement.

Restrictions (code format has none of these): recovery and loop bodies may
only contain simple statements, and a loop break may only sit at the end
of the body.
"""

from __future__ import annotations

import re

from .dsl import (
    ActionCall,
    AssertRecover,
    Binding,
    Comment,
    Conditional,
    Loop,
    ParseError,
    ParseErrorKind,
    PlanAst,
    Predicate,
    Return,
    Statement,
    parse_predicate_text,
    render_expr,
    render_predicate,
    statement_head_text,
)
from .dsl import _parse_expr, _parse_simple_statement  # shared micro-parsers

__all__ = ["NlFormatError", "render_nl_plan", "render_nl_statement", "parse_nl_plan"]


class NlFormatError(Exception):
    """The statement shape has no natural-language rendering."""


def _positive(pred: Predicate) -> str:
    return render_predicate(
        Predicate(pred.relation, pred.subject, False, pred.probe_tool)
    )


def _join_items(texts: list[str]) -> str:
    return ", then ".join(f"`{t}`" for t in texts)


def _simple_texts(statements: tuple[Statement, ...], context: str) -> list[str]:
    texts = []
    for stmt in statements:
        if isinstance(stmt, (ActionCall, Binding, Return)):
            texts.append(statement_head_text(stmt))
        elif isinstance(stmt, Comment):
            continue  # comments inside nested bodies have no NL slot
        else:
            raise NlFormatError(f"{type(stmt).__name__} not supported inside {context} in NL form")
    if not texts:
        raise NlFormatError(f"empty {context} in NL form")
    return texts


def render_nl_statement(stmt: Statement) -> str:
    if isinstance(stmt, Comment):
        return f"Note: {stmt.text.lstrip('#').strip()}"
    if isinstance(stmt, ActionCall):
        return f"Next, perform the action `{statement_head_text(stmt)}`."
    if isinstance(stmt, Binding):
        return (
            f"Next, evaluate `{render_expr(stmt.expr)}` and store the result "
            f"in variable `{stmt.target}`."
        )
    if isinstance(stmt, AssertRecover):
        if not stmt.recovery:
            return f"Check that `{render_predicate(stmt.predicate)}` holds before continuing."
        items = _join_items(_simple_texts(stmt.recovery, "recovery"))
        return (
            f"Check that `{render_predicate(stmt.predicate)}` holds; "
            f"if it does not, recover by doing {items}, then re-check."
        )
    if isinstance(stmt, Loop):
        if stmt.break_condition is not None and stmt.break_index < len(stmt.body):
            raise NlFormatError("NL loops only support a trailing break")
        items = _join_items(_simple_texts(stmt.body, "loop body"))
        mode = "until" if stmt.guard.negated else "while"
        sentence = f"Repeat {mode} `{_positive(stmt.guard) if stmt.guard.negated else render_predicate(stmt.guard)}` holds: do {items}"
        if stmt.break_condition is not None:
            sentence += f", stopping early if `{render_predicate(stmt.break_condition)}`"
        return sentence + "."
    if isinstance(stmt, Conditional):
        items = _join_items(_simple_texts(stmt.body, "conditional body"))
        return f"If `{render_predicate(stmt.condition)}` holds, do {items}."
    if isinstance(stmt, Return):
        return f"Finally, respond with `{render_expr(stmt.expr)}`."
    raise TypeError(f"not a statement: {stmt!r}")


def render_nl_plan(plan: PlanAst, include_comments: bool = True) -> str:
    lines = [f"Plan for {plan.name}:"]
    for stmt in plan.body:
        if isinstance(stmt, Comment) and not include_comments:
            continue
        lines.append(render_nl_statement(stmt))
    return "\n".join(lines) + "\n"


_NL_HEADER_RE = re.compile(r"^Plan for ([a-z][a-z0-9_]*):$")
_NL_NOTE_RE = re.compile(r"^Note: (.*)$")
_NL_ACTION_RE = re.compile(r"^Next, perform the action `([^`]*)`\.$")
_NL_BINDING_RE = re.compile(
    r"^Next, evaluate `([^`]*)` and store the result in variable `([^`]*)`\.$"
)
_NL_ASSERT_PLAIN_RE = re.compile(r"^Check that `([^`]*)` holds before continuing\.$")
_NL_ASSERT_RECOVER_RE = re.compile(
    r"^Check that `([^`]*)` holds; if it does not, recover by doing (.*), then re-check\.$"
)
_NL_LOOP_RE = re.compile(
    r"^Repeat (until|while) `([^`]*)` holds: do (.*?)(?:, stopping early if `([^`]*)`)?\.$"
)
_NL_IF_RE = re.compile(r"^If `([^`]*)` holds, do (.*)\.$")
_NL_RETURN_RE = re.compile(r"^Finally, respond with `([^`]*)`\.$")


def _parse_items(text: str, line: int) -> tuple[Statement, ...]:
    codes = re.findall(r"`([^`]*)`", text)
    if not codes:
        raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, line, f"no steps found in: {text!r}")
    return tuple(_parse_simple_statement(code, line) for code in codes)


def parse_nl_plan(text: str, default_name: str = "plan") -> PlanAst:
    """Invert render_nl_plan. Unknown sentences raise ParseError."""
    name = default_name
    body: list[Statement] = []
    lineno = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        m = _NL_HEADER_RE.match(line)
        if m:
            name = m.group(1)
            continue
        m = _NL_NOTE_RE.match(line)
        if m:
            body.append(Comment(f"# {m.group(1)}", lineno))
            continue
        m = _NL_ACTION_RE.match(line)
        if m:
            stmt = _parse_simple_statement(m.group(1), lineno)
            if not isinstance(stmt, ActionCall):
                raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, lineno, f"not an action: {m.group(1)!r}")
            body.append(stmt)
            continue
        m = _NL_BINDING_RE.match(line)
        if m:
            body.append(Binding(m.group(2), _parse_expr(m.group(1), lineno), lineno))
            continue
        m = _NL_ASSERT_PLAIN_RE.match(line)
        if m:
            body.append(AssertRecover(parse_predicate_text(m.group(1), lineno), (), lineno))
            continue
        m = _NL_ASSERT_RECOVER_RE.match(line)
        if m:
            recovery = _parse_items(m.group(2), lineno)
            body.append(AssertRecover(parse_predicate_text(m.group(1), lineno), recovery, lineno))
            continue
        m = _NL_LOOP_RE.match(line)
        if m:
            mode, pred_text, items_text, break_text = m.groups()
            guard = parse_predicate_text(pred_text, lineno)
            if mode == "until":
                guard = Predicate(guard.relation, guard.subject, True, guard.probe_tool)
            loop_body = _parse_items(items_text, lineno)
            break_condition = parse_predicate_text(break_text, lineno) if break_text else None
            body.append(Loop(guard, loop_body, break_condition, len(loop_body), lineno))
            continue
        m = _NL_IF_RE.match(line)
        if m:
            body.append(
                Conditional(parse_predicate_text(m.group(1), lineno), _parse_items(m.group(2), lineno), lineno)
            )
            continue
        m = _NL_RETURN_RE.match(line)
        if m:
            body.append(Return(_parse_expr(m.group(1), lineno), lineno))
            continue
        raise ParseError(ParseErrorKind.UNKNOWN_CONSTRUCT, lineno, f"cannot read step: {line!r}")
    if not body:
        raise ParseError(ParseErrorKind.EMPTY_BODY, lineno or 1, "no steps found")
    return PlanAst(name, tuple(body))
