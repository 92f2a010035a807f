"""Steps a plan through the world, with local assert recovery and escalation.

Execution semantics:
  * statements run in order; comments are logged but not counted
  * an assert whose predicate is false runs its recovery block once, then
    re-evaluates exactly once; still-false asserts and failed actions halt
    execution and populate an ErrorTrace
  * loops are bounded by ExecLimits; a loop that exhausts its budget exits
    through its break condition if it has one, otherwise LimitExceeded
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .dsl import (
    ActionCall,
    AssertRecover,
    Binding,
    Comment,
    Conditional,
    Extract,
    FLAG_RELATION,
    KwArg,
    Literal,
    Loop,
    ParseError,
    PlanAst,
    Predicate,
    Return,
    Statement,
    VariableRef,
    parse_plan,
    statement_head_text,
)
from .world import (
    ActionOutcome,
    UnknownObject,
    WorldState,
    apply_action,
    eval_predicate,
    held_facts,
    observations_for,
)

__all__ = [
    "ErrorTrace",
    "ExecLimits",
    "ExecutionTrace",
    "LimitExceeded",
    "LOOP_SENTINEL",
    "StepRecord",
    "execute",
    "parse_feedback_block",
    "serialize_error_trace",
]

LOOP_SENTINEL = "too_many_pages_scrolled"


class LimitExceeded(Exception):
    """A loop or step budget was exhausted."""


@dataclass(frozen=True)
class ExecLimits:
    max_steps: int = 100
    max_loop_iters: int = 20


@dataclass
class StepRecord:
    statement: Statement
    ok: bool
    outcome: ActionOutcome | None = None
    note: str = ""


@dataclass
class ErrorTrace:
    plan_name: str
    executed_prefix: list[Statement]
    error_step: str
    feedback_message: str
    environmental_information: list[str]
    items_in_hand: list[str]


@dataclass
class ExecutionTrace:
    steps: list[StepRecord] = field(default_factory=list)
    completed: bool = False
    failure: ErrorTrace | None = None
    attempted: int = 0
    succeeded: int = 0

    @property
    def step_counts(self) -> tuple[int, int]:
        return self.attempted, self.succeeded


class _Halt(Exception):
    """Internal: unrecoverable failure carrying the prepared ErrorTrace."""

    def __init__(self, trace: ErrorTrace):
        self.trace = trace


class _Finished(Exception):
    """Internal: a final_answer statement ended the plan early."""


class _Runner:
    def __init__(self, plan: PlanAst, state: WorldState, limits: ExecLimits):
        self.plan = plan
        self.state = state
        self.limits = limits
        self.trace = ExecutionTrace()
        self.env: dict[str, object] = {}

    # -- helpers

    def _log(self, stmt: Statement, ok: bool, outcome: ActionOutcome | None = None, note: str = "") -> None:
        self.trace.steps.append(StepRecord(stmt, ok, outcome, note))

    def _error_trace(self, stmt: Statement, message: str, observations: tuple[str, ...]) -> ErrorTrace:
        prefix = [rec.statement for rec in self.trace.steps[:-1]]
        return ErrorTrace(
            plan_name=self.plan.name,
            executed_prefix=prefix,
            error_step=statement_head_text(stmt).removesuffix(":"),
            feedback_message=message,
            environmental_information=list(observations),
            items_in_hand=list(self.state.held),
        )

    def _resolve_args(self, call: ActionCall) -> ActionCall:
        resolved = []
        for arg in call.args:
            if isinstance(arg, KwArg) and isinstance(arg.value, VariableRef):
                arg = KwArg(arg.name, Literal(self._lookup(arg.value.name, call.line)))
            elif isinstance(arg, VariableRef):
                arg = Literal(self._lookup(arg.name, call.line))
            resolved.append(arg)
        return ActionCall(call.name, tuple(resolved), call.line)

    def _lookup(self, name: str, line: int):
        if name not in self.env:
            raise UnknownObject(f"unbound variable {name!r} at line {line}")
        value = self.env[name]
        if not isinstance(value, (str, int)):
            raise ValueError(f"variable {name!r} does not name an object")
        return value

    def _eval_condition(self, pred: Predicate, iteration: int) -> bool:
        if pred.relation == FLAG_RELATION:
            if pred.subject == LOOP_SENTINEL:
                value = iteration >= self.limits.max_loop_iters
            else:
                raise UnknownObject(f"unknown flag: {pred.subject}")
            return not value if pred.negated else value
        if pred.probe_tool is not None:
            raise ValueError(f"probe predicate {pred.probe_tool}.{pred.relation} has no meaning here")
        return eval_predicate(self.state, pred)

    # -- statement dispatch

    def run(self) -> None:
        try:
            self._run_block(self.plan.body, in_recovery=False)
            self.trace.completed = True
        except _Finished:
            self.trace.completed = True
        except _Halt as halt:
            self.trace.failure = halt.trace

    def _run_block(self, statements: tuple[Statement, ...], in_recovery: bool) -> None:
        for stmt in statements:
            self._run_statement(stmt, in_recovery)

    def _run_statement(self, stmt: Statement, in_recovery: bool) -> None:
        if isinstance(stmt, Comment):
            self._log(stmt, True, note="skipped")
            return
        if isinstance(stmt, ActionCall):
            self._run_action(stmt)
            return
        if isinstance(stmt, Binding):
            self.env[stmt.target] = self._eval_expr(stmt.expr, stmt.line)
            self._log(stmt, True)
            return
        if isinstance(stmt, AssertRecover):
            self._run_assert(stmt, in_recovery)
            return
        if isinstance(stmt, Loop):
            self._run_loop(stmt, in_recovery)
            return
        if isinstance(stmt, Conditional):
            if self._eval_condition(stmt.condition, 0):
                self._log(stmt, True)
                self._run_block(stmt.body, in_recovery)
            else:
                self._log(stmt, True, note="condition false")
            return
        if isinstance(stmt, Return):
            self._log(stmt, True)
            raise _Finished()
        raise TypeError(f"not a statement: {stmt!r}")

    def _run_action(self, stmt: ActionCall) -> None:
        if self.trace.attempted >= self.limits.max_steps:
            raise LimitExceeded(f"step budget of {self.limits.max_steps} exhausted")
        self.trace.attempted += 1
        new_state, outcome = apply_action(self.state, self._resolve_args(stmt))
        self._log(stmt, outcome.ok, outcome)
        if outcome.ok:
            self.trace.succeeded += 1
            self.state = new_state
        else:
            raise _Halt(self._error_trace(stmt, outcome.feedback_message, outcome.observations))

    def _run_assert(self, stmt: AssertRecover, in_recovery: bool) -> None:
        if self._eval_condition(stmt.predicate, 0):
            self._log(stmt, True)
            return
        if stmt.recovery and not in_recovery:
            self._run_block(stmt.recovery, in_recovery=True)
            if self._eval_condition(stmt.predicate, 0):
                self._log(stmt, True, note="recovered")
                return
        self._log(stmt, False, note="assert failed")
        pred = stmt.predicate
        message = f"not {pred.relation} to <{pred.subject}> when [ASSERT]"
        if self.state.has_object(pred.subject):
            observations = observations_for(self.state, pred.subject)
        else:
            observations = tuple(held_facts(self.state))
        raise _Halt(self._error_trace(stmt, message, observations))

    def _run_loop(self, stmt: Loop, in_recovery: bool) -> None:
        self._log(stmt, True)
        iteration = 0
        while True:
            if not self._eval_condition(stmt.guard, iteration):
                return
            if iteration >= self.limits.max_loop_iters:
                if stmt.break_condition is not None:
                    return
                raise LimitExceeded(f"loop budget of {self.limits.max_loop_iters} exhausted")
            for i, sub in enumerate(stmt.body):
                if (
                    stmt.break_condition is not None
                    and i == stmt.break_index
                    and self._eval_condition(stmt.break_condition, iteration)
                ):
                    return
                self._run_statement(sub, in_recovery)
            if (
                stmt.break_condition is not None
                and stmt.break_index >= len(stmt.body)
                and self._eval_condition(stmt.break_condition, iteration)
            ):
                return
            iteration += 1

    def _eval_expr(self, expr, line: int):
        if isinstance(expr, Literal):
            return expr.value
        if isinstance(expr, VariableRef):
            if expr.name not in self.env:
                raise UnknownObject(f"unbound variable {expr.name!r} at line {line}")
            return self.env[expr.name]
        if isinstance(expr, Extract):
            value = self._eval_expr(expr.source, line)
            for key in expr.path:
                value = value[key]
            return value
        raise ValueError(f"calls cannot be evaluated as values here (line {line})")


def execute(
    plan: PlanAst, state: WorldState, limits: ExecLimits = ExecLimits()
) -> tuple[WorldState, ExecutionTrace]:
    """Run the plan against the state; never partially applies a failed action."""
    runner = _Runner(plan, state, limits)
    runner.run()
    return runner.state, runner.trace


# ---------------------------------------------------------------------------
# Error-feedback block serialization (the replanning wire format)


def _elide_body(statements: list[Statement], include_failing_run: bool) -> list[str]:
    lines: list[str] = []
    run_open = False
    for stmt in statements:
        if isinstance(stmt, Comment):
            lines.append("    " + stmt.text)
            run_open = False
        elif not run_open:
            lines.append("    ...")
            run_open = True
    if include_failing_run and not run_open:
        lines.append("    ...")
    return lines


def _full_body(statements: list[Statement]) -> list[str]:
    from .dsl import render_statement

    lines: list[str] = []
    for stmt in statements:
        lines.extend(render_statement(stmt, indent=1).splitlines())
    return lines


def serialize_error_trace(trace: ErrorTrace, next_plan_name: str, full_prefix: bool = False) -> str:
    """Render the five-part feedback block followed by the next plan header."""
    lines = [f"def {trace.plan_name}():"]
    if full_prefix:
        lines.extend(_full_body(trace.executed_prefix))
    else:
        lines.extend(_elide_body(trace.executed_prefix, include_failing_run=True))
    lines.append(f'error_step = "{trace.error_step}"')
    lines.append("feedback_message = (")
    lines.append(f"  {json.dumps(trace.feedback_message, ensure_ascii=False)}")
    lines.append(")")
    if trace.environmental_information:
        lines.append("environmental_information = [")
        for i, fact in enumerate(trace.environmental_information):
            comma = "," if i < len(trace.environmental_information) - 1 else ""
            lines.append(f"  {json.dumps(fact, ensure_ascii=False)}{comma}")
        lines.append("]")
    else:
        lines.append("environmental_information = []")
    lines.append(f"items_in_hand = {json.dumps(trace.items_in_hand, ensure_ascii=False)}")
    lines.append(f"def {next_plan_name}():")
    return "\n".join(lines) + "\n"


_HEADER_LINE_RE = re.compile(r"^def ([a-z][a-z0-9_]*)\(\):$")


def parse_feedback_block(text: str) -> tuple[ErrorTrace, str]:
    """Invert serialize_error_trace; elided prefixes come back empty."""
    lines = [ln.rstrip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty feedback block")
    head = _HEADER_LINE_RE.match(lines[0])
    if not head:
        raise ValueError(f"feedback block must start with a plan header, got {lines[0]!r}")
    plan_name = head.group(1)

    idx = 1
    prefix_lines: list[str] = []
    while idx < len(lines) and not lines[idx].startswith("error_step ="):
        prefix_lines.append(lines[idx])
        idx += 1
    if idx == len(lines):
        raise ValueError("feedback block has no error_step")

    executed_prefix: list[Statement] = []
    if prefix_lines and not any(ln.strip() == "..." for ln in prefix_lines):
        dummy = "def parsed_prefix():\n" + "\n".join(prefix_lines) + "\n"
        try:
            executed_prefix = list(parse_plan(dummy).body)
        except ParseError as exc:
            raise ValueError(f"unparseable feedback prefix: {exc}") from exc

    m = re.match(r'^error_step = "(.*)"$', lines[idx])
    if not m:
        raise ValueError(f"bad error_step line: {lines[idx]!r}")
    error_step = m.group(1)
    idx += 1

    if lines[idx] != "feedback_message = (":
        raise ValueError(f"bad feedback_message opener: {lines[idx]!r}")
    idx += 1
    feedback_message = json.loads(lines[idx].strip())
    idx += 1
    if lines[idx] != ")":
        raise ValueError(f"bad feedback_message closer: {lines[idx]!r}")
    idx += 1

    env: list[str] = []
    if lines[idx] == "environmental_information = []":
        idx += 1
    elif lines[idx] == "environmental_information = [":
        idx += 1
        while lines[idx] != "]":
            env.append(json.loads(lines[idx].strip().rstrip(",")))
            idx += 1
        idx += 1
    else:
        raise ValueError(f"bad environmental_information: {lines[idx]!r}")

    m = re.match(r"^items_in_hand = (\[.*\])$", lines[idx])
    if not m:
        raise ValueError(f"bad items_in_hand line: {lines[idx]!r}")
    items = json.loads(m.group(1))
    idx += 1

    tail = _HEADER_LINE_RE.match(lines[idx]) if idx < len(lines) else None
    if not tail:
        raise ValueError("feedback block must end with the next plan header")
    trace = ErrorTrace(plan_name, executed_prefix, error_step, feedback_message, env, items)
    return trace, tail.group(1)
