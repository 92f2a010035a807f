"""Task prompt assembly for both prompt formats and all comment styles.

The code-format prompt mirrors the canonical layout: an action import
header with argument-kind markers, the object list, an example-task block,
and a partial function header as the very last line so the model completes
a plan body. The natural-language prompt carries the same information
sentence by sentence and contains no plan-header line at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .dsl import Comment, CommentStyle, PlanAst, Vocabulary, render_plan, strip_asserts
from .executor import ErrorTrace, serialize_error_trace
from .nlformat import render_nl_plan

__all__ = [
    "PromptOptions",
    "build_prompt_parts",
    "build_replan_prompt",
    "build_task_prompt",
    "initial_plan_name",
    "prepare_example",
    "translate_comments",
    "updated_plan_name",
]

PARSE_FAILURE_NOTE = "the previous reply could not be read as a plan; reply with a plan only"


@dataclass(frozen=True)
class PromptOptions:
    format: str = "code"  # code | nl
    comments: str = "en"  # none | en | cn
    include_asserts: bool = True
    translations: dict[str, str] = field(default_factory=dict, hash=False)

    def __post_init__(self):
        if self.format not in ("code", "nl"):
            raise ValueError(f"unknown format {self.format!r}")
        if self.comments not in ("none", "en", "cn"):
            raise ValueError(f"unknown comment style {self.comments!r}")


def initial_plan_name(task_name: str) -> str:
    return f"initial_plan_for_{task_name}"


def updated_plan_name(task_name: str) -> str:
    return f"updated_plan_for_{task_name}"


def translate_comments(plan: PlanAst, table: dict[str, str]) -> tuple[PlanAst, int]:
    """Replace comment texts via the table; untranslated ones stay, counted."""
    misses = 0

    def walk(statements):
        nonlocal misses
        out = []
        for stmt in statements:
            if isinstance(stmt, Comment):
                key = stmt.text.lstrip("#").strip()
                if key in table:
                    stmt = Comment(f"# {table[key]}", stmt.line)
                else:
                    misses += 1
            elif hasattr(stmt, "body"):
                stmt = replace(stmt, body=walk(stmt.body))
            elif hasattr(stmt, "recovery"):
                stmt = replace(stmt, recovery=walk(stmt.recovery))
            out.append(stmt)
        return tuple(out)

    return PlanAst(plan.name, walk(plan.body)), misses


def prepare_example(plan: PlanAst, opts: PromptOptions) -> tuple[PlanAst, int]:
    """Apply assert gating and comment styling to a few-shot example plan."""
    misses = 0
    if not opts.include_asserts:
        plan = strip_asserts(plan)
    if opts.comments == "cn":
        plan, misses = translate_comments(plan, opts.translations)
    return plan, misses


def render_plan_text(plan: PlanAst, opts: PromptOptions) -> tuple[str, int]:
    """Render a plan in the option-selected format; returns (text, cn misses)."""
    plan, misses = prepare_example(plan, opts)
    if opts.format == "nl":
        return render_nl_plan(plan, include_comments=opts.comments != "none"), misses
    style = CommentStyle.STRIP if opts.comments == "none" else CommentStyle.KEEP
    return render_plan(plan, style), misses


def _action_marker(sig) -> str:
    if sig.arity == 0:
        return sig.name
    return f"{sig.name}<{', '.join(sig.kinds)}>"


def _code_preamble(vocab: Vocabulary, objects: list[str], examples: list[tuple[str, PlanAst]], opts) -> tuple[str, int]:
    misses = 0
    imports = ", ".join(_action_marker(sig) for sig in vocab.actions.values())
    lines = [f"from actions import {imports}"]
    lines.append("objects = [" + ", ".join(f'"{o}"' for o in objects) + "]")
    lines.append("")
    lines.append("# Example tasks")
    for task_name, plan in examples:
        text, m = render_plan_text(PlanAst(task_name, plan.body), opts)
        misses += m
        lines.append(text.rstrip("\n"))
    lines.append("")
    return "\n".join(lines), misses


def _nl_preamble(vocab: Vocabulary, objects: list[str], examples: list[tuple[str, PlanAst]], opts) -> tuple[str, int]:
    misses = 0
    actions = ", ".join(
        f"{sig.name} (takes {sig.arity} argument{'s' if sig.arity != 1 else ''})"
        for sig in vocab.actions.values()
    )
    lines = [
        "You are an agent that completes tasks by carrying out steps one at a time.",
        f"The actions available to you are: {actions}.",
        "The objects present are: " + ", ".join(objects) + ".",
        "",
        "Here are worked example tasks.",
    ]
    for task_name, plan in examples:
        lines.append(f'Example task "{task_name}":')
        text, m = render_plan_text(plan, opts)
        misses += m
        # drop the "Plan for <name>:" line; the example heading already names it
        lines.extend(text.rstrip("\n").splitlines()[1:])
        lines.append("")
    return "\n".join(lines), misses


def build_prompt_parts(
    vocab: Vocabulary,
    objects: list[str],
    examples: list[tuple[str, PlanAst]],
    task_name: str,
    opts: PromptOptions = PromptOptions(),
) -> tuple[str, str, int]:
    """(preamble, task section, cn-fallback count); prompt = preamble + section."""
    if opts.format == "code":
        preamble, misses = _code_preamble(vocab, objects, examples, opts)
        section = f"# Next Task\ndef {initial_plan_name(task_name)}():\n"
        return preamble, section, misses
    preamble, misses = _nl_preamble(vocab, objects, examples, opts)
    section = (
        f'Your task is "{task_name}". Write one step per line in the same style, starting now.\n'
    )
    return preamble, section, misses


def build_task_prompt(
    vocab: Vocabulary,
    objects: list[str],
    examples: list[tuple[str, PlanAst]],
    task_name: str,
    opts: PromptOptions = PromptOptions(),
) -> str:
    preamble, section, _ = build_prompt_parts(vocab, objects, examples, task_name, opts)
    return preamble + "\n" + section


def _nl_feedback(trace: ErrorTrace, task_name: str) -> str:
    lines = [
        "The previous attempt failed.",
        f"The failing step was `{trace.error_step}`.",
        f'The environment reported: "{trace.feedback_message}".',
    ]
    if trace.environmental_information:
        lines.append("Observations: " + "; ".join(trace.environmental_information) + ".")
    if trace.items_in_hand:
        lines.append("Items in hand: " + ", ".join(trace.items_in_hand) + ".")
    else:
        lines.append("Items in hand: none.")
    lines.append(
        f'Write an updated plan for "{task_name}", one step per line, starting now.'
    )
    return "\n".join(lines) + "\n"


def build_replan_prompt(
    preamble: str, trace: ErrorTrace, task_name: str, opts: PromptOptions = PromptOptions()
) -> str:
    """Preamble plus the serialized failure; never any earlier failure."""
    if opts.format == "code":
        return preamble + "\n" + serialize_error_trace(trace, updated_plan_name(task_name))
    return preamble + "\n" + _nl_feedback(trace, task_name)


def add_parse_failure_note(prompt: str, opts: PromptOptions = PromptOptions()) -> str:
    """Same prompt with a one-line parse-failure note before its final line.

    The final line stays last (it is the header / instruction that elicits
    the completion). Idempotent so repeated garbage does not stack notes.
    """
    note = f"# note: {PARSE_FAILURE_NOTE}" if opts.format == "code" else f"Note: {PARSE_FAILURE_NOTE}"
    lines = prompt.rstrip("\n").splitlines()
    if note in lines:
        return prompt
    return "\n".join(lines[:-1] + [note, lines[-1]]) + "\n"
