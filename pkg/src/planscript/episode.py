"""The plan / execute / feedback / replan loop for embodied tasks.

One episode: build the task prompt, ask the backend for a plan, execute it
against the world, and while the replan budget lasts, send the serialized
failure back for an updated plan. A completion that cannot be parsed (or
that fails vocabulary validation) consumes one replan attempt and the same
prompt is re-sent with a one-line note.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dsl import ParseError, parse_plan, validate_plan
from .executor import ExecLimits, ExecutionTrace, LimitExceeded, execute
from .gateway import ModelError, TokenUsage
from .nlformat import parse_nl_plan
from .prompts import (
    PromptOptions,
    add_parse_failure_note,
    build_prompt_parts,
    build_replan_prompt,
    initial_plan_name,
    updated_plan_name,
)
from .tasks import TaskSpec
from .world import UnknownObject, WorldState, initial_state, score_goals, world_vocabulary

__all__ = ["EpisodeResult", "ModelExchange", "run_episode"]


@dataclass(frozen=True)
class ModelExchange:
    prompt: str
    completion: str
    usage: TokenUsage


@dataclass
class EpisodeResult:
    task_name: str
    final_state: WorldState
    traces: list[ExecutionTrace] = field(default_factory=list)
    transcript: list[ModelExchange] = field(default_factory=list)
    replans_used: int = 0
    aborted: str | None = None
    prompt_fallbacks: int = 0  # comment translations that fell back to the original

    @property
    def model_calls(self) -> int:
        return len(self.transcript)

    @property
    def usage(self) -> TokenUsage:
        total = TokenUsage()
        for exchange in self.transcript:
            total = total + exchange.usage
        return total

    @property
    def trace_ok(self) -> bool:
        return bool(self.traces) and self.traces[-1].completed

    def score(self, goals) -> tuple[int, float]:
        return score_goals(self.final_state, self.trace_ok, goals)


def _parse_completion(completion: str, header: str, expected_name: str, opts: PromptOptions):
    if opts.format == "nl":
        return parse_nl_plan(completion, default_name=expected_name)
    text = completion if completion.lstrip().startswith("def ") else header + "\n" + completion
    return parse_plan(text)


def run_episode(
    task: TaskSpec,
    backend,
    budget: int = 3,
    *,
    opts: PromptOptions = PromptOptions(),
    limits: ExecLimits = ExecLimits(),
    example_plans: list = (),
) -> EpisodeResult:
    """Run one embodied episode; makes at most budget + 1 model calls."""
    if budget < 0:
        raise ValueError("budget must be >= 0")
    if task.kind != "embodied":
        raise ValueError(f"run_episode handles embodied tasks, got kind {task.kind!r}")
    vocab = world_vocabulary(task.world)
    objects = sorted(task.world.objects)
    state = initial_state(task.world, task.init_room)
    result = EpisodeResult(task.name, state)

    preamble, section, fallbacks = build_prompt_parts(
        vocab, objects, list(example_plans), task.name, opts
    )
    result.prompt_fallbacks = fallbacks
    prompt = preamble + "\n" + section
    expected_name = initial_plan_name(task.name)

    while True:
        try:
            completion, usage = backend.complete(prompt)
        except ModelError as exc:
            result.aborted = str(exc)
            return result
        result.transcript.append(ModelExchange(prompt, completion, usage))

        plan = None
        try:
            plan = _parse_completion(completion, f"def {expected_name}():", expected_name, opts)
        except ParseError:
            plan = None
        if plan is not None:
            report = validate_plan(plan, vocab)
            if not report.ok:
                plan = None
        if plan is None:
            if result.replans_used < budget:
                result.replans_used += 1
                prompt = add_parse_failure_note(prompt, opts)
                continue
            return result

        try:
            state, trace = execute(plan, state, limits)
        except (LimitExceeded, UnknownObject) as exc:
            result.final_state = state
            result.aborted = str(exc)
            return result
        result.traces.append(trace)
        result.final_state = state
        if trace.completed:
            return result
        if result.replans_used >= budget:
            return result
        result.replans_used += 1
        expected_name = updated_plan_name(task.name)
        prompt = build_replan_prompt(preamble, trace.failure, task.name, opts)
