"""Task and suite fixture files, plus the plan library used by fixtures.

Task file, line oriented::

    task eat_bread_on_sofa
    kind embodied
    world worlds/house.world
    init agent kitchen
    goal sat_on(sofa)
    goal eaten(bread)
    example throw_away_apple

QA tasks use ``kind qa`` with ``corpus <dir>``, ``question <text>`` and
``gold <text>`` records instead of world/init/goal. A suite file lists task
file paths (relative to itself), one per line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .dsl import PlanAst, parse_plan
from .world import GoalSpec, World, load_world, parse_goal_line

__all__ = ["PlanLibrary", "TaskSpec", "load_suite", "load_task"]


@dataclass
class TaskSpec:
    name: str
    kind: str = "embodied"
    world: World | None = None
    init_room: str | None = None
    goals: GoalSpec | None = None
    examples: tuple[str, ...] = ()
    question: str | None = None
    gold: str | None = None
    corpus_dir: Path | None = None
    path: Path | None = None


def load_task(path: str | Path) -> TaskSpec:
    path = Path(path)
    base = path.parent
    name = None
    kind = "embodied"
    world = None
    init_room = None
    goals = []
    examples = []
    question = None
    gold = None
    corpus_dir = None
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        if key == "task":
            name = rest
        elif key == "kind":
            if rest not in ("embodied", "qa"):
                raise ValueError(f"{path}:{lineno}: unknown task kind {rest!r}")
            kind = rest
        elif key == "world":
            world = load_world(base / rest)
        elif key == "init":
            fields = rest.split()
            if len(fields) != 2 or fields[0] != "agent":
                raise ValueError(f"{path}:{lineno}: expected 'init agent <room>'")
            init_room = fields[1]
        elif key == "goal":
            goals.append(parse_goal_line(rest))
        elif key == "example":
            examples.append(rest)
        elif key == "question":
            question = rest
        elif key == "gold":
            gold = rest
        elif key == "corpus":
            corpus_dir = base / rest
        else:
            raise ValueError(f"{path}:{lineno}: unknown task record {key!r}")
    if not name:
        raise ValueError(f"{path}: task file has no 'task' record")
    if kind == "embodied":
        if world is None or init_room is None or not goals:
            raise ValueError(f"{path}: embodied task needs world, init and goals")
    else:
        if question is None or gold is None or corpus_dir is None:
            raise ValueError(f"{path}: qa task needs corpus, question and gold")
    return TaskSpec(
        name=name,
        kind=kind,
        world=world,
        init_room=init_room,
        goals=GoalSpec(tuple(goals)) if goals else None,
        examples=tuple(examples),
        question=question,
        gold=gold,
        corpus_dir=corpus_dir,
        path=path,
    )


def load_suite(path: str | Path) -> list[TaskSpec]:
    path = Path(path)
    tasks = []
    for raw in path.read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tasks.append(load_task(path.parent / line))
    return tasks


@dataclass
class PlanLibrary:
    """Pre-authored plans, one ``<task>.<stage>.plan`` file per stage."""

    plans: dict[tuple[str, str], PlanAst] = field(default_factory=dict)

    @classmethod
    def load(cls, plans_dir: str | Path) -> "PlanLibrary":
        library = cls()
        for plan_path in sorted(Path(plans_dir).glob("*.plan")):
            parts = plan_path.name.split(".")
            if len(parts) != 3:
                raise ValueError(f"plan file must be named <task>.<stage>.plan: {plan_path.name}")
            task, stage = parts[0], parts[1]
            library.plans[(task, stage)] = parse_plan(plan_path.read_text(encoding="utf-8"))
        return library

    def get(self, task: str, stage: str) -> PlanAst | None:
        return self.plans.get((task, stage))

    def initial(self, task: str) -> PlanAst:
        plan = self.get(task, "initial")
        if plan is None:
            raise KeyError(f"no initial plan for task {task!r}")
        return plan

    def updated(self, task: str) -> PlanAst | None:
        return self.get(task, "updated")
