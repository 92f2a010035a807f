"""Deterministic household world: action preconditions, state updates, goals.

State is a value; every action application returns a fresh state (or the
input state unchanged on failure). Failure feedback uses exactly three
message templates so the replanning loop can rely on their shape:

    not <relation> to <obj> when [<ACTION>]
    <obj> not found in <room>
    hands full when [GRAB]
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from pathlib import Path

from .dsl import ActionCall, KwArg, Literal, Predicate, VariableRef

__all__ = [
    "ActionOutcome",
    "GoalSpec",
    "HAND_CAPACITY",
    "UnknownObject",
    "World",
    "WorldState",
    "ACTION_NAMES",
    "apply_action",
    "eval_predicate",
    "initial_state",
    "load_world",
    "parse_goal_line",
    "score_goals",
    "world_vocabulary",
]

HAND_CAPACITY = 2

ACTION_NAMES = (
    "walk",
    "find",
    "grab",
    "sit",
    "eat",
    "open",
    "close_obj",
    "switch_on",
    "put_back",
)

# Object attributes assignable in world files.
KNOWN_ATTRIBUTES = frozenset({"sittable", "edible", "container"})

FEEDBACK_TEMPLATES = (
    re.compile(r"^not [a-z_]+ to <[A-Za-z0-9_]+> when \[[A-Z_]+\]$"),
    re.compile(r"^<[A-Za-z0-9_]+> not found in <[A-Za-z0-9_]+>$"),
    re.compile(r"^hands full when \[GRAB\]$"),
)


class UnknownObject(Exception):
    """An action or predicate referenced a name absent from the world."""


@dataclass(frozen=True)
class World:
    """Static world description: rooms and object placements/attributes."""

    rooms: tuple[str, ...]
    objects: dict[str, str]  # object -> initial room
    attributes: dict[str, frozenset[str]]


@dataclass(frozen=True)
class WorldState:
    rooms: frozenset[str]
    object_locations: dict[str, str]
    object_states: dict[str, frozenset[str]]
    agent_room: str
    proximity: frozenset[str]
    visible: frozenset[str]
    held: tuple[str, ...]
    attributes: dict[str, frozenset[str]]

    def flags(self, obj: str) -> frozenset[str]:
        return self.object_states.get(obj, frozenset())

    def has_object(self, name: str) -> bool:
        return name in self.object_states

    def room_objects(self, room: str) -> frozenset[str]:
        return frozenset(o for o, r in self.object_locations.items() if r == room)


@dataclass(frozen=True)
class ActionOutcome:
    ok: bool
    feedback_message: str = ""
    observations: tuple[str, ...] = ()


@dataclass(frozen=True)
class GoalSpec:
    predicates: tuple[Predicate, ...]

    def __post_init__(self):
        if not self.predicates:
            raise ValueError("goal spec has no predicates")


# ---------------------------------------------------------------------------
# Loading


def load_world(source: str | Path) -> World:
    """Parse a world file: ``room <id>`` and ``object <id> in <room> [attrs]``."""
    text = Path(source).read_text(encoding="utf-8") if isinstance(source, Path) else source
    rooms: list[str] = []
    objects: dict[str, str] = {}
    attributes: dict[str, frozenset[str]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if fields[0] == "room" and len(fields) == 2:
            if fields[1] in rooms:
                raise ValueError(f"duplicate room at line {lineno}: {fields[1]}")
            rooms.append(fields[1])
        elif fields[0] == "object" and len(fields) >= 4 and fields[2] == "in":
            name, room, attrs = fields[1], fields[3], fields[4:]
            if name in objects:
                raise ValueError(f"duplicate object at line {lineno}: {name}")
            if room not in rooms:
                raise ValueError(f"object {name} placed in undeclared room {room}")
            bad = [a for a in attrs if a not in KNOWN_ATTRIBUTES]
            if bad:
                raise ValueError(f"unknown attribute(s) at line {lineno}: {bad}")
            objects[name] = room
            attributes[name] = frozenset(attrs)
        else:
            raise ValueError(f"bad world record at line {lineno}: {raw!r}")
    if not rooms:
        raise ValueError("world has no rooms")
    return World(tuple(rooms), objects, attributes)


def initial_state(world: World, agent_room: str) -> WorldState:
    if agent_room not in world.rooms:
        raise UnknownObject(f"agent start room {agent_room!r} is not a room")
    return WorldState(
        rooms=frozenset(world.rooms),
        object_locations=dict(world.objects),
        object_states={name: frozenset() for name in world.objects},
        agent_room=agent_room,
        proximity=frozenset(),
        visible=frozenset(),
        held=(),
        attributes=dict(world.attributes),
    )


_GOAL_RE = re.compile(r"^(not\s+)?([a-z_]+)\(\s*['\"]?([A-Za-z0-9_]+)['\"]?\s*\)$")


def parse_goal_line(text: str) -> Predicate:
    m = _GOAL_RE.match(text.strip())
    if not m:
        raise ValueError(f"bad goal predicate: {text!r}")
    return Predicate(m.group(2), m.group(3), negated=bool(m.group(1)))


def world_vocabulary(world: World):
    """Vocabulary implied by a world: the built-in actions plus every name."""
    from .dsl import ActionSig, Vocabulary

    vocab = Vocabulary()
    for name in ACTION_NAMES:
        vocab.add_action(ActionSig(name, 1))
    vocab.objects.update(world.objects)
    vocab.objects.update(world.rooms)
    return vocab


# ---------------------------------------------------------------------------
# Action semantics


def _resolve_target(action: ActionCall) -> str:
    if len(action.args) != 1:
        raise ValueError(f"{action.name} takes exactly one argument")
    arg = action.args[0]
    if isinstance(arg, KwArg):
        arg = arg.value
    if isinstance(arg, VariableRef):
        raise ValueError(f"unresolved variable {arg.name!r} in {action.name} call")
    if not isinstance(arg.value, str):
        raise ValueError(f"{action.name} expects an object or room name")
    return arg.value


def held_facts(state: WorldState) -> list[str]:
    if not state.held:
        return ["agent is holding nothing"]
    return [f"agent is holding {obj}" for obj in state.held]


def observations_for(state: WorldState, target: str) -> tuple[str, ...]:
    """Visibility fact for the target plus the held-items facts."""
    facts: list[str] = []
    if target in state.rooms:
        facts.append(f"agent is in {state.agent_room}")
    elif target in state.proximity:
        facts.append(f"{target} is near")
    elif target in state.visible:
        facts.append(f"{target} is visible but not near")
    else:
        facts.append(f"{target} is not visible")
    facts.extend(held_facts(state))
    return tuple(facts)


def _fail(state: WorldState, target: str, message: str) -> tuple[WorldState, ActionOutcome]:
    return state, ActionOutcome(False, message, observations_for(state, target))


def _ok(state: WorldState, target: str) -> tuple[WorldState, ActionOutcome]:
    return state, ActionOutcome(True, "", observations_for(state, target))


def _not_rel(relation: str, obj: str, action: str) -> str:
    return f"not {relation} to <{obj}> when [{action.upper()}]"


def apply_action(state: WorldState, action: ActionCall) -> tuple[WorldState, ActionOutcome]:
    """Apply one action; on failure the returned state is the input state."""
    name = action.name
    target = _resolve_target(action)
    if name == "walk":
        if target not in state.rooms:
            raise UnknownObject(f"no such room: {target}")
        new = replace(
            state,
            agent_room=target,
            proximity=frozenset(),
            visible=frozenset(state.held),
        )
        return _ok(new, target)

    if target not in state.object_states:
        raise UnknownObject(f"no such object: {target}")
    flags = state.flags(target)
    attrs = state.attributes.get(target, frozenset())

    if name == "find":
        if target in state.held:
            new = replace(state, proximity=frozenset({target}), visible=state.visible | {target})
            return _ok(new, target)
        if state.object_locations.get(target) != state.agent_room:
            return _fail(state, target, f"<{target}> not found in <{state.agent_room}>")
        new = replace(
            state,
            proximity=frozenset({target}),
            visible=state.room_objects(state.agent_room) | frozenset(state.held),
        )
        return _ok(new, target)

    if name == "grab":
        if target in state.held:
            return _ok(state, target)
        if target not in state.proximity:
            return _fail(state, target, _not_rel("close", target, name))
        if len(state.held) >= HAND_CAPACITY:
            return _fail(state, target, "hands full when [GRAB]")
        locations = dict(state.object_locations)
        locations.pop(target, None)
        states = dict(state.object_states)
        states[target] = flags | {"grabbed"}
        new = replace(
            state,
            object_locations=locations,
            object_states=states,
            held=state.held + (target,),
        )
        return _ok(new, target)

    if name == "sit":
        if target not in state.proximity:
            return _fail(state, target, _not_rel("close", target, name))
        if "sittable" not in attrs:
            return _fail(state, target, _not_rel("sittable", target, name))
        states = dict(state.object_states)
        states[target] = flags | {"sat_on"}
        return _ok(replace(state, object_states=states), target)

    if name == "eat":
        if target not in state.held:
            return _fail(state, target, _not_rel("holding", target, name))
        if "edible" not in attrs:
            return _fail(state, target, _not_rel("edible", target, name))
        states = dict(state.object_states)
        states[target] = flags | {"eaten"}
        new = replace(
            state,
            object_states=states,
            held=tuple(o for o in state.held if o != target),
            proximity=state.proximity - {target},
            visible=state.visible - {target},
        )
        return _ok(new, target)

    if name == "open":
        if target not in state.proximity:
            return _fail(state, target, _not_rel("close", target, name))
        if "container" not in attrs:
            return _fail(state, target, _not_rel("openable", target, name))
        states = dict(state.object_states)
        states[target] = flags | {"open"}
        return _ok(replace(state, object_states=states), target)

    if name == "close_obj":
        if target not in state.proximity:
            return _fail(state, target, _not_rel("close", target, name))
        if "container" not in attrs:
            return _fail(state, target, _not_rel("openable", target, name))
        states = dict(state.object_states)
        states[target] = flags - {"open"}
        return _ok(replace(state, object_states=states), target)

    if name == "switch_on":
        if target not in state.proximity:
            return _fail(state, target, _not_rel("close", target, name))
        states = dict(state.object_states)
        states[target] = flags | {"on"}
        return _ok(replace(state, object_states=states), target)

    if name == "put_back":
        if target not in state.held:
            return _fail(state, target, _not_rel("holding", target, name))
        locations = dict(state.object_locations)
        locations[target] = state.agent_room
        new = replace(
            state,
            object_locations=locations,
            held=tuple(o for o in state.held if o != target),
            proximity=state.proximity | {target},
            visible=state.visible | {target},
        )
        return _ok(new, target)

    raise ValueError(f"unknown action: {name}")


# ---------------------------------------------------------------------------
# Predicates and goals


def eval_predicate(state: WorldState, pred: Predicate) -> bool:
    relation, subject = pred.relation, pred.subject
    if relation in ("close", "holding", "visible", "eaten", "sat_on", "grabbed", "open", "on"):
        if not state.has_object(subject) and subject not in state.rooms:
            raise UnknownObject(f"no such object: {subject}")
    if relation == "close":
        value = subject in state.proximity
    elif relation == "holding":
        value = subject in state.held
    elif relation == "visible":
        value = subject in state.visible
    elif relation in ("eaten", "sat_on", "grabbed", "open", "on"):
        value = relation in state.flags(subject)
    else:
        raise ValueError(f"relation {relation!r} cannot be evaluated against the world")
    return not value if pred.negated else value


def score_goals(final: WorldState, trace_ok: bool, goals: GoalSpec) -> tuple[int, float]:
    """(sr, psr): psr = satisfied fraction; sr = 1 iff psr == 1 and trace_ok."""
    satisfied = sum(1 for p in goals.predicates if eval_predicate(final, p))
    psr = satisfied / len(goals.predicates)
    sr = 1 if psr == 1.0 and trace_ok else 0
    return sr, psr


def feedback_matches_template(message: str) -> bool:
    return any(t.match(message) for t in FEEDBACK_TEMPLATES)


def literal_call(name: str, target: str) -> ActionCall:
    """Convenience constructor used by tests and rollouts."""
    return ActionCall(name, (Literal(target),))
