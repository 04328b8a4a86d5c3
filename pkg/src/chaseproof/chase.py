"""Restricted chase: triggers, single applications, fair iteration, BCQ answering.

The derivation-producing loop applies one active trigger at a time from a
FIFO queue (fair, deterministic); ``one_step_chase`` stays faithful to the
parallel one-step definition that unions over all triggers.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterator, Sequence

from .semantics import _index_by_predicate, _match_atoms, find_homomorphism
from .syntax import (
    Atom,
    BCQ,
    ExistentialRule,
    Instance,
    Term,
    Variable,
    atom_key,
    fresh_variable,
    instance_terms,
    term_key,
)


@dataclass(frozen=True)
class Trigger:
    """A rule paired with an assignment embedding its body into an instance."""

    rule: ExistentialRule
    bindings: tuple[tuple[Variable, Term], ...]

    @property
    def match(self) -> dict[Term, Term]:
        return dict(self.bindings)

    @property
    def identity(self) -> tuple:
        return (self.rule.rule_id, self.bindings)

    def __str__(self) -> str:
        pairs = ", ".join(f"{v}->{t}" for v, t in self.bindings)
        return f"({self.rule.rule_id}, {{{pairs}}})"


def make_trigger(rule: ExistentialRule, match: dict) -> Trigger:
    bindings = tuple(sorted(((v, t) for v, t in match.items()), key=lambda p: p[0].name))
    return Trigger(rule, bindings)


def is_trigger(trigger: Trigger, instance: Instance) -> bool:
    match = trigger.match
    if set(match) != set(trigger.rule.body_vars):
        return False
    return all(
        Atom(a.predicate, tuple(match.get(t, t) for t in a.args)) in instance
        for a in trigger.rule.body
    )


def find_triggers(instance: Instance, rules: Sequence[ExistentialRule]) -> list[Trigger]:
    """All triggers over the instance, rules in listed order, matches in the
    deterministic backtracking order."""
    index = _index_by_predicate(instance)
    out: list[Trigger] = []
    for rule in rules:
        body = sorted(rule.body, key=atom_key)
        for match in _match_atoms(body, instance, {}, index):
            out.append(make_trigger(rule, match))
    return out


def is_active(trigger: Trigger, instance: Instance) -> bool:
    """Restricted-chase activity: no term tuple over the instance's terms
    satisfies the instantiated head."""
    index = _index_by_predicate(instance)
    head = sorted(trigger.rule.head, key=atom_key)
    for _ in _match_atoms(head, instance, dict(trigger.match), index):
        return False
    return True


def _apply_with_extension(trigger: Trigger, instance: Instance) -> tuple[Instance, dict]:
    if not is_trigger(trigger, instance):
        raise ValueError(f"{trigger} is not a trigger in the given instance")
    extension = dict(trigger.match)
    for z in trigger.rule.existential_tuple():
        extension[z] = fresh_variable()
    added = frozenset(
        Atom(a.predicate, tuple(extension.get(t, t) for t in a.args)) for a in trigger.rule.head
    )
    return instance | added, extension


def apply_trigger(trigger: Trigger, instance: Instance) -> Instance:
    """tau(I): the instance extended with the head image, existential
    variables replaced by globally fresh ones."""
    return _apply_with_extension(trigger, instance)[0]


def one_step_chase(instance: Instance, rules: Sequence[ExistentialRule]) -> Instance:
    """Union of tau(I) over all triggers tau in I (not just active ones)."""
    result = instance
    for trigger in find_triggers(instance, rules):
        result |= apply_trigger(trigger, instance)
    return result


@dataclass(frozen=True)
class ChaseDerivation:
    """Ordered (instance, trigger) steps ending in a final (instance, None) entry."""

    steps: tuple[tuple[Instance, Trigger | None], ...]

    def __post_init__(self) -> None:
        if not self.steps:
            raise ValueError("a derivation has at least the final entry")
        if self.steps[-1][1] is not None:
            raise ValueError("the final entry carries no trigger")
        if any(t is None for _, t in self.steps[:-1]):
            raise ValueError("only the final entry may omit its trigger")

    @property
    def initial(self) -> Instance:
        return self.steps[0][0]

    @property
    def final(self) -> Instance:
        return self.steps[-1][0]

    def __len__(self) -> int:
        return len(self.steps) - 1


def recover_head_extension(
    instance: Instance, trigger: Trigger, successor: Instance
) -> dict | None:
    """An extension of the trigger's match over its existential variables such
    that the head image accounts exactly for the step's growth."""
    index = _index_by_predicate(successor)
    head = sorted(trigger.rule.head, key=atom_key)
    new_atoms = successor - instance
    old_terms = instance_terms(instance)
    for extension in _match_atoms(head, successor, dict(trigger.match), index):
        image = frozenset(
            Atom(a.predicate, tuple(extension.get(t, t) for t in a.args)) for a in trigger.rule.head
        )
        if instance | image != successor:
            continue
        fresh_values = [extension[z] for z in trigger.rule.existential_tuple()]
        if any(not isinstance(v, Variable) or v in old_terms for v in fresh_values):
            continue
        if len(set(fresh_values)) != len(fresh_values):
            continue
        return extension
    return None


def validate_derivation(derivation: ChaseDerivation) -> None:
    """Raise if any step's trigger does not carry its instance to the next."""
    for i in range(len(derivation)):
        instance, trigger = derivation.steps[i]
        successor = derivation.steps[i + 1][0]
        assert trigger is not None
        if not is_trigger(trigger, instance):
            raise ValueError(f"step {i}: not a trigger in its instance")
        if not instance <= successor:
            raise ValueError(f"step {i}: instances must grow monotonically")
        if recover_head_extension(instance, trigger, successor) is None:
            raise ValueError(f"step {i}: applying the trigger does not yield the next instance")


@dataclass(frozen=True)
class ChaseOutcome:
    final: Instance
    terminated: bool
    steps_used: int
    derivation: ChaseDerivation


class Entailment(enum.Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


def _chase_run(
    database: Instance, rules: Sequence[ExistentialRule]
) -> Iterator[tuple[Instance, Trigger, Instance]]:
    """Fair restricted-chase steps: FIFO over discovered active triggers,
    re-validated at pop time.  Yields (before, trigger, after) until no
    active trigger remains; never stops for a nonterminating rule set."""
    instance = database
    queue: list[Trigger] = []
    seen: set[tuple] = set()
    while True:
        for trigger in find_triggers(instance, rules):
            if trigger.identity in seen:
                continue
            seen.add(trigger.identity)
            if is_active(trigger, instance):
                queue.append(trigger)
        fired = None
        while queue:
            candidate = queue.pop(0)
            if is_active(candidate, instance):
                fired = candidate
                break
        if fired is None:
            return
        successor = apply_trigger(fired, instance)
        yield instance, fired, successor
        instance = successor


def chase(database: Instance, rules: Sequence[ExistentialRule], fuel: int = 10_000) -> ChaseOutcome:
    """Iterate restricted trigger application fairly until quiescence or the
    step budget runs out."""
    if fuel < 0:
        raise ValueError("fuel must be nonnegative")
    steps: list[tuple[Instance, Trigger | None]] = []
    final = database
    terminated = True
    for before, trigger, after in _chase_run(database, rules):
        if len(steps) >= fuel:
            terminated = False
            break
        steps.append((before, trigger))
        final = after
    steps.append((final, None))
    return ChaseOutcome(
        final=final,
        terminated=terminated,
        steps_used=len(steps) - 1,
        derivation=ChaseDerivation(tuple(steps)),
    )


def bcq_entailed_by_chase(
    database: Instance,
    rules: Sequence[ExistentialRule],
    query: BCQ,
    fuel: int = 10_000,
) -> Entailment:
    """Three-valued chase answer: homomorphism witness after every application,
    'no' on quiescence without one, 'unknown' on fuel exhaustion."""
    if find_homomorphism(query.atom_set(), database) is not None:
        return Entailment.YES
    used = 0
    for _, _, after in _chase_run(database, rules):
        if used >= fuel:
            return Entailment.UNKNOWN
        used += 1
        if find_homomorphism(query.atom_set(), after) is not None:
            return Entailment.YES
    return Entailment.NO
