"""Bottom-up proof search over knowledge-base sequents.

The search interleaves four moves: close on a shared atom, apply a rule
inference for an active trigger (fair cyclic order over the rule set),
branch on an unexpanded consequent conjunction, and instantiate a consequent
existential.  Rule steps run to quiescence before query instantiation, so a
successful run reproduces the chase and then closes the query on top of it;
when nothing applies the sequent is saturated and its antecedent is a finite
universal counter-model.

A run returns Proved with a checkable proof, Refuted with the counter-model,
or Unknown when the trigger-application budget runs out.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

from .calculus import (
    AndRightLabel,
    ExistsRightLabel,
    IdLabel,
    ProofTree,
    RuleLabel,
    SeqRuleLabel,
)
from .semantics import _index_by_predicate, _match_atoms
from .syntax import (
    And,
    Atom,
    BCQ,
    Exists,
    ExistentialRule,
    Formula,
    Instance,
    Sequent,
    Term,
    Variable,
    atom_key,
    formula_key,
    fresh_variable,
    gamma_terms,
    is_database,
    substitute,
    term_key,
)


class Verdict(enum.Enum):
    PROVED = "proved"
    REFUTED = "refuted"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SearchStep:
    """One applied search move, recorded for replay and fairness audits."""

    kind: str  # "er" | "exists_r" | "and_r" | "id"
    rule_id: str | None = None
    bindings: tuple[tuple[Variable, Term], ...] = ()
    fresh: tuple[Variable, ...] = ()
    added_atoms: frozenset[Atom] = frozenset()
    principal: Formula | None = None
    witness: Term | None = None
    cursor_before: int = -1
    rule_index: int = -1


@dataclass(frozen=True)
class SearchOutcome:
    verdict: Verdict
    proof: ProofTree | None = None
    counter_model: Instance | None = None
    partial: Instance | None = None
    steps_used: int = 0
    trace: tuple[SearchStep, ...] = ()


def is_saturated(seq: Sequent, rules: Sequence[ExistentialRule]) -> bool:
    """The four saturation conditions, checked literally."""
    gamma_atoms = seq.antecedent_atoms()
    delta = seq.consequent
    for f in gamma_atoms:
        if f in delta:
            return False
    for f in delta:
        if isinstance(f, And) and f.left not in delta and f.right not in delta:
            return False
    terms = sorted(gamma_terms(seq.antecedent), key=term_key)
    for f in delta:
        if isinstance(f, Exists):
            for t in terms:
                if substitute(f.body, t, f.var) not in delta:
                    return False
    index = _index_by_predicate(gamma_atoms)
    for rule in rules:
        body = sorted(rule.body, key=atom_key)
        head = sorted(rule.head, key=atom_key)
        for match in _match_atoms(body, gamma_atoms, {}, index):
            if not any(True for _ in _match_atoms(head, gamma_atoms, dict(match), index)):
                return False
    return True


def extract_counter_model(seq: Sequent, rules: Sequence[ExistentialRule]) -> Instance:
    """The antecedent atoms of a saturated sequent (virtual TOP closure)."""
    if not is_saturated(seq, rules):
        raise ValueError("counter-model extraction requires a saturated sequent")
    return seq.antecedent_atoms()


class _Budget:
    __slots__ = ("remaining",)

    def __init__(self, fuel: int):
        self.remaining = fuel


@dataclass
class _Run:
    rules: tuple[ExistentialRule, ...]
    budget: _Budget
    trace: list[SearchStep] = field(default_factory=list)

    def er_steps(self) -> int:
        return sum(1 for s in self.trace if s.kind == "er")


def _strip_quantifiers(phi: Formula) -> Formula:
    while isinstance(phi, Exists):
        phi = phi.body
    return phi


def _conjuncts(phi: Formula) -> list[Atom] | None:
    """Flatten a conjunction of atoms; None when the shape is anything else."""
    if isinstance(phi, Atom):
        return [phi]
    if isinstance(phi, And):
        left = _conjuncts(phi.left)
        right = _conjuncts(phi.right)
        if left is None or right is None:
            return None
        return left + right
    return None


def _guided_witness(phi: Exists, gamma: Instance) -> Term | None:
    """A witness for the outermost quantifier read off a homomorphism of the
    quantifier-stripped atom set into the antecedent, when one exists."""
    atoms = _conjuncts(_strip_quantifiers(phi))
    if atoms is None:
        return None
    index = _index_by_predicate(gamma)
    ordered = sorted(atoms, key=atom_key)
    for match in _match_atoms(ordered, gamma, {}, index):
        return match.get(phi.var, None)
    return None


def _scan_active_trigger(
    gamma: Instance, rules: tuple[ExistentialRule, ...], cursor: int
) -> tuple[int, dict] | None:
    """First rule after the cursor (cyclically) with an active trigger, and
    its first active match in deterministic order."""
    if not rules:
        return None
    index = _index_by_predicate(gamma)
    for offset in range(len(rules)):
        idx = (cursor + 1 + offset) % len(rules)
        rule = rules[idx]
        body = sorted(rule.body, key=atom_key)
        head = sorted(rule.head, key=atom_key)
        for match in _match_atoms(body, gamma, {}, index):
            satisfied = any(True for _ in _match_atoms(head, gamma, dict(match), index))
            if not satisfied:
                return idx, match
    return None


def _search(
    run: _Run,
    gamma: Instance,
    delta: frozenset[Formula],
    cursor: int,
    quiesced: bool,
) -> SearchOutcome:
    chain: list[tuple[Sequent, RuleLabel]] = []

    def wrap(outcome: SearchOutcome) -> SearchOutcome:
        if outcome.verdict is not Verdict.PROVED:
            return outcome
        tree = outcome.proof
        for seq, label in reversed(chain):
            tree = ProofTree(seq, label, (tree,))
        return SearchOutcome(
            Verdict.PROVED, proof=tree, steps_used=run.er_steps(), trace=tuple(run.trace)
        )

    while True:
        seq = Sequent(frozenset(gamma), delta)

        shared = sorted((a for a in gamma if a in delta), key=atom_key)
        if shared:
            run.trace.append(SearchStep(kind="id", principal=shared[0]))
            leaf = ProofTree(seq, IdLabel(shared[0]))
            return wrap(SearchOutcome(Verdict.PROVED, proof=leaf))

        if not quiesced:
            found = _scan_active_trigger(gamma, run.rules, cursor)
            if found is None:
                quiesced = True
            else:
                if run.budget.remaining <= 0:
                    return SearchOutcome(
                        Verdict.UNKNOWN,
                        partial=frozenset(gamma),
                        steps_used=run.er_steps(),
                        trace=tuple(run.trace),
                    )
                run.budget.remaining -= 1
                idx, match = found
                rule = run.rules[idx]
                extension = dict(match)
                fresh = tuple(fresh_variable() for _ in rule.existential_tuple())
                for z, f in zip(rule.existential_tuple(), fresh):
                    extension[z] = f
                added = frozenset(
                    Atom(a.predicate, tuple(extension.get(t, t) for t in a.args))
                    for a in rule.head
                )
                bindings = tuple(
                    sorted(((v, t) for v, t in match.items()), key=lambda p: p[0].name)
                )
                label = SeqRuleLabel(rule.rule_id, bindings, fresh)
                run.trace.append(
                    SearchStep(
                        kind="er",
                        rule_id=rule.rule_id,
                        bindings=bindings,
                        fresh=fresh,
                        added_atoms=added,
                        cursor_before=cursor,
                        rule_index=idx,
                    )
                )
                chain.append((seq, label))
                gamma = gamma | added
                cursor = idx
                continue

        conjunctions = sorted(
            (
                f
                for f in delta
                if isinstance(f, And) and f.left not in delta and f.right not in delta
            ),
            key=formula_key,
        )
        if conjunctions:
            principal = conjunctions[0]
            run.trace.append(SearchStep(kind="and_r", principal=principal))
            left = _search(run, gamma, delta | {principal.left}, cursor, quiesced)
            if left.verdict is Verdict.REFUTED:
                return left
            right = _search(run, gamma, delta | {principal.right}, cursor, quiesced)
            if right.verdict is Verdict.REFUTED:
                return right
            if left.verdict is Verdict.UNKNOWN or right.verdict is Verdict.UNKNOWN:
                unknown = left if left.verdict is Verdict.UNKNOWN else right
                return unknown
            node = ProofTree(seq, AndRightLabel(principal), (left.proof, right.proof))
            return wrap(SearchOutcome(Verdict.PROVED, proof=node))

        expansion = _pick_existential_expansion(gamma, delta)
        if expansion is not None:
            principal, witness = expansion
            peeled = substitute(principal.body, witness, principal.var)
            run.trace.append(
                SearchStep(kind="exists_r", principal=principal, witness=witness)
            )
            chain.append((seq, ExistsRightLabel(principal, witness)))
            delta = delta | {peeled}
            continue

        assert is_saturated(seq, run.rules)
        return SearchOutcome(
            Verdict.REFUTED,
            counter_model=seq.antecedent_atoms(),
            steps_used=run.er_steps(),
            trace=tuple(run.trace),
        )


def _pick_existential_expansion(
    gamma: Instance, delta: frozenset[Formula]
) -> tuple[Exists, Term] | None:
    """The next consequent existential to instantiate and its witness term:
    homomorphism-guided when possible, else the least uninstantiated term of
    the antecedent."""
    terms = sorted(gamma_terms(frozenset(gamma)), key=term_key)
    for phi in sorted((f for f in delta if isinstance(f, Exists)), key=formula_key):
        guided = _guided_witness(phi, gamma)
        if guided is not None and substitute(phi.body, guided, phi.var) not in delta:
            return phi, guided
        for t in terms:
            if substitute(phi.body, t, phi.var) not in delta:
                return phi, t
    return None


def prove(
    database: Instance,
    rules: Sequence[ExistentialRule],
    query: BCQ,
    fuel: int = 10_000,
) -> SearchOutcome:
    """Decide entailment of a Boolean conjunctive query by proof search."""
    if fuel < 0:
        raise ValueError("fuel must be nonnegative")
    if not is_database(database):
        raise ValueError("the antecedent of the input sequent must be a ground database")
    run = _Run(rules=tuple(rules), budget=_Budget(fuel))
    outcome = _search(run, database, frozenset({query.as_formula()}), -1, False)
    if outcome.verdict is Verdict.PROVED:
        return outcome
    return SearchOutcome(
        outcome.verdict,
        proof=None,
        counter_model=outcome.counter_model,
        partial=outcome.partial,
        steps_used=run.er_steps(),
        trace=tuple(run.trace),
    )
