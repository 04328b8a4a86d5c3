"""Proof objects for the extended sequent calculus and an independent checker.

A proof is a tree of labeled inferences; the checker re-derives the mandated
premises of every node from its conclusion and label data alone, so no search
happens on the trusted path.  Under set semantics a principal formula may or
may not persist in the surrounding context; the checker accepts both readings
(consistently across the two premises of a conjunction-right inference).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .syntax import (
    And,
    Atom,
    Exists,
    ExistentialRule,
    Formula,
    Not,
    Sequent,
    Term,
    Variable,
    all_vars,
    formula_constants,
    free_vars,
    gamma_terms,
    substitute,
)


@dataclass(frozen=True)
class IdLabel:
    principal: Atom


@dataclass(frozen=True)
class NegLeftLabel:
    principal: Formula  # the negation itself


@dataclass(frozen=True)
class NegRightLabel:
    principal: Formula


@dataclass(frozen=True)
class AndLeftLabel:
    principal: Formula


@dataclass(frozen=True)
class AndRightLabel:
    principal: Formula


@dataclass(frozen=True)
class ExistsLeftLabel:
    principal: Formula
    fresh: Variable


@dataclass(frozen=True)
class ExistsRightLabel:
    principal: Formula
    witness: Term


@dataclass(frozen=True)
class SeqRuleLabel:
    """One inference per existential rule: body image in the antecedent grows
    by the head image, existential variables instantiated with fresh ones."""

    rule_id: str
    bindings: tuple[tuple[Variable, Term], ...]
    fresh: tuple[Variable, ...]

    @property
    def match(self) -> dict[Term, Term]:
        return dict(self.bindings)


RuleLabel = (
    IdLabel
    | NegLeftLabel
    | NegRightLabel
    | AndLeftLabel
    | AndRightLabel
    | ExistsLeftLabel
    | ExistsRightLabel
    | SeqRuleLabel
)


def label_name(label: RuleLabel) -> str:
    if isinstance(label, IdLabel):
        return "id"
    if isinstance(label, NegLeftLabel):
        return "neg_l"
    if isinstance(label, NegRightLabel):
        return "neg_r"
    if isinstance(label, AndLeftLabel):
        return "and_l"
    if isinstance(label, AndRightLabel):
        return "and_r"
    if isinstance(label, ExistsLeftLabel):
        return "exists_l"
    if isinstance(label, ExistsRightLabel):
        return "exists_r"
    return f"s({label.rule_id})"


@dataclass(frozen=True)
class ProofTree:
    conclusion: Sequent
    label: RuleLabel
    premises: tuple["ProofTree", ...] = ()

    def nodes(self):
        yield self
        for p in self.premises:
            yield from p.nodes()

    def label_multiset(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for node in self.nodes():
            name = label_name(node.label)
            counts[name] = counts.get(name, 0) + 1
        return counts


class InferenceError(ValueError):
    """A rejected inference, carrying one of the distinct rejection reasons."""

    def __init__(self, reason: str, detail: str = ""):
        self.reason = reason
        self.detail = detail
        super().__init__(f"{reason}{': ' + detail if detail else ''}")


class ProofCheckError(ValueError):
    """A rejected proof, reporting the path to the first failing node."""

    def __init__(self, path: tuple[int, ...], cause: InferenceError | str):
        self.path = path
        self.cause = cause
        super().__init__(f"invalid inference at node path {list(path)}: {cause}")


def sequent_vars(seq: Sequent) -> set[Variable]:
    """Every variable occurring in the sequent, free or bound (the freshness
    side conditions read "does not occur in the surrounding context")."""
    out: set[Variable] = set()
    for f in seq.formulas():
        out |= all_vars(f)
    return out


def instantiate_head(rule: ExistentialRule, label: SeqRuleLabel) -> frozenset[Atom]:
    mapping: dict[Term, Term] = label.match
    existentials = rule.existential_tuple()
    if len(existentials) != len(label.fresh):
        raise InferenceError(
            "shape mismatch",
            f"rule {rule.rule_id} has {len(existentials)} existential variables, "
            f"label carries {len(label.fresh)} fresh names",
        )
    mapping = dict(mapping)
    for z, name in zip(existentials, label.fresh):
        mapping[z] = name
    return frozenset(
        Atom(a.predicate, tuple(mapping.get(t, t) for t in a.args)) for a in rule.head
    )


def mandated_premises(
    conclusion: Sequent,
    label: RuleLabel,
    rules: Mapping[str, ExistentialRule] | None = None,
    strict_witness: bool = True,
) -> list[list[Sequent]]:
    """All premise lists a correct application may have (at most two variants,
    from the retained/consumed context readings).  Raises InferenceError when
    the label does not fit the conclusion at all."""
    ante, cons = conclusion.antecedent, conclusion.consequent

    if isinstance(label, IdLabel):
        if not isinstance(label.principal, Atom):
            raise InferenceError("shape mismatch", "initial rule closes on an atom")
        if label.principal not in ante or label.principal not in cons:
            raise InferenceError(
                "shape mismatch", f"{label.principal} must occur on both sides"
            )
        return [[]]

    if isinstance(label, NegLeftLabel):
        if not isinstance(label.principal, Not) or label.principal not in ante:
            raise InferenceError("shape mismatch", "principal negation not in antecedent")
        inner = label.principal.body
        variants = []
        for gamma in _context_variants(ante, label.principal):
            variants.append([Sequent(gamma, cons | {inner})])
        return variants

    if isinstance(label, NegRightLabel):
        if not isinstance(label.principal, Not) or label.principal not in cons:
            raise InferenceError("shape mismatch", "principal negation not in consequent")
        inner = label.principal.body
        return [
            [Sequent(ante | {inner}, delta)] for delta in _context_variants(cons, label.principal)
        ]

    if isinstance(label, AndLeftLabel):
        if not isinstance(label.principal, And) or label.principal not in ante:
            raise InferenceError("shape mismatch", "principal conjunction not in antecedent")
        left, right = label.principal.left, label.principal.right
        return [
            [Sequent(gamma | {left, right}, cons)]
            for gamma in _context_variants(ante, label.principal)
        ]

    if isinstance(label, AndRightLabel):
        if not isinstance(label.principal, And) or label.principal not in cons:
            raise InferenceError("shape mismatch", "principal conjunction not in consequent")
        left, right = label.principal.left, label.principal.right
        return [
            [Sequent(ante, delta | {left}), Sequent(ante, delta | {right})]
            for delta in _context_variants(cons, label.principal)
        ]

    if isinstance(label, ExistsLeftLabel):
        if not isinstance(label.principal, Exists) or label.principal not in ante:
            raise InferenceError("shape mismatch", "principal existential not in antecedent")
        if label.fresh in sequent_vars(conclusion):
            raise InferenceError(
                "freshness violation", f"{label.fresh} occurs in the conclusion"
            )
        peeled = substitute(label.principal.body, label.fresh, label.principal.var)
        return [
            [Sequent(gamma | {peeled}, cons)]
            for gamma in _context_variants(ante, label.principal)
        ]

    if isinstance(label, ExistsRightLabel):
        if not isinstance(label.principal, Exists) or label.principal not in cons:
            raise InferenceError("shape mismatch", "principal existential not in consequent")
        if strict_witness:
            allowed = gamma_terms(conclusion.formulas()) | formula_constants(label.principal)
            if label.witness not in allowed:
                raise InferenceError(
                    "witness outside term universe",
                    f"{label.witness} not among the sequent's terms",
                )
        peeled = substitute(label.principal.body, label.witness, label.principal.var)
        # the principal persists in the premise by the rule's shape
        return [[Sequent(ante, cons | {peeled})]]

    if isinstance(label, SeqRuleLabel):
        if rules is None or label.rule_id not in rules:
            raise InferenceError("shape mismatch", f"unknown rule {label.rule_id}")
        rule = rules[label.rule_id]
        match = label.match
        if set(match) != set(rule.body_vars):
            raise InferenceError(
                "shape mismatch", "assignment must cover exactly the body variables"
            )
        body_image = frozenset(
            Atom(a.predicate, tuple(match.get(t, t) for t in a.args)) for a in rule.body
        )
        if not body_image <= ante:
            raise InferenceError(
                "shape mismatch", "body image not contained in the antecedent"
            )
        if len(set(label.fresh)) != len(label.fresh):
            raise InferenceError("freshness violation", "fresh names must be distinct")
        occurring = sequent_vars(conclusion)
        for z in label.fresh:
            if z in occurring:
                raise InferenceError("freshness violation", f"{z} occurs in the conclusion")
        head_image = instantiate_head(rule, label)
        return [[Sequent(ante | head_image, cons)]]

    raise InferenceError("shape mismatch", f"unrecognized label {label!r}")


def _context_variants(side: frozenset[Formula], principal: Formula) -> list[frozenset[Formula]]:
    """The two set-semantics readings of "Gamma, phi": principal consumed or
    retained in the context."""
    consumed = side - {principal}
    return [consumed, side] if principal in side else [consumed]


def inference_failure(
    conclusion: Sequent,
    label: RuleLabel,
    premises: Sequence[Sequent],
    rules: Mapping[str, ExistentialRule] | None = None,
    strict_witness: bool = True,
) -> InferenceError | None:
    """None when the premises are exactly the mandated ones, else the reason."""
    try:
        variants = mandated_premises(conclusion, label, rules, strict_witness)
    except InferenceError as err:
        return err
    sizes = {len(v) for v in variants}
    if len(premises) not in sizes:
        return InferenceError(
            "wrong premise count", f"expected {sorted(sizes)}, got {len(premises)}"
        )
    actual = list(premises)
    for variant in variants:
        if actual == variant:
            return None
    return InferenceError("shape mismatch", "premises differ from the mandated premises")


def check_inference(
    conclusion: Sequent,
    label: RuleLabel,
    premises: Sequence[Sequent],
    rules: Mapping[str, ExistentialRule] | None = None,
    strict_witness: bool = True,
) -> bool:
    return inference_failure(conclusion, label, premises, rules, strict_witness) is None


def verify_proof(
    proof: ProofTree,
    rules: Mapping[str, ExistentialRule] | None = None,
    strict_witness: bool = True,
    path: tuple[int, ...] = (),
) -> None:
    """Raise ProofCheckError at the first failing node (root-first walk)."""
    if not proof.premises and not isinstance(proof.label, IdLabel):
        raise ProofCheckError(path, "every leaf must be an initial inference")
    failure = inference_failure(
        proof.conclusion,
        proof.label,
        [p.conclusion for p in proof.premises],
        rules,
        strict_witness,
    )
    if failure is not None:
        raise ProofCheckError(path, failure)
    for i, premise in enumerate(proof.premises):
        verify_proof(premise, rules, strict_witness, path + (i,))


def check_proof(
    proof: ProofTree,
    rules: Sequence[ExistentialRule] | Mapping[str, ExistentialRule] = (),
    strict_witness: bool = True,
) -> bool:
    index = rules if isinstance(rules, Mapping) else {r.rule_id: r for r in rules}
    try:
        verify_proof(proof, index, strict_witness)
    except ProofCheckError:
        return False
    return True


@dataclass(frozen=True)
class DerivationChain:
    """A linear derivation from an open top sequent down to the root.

    ``sequents[0]`` is the root conclusion; ``labels[i]`` justifies the
    inference from ``sequents[i+1]`` (premise) to ``sequents[i]``.
    """

    sequents: tuple[Sequent, ...]
    labels: tuple[RuleLabel, ...]

    def __post_init__(self) -> None:
        if len(self.sequents) != len(self.labels) + 1:
            raise ValueError("a chain of n inferences spans n+1 sequents")

    @property
    def root(self) -> Sequent:
        return self.sequents[0]

    @property
    def top(self) -> Sequent:
        return self.sequents[-1]

    def __len__(self) -> int:
        return len(self.labels)


def is_r_derivation(chain: DerivationChain) -> bool:
    """True iff the chain only applies rule-scheme inferences."""
    return all(isinstance(label, SeqRuleLabel) for label in chain.labels)


def check_chain(
    chain: DerivationChain,
    rules: Sequence[ExistentialRule] | Mapping[str, ExistentialRule],
    strict_witness: bool = True,
) -> bool:
    index = rules if isinstance(rules, Mapping) else {r.rule_id: r for r in rules}
    return all(
        check_inference(
            chain.sequents[i], chain.labels[i], [chain.sequents[i + 1]], index, strict_witness
        )
        for i in range(len(chain))
    )
