"""Translations between chase derivations and sequent derivations/proofs.

Chase steps and rule inferences are two presentations of the same move, so a
derivation converts to a linear inference chain and back.  A witnessed chase
derivation becomes a full proof by weakening the chain's consequents with the
query and closing the instantiated query on top; the reverse direction reads
the chase and the witnessing assignment back off a normalized proof.
"""

from __future__ import annotations

from typing import Iterator, Mapping, Sequence

from .calculus import (
    AndRightLabel,
    DerivationChain,
    ExistsRightLabel,
    IdLabel,
    ProofTree,
    RuleLabel,
    SeqRuleLabel,
    check_chain,
    instantiate_head,
    is_r_derivation,
    verify_proof,
)
from .chase import ChaseDerivation, Trigger, recover_head_extension, validate_derivation
from .semantics import Substitution, apply_atom
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
    all_vars,
    substitute,
    term_key,
)


def _instance_sequent(instance: Instance, consequent: frozenset[Formula] = frozenset()) -> Sequent:
    return Sequent(frozenset(instance), consequent)


def chase_to_r_derivation(derivation: ChaseDerivation) -> DerivationChain:
    """One rule inference per chase step, conclusions read bottom-up from the
    first instance, all consequents empty."""
    validate_derivation(derivation)
    sequents = [_instance_sequent(inst) for inst, _ in derivation.steps]
    labels: list[RuleLabel] = []
    for i in range(len(derivation)):
        instance, trigger = derivation.steps[i]
        successor = derivation.steps[i + 1][0]
        assert trigger is not None
        extension = recover_head_extension(instance, trigger, successor)
        assert extension is not None  # validate_derivation guarantees it
        fresh = tuple(extension[z] for z in trigger.rule.existential_tuple())
        labels.append(SeqRuleLabel(trigger.rule.rule_id, trigger.bindings, fresh))
    return DerivationChain(tuple(sequents), tuple(labels))


def r_derivation_to_chase(
    chain: DerivationChain, rules: Sequence[ExistentialRule]
) -> ChaseDerivation:
    """Inverse translation; rejects chains outside the instance fragment."""
    index = {r.rule_id: r for r in rules}
    if not is_r_derivation(chain):
        raise ValueError("only rule-scheme inferences can be read as chase steps")
    for seq in chain.sequents:
        if seq.consequent:
            raise ValueError("chase-readable chains have empty consequents")
        if any(not isinstance(f, Atom) for f in seq.antecedent):
            raise ValueError("chase-readable chains have atomic antecedents")
    if not check_chain(chain, index):
        raise ValueError("the chain contains an incorrect inference")
    steps: list[tuple[Instance, Trigger | None]] = []
    for i in range(len(chain)):
        label = chain.labels[i]
        assert isinstance(label, SeqRuleLabel)
        rule = index[label.rule_id]
        steps.append((chain.sequents[i].antecedent_atoms(), Trigger(rule, label.bindings)))
    steps.append((chain.top.antecedent_atoms(), None))
    derivation = ChaseDerivation(tuple(steps))
    validate_derivation(derivation)
    return derivation


def _chain_fresh_vars(chain: DerivationChain) -> set[Variable]:
    fresh: set[Variable] = set()
    for label in chain.labels:
        if isinstance(label, SeqRuleLabel):
            fresh |= set(label.fresh)
    return fresh


def weaken_consequent(chain: DerivationChain, delta: frozenset[Formula]) -> DerivationChain:
    """Replace every consequent in the chain by ``delta``.

    Rejects a ``delta`` whose variables collide with fresh variables minted
    inside the chain, since that would break the freshness side conditions.
    """
    delta_vars: set[Variable] = set()
    for f in delta:
        delta_vars |= all_vars(f)
    collision = delta_vars & _chain_fresh_vars(chain)
    if collision:
        names = ", ".join(sorted(v.name for v in collision))
        raise ValueError(f"consequent variables collide with chain fresh variables: {names}")
    sequents = tuple(Sequent(s.antecedent, delta) for s in chain.sequents)
    return DerivationChain(sequents, chain.labels)


def _closing_tree(instance: Instance, phi: Formula, delta: frozenset[Formula]) -> ProofTree:
    """Close an instantiated query formula whose atoms all lie in the instance:
    conjunction fan-out with initial inferences at the leaves."""
    seq = Sequent(frozenset(instance), delta)
    if isinstance(phi, Atom):
        return ProofTree(seq, IdLabel(phi))
    if isinstance(phi, And):
        left = _closing_tree(instance, phi.left, delta | {phi.left})
        right = _closing_tree(instance, phi.right, delta | {phi.right})
        return ProofTree(seq, AndRightLabel(phi), (left, right))
    raise ValueError(f"cannot close non-conjunctive formula {phi}")


def witness_to_proof(
    derivation: ChaseDerivation, assignment: Substitution, query: BCQ
) -> ProofTree:
    """Assemble the proof of D |- query from a witnessing chase derivation."""
    final = derivation.final
    image = frozenset(apply_atom(assignment, a) for a in query.atoms)
    if not image <= final:
        raise ValueError("the assignment does not witness the query in the final instance")

    query_formula = query.as_formula()
    chain = weaken_consequent(chase_to_r_derivation(derivation), frozenset({query_formula}))

    delta: frozenset[Formula] = frozenset({query_formula})
    peels: list[tuple[Sequent, ExistsRightLabel]] = []
    current = query_formula
    for v in query.vars:
        assert isinstance(current, Exists)
        witness = assignment.get(v)
        if witness is None:
            raise ValueError(f"assignment misses query variable {v}")
        seq = Sequent(frozenset(final), delta)
        peels.append((seq, ExistsRightLabel(current, witness)))
        current = substitute(current.body, witness, current.var)
        delta = delta | {current}

    tree = _closing_tree(final, current, delta)
    for seq, label in reversed(peels):
        tree = ProofTree(seq, label, (tree,))
    for i in reversed(range(len(chain))):
        tree = ProofTree(chain.sequents[i], chain.labels[i], (tree,))
    return tree


_FRAGMENT_LABELS = (IdLabel, AndRightLabel, ExistsRightLabel, SeqRuleLabel)


def _bcq_shaped(phi: Formula) -> bool:
    while isinstance(phi, Exists):
        phi = phi.body
    stack = [phi]
    while stack:
        f = stack.pop()
        if isinstance(f, And):
            stack.extend((f.left, f.right))
        elif not isinstance(f, Atom):
            return False
    return True


def _require_fragment(proof: ProofTree) -> None:
    for node in proof.nodes():
        if not isinstance(node.label, _FRAGMENT_LABELS):
            raise ValueError(f"inference outside the query fragment: {node.label!r}")
    root = proof.conclusion
    if any(not isinstance(f, Atom) for f in root.antecedent):
        raise ValueError("end-sequent antecedent must be atomic")
    if len(root.consequent) != 1 or not _bcq_shaped(next(iter(root.consequent))):
        raise ValueError("end-sequent consequent must be a single conjunctive query")


def _add_to_antecedents(tree: ProofTree, atoms: frozenset[Atom]) -> ProofTree:
    seq = Sequent(tree.conclusion.antecedent | atoms, tree.conclusion.consequent)
    return ProofTree(seq, tree.label, tuple(_add_to_antecedents(p, atoms) for p in tree.premises))


def _swap_once(tree: ProofTree, rules: Mapping[str, ExistentialRule]) -> ProofTree | None:
    """Push one rule inference below an adjacent consequent-side inference;
    innermost (deepest) violation first, premises before their conclusion."""
    for i, premise in enumerate(tree.premises):
        swapped = _swap_once(premise, rules)
        if swapped is not None:
            new_premises = tree.premises[:i] + (swapped,) + tree.premises[i + 1 :]
            return ProofTree(tree.conclusion, tree.label, new_premises)
    if not isinstance(tree.label, (AndRightLabel, ExistsRightLabel)):
        return None
    for i, child in enumerate(tree.premises):
        if not isinstance(child.label, SeqRuleLabel):
            continue
        seq_label = child.label
        rule = rules[seq_label.rule_id]
        head_image = instantiate_head(rule, seq_label)
        middle_seq = Sequent(tree.conclusion.antecedent | head_image, tree.conclusion.consequent)
        new_children = []
        for j, other in enumerate(tree.premises):
            if j == i:
                new_children.append(other.premises[0])
            else:
                new_children.append(_add_to_antecedents(other, head_image))
        inner = ProofTree(middle_seq, tree.label, tuple(new_children))
        return ProofTree(tree.conclusion, seq_label, (inner,))
    return None


def _is_normal(tree: ProofTree) -> bool:
    for node in tree.nodes():
        if isinstance(node.label, (AndRightLabel, ExistsRightLabel)):
            if any(isinstance(p.label, SeqRuleLabel) for p in node.premises):
                return False
    return True


def normalize_proof(proof: ProofTree, rules: Sequence[ExistentialRule]) -> ProofTree:
    """Permute all rule inferences into a contiguous bottom block.

    Each swap is re-checked; a quadratic step bound guards termination.
    """
    index = {r.rule_id: r for r in rules}
    _require_fragment(proof)
    verify_proof(proof, index)
    node_count = sum(1 for _ in proof.nodes())
    budget = node_count * node_count + 1
    current = proof
    while not _is_normal(current):
        if budget <= 0:
            raise ValueError("normalization step bound exceeded")
        budget -= 1
        swapped = _swap_once(current, index)
        if swapped is None:
            break
        verify_proof(swapped, index)
        current = swapped
    if not _is_normal(current):
        raise ValueError("proof could not be normalized")
    return current


def _split_bottom_block(proof: ProofTree) -> tuple[list[tuple[Sequent, SeqRuleLabel]], ProofTree]:
    block: list[tuple[Sequent, SeqRuleLabel]] = []
    node = proof
    while isinstance(node.label, SeqRuleLabel):
        block.append((node.conclusion, node.label))
        node = node.premises[0]
    return block, node


def _assignment_candidates(
    top: ProofTree, expected: Formula, partial: dict[Variable, Term]
) -> Iterator[dict[Variable, Term]]:
    """Assignments read off the existential witnesses of the top proof by
    peeling the query formula; label data only, no search over instances."""
    if not isinstance(expected, Exists):
        yield dict(partial)
        return
    witnesses = []
    for node in top.nodes():
        label = node.label
        if isinstance(label, ExistsRightLabel) and label.principal == expected:
            witnesses.append(label.witness)
    for w in sorted(set(witnesses), key=term_key):
        partial[expected.var] = w
        yield from _assignment_candidates(top, substitute(expected.body, w, expected.var), partial)
        del partial[expected.var]


def proof_to_witness(
    proof: ProofTree, rules: Sequence[ExistentialRule]
) -> tuple[ChaseDerivation, dict[Variable, Term]]:
    """Read a witnessing chase derivation and assignment off a normalized proof."""
    index = {r.rule_id: r for r in rules}
    _require_fragment(proof)
    if not _is_normal(proof):
        raise ValueError("witness extraction requires a normalized proof")
    verify_proof(proof, index)

    block, top = _split_bottom_block(proof)
    sequents = [Sequent(seq.antecedent, frozenset()) for seq, _ in block]
    sequents.append(Sequent(top.conclusion.antecedent, frozenset()))
    labels = tuple(label for _, label in block)
    derivation = r_derivation_to_chase(DerivationChain(tuple(sequents), labels), rules)

    final = derivation.final
    query_formula = next(iter(proof.conclusion.consequent))
    for candidate in _assignment_candidates(top, query_formula, {}):
        stripped = query_formula
        while isinstance(stripped, Exists):
            stripped = stripped.body
        atoms = _flatten_conjuncts(stripped)
        image = frozenset(apply_atom(candidate, a) for a in atoms)
        if image <= final:
            return derivation, candidate
    raise ValueError("no witnessing assignment can be read off the proof")


def _flatten_conjuncts(phi: Formula) -> list[Atom]:
    if isinstance(phi, Atom):
        return [phi]
    if isinstance(phi, And):
        return _flatten_conjuncts(phi.left) + _flatten_conjuncts(phi.right)
    raise ValueError(f"not a conjunction of atoms: {phi}")
