"""Substitutions, homomorphism search, satisfaction and model checking.

All operations are pure functions over finite instances.  The special unary
predicate ``TOP`` is never materialized: satisfaction and homomorphism treat
``TOP(t)`` as true for every term of the decided universe (virtual closure).
"""

from __future__ import annotations

from typing import Iterator, Mapping

from .syntax import (
    CANONICAL_CONSTANT,
    TOP,
    And,
    Atom,
    Constant,
    Exists,
    Formula,
    Instance,
    Not,
    Sequent,
    Term,
    Variable,
    atom_key,
    conjoin,
    formula_constants,
    formula_key,
    free_vars,
    instance_terms,
    or_,
    substitute,
    term_key,
)

# A substitution is a finite partial map over terms; constants are fixed
# implicitly (apply_term leaves unmapped terms unchanged).
Substitution = Mapping[Term, Term]


def apply_term(sub: Substitution, t: Term) -> Term:
    return sub.get(t, t)


def apply_atom(sub: Substitution, atom: Atom) -> Atom:
    return Atom(atom.predicate, tuple(apply_term(sub, a) for a in atom.args))


def apply_instance(sub: Substitution, atoms: Instance) -> Instance:
    return frozenset(apply_atom(sub, a) for a in atoms)


def is_homomorphism(sub: Substitution, source: Instance, target: Instance) -> bool:
    """Direct check: constants fixed and every non-TOP source atom lands in target."""
    if any(isinstance(k, Constant) and k != v for k, v in sub.items()):
        return False
    return all(
        a.predicate == TOP or apply_atom(sub, a) in target for a in source
    )


def _match_atoms(
    atoms: list[Atom],
    target: Instance,
    binding: dict[Term, Term],
    target_by_pred: dict[tuple[str, int], list[Atom]],
) -> Iterator[dict[Term, Term]]:
    """Backtracking enumeration of all extensions of ``binding`` embedding
    ``atoms`` into ``target``.  Deterministic: atoms are pre-sorted, candidate
    target atoms tried in sorted order."""
    if not atoms:
        yield dict(binding)
        return
    first, rest = atoms[0], atoms[1:]
    for candidate in target_by_pred.get((first.predicate, first.arity), []):
        added: list[Term] = []
        ok = True
        for src, tgt in zip(first.args, candidate.args):
            if isinstance(src, Constant):
                if src != tgt:
                    ok = False
                    break
            elif src in binding:
                if binding[src] != tgt:
                    ok = False
                    break
            else:
                binding[src] = tgt
                added.append(src)
        if ok:
            yield from _match_atoms(rest, target, binding, target_by_pred)
        for key in added:
            del binding[key]


def _index_by_predicate(target: Instance) -> dict[tuple[str, int], list[Atom]]:
    index: dict[tuple[str, int], list[Atom]] = {}
    for a in sorted(target, key=atom_key):
        index.setdefault((a.predicate, a.arity), []).append(a)
    return index


def enumerate_homomorphisms(source: Instance, target: Instance) -> Iterator[dict[Term, Term]]:
    """All homomorphisms from ``source`` into ``target`` in deterministic order.

    TOP atoms constrain nothing beyond binding their argument to some term of
    the target universe (padded with the canonical constant when empty).
    """
    plain = sorted((a for a in source if a.predicate != TOP), key=atom_key)
    tops = sorted((a for a in source if a.predicate == TOP), key=atom_key)
    index = _index_by_predicate(target)
    universe = sorted(instance_terms(target) | {CANONICAL_CONSTANT}, key=term_key)

    def finish(binding: dict[Term, Term], pending: list[Atom]) -> Iterator[dict[Term, Term]]:
        if not pending:
            yield dict(binding)
            return
        arg = pending[0].args[0]
        if isinstance(arg, Constant) or arg in binding:
            yield from finish(binding, pending[1:])
            return
        for t in universe:
            binding[arg] = t
            yield from finish(binding, pending[1:])
            del binding[arg]

    for base in _match_atoms(plain, target, {}, index):
        yield from finish(base, tops)


def find_homomorphism(source: Instance, target: Instance) -> dict[Term, Term] | None:
    """First homomorphism from ``source`` into ``target``, or None.

    The search is complete: backtracking over candidate atom matches.
    """
    for hom in enumerate_homomorphisms(source, target):
        return hom
    return None


def hom_equivalent(left: Instance, right: Instance) -> bool:
    return find_homomorphism(left, right) is not None and find_homomorphism(right, left) is not None


def find_variable_isomorphism(left: Instance, right: Instance) -> dict[Term, Term] | None:
    """A bijective variable renaming (constants fixed) carrying left onto right.

    Used for "equal up to fresh-variable renaming" comparisons.
    """
    if len(left) != len(right):
        return None
    for hom in enumerate_homomorphisms(left, right):
        values = [v for k, v in hom.items() if isinstance(k, Variable)]
        if any(isinstance(v, Constant) for v in values):
            continue
        if len(set(values)) != len(values):
            continue
        if apply_instance(hom, left) == right:
            return hom
    return None


def decide_universe(instance: Instance, phi: Formula | None = None) -> list[Term]:
    """Quantifier universe: terms of the instance, constants of the formula,
    and the canonical constant ensuring nonemptiness."""
    universe = set(instance_terms(instance))
    if phi is not None:
        universe |= formula_constants(phi)
    universe.add(CANONICAL_CONSTANT)
    return sorted(universe, key=term_key)


def satisfies(
    instance: Instance,
    assignment: Substitution,
    phi: Formula,
    universe: list[Term] | None = None,
) -> bool:
    """Recursive satisfaction over a finite instance.

    The assignment must cover the free variables of ``phi``; the existential
    clause ranges over the decided universe.
    """
    if universe is None:
        universe = decide_universe(instance, phi)
    if isinstance(phi, Atom):
        if phi.predicate == TOP:
            return True
        return apply_atom(assignment, phi) in instance
    if isinstance(phi, Not):
        return not satisfies(instance, assignment, phi.body, universe)
    if isinstance(phi, And):
        return satisfies(instance, assignment, phi.left, universe) and satisfies(
            instance, assignment, phi.right, universe
        )
    for t in universe:
        extended = dict(assignment)
        extended[phi.var] = t
        if satisfies(instance, extended, phi.body, universe):
            return True
    return False


def models_rule(instance: Instance, rule) -> bool:
    """Every body match extends to a head match over the instance's terms."""
    index = _index_by_predicate(instance)
    body = sorted(rule.body, key=atom_key)
    head = sorted(rule.head, key=atom_key)
    for match in _match_atoms(body, instance, {}, index):
        extended = any(True for _ in _match_atoms(head, instance, dict(match), index))
        if not extended:
            return False
    return True


def models_kb(instance: Instance, database: Instance, rules) -> bool:
    """True iff the instance contains the database and satisfies every rule."""
    if not database <= instance:
        return False
    return all(models_rule(instance, rule) for rule in rules)


def formula_interpretation(seq: Sequent) -> Formula:
    """The sequent's formula: conjunction of the antecedent implies the
    disjunction of the consequent, elaborated into {~, &, exists}.

    The empty conjunction is the canonical truth TOP(_c0); the empty
    disjunction is its negation.
    """
    truth = Atom(TOP, (CANONICAL_CONSTANT,))
    ante = sorted(seq.antecedent, key=formula_key)
    cons = sorted(seq.consequent, key=formula_key)
    left: Formula = conjoin(ante) if ante else truth
    if cons:
        right: Formula = cons[0]
        for f in cons[1:]:
            right = or_(right, f)
    else:
        right = Not(truth)
    return or_(Not(left), right)


def assignments_over(variables: list[Variable], universe: list[Term]) -> Iterator[dict[Term, Term]]:
    """All total assignments of the given variables into the universe."""
    if not variables:
        yield {}
        return
    first, rest = variables[0], variables[1:]
    for t in universe:
        for tail in assignments_over(rest, universe):
            tail[first] = t
            yield tail


def falsified_by(instance: Instance, phi: Formula) -> bool:
    """True iff some assignment over the decided universe falsifies ``phi``."""
    universe = decide_universe(instance, phi)
    fv = sorted(free_vars(phi), key=lambda v: v.name)
    return any(
        not satisfies(instance, mu, phi, universe) for mu in assignments_over(fv, universe)
    )
