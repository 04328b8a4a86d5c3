from __future__ import annotations

import itertools
import random

import pytest

from chaseproof.chase import (
    ChaseDerivation,
    Entailment,
    Trigger,
    apply_trigger,
    bcq_entailed_by_chase,
    chase,
    find_triggers,
    is_active,
    make_trigger,
    one_step_chase,
    recover_head_extension,
    validate_derivation,
)
from chaseproof.corpus import example_one, nonterminating_example, sample_models
from chaseproof.semantics import find_homomorphism, models_kb
from chaseproof.syntax import (
    Atom,
    BCQ,
    Constant,
    ExistentialRule,
    Instance,
    Variable,
    instance_terms,
    reset_fresh_counter,
)

x, y, z = Variable("x"), Variable("y"), Variable("z")
a, b, c = Constant("a"), Constant("b"), Constant("c")

RHO1 = ExistentialRule(
    "r1", frozenset({Atom("M", (x, y))}), frozenset({Atom("A", (x, y)), Atom("F", (x,))})
)
GROWS = ExistentialRule(
    "g", frozenset({Atom("r", (x, y))}), frozenset({Atom("r", (y, z))})
)


def oracle_assignments(rule: ExistentialRule, instance: Instance):
    """Exhaustive body-match enumeration over all term tuples."""
    variables = sorted(rule.body_vars, key=lambda v: v.name)
    terms = sorted(instance_terms(instance), key=lambda t: t.name)
    for values in itertools.product(terms, repeat=len(variables)):
        mapping = dict(zip(variables, values))
        image = {
            Atom(atom.predicate, tuple(mapping.get(t, t) for t in atom.args))
            for atom in rule.body
        }
        if image <= instance:
            yield mapping


# ----------------------------------------------------------- find_triggers


def test_find_triggers_example_one_database(ex1):
    triggers = find_triggers(ex1.database, ex1.rules)
    matches = {(t.rule.rule_id, tuple(sorted((v.name, str(tm)) for v, tm in t.bindings)))
               for t in triggers}
    assert matches == {
        ("r1", (("x", "b"), ("y", "a"))),
        ("r1", (("x", "c"), ("y", "b"))),
    }


def test_find_triggers_empty_instance():
    assert find_triggers(frozenset(), (RHO1,)) == []


def test_find_triggers_transitivity_self_loop():
    rule = ExistentialRule(
        "t",
        frozenset({Atom("r", (x, y)), Atom("r", (y, z))}),
        frozenset({Atom("r", (x, z))}),
    )
    inst = frozenset({Atom("r", (a, a))})
    expected = list(oracle_assignments(rule, inst))
    assert expected == [{x: a, y: a, z: a}]
    triggers = find_triggers(inst, (rule,))
    assert [t.match for t in triggers] == expected


def test_find_triggers_includes_inactive(ex1):
    final = chase(ex1.database, ex1.rules, 100).final
    triggers = find_triggers(final, ex1.rules)
    assert any(not is_active(t, final) for t in triggers)
    oracle_total = sum(
        1 for rule in ex1.rules for _ in oracle_assignments(rule, final)
    )
    assert len(triggers) == oracle_total


# ----------------------------------------------------------- is_active


def test_is_active_on_database(ex1):
    trigger = make_trigger(ex1.rules[0], {x: b, y: a})
    assert is_active(trigger, ex1.database)


def test_is_active_on_fixpoint(ex1):
    final = chase(ex1.database, ex1.rules, 100).final
    trigger = make_trigger(ex1.rules[0], {x: b, y: a})
    assert not is_active(trigger, final)


def test_is_active_existential_already_satisfied():
    rule = ExistentialRule("e", frozenset({Atom("p", (x,))}), frozenset({Atom("p", (y,))}))
    inst = frozenset({Atom("p", (a,))})
    trigger = make_trigger(rule, {x: a})
    assert not is_active(trigger, inst)


# ----------------------------------------------------------- apply_trigger


def test_apply_trigger_example_one(ex1):
    trigger = make_trigger(ex1.rules[0], {x: b, y: a})
    result = apply_trigger(trigger, ex1.database)
    assert result == ex1.database | {Atom("A", (b, a)), Atom("F", (b,))}


def test_apply_trigger_head_already_present_is_noop():
    rule = ExistentialRule("i", frozenset({Atom("p", (x,))}), frozenset({Atom("p", (x,))}))
    inst = frozenset({Atom("p", (a,))})
    assert apply_trigger(make_trigger(rule, {x: a}), inst) == inst


def test_apply_trigger_mints_fresh_null():
    reset_fresh_counter()
    inst = frozenset({Atom("r", (a, b))})
    trigger = make_trigger(GROWS, {x: a, y: b})
    result = apply_trigger(trigger, inst)
    new = result - inst
    assert len(new) == 1
    atom = next(iter(new))
    assert atom.predicate == "r" and atom.args[0] == b
    null = atom.args[1]
    assert isinstance(null, Variable) and null.name.startswith("_z")
    assert null not in instance_terms(inst)


def test_apply_trigger_rejects_non_trigger():
    trigger = make_trigger(GROWS, {x: a, y: b})
    with pytest.raises(ValueError):
        apply_trigger(trigger, frozenset({Atom("r", (b, c))}))


# ----------------------------------------------------------- one_step_chase


def test_one_step_chase_example_one(ex1):
    result = one_step_chase(ex1.database, ex1.rules)
    assert result == ex1.database | {
        Atom("A", (b, a)),
        Atom("F", (b,)),
        Atom("A", (c, b)),
        Atom("F", (c,)),
    }


def test_one_step_chase_no_rules():
    inst = frozenset({Atom("p", (a,))})
    assert one_step_chase(inst, ()) == inst


def test_one_step_chase_matches_trigger_fold():
    inst = frozenset({Atom("r", (a, b))})
    result = one_step_chase(inst, (GROWS,))
    new = result - inst
    assert len(new) == 1
    atom = next(iter(new))
    assert atom.args[0] == b and atom.args[1].name.startswith("_z")
    # oracle: fold apply_trigger over find_triggers
    folded = inst
    for trigger in find_triggers(inst, (GROWS,)):
        folded |= apply_trigger(trigger, inst)
    assert {(t.predicate, t.args[0]) for t in folded - inst} == {("r", b)}


def test_one_step_chase_fires_inactive_triggers_too():
    rule = ExistentialRule("e", frozenset({Atom("p", (x,))}), frozenset({Atom("q", (x, y))}))
    inst = frozenset({Atom("p", (a,)), Atom("q", (a, b))})
    result = one_step_chase(inst, (rule,))
    assert len(result - inst) == 1  # parallel one-step applies all triggers


# ----------------------------------------------------------- chase


def test_chase_example_one_fixpoint(ex1):
    outcome = chase(ex1.database, ex1.rules, 100)
    assert outcome.terminated
    assert outcome.steps_used == 3
    assert outcome.final == frozenset(
        {
            Atom("M", (b, a)),
            Atom("M", (c, b)),
            Atom("A", (b, a)),
            Atom("F", (b,)),
            Atom("A", (c, b)),
            Atom("F", (c,)),
            Atom("A", (c, a)),
        }
    )


def test_chase_no_rules_no_fuel():
    inst = frozenset({Atom("p", (a,))})
    outcome = chase(inst, (), 0)
    assert outcome.terminated and outcome.final == inst and outcome.steps_used == 0


def test_chase_nonterminating_runs_out_of_fuel():
    inst = frozenset({Atom("r", (a, b))})
    outcome = chase(inst, (GROWS,), 5)
    assert not outcome.terminated
    assert outcome.steps_used == 5
    assert len(outcome.final) == 6  # 5 fresh atoms on top of the seed
    validate_derivation(outcome.derivation)


def test_chase_derivation_monotone_and_valid(ex1):
    outcome = chase(ex1.database, ex1.rules, 100)
    validate_derivation(outcome.derivation)
    steps = outcome.derivation.steps
    for (before, _), (after, _) in zip(steps, steps[1:]):
        assert before <= after


def test_chase_termination_soundness_and_no_active_triggers(ex1):
    outcome = chase(ex1.database, ex1.rules, 100)
    assert models_kb(outcome.final, ex1.database, ex1.rules)
    assert all(not is_active(t, outcome.final) for t in find_triggers(outcome.final, ex1.rules))


def test_chase_freshness_invariant():
    inst = frozenset({Atom("r", (a, b))})
    outcome = chase(inst, (GROWS,), 4)
    for i in range(len(outcome.derivation)):
        before, trigger = outcome.derivation.steps[i]
        after = outcome.derivation.steps[i + 1][0]
        ext = recover_head_extension(before, trigger, after)
        assert ext is not None
        for v in trigger.rule.existential_tuple():
            assert ext[v] not in instance_terms(before)


def test_restricted_idempotence_on_fixpoint(ex1):
    final = chase(ex1.database, ex1.rules, 100).final
    grown = final
    for trigger in find_triggers(final, ex1.rules):
        if is_active(trigger, final):
            grown |= apply_trigger(trigger, final)
    assert grown == final


def test_chase_universality_at_desk_scale(ex1):
    final = chase(ex1.database, ex1.rules, 100).final
    models = sample_models(ex1, seed=5, count=25, max_atoms=10)
    assert len(models) > 3
    for model in models:
        assert models_kb(model, ex1.database, ex1.rules)
        assert find_homomorphism(final, model) is not None


def test_symmetric_matches_are_distinct_triggers():
    # body {r(x,y), r(y,x)} with head s(x): both symmetric matches must fire
    rule = ExistentialRule(
        "sym",
        frozenset({Atom("r", (x, y)), Atom("r", (y, x))}),
        frozenset({Atom("s", (x,))}),
    )
    inst = frozenset({Atom("r", (a, b)), Atom("r", (b, a))})
    outcome = chase(inst, (rule,), 10)
    assert outcome.terminated
    assert Atom("s", (a,)) in outcome.final and Atom("s", (b,)) in outcome.final
    assert models_kb(outcome.final, inst, (rule,))


# ----------------------------------------------------------- bcq answering


def test_bcq_example_one(ex1):
    verdict = bcq_entailed_by_chase(ex1.database, ex1.rules, ex1.query, 100)
    assert verdict is Entailment.YES


def test_bcq_witness_in_database():
    inst = frozenset({Atom("p", (a,))})
    query = BCQ((), (Atom("p", (a,)),))
    assert bcq_entailed_by_chase(inst, (), query, 0) is Entailment.YES


def test_bcq_nonterminating_unknown(nonterm):
    assert (
        bcq_entailed_by_chase(nonterm.database, nonterm.rules, nonterm.query, 50)
        is Entailment.UNKNOWN
    )


def test_bcq_no_after_termination():
    # same growing rule but seeded with a self-loop: the only trigger is inactive
    inst = frozenset({Atom("r", (a, a))})
    query = BCQ((x,), (Atom("r", (x, b)),))
    assert bcq_entailed_by_chase(inst, (GROWS,), query, 50) is Entailment.NO


def test_duplicate_trigger_not_refired():
    outcome = chase(frozenset({Atom("M", (b, a))}), (RHO1,), 100)
    assert outcome.terminated and outcome.steps_used == 1
