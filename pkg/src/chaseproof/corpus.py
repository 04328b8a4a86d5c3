"""Deterministic problem generators and brute-force reference oracles.

The oracle shares only the core syntax types with the engine under test: it
saturates by exhaustive assignment enumeration and answers queries by
enumerating all variable-to-term maps, so it exercises none of the engine's
matching or search code.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass

from .chase import Entailment
from .syntax import (
    Atom,
    BCQ,
    Constant,
    ExistentialRule,
    Instance,
    Problem,
    Term,
    Variable,
    atom_key,
    fresh_variable,
    term_key,
)

EXAMPLE_ONE_TEXT = """\
# ancestry: mothers are female ancestors; ancestry is transitive
M(b,a).
M(c,b).
M(x,y) -> A(x,y), F(x).
A(x,y), A(y,z) -> A(x,z).
? A(x,a), F(x).
"""

NONTERMINATING_TEXT = """\
r(a,b).
r(x,y) -> r(y,z).
? r(x,a).
"""


def example_one() -> Problem:
    from .parser import parse_problem

    return parse_problem(EXAMPLE_ONE_TEXT)


def nonterminating_example() -> Problem:
    from .parser import parse_problem

    return parse_problem(NONTERMINATING_TEXT)


def terminates_syntactically(rules: tuple[ExistentialRule, ...]) -> bool:
    """Conservative check: predicates of head atoms carrying an existential
    variable must not occur in any rule body, so fresh nulls never feed a
    body match and the restricted chase runs out of triggers."""
    body_predicates = {a.predicate for r in rules for a in r.body}
    for rule in rules:
        for atom in rule.head:
            if atom.variables() & rule.existential_vars and atom.predicate in body_predicates:
                return False
    return True


@dataclass(frozen=True)
class CorpusProfile:
    name: str
    kb_count: int
    constants: tuple[str, ...]
    base_predicates: tuple[tuple[str, int], ...]
    sink_predicates: tuple[tuple[str, int], ...]
    max_facts: int
    max_datalog_rules: int
    max_existential_rules: int


PROFILES: dict[str, CorpusProfile] = {
    "terminating-small": CorpusProfile(
        name="terminating-small",
        kb_count=60,
        constants=("a", "b", "c", "d", "e"),
        base_predicates=(("p", 1), ("q", 1), ("r", 2), ("s", 2)),
        sink_predicates=(("t", 2), ("u", 1)),
        max_facts=6,
        max_datalog_rules=3,
        max_existential_rules=2,
    ),
    "linear-rules": CorpusProfile(
        name="linear-rules",
        kb_count=30,
        constants=("a", "b", "c", "d"),
        base_predicates=(("p", 1), ("r", 2)),
        sink_predicates=(("t", 2),),
        max_facts=5,
        max_datalog_rules=2,
        max_existential_rules=2,
    ),
    "transitive-closure": CorpusProfile(
        name="transitive-closure",
        kb_count=20,
        constants=("a", "b", "c", "d", "e"),
        base_predicates=(("e", 2), ("n", 1)),
        sink_predicates=(),
        max_facts=7,
        max_datalog_rules=2,
        max_existential_rules=0,
    ),
    "nonterminating": CorpusProfile(
        name="nonterminating",
        kb_count=10,
        constants=("a", "b"),
        base_predicates=(("r", 2),),
        sink_predicates=(),
        max_facts=3,
        max_datalog_rules=1,
        max_existential_rules=1,
    ),
}

_VARS = tuple(Variable(n) for n in ("x", "y", "z", "w", "v"))


def _random_fact(rng: random.Random, profile: CorpusProfile) -> Atom:
    pred, arity = rng.choice(profile.base_predicates)
    args = tuple(Constant(rng.choice(profile.constants)) for _ in range(arity))
    return Atom(pred, args)


def _random_body(rng: random.Random, preds, size: int) -> tuple[frozenset[Atom], list[Variable]]:
    used: list[Variable] = []
    atoms = []
    for _ in range(size):
        pred, arity = rng.choice(preds)
        args = []
        for _ in range(arity):
            if used and rng.random() < 0.6:
                args.append(rng.choice(used))
            else:
                v = _VARS[len(used) % len(_VARS)] if len(used) < len(_VARS) else None
                if v is None or v in used:
                    v = Variable(f"x{len(used)}")
                used.append(v)
                args.append(v)
        atoms.append(Atom(pred, tuple(args)))
    return frozenset(atoms), used


def _datalog_rule(rng: random.Random, profile: CorpusProfile, rule_id: str) -> ExistentialRule:
    body, body_vars = _random_body(rng, profile.base_predicates, rng.randint(1, 2))
    head_atoms = []
    for _ in range(rng.randint(1, 2)):
        pred, arity = rng.choice(profile.base_predicates)
        args = tuple(rng.choice(body_vars) for _ in range(arity))
        head_atoms.append(Atom(pred, args))
    return ExistentialRule(rule_id, body, frozenset(head_atoms))


def _existential_rule(rng: random.Random, profile: CorpusProfile, rule_id: str) -> ExistentialRule:
    body, body_vars = _random_body(rng, profile.base_predicates, rng.randint(1, 2))
    pred, arity = rng.choice(profile.sink_predicates)
    n_exist = rng.randint(1, max(1, arity))
    exist_vars = [Variable(f"z{i}") for i in range(n_exist)]
    args = []
    pool_exist = list(exist_vars)
    for i in range(arity):
        if pool_exist and (i >= arity - len(pool_exist) or rng.random() < 0.5):
            args.append(pool_exist.pop(0))
        else:
            args.append(rng.choice(body_vars))
    head = frozenset({Atom(pred, tuple(args))})
    return ExistentialRule(rule_id, body, head)


def generate_kbs(profile: str, seed: int) -> list[Problem]:
    """Deterministic knowledge bases for the given profile and seed."""
    spec = PROFILES[profile]
    rng = random.Random(f"{spec.name}-{seed}")
    problems: list[Problem] = []
    if profile == "terminating-small":
        problems.append(example_one())
    if profile == "nonterminating":
        problems.append(nonterminating_example())
    while len(problems) < spec.kb_count:
        facts = frozenset(
            _random_fact(rng, spec) for _ in range(rng.randint(2, spec.max_facts))
        )
        rules: list[ExistentialRule] = []
        k = 1
        for _ in range(rng.randint(1, spec.max_datalog_rules) if spec.max_datalog_rules else 0):
            rules.append(_datalog_rule(rng, spec, f"r{k}"))
            k += 1
        if spec.sink_predicates:
            for _ in range(rng.randint(0, spec.max_existential_rules)):
                rules.append(_existential_rule(rng, spec, f"r{k}"))
                k += 1
        if profile == "nonterminating":
            x, y, z = Variable("x"), Variable("y"), Variable("z")
            rules.append(
                ExistentialRule(
                    f"r{k}",
                    frozenset({Atom("r", (x, y))}),
                    frozenset({Atom("r", (y, z))}),
                )
            )
        if not rules:
            continue
        if profile != "nonterminating" and not terminates_syntactically(tuple(rules)):
            continue
        problems.append(Problem(facts, tuple(rules), None))
    return problems


def generate_queries(problem: Problem, seed: int, count: int = 3) -> list[BCQ]:
    """Deterministic queries over a problem's vocabulary: a mix of likely
    entailed, likely refuted, and constant-anchored shapes."""
    rng = random.Random(f"queries-{seed}-{sorted(a.predicate for a in problem.database)!r}")
    arities: dict[str, int] = {}
    for a in problem.database:
        arities.setdefault(a.predicate, a.arity)
    for r in problem.rules:
        for a in r.body | r.head:
            arities.setdefault(a.predicate, a.arity)
    constants = sorted(
        {t for a in problem.database for t in a.args if isinstance(t, Constant)},
        key=term_key,
    ) or [Constant("a")]
    preds = sorted(arities.items())
    queries: list[BCQ] = []
    attempts = 0
    while len(queries) < count and attempts < 100 * count:
        attempts += 1
        n_atoms = rng.randint(1, 2)
        atoms: list[Atom] = []
        var_pool = [Variable("x"), Variable("y"), Variable("z")]
        used_vars: list[Variable] = []
        for _ in range(n_atoms):
            if rng.random() < 0.1:
                pred, arity = ("missing", 1)
            else:
                pred, arity = rng.choice(preds)
            args: list[Term] = []
            for _ in range(arity):
                roll = rng.random()
                if roll < 0.25:
                    args.append(rng.choice(constants))
                elif used_vars and roll < 0.55:
                    args.append(rng.choice(used_vars))
                else:
                    v = var_pool[len(used_vars)] if len(used_vars) < 3 else rng.choice(used_vars or var_pool)
                    if v not in used_vars:
                        used_vars.append(v)
                    args.append(v)
            atoms.append(Atom(pred, tuple(args)))
        deduped: list[Atom] = []
        for a in atoms:
            if a not in deduped:
                deduped.append(a)
        order: list[Variable] = []
        for a in deduped:
            for t in a.args:
                if isinstance(t, Variable) and t not in order:
                    order.append(t)
        try:
            queries.append(BCQ(tuple(order), tuple(deduped)))
        except ValueError:
            continue
    return queries


def sample_instances(
    problem: Problem, seed: int, count: int, max_atoms: int = 8
) -> list[Instance]:
    """Random ground instances over the problem's vocabulary (model sampler)."""
    rng = random.Random(f"sampler-{seed}")
    arities: dict[str, int] = {}
    for a in problem.database:
        arities.setdefault(a.predicate, a.arity)
    for r in problem.rules:
        for a in r.body | r.head:
            arities.setdefault(a.predicate, a.arity)
    if problem.query is not None:
        for a in problem.query.atoms:
            arities.setdefault(a.predicate, a.arity)
    constants = sorted(
        {t for a in problem.database for t in a.args if isinstance(t, Constant)},
        key=term_key,
    )
    constants += [Constant("n1"), Constant("n2")]
    preds = sorted(arities.items())
    out: list[Instance] = []
    for _ in range(count):
        atoms = set()
        for _ in range(rng.randint(0, max_atoms)):
            pred, arity = rng.choice(preds)
            atoms.add(Atom(pred, tuple(rng.choice(constants) for _ in range(arity))))
        out.append(frozenset(atoms))
    return out


# ------------------------------------------------------------------ oracle


def _oracle_terms(instance: set[Atom]) -> list[Term]:
    terms: set[Term] = set()
    for a in instance:
        terms.update(a.args)
    return sorted(terms, key=term_key)


def _oracle_image(atoms, mapping: dict) -> set[Atom]:
    return {Atom(a.predicate, tuple(mapping.get(t, t) for t in a.args)) for a in atoms}


def _oracle_body_matches(rule: ExistentialRule, instance: set[Atom]) -> list[dict]:
    variables = sorted(rule.body_vars, key=lambda v: v.name)
    terms = _oracle_terms(instance)
    matches = []
    for values in itertools.product(terms, repeat=len(variables)):
        mapping = dict(zip(variables, values))
        if _oracle_image(rule.body, mapping) <= instance:
            matches.append(mapping)
    return matches


def _oracle_head_satisfied(rule: ExistentialRule, mapping: dict, instance: set[Atom]) -> bool:
    existentials = sorted(rule.existential_vars, key=lambda v: v.name)
    terms = _oracle_terms(instance)
    for values in itertools.product(terms, repeat=len(existentials)):
        extended = dict(mapping)
        extended.update(zip(existentials, values))
        if _oracle_image(rule.head, extended) <= instance:
            return True
    return False


def _oracle_query_holds(query: BCQ, instance: set[Atom]) -> bool:
    terms = _oracle_terms(instance)
    for values in itertools.product(terms, repeat=len(query.vars)):
        mapping = dict(zip(query.vars, values))
        if _oracle_image(query.atoms, mapping) <= instance:
            return True
    return False


def _oracle_saturate(
    base: set[Atom], rules, bound: int
) -> tuple[set[Atom], bool]:
    """Naive restricted saturation: fire the first active match found by
    exhaustive scanning, repeat.  Returns (instance, saturated?)."""
    instance = set(base)
    applications = 0
    while True:
        fired = False
        for rule in rules:
            for mapping in _oracle_body_matches(rule, instance):
                if _oracle_head_satisfied(rule, mapping, instance):
                    continue
                if applications >= bound:
                    return instance, False
                extended = dict(mapping)
                for z in sorted(rule.existential_vars, key=lambda v: v.name):
                    extended[z] = fresh_variable()
                instance |= _oracle_image(rule.head, extended)
                applications += 1
                fired = True
                break
            if fired:
                break
        if not fired:
            return instance, True


def sample_models(
    problem: Problem,
    seed: int,
    count: int,
    max_atoms: int = 10,
    tries: int = 500,
) -> list[Instance]:
    """Random finite models of (D, R): random supersets of the database,
    closed under the rules by the independent oracle saturation."""
    rng = random.Random(f"models-{seed}")
    arities: dict[str, int] = {}
    for a in problem.database:
        arities.setdefault(a.predicate, a.arity)
    for r in problem.rules:
        for a in r.body | r.head:
            arities.setdefault(a.predicate, a.arity)
    constants = sorted(
        {t for a in problem.database for t in a.args if isinstance(t, Constant)},
        key=term_key,
    ) + [Constant("m1"), Constant("m2")]
    preds = sorted(arities.items())
    models: list[Instance] = []
    for _ in range(tries):
        if len(models) >= count:
            break
        extra = set()
        for _ in range(rng.randint(0, 3)):
            pred, arity = rng.choice(preds)
            extra.add(Atom(pred, tuple(rng.choice(constants) for _ in range(arity))))
        saturated, done = _oracle_saturate(set(problem.database) | extra, problem.rules, 60)
        if done and len(saturated) <= max_atoms:
            models.append(frozenset(saturated))
    return models


def oracle_entailment(
    database: Instance,
    rules: tuple[ExistentialRule, ...],
    query: BCQ,
    bound: int = 10_000,
) -> Entailment:
    """Reference answer by naive bounded saturation plus exhaustive query
    enumeration; the cross-check target for both decision procedures."""
    instance: set[Atom] = set(database)
    if _oracle_query_holds(query, instance):
        return Entailment.YES
    applications = 0
    while True:
        fired = False
        for rule in rules:
            for mapping in _oracle_body_matches(rule, instance):
                if _oracle_head_satisfied(rule, mapping, instance):
                    continue
                if applications >= bound:
                    return Entailment.UNKNOWN
                extended = dict(mapping)
                for z in sorted(rule.existential_vars, key=lambda v: v.name):
                    extended[z] = fresh_variable()
                instance |= _oracle_image(rule.head, extended)
                applications += 1
                fired = True
                if _oracle_query_holds(query, instance):
                    return Entailment.YES
                break
            if fired:
                break
        if not fired:
            return Entailment.NO


def problem_to_text(problem: Problem) -> str:
    """Emit a problem in the surface grammar.

    Constants in rule and query atoms are quoted, so the emission never
    depends on the fact-constant declaration rule; rule variables must not
    collide with fact constants (generated corpora keep the pools disjoint).
    """
    fact_names = {t.name for a in problem.database for t in a.args}
    lines = [f"{_fact_text(a)}." for a in sorted(problem.database, key=atom_key)]

    def term_text(t: Term) -> str:
        if isinstance(t, Constant):
            return f"'{t.name}'"
        if t.name in fact_names:
            raise ValueError(
                f"variable {t.name} collides with a fact constant; cannot emit"
            )
        return t.name

    def atom_text(a: Atom) -> str:
        return f"{a.predicate}({','.join(term_text(t) for t in a.args)})"

    for rule in problem.rules:
        body = ", ".join(atom_text(a) for a in rule.sorted_body())
        head = ", ".join(atom_text(a) for a in rule.sorted_head())
        lines.append(f"{body} -> {head}.")
    if problem.query is not None:
        atoms = ", ".join(atom_text(a) for a in problem.query.atoms)
        lines.append(f"? {atoms}.")
    return "\n".join(lines) + "\n"


def _fact_text(a: Atom) -> str:
    return f"{a.predicate}({','.join(t.name for t in a.args)})"
