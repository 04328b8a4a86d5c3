"""Core term, atom, formula, rule and sequent representations.

Constants and variables are distinguished structurally, never by spelling.
Engine-minted fresh variables use the reserved ``_z`` prefix; user input may
not contain underscore-prefixed names, so freshness is checkable by
construction and capture never arises.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import reduce

RESERVED_PREFIX = "_z"
TOP = "TOP"


@dataclass(frozen=True)
class Constant:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


Term = Constant | Variable

# Reserved constant guaranteeing a nonempty quantifier universe; its name is
# unparseable in user input (identifiers may not start with an underscore).
CANONICAL_CONSTANT = Constant("_c0")


def term_key(t: Term) -> tuple[int, str]:
    """Deterministic term order: constants before variables, then by name."""
    return (0 if isinstance(t, Constant) else 1, t.name)


@dataclass(frozen=True)
class Atom:
    predicate: str
    args: tuple[Term, ...]

    def __str__(self) -> str:
        return f"{self.predicate}({', '.join(str(a) for a in self.args)})"

    @property
    def arity(self) -> int:
        return len(self.args)

    def terms(self) -> set[Term]:
        return set(self.args)

    def variables(self) -> set[Variable]:
        return {a for a in self.args if isinstance(a, Variable)}

    def constants(self) -> set[Constant]:
        return {a for a in self.args if isinstance(a, Constant)}

    def is_ground(self) -> bool:
        return all(isinstance(a, Constant) for a in self.args)


def atom_key(a: Atom) -> tuple:
    """Deterministic atom order: (predicate, arity), then argument terms."""
    return (a.predicate, len(a.args)) + tuple(term_key(t) for t in a.args)


# An instance is a finite set of atoms; a database is a ground instance.
Instance = frozenset[Atom]


def instance_terms(instance: Instance) -> set[Term]:
    return set().union(*(a.terms() for a in instance)) if instance else set()


def is_database(instance: Instance) -> bool:
    return all(a.is_ground() for a in instance)


@dataclass(frozen=True)
class Not:
    body: "Formula"

    def __str__(self) -> str:
        return f"~{_wrap(self.body)}"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({_wrap(self.left)} & {_wrap(self.right)})"


@dataclass(frozen=True)
class Exists:
    var: Variable
    body: "Formula"

    def __str__(self) -> str:
        return f"exists {self.var}. {_wrap(self.body)}"


Formula = Atom | Not | And | Exists


def _wrap(phi: Formula) -> str:
    return str(phi)


def or_(left: Formula, right: Formula) -> Formula:
    """Derived disjunction, elaborated at construction time."""
    return Not(And(Not(left), Not(right)))


def implies(left: Formula, right: Formula) -> Formula:
    """Derived implication, elaborated at construction time."""
    return or_(Not(left), right)


def forall(variables: tuple[Variable, ...], body: Formula) -> Formula:
    """Derived universal closure over a variable block: one negation pair
    wrapping the whole existential prefix."""
    if not variables:
        return body
    inner: Formula = Not(body)
    for v in reversed(variables):
        inner = Exists(v, inner)
    return Not(inner)


def free_vars(phi: Formula) -> set[Variable]:
    """Variables with a free occurrence in ``phi``."""
    if isinstance(phi, Atom):
        return phi.variables()
    if isinstance(phi, Not):
        return free_vars(phi.body)
    if isinstance(phi, And):
        return free_vars(phi.left) | free_vars(phi.right)
    return free_vars(phi.body) - {phi.var}


def formula_constants(phi: Formula) -> set[Constant]:
    if isinstance(phi, Atom):
        return phi.constants()
    if isinstance(phi, Not):
        return formula_constants(phi.body)
    if isinstance(phi, And):
        return formula_constants(phi.left) | formula_constants(phi.right)
    return formula_constants(phi.body)


def all_vars(phi: Formula) -> set[Variable]:
    """Every variable occurring in ``phi``, free or bound."""
    if isinstance(phi, Atom):
        return phi.variables()
    if isinstance(phi, Not):
        return all_vars(phi.body)
    if isinstance(phi, And):
        return all_vars(phi.left) | all_vars(phi.right)
    return all_vars(phi.body) | {phi.var}


def formula_size(phi: Formula) -> int:
    if isinstance(phi, Atom):
        return 1
    if isinstance(phi, Not):
        return 1 + formula_size(phi.body)
    if isinstance(phi, And):
        return 1 + formula_size(phi.left) + formula_size(phi.right)
    return 1 + formula_size(phi.body)


def formula_key(phi: Formula) -> tuple[int, str]:
    """Structural order used wherever a deterministic formula pick is needed."""
    return (formula_size(phi), str(phi))


def substitute_term(t: Term, replacement: Term, var: Variable) -> Term:
    return replacement if t == var else t


def substitute_atom(atom: Atom, replacement: Term, var: Variable) -> Atom:
    return Atom(atom.predicate, tuple(substitute_term(a, replacement, var) for a in atom.args))


def substitute(phi: Formula, replacement: Term, var: Variable) -> Formula:
    """phi(t/x): replace free occurrences of ``var`` by ``replacement``.

    Bound occurrences are untouched.  Capture cannot arise because engine
    bound variables are globally fresh.
    """
    if isinstance(phi, Atom):
        return substitute_atom(phi, replacement, var)
    if isinstance(phi, Not):
        return Not(substitute(phi.body, replacement, var))
    if isinstance(phi, And):
        return And(substitute(phi.left, replacement, var), substitute(phi.right, replacement, var))
    if phi.var == var:
        return phi
    return Exists(phi.var, substitute(phi.body, replacement, var))


def conjoin(formulas: list[Formula]) -> Formula:
    """Right-associated conjunction of a nonempty formula list."""
    if not formulas:
        raise ValueError("empty conjunction has no canonical formula here")
    return reduce(lambda a, b: And(b, a), reversed(formulas[:-1]), formulas[-1])


@dataclass(frozen=True)
class ExistentialRule:
    """body -> head rule; head-only variables are existentially quantified."""

    rule_id: str
    body: frozenset[Atom]
    head: frozenset[Atom]

    def __post_init__(self) -> None:
        if not self.body or not self.head:
            raise ValueError(f"rule {self.rule_id}: body and head must be nonempty")

    @property
    def body_vars(self) -> frozenset[Variable]:
        return frozenset().union(*(a.variables() for a in self.body))

    @property
    def head_vars(self) -> frozenset[Variable]:
        return frozenset().union(*(a.variables() for a in self.head))

    @property
    def frontier_vars(self) -> frozenset[Variable]:
        return self.body_vars & self.head_vars

    @property
    def existential_vars(self) -> frozenset[Variable]:
        return self.head_vars - self.body_vars

    def existential_tuple(self) -> tuple[Variable, ...]:
        """Existential variables in the deterministic order used everywhere."""
        return tuple(sorted(self.existential_vars, key=lambda v: v.name))

    def sorted_body(self) -> list[Atom]:
        return sorted(self.body, key=atom_key)

    def sorted_head(self) -> list[Atom]:
        return sorted(self.head, key=atom_key)

    def __str__(self) -> str:
        b = ", ".join(str(a) for a in self.sorted_body())
        h = ", ".join(str(a) for a in self.sorted_head())
        return f"{b} -> {h}"


def rule_as_formula(rule: ExistentialRule) -> Formula:
    """The closed first-order formula of a rule, elaborated into {~, &, exists}."""
    body = conjoin(rule.sorted_body())
    head: Formula = conjoin(rule.sorted_head())
    for z in reversed(rule.existential_tuple()):
        head = Exists(z, head)
    universal = tuple(sorted(rule.body_vars, key=lambda v: v.name))
    return forall(universal, implies(body, head))


@dataclass(frozen=True)
class Sequent:
    antecedent: frozenset[Formula]
    consequent: frozenset[Formula]

    def __str__(self) -> str:
        left = ", ".join(str(f) for f in sorted(self.antecedent, key=formula_key))
        right = ", ".join(str(f) for f in sorted(self.consequent, key=formula_key))
        return f"{left} |- {right}"

    def formulas(self) -> frozenset[Formula]:
        return self.antecedent | self.consequent

    def antecedent_atoms(self) -> Instance:
        return frozenset(f for f in self.antecedent if isinstance(f, Atom))


def sequent_terms(seq: Sequent) -> set[Term]:
    """T(Γ ⊢ Δ): free variables and constants of all formulas of the sequent."""
    terms: set[Term] = set()
    for f in seq.formulas():
        terms |= free_vars(f)
        terms |= formula_constants(f)
    return terms


def gamma_terms(formulas: frozenset[Formula]) -> set[Term]:
    """T(Γ): free variables and constants occurring in a formula set."""
    terms: set[Term] = set()
    for f in formulas:
        terms |= free_vars(f)
        terms |= formula_constants(f)
    return terms


@dataclass(frozen=True)
class BCQ:
    """Boolean conjunctive query: existentially closed conjunction of atoms.

    Atoms are kept in input order (deduplicated) so that the derived formula
    and proof constructions are reproducible.
    """

    vars: tuple[Variable, ...]
    atoms: tuple[Atom, ...]

    def __post_init__(self) -> None:
        if not self.atoms:
            raise ValueError("a BCQ needs at least one atom")
        seen = set()
        for a in self.atoms:
            if a in seen:
                raise ValueError(f"duplicate query atom {a}")
            seen.add(a)
        occurring = set().union(*(a.variables() for a in self.atoms))
        listed = set(self.vars)
        if occurring != listed or len(self.vars) != len(listed):
            raise ValueError("query variable list must match the variables of its atoms")

    def atom_set(self) -> Instance:
        return frozenset(self.atoms)

    def as_formula(self) -> Formula:
        phi: Formula = conjoin(list(self.atoms))
        for v in reversed(self.vars):
            phi = Exists(v, phi)
        return phi

    def __str__(self) -> str:
        return str(self.as_formula())


@dataclass(frozen=True)
class Problem:
    """A knowledge base (database, rules) plus an optional query.

    Rule order defines the cyclic fairness order used during proof search.
    """

    database: Instance
    rules: tuple[ExistentialRule, ...]
    query: BCQ | None = None
    rule_index: dict[str, ExistentialRule] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        ids = [r.rule_id for r in self.rules]
        if len(ids) != len(set(ids)):
            raise ValueError("rule ids must be unique")
        if not is_database(self.database):
            raise ValueError("database atoms must be ground")
        object.__setattr__(self, "rule_index", {r.rule_id: r for r in self.rules})


_fresh_counter = itertools.count(1)


def fresh_variable() -> Variable:
    """Mint a globally fresh variable; next() is atomic under the GIL."""
    return Variable(f"{RESERVED_PREFIX}{next(_fresh_counter)}")


def reset_fresh_counter(start: int = 1) -> None:
    """Restart the fresh-name supply (one pipeline per CLI run; tests)."""
    global _fresh_counter
    _fresh_counter = itertools.count(start)
