"""Query answering for existential rules via two cross-checking procedures:
the restricted chase and bottom-up sequent proof search."""

from .bridge import (
    chase_to_r_derivation,
    normalize_proof,
    proof_to_witness,
    r_derivation_to_chase,
    weaken_consequent,
    witness_to_proof,
)
from .calculus import (
    DerivationChain,
    ProofTree,
    check_inference,
    check_proof,
    is_r_derivation,
)
from .chase import (
    ChaseDerivation,
    ChaseOutcome,
    Entailment,
    Trigger,
    apply_trigger,
    bcq_entailed_by_chase,
    chase,
    find_triggers,
    is_active,
    one_step_chase,
)
from .parser import ParseError, parse_problem
from .search import SearchOutcome, Verdict, extract_counter_model, is_saturated, prove
from .semantics import (
    find_homomorphism,
    formula_interpretation,
    hom_equivalent,
    models_kb,
    satisfies,
)
from .syntax import (
    Atom,
    BCQ,
    Constant,
    ExistentialRule,
    Formula,
    Instance,
    Problem,
    Sequent,
    Term,
    Variable,
    free_vars,
    rule_as_formula,
    substitute,
)

__all__ = [
    "Atom",
    "BCQ",
    "ChaseDerivation",
    "ChaseOutcome",
    "Constant",
    "DerivationChain",
    "Entailment",
    "ExistentialRule",
    "Formula",
    "Instance",
    "ParseError",
    "Problem",
    "ProofTree",
    "SearchOutcome",
    "Sequent",
    "Term",
    "Trigger",
    "Variable",
    "Verdict",
    "apply_trigger",
    "bcq_entailed_by_chase",
    "chase",
    "chase_to_r_derivation",
    "check_inference",
    "check_proof",
    "extract_counter_model",
    "find_homomorphism",
    "find_triggers",
    "formula_interpretation",
    "free_vars",
    "hom_equivalent",
    "is_active",
    "is_r_derivation",
    "is_saturated",
    "models_kb",
    "normalize_proof",
    "one_step_chase",
    "parse_problem",
    "proof_to_witness",
    "prove",
    "r_derivation_to_chase",
    "rule_as_formula",
    "satisfies",
    "substitute",
    "weaken_consequent",
    "witness_to_proof",
]

__version__ = "0.1.0"
