from __future__ import annotations

import pytest

from chaseproof.calculus import (
    AndLeftLabel,
    AndRightLabel,
    DerivationChain,
    ExistsLeftLabel,
    ExistsRightLabel,
    IdLabel,
    NegLeftLabel,
    NegRightLabel,
    ProofCheckError,
    ProofTree,
    SeqRuleLabel,
    check_chain,
    check_inference,
    check_proof,
    inference_failure,
    is_r_derivation,
    mandated_premises,
    verify_proof,
)
from chaseproof.corpus import example_one
from chaseproof.semantics import satisfies, formula_interpretation
from chaseproof.serialize import format_proof, parse_proof
from chaseproof.syntax import (
    And,
    Atom,
    Constant,
    Exists,
    Not,
    Sequent,
    Variable,
)

x, y, z = Variable("x"), Variable("y"), Variable("z")
a, b, c = Constant("a"), Constant("b"), Constant("c")

M = lambda s, t: Atom("M", (s, t))
A = lambda s, t: Atom("A", (s, t))
F = lambda s: Atom("F", (s,))


def query_formula():
    return Exists(x, And(A(x, a), F(x)))


def figure_three_proof(ex1) -> ProofTree:
    """The paper's worked proof, built literally: three rule inferences below,
    an existential instantiation, a conjunction split (principal dropped in
    the premises, as printed), and two initial inferences."""
    qf = query_formula()
    gamma_full = frozenset({M(b, a), A(b, a), F(b), M(c, b), A(c, b), F(c), A(c, a)})
    conj = And(A(c, a), F(c))

    id_left = ProofTree(Sequent(gamma_full, frozenset({qf, A(c, a)})), IdLabel(A(c, a)))
    id_right = ProofTree(Sequent(gamma_full, frozenset({qf, F(c)})), IdLabel(F(c)))
    and_node = ProofTree(
        Sequent(gamma_full, frozenset({qf, conj})), AndRightLabel(conj), (id_left, id_right)
    )
    exists_node = ProofTree(
        Sequent(gamma_full, frozenset({qf})), ExistsRightLabel(qf, c), (and_node,)
    )
    seq_rho2 = ProofTree(
        Sequent(frozenset({M(b, a), A(b, a), F(b), M(c, b), A(c, b), F(c)}), frozenset({qf})),
        SeqRuleLabel("r2", ((x, c), (y, b), (z, a)), ()),
        (exists_node,),
    )
    seq_rho1_top = ProofTree(
        Sequent(frozenset({M(b, a), A(b, a), F(b), M(c, b)}), frozenset({qf})),
        SeqRuleLabel("r1", ((x, c), (y, b)), ()),
        (seq_rho2,),
    )
    root = ProofTree(
        Sequent(frozenset({M(b, a), M(c, b)}), frozenset({qf})),
        SeqRuleLabel("r1", ((x, b), (y, a)), ()),
        (seq_rho1_top,),
    )
    return root


# ----------------------------------------------------------- check_inference


def test_id_inference(ex1):
    seq = Sequent(frozenset({M(b, a), A(c, a)}), frozenset({A(c, a), query_formula()}))
    assert check_inference(seq, IdLabel(A(c, a)), [])


def test_id_requires_shared_atom():
    seq = Sequent(frozenset({A(c, a)}), frozenset({F(c)}))
    err = inference_failure(seq, IdLabel(A(c, a)), [])
    assert err is not None and err.reason == "shape mismatch"


def test_seq_rule_figure_three_instance(ex1):
    qf = query_formula()
    conclusion = Sequent(
        frozenset({M(b, a), A(b, a), F(b), M(c, b), A(c, b), F(c)}), frozenset({qf})
    )
    premise = Sequent(conclusion.antecedent | {A(c, a)}, frozenset({qf}))
    label = SeqRuleLabel("r2", ((x, c), (y, b), (z, a)), ())
    assert check_inference(conclusion, label, [premise], ex1.rule_index)


def test_exists_left_freshness_violation():
    phi = Exists(x, Atom("p", (x,)))
    conclusion = Sequent(frozenset({phi, Atom("q", (y,))}), frozenset())
    label = ExistsLeftLabel(phi, y)  # reuses a context variable
    premise = Sequent(frozenset({Atom("p", (y,)), Atom("q", (y,))}), frozenset())
    err = inference_failure(conclusion, label, [premise])
    assert err is not None and err.reason == "freshness violation"


def test_seq_rule_freshness_violation(ex1):
    rule_grow = __import__("chaseproof.syntax", fromlist=["ExistentialRule"]).ExistentialRule(
        "g", frozenset({Atom("r", (x, y))}), frozenset({Atom("r", (y, z))})
    )
    conclusion = Sequent(frozenset({Atom("r", (a, b))}), frozenset())
    v = Variable("_z9")
    bad = SeqRuleLabel("g", ((x, a), (y, b)), (b,))  # a constant is not fresh
    with_const = inference_failure(conclusion, bad, [Sequent(frozenset(), frozenset())], {"g": rule_grow})
    assert with_const is not None
    stale = SeqRuleLabel("g", ((x, a), (y, b)), (y,))  # occurs in the conclusion
    err = inference_failure(
        conclusion, stale, [Sequent(conclusion.antecedent | {Atom("r", (b, y))}, frozenset())],
        {"g": rule_grow},
    )
    assert err is not None and err.reason == "freshness violation"
    good = SeqRuleLabel("g", ((x, a), (y, b)), (v,))
    premise = Sequent(conclusion.antecedent | {Atom("r", (b, v))}, frozenset())
    assert check_inference(conclusion, good, [premise], {"g": rule_grow})


def test_exists_right_witness_universe():
    phi = Exists(x, Atom("p", (x,)))
    conclusion = Sequent(frozenset({Atom("q", (a,))}), frozenset({phi}))
    outside = ExistsRightLabel(phi, c)  # c occurs nowhere in the sequent
    premise = Sequent(conclusion.antecedent, frozenset({phi, Atom("p", (c,))}))
    err = inference_failure(conclusion, outside, [premise])
    assert err is not None and err.reason == "witness outside term universe"
    # the permissive reading accepts any well-formed term
    assert check_inference(conclusion, outside, [premise], strict_witness=False)
    inside = ExistsRightLabel(phi, a)
    premise_a = Sequent(conclusion.antecedent, frozenset({phi, Atom("p", (a,))}))
    assert check_inference(conclusion, inside, [premise_a])


def test_wrong_premise_count():
    seq = Sequent(frozenset({Atom("p", (a,))}), frozenset({Atom("p", (a,))}))
    err = inference_failure(seq, IdLabel(Atom("p", (a,))), [seq])
    assert err is not None and err.reason == "wrong premise count"


def test_and_right_accepts_both_context_readings():
    conj = And(Atom("p", (a,)), Atom("q", (a,)))
    gamma = frozenset({Atom("p", (a,)), Atom("q", (a,))})
    conclusion = Sequent(gamma, frozenset({conj}))
    dropped = [
        Sequent(gamma, frozenset({Atom("p", (a,))})),
        Sequent(gamma, frozenset({Atom("q", (a,))})),
    ]
    kept = [
        Sequent(gamma, frozenset({conj, Atom("p", (a,))})),
        Sequent(gamma, frozenset({conj, Atom("q", (a,))})),
    ]
    mixed = [dropped[0], kept[1]]
    label = AndRightLabel(conj)
    assert check_inference(conclusion, label, dropped)
    assert check_inference(conclusion, label, kept)
    assert not check_inference(conclusion, label, mixed)


def test_exists_right_principal_persists():
    phi = Exists(x, Atom("p", (x,)))
    conclusion = Sequent(frozenset({Atom("p", (a,))}), frozenset({phi}))
    label = ExistsRightLabel(phi, a)
    keeping = Sequent(conclusion.antecedent, frozenset({phi, Atom("p", (a,))}))
    dropping = Sequent(conclusion.antecedent, frozenset({Atom("p", (a,))}))
    assert check_inference(conclusion, label, [keeping])
    assert not check_inference(conclusion, label, [dropping])


# ----------------------------------------------------------- general G3 rules


def test_neg_left_rule():
    p = Atom("p", (a,))
    conclusion = Sequent(frozenset({Not(p), p}), frozenset({Atom("q", (b,))}))
    premise = Sequent(frozenset({p}), frozenset({Atom("q", (b,)), p}))
    proof = ProofTree(conclusion, NegLeftLabel(Not(p)), (ProofTree(premise, IdLabel(p)),))
    assert check_proof(proof)


def test_neg_right_rule():
    p = Atom("p", (a,))
    conclusion = Sequent(frozenset(), frozenset({Not(p), p}))
    premise = Sequent(frozenset({p}), frozenset({p}))
    proof = ProofTree(conclusion, NegRightLabel(Not(p)), (ProofTree(premise, IdLabel(p)),))
    assert check_proof(proof)


def test_and_left_rule():
    p, q = Atom("p", (a,)), Atom("q", (a,))
    conj = And(p, q)
    conclusion = Sequent(frozenset({conj}), frozenset({q}))
    premise = Sequent(frozenset({p, q}), frozenset({q}))
    proof = ProofTree(conclusion, AndLeftLabel(conj), (ProofTree(premise, IdLabel(q)),))
    assert check_proof(proof)


def test_exists_left_then_right():
    v = Variable("_z5")
    ex_ante = Exists(x, Atom("p", (x,)))
    ex_cons = Exists(y, Atom("p", (y,)))
    conclusion = Sequent(frozenset({ex_ante}), frozenset({ex_cons}))
    mid = Sequent(frozenset({Atom("p", (v,))}), frozenset({ex_cons}))
    top = Sequent(frozenset({Atom("p", (v,))}), frozenset({ex_cons, Atom("p", (v,))}))
    proof = ProofTree(
        conclusion,
        ExistsLeftLabel(ex_ante, v),
        (
            ProofTree(
                mid,
                ExistsRightLabel(ex_cons, v),
                (ProofTree(top, IdLabel(Atom("p", (v,)))),),
            ),
        ),
    )
    assert check_proof(proof)


# ----------------------------------------------------------- check_proof


def test_figure_three_proof_checks(ex1):
    proof = figure_three_proof(ex1)
    assert check_proof(proof, ex1.rules)
    assert proof.label_multiset() == {
        "s(r1)": 2,
        "s(r2)": 1,
        "exists_r": 1,
        "and_r": 1,
        "id": 2,
    }


def test_single_id_proof():
    p = Atom("p", (a,))
    proof = ProofTree(Sequent(frozenset({p}), frozenset({p})), IdLabel(p))
    assert check_proof(proof)


def test_mutated_root_fails_at_lowest_node(ex1):
    proof = figure_three_proof(ex1)
    smaller = Sequent(frozenset({M(b, a)}), proof.conclusion.consequent)
    mutated = ProofTree(smaller, proof.label, proof.premises)
    assert not check_proof(mutated, ex1.rules)
    with pytest.raises(ProofCheckError) as exc:
        verify_proof(mutated, ex1.rule_index)
    assert exc.value.path == ()


def test_leaf_must_be_initial():
    p = Atom("p", (a,))
    bad = ProofTree(Sequent(frozenset({p}), frozenset({p})), AndRightLabel(And(p, p)))
    assert not check_proof(bad)


def test_label_sufficiency(ex1):
    proof = figure_three_proof(ex1)
    for node in proof.nodes():
        variants = mandated_premises(node.conclusion, node.label, ex1.rule_index)
        assert [p.conclusion for p in node.premises] in variants


def test_recheck_after_serialization(ex1):
    proof = figure_three_proof(ex1)
    text = format_proof(proof)
    reparsed = parse_proof(text)
    assert reparsed == proof
    assert check_proof(reparsed, ex1.rules)


def test_checked_proof_sound_on_rule_models(ex1):
    from chaseproof.corpus import sample_models

    proof = figure_three_proof(ex1)
    assert check_proof(proof, ex1.rules)
    phi = formula_interpretation(proof.conclusion)
    for model in sample_models(ex1, seed=9, count=15, max_atoms=10):
        assert satisfies(model, {}, phi)


# ----------------------------------------------------------- chains


def chain_of(ex1) -> DerivationChain:
    qf = frozenset()
    s0 = Sequent(frozenset({M(b, a), M(c, b)}), qf)
    s1 = Sequent(s0.antecedent | {A(b, a), F(b)}, qf)
    s2 = Sequent(s1.antecedent | {A(c, b), F(c)}, qf)
    s3 = Sequent(s2.antecedent | {A(c, a)}, qf)
    labels = (
        SeqRuleLabel("r1", ((x, b), (y, a)), ()),
        SeqRuleLabel("r1", ((x, c), (y, b)), ()),
        SeqRuleLabel("r2", ((x, c), (y, b), (z, a)), ()),
    )
    return DerivationChain((s0, s1, s2, s3), labels)


def test_r_derivation_recognition(ex1):
    chain = chain_of(ex1)
    assert is_r_derivation(chain)
    assert check_chain(chain, ex1.rules)
    empty = DerivationChain((chain.sequents[0],), ())
    assert is_r_derivation(empty)
    qf = query_formula()
    mixed = DerivationChain(
        (
            Sequent(frozenset({M(b, a)}), frozenset({And(qf, qf)})),
            Sequent(frozenset({M(b, a)}), frozenset({And(qf, qf), qf})),
        ),
        (AndRightLabel(And(qf, qf)),),
    )
    assert not is_r_derivation(mixed)
