"""Machine and text formats for instances, derivations, proofs and mappings.

The machine format is line-oriented and canonical: sets are emitted in sorted
order, so identical inputs produce byte-identical output.  Variables carry a
``?`` marker so constants and variables survive round-trips structurally.

    formula  :=  '!' formula  |  '&(' formula ',' formula ')'
              |  '*(' ?var ',' formula ')'  |  atom
    atom     :=  predicate '(' term {',' term} ')'
    term     :=  name  |  '?' name
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

from .calculus import (
    AndLeftLabel,
    AndRightLabel,
    DerivationChain,
    ExistsLeftLabel,
    ExistsRightLabel,
    IdLabel,
    NegLeftLabel,
    NegRightLabel,
    ProofTree,
    RuleLabel,
    SeqRuleLabel,
)
from .chase import ChaseDerivation, Trigger, make_trigger
from .syntax import (
    And,
    Atom,
    Constant,
    Exists,
    ExistentialRule,
    Formula,
    Instance,
    Not,
    Sequent,
    Term,
    Variable,
    atom_key,
    formula_key,
    term_key,
)


class FormatError(ValueError):
    pass


# ---------------------------------------------------------------- terms


def format_term(t: Term) -> str:
    return f"?{t.name}" if isinstance(t, Variable) else t.name


def parse_term(text: str) -> Term:
    text = text.strip()
    if text.startswith("?"):
        name = text[1:]
        if not name:
            raise FormatError("empty variable name")
        return Variable(name)
    if not text:
        raise FormatError("empty term")
    return Constant(text)


# ---------------------------------------------------------------- formulas


def format_atom(atom: Atom) -> str:
    return f"{atom.predicate}({','.join(format_term(t) for t in atom.args)})"


def format_formula(phi: Formula) -> str:
    if isinstance(phi, Atom):
        return format_atom(phi)
    if isinstance(phi, Not):
        return f"!{format_formula(phi.body)}"
    if isinstance(phi, And):
        return f"&({format_formula(phi.left)},{format_formula(phi.right)})"
    return f"*({format_term(phi.var)},{format_formula(phi.body)})"


class _FormulaReader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str) -> FormatError:
        return FormatError(f"{message} at offset {self.pos} in {self.text!r}")

    def eat(self, ch: str) -> None:
        if self.pos >= len(self.text) or self.text[self.pos] != ch:
            raise self.error(f"expected {ch!r}")
        self.pos += 1

    def ident(self) -> str:
        start = self.pos
        while self.pos < len(self.text) and (
            self.text[self.pos].isalnum() or self.text[self.pos] == "_"
        ):
            self.pos += 1
        if self.pos == start:
            raise self.error("expected a name")
        return self.text[start:self.pos]

    def term(self) -> Term:
        if self.pos < len(self.text) and self.text[self.pos] == "?":
            self.pos += 1
            return Variable(self.ident())
        return Constant(self.ident())

    def formula(self) -> Formula:
        if self.pos >= len(self.text):
            raise self.error("unexpected end")
        ch = self.text[self.pos]
        if ch == "!":
            self.pos += 1
            return Not(self.formula())
        if ch == "&":
            self.pos += 1
            self.eat("(")
            left = self.formula()
            self.eat(",")
            right = self.formula()
            self.eat(")")
            return And(left, right)
        if ch == "*":
            self.pos += 1
            self.eat("(")
            var = self.term()
            if not isinstance(var, Variable):
                raise self.error("quantified name must be a variable")
            self.eat(",")
            body = self.formula()
            self.eat(")")
            return Exists(var, body)
        predicate = self.ident()
        self.eat("(")
        args: list[Term] = []
        if self.pos < len(self.text) and self.text[self.pos] != ")":
            args.append(self.term())
            while self.pos < len(self.text) and self.text[self.pos] == ",":
                self.pos += 1
                args.append(self.term())
        self.eat(")")
        return Atom(predicate, tuple(args))


def parse_formula(text: str) -> Formula:
    reader = _FormulaReader(text.strip())
    phi = reader.formula()
    if reader.pos != len(reader.text):
        raise reader.error("trailing input")
    return phi


def parse_atom(text: str) -> Atom:
    phi = parse_formula(text)
    if not isinstance(phi, Atom):
        raise FormatError(f"expected an atom, got {text!r}")
    return phi


# ---------------------------------------------------------------- sequents


def format_sequent(seq: Sequent) -> str:
    left = ";".join(format_formula(f) for f in sorted(seq.antecedent, key=formula_key))
    right = ";".join(format_formula(f) for f in sorted(seq.consequent, key=formula_key))
    return f"[{left}]|-[{right}]"


def parse_sequent(text: str) -> Sequent:
    text = text.strip()
    if "]|-[" not in text or not text.startswith("[") or not text.endswith("]"):
        raise FormatError(f"malformed sequent {text!r}")
    left_part, right_part = text[1:-1].split("]|-[", 1)

    def side(part: str) -> frozenset[Formula]:
        if not part:
            return frozenset()
        return frozenset(parse_formula(p) for p in part.split(";"))

    return Sequent(side(left_part), side(right_part))


# ---------------------------------------------------------------- instances


def format_instance(instance: Instance) -> str:
    lines = ["instance"]
    lines += [f"atom {format_atom(a)}" for a in sorted(instance, key=atom_key)]
    lines.append("end")
    return "\n".join(lines) + "\n"


def _block_lines(text: str, header: str) -> list[str]:
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines or lines[0] != header or lines[-1] != "end":
        raise FormatError(f"expected a {header!r} block")
    return lines[1:-1]


def parse_instance(text: str) -> Instance:
    atoms = []
    for line in _block_lines(text, "instance"):
        if not line.startswith("atom "):
            raise FormatError(f"unexpected line in instance block: {line!r}")
        atoms.append(parse_atom(line[5:]))
    return frozenset(atoms)


# ---------------------------------------------------------------- mappings


def format_mapping(mapping: Mapping[Term, Term]) -> str:
    lines = ["hom"]
    for source in sorted(mapping, key=term_key):
        lines.append(f"map {format_term(source)} {format_term(mapping[source])}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def parse_mapping(text: str) -> dict[Term, Term]:
    mapping: dict[Term, Term] = {}
    for line in _block_lines(text, "hom"):
        parts = line.split()
        if len(parts) != 3 or parts[0] != "map":
            raise FormatError(f"unexpected line in hom block: {line!r}")
        mapping[parse_term(parts[1])] = parse_term(parts[2])
    return mapping


# ---------------------------------------------------------------- bindings


def _format_bindings(bindings: Sequence[tuple[Variable, Term]]) -> str:
    if not bindings:
        return "-"
    return ";".join(f"{format_term(v)}={format_term(t)}" for v, t in bindings)


def _parse_bindings(text: str) -> tuple[tuple[Variable, Term], ...]:
    if text == "-":
        return ()
    out = []
    for part in text.split(";"):
        if "=" not in part:
            raise FormatError(f"malformed binding {part!r}")
        left, right = part.split("=", 1)
        var = parse_term(left)
        if not isinstance(var, Variable):
            raise FormatError(f"binding source must be a variable: {part!r}")
        out.append((var, parse_term(right)))
    return tuple(out)


def _format_fresh(fresh: Sequence[Variable]) -> str:
    if not fresh:
        return "-"
    return ";".join(format_term(v) for v in fresh)


def _parse_fresh(text: str) -> tuple[Variable, ...]:
    if text == "-":
        return ()
    out = []
    for part in text.split(";"):
        term = parse_term(part)
        if not isinstance(term, Variable):
            raise FormatError(f"fresh name must be a variable: {part!r}")
        out.append(term)
    return tuple(out)


# ---------------------------------------------------------------- derivations


def format_derivation(derivation: ChaseDerivation) -> str:
    lines = ["derivation"]
    base = derivation.initial
    lines += [f"base {format_atom(a)}" for a in sorted(base, key=atom_key)]
    for i in range(len(derivation)):
        instance, trigger = derivation.steps[i]
        successor = derivation.steps[i + 1][0]
        assert trigger is not None
        added = sorted(successor - instance, key=atom_key)
        adds = ";".join(format_atom(a) for a in added) if added else "-"
        lines.append(
            f"step rule {trigger.rule.rule_id} "
            f"match {_format_bindings(trigger.bindings)} adds {adds}"
        )
    lines.append("end")
    return "\n".join(lines) + "\n"


def parse_derivation(text: str, rules: Sequence[ExistentialRule]) -> ChaseDerivation:
    index = {r.rule_id: r for r in rules}
    base: set[Atom] = set()
    step_specs: list[tuple[str, tuple[tuple[Variable, Term], ...], list[Atom]]] = []
    for line in _block_lines(text, "derivation"):
        if line.startswith("base "):
            if step_specs:
                raise FormatError("base atoms must precede steps")
            base.add(parse_atom(line[5:]))
            continue
        parts = line.split()
        if len(parts) != 7 or parts[:1] != ["step"] or parts[1] != "rule" or parts[3] != "match" or parts[5] != "adds":
            raise FormatError(f"unexpected line in derivation block: {line!r}")
        rule_id, match_text, adds_text = parts[2], parts[4], parts[6]
        if rule_id not in index:
            raise FormatError(f"unknown rule {rule_id!r}")
        adds = [] if adds_text == "-" else [parse_atom(p) for p in adds_text.split(";")]
        step_specs.append((rule_id, _parse_bindings(match_text), adds))
    steps: list[tuple[Instance, Trigger | None]] = []
    current: Instance = frozenset(base)
    for rule_id, bindings, adds in step_specs:
        steps.append((current, Trigger(index[rule_id], bindings)))
        current = current | frozenset(adds)
    steps.append((current, None))
    return ChaseDerivation(tuple(steps))


# ---------------------------------------------------------------- proofs


def format_label(label: RuleLabel) -> str:
    if isinstance(label, IdLabel):
        return f"id{{{format_atom(label.principal)}}}"
    if isinstance(label, NegLeftLabel):
        return f"neg_l{{{format_formula(label.principal)}}}"
    if isinstance(label, NegRightLabel):
        return f"neg_r{{{format_formula(label.principal)}}}"
    if isinstance(label, AndLeftLabel):
        return f"and_l{{{format_formula(label.principal)}}}"
    if isinstance(label, AndRightLabel):
        return f"and_r{{{format_formula(label.principal)}}}"
    if isinstance(label, ExistsLeftLabel):
        return f"exists_l{{{format_formula(label.principal)}|{format_term(label.fresh)}}}"
    if isinstance(label, ExistsRightLabel):
        return f"exists_r{{{format_formula(label.principal)}|{format_term(label.witness)}}}"
    assert isinstance(label, SeqRuleLabel)
    return (
        f"seq{{{label.rule_id}|{_format_bindings(label.bindings)}|{_format_fresh(label.fresh)}}}"
    )


def parse_label(text: str) -> RuleLabel:
    if "{" not in text or not text.endswith("}"):
        raise FormatError(f"malformed label {text!r}")
    name, payload = text[:-1].split("{", 1)
    fields = payload.split("|")
    if name == "id":
        return IdLabel(parse_atom(fields[0]))
    if name in ("neg_l", "neg_r", "and_l", "and_r"):
        if len(fields) != 1:
            raise FormatError(f"label {name} takes one field")
        phi = parse_formula(fields[0])
        ctor = {
            "neg_l": NegLeftLabel,
            "neg_r": NegRightLabel,
            "and_l": AndLeftLabel,
            "and_r": AndRightLabel,
        }[name]
        return ctor(phi)
    if name == "exists_l":
        phi = parse_formula(fields[0])
        fresh = parse_term(fields[1])
        if not isinstance(fresh, Variable):
            raise FormatError("exists_l takes a fresh variable")
        return ExistsLeftLabel(phi, fresh)
    if name == "exists_r":
        if len(fields) != 2:
            raise FormatError("exists_r takes two fields")
        return ExistsRightLabel(parse_formula(fields[0]), parse_term(fields[1]))
    if name == "seq":
        if len(fields) != 3:
            raise FormatError("seq takes three fields")
        return SeqRuleLabel(fields[0], _parse_bindings(fields[1]), _parse_fresh(fields[2]))
    raise FormatError(f"unknown label kind {name!r}")


def format_proof(proof: ProofTree) -> str:
    lines = ["proof"]
    counter = 0

    def emit(node: ProofTree) -> int:
        nonlocal counter
        child_ids = [emit(p) for p in node.premises]
        node_id = counter
        counter += 1
        premises = ",".join(str(i) for i in child_ids) if child_ids else "-"
        lines.append(
            f"node {node_id} label {format_label(node.label)} "
            f"premises {premises} seq {format_sequent(node.conclusion)}"
        )
        return node_id

    root = emit(proof)
    lines.append(f"root {root}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def parse_proof(text: str) -> ProofTree:
    nodes: dict[int, ProofTree] = {}
    root_id: int | None = None
    for line in _block_lines(text, "proof"):
        parts = line.split()
        if parts[0] == "root":
            if len(parts) != 2:
                raise FormatError(f"malformed root line {line!r}")
            root_id = int(parts[1])
            continue
        if len(parts) != 8 or parts[0] != "node" or parts[2] != "label" or parts[4] != "premises" or parts[6] != "seq":
            raise FormatError(f"unexpected line in proof block: {line!r}")
        node_id = int(parts[1])
        label = parse_label(parts[3])
        premise_ids = [] if parts[5] == "-" else [int(p) for p in parts[5].split(",")]
        seq = parse_sequent(parts[7])
        try:
            premises = tuple(nodes[i] for i in premise_ids)
        except KeyError as missing:
            raise FormatError(f"premise {missing} referenced before definition") from None
        nodes[node_id] = ProofTree(seq, label, premises)
    if root_id is None or root_id not in nodes:
        raise FormatError("proof block lacks a valid root")
    return nodes[root_id]


def format_chain(chain: DerivationChain) -> str:
    lines = ["chain"]
    for i in range(len(chain)):
        lines.append(f"label {format_label(chain.labels[i])}")
    for seq in chain.sequents:
        lines.append(f"seq {format_sequent(seq)}")
    lines.append("end")
    return "\n".join(lines) + "\n"


def parse_chain(text: str) -> DerivationChain:
    labels: list[RuleLabel] = []
    sequents: list[Sequent] = []
    for line in _block_lines(text, "chain"):
        if line.startswith("label "):
            labels.append(parse_label(line[6:].strip()))
        elif line.startswith("seq "):
            sequents.append(parse_sequent(line[4:].strip()))
        else:
            raise FormatError(f"unexpected line in chain block: {line!r}")
    return DerivationChain(tuple(sequents), tuple(labels))


# ---------------------------------------------------------------- text views


def pretty_instance(instance: Instance) -> str:
    if not instance:
        return "(empty instance)"
    return "\n".join(str(a) for a in sorted(instance, key=atom_key))


def pretty_derivation(derivation: ChaseDerivation) -> str:
    lines = [f"initial: {pretty_oneline(derivation.initial)}"]
    for i in range(len(derivation)):
        instance, trigger = derivation.steps[i]
        successor = derivation.steps[i + 1][0]
        added = sorted(successor - instance, key=atom_key)
        assert trigger is not None
        lines.append(
            f"step {i + 1}: {trigger} adds {{{', '.join(str(a) for a in added)}}}"
        )
    lines.append(f"final: {pretty_oneline(derivation.final)}")
    return "\n".join(lines)


def pretty_oneline(instance: Instance) -> str:
    return "{" + ", ".join(str(a) for a in sorted(instance, key=atom_key)) + "}"


def pretty_proof(proof: ProofTree, indent: int = 0) -> str:
    from .calculus import label_name

    pad = "  " * indent
    lines = [f"{pad}[{label_name(proof.label)}] {proof.conclusion}"]
    for premise in proof.premises:
        lines.append(pretty_proof(premise, indent + 1))
    return "\n".join(lines)


def to_dot(instance: Instance) -> str:
    """DOT digraph of an instance: binary atoms become labeled edges, unary
    atoms node labels; other arities are listed as comments."""
    node_labels: dict[str, list[str]] = {}
    edges: list[str] = []
    others: list[str] = []

    def node_name(t: Term) -> str:
        return format_term(t)

    for atom in sorted(instance, key=atom_key):
        if atom.arity == 1:
            node_labels.setdefault(node_name(atom.args[0]), []).append(atom.predicate)
        elif atom.arity == 2:
            edges.append(
                f'  "{node_name(atom.args[0])}" -> "{node_name(atom.args[1])}" '
                f'[label="{atom.predicate}"];'
            )
        else:
            others.append(f"  // {atom}")
    lines = ["digraph instance {"]
    terms = sorted(instance_terms_sorted(instance))
    for name in terms:
        labels = node_labels.get(name)
        if labels:
            lines.append(f'  "{name}" [label="{name}: {",".join(sorted(labels))}"];')
        else:
            lines.append(f'  "{name}";')
    lines += edges
    lines += others
    lines.append("}")
    return "\n".join(lines) + "\n"


def instance_terms_sorted(instance: Instance) -> list[str]:
    names = set()
    for atom in instance:
        for t in atom.args:
            names.add(format_term(t))
    return sorted(names)
