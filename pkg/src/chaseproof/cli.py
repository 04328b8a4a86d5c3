"""Command-line interface.

Subcommands: ``chase``, ``prove``, ``check-proof``, ``translate``, ``hom``.
Exit codes: 0 positive outcome, 1 negative outcome, 2 parse/usage error,
3 fuel exhausted / unknown.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bridge, serialize
from .calculus import ProofCheckError, verify_proof
from .chase import chase as run_chase
from .parser import ParseError, parse_problem
from .search import Verdict, prove as run_prove
from .semantics import find_homomorphism
from .serialize import FormatError
from .syntax import Instance, Problem, reset_fresh_counter

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_USAGE = 2
EXIT_UNKNOWN = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_USAGE):
        super().__init__(message)
        self.code = code


def _load_problem(path: str) -> Problem:
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise CliError(f"cannot read {path}: {err}") from err
    return parse_problem(text)


def _load_instance(path: str) -> Instance:
    """An instance block, or the database of a problem file."""
    try:
        text = Path(path).read_text()
    except OSError as err:
        raise CliError(f"cannot read {path}: {err}") from err
    stripped = text.strip()
    if stripped.startswith("instance"):
        return serialize.parse_instance(text)
    return parse_problem(text).database


def _write(path: str | None, content: str) -> None:
    if path is None:
        return
    Path(path).write_text(content)


def _cmd_chase(args: argparse.Namespace) -> int:
    problem = _load_problem(args.file)
    outcome = run_chase(problem.database, problem.rules, args.fuel)
    if args.format == "machine":
        print("chase")
        print(f"terminated {'yes' if outcome.terminated else 'no'}")
        print(f"steps {outcome.steps_used}")
        print("end")
        print(serialize.format_instance(outcome.final), end="")
        print(serialize.format_derivation(outcome.derivation), end="")
    else:
        status = "terminated" if outcome.terminated else "fuel exhausted"
        print(f"chase {status} after {outcome.steps_used} steps")
        print("final instance:")
        for line in serialize.pretty_instance(outcome.final).splitlines():
            print(f"  {line}")
        print("derivation:")
        for line in serialize.pretty_derivation(outcome.derivation).splitlines():
            print(f"  {line}")
    _write(args.out, serialize.format_instance(outcome.final) + serialize.format_derivation(outcome.derivation))
    if args.emit_dot:
        _write(args.emit_dot, serialize.to_dot(outcome.final))
    return EXIT_OK if outcome.terminated else EXIT_UNKNOWN


def _cmd_prove(args: argparse.Namespace) -> int:
    problem = _load_problem(args.file)
    if problem.query is None:
        raise CliError("the problem file has no query")
    outcome = run_prove(problem.database, problem.rules, problem.query, args.fuel)
    if args.format == "machine":
        print("prove")
        print(f"verdict {outcome.verdict.value}")
        print(f"steps {outcome.steps_used}")
        print("end")
        if outcome.proof is not None:
            print(serialize.format_proof(outcome.proof), end="")
        if outcome.counter_model is not None:
            print(serialize.format_instance(outcome.counter_model), end="")
        if outcome.partial is not None:
            print(serialize.format_instance(outcome.partial), end="")
    else:
        print(f"verdict: {outcome.verdict.value} ({outcome.steps_used} rule steps)")
        if outcome.proof is not None:
            print(serialize.pretty_proof(outcome.proof))
        if outcome.counter_model is not None:
            print("universal counter-model:")
            for line in serialize.pretty_instance(outcome.counter_model).splitlines():
                print(f"  {line}")
        if outcome.partial is not None:
            print("partial antecedent at exhaustion:")
            for line in serialize.pretty_instance(outcome.partial).splitlines():
                print(f"  {line}")
    if args.emit_proof and outcome.proof is not None:
        _write(args.emit_proof, serialize.format_proof(outcome.proof))
    if args.emit_model and outcome.counter_model is not None:
        _write(args.emit_model, serialize.format_instance(outcome.counter_model))
    if outcome.verdict is Verdict.PROVED:
        return EXIT_OK
    if outcome.verdict is Verdict.REFUTED:
        return EXIT_NEGATIVE
    return EXIT_UNKNOWN


def _cmd_check_proof(args: argparse.Namespace) -> int:
    problem = _load_problem(args.file)
    try:
        proof_text = Path(args.proof).read_text()
    except OSError as err:
        raise CliError(f"cannot read {args.proof}: {err}") from err
    proof = serialize.parse_proof(proof_text)
    index = {r.rule_id: r for r in problem.rules}
    try:
        verify_proof(proof, index, strict_witness=not args.permissive_witness)
    except ProofCheckError as err:
        if args.format == "machine":
            print("checkproof")
            print("verdict invalid")
            print(f"path {','.join(str(i) for i in err.path) if err.path else '-'}")
            print("end")
        else:
            print(f"invalid proof: {err}")
        return EXIT_NEGATIVE
    if args.format == "machine":
        print("checkproof")
        print("verdict valid")
        print("end")
    else:
        print("valid proof")
    return EXIT_OK


def _cmd_translate(args: argparse.Namespace) -> int:
    problem = _load_problem(args.file)
    if args.direction == "chase-to-proof":
        if problem.query is None:
            raise CliError("chase-to-proof needs a problem with a query")
        outcome = run_chase(problem.database, problem.rules, args.fuel)
        assignment = find_homomorphism(problem.query.atom_set(), outcome.final)
        if assignment is None:
            if not outcome.terminated:
                print("no witness within fuel", file=sys.stderr)
                return EXIT_UNKNOWN
            print("query not entailed: no witness in the chase fixpoint", file=sys.stderr)
            return EXIT_NEGATIVE
        proof = bridge.witness_to_proof(outcome.derivation, assignment, problem.query)
        text = serialize.format_proof(proof)
        print(text, end="")
        _write(args.out, text)
        return EXIT_OK
    if args.proof is None:
        raise CliError("proof-to-chase needs --proof")
    try:
        proof_text = Path(args.proof).read_text()
    except OSError as err:
        raise CliError(f"cannot read {args.proof}: {err}") from err
    proof = serialize.parse_proof(proof_text)
    try:
        normal = bridge.normalize_proof(proof, problem.rules)
        derivation, assignment = bridge.proof_to_witness(normal, problem.rules)
    except (ValueError, ProofCheckError) as err:
        print(f"cannot translate proof: {err}", file=sys.stderr)
        return EXIT_NEGATIVE
    text = serialize.format_derivation(derivation) + serialize.format_mapping(assignment)
    print(text, end="")
    _write(args.out, text)
    return EXIT_OK


def _cmd_hom(args: argparse.Namespace) -> int:
    source = _load_instance(args.source)
    target = _load_instance(args.target)
    mapping = find_homomorphism(source, target)
    if mapping is None:
        if args.format == "machine":
            print("hom")
            print("end")
        else:
            print("no homomorphism")
        return EXIT_NEGATIVE
    if args.format == "machine":
        print(serialize.format_mapping(mapping), end="")
    else:
        print("homomorphism found:")
        for line in serialize.format_mapping(mapping).splitlines()[1:-1]:
            print(f"  {line[4:]}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaseproof",
        description="Query answering for existential rules: restricted chase and "
        "sequent-calculus proof search, cross-checking each other.",
    )
    parser.add_argument("--fuel", type=int, default=10_000, help="step budget (default 10000)")
    parser.add_argument("--format", choices=("text", "machine"), default="text")
    parser.add_argument("--seed", type=int, default=0, help="reserved; no randomized component")
    sub = parser.add_subparsers(dest="command", required=True)

    p_chase = sub.add_parser("chase", help="saturate the database under the rules")
    p_chase.add_argument("file")
    p_chase.add_argument("--out", help="also write instance+derivation to a file")
    p_chase.add_argument("--emit-dot", help="write a DOT digraph of the final instance")
    p_chase.set_defaults(handler=_cmd_chase)

    p_prove = sub.add_parser("prove", help="decide the query by proof search")
    p_prove.add_argument("file")
    p_prove.add_argument("--emit-proof", help="write the proof (machine format) on success")
    p_prove.add_argument("--emit-model", help="write the counter-model on refutation")
    p_prove.set_defaults(handler=_cmd_prove)

    p_check = sub.add_parser("check-proof", help="validate a proof against a problem's rules")
    p_check.add_argument("file")
    p_check.add_argument("proof")
    p_check.add_argument(
        "--permissive-witness",
        action="store_true",
        help="accept existential witnesses outside the sequent's terms",
    )
    p_check.set_defaults(handler=_cmd_check_proof)

    p_translate = sub.add_parser("translate", help="convert between chase and proof form")
    p_translate.add_argument("file")
    p_translate.add_argument(
        "--direction", choices=("chase-to-proof", "proof-to-chase"), required=True
    )
    p_translate.add_argument("--proof", help="proof file (proof-to-chase)")
    p_translate.add_argument("--out", help="also write the result to a file")
    p_translate.set_defaults(handler=_cmd_translate)

    p_hom = sub.add_parser("hom", help="search a homomorphism between two instances")
    p_hom.add_argument("source")
    p_hom.add_argument("target")
    p_hom.set_defaults(handler=_cmd_hom)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_USAGE if err.code not in (0, None) else 0
    reset_fresh_counter()
    try:
        return args.handler(args)
    except CliError as err:
        print(f"error: {err}", file=sys.stderr)
        return err.code
    except (ParseError, FormatError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
