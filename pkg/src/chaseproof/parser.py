"""Surface syntax for problems: facts, rules and a query.

    M(b,a). M(c,b).
    M(x,y) -> A(x,y), F(x).
    A(x,y), A(y,z) -> A(x,z).
    ? A(x,a), F(x).

Statements end with a period; comments run from ``#`` to end of line.  All
fact arguments are constants.  In rules and queries an identifier denotes a
constant when it occurs in some fact or is quoted as ``'name'``, and a
variable otherwise.  Underscore-prefixed names and the predicate ``TOP`` are
reserved for the engine.
"""

from __future__ import annotations

from dataclasses import dataclass

from .syntax import (
    TOP,
    Atom,
    BCQ,
    Constant,
    ExistentialRule,
    Problem,
    Term,
    Variable,
)


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        self.message = message
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}")


@dataclass
class _Token:
    kind: str  # IDENT QUOTED ARROW DOT COMMA LPAREN RPAREN QMARK EOF
    value: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        ch = text[i]
        if ch == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(_Token("IDENT", text[i:j], start_line, start_col))
            col += j - i
            i = j
            continue
        if ch == "'":
            j = i + 1
            while j < n and text[j] not in "'\n":
                j += 1
            if j >= n or text[j] != "'":
                raise ParseError("unterminated quoted name", start_line, start_col)
            name = text[i + 1 : j]
            if not name:
                raise ParseError("empty quoted name", start_line, start_col)
            tokens.append(_Token("QUOTED", name, start_line, start_col))
            col += j - i + 1
            i = j + 1
            continue
        if ch == "-" and i + 1 < n and text[i + 1] == ">":
            tokens.append(_Token("ARROW", "->", start_line, start_col))
            i += 2
            col += 2
            continue
        simple = {".": "DOT", ",": "COMMA", "(": "LPAREN", ")": "RPAREN", "?": "QMARK"}
        if ch in simple:
            tokens.append(_Token(simple[ch], ch, start_line, start_col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", start_line, start_col)
    tokens.append(_Token("EOF", "", line, col))
    return tokens


@dataclass
class _RawAtom:
    predicate: str
    args: list[_Token]
    line: int
    col: int


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.next()
        if tok.kind != kind:
            raise ParseError(f"expected {kind}, found {tok.value!r}", tok.line, tok.col)
        return tok

    def atom(self) -> _RawAtom:
        name = self.expect("IDENT")
        self._check_name(name)
        if name.value == TOP:
            raise ParseError(f"predicate {TOP} is reserved", name.line, name.col)
        self.expect("LPAREN")
        args: list[_Token] = []
        if self.peek().kind != "RPAREN":
            while True:
                arg = self.next()
                if arg.kind not in ("IDENT", "QUOTED"):
                    raise ParseError(f"expected a term, found {arg.value!r}", arg.line, arg.col)
                if arg.kind == "IDENT":
                    self._check_name(arg)
                args.append(arg)
                if self.peek().kind == "COMMA":
                    self.next()
                    continue
                break
        self.expect("RPAREN")
        return _RawAtom(name.value, args, name.line, name.col)

    def atom_list(self) -> list[_RawAtom]:
        atoms = [self.atom()]
        while self.peek().kind == "COMMA":
            self.next()
            atoms.append(self.atom())
        return atoms

    @staticmethod
    def _check_name(tok: _Token) -> None:
        if tok.value.startswith("_"):
            raise ParseError(
                f"name {tok.value!r} uses the reserved underscore prefix", tok.line, tok.col
            )


def parse_problem(text: str) -> Problem:
    """Parse a problem file into a database, a rule list and an optional query."""
    parser = _Parser(text)
    facts: list[_RawAtom] = []
    raw_rules: list[tuple[list[_RawAtom], list[_RawAtom]]] = []
    raw_query: list[_RawAtom] | None = None
    query_tok: _Token | None = None

    while parser.peek().kind != "EOF":
        tok = parser.peek()
        if tok.kind == "QMARK":
            parser.next()
            if raw_query is not None:
                raise ParseError("a problem has at most one query", tok.line, tok.col)
            query_tok = tok
            raw_query = parser.atom_list()
            parser.expect("DOT")
            continue
        atoms = parser.atom_list()
        if parser.peek().kind == "ARROW":
            parser.next()
            head = parser.atom_list()
            parser.expect("DOT")
            raw_rules.append((atoms, head))
        else:
            parser.expect("DOT")
            if len(atoms) != 1:
                raise ParseError("a fact statement holds a single atom", tok.line, tok.col)
            facts.append(atoms[0])

    fact_constants = {arg.value for fact in facts for arg in fact.args}

    arities: dict[str, int] = {}

    def check_arity(raw: _RawAtom) -> None:
        known = arities.setdefault(raw.predicate, len(raw.args))
        if known != len(raw.args):
            raise ParseError(
                f"predicate {raw.predicate} used with arity {len(raw.args)}, "
                f"previously {known}",
                raw.line,
                raw.col,
            )

    def resolve(raw: _RawAtom, in_fact: bool) -> Atom:
        check_arity(raw)
        terms: list[Term] = []
        for arg in raw.args:
            if arg.kind == "QUOTED" or in_fact or arg.value in fact_constants:
                terms.append(Constant(arg.value))
            else:
                terms.append(Variable(arg.value))
        return Atom(raw.predicate, tuple(terms))

    database = frozenset(resolve(f, in_fact=True) for f in facts)

    rules: list[ExistentialRule] = []
    for k, (body_raw, head_raw) in enumerate(raw_rules, start=1):
        body = frozenset(resolve(a, in_fact=False) for a in body_raw)
        head = frozenset(resolve(a, in_fact=False) for a in head_raw)
        rules.append(ExistentialRule(f"r{k}", body, head))

    query: BCQ | None = None
    if raw_query is not None:
        atoms: list[Atom] = []
        seen: set[Atom] = set()
        order: list[Variable] = []
        listed: set[Variable] = set()
        for raw in raw_query:
            atom = resolve(raw, in_fact=False)
            if atom in seen:
                continue
            seen.add(atom)
            atoms.append(atom)
            for t in atom.args:
                if isinstance(t, Variable) and t not in listed:
                    listed.add(t)
                    order.append(t)
        if not atoms:
            assert query_tok is not None
            raise ParseError("empty query", query_tok.line, query_tok.col)
        query = BCQ(tuple(order), tuple(atoms))

    return Problem(database, tuple(rules), query)
