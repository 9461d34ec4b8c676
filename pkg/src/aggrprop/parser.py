"""Text front end: tokenizer, recursive-descent parser, safety checking and
choice desugaring.

Grammar (one statement per ``.``)::

    statement := head "."  |  head ":-" body "."  |  ":-" body "."
               | "{" atom (";" atom)* "}" [":-" body] "."
    body      := item ("," item)*
    item      := atom | "not" atom | aggregate
    aggregate := ("#count" | "#sum") "{" element (";" element)* "}" OP guard
    element   := term ("," term)* ":" atom ("," atom)*
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import ArityError, ParseError, SafetyError
from .syntax import (COMPARISONS, AggregateAtom, AggregateElement, Atom, Literal,
                     Program, Rule, Variable)

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>%[^\n]*)
  | (?P<if>:-)
  | (?P<agg>\#(?:count|sum)\b)
  | (?P<op><=|>=|!=|=|<|>)
  | (?P<int>-?\d+)
  | (?P<var>[A-Z][A-Za-z0-9_]*)
  | (?P<ident>[a-z][A-Za-z0-9_]*'*)
  | (?P<punct>[.,;:(){}|])
""", re.VERBOSE)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.arities: dict[str, tuple[int, int, int]] = {}
        # variable -> first position inside the current statement
        self.var_pos: dict[Variable, tuple[int, int]] = {}

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.column)

    def advance(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text) -> Token:
        if self.tok.text != text:
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        return self.advance()

    # -- grammar -------------------------------------------------------
    def parse_program(self) -> tuple[list[Rule], list[tuple]]:
        rules, choices = [], []
        while self.tok.kind != "eof":
            self.var_pos = {}
            start = self.tok
            if self.tok.text == "{":
                atoms = self.parse_choice_head()
                body, aggs, builtins = ([], [], [])
                if self.tok.kind == "if":
                    self.advance()
                    body, aggs, builtins = self.parse_body()
                self.expect(".")
                if aggs:
                    raise self.error("aggregates are only supported in constraints", start)
                self.check_safety(atoms, body, aggs, builtins)
                choices.append((len(rules), atoms, tuple(body)))
                continue
            head = []
            if self.tok.kind != "if":
                head.append(self.parse_atom())
                if self.tok.text == "|":
                    raise self.error("disjunctive heads are not supported")
            body, aggs, builtins = [], [], []
            if self.tok.kind == "if":
                self.advance()
                body, aggs, builtins = self.parse_body()
            elif not head:
                raise self.error("empty statement")
            self.expect(".")
            if aggs and head:
                raise self.error("aggregates are only supported in constraints", start)
            if len(aggs) > 1:
                raise self.error("at most one aggregate per constraint", start)
            self.check_safety(head, body, aggs, builtins)
            rules.append(Rule(tuple(head), tuple(body), tuple(a for a, _ in aggs)))
        return rules, choices

    def parse_choice_head(self) -> list[Atom]:
        self.expect("{")
        atoms = [self.parse_atom()]
        while self.tok.text == ";":
            self.advance()
            atoms.append(self.parse_atom())
        self.expect("}")
        return atoms

    def parse_body(self):
        body, aggs, builtins = [], [], []
        while True:
            tok = self.tok
            if tok.kind == "agg":
                aggs.append((self.parse_aggregate(), tok))
            elif tok.kind == "ident" and tok.text == "not":
                self.advance()
                body.append(Literal(self.parse_atom(), False))
            elif tok.kind == "ident" and self.tokens[self.i + 1].kind != "op":
                body.append(Literal(self.parse_atom(), True))
            elif tok.kind in ("var", "int", "ident"):
                left = self.parse_term()
                if self.tok.kind != "op":
                    raise self.error("expected a comparison operator")
                self.advance()
                right = self.parse_term()
                builtins.append(((left, right), tok))
            else:
                raise self.error(f"unexpected {tok.text or 'end of input'!r} in body")
            if self.tok.text != ",":
                return body, aggs, builtins
            self.advance()

    def parse_aggregate(self) -> AggregateAtom:
        function = self.advance().text[1:]
        self.expect("{")
        elements = [self.parse_element()]
        while self.tok.text == ";":
            self.advance()
            elements.append(self.parse_element())
        self.expect("}")
        op = self.tok
        if op.kind != "op" or op.text not in COMPARISONS:
            raise self.error("expected one of = < <= > >= after aggregate")
        self.advance()
        gtok = self.tok
        guard = self.parse_term()
        if isinstance(guard, str):
            raise self.error("aggregate guard must be an integer or a variable", gtok)
        # identical pairs collapse: the element list is a set
        unique = list(dict.fromkeys(elements))
        return AggregateAtom(function, tuple(unique), op.text, guard)

    def parse_element(self) -> AggregateElement:
        terms = [self.parse_term()]
        while self.tok.text == ",":
            self.advance()
            terms.append(self.parse_term())
        self.expect(":")
        conj = []
        while True:
            if self.tok.text == "not":
                raise self.error("negation is not allowed inside aggregate elements")
            if self.tok.kind == "agg":
                raise self.error("nested aggregates are not supported")
            conj.append(self.parse_atom())
            if self.tok.text != ",":
                break
            self.advance()
        return AggregateElement(tuple(terms), tuple(conj))

    def parse_atom(self) -> Atom:
        tok = self.tok
        if tok.kind != "ident" or tok.text == "not":
            raise self.error(f"expected an atom, found {tok.text or 'end of input'!r}")
        self.advance()
        terms = []
        if self.tok.text == "(":
            self.advance()
            terms.append(self.parse_term())
            while self.tok.text == ",":
                self.advance()
                terms.append(self.parse_term())
            self.expect(")")
        known = self.arities.get(tok.text)
        if known is None:
            self.arities[tok.text] = (len(terms), tok.line, tok.column)
        elif known[0] != len(terms):
            raise ArityError(
                f"predicate {tok.text} used with arity {len(terms)}, "
                f"earlier with arity {known[0]} at {known[1]}:{known[2]}",
                tok.line, tok.column)
        return Atom(tok.text, tuple(terms))

    def parse_term(self):
        tok = self.advance()
        if tok.kind == "int":
            return int(tok.text)
        if tok.kind == "var":
            v = Variable(tok.text)
            self.var_pos.setdefault(v, (tok.line, tok.column))
            return v
        if tok.kind == "ident" and tok.text != "not":
            return tok.text
        self.i -= 1
        raise self.error(f"expected a term, found {tok.text or 'end of input'!r}")

    # -- checks --------------------------------------------------------
    def check_safety(self, head, body, aggs, builtins):
        bound = {v for lit in body if lit.positive for v in lit.atom.variables()}
        unsafe = []
        for atom in head:
            unsafe.extend(v for v in atom.variables() if v not in bound)
        for lit in body:
            if not lit.positive:
                unsafe.extend(v for v in lit.atom.variables() if v not in bound)
        for (left, right), _ in builtins:
            unsafe.extend(t for t in (left, right) if isinstance(t, Variable) and t not in bound)
        for agg, _ in aggs:
            if isinstance(agg.guard, Variable) and agg.guard not in bound:
                unsafe.append(agg.guard)
            for elem in agg.elements:
                local = {v for a in elem.conjunction for v in a.variables()}
                unsafe.extend(t for t in elem.terms
                              if isinstance(t, Variable) and t not in bound and t not in local)
        if unsafe:
            first = min(unsafe, key=lambda v: self.var_pos.get(v, (0, 0)))
            line, col = self.var_pos.get(first, (None, None))
            raise SafetyError(first.name, line, col)
        if builtins:
            _, tok = builtins[0]
            raise self.error("built-in comparisons are not supported", tok)


def _fresh_name(pred: str, taken: set[str]) -> str:
    name = pred + "'"
    while name in taken:
        name += "'"
    return name


def desugar_choices(rules: list[Rule], choices: list[tuple], taken: set[str]) -> list[Rule]:
    """Rewrite ``{a(X)} :- B.`` into ``a(X) :- B, not a'(X).`` and
    ``a'(X) :- B, not a(X).``, inserted where the choice rule appeared."""
    out: list[Rule] = []
    primed: dict[str, str] = {}
    pending = sorted(choices, key=lambda c: c[0])
    k = 0
    for pos in range(len(rules) + 1):
        while k < len(pending) and pending[k][0] == pos:
            _, atoms, body = pending[k]
            for atom in atoms:
                if atom.predicate not in primed:
                    primed[atom.predicate] = _fresh_name(atom.predicate, taken)
                    taken.add(primed[atom.predicate])
                shadow = Atom(primed[atom.predicate], atom.terms)
                out.append(Rule((atom,), body + (Literal(shadow, False),)))
                out.append(Rule((shadow,), body + (Literal(atom, False),)))
            k += 1
        if pos < len(rules):
            out.append(rules[pos])
    return out


def parse(text: str) -> Program:
    """Parse program text into a :class:`Program`.

    Raises :class:`ParseError` (with line and column) on syntax errors,
    :class:`SafetyError` naming the unbound variable, and
    :class:`ArityError` when a predicate is used with two arities.
    """
    p = _Parser(text)
    rules, choices = p.parse_program()
    if choices:
        rules = desugar_choices(rules, choices, set(p.arities))
    return Program(tuple(rules))


def parse_file(path) -> Program:
    with open(path, encoding="utf-8") as fh:
        return parse(fh.read())
