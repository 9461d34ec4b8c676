"""Abstract syntax for the input language.

Constants are plain Python values: an ``int`` or a ``str`` starting with a
lowercase letter.  Variables are :class:`Variable` instances.  Every node is
an immutable dataclass, so programs can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

COMPARISONS = ("=", "<", "<=", ">", ">=")
FUNCTIONS = ("count", "sum")


@dataclass(frozen=True, slots=True)
class Variable:
    name: str

    def __post_init__(self):
        if not self.name or not self.name[0].isupper():
            raise ValueError(f"variable name must start uppercase: {self.name!r}")

    def __str__(self):
        return self.name


Constant = Union[int, str]
Term = Union[Variable, int, str]


def is_variable(t: Term) -> bool:
    return isinstance(t, Variable)


def is_constant(t: Term) -> bool:
    return not isinstance(t, Variable)


def format_term(t: Term) -> str:
    return str(t)


def term_sort_key(t: Term):
    # integers sort before symbols, as in the usual ASP term order
    if isinstance(t, int):
        return (0, t, "")
    if isinstance(t, str):
        return (1, 0, t)
    return (2, 0, t.name)


@dataclass(frozen=True, slots=True)
class Atom:
    predicate: str
    terms: tuple = ()

    @property
    def arity(self) -> int:
        return len(self.terms)

    @property
    def signature(self) -> tuple[str, int]:
        return (self.predicate, len(self.terms))

    def is_ground(self) -> bool:
        return not any(isinstance(t, Variable) for t in self.terms)

    def variables(self) -> Iterator[Variable]:
        for t in self.terms:
            if isinstance(t, Variable):
                yield t

    def substitute(self, binding: dict) -> "Atom":
        return Atom(self.predicate, tuple(binding.get(t, t) if isinstance(t, Variable) else t
                                          for t in self.terms))

    def sort_key(self):
        return (self.predicate, len(self.terms), tuple(term_sort_key(t) for t in self.terms))

    def __str__(self):
        if not self.terms:
            return self.predicate
        return f"{self.predicate}({','.join(map(str, self.terms))})"


@dataclass(frozen=True, slots=True)
class Literal:
    atom: Atom
    positive: bool = True

    def variables(self) -> Iterator[Variable]:
        return self.atom.variables()

    def substitute(self, binding: dict) -> "Literal":
        return Literal(self.atom.substitute(binding), self.positive)

    def __str__(self):
        return str(self.atom) if self.positive else f"not {self.atom}"


def complement(lit: Literal) -> Literal:
    """Flip the polarity of a literal (an involution)."""
    return Literal(lit.atom, not lit.positive)


@dataclass(frozen=True, slots=True)
class AggregateElement:
    terms: tuple
    conjunction: tuple

    def __post_init__(self):
        if not self.terms:
            raise ValueError("aggregate element needs at least one term")
        if not self.conjunction:
            raise ValueError("aggregate element needs a nonempty conjunction")

    def variables(self) -> Iterator[Variable]:
        for t in self.terms:
            if isinstance(t, Variable):
                yield t
        for a in self.conjunction:
            yield from a.variables()

    def substitute(self, binding: dict) -> "AggregateElement":
        return AggregateElement(
            tuple(binding.get(t, t) if isinstance(t, Variable) else t for t in self.terms),
            tuple(a.substitute(binding) for a in self.conjunction),
        )

    def key(self):
        """Identity of a ground pair ``(terms : conj)``; conjunction order is irrelevant."""
        return (self.terms, frozenset(self.conjunction))

    def __str__(self):
        return f"{','.join(map(str, self.terms))}: {', '.join(map(str, self.conjunction))}"


@dataclass(frozen=True, slots=True)
class AggregateAtom:
    function: str
    elements: tuple
    comparison: str
    guard: Term

    def __post_init__(self):
        if self.function not in FUNCTIONS:
            raise ValueError(f"unknown aggregate function {self.function!r}")
        if self.comparison not in COMPARISONS:
            raise ValueError(f"unknown comparison {self.comparison!r}")

    def variables(self) -> Iterator[Variable]:
        for e in self.elements:
            yield from e.variables()
        if isinstance(self.guard, Variable):
            yield self.guard

    def __str__(self):
        elems = "; ".join(map(str, self.elements))
        return f"#{self.function}{{{elems}}} {self.comparison} {self.guard}"


@dataclass(frozen=True, slots=True)
class Rule:
    head: tuple = ()
    body: tuple = ()
    aggregates: tuple = ()

    def __post_init__(self):
        if len(self.head) > 1:
            raise ValueError("disjunctive heads are not supported")
        if len(self.aggregates) > 1:
            raise ValueError("at most one aggregate per rule")
        if self.aggregates and self.head:
            raise ValueError("aggregates are only allowed in constraints")
        if not (self.head or self.body or self.aggregates):
            raise ValueError("empty rule")

    @property
    def is_constraint(self) -> bool:
        return not self.head

    @property
    def is_fact(self) -> bool:
        return bool(self.head) and not self.body and not self.aggregates

    @property
    def aggregate(self) -> AggregateAtom | None:
        return self.aggregates[0] if self.aggregates else None

    def variables(self) -> set[Variable]:
        out = set()
        for a in self.head:
            out.update(a.variables())
        for lit in self.body:
            out.update(lit.variables())
        for agg in self.aggregates:
            out.update(agg.variables())
        return out

    def global_variables(self) -> list[Variable]:
        """Variables of positive body literals, in order of first occurrence."""
        seen: dict[Variable, None] = {}
        for lit in self.body:
            if lit.positive:
                for v in lit.atom.variables():
                    seen.setdefault(v)
        return list(seen)

    def is_ground(self) -> bool:
        return not self.variables()

    def __str__(self):
        body = [str(lit) for lit in self.body] + [str(a) for a in self.aggregates]
        if not body:
            return f"{self.head[0]}."
        if not self.head:
            return f":- {', '.join(body)}."
        return f"{self.head[0]} :- {', '.join(body)}."


@dataclass(frozen=True)
class Program:
    rules: tuple = ()
    signatures: dict = field(default=None, compare=False, hash=False, repr=False)

    def __post_init__(self):
        if self.signatures is None:
            object.__setattr__(self, "signatures", collect_signatures(self.rules))

    def __iter__(self):
        return iter(self.rules)

    def __len__(self):
        return len(self.rules)

    @property
    def constraints(self) -> list[Rule]:
        return [r for r in self.rules if r.is_constraint]

    def predicates(self) -> set[str]:
        return set(self.signatures)

    def __str__(self):
        return "".join(f"{r}\n" for r in self.rules)


def rule_atoms(rule: Rule) -> Iterator[Atom]:
    yield from rule.head
    for lit in rule.body:
        yield lit.atom
    for agg in rule.aggregates:
        for e in agg.elements:
            yield from e.conjunction


def collect_signatures(rules: Iterable[Rule]) -> dict[str, int]:
    """Map each predicate to its arity; raises on inconsistent use."""
    arities: dict[str, int] = {}
    for rule in rules:
        for atom in rule_atoms(rule):
            known = arities.setdefault(atom.predicate, atom.arity)
            if known != atom.arity:
                raise ValueError(
                    f"predicate {atom.predicate} used with arities {known} and {atom.arity}")
    return arities
