"""Naive instantiation over the Herbrand universe, plus the positive
dependency graph.

Grounding is deliberately unintelligent: every variable of the standard
body ranges over every constant of the program, so a rule with ``v`` body
variables yields exactly ``|U|**v`` instances.  This is the baseline whose
size blows up.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

from .errors import GroundingBudgetExceeded, TimeBudgetExceeded
from .syntax import (AggregateAtom, AggregateElement, Atom, Program, Rule, Variable,
                     rule_atoms, term_sort_key)

DEFAULT_GROUND_CAP = 5_000_000


def herbrand_universe(program: Program) -> tuple:
    """All constants occurring in the program, in a fixed order."""
    consts = set()
    for rule in program.rules:
        for atom in rule_atoms(rule):
            consts.update(t for t in atom.terms if not isinstance(t, Variable))
        for agg in rule.aggregates:
            for elem in agg.elements:
                consts.update(t for t in elem.terms if not isinstance(t, Variable))
            if not isinstance(agg.guard, Variable):
                consts.add(agg.guard)
    return tuple(sorted(consts, key=term_sort_key))


def body_variables(rule: Rule) -> list[Variable]:
    seen: dict[Variable, None] = {}
    for lit in rule.body:
        for v in lit.atom.variables():
            seen.setdefault(v)
    return list(seen)


def instance_count(rule: Rule, universe) -> int:
    return len(universe) ** len(body_variables(rule))


def element_count(rule: Rule, universe) -> int:
    """Ground aggregate elements produced over all instances of ``rule``
    (before identical pairs collapse)."""
    glob = set(body_variables(rule))
    per_instance = 0
    for agg in rule.aggregates:
        for elem in agg.elements:
            local = {v for v in elem.variables() if v not in glob}
            per_instance += len(universe) ** len(local)
    return instance_count(rule, universe) * per_instance


def _ground_aggregate(agg: AggregateAtom, binding: dict, universe, templates) -> AggregateAtom:
    guard = binding.get(agg.guard, agg.guard) if isinstance(agg.guard, Variable) else agg.guard
    pairs: dict = {}
    for elem, local in templates:
        partial = elem.substitute(binding)
        if not local:
            pairs.setdefault(partial.key(), partial)
            continue
        for values in itertools.product(universe, repeat=len(local)):
            g = partial.substitute(dict(zip(local, values)))
            pairs.setdefault(g.key(), g)
    return AggregateAtom(agg.function, tuple(pairs.values()), agg.comparison, guard)


def ground_rule(rule: Rule, universe) -> list[Rule]:
    """Every instantiation of ``rule`` over ``universe``.

    Aggregate symbolic sets become ground sets: element-local variables range
    over the universe too, and identical ``(terms : conj)`` pairs collapse.
    """
    return list(_iter_ground_rule(rule, universe))


def _iter_ground_rule(rule: Rule, universe):
    variables = body_variables(rule)
    templates = []
    for agg in rule.aggregates:
        for elem in agg.elements:
            local = [v for v in dict.fromkeys(elem.variables()) if v not in variables]
            templates.append((elem, local))
    for values in itertools.product(universe, repeat=len(variables)):
        binding = dict(zip(variables, values))
        head = tuple(a.substitute(binding) for a in rule.head)
        body = tuple(lit.substitute(binding) for lit in rule.body)
        aggs = tuple(_ground_aggregate(a, binding, universe, templates) for a in rule.aggregates)
        yield Rule(head, body, aggs)


@dataclass
class GroundProgram:
    rules: list = field(default_factory=list)
    atoms: list = field(default_factory=list)          # id - 1 -> Atom
    atom_table: dict = field(default_factory=dict)     # Atom -> id, ids from 1

    def add_atom(self, atom: Atom) -> int:
        aid = self.atom_table.get(atom)
        if aid is None:
            self.atoms.append(atom)
            aid = self.atom_table[atom] = len(self.atoms)
        return aid

    def add_rule(self, rule: Rule):
        self.rules.append(rule)
        for atom in rule_atoms(rule):
            self.add_atom(atom)

    def __len__(self):
        return len(self.rules)

    def __str__(self):
        return "".join(f"{r}\n" for r in self.rules)


def ground_program(program: Program, cap: int | None = DEFAULT_GROUND_CAP, universe=None,
                   deadline: float | None = None) -> GroundProgram:
    """Union of :func:`ground_rule` over all rules, with a dense atom table.

    Raises :class:`GroundingBudgetExceeded` when the number of ground rules
    would pass ``cap``.  Naive instantiation makes that number exact in
    advance, so the check happens before any work.  Ground aggregate
    elements are held to the same limit; without that a program with few
    rules but wide aggregates could exhaust memory inside the cap.
    """
    if universe is None:
        universe = herbrand_universe(program)
    if cap is not None:
        needed = sum(instance_count(r, universe) for r in program.rules)
        if needed > cap:
            raise GroundingBudgetExceeded(cap, needed)
        elements = sum(element_count(r, universe) for r in program.rules)
        if elements > cap:
            raise GroundingBudgetExceeded(cap, elements, "ground aggregate elements")
    gp = GroundProgram()
    n = 0
    for rule in program.rules:
        for g in _iter_ground_rule(rule, universe):
            gp.add_rule(g)
            n += 1
            if deadline is not None and n % 512 == 0 and time.perf_counter() > deadline:
                raise TimeBudgetExceeded("time budget exceeded while grounding")
    return gp


# -- positive dependency graph --------------------------------------------

@dataclass(frozen=True)
class DependencyGraph:
    vertices: frozenset
    edges: frozenset  # (body predicate, head predicate)

    def successors(self) -> dict[str, set[str]]:
        out: dict[str, set[str]] = {v: set() for v in self.vertices}
        for u, v in self.edges:
            out[u].add(v)
        return out

    def has_cycle(self) -> bool:
        succ = self.successors()
        WHITE, GREY, BLACK = 0, 1, 2
        color = dict.fromkeys(succ, WHITE)
        for root in sorted(succ):
            if color[root] != WHITE:
                continue
            color[root] = GREY
            stack = [(root, iter(sorted(succ[root])))]
            while stack:
                node, it = stack[-1]
                nxt = next(it, None)
                if nxt is None:
                    color[node] = BLACK
                    stack.pop()
                elif color[nxt] == GREY:
                    return True
                elif color[nxt] == WHITE:
                    color[nxt] = GREY
                    stack.append((nxt, iter(sorted(succ[nxt]))))
        return False


def dependency_graph(program: Program) -> DependencyGraph:
    vertices = set(program.signatures)
    edges = set()
    for rule in program.rules:
        for head in rule.head:
            for lit in rule.body:
                if lit.positive:
                    edges.add((lit.atom.predicate, head.predicate))
    return DependencyGraph(frozenset(vertices), frozenset(edges))


def is_recursive(program: Program) -> bool:
    """True iff the positive dependency graph has a cycle (self-loops count)."""
    return dependency_graph(program).has_cycle()


def is_tight(program: Program) -> bool:
    return not is_recursive(program)
