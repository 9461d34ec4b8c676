"""Reference semantics by exhaustive enumeration.

Nothing here is clever.  Interpretations are sets of true ground atoms
(every other atom is false), aggregates are evaluated by building the
multiset of first terms, and stability is decided by trying every proper
subset of the true atoms against the FLP reduct.  Slow by design; it is the
yardstick the solver and the propagators are measured against.
"""

from __future__ import annotations

from typing import AbstractSet, Iterable

from .errors import AtomCapExceeded
from .grounder import GroundProgram, ground_program
from .syntax import AggregateAtom, Program, Rule

DEFAULT_ATOM_CAP = 18


def _guard_number(guard):
    # symbolic constants sort after every integer
    return guard if isinstance(guard, int) else float("inf")


def compare(value: int, op: str, guard) -> bool:
    g = _guard_number(guard)
    if op == ">=":
        return value >= g
    if op == ">":
        return value > g
    if op == "<=":
        return value <= g
    if op == "<":
        return value < g
    if op == "=":
        return value == g
    raise ValueError(f"unknown comparison {op!r}")


def _weight(first, function):
    if function == "count":
        return 1
    if isinstance(first, bool) or not isinstance(first, int):
        raise ValueError(f"#sum weight {first!r} is not an integer")
    return first


def aggregate_multiset(agg: AggregateAtom, true_atoms: AbstractSet) -> list:
    """First terms of the pairs whose conjunction is true, one per distinct pair."""
    seen = set()
    out = []
    for elem in agg.elements:
        key = elem.key()
        if key in seen:
            continue
        seen.add(key)
        if all(a in true_atoms for a in elem.conjunction):
            out.append(elem.terms[0])
    return out


def aggregate_value(agg: AggregateAtom, true_atoms: AbstractSet) -> int:
    values = aggregate_multiset(agg, true_atoms)
    if agg.function == "count":
        return len(values)
    return sum(_weight(v, "sum") for v in values)


def eval_aggregate(agg: AggregateAtom, true_atoms: AbstractSet) -> bool:
    return compare(aggregate_value(agg, true_atoms), agg.comparison, agg.guard)


def body_true(rule: Rule, true_atoms: AbstractSet) -> bool:
    for lit in rule.body:
        if (lit.atom in true_atoms) != lit.positive:
            return False
    return all(eval_aggregate(a, true_atoms) for a in rule.aggregates)


def _rules(p) -> list[Rule]:
    return p.rules if isinstance(p, GroundProgram) else list(p)


def is_model(p, true_atoms: AbstractSet) -> bool:
    for rule in _rules(p):
        if body_true(rule, true_atoms):
            if not rule.head or rule.head[0] not in true_atoms:
                return False
    return True


def flp_reduct(p, true_atoms: AbstractSet) -> GroundProgram:
    """The rules whose body is true under the interpretation."""
    out = GroundProgram()
    for rule in _rules(p):
        if body_true(rule, true_atoms):
            out.add_rule(rule)
    return out


def is_stable(p, true_atoms: AbstractSet) -> bool:
    """A model is stable when no proper subset of its true atoms models the reduct."""
    true_atoms = frozenset(true_atoms)
    if not is_model(p, true_atoms):
        return False
    reduct = flp_reduct(p, true_atoms)
    atoms = sorted(true_atoms, key=lambda a: a.sort_key())
    full = (1 << len(atoms)) - 1
    sub = full
    while sub:
        sub = (sub - 1) & full
        subset = frozenset(a for i, a in enumerate(atoms) if sub >> i & 1)
        if is_model(reduct, subset):
            return False
    return True


def possible_atoms(rules: Iterable[Rule]) -> set:
    """Atoms derivable when negation is ignored; every stable model is a subset."""
    rules = [r for r in rules if r.head]
    derived: set = set()
    changed = True
    while changed:
        changed = False
        for r in rules:
            h = r.head[0]
            if h not in derived and all(l.atom in derived for l in r.body if l.positive):
                derived.add(h)
                changed = True
    return derived


class _BitProgram:
    """Ground rules over bitmask interpretations of the candidate atoms."""

    def __init__(self, rules, candidates):
        self.atoms = sorted(candidates, key=lambda a: a.sort_key())
        bit = {a: 1 << i for i, a in enumerate(self.atoms)}
        self.rules = []
        for r in rules:
            pos = neg = 0
            dead = False
            for lit in r.body:
                b = bit.get(lit.atom)
                if lit.positive:
                    if b is None:
                        dead = True
                        break
                    pos |= b
                elif b is not None:
                    neg |= b
            if dead:
                continue
            agg = None
            if r.aggregates:
                a = r.aggregates[0]
                elems = []
                seen = set()
                for e in a.elements:
                    key = e.key()
                    if key in seen:
                        continue
                    seen.add(key)
                    mask = 0
                    for atom in e.conjunction:
                        b = bit.get(atom)
                        if b is None:
                            mask = None
                            break
                        mask |= b
                    if mask is not None:
                        elems.append((e.terms[0], mask))
                agg = (a.function, elems, a.comparison, a.guard)
            head = bit[r.head[0]] if r.head else 0
            self.rules.append((pos, neg, agg, head))

    @staticmethod
    def agg_true(agg, m) -> bool:
        function, elems, op, guard = agg
        total = 0
        for first, mask in elems:
            if m & mask == mask:
                total += _weight(first, function)
        return compare(total, op, guard)

    def body_true(self, rule, m) -> bool:
        pos, neg, agg, _ = rule
        return m & pos == pos and not m & neg and (agg is None or self.agg_true(agg, m))

    def is_model(self, rules, m) -> bool:
        for rule in rules:
            if self.body_true(rule, m):
                head = rule[3]
                if not head or not m & head:
                    return False
        return True

    def is_stable(self, m) -> bool:
        reduct = [r for r in self.rules if self.body_true(r, m)]
        sub = m
        while sub:
            sub = (sub - 1) & m
            if self.is_model(reduct, sub):
                return False
        return True

    def decode(self, m) -> frozenset:
        return frozenset(a for i, a in enumerate(self.atoms) if m >> i & 1)


def stable_models_of(gp, atom_cap: int | None = DEFAULT_ATOM_CAP) -> set[frozenset]:
    rules = _rules(gp)
    candidates = possible_atoms(rules)
    if atom_cap is not None and len(candidates) > atom_cap:
        raise AtomCapExceeded(f"{len(candidates)} candidate atoms exceed the cap of {atom_cap}")
    bp = _BitProgram(rules, candidates)
    models = set()
    for m in range(1 << len(bp.atoms)):
        if bp.is_model(bp.rules, m) and bp.is_stable(m):
            models.add(bp.decode(m))
    return models


def enumerate_stable(program: Program, atom_cap: int | None = DEFAULT_ATOM_CAP) -> set[frozenset]:
    """All stable models, each a frozenset of true ground atoms.

    Only atoms derivable with negation ignored can be true in a stable model,
    so the enumeration ranges over those; ``atom_cap`` bounds their number.
    """
    return stable_models_of(ground_program(program, cap=None), atom_cap)


def format_model(model: Iterable) -> str:
    return " ".join(str(a) for a in sorted(model, key=lambda a: a.sort_key()))
