"""Translation of ground rules into clauses for :class:`aggrprop.cdcl.CDCL`.

Rules with heads go through Clark completion, which is exact for tight
programs.  Atoms that cannot be derived even with negation ignored are
constant false and get no variable.  Ground aggregate constraints use a
deliberately plain threshold expansion: one auxiliary per multi-atom
element conjunction and one clause per minimal violating subset of
elements.  It is transparent, not compact; the clause count grows fast with
the number of elements, which is part of what the baseline measures.
Expansion clauses count against the same cap as ground rules, and the
expansion stops at the deadline.
"""

from __future__ import annotations

import time

from .cdcl import CDCL
from .errors import GroundingBudgetExceeded, TimeBudgetExceeded, UnsupportedError
from .syntax import AggregateAtom, Atom, Rule

INF = float("inf")


class _Limit:
    """Stops a clause expansion that outgrows its clause budget or deadline."""

    def __init__(self, cap=None, deadline=None, reported_cap=None):
        self.cap = cap
        self.deadline = deadline
        self.reported_cap = cap if reported_cap is None else reported_cap
        self.steps = 0
        self.used = 0

    def tick(self):
        self.steps += 1
        if self.deadline is not None and self.steps % 4096 == 0 and time.perf_counter() > self.deadline:
            raise TimeBudgetExceeded("time budget exceeded while expanding aggregate clauses")

    def emit(self, out, item):
        out.append(item)
        self.used += 1
        if self.cap is not None and self.used > self.cap:
            raise GroundingBudgetExceeded(self.reported_cap)


_NO_LIMIT = _Limit()


def _suffix_sums(weights, order):
    suffix = [0] * (len(order) + 1)
    for k in range(len(order) - 1, -1, -1):
        suffix[k] = suffix[k + 1] + weights[order[k]]
    return suffix


def _minimal_covers(weights: list[int], target, limit=_NO_LIMIT) -> list[tuple[int, ...]]:
    """Index sets S with sum(weights[S]) >= target that lose the property when
    any member is dropped.  Weights are positive."""
    if target <= 0:
        return [()]
    if target == INF:
        return []
    order = sorted(range(len(weights)), key=lambda i: -weights[i])
    suffix = _suffix_sums(weights, order)
    out = []

    def rec(k, chosen, total):
        limit.tick()
        if total >= target:
            if total - min(weights[i] for i in chosen) < target:
                limit.emit(out, tuple(sorted(chosen)))
            return
        if k == len(order) or total + suffix[k] < target:
            return
        i = order[k]
        chosen.append(i)
        rec(k + 1, chosen, total + weights[i])
        chosen.pop()
        rec(k + 1, chosen, total)

    rec(0, [], 0)
    return out


def _exact_subsets(weights: list[int], target, limit=_NO_LIMIT) -> list[tuple[int, ...]]:
    if target == INF or target < 0:
        return []
    order = list(range(len(weights)))
    suffix = _suffix_sums(weights, order)
    out = []

    def rec(k, chosen, total):
        limit.tick()
        if total > target or total + suffix[k] < target:
            return
        if k == len(weights):
            limit.emit(out, tuple(chosen))
            return
        chosen.append(k)
        rec(k + 1, chosen, total + weights[k])
        chosen.pop()
        rec(k + 1, chosen, total)

    rec(0, [], 0)
    return out


def forbid_aggregate(op: str, guard, weights: list[int], lits: list[int],
                     limit: _Limit = _NO_LIMIT) -> list[list[int]]:
    """Clauses that together say "the aggregate is false".

    ``lits[i]`` is the solver literal of element ``i`` and ``weights[i]`` its
    non-negative weight.  The aggregate compares the total weight of the
    true elements with ``guard`` (symbolic guards count as +infinity).
    ``limit`` bounds the number of clauses and the time spent expanding.
    """
    g = guard if isinstance(guard, int) and not isinstance(guard, bool) else INF
    pairs = [(w, l) for w, l in zip(weights, lits) if w != 0]
    if any(w < 0 for w, _ in pairs):
        raise UnsupportedError("negative #sum weights are not supported")
    ws = [w for w, _ in pairs]
    ls = [l for _, l in pairs]
    total = sum(ws)
    if op == ">":
        op, g = ">=", g + 1
    elif op == "<":
        op, g = "<=", g - 1
    if op == ">=":
        # at least one element of every minimal set reaching g is false
        return [[-ls[i] for i in s] for s in _minimal_covers(ws, g, limit)]
    if op == "<=":
        # the true weight must exceed g: every minimal set whose falsity
        # leaves at most g needs a true member
        if g == INF:
            return [[]]
        return [[ls[i] for i in s] for s in _minimal_covers(ws, total - g, limit)]
    if op == "=":
        out = []
        for s in _exact_subsets(ws, g, limit):
            inside = set(s)
            out.append([-ls[i] if i in inside else ls[i] for i in range(len(ls))])
        return out
    raise ValueError(f"unknown comparison {op!r}")


class Translator:
    """Owns the atom-to-variable map and the auxiliary tables of one solver."""

    def __init__(self, solver: CDCL, possible, watched_predicates=frozenset(),
                 clause_cap: int | None = None, deadline: float | None = None,
                 reported_cap: int | None = None):
        self.solver = solver
        # clauses from aggregate expansion share one budget with the grounding
        self.limit = _Limit(clause_cap, deadline, reported_cap)
        self.atom_vars: dict[Atom, int] = {}
        self.var_atoms: dict[int, Atom] = {}
        self._bodies: dict[frozenset, int] = {}
        self._elements: dict[frozenset, int] = {}
        for atom in possible:
            v = solver.new_var(watched=atom.predicate in watched_predicates)
            self.atom_vars[atom] = v
            self.var_atoms[v] = atom

    # literals: an int, or True / False for constants
    def atom_lit(self, atom: Atom, positive=True):
        v = self.atom_vars.get(atom)
        if v is None:
            return not positive
        return v if positive else -v

    def body_lits(self, rule: Rule):
        """Non-constant body literals, or ``None`` when the body is false."""
        out = []
        for lit in rule.body:
            x = self.atom_lit(lit.atom, lit.positive)
            if x is False:
                return None
            if x is not True:
                out.append(x)
        return list(dict.fromkeys(out))

    def _conjunction(self, lits: list[int], table: dict) -> int:
        if len(lits) == 1:
            return lits[0]
        key = frozenset(lits)
        v = table.get(key)
        if v is None:
            v = table[key] = self.solver.new_var()
            add = self.solver.add_clause
            for l in lits:
                add([-v, l])
            add([v] + [-l for l in lits])
        return v

    def add_completion(self, rules):
        supports: dict[Atom, list] = {}
        for rule in rules:
            head = rule.head[0]
            if head not in self.atom_vars:
                continue
            lits = self.body_lits(rule)
            if lits is None:
                continue
            supports.setdefault(head, []).append(lits)
        add = self.solver.add_clause
        for atom, v in self.atom_vars.items():
            bodies = supports.get(atom, [])
            if any(not b for b in bodies):
                add([v])
                continue
            ds = [self._conjunction(b, self._bodies) for b in bodies]
            for d in ds:
                add([-d, v])
            add([-v] + ds)

    def aggregate_terms(self, agg: AggregateAtom):
        """(weights, literals) of the elements that can still be true."""
        weights, lits = [], []
        for elem in agg.elements:
            conj = []
            for atom in elem.conjunction:
                x = self.atom_lit(atom)
                if x is False:
                    break
                conj.append(x)
            else:
                first = elem.terms[0]
                if agg.function == "count":
                    w = 1
                elif isinstance(first, int) and not isinstance(first, bool):
                    w = first
                else:
                    raise UnsupportedError(f"#sum weight {first!r} is not an integer")
                weights.append(w)
                lits.append(self._conjunction(list(dict.fromkeys(conj)), self._elements))
        return weights, lits

    def constraint_clauses(self, rule: Rule) -> list[list[int]]:
        body = self.body_lits(rule)
        if body is None:
            return []
        neg = [-l for l in body]
        agg = rule.aggregate
        if agg is None:
            return [neg]
        weights, lits = self.aggregate_terms(agg)
        return [neg + c for c in forbid_aggregate(agg.comparison, agg.guard, weights, lits, self.limit)]

    def add_constraint(self, rule: Rule) -> int:
        clauses = self.constraint_clauses(rule)
        for c in clauses:
            self.solver.add_clause(c)
        return len(clauses)
