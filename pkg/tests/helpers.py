"""Shared fixtures and the propagation replay harness."""

from __future__ import annotations

import random

from aggrprop.grounder import ground_program, ground_rule, herbrand_universe
from aggrprop.oracle import _BitProgram, possible_atoms, stable_models_of
from aggrprop.parser import parse
from aggrprop.propagator import compile
from aggrprop.syntax import Program
from aggrprop.tuples import FALSE, TRUE, UNDEFINED, TupleDatabase

COUNT_AGG = "#count{1: p(1,1); 2: p(2,1); 3: p(3,1)} > 1"
ROW_CONSTRAINT = ":- a(X,Z), c(Z), #count{Y: b(X,Y)} >= 2."
ROW_PROGRAM = "a(1,1). c(1).\n{b(1,1); b(1,2); b(1,3)}.\n" + ROW_CONSTRAINT + "\n"


def row_setup():
    """The row-count propagator over stores with a(1,1), c(1), b(1,1..3) all undefined."""
    prop = compile(parse(ROW_CONSTRAINT).rules[0])
    db = TupleDatabase()
    h = {
        "a": db.store("a", 2).insert((1, 1)),
        "c": db.store("c", 1).insert((1,)),
    }
    for y in (1, 2, 3):
        h[f"b{y}"] = db.store("b", 2).insert((1, y))
    prop.attach(db)
    return prop, db, h


def assign(db_handle, status):
    db_handle.store.set_status(db_handle, status)


class Replay:
    """Random partial assignments fed to one compiled constraint.

    Every forced literal and every conflict is checked twice: against the
    constraint alone (all completions of the reason over the derivable atoms
    violate it) and against the full program (no stable model agrees with
    the reason and the negated forced literal).
    """

    def __init__(self, program: Program, index: int):
        self.program = program
        self.constraint = program.rules[index]
        universe = herbrand_universe(program)
        rest = Program(tuple(r for i, r in enumerate(program.rules) if i != index))
        gp = ground_program(rest, cap=None, universe=universe)
        self.possible = sorted(possible_atoms(r for r in gp.rules if r.head), key=lambda a: a.sort_key())
        self.universe = universe
        self.instances = ground_rule(self.constraint, universe)
        self.bits = _BitProgram(self.instances, self.possible)
        self.bit = {a: 1 << i for i, a in enumerate(self.bits.atoms)}
        self.stable = [self._mask(m) for m in stable_models_of(ground_program(program, cap=None), None)]
        self.prop = compile(self.constraint)
        self.db = TupleDatabase()
        self.prop.attach(self.db)
        self.handles = []
        for a in self.possible:
            if a.predicate in self.prop.watched_predicates:
                self.handles.append(self.db.store(a.predicate, a.arity).insert(a.terms))
        self.checks = 0

    def _mask(self, atoms):
        return sum(self.bit[a] for a in atoms if a in self.bit)

    @staticmethod
    def _atom_of(h):
        from aggrprop.syntax import Atom
        return Atom(h.predicate, h.values)

    def _fix(self, lits):
        """(care mask, value mask) for a list of (handle, status)."""
        care = val = 0
        for h, s in lits:
            b = self.bit[self._atom_of(h)]
            care |= b
            if s is TRUE:
                val |= b
        return care, val

    def _all_completions_violate(self, lits, rules) -> bool:
        care, val = self._fix(lits)
        free = [1 << i for i in range(len(self.bits.atoms)) if not care >> i & 1]
        for k in range(1 << len(free)):
            m = val
            for j, b in enumerate(free):
                if k >> j & 1:
                    m |= b
            if self.bits.is_model(rules, m):
                return False
        return True

    def _no_stable_model_agrees(self, lits) -> bool:
        care, val = self._fix(lits)
        return not any(m & care == val for m in self.stable)

    def check_forced(self, p) -> list[str]:
        self.checks += 1
        flipped = FALSE if p.status is TRUE else TRUE
        lits = list(p.reason) + [(p.tuple, flipped)]
        out = []
        if any(h.status is UNDEFINED for h, _ in p.reason):
            out.append(f"reason of {p.tuple} mentions an unassigned atom")
        if not self._all_completions_violate(lits, self.bits.rules):
            out.append(f"{p.tuple}={p.status} is not entailed by the constraint and {p.reason}")
        if not self._no_stable_model_agrees(lits):
            out.append(f"a stable model agrees with {p.reason} and {p.tuple}={flipped}")
        return out

    def check_conflict(self, res) -> list[str]:
        self.checks += 1
        reason = list(res.conflict)
        out = []
        sub = res.substitution
        body = tuple(l.substitute(sub) for l in self.constraint.body)
        inst = [g for g in self.instances if g.body == body]
        rules = _BitProgram(inst, self.possible).rules
        if not inst or not self._all_completions_violate(reason, rules):
            out.append(f"conflict {reason} does not violate the instance {sub}")
        if not self._no_stable_model_agrees(reason):
            out.append(f"a stable model agrees with conflict reason {reason}")
        return out

    def run(self, rng: random.Random, apply_prob=0.5) -> list[str]:
        order = list(self.handles)
        rng.shuffle(order)
        queue = [(h, rng.choice((TRUE, FALSE))) for h in order]
        problems = []
        while queue:
            h, s = queue.pop(0)
            if h.status is not UNDEFINED:
                if h.status is not s:
                    break  # a forced literal clashed with an earlier choice
                continue
            h.store.set_status(h, s)
            res = self.prop.on_assign(h, s)
            if res.is_conflict:
                problems += self.check_conflict(res)
                break
            for p in res.propagations:
                problems += self.check_forced(p)
                if rng.random() < apply_prob:
                    queue.insert(0, (p.tuple, p.status))
        return problems


# -- tuple store shadow model -------------------------------------------------

STATUSES = (TRUE, FALSE, UNDEFINED)


def _snapshot(store):
    return [(h.values, h.status) for h in sorted(store, key=lambda h: h.seq)]


def store_sequence(rng: random.Random, n_ops=40, arity=2, domain=3) -> list[str]:
    """Random insert / set_status / mark / undo / query operations on one
    store, each checked against a naive list-based shadow."""
    from aggrprop.tuples import IndexedTupleStore, UnknownTupleError
    store = IndexedTupleStore("r", arity)
    shadow: dict[tuple, object] = {}      # values -> status, insertion ordered
    marks = []                            # (mark, shadow copy)
    problems = []
    for _ in range(n_ops):
        op = rng.random()
        if op < 0.3 or not shadow:
            values = tuple(rng.randint(1, domain) for _ in range(arity))
            status = rng.choice(STATUSES)
            h = store.insert(values, status)
            shadow.setdefault(values, status)
            if h.status is not shadow[values]:
                problems.append(f"insert of existing {values} changed its status")
        elif op < 0.6:
            values = rng.choice(list(shadow))
            new = rng.choice(STATUSES)
            store.set_status(values, new)
            shadow[values] = new
        elif op < 0.7:
            marks.append((store.mark(), dict(shadow)))
        elif op < 0.8 and marks:
            k = rng.randrange(len(marks))
            mark, saved = marks[k]
            del marks[k:]
            store.undo_to(mark)
            shadow = dict(saved)
            if _snapshot(store) != list(shadow.items()):
                problems.append("undo_to did not restore the marked state")
        else:
            part = rng.choice(STATUSES)
            cols = [c for c in range(arity) if rng.random() < 0.5]
            bound = {c: rng.randint(1, domain + 1) for c in cols}
            got = [h.values for h in store.get_values_matching(part, bound)]
            want = [v for v, s in shadow.items() if s is part
                    and all(v[c] == x for c, x in bound.items())]
            if got != want:
                problems.append(f"query {part} {bound}: {got} != {want}")
        # partitions are disjoint and exhaustive
        parts = [set(h.values for h in store.partition(s)) for s in STATUSES]
        if sum(len(p) for p in parts) != len(set().union(*parts)) or set().union(*parts) != set(shadow):
            problems.append("partitions are not a partition of the inserted tuples")
        if sum(store.size(s) for s in STATUSES) != len(store):
            problems.append("partition sizes do not add up")
        for h in store:
            if h not in store._partitions[h.status]:
                problems.append(f"{h} status disagrees with its partition")
    try:
        store.set_status((domain + 5,) * arity, TRUE)
        problems.append("unknown tuple accepted")
    except UnknownTupleError:
        pass
    return problems
