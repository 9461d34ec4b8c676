"""Three ways of solving a program with aggregate constraints.

``ground-solve``
    Ground everything, aggregate constraints included, and search.
``eager``
    Ground only the rules that are not compiled.  Each compiled constraint
    runs as a propagator on every assignment; none is ever instantiated.
``lazy``
    Solve without the compiled constraints, evaluate them on each candidate
    model, add the violated ground instances as clauses and search again.

The clause engine uses Clark completion, so the program must be tight.
"""

from __future__ import annotations

import time
from collections import defaultdict
from dataclasses import dataclass, fields
from typing import Iterable, Mapping

from .cdcl import CDCL, Theory
from .clauses import Translator
from .errors import GroundingBudgetExceeded, NonTightProgramError, TimeBudgetExceeded
from .grounder import (DEFAULT_GROUND_CAP, ground_program, herbrand_universe, instance_count,
                       is_tight)
from .oracle import possible_atoms
from .propagator import CompiledPropagator, compile
from .syntax import AggregateAtom, Atom, Program, Rule, Variable
from .tuples import FALSE, TRUE, TupleDatabase

MODES = ("ground-solve", "eager", "lazy")


@dataclass
class SolveStats:
    ground_rules: int = 0
    compiled_instantiations: int = 0
    decisions: int = 0
    clause_propagations: int = 0
    propagator_propagations: int = 0
    conflicts: int = 0
    lazy_restarts: int = 0
    wall_time_ms: float = 0.0
    peak_tuples: int = 0

    @classmethod
    def header(cls) -> str:
        return ";".join(f.name for f in fields(cls))

    def row(self) -> str:
        return ";".join(f"{getattr(self, f.name):.1f}" if f.name == "wall_time_ms"
                        else str(getattr(self, f.name)) for f in fields(self))


@dataclass
class SolveResult:
    outcome: str                      # coherent | incoherent | budget-exceeded
    model: frozenset | None
    stats: SolveStats
    message: str = ""

    @property
    def coherent(self) -> bool:
        return self.outcome == "coherent"


@dataclass
class CheckResult:
    ok: bool
    violated: list                    # ground constraint instances

    def __bool__(self):
        return self.ok


# -- constraint selection -------------------------------------------------

def select_constraints(program: Program, selection=None) -> list[int]:
    """Indexes (into ``program.rules``) of the constraints to compile.

    ``selection`` is ``None``/"aggregates" (constraints with an aggregate),
    "all", "none", or an iterable of positions among the constraints.
    """
    cons = [i for i, r in enumerate(program.rules) if r.is_constraint]
    if selection is None or selection == "aggregates":
        return [i for i in cons if program.rules[i].aggregates]
    if selection == "all":
        return cons
    if selection == "none":
        return []
    if isinstance(selection, str):
        selection = [int(x) for x in selection.split(",") if x.strip()]
    out = []
    for k in selection:
        if not 0 <= k < len(cons):
            raise ValueError(f"no constraint number {k} (program has {len(cons)})")
        out.append(cons[k])
    return sorted(set(out))


# -- direct evaluation of constraints ---------------------------------------

class _Facts:
    """A set of ground atoms with lazily built hash indexes."""

    def __init__(self, atoms: Iterable[Atom]):
        self.tuples: dict[str, set] = defaultdict(set)
        for a in atoms:
            self.tuples[a.predicate].add(a.terms)
        self._indexes: dict = {}

    def __contains__(self, atom: Atom):
        return atom.terms in self.tuples.get(atom.predicate, ())

    def match(self, atom: Atom, binding: dict):
        """Extensions of ``binding`` that map ``atom`` into the set."""
        positions, key = [], []
        for i, t in enumerate(atom.terms):
            if isinstance(t, Variable):
                if t in binding:
                    positions.append(i)
                    key.append(binding[t])
            else:
                positions.append(i)
                key.append(t)
        if len(positions) == len(atom.terms):
            if tuple(key) in self.tuples.get(atom.predicate, ()):
                yield binding
            return
        ix_key = (atom.predicate, tuple(positions))
        index = self._indexes.get(ix_key)
        if index is None:
            index = defaultdict(list)
            for tup in self.tuples.get(atom.predicate, ()):
                index[tuple(tup[i] for i in positions)].append(tup)
            self._indexes[ix_key] = index
        for tup in index.get(tuple(key), ()):
            b = dict(binding)
            for t, v in zip(atom.terms, tup):
                if isinstance(t, Variable):
                    if b.setdefault(t, v) != v:
                        break
            else:
                yield b

    def join(self, atoms: list, binding: dict):
        if not atoms:
            yield binding
            return

        def bound(a):
            return sum(1 for t in a.terms if not isinstance(t, Variable) or t in binding)

        best = max(range(len(atoms)), key=lambda i: (bound(atoms[i]), -i))
        rest = atoms[:best] + atoms[best + 1:]
        for b in self.match(atoms[best], binding):
            yield from self.join(rest, b)


def _holds(value, op, guard) -> bool:
    g = guard if isinstance(guard, int) and not isinstance(guard, bool) else float("inf")
    return {">=": value >= g, ">": value > g, "<=": value <= g,
            "<": value < g, "=": value == g}[op]


def violations(constraints: Iterable[tuple[int, Rule]], true_atoms, known_atoms) -> list:
    """Violated ground instances of non-ground constraints.

    Bodies are joined over ``true_atoms``; aggregate elements range over
    ``known_atoms`` (the atoms that could be true at all).  Returns
    ``(key, ground_rule)`` pairs where ``key`` identifies the instance.
    """
    true_set = true_atoms if isinstance(true_atoms, (set, frozenset)) else set(true_atoms)
    T = _Facts(true_set)
    K = _Facts(known_atoms)
    out = []
    for ci, rule in constraints:
        pos = [l.atom for l in rule.body if l.positive]
        neg = [l.atom for l in rule.body if not l.positive]
        agg = rule.aggregate
        for b in T.join(pos, {}):
            if any(a.substitute(b) in true_set for a in neg):
                continue
            ground_agg = ()
            if agg is not None:
                elems: dict = {}
                for elem in agg.elements:
                    for b2 in K.join(list(elem.conjunction), b):
                        g = elem.substitute(b2)
                        elems.setdefault(g.key(), g)
                value = 0
                for g in elems.values():
                    if all(a in true_set for a in g.conjunction):
                        value += 1 if agg.function == "count" else g.terms[0]
                guard = b.get(agg.guard, agg.guard) if isinstance(agg.guard, Variable) else agg.guard
                if not _holds(value, agg.comparison, guard):
                    continue
                ground_agg = (AggregateAtom(agg.function, tuple(elems.values()),
                                            agg.comparison, guard),)
            key = (ci, tuple(sorted((v.name, x) for v, x in b.items())))
            body = tuple(l.substitute(b) for l in rule.body)
            out.append((key, Rule((), body, ground_agg)))
    return out


def check_model(program: Program, candidate, compile_constraints=None,
                ground_cap: int | None = DEFAULT_GROUND_CAP) -> CheckResult:
    """Evaluate the compiled constraints of ``program`` on a total candidate.

    ``candidate`` maps ground atoms to truth values and must cover every atom
    derivable from the non-compiled rules; a plain set is read as the true
    atoms with everything else false.
    """
    picked = select_constraints(program, compile_constraints)
    picked_set = set(picked)
    rest = Program(tuple(r for i, r in enumerate(program.rules) if i not in picked_set))
    gp = ground_program(rest, cap=ground_cap, universe=herbrand_universe(program))
    table = possible_atoms(r for r in gp.rules if r.head)
    if isinstance(candidate, Mapping):
        missing = [a for a in table if a not in candidate]
        if missing:
            raise ValueError(f"candidate is not total: {len(missing)} atoms missing, e.g. {missing[0]}")
        true_atoms = {a for a, v in candidate.items() if v}
        known = set(candidate)
    else:
        true_atoms = set(candidate)
        known = table | true_atoms
    found = violations([(i, program.rules[i]) for i in picked], true_atoms, known)
    return CheckResult(not found, [r for _, r in found])


# -- eager propagation bridge -----------------------------------------------

class _PropagatorTheory(Theory):
    def __init__(self):
        self.db = TupleDatabase()
        self.props: list[CompiledPropagator] = []
        self.by_pred: dict[str, list[CompiledPropagator]] = {}
        self.handles: dict[int, object] = {}
        self.marks: list = []

    def setup(self, props, translator: Translator):
        self.props = props
        for p in props:
            p.attach(self.db)
            for pred in p.watched_predicates:
                self.by_pred.setdefault(pred, []).append(p)
        for atom, v in translator.atom_vars.items():
            if atom.predicate in self.by_pred:
                h = self.db.store(atom.predicate, atom.arity).insert(atom.terms)
                h.data = v
                self.handles[v] = h

    @staticmethod
    def _false_lit(h, status):
        return -h.data if status is TRUE else h.data

    def _translate(self, p, res):
        if res.is_conflict:
            return ("conflict", [self._false_lit(h, s) for h, s in res.conflict])
        out = []
        for prop in res.propagations:
            lit = prop.tuple.data if prop.status is TRUE else -prop.tuple.data
            reason = [self._false_lit(h, s) for h, s in p.explain(prop.tuple)]
            out.append((lit, [lit] + reason))
        return out

    def assigned(self, var, value):
        h = self.handles[var]
        h.store.set_status(h, TRUE if value else FALSE)

    def propagate(self, var, value):
        h = self.handles[var]
        status = TRUE if value else FALSE
        out = []
        for p in self.by_pred.get(h.predicate, ()):
            res = p.on_assign(h, status)
            if res.kind == "quiet":
                continue
            got = self._translate(p, res)
            if isinstance(got, tuple):
                return got
            out.extend(got)
        return out

    def start(self):
        out = []
        for p in self.props:
            res = p.on_start()
            if res.kind == "quiet":
                continue
            got = self._translate(p, res)
            if isinstance(got, tuple):
                return got
            out.extend(got)
        return out

    def new_level(self):
        self.marks.append((self.db.mark(), [p.mark() for p in self.props]))

    def backtrack(self, level):
        db_mark, p_marks = self.marks[level]
        self.db.undo_to(db_mark)
        for p, m in zip(self.props, p_marks):
            p.undo(m)
        del self.marks[level:]


# -- the engine ---------------------------------------------------------------

class Engine:
    """One solver instance for one program and mode; yields models one by one."""

    def __init__(self, program: Program, mode: str = "eager",
                 ground_cap: int | None = DEFAULT_GROUND_CAP, deadline: float | None = None,
                 compile_constraints=None):
        if mode not in MODES:
            raise ValueError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
        if not is_tight(program):
            raise NonTightProgramError("the positive dependency graph has a cycle; "
                                       "the clause engine only handles tight programs")
        self.program = program
        self.mode = mode
        self.deadline = deadline
        self.stats = SolveStats()
        picked = select_constraints(program, compile_constraints)
        would = picked
        if mode == "ground-solve":
            # nothing is compiled; the stats report what eager mode would skip
            picked = []
        picked_set = set(picked)
        self.compiled = [(i, program.rules[i]) for i in picked]
        rest = Program(tuple(r for i, r in enumerate(program.rules) if i not in picked_set))
        universe = herbrand_universe(program)
        gp = ground_program(rest, cap=ground_cap, universe=universe, deadline=deadline)
        self.stats.ground_rules = len(gp)
        heads = [r for r in gp.rules if r.head]
        possible = possible_atoms(heads)
        ordered = [a for a in gp.atoms if a in possible]

        self.theory = None
        self.props: list[CompiledPropagator] = []
        if mode == "eager" and self.compiled:
            self.props = [compile(r) for _, r in self.compiled]
            self.theory = _PropagatorTheory()
        self.solver = CDCL(self.theory)
        watched = frozenset()
        if self.theory is not None:
            watched = frozenset(p for pr in self.props for p in pr.watched_predicates)
        room = None if ground_cap is None else max(ground_cap - len(gp), 0)
        self.tr = Translator(self.solver, ordered, watched, clause_cap=room, deadline=deadline,
                             reported_cap=ground_cap)
        if self.theory is not None:
            self.theory.setup(self.props, self.tr)
            self.stats.peak_tuples = self.theory.db.total()
        else:
            self.stats.peak_tuples = len(ordered)
        self.tr.add_completion(heads)
        for r in gp.rules:
            if not r.head:
                self.tr.add_constraint(r)
        if mode == "ground-solve":
            self.stats.compiled_instantiations = sum(
                instance_count(program.rules[k], universe) for k in would)
        self.injected: set = set()
        self.known = set(ordered)

    def _sync_stats(self):
        s, st = self.solver, self.stats
        st.decisions = s.decisions
        st.conflicts = s.conflicts
        st.clause_propagations = s.clause_propagations
        st.propagator_propagations = s.theory_propagations
        if self.mode == "eager" and self.theory is not None:
            st.compiled_instantiations = sum(p.instantiations for p in self.props)
            st.peak_tuples = max(st.peak_tuples, self.theory.db.total())

    def _current_model(self) -> frozenset:
        vals = self.solver.vals
        return frozenset(a for a, v in self.tr.atom_vars.items() if vals[v] > 0)

    def next_model(self) -> frozenset | None:
        try:
            while True:
                if not self.solver.solve(self.deadline):
                    return None
                model = self._current_model()
                if not self.compiled or self.mode == "ground-solve":
                    return model
                found = violations(self.compiled, model, self.known)
                if self.mode == "eager":
                    if found:
                        raise AssertionError(
                            f"propagators missed a violated instance: {found[0][1]}")
                    return model
                fresh = [(k, r) for k, r in found if k not in self.injected]
                if not fresh:
                    if found:
                        raise AssertionError("violated instance was already injected")
                    return model
                self.solver.cancel_until(0)
                for k, r in fresh:
                    self.injected.add(k)
                    self.tr.add_constraint(r)
                self.stats.compiled_instantiations += len(fresh)
                self.stats.lazy_restarts += 1
        finally:
            self._sync_stats()

    def block(self, model: frozenset):
        """Exclude ``model`` from later answers."""
        self.solver.cancel_until(0)
        clause = [-v if a in model else v for a, v in self.tr.atom_vars.items()]
        self.solver.add_clause(clause)


def _deadline(timeout):
    return None if timeout is None else time.perf_counter() + timeout


def solve(program: Program, mode: str = "eager", ground_cap: int | None = DEFAULT_GROUND_CAP,
          timeout: float | None = None, compile_constraints=None) -> SolveResult:
    """Search for one stable model.

    Budget overruns (grounding cap, time) are reported as the
    ``budget-exceeded`` outcome; a non-tight program raises
    :class:`NonTightProgramError`.
    """
    start = time.perf_counter()
    deadline = None if timeout is None else start + timeout
    stats = SolveStats()
    try:
        engine = Engine(program, mode, ground_cap, deadline, compile_constraints)
        stats = engine.stats
        model = engine.next_model()
        outcome = "coherent" if model is not None else "incoherent"
        message = ""
    except (GroundingBudgetExceeded, TimeBudgetExceeded) as exc:
        model, outcome, message = None, "budget-exceeded", str(exc)
    stats.wall_time_ms = (time.perf_counter() - start) * 1000
    return SolveResult(outcome, model, stats, message)


def enumerate_models(program: Program, mode: str = "eager", n: int | None = None,
                     ground_cap: int | None = DEFAULT_GROUND_CAP, timeout: float | None = None,
                     compile_constraints=None) -> list[frozenset]:
    """Up to ``n`` distinct stable models (all of them when ``n`` is None)."""
    engine = Engine(program, mode, ground_cap, _deadline(timeout), compile_constraints)
    models = []
    while n is None or len(models) < n:
        m = engine.next_model()
        if m is None:
            break
        models.append(m)
        engine.block(m)
    return models

