"""Compilation of non-ground constraints into eager propagators.

A constraint ``:- B, #agg{...} OP G`` is compiled into one join plan per
occurrence of each of its predicates.  When the solver assigns a tuple, the
plans for that predicate bind the trigger's columns, join the remaining body
literals through the tuple stores (true and undefined partitions only, and
at most one undefined tuple per combination), and then bound the aggregate
for every resulting substitution.  Three rules fire:

* conflict: the body is true and the aggregate is certainly true;
* aggregate propagation: the body is true and one more element would make
  the aggregate certainly true, so the last undefined atom of that element
  is forced false (dually, forced true when losing the element would);
* body propagation: exactly one body literal is undefined and the aggregate
  is certainly true, so that literal is falsified.

No ground instance of the constraint is ever stored.  Plans are plain data
interpreted by :meth:`CompiledPropagator.on_assign`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnsupportedError
from .syntax import Literal, Rule, Variable
from .tuples import FALSE, TRUE, UNDEFINED, Status, TupleDatabase, TupleHandle

_OPEN = (TRUE, UNDEFINED)
_TRUE_ONLY = (TRUE,)
_ANY = (TRUE, UNDEFINED, FALSE)


@dataclass(frozen=True)
class Step:
    role: str              # "body" or "element"
    index: int             # literal index in the body, or atom index in the element
    predicate: str
    positive: bool
    terms: tuple
    bound_columns: tuple   # columns whose value is known before the step
    key_terms: tuple       # terms at bound_columns
    new_columns: tuple     # (column, variable) pairs bound by the step

    def describe(self) -> str:
        atom = f"{self.predicate}({','.join(map(str, self.terms))})" if self.terms else self.predicate
        lit = atom if self.positive else f"not {atom}"
        cols = ",".join(map(str, self.bound_columns)) or "-"
        parts = "true|undefined" if self.positive else "lookup"
        return f"{self.role}#{self.index} {lit} bound=[{cols}] {parts}"


@dataclass(frozen=True)
class JoinPlan:
    trigger: str
    occurrence: tuple      # ("body", i) or ("element", e, j)
    pattern: tuple         # terms of the triggering atom occurrence
    positive: bool
    steps: tuple           # standard-body steps after the trigger binding

    def describe(self) -> str:
        where = ("body#%d" % self.occurrence[1] if self.occurrence[0] == "body"
                 else "element#%d.%d" % self.occurrence[1:])
        binds = " ".join(f"{t}=col{c}" if isinstance(t, Variable) else f"col{c}=={t}"
                         for c, t in enumerate(self.pattern))
        sign = "" if self.positive else "not "
        lines = [f"trigger {sign}{self.trigger}/{len(self.pattern)} at {where} bind {binds or '-'}"]
        lines += [f"  step {s.describe()}" for s in self.steps]
        return "\n".join(lines)


@dataclass(frozen=True)
class ElementPlan:
    index: int
    terms: tuple
    steps: tuple


@dataclass(frozen=True)
class AggregateBounds:
    lb: int
    ub: int


@dataclass(frozen=True)
class Propagation:
    tuple: TupleHandle
    status: Status
    reason: tuple          # (handle, status) pairs, all assigned at emission


@dataclass
class PropagationResult:
    kind: str = "quiet"                    # quiet | propagations | conflict
    propagations: list = field(default_factory=list)
    conflict: tuple | None = None
    substitution: dict | None = None       # instance behind a conflict

    @property
    def is_conflict(self) -> bool:
        return self.kind == "conflict"


class NotForcedError(KeyError):
    pass


# -- compilation ----------------------------------------------------------

def _value(t, binding):
    return binding[t] if isinstance(t, Variable) else t


def _order_steps(items, bound: set, role: str) -> tuple:
    """Greedy join order: most already-bound columns first, ties by text order.
    Negative literals wait until all their variables are bound."""
    remaining = list(items)
    bound = set(bound)
    steps = []
    while remaining:
        best = None
        for pos, (idx, lit) in enumerate(remaining):
            terms = lit.atom.terms
            if not lit.positive and not all(t in bound for t in terms if isinstance(t, Variable)):
                continue
            nb = sum(1 for t in terms if not isinstance(t, Variable) or t in bound)
            if best is None or nb > best[0]:
                best = (nb, pos)
        if best is None:
            raise UnsupportedError("cannot order join: unsafe negative literal")
        idx, lit = remaining.pop(best[1])
        terms = lit.atom.terms
        bcols, keys, new = [], [], []
        local = set()
        for c, t in enumerate(terms):
            if not isinstance(t, Variable) or t in bound:
                bcols.append(c)
                keys.append(t)
            else:
                new.append((c, t))
                local.add(t)
        bound |= local
        steps.append(Step(role, idx, lit.atom.predicate, lit.positive, terms,
                          tuple(bcols), tuple(keys), tuple(new)))
    return tuple(steps)


def compile(constraint: Rule) -> "CompiledPropagator":
    """Compile a safe constraint with at most one aggregate into a propagator."""
    if not constraint.is_constraint:
        raise UnsupportedError("only constraints can be compiled")
    if len(constraint.aggregates) > 1:
        raise UnsupportedError("at most one aggregate per compiled constraint")
    glob = set(constraint.global_variables())
    agg = constraint.aggregate
    for lit in constraint.body:
        if not lit.positive and any(v not in glob for v in lit.atom.variables()):
            raise UnsupportedError(f"unsafe negative literal {lit}")
    element_plans = []
    if agg is not None:
        if isinstance(agg.guard, Variable) and agg.guard not in glob:
            raise UnsupportedError(f"guard {agg.guard} is not bound by the body")
        for e, elem in enumerate(agg.elements):
            local = {v for a in elem.conjunction for v in a.variables()}
            for t in elem.terms:
                if isinstance(t, Variable) and t not in glob and t not in local:
                    raise UnsupportedError(f"unsafe aggregate term {t}")
            items = [(j, Literal(a, True)) for j, a in enumerate(elem.conjunction)]
            element_plans.append(ElementPlan(e, elem.terms, _order_steps(items, glob, "element")))

    body = list(enumerate(constraint.body))
    plans: dict[str, list[JoinPlan]] = {}
    for i, lit in body:
        rest = [(k, l) for k, l in body if k != i]
        steps = _order_steps(rest, set(lit.atom.variables()), "body")
        plans.setdefault(lit.atom.predicate, []).append(
            JoinPlan(lit.atom.predicate, ("body", i), lit.atom.terms, lit.positive, steps))
    if agg is not None:
        for e, elem in enumerate(agg.elements):
            for j, atom in enumerate(elem.conjunction):
                seeded = {v for v in atom.variables() if v in glob}
                steps = _order_steps(body, seeded, "body")
                plans.setdefault(atom.predicate, []).append(
                    JoinPlan(atom.predicate, ("element", e, j), atom.terms, True, steps))
    return CompiledPropagator(constraint, {p: tuple(v) for p, v in plans.items()},
                              tuple(element_plans))


# -- runtime --------------------------------------------------------------

def _certainly_true(op, lb, ub, g):
    """(holds, needs lower-bound reason, needs upper-bound reason)."""
    if op == ">=":
        return lb >= g, True, False
    if op == ">":
        return lb > g, True, False
    if op == "<=":
        return ub <= g, False, True
    if op == "<":
        return ub < g, False, True
    return lb == g and ub == g, True, True


def _certainly_false(op, lb, ub, g):
    if op == ">=":
        return ub < g
    if op == ">":
        return ub <= g
    if op == "<=":
        return lb > g
    if op == "<":
        return lb >= g
    return ub < g or lb > g


class _AggState:
    __slots__ = ("lb", "ub", "true_elems", "open_elems", "binding", "_witnesses")

    def __init__(self, binding):
        self.binding = binding
        self.lb = self.ub = 0
        self.true_elems = []   # atom lists
        self.open_elems = []   # (key, weight, undefined atoms, true atoms)
        self._witnesses = None


class CompiledPropagator:
    def __init__(self, constraint: Rule, trigger_plans: dict, element_plans: tuple):
        self.constraint = constraint
        self.trigger_plans = trigger_plans
        self.element_plans = element_plans
        self.aggregate = constraint.aggregate
        self.global_vars = frozenset(constraint.global_variables())
        self.watched_predicates = frozenset(trigger_plans)
        # trigger-less plan, run once before search
        self.start_steps = _order_steps(list(enumerate(constraint.body)), set(), "body")
        self.db: TupleDatabase | None = None
        self._forced: dict = {}
        self._log: list = []
        # no ground instance of the constraint is ever built
        self.instantiations = 0
        self.calls = 0
        self.propagations = 0
        self.conflicts = 0

    def attach(self, db: TupleDatabase) -> "CompiledPropagator":
        self.db = db
        return self

    # -- joins ------------------------------------------------------------
    @staticmethod
    def _unify(pattern, values, binding=None):
        b = dict(binding) if binding else {}
        for t, v in zip(pattern, values):
            if isinstance(t, Variable):
                old = b.get(t, v)
                if old != v:
                    return None
                b[t] = v
            elif t != v:
                return None
        return b

    def _join(self, steps, i, binding, true_lits, undef):
        if i == len(steps):
            yield binding, true_lits, undef
            return
        st = steps[i]
        store = self.db.get(st.predicate)
        if st.positive:
            if store is None:
                return
            key = tuple(binding[t] if isinstance(t, Variable) else t for t in st.key_terms)
            for h in store.matching(st.bound_columns, key, _OPEN if undef is None else _TRUE_ONLY):
                b = binding
                if st.new_columns:
                    b = dict(binding)
                    ok = True
                    for c, var in st.new_columns:
                        v = h.values[c]
                        old = b.get(var, v)
                        if old != v:
                            ok = False
                            break
                        b[var] = v
                    if not ok:
                        continue
                if h.status is TRUE:
                    yield from self._join(steps, i + 1, b, true_lits + [(h, TRUE)], undef)
                else:
                    yield from self._join(steps, i + 1, b, true_lits, (st, h))
        else:
            values = tuple(binding[t] if isinstance(t, Variable) else t for t in st.terms)
            h = store.lookup(values) if store is not None else None
            if h is None:
                yield from self._join(steps, i + 1, binding, true_lits, undef)
            elif h.status is FALSE:
                yield from self._join(steps, i + 1, binding, true_lits + [(h, FALSE)], undef)
            elif h.status is UNDEFINED and undef is None:
                yield from self._join(steps, i + 1, binding, true_lits, (st, h))

    def _element_tuples(self, plan, binding, statuses):
        """(binding, atoms) for each ground conjunction of an element."""
        def rec(i, b, atoms):
            if i == len(plan.steps):
                yield b, atoms
                return
            st = plan.steps[i]
            store = self.db.get(st.predicate)
            if store is None:
                return
            key = tuple(b[t] if isinstance(t, Variable) else t for t in st.key_terms)
            for h in store.matching(st.bound_columns, key, statuses):
                b2 = b
                if st.new_columns:
                    b2 = dict(b)
                    ok = True
                    for c, var in st.new_columns:
                        v = h.values[c]
                        old = b2.get(var, v)
                        if old != v:
                            ok = False
                            break
                        b2[var] = v
                    if not ok:
                        continue
                yield from rec(i + 1, b2, atoms + [h])
        return rec(0, binding, [])

    def _weight(self, plan, binding):
        if self.aggregate.function == "count":
            return 1
        w = _value(plan.terms[0], binding)
        if isinstance(w, bool) or not isinstance(w, int):
            raise UnsupportedError(f"#sum weight {w!r} is not an integer")
        if w < 0:
            raise UnsupportedError(f"negative #sum weight {w} is not supported")
        return w

    def _aggregate_state(self, binding) -> _AggState:
        st = _AggState(binding)
        seen = set()
        for plan in self.element_plans:
            for b, atoms in self._element_tuples(plan, binding, _OPEN):
                key = (tuple(_value(t, b) for t in plan.terms), frozenset(atoms))
                if key in seen:
                    continue
                seen.add(key)
                w = self._weight(plan, b)
                undefined = [h for h in dict.fromkeys(atoms) if h.status is UNDEFINED]
                if undefined:
                    trues = [h for h in dict.fromkeys(atoms) if h.status is TRUE]
                    st.open_elems.append((key, w, undefined, trues))
                    st.ub += w
                else:
                    st.true_elems.append(atoms)
                    st.lb += w
                    st.ub += w
        return st

    def _false_witnesses(self, state: _AggState) -> list:
        if state._witnesses is None:
            wit = {}
            for plan in self.element_plans:
                for b, atoms in self._element_tuples(plan, state.binding, _ANY):
                    key = (tuple(_value(t, b) for t in plan.terms), frozenset(atoms))
                    if key in wit:
                        continue
                    for h in atoms:
                        if h.status is FALSE:
                            wit[key] = h
                            break
            state._witnesses = wit
        return list(state._witnesses.values())

    def _bound_reason(self, state, lower, upper) -> list:
        out = []
        if lower:
            for atoms in state.true_elems:
                out.extend((h, TRUE) for h in atoms)
        if upper:
            out.extend((h, FALSE) for h in self._false_witnesses(state))
        return out

    def aggregate_bounds(self, substitution: dict) -> AggregateBounds:
        """Interval [lb, ub] of the aggregate value under the current stores."""
        if self.aggregate is None:
            raise ValueError("constraint has no aggregate")
        binding = {Variable(k) if isinstance(k, str) else k: v for k, v in substitution.items()}
        st = self._aggregate_state(binding)
        return AggregateBounds(st.lb, st.ub)

    # -- propagation ------------------------------------------------------
    def on_assign(self, t: TupleHandle, status: Status) -> PropagationResult:
        """React to ``t`` having been assigned ``status`` (stores already updated)."""
        self.calls += 1
        result = PropagationResult()
        forced: dict = {}
        for plan in self.trigger_plans.get(t.predicate, ()):
            binding = self._unify(plan.pattern, t.values)
            if binding is None:
                continue
            if plan.occurrence[0] == "body":
                if (status is TRUE) != plan.positive:
                    continue
                seed = [(t, status)]
            else:
                binding = {v: x for v, x in binding.items() if v in self.global_vars}
                seed = []
            for b, true_lits, undef in self._join(plan.steps, 0, binding, seed, None):
                conflict = self._instance(b, true_lits, undef, forced)
                if conflict is not None:
                    self.conflicts += 1
                    result.kind = "conflict"
                    result.conflict = tuple(dict.fromkeys(conflict))
                    result.substitution = b
                    return result
        return self._emit(result, forced)

    def on_start(self) -> PropagationResult:
        """Run the constraint once with nothing triggered.

        Instances built only from atoms that are never assigned (for example
        a body-free constraint over an empty extension) are never reached by
        a trigger; this pass covers them and propagates at the root.
        """
        self.calls += 1
        result = PropagationResult()
        forced: dict = {}
        for b, true_lits, undef in self._join(self.start_steps, 0, {}, [], None):
            conflict = self._instance(b, true_lits, undef, forced)
            if conflict is not None:
                self.conflicts += 1
                result.kind = "conflict"
                result.conflict = tuple(dict.fromkeys(conflict))
                result.substitution = b
                return result
        return self._emit(result, forced)

    def _emit(self, result, forced):
        if forced:
            result.kind = "propagations"
            result.propagations = list(forced.values())
            for p in result.propagations:
                self._log.append((p.tuple, self._forced.get(p.tuple)))
                self._forced[p.tuple] = p
            self.propagations += len(forced)
        return result

    def _force(self, forced, h, status, reason):
        if h not in forced:
            forced[h] = Propagation(h, status, tuple(dict.fromkeys(reason)))

    def _instance(self, binding, true_lits, undef, forced):
        agg = self.aggregate
        if agg is None:
            if undef is None:
                return true_lits
            st, h = undef
            self._force(forced, h, FALSE if st.positive else TRUE, true_lits)
            return None
        state = self._aggregate_state(binding)
        g = _value(agg.guard, binding)
        if not isinstance(g, int) or isinstance(g, bool):
            g = float("inf")
        op = agg.comparison
        holds, lower, upper = _certainly_true(op, state.lb, state.ub, g)
        if undef is not None:
            if holds:
                st, h = undef
                reason = true_lits + self._bound_reason(state, lower, upper)
                self._force(forced, h, FALSE if st.positive else TRUE, reason)
            return None
        if holds:
            return true_lits + self._bound_reason(state, lower, upper)
        if _certainly_false(op, state.lb, state.ub, g):
            return None
        for key, w, undefined, trues in state.open_elems:
            # the element becoming true would violate the constraint
            ok, lo, up = _certainly_true(op, state.lb + w, state.ub, g)
            if ok and len(undefined) == 1:
                reason = (true_lits + self._bound_reason(state, lo, up)
                          + [(h, TRUE) for h in trues])
                self._force(forced, undefined[0], FALSE, reason)
                continue
            # the element becoming false would violate the constraint
            ok, lo, up = _certainly_true(op, state.lb, state.ub - w, g)
            if ok:
                reason = true_lits + self._bound_reason(state, lo, up)
                for h in undefined:
                    self._force(forced, h, TRUE, reason)
        return None

    # -- explanations and backtracking ------------------------------------
    def explain(self, forced: TupleHandle) -> tuple:
        p = self._forced.get(forced)
        if p is None:
            raise NotForcedError(f"{forced} was not forced by this propagator")
        return p.reason

    def mark(self) -> int:
        return len(self._log)

    def undo(self, mark: int):
        if mark > len(self._log):
            raise ValueError(f"stale mark {mark}")
        while len(self._log) > mark:
            h, prev = self._log.pop()
            if prev is None:
                del self._forced[h]
            else:
                self._forced[h] = prev

    def dump(self) -> str:
        lines = [f"constraint {self.constraint}"]
        for pred in sorted(self.trigger_plans):
            for plan in self.trigger_plans[pred]:
                lines.append(plan.describe())
        if self.aggregate is not None:
            a = self.aggregate
            lines.append(f"aggregate #{a.function} {a.comparison} {a.guard}")
            for ep in self.element_plans:
                lines.append(f"  element#{ep.index} terms=({','.join(map(str, ep.terms))})")
                lines += [f"    step {s.describe()}" for s in ep.steps]
        return "\n".join(lines) + "\n"
