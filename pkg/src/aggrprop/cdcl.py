"""A small CDCL engine over signed-integer literals.

Two watched literals, first-UIP learning, activity-based decisions (ties by
variable id), no restarts.  An optional *theory* object is notified of
every assignment and may force literals or report conflicts; the eager
propagators plug in through it.
"""

from __future__ import annotations

import heapq
import time

from .errors import TimeBudgetExceeded


class Theory:
    """Interface for assignment listeners.  The default does nothing."""

    def assigned(self, var: int, value: bool):
        """Called as soon as ``var`` is put on the trail."""

    def propagate(self, var: int, value: bool):
        """Called when the assignment is processed.  Returns ``None`` or a list
        of ``(literal, reason_clause)`` pairs, or ``("conflict", clause)``."""
        return None

    def start(self):
        """Called once, at the root, before the first decision.  Same return
        convention as :meth:`propagate`."""
        return None

    def new_level(self):
        pass

    def backtrack(self, level: int):
        pass


class CDCL:
    def __init__(self, theory: Theory | None = None):
        self.nvars = 0
        self.vals = [0]          # 1 true, -1 false, 0 unassigned
        self.levels = [0]
        self.reasons = [None]
        self.activity = [0.0]
        self.watched = [False]   # var has a theory listener
        self.trail: list[int] = []
        self.trail_lim: list[int] = []
        self.qhead = 0
        self.clauses: list[list[int]] = []
        self.learnts: list[list[int]] = []   # every learned clause, for inspection
        self.watches: dict[int, list[list[int]]] = {}
        self.heap: list = []
        self.var_inc = 1.0
        self.ok = True
        self._started = False
        self.theory = theory or Theory()
        self.decisions = 0
        self.conflicts = 0
        self.clause_propagations = 0
        self.theory_propagations = 0
        self.learned = 0

    # -- variables and values ---------------------------------------------
    def new_var(self, watched=False) -> int:
        self.nvars += 1
        v = self.nvars
        self.vals.append(0)
        self.levels.append(0)
        self.reasons.append(None)
        self.activity.append(0.0)
        self.watched.append(watched)
        self.watches[v] = []
        self.watches[-v] = []
        heapq.heappush(self.heap, (0.0, v))
        return v

    def value(self, lit: int) -> int:
        return self.vals[lit] if lit > 0 else -self.vals[-lit]

    @property
    def decision_level(self) -> int:
        return len(self.trail_lim)

    def _enqueue(self, lit: int, reason) -> bool:
        v = lit if lit > 0 else -lit
        cur = self.vals[v]
        if cur:
            return (cur > 0) == (lit > 0)
        self.vals[v] = 1 if lit > 0 else -1
        self.levels[v] = len(self.trail_lim)
        self.reasons[v] = reason
        self.trail.append(lit)
        if self.watched[v]:
            self.theory.assigned(v, lit > 0)
        return True

    # -- clauses ------------------------------------------------------------
    def add_clause(self, lits) -> bool:
        """Add a permanent clause; only valid at decision level 0."""
        if not self.ok:
            return False
        assert self.decision_level == 0
        clause = []
        seen = set()
        for lit in lits:
            if -lit in seen:
                return True
            if lit in seen:
                continue
            val = self.value(lit)
            if val > 0:
                return True
            if val < 0:
                continue
            seen.add(lit)
            clause.append(lit)
        if not clause:
            self.ok = False
            return False
        if len(clause) == 1:
            self._enqueue(clause[0], [clause[0]])
            return True
        self.clauses.append(clause)
        self.watches[-clause[0]].append(clause)
        self.watches[-clause[1]].append(clause)
        return True

    # -- propagation --------------------------------------------------------
    def propagate(self):
        """Propagate to fixpoint; return a falsified clause or ``None``."""
        trail = self.trail
        vals = self.vals
        while self.qhead < len(trail):
            lit = trail[self.qhead]
            self.qhead += 1
            # clauses watching the now-false literal -lit are stored under lit
            ws = self.watches[lit]
            i = 0
            n = len(ws)
            keep = []
            while i < n:
                c = ws[i]
                i += 1
                false_lit = -lit
                if c[0] == false_lit:
                    c[0], c[1] = c[1], c[0]
                first = c[0]
                fv = vals[first] if first > 0 else -vals[-first]
                if fv > 0:
                    keep.append(c)
                    continue
                for k in range(2, len(c)):
                    q = c[k]
                    qv = vals[q] if q > 0 else -vals[-q]
                    if qv >= 0:
                        c[1], c[k] = q, false_lit
                        self.watches[-q].append(c)
                        break
                else:
                    keep.append(c)
                    if fv < 0:
                        keep.extend(ws[i:])
                        self.watches[lit] = keep
                        self.qhead = len(trail)
                        return c
                    self.clause_propagations += 1
                    self._enqueue(first, c)
            self.watches[lit] = keep
            v = lit if lit > 0 else -lit
            if self.watched[v]:
                confl = self._apply(self.theory.propagate(v, lit > 0))
                if confl is not None:
                    return confl
        return None

    def _apply(self, out):
        if not out:
            return None
        if isinstance(out, tuple):
            self.qhead = len(self.trail)
            return out[1]
        for flit, reason in out:
            val = self.value(flit)
            if val > 0:
                continue
            if val < 0:
                self.qhead = len(self.trail)
                return reason
            self.theory_propagations += 1
            self._enqueue(flit, reason)
        return None

    # -- search -------------------------------------------------------------
    def _new_level(self):
        self.trail_lim.append(len(self.trail))
        self.theory.new_level()

    def cancel_until(self, level: int):
        if self.decision_level <= level:
            return
        start = self.trail_lim[level]
        vals, act, heap = self.vals, self.activity, self.heap
        for lit in self.trail[start:]:
            v = lit if lit > 0 else -lit
            vals[v] = 0
            self.reasons[v] = None
            heapq.heappush(heap, (-act[v], v))
        del self.trail[start:]
        del self.trail_lim[level:]
        self.qhead = len(self.trail)
        self.theory.backtrack(level)

    def _bump(self, v):
        self.activity[v] += self.var_inc
        if self.activity[v] > 1e100:
            self.activity = [a * 1e-100 for a in self.activity]
            self.var_inc *= 1e-100
            self.heap = [(-self.activity[u], u) for u in range(1, self.nvars + 1)
                         if not self.vals[u]]
            heapq.heapify(self.heap)
        elif not self.vals[v]:
            heapq.heappush(self.heap, (-self.activity[v], v))

    def _analyze(self, confl):
        levels = self.levels
        cur = self.decision_level
        seen = set()
        learnt = [0]
        counter = 0
        p = 0
        idx = len(self.trail) - 1
        clause = confl
        while True:
            for q in clause:
                if q == p:
                    continue
                v = q if q > 0 else -q
                if v in seen or levels[v] == 0:
                    continue
                seen.add(v)
                self._bump(v)
                if levels[v] >= cur:
                    counter += 1
                else:
                    learnt.append(q)
            while True:
                lit = self.trail[idx]
                idx -= 1
                if (lit if lit > 0 else -lit) in seen:
                    break
            p = lit
            counter -= 1
            if counter <= 0:
                break
            clause = self.reasons[p if p > 0 else -p]
        learnt[0] = -p
        if len(learnt) == 1:
            return learnt, 0
        best = max(range(1, len(learnt)), key=lambda k: levels[abs(learnt[k])])
        learnt[1], learnt[best] = learnt[best], learnt[1]
        return learnt, levels[abs(learnt[1])]

    def _pick(self):
        heap, vals, act = self.heap, self.vals, self.activity
        while heap:
            neg, v = heapq.heappop(heap)
            if not vals[v] and -neg == act[v]:
                return v
        return None

    def solve(self, deadline: float | None = None) -> bool:
        """Search from the current state.  True: all variables assigned
        without conflict (the trail is left in place).  False: unsatisfiable."""
        if not self.ok:
            return False
        if not self._started:
            self._started = True
            if self.propagate() is not None or self._apply(self.theory.start()) is not None:
                self.ok = False
                return False
        steps = 0
        while True:
            steps += 1
            if deadline is not None and steps % 64 == 0 and time.perf_counter() > deadline:
                raise TimeBudgetExceeded("time budget exceeded while solving")
            confl = self.propagate()
            if confl is not None:
                self.conflicts += 1
                top = max((self.levels[abs(q)] for q in confl), default=0)
                if top == 0:
                    self.ok = False
                    return False
                if top < self.decision_level:
                    self.cancel_until(top)
                learnt, back = self._analyze(confl)
                self.learnts.append(list(learnt))
                self.cancel_until(back)
                if len(learnt) == 1:
                    self._enqueue(learnt[0], [learnt[0]])
                else:
                    self.clauses.append(learnt)
                    self.watches[-learnt[0]].append(learnt)
                    self.watches[-learnt[1]].append(learnt)
                    self._enqueue(learnt[0], learnt)
                self.learned += 1
                self.var_inc /= 0.95
                continue
            v = self._pick()
            if v is None:
                return True
            self.decisions += 1
            self._new_level()
            self._enqueue(-v, None)

    def model(self) -> list[bool]:
        return [v > 0 for v in self.vals]
