import itertools

import pytest
from hypothesis import given, settings, strategies as st

from aggrprop.clauses import forbid_aggregate
from aggrprop.errors import UnsupportedError
from aggrprop.oracle import compare

OPS = (">=", ">", "<=", "<", "=")


def satisfied(clauses, assignment):
    return all(any(assignment[abs(l)] == (l > 0) for l in c) for c in clauses)


@settings(max_examples=400, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=0, max_size=6), st.sampled_from(OPS),
       st.one_of(st.integers(-1, 12), st.just("sym")))
def test_clauses_hold_exactly_when_the_aggregate_is_false(weights, op, guard):
    lits = list(range(1, len(weights) + 1))
    clauses = forbid_aggregate(op, guard, weights, lits)
    for bits in itertools.product((False, True), repeat=len(weights)):
        assignment = dict(zip(lits, bits))
        total = sum(w for w, b in zip(weights, bits) if b)
        assert satisfied(clauses, assignment) == (not compare(total, op, guard))


def test_covers_are_minimal():
    clauses = forbid_aggregate(">=", 3, [1, 2, 3], [1, 2, 3])
    assert sorted(map(sorted, clauses)) == [[-3], [-2, -1]]


def test_symbolic_guard():
    assert forbid_aggregate(">=", "a", [1, 1], [1, 2]) == []
    assert forbid_aggregate("<", "a", [1, 1], [1, 2]) == [[]]


def test_negative_weights_are_rejected():
    with pytest.raises(UnsupportedError):
        forbid_aggregate(">=", 1, [-1, 2], [1, 2])


def test_expansion_respects_the_clause_budget():
    from aggrprop.clauses import _Limit
    from aggrprop.errors import GroundingBudgetExceeded
    weights = [1] * 12
    lits = list(range(1, 13))
    assert len(forbid_aggregate(">=", 6, weights, lits)) == 924
    with pytest.raises(GroundingBudgetExceeded):
        forbid_aggregate(">=", 6, weights, lits, _Limit(cap=100))


def test_ground_solve_reports_expansion_overrun():
    from aggrprop.bench import sumknap
    from aggrprop.parser import parse
    from aggrprop.solver import solve
    p = parse(sumknap(14))
    assert solve(p, "ground-solve", ground_cap=1000).outcome == "budget-exceeded"
    assert solve(p, "eager", ground_cap=1000).coherent
