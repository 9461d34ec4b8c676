import pytest
from hypothesis import given, settings, strategies as st

from aggrprop.bench import countgrid, countgrid_ground_rules
from aggrprop.errors import GroundingBudgetExceeded
from aggrprop.grounder import (body_variables, dependency_graph, ground_program, ground_rule,
                               herbrand_universe, instance_count, is_recursive, is_tight)
from aggrprop.parser import parse
from aggrprop.syntax import Atom


def test_universe_collects_all_constants_including_guards():
    p = parse("p(1,a). :- p(X,Y), #count{Z: q(Z,b)} >= 3.")
    assert herbrand_universe(p) == (1, 3, "a", "b")


def test_naive_instance_count_is_universe_power():
    p = parse("u(1). u(2). u(3). :- u(X), u(Y), not v(X,Y). v(1,1).")
    U = herbrand_universe(p)
    c = p.rules[3]
    assert body_variables(c) == list(c.global_variables())
    assert instance_count(c, U) == 9
    assert len(ground_rule(c, U)) == 9
    assert len(ground_program(p)) == 3 + 9 + 1


def test_ground_aggregate_expands_local_variables_and_collapses_pairs():
    p = parse("q(1). q(2). :- q(X), #count{1: r(X,Y); 1: r(X,Y)} >= 1.")
    (inst1, inst2) = ground_rule(p.rules[2], herbrand_universe(p))
    agg = inst1.aggregate
    assert [str(e) for e in agg.elements] == ["1: r(1,1)", "1: r(1,2)"]
    assert inst2.body[0].atom == Atom("q", (2,))


def test_atom_table_is_dense_and_first_occurrence():
    gp = ground_program(parse("a. b :- a. c :- not b."))
    assert gp.atoms == [Atom("a"), Atom("b"), Atom("c")]
    assert gp.atom_table[Atom("c")] == 3


def test_budget_is_checked_before_grounding():
    p = parse(countgrid(40))
    with pytest.raises(GroundingBudgetExceeded) as exc:
        ground_program(p, cap=1000)
    assert exc.value.needed == countgrid_ground_rules(40, sum(
        1 for r in p.rules if r.is_fact and r.head[0].predicate == "c"))


@pytest.mark.parametrize("n", [1, 2, 3, 5, 9])
def test_countgrid_ground_count_matches_formula(n):
    p = parse(countgrid(n))
    colours = sum(1 for r in p.rules if r.is_fact and r.head[0].predicate == "c")
    assert len(ground_program(p, cap=None)) == countgrid_ground_rules(n, colours)


@pytest.mark.parametrize("text,expected", [
    ("a :- b. b :- a.", True),           # 2-cycle
    ("a :- a.", True),                   # self-loop
    ("p(X) :- q(X). q(X) :- r(X), p(X). r(1).", True),
    ("a :- not b. b :- not a.", False),  # negation does not count
    ("a :- b. b :- c. c.", False),
    (":- a, b. a.", False),
])
def test_recursion_detection(text, expected):
    p = parse(text)
    assert is_recursive(p) is expected
    assert is_tight(p) is not expected


def test_choice_rules_stay_tight():
    assert is_tight(parse("{a}. b :- a. {c} :- b."))


def test_dependency_graph_edges():
    g = dependency_graph(parse("a :- b, not c. d :- a."))
    assert g.edges == {("b", "a"), ("a", "d")}
    assert g.vertices == {"a", "b", "c", "d"}


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4), st.integers(0, 3))
def test_instance_count_property(u, v):
    consts = " ".join(f"d({i})." for i in range(1, u + 1))
    body = ", ".join(f"d(V{i})" for i in range(v)) or "d(1)"
    p = parse(f"{consts} :- {body}.")
    U = herbrand_universe(p)
    assert len(ground_rule(p.rules[-1], U)) == len(U) ** v


def test_element_count_is_exact_without_duplicates():
    from aggrprop.grounder import element_count
    p = parse("q(1). q(2). q(3). :- q(X), #count{Y: r(X,Y); Y,Z: s(Y,Z)} >= 1.")
    c = p.rules[3]
    U = herbrand_universe(p)
    assert element_count(c, U) == 3 * (3 + 9)
    assert sum(len(g.aggregate.elements) for g in ground_rule(c, U)) == 3 * (3 + 9)


def test_wide_aggregates_hit_the_budget_before_grounding():
    p = parse("q(1). q(2). q(3). q(4). :- q(X), #count{Y,Z: r(Y,Z)} >= 1.")
    with pytest.raises(GroundingBudgetExceeded, match="aggregate elements") as exc:
        ground_program(p, cap=50)
    assert exc.value.needed == 4 * 16
