import random

import pytest
from hypothesis import given, settings, strategies as st

from aggrprop.errors import AtomCapExceeded
from aggrprop.grounder import GroundProgram, ground_program
from aggrprop.oracle import (aggregate_multiset, aggregate_value, enumerate_stable,
                             eval_aggregate, flp_reduct, is_model, is_stable, stable_models_of)
from aggrprop.parser import parse
from aggrprop.syntax import Atom
from helpers import COUNT_AGG, ROW_PROGRAM
from randprog import random_program


def A(name, *terms):
    return Atom(name, tuple(terms))


def gp(text):
    return ground_program(parse(text), cap=None)


def models(text, **kw):
    return {frozenset(str(a) for a in m) for m in enumerate_stable(parse(text), **kw)}


def count_fixture():
    agg = parse(f":- {COUNT_AGG}.").rules[0].aggregate
    return agg, {A("p", 1, 1), A("p", 2, 1)}


def test_count_multiset_and_value():
    agg, I = count_fixture()
    assert aggregate_multiset(agg, I) == [1, 2]
    assert aggregate_value(agg, I) == 2
    assert eval_aggregate(agg, I)


def test_empty_multiset():
    agg = parse(":- #count{X: p(X)} >= 1.").rules[0].aggregate
    assert not eval_aggregate(agg, set())


def test_sum_fixture():
    agg = parse(":- #sum{2: p; 3: q} = 5.").rules[0].aggregate
    assert eval_aggregate(agg, {A("p"), A("q")})
    assert not eval_aggregate(agg, {A("p")})


def test_sum_rejects_symbols():
    agg = parse(":- #sum{a: p} >= 1.").rules[0].aggregate
    with pytest.raises(ValueError):
        aggregate_value(agg, {A("p")})


def test_symbolic_guard_is_above_every_integer():
    agg = parse(":- q(G), #count{X: p(X)} < G.").rules[0].aggregate
    from aggrprop.syntax import AggregateAtom
    ground = AggregateAtom(agg.function, agg.elements, "<", "zz")
    assert eval_aggregate(ground, set())


def test_is_model_fixtures():
    p = gp("a :- b. b :- b.")
    assert not is_model(p, {A("b")})
    assert is_model(p, set())


def test_two_b_atoms_violate_the_row_constraint():
    p = gp(ROW_PROGRAM)
    I = {A("a", 1, 1), A("c", 1), A("b", 1, 1), A("b", 1, 2), A("b'", 1, 3)}
    assert not is_model(p, I)
    constraint_instances = [r for r in flp_reduct(p, I).rules if r.is_constraint]
    assert any(r.body[0].atom == A("a", 1, 1) for r in constraint_instances)


def test_reduct_keeps_exactly_true_bodies():
    p = gp("f. a :- b. c :- not b.")
    red = flp_reduct(p, {A("f"), A("c")})
    assert [str(r) for r in red.rules] == ["f.", "c :- not b."]
    assert [str(r) for r in flp_reduct(p, set()).rules] == ["f.", "c :- not b."]


def test_stability_fixtures():
    assert is_stable(gp("a :- not b."), {A("a")})
    assert not is_stable(gp("a :- a."), {A("a")})
    assert is_stable(gp("a :- a."), set())


def test_two_choice_models():
    assert models("a :- not b. b :- not a.") == {frozenset({"a"}), frozenset({"b"})}


def test_positive_loop_has_only_empty_model():
    assert models("a :- a.") == {frozenset()}


def test_contradiction_is_incoherent():
    assert models("a. :- a.") == set()


def test_row_program_models():
    ms = enumerate_stable(parse(ROW_PROGRAM))
    assert len(ms) == 4
    for m in ms:
        assert sum(1 for a in m if a.predicate == "b") <= 1


def test_aggregate_constraint_filters_models():
    # {n} leaves the count at 0, which the constraint forbids
    p = parse("a :- not n. n :- not a. :- #count{1: a} < 1, n.")
    assert {frozenset(map(str, m)) for m in enumerate_stable(p)} == {frozenset({"a"})}


def test_atom_cap():
    with pytest.raises(AtomCapExceeded):
        enumerate_stable(parse("{p(1); p(2); p(3)}."), atom_cap=5)


def test_nontight_programs_are_fine_for_the_oracle():
    assert models("a :- b. b :- a. c :- not a.") == {frozenset({"c"})}


def _slow_stable(p):
    """Direct definition: every subset of the Herbrand base is a candidate."""
    g = ground_program(p, cap=None)
    atoms = list(g.atoms)
    out = set()
    for m in range(1 << len(atoms)):
        I = frozenset(a for i, a in enumerate(atoms) if m >> i & 1)
        if is_stable(g, I):
            out.add(I)
    return out


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_fast_enumeration_matches_definition(seed):
    p = random_program(random.Random(seed), atom_cap=8, min_atoms=1)
    if len(ground_program(p, cap=None).atoms) > 12:
        return
    assert enumerate_stable(p) == _slow_stable(p)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_stable_models_are_models(seed):
    p = random_program(random.Random(seed), atom_cap=10)
    g = ground_program(p, cap=None)
    for m in stable_models_of(g):
        assert is_model(g, m)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6))
def test_adding_a_cautious_fact_changes_nothing(seed):
    p = random_program(random.Random(seed), atom_cap=10)
    ms = enumerate_stable(p)
    if not ms:
        return
    common = frozenset.intersection(*ms)
    if not common:
        return
    atom = sorted(common, key=lambda a: a.sort_key())[0]
    q = parse(str(p) + f"{atom}.\n")
    assert enumerate_stable(q) == ms


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.booleans(), st.booleans()), min_size=1, max_size=5),
       st.integers(0, 6))
def test_count_and_positive_sum_are_monotone(elems, guard):
    text = "; ".join(f"{w}: p({i})" for i, (w, _, _) in enumerate(elems))
    for fn in ("count", "sum"):
        agg = parse(f":- #{fn}{{{text}}} >= {guard}.").rules[0].aggregate
        small = {A("p", i) for i, (_, a, _) in enumerate(elems) if a}
        large = small | {A("p", i) for i, (_, _, b) in enumerate(elems) if b}
        if eval_aggregate(agg, small):
            assert eval_aggregate(agg, large)


def test_reduct_returns_ground_program():
    assert isinstance(flp_reduct(gp("a."), set()), GroundProgram)
