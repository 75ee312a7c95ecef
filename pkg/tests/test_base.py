import dataclasses
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imbes.utils.base import (
    EMPTY_BASE,
    BasicRule,
    LabelledAtom,
    SchematicRule,
    SearchBudget,
    Step,
    check_atomic_derivation,
    derives,
    extend,
    format_base,
    instantiate,
    parse_base,
    parse_rule,
)
from imbes.utils.corpus import random_base, random_sentence
from imbes.utils.custom_exceptions import BaseFormatError, ConfigError
from imbes.utils.syntax import ALL_CONDITIONS, Condition, RelAssumption

NO_FRAMES = frozenset()
BUDGET = SearchBudget(depth=6, modal_uses=1, fresh=1).with_pool({"x", "y"})


def at(atom, label):
    return LabelledAtom(atom, label)


def test_parse_rule_shapes():
    axiom = parse_rule("=> p@x")
    assert isinstance(axiom, BasicRule) and axiom.antecedents == () and axiom.conclusion == at("p", "x")
    hypothetical = parse_rule("(q@x => p@x, => r@y) => s@x")
    assert [a.premises for a in hypothetical.antecedents] == [frozenset({at("q", "x")}), frozenset()]
    schematic = parse_rule("(=> x R ?Y) => q@?Y where ?Y != x")
    assert isinstance(schematic, SchematicRule)
    assert schematic.metavars == ("?Y",)
    assert schematic.constraints == frozenset({("?Y", "x")})


@pytest.mark.parametrize(
    "text",
    [
        "(q@x => x R y) => p@x",
        "(=> p@x) => x R y",
        "=> p@x where ?Y != x",
        "(=> p@?Y) => q@?Y where fresh ?Z",
        "=> p@",
    ],
)
def test_malformed_rules(text):
    with pytest.raises(BaseFormatError):
        parse_rule(text)


def test_base_text_survives_formatting():
    text = "# a comment\n=> p@x\n(q@x => p@x) => r@x  # trailing\n(=> p@?Y) => q@?Y\n"
    base = parse_base(text)
    assert len(base) == 3
    assert parse_base(format_base(base)) == base


def test_instances_respect_constraints():
    schema = parse_rule("(=> x R ?Y) => q@?Y where ?Y != x")
    instances = instantiate(schema, {"x", "y", "z"})
    assert {rule.conclusion for rule in instances} == {at("q", "y"), at("q", "z")}


def test_reflexivity():
    d = derives(EMPTY_BASE, NO_FRAMES, {at("p", "x")}, at("p", "x"), BUDGET)
    assert d.step == Step.REF


def test_axiom_application():
    base = parse_base("=> p@x")
    d = derives(base, NO_FRAMES, set(), at("p", "x"), BUDGET)
    assert d.step == Step.APP
    assert check_atomic_derivation(base, NO_FRAMES, d)


def test_hypothetical_antecedent():
    base = parse_base("(q@x => p@x) => r@x\n(=> q@x) => p@x")
    d = derives(base, NO_FRAMES, set(), at("r", "x"), BUDGET)
    assert d is not None
    assert d.children[0].context == frozenset({at("q", "x")})
    assert check_atomic_derivation(base, NO_FRAMES, d)


def test_underivable_atom():
    assert derives(EMPTY_BASE, NO_FRAMES, {at("q", "x")}, at("p", "x"), BUDGET) is None
    assert derives(parse_base("=> p@y"), NO_FRAMES, set(), at("p", "x"), BUDGET) is None


def test_schematic_rule_over_pool():
    base = parse_base("(=> p@?Y) => q@?Y")
    d = derives(base, NO_FRAMES, {at("p", "y")}, at("q", "y"), BUDGET)
    assert d is not None and d.rule.conclusion == at("q", "y")
    assert check_atomic_derivation(base, NO_FRAMES, d)


class TestModalCases:
    def test_reflexive_case_needs_condition(self):
        base = parse_base("(=> x R x) => p@x")
        assert derives(base, NO_FRAMES, set(), at("p", "x"), BUDGET) is None
        d = derives(base, {Condition.T}, set(), at("p", "x"), BUDGET)
        assert d.step == Step.T
        assert d.added == (RelAssumption("x", "x"),)
        assert check_atomic_derivation(base, {Condition.T}, d)
        assert not check_atomic_derivation(base, NO_FRAMES, d)

    def test_transitive_case(self):
        base = parse_base("(=> x R z) => p@x")
        context = {RelAssumption("x", "y"), RelAssumption("y", "z")}
        budget = BUDGET.with_pool({"x", "y", "z"})
        d = derives(base, {Condition.FOUR}, context, at("p", "x"), budget)
        assert d.step == Step.FOUR
        assert check_atomic_derivation(base, {Condition.FOUR}, d)

    def test_symmetric_case(self):
        base = parse_base("(=> y R x) => p@x")
        d = derives(base, {Condition.B}, {RelAssumption("x", "y")}, at("p", "x"), BUDGET)
        assert d.step == Step.B
        assert d.children[0].step == Step.REF

    def test_modal_budget_zero_disables_cases(self):
        base = parse_base("(=> x R x) => p@x")
        budget = dataclasses.replace(BUDGET, modal_uses=0)
        assert derives(base, {Condition.T}, set(), at("p", "x"), budget) is None


def test_checker_rejects_foreign_rule():
    base = parse_base("=> p@x")
    d = derives(base, NO_FRAMES, set(), at("p", "x"), BUDGET)
    assert not check_atomic_derivation(EMPTY_BASE, NO_FRAMES, d)


def test_checker_rejects_missing_hypothesis():
    d = derives(EMPTY_BASE, NO_FRAMES, {at("p", "x")}, at("p", "x"), BUDGET)
    tampered = dataclasses.replace(d, context=frozenset())
    assert not check_atomic_derivation(EMPTY_BASE, NO_FRAMES, tampered)


def test_negative_budget_rejected():
    with pytest.raises(ConfigError):
        SearchBudget(depth=-1)


def _instance(seed):
    rng = random.Random(seed)
    base = random_base(rng, rng.randrange(1, 6))
    context = frozenset(random_sentence(rng, ("p", "q", "r"), ("x", "y")) for _ in range(rng.randrange(0, 3)))
    goal = random_sentence(rng, ("p", "q", "r"), ("x", "y"))
    extra = random_sentence(rng, ("p", "q", "r"), ("x", "y"))
    return rng, base, context, goal, extra


SMALL = SearchBudget(depth=5, modal_uses=0, fresh=0).with_pool({"x", "y"})


@given(st.integers(min_value=0, max_value=10**6))
@settings(max_examples=60, deadline=None)
def test_weakening(seed):
    _, base, context, goal, extra = _instance(seed)
    if derives(base, NO_FRAMES, context, goal, SMALL) is not None:
        assert derives(base, NO_FRAMES, context | {extra}, goal, SMALL) is not None


@given(st.integers(min_value=0, max_value=10**6))
@settings(max_examples=60, deadline=None)
def test_monotonicity(seed):
    rng, base, context, goal, _ = _instance(seed)
    bigger = extend(base, random_base(rng, 2).ground)
    if derives(base, NO_FRAMES, context, goal, SMALL) is not None:
        assert derives(bigger, NO_FRAMES, context, goal, SMALL) is not None


@given(st.integers(min_value=0, max_value=10**6))
@settings(max_examples=60, deadline=None)
def test_budget_monotonicity(seed):
    _, base, context, goal, _ = _instance(seed)
    larger = dataclasses.replace(SMALL, depth=SMALL.depth + 2)
    found = derives(base, NO_FRAMES, context, goal, SMALL)
    if found is not None:
        again = derives(base, NO_FRAMES, context, goal, larger)
        assert again is not None
        assert check_atomic_derivation(base, NO_FRAMES, again)


MODAL = SearchBudget(depth=5, modal_uses=2, fresh=1).with_pool({"x", "y"})
frame_sets = st.sets(st.sampled_from(ALL_CONDITIONS), min_size=1, max_size=3)


@given(st.integers(min_value=0, max_value=10**6), frame_sets)
@settings(max_examples=40, deadline=None)
def test_weakening_with_frames(seed, gamma):
    _, base, context, goal, extra = _instance(seed)
    if derives(base, gamma, context, goal, MODAL) is not None:
        assert derives(base, gamma, context | {extra}, goal, MODAL) is not None


@given(st.integers(min_value=0, max_value=10**6), frame_sets)
@settings(max_examples=40, deadline=None)
def test_monotonicity_with_frames(seed, gamma):
    rng, base, context, goal, _ = _instance(seed)
    bigger = extend(base, random_base(rng, 2).ground)
    if derives(base, gamma, context, goal, MODAL) is not None:
        assert derives(bigger, gamma, context, goal, MODAL) is not None


@given(st.integers(min_value=0, max_value=10**6), frame_sets)
@settings(max_examples=40, deadline=None)
def test_budget_monotonicity_with_frames(seed, gamma):
    _, base, context, goal, _ = _instance(seed)
    larger = dataclasses.replace(MODAL, depth=MODAL.depth + 2, modal_uses=MODAL.modal_uses + 1)
    if derives(base, gamma, context, goal, MODAL) is not None:
        again = derives(base, gamma, context, goal, larger)
        assert again is not None
        assert check_atomic_derivation(base, gamma, again)


@given(st.integers(min_value=0, max_value=10**6), frame_sets)
@settings(max_examples=40, deadline=None)
def test_hypotheses_act_as_axioms(seed, gamma):
    _, base, context, goal, _ = _instance(seed)
    axioms = [BasicRule((), s) for s in context]
    if derives(extend(base, axioms), gamma, set(), goal, MODAL) is not None:
        assert derives(base, gamma, context, goal, MODAL) is not None


def test_random_bases_reach_modal_cases():
    rng = random.Random(7)
    relational = [
        rule
        for _ in range(20)
        for rule in random_base(rng, 5).ground
        if any(isinstance(a.head, RelAssumption) for a in rule.antecedents)
    ]
    assert relational
