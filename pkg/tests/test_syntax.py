import pytest
from hypothesis import given, settings

from imbes.utils.custom_exceptions import ParseError, SequentError
from imbes.utils.syntax import (
    And,
    Atom,
    Bot,
    Box,
    Condition,
    Dia,
    Imp,
    LabelledFormula,
    Or,
    RelAssumption,
    Top,
    fresh_label,
    generalized_subformulae,
    parse_formula,
    parse_frames,
    parse_item,
    parse_sequent,
    print_formula,
    print_item,
    print_sequent,
)

from .strategies import formulas, labelled

p, q, r, s = Atom("p"), Atom("q"), Atom("r"), Atom("s")


@pytest.mark.parametrize(
    "text, expected",
    [
        ("p & q | r -> s", Imp(Or(And(p, q), r), s)),
        ("p -> q -> r", Imp(p, Imp(q, r))),
        ("[]p -> p", Imp(Box(p), p)),
        ("<>[]p & q", And(Dia(Box(p)), q)),
        ("[](p -> q)", Box(Imp(p, q))),
        ("top | bot", Or(Top(), Bot())),
        ("p & q & r", And(And(p, q), r)),
    ],
)
def test_precedence_and_associativity(text, expected):
    assert parse_formula(text) == expected


@given(formulas())
@settings(max_examples=200, deadline=None)
def test_printed_formula_parses_back(formula):
    assert parse_formula(print_formula(formula)) == formula


@given(labelled())
@settings(max_examples=100, deadline=None)
def test_printed_item_parses_back(item):
    assert parse_item(print_item(item)) == item


def test_print_uses_minimal_parentheses():
    assert print_formula(Imp(Imp(p, q), r)) == "(p -> q) -> r"
    assert print_formula(Imp(p, Imp(q, r))) == "p -> q -> r"
    assert print_formula(And(p, Or(q, r))) == "p & (q | r)"
    assert print_item(LabelledFormula(Imp(Box(p), p), "x")) == "([]p -> p)@x"
    assert print_item(LabelledFormula(Box(p), "x")) == "[]p@x"


def test_relational_item():
    assert parse_item("x R y") == RelAssumption("x", "y")
    assert print_item(RelAssumption("x", "y")) == "x R y"


def test_sequent_printing_is_canonical():
    seq = parse_sequent("q@x, p@x |- (p & q)@x")
    assert print_sequent(seq.context, seq.goal) == "p@x, q@x |- (p & q)@x"
    assert parse_sequent("|- top@x").context == frozenset()


@pytest.mark.parametrize("text", ["f0@x", "p@w0", "f_r@x"])
def test_reserved_names_rejected(text):
    with pytest.raises(ParseError):
        parse_item(text)


def test_reserved_names_accepted_when_allowed():
    assert parse_item("p@w0", allow_reserved=True) == LabelledFormula(p, "w0")


def test_parse_error_carries_position():
    with pytest.raises(ParseError) as error:
        parse_formula("p $ q")
    assert error.value.position == 2


@pytest.mark.parametrize("text", ["p ->", "(p & q", "p q", "@x", "p@"])
def test_malformed_input(text):
    with pytest.raises(ParseError):
        parse_item(text) if "@" in text else parse_formula(text)


def test_relational_context_is_not_a_sequent():
    with pytest.raises(SequentError):
        parse_sequent("x R y |- p@x")


def test_parse_frames():
    assert parse_frames("T, 4") == {Condition.T, Condition.FOUR}
    assert parse_frames("") == frozenset()
    with pytest.raises(ParseError):
        parse_frames("T,X")


def test_fresh_label_skips_used_names():
    assert fresh_label({"x"}) == "w0"
    assert fresh_label({"w0", "w1", "w3"}) == "w2"


class TestGeneralizedSubformulae:
    def test_ground_members(self):
        xi = generalized_subformulae(parse_sequent("|- ([]p -> p)@x"))
        assert LabelledFormula(Imp(Box(p), p), "x") in xi
        assert LabelledFormula(Box(p), "x") in xi
        assert LabelledFormula(p, "x") in xi
        assert LabelledFormula(q, "x") not in xi

    def test_modal_bodies_occur_at_every_label(self):
        xi = generalized_subformulae(parse_sequent("|- []p@x"))
        assert LabelledFormula(p, "y") in xi
        assert LabelledFormula(p, "w7") in xi
        assert RelAssumption("x", "y") in xi
        assert RelAssumption("y", "x") not in xi
        assert xi.covers_all_labels

    def test_nested_modalities_reach_any_anchor(self):
        xi = generalized_subformulae(parse_sequent("|- [][]p@x"))
        assert LabelledFormula(Box(p), "y") in xi
        assert RelAssumption("y", "z") in xi

    def test_propositional_closure_has_no_families(self):
        xi = generalized_subformulae(parse_sequent("p@x |- (p | q)@y"))
        assert not xi.covers_all_labels
        assert xi.labels() == {"x", "y"}
        assert LabelledFormula(q, "x") not in xi

    def test_formulas_are_ordered_by_printed_form(self):
        xi = generalized_subformulae(parse_sequent("|- (q & p)@x"))
        printed = [print_formula(formula) for formula, _, _ in xi.formulas()]
        assert printed == sorted(printed)
