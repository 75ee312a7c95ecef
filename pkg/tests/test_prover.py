import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imbes.utils.base import SearchBudget
from imbes.utils.constants import FRAME_TABLE
from imbes.utils.corpus import IK_THEOREMS, NEGATIVE_BUDGET, NEGATIVE_CONDITIONS, NON_THEOREMS, axiom
from imbes.utils.custom_exceptions import SequentError
from imbes.utils.proofs import Graph, NDRule, check_nd_proof
from imbes.utils.prover import is_theorem, prove_nd
from imbes.utils.syntax import (
    ALL_CONDITIONS,
    LabelledFormula,
    RelAssumption,
    Sequent,
    parse_formula,
    parse_sequent,
)

from .strategies import sequents

NO_FRAMES = frozenset()


def claim(phi):
    return Sequent(frozenset(), phi)


@pytest.mark.parametrize("condition", ALL_CONDITIONS, ids=lambda c: c.value)
def test_axiom_of_each_condition(condition):
    phi = axiom(condition)
    proof = is_theorem({condition}, phi, SearchBudget())
    assert proof is not None, FRAME_TABLE[condition.value][0]
    assert check_nd_proof({condition}, Graph.trivial("x"), proof, claim(phi))


@pytest.mark.parametrize("condition", NEGATIVE_CONDITIONS, ids=lambda c: c.value)
def test_axiom_not_found_without_condition(condition):
    assert is_theorem(NO_FRAMES, axiom(condition), NEGATIVE_BUDGET) is None


@pytest.mark.parametrize("text", IK_THEOREMS)
def test_ik_theorems(text):
    phi = LabelledFormula(parse_formula(text), "x")
    proof = is_theorem(NO_FRAMES, phi, SearchBudget())
    assert proof is not None
    assert check_nd_proof(NO_FRAMES, Graph.trivial("x"), proof, claim(phi))


@pytest.mark.parametrize("text", NON_THEOREMS)
def test_non_theorems_not_found(text):
    phi = LabelledFormula(parse_formula(text), "x")
    assert is_theorem(NO_FRAMES, phi, NEGATIVE_BUDGET) is None


def test_intuitionistic_tautologies():
    for text in ("p -> p", "p & q -> q & p", "(p -> q) -> (q -> r) -> p -> r", "bot -> p", "p -> (p -> bot) -> bot"):
        phi = LabelledFormula(parse_formula(text), "x")
        assert is_theorem(NO_FRAMES, phi, SearchBudget(depth=8, modal_uses=0, fresh=1)) is not None, text


def test_graph_edges_are_available_as_assumptions():
    seq = parse_sequent("[]p@x |- p@y")
    edge = RelAssumption("x", "y")
    graph = Graph.spanning([seq.goal, *seq.context], [edge])
    proof = prove_nd(NO_FRAMES, graph, seq, SearchBudget(depth=4))
    assert proof.rule == NDRule.BOX_E
    assert check_nd_proof(NO_FRAMES, graph, proof, seq)
    assert prove_nd(NO_FRAMES, Graph.spanning([seq.goal, *seq.context]), seq, SearchBudget(depth=4)) is None


def test_labels_must_be_vertices():
    seq = parse_sequent("p@x |- p@y")
    with pytest.raises(SequentError):
        prove_nd(NO_FRAMES, Graph.trivial("x"), seq, SearchBudget())


def test_seriality_uses_fresh_label():
    proof = is_theorem({ALL_CONDITIONS[0]}, axiom(ALL_CONDITIONS[0]), SearchBudget())
    assert proof.rule == NDRule.RD
    assert proof.eigen == "w0"


def test_zero_frame_budget_disables_frame_rules():
    phi = axiom(ALL_CONDITIONS[1])
    assert is_theorem({ALL_CONDITIONS[1]}, phi, SearchBudget(depth=8, modal_uses=0, fresh=2)) is None


@given(sequents(max_leaves=4), st.sets(st.sampled_from(ALL_CONDITIONS), max_size=2))
@settings(max_examples=40, deadline=None)
def test_found_proofs_check(seq, gamma):
    graph = Graph.spanning(list(seq.context) + [seq.goal])
    proof = prove_nd(gamma, graph, seq, SearchBudget(depth=4, modal_uses=1, fresh=1))
    if proof is not None:
        assert check_nd_proof(gamma, graph, proof, seq)
