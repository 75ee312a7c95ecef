import pytest
from hypothesis import given, settings

from imbes.utils.base import (
    AtomicDerivation,
    BasicRule,
    BasicSequent,
    LabelledAtom,
    SchematicRule,
    SearchBudget,
    Step,
    check_atomic_derivation,
)
from imbes.utils.completeness import (
    RELATION_ATOM,
    NotProvedWithinBudget,
    Provable,
    build_simulation_base,
    decide_validity,
    extract_nd_proof,
    flatten_map,
    search_pool,
)
from imbes.utils.corpus import IK_THEOREMS, NEGATIVE_BUDGET, axiom, flattening_laws_hold
from imbes.utils.custom_exceptions import ExtractionError
from imbes.utils.proofs import Graph, NDRule, check_nd_proof
from imbes.utils.syntax import (
    ALL_CONDITIONS,
    Condition,
    LabelledFormula,
    RelAssumption,
    Sequent,
    generalized_subformulae,
    parse_formula,
    parse_item,
    parse_sequent,
)

from .strategies import sequents

NO_FRAMES = frozenset()


def closure_map(text):
    return flatten_map(generalized_subformulae(parse_sequent(text)))


class TestFlattening:
    def test_composites_get_reserved_names(self):
        fm = closure_map("|- ([]p -> p)@x")
        assert fm.flatten(parse_item("[]p@x")) == LabelledAtom("f0", "x")
        assert fm.flatten(parse_item("([]p -> p)@x")) == LabelledAtom("f1", "x")
        assert fm.flatten(parse_item("p@y")) == LabelledAtom("p", "y")
        assert fm.flatten(parse_item("top@x")) == LabelledAtom("top", "x")

    def test_relations_become_parametrised_atoms(self):
        fm = closure_map("|- []p@x")
        flat = fm.flatten(RelAssumption("x", "y"))
        assert flat == LabelledAtom(RELATION_ATOM, "x", "y")
        assert fm.unflatten(flat) == RelAssumption("x", "y")

    def test_unflatten_inverts_flatten(self):
        fm = closure_map("|- (<>p & q -> bot)@x")
        for text in ("<>p@x", "(<>p & q)@x", "(<>p & q -> bot)@x", "bot@x", "q@x", "p@w0"):
            item = parse_item(text, allow_reserved=True)
            assert fm.unflatten(fm.flatten(item)) == item

    def test_unregistered_formula(self):
        fm = closure_map("|- p@x")
        with pytest.raises(ValueError):
            fm.flatten(parse_item("(p & q)@x"))

    def test_alphabet(self):
        fm = closure_map("|- ([]p -> p)@x")
        assert fm.alphabet() == ("bot", "f0", "f1", "p", "top")

    @given(sequents(max_leaves=5))
    @settings(max_examples=100, deadline=None)
    def test_flattening_laws(self, seq):
        assert flattening_laws_hold(seq)


class TestSimulationBase:
    def test_propositional_rules(self):
        seq = parse_sequent("|- (p -> p)@x")
        xi = generalized_subformulae(seq)
        simulation = build_simulation_base(xi, flatten_map(xi), NO_FRAMES)
        assert {rule.tag for rule in simulation.base.ground} == {"ImpI", "ImpE"}
        assert not simulation.base.schematic
        for rule in simulation.base.ground:
            assert simulation.describe(rule).endswith("for (p -> p)@x")

    def test_modal_members_give_schematic_rules(self):
        seq = parse_sequent("|- ([]p -> p)@x")
        xi = generalized_subformulae(seq)
        simulation = build_simulation_base(xi, flatten_map(xi), {Condition.T})
        tags = {rule.tag for rule in simulation.base.schematic}
        assert {"BoxI", "RT"} <= tags
        box_intro = next(r for r in simulation.base.schematic if r.tag == "BoxI")
        assert isinstance(box_intro, SchematicRule) and box_intro.eigen

    def test_frame_rules_follow_conditions(self):
        seq = parse_sequent("|- []p@x")
        xi = generalized_subformulae(seq)
        simulation = build_simulation_base(xi, flatten_map(xi), NO_FRAMES)
        tags = {rule.tag for rule in simulation.base.schematic}
        assert not tags & {rule.value for rule in (NDRule.RD, NDRule.RT, NDRule.R4)}


def test_search_pool():
    assert search_pool({"x"}, 2) == {"x", "w0", "w1"}
    assert search_pool({"x", "w0"}, 1) == {"x", "w0", "w1"}


class TestDecide:
    @pytest.mark.parametrize("condition", ALL_CONDITIONS, ids=lambda c: c.value)
    def test_axioms(self, condition):
        phi = axiom(condition)
        seq = Sequent(frozenset(), phi)
        decision = decide_validity({condition}, seq, SearchBudget())
        assert isinstance(decision, Provable)
        assert check_nd_proof({condition}, Graph.trivial("x"), decision.proof, seq)
        assert check_atomic_derivation(decision.simulation.base, {condition}, decision.derivation)

    @pytest.mark.parametrize("text", IK_THEOREMS)
    def test_ik_theorems(self, text):
        seq = Sequent(frozenset(), LabelledFormula(parse_formula(text), "x"))
        decision = decide_validity(NO_FRAMES, seq, SearchBudget())
        assert isinstance(decision, Provable)

    def test_seriality_proof_shape(self):
        decision = decide_validity({Condition.D}, parse_sequent("|- <>top@x"), SearchBudget())
        assert decision.proof.rule == NDRule.RD
        assert decision.proof.eigen == "w0"
        assert decision.proof.premises[0].rule == NDRule.DIA_I

    def test_hypothesis(self):
        decision = decide_validity(NO_FRAMES, parse_sequent("p@x |- p@x"), SearchBudget())
        assert decision.proof.rule == NDRule.HYP

    def test_propositional_sequents(self):
        for text in ("p@x, (p -> q)@x |- q@x", "(p & q)@x |- (q & p)@x", "(p | q)@x |- (q | p)@x"):
            seq = parse_sequent(text)
            decision = decide_validity(NO_FRAMES, seq, SearchBudget(depth=8))
            assert isinstance(decision, Provable), text
            graph = Graph.spanning(list(seq.context) + [seq.goal])
            assert check_nd_proof(NO_FRAMES, graph, decision.proof, seq)

    def test_not_proved_within_budget(self):
        seq = Sequent(frozenset(), axiom(Condition.T))
        decision = decide_validity(NO_FRAMES, seq, NEGATIVE_BUDGET)
        assert isinstance(decision, NotProvedWithinBudget)
        assert len(decision.simulation.base) > 0


class TestExtraction:
    def test_foreign_rule_is_rejected(self):
        fm = closure_map("|- p@x")
        goal = LabelledAtom("p", "x")
        d = AtomicDerivation(Step.APP, frozenset(), goal, (), BasicRule((), goal, "axiom"))
        with pytest.raises(ExtractionError):
            extract_nd_proof(d, fm, NO_FRAMES)

    def test_frame_rule_needs_condition(self):
        fm = closure_map("|- []p@x")
        goal = LabelledAtom("p", "x")
        loop = LabelledAtom(RELATION_ATOM, "x", "x")
        rule = BasicRule((BasicSequent(frozenset({loop}), goal),), goal, NDRule.RT.value)
        child = AtomicDerivation(Step.REF, frozenset({loop, goal}), goal)
        d = AtomicDerivation(Step.APP, frozenset({goal}), goal, (child,), rule)
        with pytest.raises(ExtractionError):
            extract_nd_proof(d, fm, NO_FRAMES)
        assert extract_nd_proof(d, fm, {Condition.T}).rule == NDRule.RT

    @pytest.mark.parametrize("step", [Step.D, Step.T, Step.B, Step.FOUR, Step.FIVE, Step.TWO])
    def test_modal_case_is_rejected(self, step):
        fm = closure_map("|- p@x")
        goal = LabelledAtom("p", "x")
        edge = RelAssumption("x", "x")
        child = AtomicDerivation(Step.REF, frozenset({goal, edge}), goal)
        d = AtomicDerivation(step, frozenset({goal}), goal, (child,), eigen="y", added=(edge,))
        with pytest.raises(ExtractionError):
            extract_nd_proof(d, fm, ALL_CONDITIONS)

    def test_decided_derivations_use_only_rule_steps(self):
        seq = Sequent(frozenset(), axiom(Condition.T))
        decision = decide_validity({Condition.T}, seq, SearchBudget())
        assert isinstance(decision, Provable)

        def steps(d):
            yield d.step
            for child in d.children:
                yield from steps(child)

        assert set(steps(decision.derivation)) <= {Step.REF, Step.APP}
