"""Validity by simulation: flatten the sequent, derive it in the simulation
base and read a natural deduction proof back off the atomic derivation."""

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Union

from .base import (
    AtomicDerivation,
    Base,
    BasicRule,
    BasicSentence,
    BasicSequent,
    LabelledAtom,
    SchematicRule,
    SearchBudget,
    Step,
    derives,
    extend,
    format_rule,
    is_metavar,
)
from .constants import BOT_ATOM, FLAT_ATOM_PREFIX, FRESH_LABEL_PREFIX, METAVAR_PREFIX, TOP_ATOM
from .custom_exceptions import ExtractionError, ProofCheckError
from .logger import logger
from .proofs import FRAME_RULES, Graph, NDProof, NDRule, hypothesis, node, validate_nd_proof
from .syntax import (
    And,
    Atom,
    Bot,
    Box,
    Condition,
    Dia,
    FrameSpec,
    Formula,
    Imp,
    Item,
    LabelledFormula,
    Or,
    RelAssumption,
    Sequent,
    Top,
    XiClosure,
    generalized_subformulae,
    labels_of,
    labels_of_all,
    print_formula,
    print_item,
    print_sequent,
)

RELATION_ATOM = f"{FLAT_ATOM_PREFIX}_r"


@dataclass(frozen=True)
class FlatMap:
    # composite formula -> reserved atom name, and back
    registry: dict
    inverse: dict
    atoms: frozenset

    def flatten(self, item: Item) -> BasicSentence:
        if isinstance(item, RelAssumption):
            return LabelledAtom(RELATION_ATOM, item.source, item.target)
        return LabelledAtom(self.name(item.formula), item.label)

    def name(self, formula: Formula) -> str:
        match formula:
            case Atom(name):
                return name
            case Top():
                return TOP_ATOM
            case Bot():
                return BOT_ATOM
        if formula not in self.registry:
            raise ValueError(f"{print_formula(formula)} is not a member of the closure")
        return self.registry[formula]

    def unflatten(self, sentence: BasicSentence) -> Item:
        if isinstance(sentence, RelAssumption):
            return sentence
        if sentence.atom == RELATION_ATOM:
            return RelAssumption(sentence.label, sentence.param)
        if sentence.atom == TOP_ATOM:
            return LabelledFormula(Top(), sentence.label)
        if sentence.atom == BOT_ATOM:
            return LabelledFormula(Bot(), sentence.label)
        formula = self.inverse.get(sentence.atom, Atom(sentence.atom))
        return LabelledFormula(formula, sentence.label)

    def alphabet(self) -> tuple:
        """Atom names a generic conclusion may carry."""
        return tuple(sorted(self.atoms | {TOP_ATOM, BOT_ATOM} | set(self.inverse)))


def flatten_map(xi: XiClosure) -> FlatMap:
    registry, atoms = {}, set()
    composites = [f for f, _, _ in xi.formulas() if not isinstance(f, (Atom, Top, Bot))]
    for index, formula in enumerate(composites):
        registry[formula] = f"{FLAT_ATOM_PREFIX}{index}"
    for formula, _, _ in xi.formulas():
        if isinstance(formula, Atom):
            atoms.add(formula.name)
    return FlatMap(registry, {name: f for f, name in registry.items()}, frozenset(atoms))


@dataclass(frozen=True)
class SimulationBase:
    base: Base
    # rule -> the closure member it was emitted for
    provenance: dict = field(default_factory=dict)

    def describe(self, rule) -> str:
        return f"{format_rule(rule)}  # {rule.tag} for {self.provenance.get(rule, '?')}"


def _rule(antecedents: Iterable[tuple], conclusion: BasicSentence, tag: NDRule, constraints=(), eigen=()):
    antecedents = tuple(BasicSequent(frozenset(premises), head) for premises, head in antecedents)
    template = BasicRule(antecedents, conclusion, tag.value)
    sentences = [conclusion] + [s for a in antecedents for s in a.premises | {a.head}]
    metavars = set()
    for sentence in sentences:
        for label in (sentence.label, sentence.param):
            if is_metavar(label):
                metavars.add(label)
    if not metavars:
        return template
    return SchematicRule(template, tuple(sorted(metavars)), frozenset(constraints), frozenset(eigen))


class _Builder:
    def __init__(self, xi: XiClosure, fm: FlatMap, gamma: FrameSpec):
        self.xi = xi
        self.fm = fm
        self.gamma = frozenset(gamma)
        self.rules = {}

    def add(self, rule, origin: str):
        self.rules.setdefault(rule, origin)

    def at(self, formula: Formula, label: str) -> LabelledAtom:
        return self.fm.flatten(LabelledFormula(formula, label))

    def rel(self, source: str, target: str) -> LabelledAtom:
        return self.fm.flatten(RelAssumption(source, target))

    def connective(self, formula: Formula, x: str):
        """Rules for one member ``formula^x`` of the closure; ``x`` may be a metavariable."""
        origin = print_item(LabelledFormula(formula, x))
        here = self.at(formula, x)
        y, z = f"{METAVAR_PREFIX}Y", f"{METAVAR_PREFIX}Z"
        match formula:
            case Top():
                self.add(_rule((), here, NDRule.TOP_I), origin)
            case Bot():
                for q in self.fm.alphabet():
                    self.add(_rule([((), here)], LabelledAtom(q, z), NDRule.BOT_E), origin)
            case Imp(left, right):
                self.add(_rule([({self.at(left, x)}, self.at(right, x))], here, NDRule.IMP_I), origin)
                self.add(_rule([((), here), ((), self.at(left, x))], self.at(right, x), NDRule.IMP_E), origin)
            case And(left, right):
                self.add(_rule([((), self.at(left, x)), ((), self.at(right, x))], here, NDRule.AND_I), origin)
                self.add(_rule([((), here)], self.at(left, x), NDRule.AND_E1), origin)
                self.add(_rule([((), here)], self.at(right, x), NDRule.AND_E2), origin)
            case Or(left, right):
                self.add(_rule([((), self.at(left, x))], here, NDRule.OR_I1), origin)
                self.add(_rule([((), self.at(right, x))], here, NDRule.OR_I2), origin)
                for q in self.fm.alphabet():
                    target = LabelledAtom(q, z)
                    cases = [((), here), ({self.at(left, x)}, target), ({self.at(right, x)}, target)]
                    self.add(_rule(cases, target, NDRule.OR_E), origin)
            case Box(body):
                self.add(
                    _rule([({self.rel(x, y)}, self.at(body, y))], here, NDRule.BOX_I, {(y, x)}, {y}),
                    origin,
                )
                self.add(_rule([((), here), ((), self.rel(x, z))], self.at(body, z), NDRule.BOX_E), origin)
            case Dia(body):
                self.add(_rule([((), self.at(body, z)), ((), self.rel(x, z))], here, NDRule.DIA_I), origin)
                for q in self.fm.alphabet():
                    target = LabelledAtom(q, z)
                    cases = [((), here), ({self.at(body, y), self.rel(x, y)}, target)]
                    self.add(_rule(cases, target, NDRule.DIA_E, {(y, x), (y, z)}, {y}), origin)

    def frame_labels(self, count: int) -> Iterable[tuple]:
        if self.xi.covers_all_labels:
            yield tuple(f"{METAVAR_PREFIX}{name}" for name in "AXWZ"[:count])
            return
        yield from itertools.product(sorted(self.xi.labels()), repeat=count)

    def frame_rules(self):
        y = f"{METAVAR_PREFIX}Y"
        for q in self.fm.alphabet():
            if Condition.D in self.gamma:
                for a, x in self.frame_labels(2):
                    goal = LabelledAtom(q, a)
                    rule = _rule([({self.rel(x, y)}, goal)], goal, NDRule.RD, {(y, x), (y, a)}, {y})
                    self.add(rule, f"seriality at {x}")
            if Condition.T in self.gamma:
                for a, x in self.frame_labels(2):
                    goal = LabelledAtom(q, a)
                    self.add(_rule([({self.rel(x, x)}, goal)], goal, NDRule.RT), f"reflexivity at {x}")
            if Condition.B in self.gamma:
                for a, x, z in self.frame_labels(3):
                    goal = LabelledAtom(q, a)
                    cases = [((), self.rel(x, z)), ({self.rel(z, x)}, goal)]
                    self.add(_rule(cases, goal, NDRule.RB), f"symmetry of {x}, {z}")
            if Condition.FOUR in self.gamma:
                for a, x, w, z in self.frame_labels(4):
                    goal = LabelledAtom(q, a)
                    cases = [((), self.rel(x, w)), ((), self.rel(w, z)), ({self.rel(x, z)}, goal)]
                    self.add(_rule(cases, goal, NDRule.R4), f"transitivity through {w}")
            if Condition.FIVE in self.gamma:
                for a, x, w, z in self.frame_labels(4):
                    goal = LabelledAtom(q, a)
                    cases = [((), self.rel(x, w)), ((), self.rel(x, z)), ({self.rel(w, z)}, goal)]
                    self.add(_rule(cases, goal, NDRule.R5), f"euclidean at {x}")
            if Condition.TWO in self.gamma:
                for a, x, w, z in self.frame_labels(4):
                    goal = LabelledAtom(q, a)
                    cases = [((), self.rel(x, w)), ((), self.rel(x, z)), ({self.rel(w, y), self.rel(z, y)}, goal)]
                    constraints = {(y, x), (y, w), (y, z), (y, a)}
                    self.add(_rule(cases, goal, NDRule.R2, constraints, {y}), f"directedness at {x}")

    def build(self) -> SimulationBase:
        for formula, labels, family in self.xi.formulas():
            for x in sorted(labels):
                self.connective(formula, x)
            if family:
                self.connective(formula, f"{METAVAR_PREFIX}X")
        self.frame_rules()
        base = extend(Base(), self.rules)
        return SimulationBase(base, dict(self.rules))


def build_simulation_base(xi: XiClosure, fm: FlatMap, gamma: FrameSpec) -> SimulationBase:
    return _Builder(xi, fm, gamma).build()


@dataclass(frozen=True)
class Provable:
    proof: NDProof
    derivation: AtomicDerivation
    simulation: SimulationBase


@dataclass(frozen=True)
class NotProvedWithinBudget:
    simulation: SimulationBase


Decision = Union[Provable, NotProvedWithinBudget]


def search_pool(known: set, fresh: int) -> frozenset:
    """The closure's labels plus ``fresh`` reserved ones."""
    labels, index = set(known), 0
    while len(labels) < len(known) + fresh:
        labels.add(f"{FRESH_LABEL_PREFIX}{index}")
        index += 1
    return frozenset(labels)


def decide_validity(gamma: FrameSpec, seq: Sequent, budget: SearchBudget) -> Decision:
    xi = generalized_subformulae(seq)
    fm = flatten_map(xi)
    simulation = build_simulation_base(xi, fm, gamma)
    logger.log(f"Simulation base for {print_sequent(seq.context, seq.goal)} has {len(simulation.base)} rules")
    pool = search_pool(set(xi.labels()) | labels_of_all(seq.context) | labels_of(seq.goal), budget.fresh)
    context = frozenset(fm.flatten(item) for item in seq.context)
    derivation = derives(simulation.base, gamma, context, fm.flatten(seq.goal), budget.with_pool(pool))
    if derivation is None:
        return NotProvedWithinBudget(simulation)
    proof = extract_nd_proof(derivation, fm, gamma)
    graph = Graph.spanning(list(seq.context) + [seq.goal])
    try:
        validate_nd_proof(gamma, graph, proof, seq)
    except ProofCheckError as error:
        raise ExtractionError(f"extracted proof does not check: {error.message}")
    return Provable(proof, derivation, simulation)


def _relation_param(premises: frozenset) -> LabelledAtom:
    relations = sorted(
        (s for s in premises if isinstance(s, LabelledAtom) and s.atom == RELATION_ATOM),
        key=lambda s: (s.label, s.param),
    )
    if not relations:
        raise ExtractionError("rule discharges no relational assumption")
    return relations[0]


class _Extractor:
    def __init__(self, fm: FlatMap, gamma: FrameSpec):
        self.fm = fm
        self.gamma = frozenset(gamma)

    def relation(self, d: AtomicDerivation) -> NDProof:
        item = self.fm.unflatten(d.conclusion)
        if not isinstance(item, RelAssumption):
            raise ExtractionError(f"expected a relational premise, found {print_item(item)}")
        if d.step != Step.REF:
            raise ExtractionError(f"relational premise {print_item(item)} is not an assumption")
        return hypothesis(item)

    def extract(self, d: AtomicDerivation) -> NDProof:
        conclusion = self.fm.unflatten(d.conclusion)
        if d.step == Step.REF:
            return hypothesis(conclusion)
        if d.step == Step.APP:
            return self.application(d, conclusion)
        # simulation bases have no relational antecedents; modal cases never fire on them
        raise ExtractionError(f"modal case {d.step.value} does not occur in a simulation base derivation")

    def application(self, d: AtomicDerivation, conclusion: Item) -> NDProof:
        try:
            rule = NDRule(d.rule.tag)
        except ValueError:
            raise ExtractionError(f"rule {format_rule(d.rule)} is not part of the simulation base")
        if rule in FRAME_RULES and FRAME_RULES[rule] not in self.gamma:
            raise ExtractionError(f"{rule.value} used without frame condition {FRAME_RULES[rule].value}")
        antecedents = d.rule.antecedents
        children = d.children
        discharged = [frozenset(self.fm.unflatten(s) for s in a.premises) for a in antecedents]
        match rule:
            case NDRule.BOX_E | NDRule.DIA_I:
                premises = [self.extract(children[0]), self.relation(children[1])]
                return node(rule, conclusion, *premises)
            case NDRule.BOX_I:
                eigen = _relation_param(antecedents[0].premises).param
                return node(rule, conclusion, self.extract(children[0]), discharged=discharged, eigen=eigen)
            case NDRule.DIA_E:
                premises = [self.extract(children[0]), self.extract(children[1])]
                eigen = _relation_param(antecedents[1].premises).param
                return node(rule, conclusion, *premises, discharged=discharged, eigen=eigen)
            case NDRule.RD | NDRule.R2:
                premises = [self.relation(c) for c in children[:-1]] + [self.extract(children[-1])]
                eigen = _relation_param(antecedents[-1].premises).param
                return node(rule, conclusion, *premises, discharged=discharged, eigen=eigen)
            case NDRule.RT | NDRule.RB | NDRule.R4 | NDRule.R5:
                premises = [self.relation(c) for c in children[:-1]] + [self.extract(children[-1])]
                return node(rule, conclusion, *premises, discharged=discharged)
        premises = [self.extract(child) for child in children]
        return node(rule, conclusion, *premises, discharged=discharged)


def extract_nd_proof(d: AtomicDerivation, fm: FlatMap, gamma: FrameSpec) -> NDProof:
    """Translate a derivation in the simulation base into a natural deduction proof."""
    return _Extractor(fm, gamma).extract(d)
