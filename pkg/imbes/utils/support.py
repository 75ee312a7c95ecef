"""Bounded evaluation of the support relation over base extensions.

Quantifiers over "all extensions", "all atoms" and "all labels" range over a
finite :class:`ExtensionUniverse` built from the query. A Falsified verdict is
always a genuine refutation: it is only returned when every hypothesis and
case premise it rests on is supported exactly. Exact support comes from
derivability, from rules every supporting base is forced to admit, and from
a representative label no rule in play mentions. Anything else found
within the bounds is reported as inexact support or Unknown.
"""

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, Optional

from .base import (
    EMPTY_BASE,
    AnyRule,
    Base,
    BasicRule,
    BasicSentence,
    BasicSequent,
    DerivabilitySearch,
    LabelledAtom,
    SchematicRule,
    SearchBudget,
    extend,
    format_rule,
    is_metavar,
    labels_of_sentences,
    rule_key,
    sorted_sentences,
)
from .constants import DEFAULT_POOL_EXTRA, DEFAULT_SUPPORT_STEPS, METAVAR_PREFIX
from .logger import logger
from .proofs import Graph, NDProof, validate_nd_proof
from .syntax import (
    And,
    Atom,
    Bot,
    Box,
    Dia,
    ExtendedSequent,
    Formula,
    FrameSpec,
    Imp,
    Item,
    LabelledFormula,
    Or,
    RelAssumption,
    Sequent,
    Top,
    atoms_of,
    canonical,
    fresh_label,
    labels_of_all,
    print_sequent,
)


class Status(str, Enum):
    SUPPORTED = "supported"
    FALSIFIED = "falsified"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class Witness:
    # rules added to the evaluated base, canonically ordered
    extension: tuple
    query: ExtendedSequent
    reason: str
    # the top-level query the witness refutes
    root: ExtendedSequent | None = None

    def describe(self) -> str:
        rules = "\n".join(f"  {format_rule(rule)}" for rule in self.extension) or "  (none)"
        refuted = f"refuted: {self.root}\n" if self.root is not None else ""
        return f"{refuted}extension:\n{rules}\nfailing query: {self.query}\nreason: {self.reason}"


@dataclass(frozen=True)
class Verdict:
    status: Status
    # only meaningful for supported verdicts; falsified ones are always exact
    exact: bool = True
    witness: Witness | None = None

    @property
    def supported(self) -> bool:
        return self.status == Status.SUPPORTED

    @property
    def falsified(self) -> bool:
        return self.status == Status.FALSIFIED

    @property
    def settled(self) -> bool:
        """Supported for every base, not just within the bounds."""
        return self.supported and self.exact


SUPPORTED = Verdict(Status.SUPPORTED)
BOUNDED = Verdict(Status.SUPPORTED, exact=False)
UNKNOWN = Verdict(Status.UNKNOWN, exact=False)


@dataclass(frozen=True)
class ExtensionUniverse:
    candidate_rules: tuple
    max_extra: int = DEFAULT_POOL_EXTRA
    atoms: tuple = ()
    labels: tuple = ()
    max_steps: int = DEFAULT_SUPPORT_STEPS
    # a label no query or base mentions, standing for all such labels
    generic: str | None = None

    def extensions(self, added: frozenset) -> Iterator[frozenset]:
        """Supersets of ``added`` within the candidates, smallest first."""
        room = self.max_extra - len(added & set(self.candidate_rules))
        remaining = [rule for rule in self.candidate_rules if rule not in added]
        for size in range(0, max(room, 0) + 1):
            for chosen in itertools.combinations(remaining, size):
                yield added | frozenset(chosen)

    def atomic_sentences(self) -> Iterator[LabelledAtom]:
        for atom, label in itertools.product(self.atoms, self.labels):
            yield LabelledAtom(atom, label)


def _fresh_atom(avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    index = 0
    while f"a{index}" in avoid:
        index += 1
    return f"a{index}"


def _query_items(query: ExtendedSequent) -> list:
    return list(query.context) + [query.goal]


def _query_atoms(items: Iterable[Item]) -> set:
    names = set()
    for item in items:
        if isinstance(item, LabelledFormula):
            names |= atoms_of(item.formula)
    return names


def rule_labels(rule: AnyRule) -> set:
    """Labels a rule mentions, metavariables excluded."""
    if isinstance(rule, SchematicRule):
        others = {other for _, other in rule.constraints}
        return {label for label in rule_labels(rule.template) | others if not is_metavar(label)}
    sentences = [rule.conclusion] + [s for a in rule.antecedents for s in a.premises | {a.head}]
    return labels_of_sentences(sentences)


def _base_vocabulary(base: Base) -> tuple:
    atoms, labels = set(), set()
    for rule in base.ground:
        for sentence in [rule.conclusion] + [s for a in rule.antecedents for s in a.premises | {a.head}]:
            if isinstance(sentence, LabelledAtom):
                atoms.add(sentence.atom)
    for rule in base.ground | base.schematic:
        labels |= rule_labels(rule)
    return atoms, labels


def default_universe(
    query: ExtendedSequent, base: Base = EMPTY_BASE, max_extra: int = DEFAULT_POOL_EXTRA
) -> ExtensionUniverse:
    """Candidate rules over the query's vocabulary plus one fresh atom and label.

    Candidates are axioms for every basic sentence, one-antecedent rules
    concluding an atom at a query label, for each query label ``a`` and atom
    ``q`` the schematic rule ``(=> a R ?Y) => q@?Y``, and the higher-level
    rules ``(s => t) => r`` with ``s`` and ``r`` at query labels and ``t`` at
    the fresh label.
    """
    items = _query_items(query)
    base_atoms, base_labels = _base_vocabulary(base)
    query_labels = sorted(labels_of_all(items))
    atoms = sorted(_query_atoms(items) | base_atoms)
    atoms.append(_fresh_atom(atoms))
    known = sorted(set(query_labels) | base_labels)
    generic = fresh_label(known)
    labels = known + [generic]

    sentences = [LabelledAtom(a, x) for a, x in itertools.product(atoms, labels)]
    sentences += [RelAssumption(x, y) for x, y in itertools.product(labels, repeat=2)]
    candidates = [BasicRule((), s, "axiom") for s in sentences]
    for premise, (atom, label) in itertools.product(sentences, itertools.product(atoms, query_labels)):
        head = LabelledAtom(atom, label)
        if premise != head:
            candidates.append(BasicRule((BasicSequent(frozenset(), premise),), head, "step"))
    y = f"{METAVAR_PREFIX}Y"
    for anchor, atom in itertools.product(query_labels, atoms):
        template = BasicRule((BasicSequent(frozenset(), RelAssumption(anchor, y)),), LabelledAtom(atom, y), "box")
        candidates.append(SchematicRule(template, (y,)))
    near = [LabelledAtom(a, x) for a, x in itertools.product(atoms, query_labels)]
    far = [LabelledAtom(a, generic) for a in atoms]
    for premise, target, head in itertools.product(near, far, near):
        if premise != head:
            candidates.append(BasicRule((BasicSequent(frozenset({premise}), target),), head, "lift"))
    return ExtensionUniverse(
        tuple(sorted(set(candidates), key=rule_key)), max_extra, tuple(atoms), tuple(labels), generic=generic
    )


def to_basic(item: Item) -> Optional[BasicSentence]:
    if isinstance(item, RelAssumption):
        return item
    if isinstance(item.formula, Atom):
        return LabelledAtom(item.formula.name, item.label)
    return None


def basic_parts(formula: Formula, label: str) -> Optional[frozenset]:
    """The labelled atoms a conjunction of atoms amounts to."""
    match formula:
        case Top():
            return frozenset()
        case Atom(name):
            return frozenset({LabelledAtom(name, label)})
        case And(left, right):
            first, second = basic_parts(left, label), basic_parts(right, label)
            if first is None or second is None:
                return None
            return first | second
    return None


class SupportEvaluator:
    def __init__(self, base: Base, gamma: FrameSpec, universe: ExtensionUniverse, budget: SearchBudget):
        self.base = base
        self.gamma = frozenset(gamma)
        self.universe = universe
        self.budget = budget.with_pool(set(budget.pool) | set(universe.labels))
        self.base_labels = set().union(*(rule_labels(r) for r in base.ground | base.schematic))
        self.memo = {}
        self.searches = {}
        self.in_use = {}
        self.steps = 0
        self.root = None

    def evaluate(self, query: ExtendedSequent) -> Verdict:
        self.root = query
        return self._support(frozenset(), frozenset(query.context), query.goal)

    def _witness(self, added: frozenset, context, goal, reason: str) -> Witness:
        extension = tuple(sorted(added, key=rule_key))
        return Witness(extension, ExtendedSequent(frozenset(context), goal), reason, self.root)

    def _derives(self, added: frozenset, context, goal) -> bool:
        search = self.searches.get(added)
        if search is None:
            search = DerivabilitySearch(extend(self.base, added), self.gamma, self.budget)
            self.searches[added] = search
        return search.derive(context, goal) is not None

    def _generic(self, added: frozenset, *mentioned: str) -> bool:
        """Whether the representative label stands for every label the rules and query leave free."""
        generic = self.universe.generic
        if generic is None or generic in mentioned:
            return False
        labels = self.in_use.get(added)
        if labels is None:
            labels = self.base_labels.union(*(rule_labels(rule) for rule in added))
            self.in_use[added] = labels
        return generic not in labels

    def _support(self, added: frozenset, context: frozenset, goal: Item) -> Verdict:
        key = (added, context, goal)
        if key in self.memo:
            return self.memo[key]
        self.steps += 1
        if self.steps > self.universe.max_steps:
            return UNKNOWN
        if context:
            verdict = self._inference(added, context, goal)
        else:
            verdict = self._clause(added, goal)
        self.memo[key] = verdict
        return verdict

    def _atomic(self, added: frozenset, context: frozenset, goal: Item) -> Verdict:
        """Support between basic sentences coincides with derivability."""
        premises = frozenset(to_basic(item) for item in context)
        if self._derives(added, premises, to_basic(goal)):
            return SUPPORTED
        reason = f"{goal} is not derivable" + (" from the hypotheses" if context else "")
        return Verdict(Status.FALSIFIED, True, self._witness(added, context, goal, reason))

    def _clause(self, added: frozenset, goal: Item) -> Verdict:
        if to_basic(goal) is not None:
            return self._atomic(added, frozenset(), goal)
        phi, x = goal.formula, goal.label
        match phi:
            case Top():
                return SUPPORTED
            case And(left, right):
                return _conjoin(
                    self._support(added, frozenset(), LabelledFormula(left, x)),
                    lambda: self._support(added, frozenset(), LabelledFormula(right, x)),
                )
            case Imp(left, right):
                return self._support(added, frozenset({LabelledFormula(left, x)}), LabelledFormula(right, x))
            case Box(body):
                verdicts = (
                    self._support(added, frozenset({RelAssumption(x, y)}), LabelledFormula(body, y))
                    for y in self.universe.labels
                )
                return _all(verdicts, self._generic(added, x))
            case Bot():
                verdicts = (
                    self._support(added, frozenset(), LabelledFormula(Atom(s.atom), s.label))
                    for s in self.universe.atomic_sentences()
                )
                return _all(verdicts, False)
            case Or(left, right):
                return self._elimination(
                    added,
                    [[LabelledFormula(left, x)], [LabelledFormula(right, x)]],
                )
            case Dia(body):
                return self._elimination(
                    added,
                    [[RelAssumption(x, y), LabelledFormula(body, y)] for y in self.universe.labels],
                    anchor=x,
                )
        raise TypeError(f"unsupported formula {phi!r}")

    def _elimination(self, added: frozenset, cases: list, anchor: str | None = None) -> Verdict:
        """For all extensions and atoms: if every case supports the atom, so does the extension.

        Cases indexed by labels (``anchor`` set) hold for all labels only
        when the representative label is generic for the extension.
        """
        complete = True
        for extension in self.universe.extensions(added):
            for sentence in self.universe.atomic_sentences():
                target = LabelledFormula(Atom(sentence.atom), sentence.label)
                conclusion = self._support(extension, frozenset(), target)
                if conclusion.supported:
                    continue
                premises = []
                for case in cases:
                    premises.append(self._support(extension, frozenset(case), target))
                    if premises[-1].falsified:
                        break
                if any(p.falsified for p in premises):
                    continue
                settled = all(p.settled for p in premises)
                if anchor is not None:
                    settled = settled and self._generic(extension, anchor, sentence.label)
                if settled and conclusion.falsified:
                    return Verdict(Status.FALSIFIED, True, conclusion.witness)
                complete = False
        return BOUNDED if complete else UNKNOWN

    def _consequences(self, item: Item, metavars: tuple = ()) -> Iterator[tuple]:
        """Triples ``(metavars, S, s)`` such that every base supporting ``item`` derives ``s`` from ``S``."""
        basic = to_basic(item)
        if basic is not None:
            yield metavars, frozenset(), basic
            return
        phi, x = item.formula, item.label
        match phi:
            case Bot():
                for sentence in self.universe.atomic_sentences():
                    yield metavars, frozenset(), sentence
            case And(left, right):
                yield from self._consequences(LabelledFormula(left, x), metavars)
                yield from self._consequences(LabelledFormula(right, x), metavars)
            case Imp(left, right):
                parts = basic_parts(left, x)
                if parts is not None:
                    for names, premises, conclusion in self._consequences(LabelledFormula(right, x), metavars):
                        yield names, premises | parts, conclusion
            case Box(body):
                y = f"{METAVAR_PREFIX}H{len(metavars)}"
                for names, premises, conclusion in self._consequences(LabelledFormula(body, y), metavars + (y,)):
                    yield names, premises | {RelAssumption(x, y)}, conclusion

    def admitted_rules(self, item: Item) -> list:
        """Rules admissible in every base that supports ``item``."""
        rules = []
        for metavars, premises, conclusion in self._consequences(item):
            if premises and not isinstance(conclusion, LabelledAtom):
                continue
            antecedents = tuple(BasicSequent(frozenset(), s) for s in sorted_sentences(premises))
            template = BasicRule(antecedents, conclusion, "hypothesis")
            rules.append(SchematicRule(template, metavars) if metavars else template)
        return rules

    def _forced(self, added: frozenset, context: frozenset, goal: Item) -> bool:
        rules = [rule for item in canonical(context) for rule in self.admitted_rules(item)]
        search = DerivabilitySearch(extend(extend(self.base, added), rules), self.gamma, self.budget)
        return search.derive((), to_basic(goal)) is not None

    def _inference(self, added: frozenset, context: frozenset, goal: Item) -> Verdict:
        basics = [to_basic(item) for item in context]
        if to_basic(goal) is not None and all(b is not None for b in basics):
            return self._atomic(added, context, goal)
        if to_basic(goal) is not None and self._forced(added, context, goal):
            return SUPPORTED
        # the least extension supporting every basic hypothesis comes first
        axioms = frozenset(BasicRule((), b, "axiom") for b in basics if b is not None)
        complete = True
        seen = set()
        for extension in itertools.chain([added | axioms], self.universe.extensions(added)):
            if extension in seen:
                continue
            seen.add(extension)
            premises = [self._support(extension, frozenset(), item) for item in canonical(context)]
            if any(p.status == Status.UNKNOWN for p in premises):
                complete = False
                continue
            if not all(p.supported for p in premises):
                continue
            conclusion = self._support(extension, frozenset(), goal)
            if conclusion.supported:
                continue
            if conclusion.falsified and all(p.exact for p in premises):
                return Verdict(Status.FALSIFIED, True, conclusion.witness)
            complete = False
        return BOUNDED if complete else UNKNOWN


def _conjoin(first: Verdict, second) -> Verdict:
    if first.falsified:
        return first
    other = second()
    if other.falsified:
        return other
    if first.status == Status.UNKNOWN or other.status == Status.UNKNOWN:
        return UNKNOWN
    return Verdict(Status.SUPPORTED, first.exact and other.exact)


def _all(verdicts: Iterable[Verdict], exact: bool) -> Verdict:
    unknown = False
    for verdict in verdicts:
        if verdict.falsified:
            return verdict
        unknown = unknown or verdict.status == Status.UNKNOWN
        exact = exact and verdict.exact
    return UNKNOWN if unknown else Verdict(Status.SUPPORTED, exact)


def supports(
    base: Base,
    gamma: FrameSpec,
    query: ExtendedSequent,
    universe: ExtensionUniverse | None = None,
    budget: SearchBudget | None = None,
) -> Verdict:
    universe = universe or default_universe(query, base)
    evaluator = SupportEvaluator(base, gamma, universe, budget or SearchBudget())
    verdict = evaluator.evaluate(query)
    logger.log(f"Support of {query} evaluated in {evaluator.steps} steps: {verdict.status.value}")
    return verdict


def falsify_validity(
    gamma: FrameSpec,
    seq: Sequent,
    universe: ExtensionUniverse | None = None,
    budget: SearchBudget | None = None,
) -> Verdict:
    """Look for a counterexample to the validity of ``seq`` at the empty base."""
    return supports(EMPTY_BASE, gamma, ExtendedSequent(seq.context, seq.goal), universe, budget)


def replay_witness(
    base: Base,
    gamma: FrameSpec,
    witness: Witness,
    universe: ExtensionUniverse | None = None,
    budget: SearchBudget | None = None,
) -> bool:
    """Re-evaluate the refuted query in ``base`` extended by the witness.

    The refutation must reappear at the same failing query without any
    rule beyond the witness extension.
    """
    if witness.root is None:
        return False
    universe = universe or default_universe(witness.root, base)
    verdict = supports(extend(base, witness.extension), gamma, witness.root, universe, budget)
    if not verdict.falsified:
        return False
    replayed = verdict.witness
    return replayed.query == witness.query and set(replayed.extension) <= set(witness.extension)


def spotcheck_verdict(
    gamma: FrameSpec,
    proof: NDProof,
    claim: Sequent,
    universe: ExtensionUniverse | None = None,
    budget: SearchBudget | None = None,
) -> Verdict:
    """Validity verdict for a claim whose proof has been re-checked first."""
    validate_nd_proof(gamma, Graph.spanning(list(claim.context) + [claim.goal]), proof, claim)
    return falsify_validity(gamma, claim, universe, budget)


def soundness_spotcheck(
    gamma: FrameSpec,
    proof: NDProof,
    claim: Sequent,
    universe: ExtensionUniverse | None = None,
    budget: SearchBudget | None = None,
) -> bool:
    verdict = spotcheck_verdict(gamma, proof, claim, universe, budget)
    if verdict.falsified:
        logger.error(f"Proved sequent {print_sequent(claim.context, claim.goal)} has a countermodel")
        logger.error(verdict.witness.describe())
    return not verdict.falsified
