"""Bounded proof search for the labelled natural deduction systems."""

import itertools
from functools import lru_cache
from typing import Iterator, Optional

from .base import SearchBudget
from .custom_exceptions import SequentError
from .logger import logger
from .proofs import Graph, NDProof, NDRule, hypothesis, node
from .syntax import (
    And,
    Bot,
    Box,
    Condition,
    Dia,
    FrameSpec,
    Formula,
    Imp,
    LabelledFormula,
    Or,
    RelAssumption,
    Sequent,
    Top,
    canonical,
    fresh_label,
    labels_of,
    labels_of_all,
    print_sequent,
)


@lru_cache(maxsize=None)
def _reachable(formula: Formula) -> frozenset:
    """Formulas an elimination chain starting at ``formula`` can end on."""
    match formula:
        case And(left, right):
            return frozenset({formula}) | _reachable(left) | _reachable(right)
        case Imp(_, right):
            return frozenset({formula}) | _reachable(right)
        case Box(body):
            return frozenset({formula}) | _reachable(body)
    return frozenset({formula})


def _reaches(formula: Formula, kind: type) -> bool:
    return any(isinstance(f, kind) for f in _reachable(formula))


class NDSearch:
    def __init__(self, gamma: FrameSpec, graph: Graph, budget: SearchBudget):
        self.gamma = frozenset(gamma)
        self.graph = graph
        self.budget = budget
        self.successes = {}
        self.failures = {}
        self.open = set()
        self.cuts = 0

    def prove(self, goal: Sequent) -> Optional[NDProof]:
        context = frozenset(goal.context) | self.graph.edges
        for depth in range(1, self.budget.depth + 1):
            result = self._prove(context, goal.goal, depth, self.budget.modal_uses, self.budget.fresh)
            if result is not None:
                return result
        return None

    def _eigen(self, context, goal) -> str:
        return fresh_label(labels_of_all(context) | labels_of(goal) | self.graph.vertices)

    def _prove(self, context, goal, depth, frames, fresh) -> Optional[NDProof]:
        if depth <= 0:
            return None
        if goal in context:
            return hypothesis(goal)
        key = (context, goal)
        if key in self.successes:
            return self.successes[key]
        if any(depth <= d and frames <= f and fresh <= r for d, f, r in self.failures.get(key, ())):
            return None
        if key in self.open:
            self.cuts += 1
            return None

        self.open.add(key)
        cuts_before = self.cuts
        try:
            result = self._search(context, goal, depth, frames, fresh)
        finally:
            self.open.discard(key)

        if result is not None:
            self.successes[key] = result
        elif self.cuts == cuts_before:
            self.failures.setdefault(key, []).append((depth, frames, fresh))
        return result

    def _search(self, context, goal: LabelledFormula, depth, frames, fresh) -> Optional[NDProof]:
        phi, x = goal.formula, goal.label
        match phi:
            case Top():
                return node(NDRule.TOP_I, goal)
            case And(left, right):
                first = self._prove(context, LabelledFormula(left, x), depth - 1, frames, fresh)
                if first is None:
                    return None
                second = self._prove(context, LabelledFormula(right, x), depth - 1, frames, fresh)
                return None if second is None else node(NDRule.AND_I, goal, first, second)
            case Imp(left, right):
                assumption = LabelledFormula(left, x)
                body = self._prove(context | {assumption}, LabelledFormula(right, x), depth - 1, frames, fresh)
                if body is None:
                    return None
                return node(NDRule.IMP_I, goal, body, discharged=[{assumption}])
            case Box(inner) if fresh > 0:
                y = self._eigen(context, goal)
                edge = RelAssumption(x, y)
                body = self._prove(context | {edge}, LabelledFormula(inner, y), depth - 1, frames, fresh - 1)
                if body is None:
                    return None
                return node(NDRule.BOX_I, goal, body, discharged=[{edge}], eigen=y)

        for attempt in (
            self._by_elimination,
            self._by_absurdity,
            self._by_cases,
            self._by_witness,
            self._by_introduction,
            self._by_frame_rules,
        ):
            result = attempt(context, goal, depth, frames, fresh)
            if result is not None:
                return result
        return None

    def _chains(self, context, start: LabelledFormula, accept, steps_left: int) -> Iterator[tuple]:
        """Elimination paths from ``start`` whose endpoint satisfies ``accept``.

        A path is a tuple of steps ``(rule, endpoint, extra)`` where ``extra``
        is the minor premise item of ImpE or the relation of BoxE.
        """
        if accept(start):
            yield (), start
        if steps_left <= 0:
            return
        phi, z = start.formula, start.label
        successors = []
        match phi:
            case And(left, right):
                successors.append((NDRule.AND_E1, LabelledFormula(left, z), None))
                successors.append((NDRule.AND_E2, LabelledFormula(right, z), None))
            case Imp(left, right):
                successors.append((NDRule.IMP_E, LabelledFormula(right, z), LabelledFormula(left, z)))
            case Box(body):
                for relation in canonical(r for r in context if isinstance(r, RelAssumption)):
                    if relation.source == z:
                        successors.append((NDRule.BOX_E, LabelledFormula(body, relation.target), relation))
        for rule, endpoint, extra in successors:
            for path, end in self._chains(context, endpoint, accept, steps_left - 1):
                yield ((rule, endpoint, extra),) + path, end

    def _build_chain(self, context, start, path, depth, frames, fresh) -> Optional[NDProof]:
        current = hypothesis(start)
        length = len(path)
        for index, (rule, endpoint, extra) in enumerate(path, 1):
            # node sits at height length - index + 1 below the chain's root
            remaining = depth - (length - index + 1)
            match rule:
                case NDRule.IMP_E:
                    minor = self._prove(context, extra, remaining, frames, fresh)
                    if minor is None:
                        return None
                    current = node(rule, endpoint, current, minor)
                case NDRule.BOX_E:
                    current = node(rule, endpoint, current, hypothesis(extra))
                case _:
                    current = node(rule, endpoint, current)
        return current

    def _majors(self, context, accept, kind: type, depth, frames, fresh) -> Iterator[NDProof]:
        """Proofs of items matching ``accept`` obtained by eliminating hypotheses."""
        hypotheses = canonical(i for i in context if isinstance(i, LabelledFormula))
        for start in hypotheses:
            if not _reaches(start.formula, kind):
                continue
            for path, _ in self._chains(context, start, accept, depth - 1):
                proof = self._build_chain(context, start, path, depth, frames, fresh)
                if proof is not None:
                    yield proof

    def _by_elimination(self, context, goal, depth, frames, fresh) -> Optional[NDProof]:
        hypotheses = canonical(i for i in context if isinstance(i, LabelledFormula))
        for start in hypotheses:
            if goal.formula not in _reachable(start.formula):
                continue
            for path, _ in self._chains(context, start, goal.__eq__, depth - 1):
                if not path:
                    continue
                proof = self._build_chain(context, start, path, depth, frames, fresh)
                if proof is not None:
                    return proof
        return None

    def _by_absurdity(self, context, goal, depth, frames, fresh) -> Optional[NDProof]:
        def accept(item):
            return isinstance(item.formula, Bot) and item != goal

        for major in self._majors(context, accept, Bot, depth - 1, frames, fresh):
            return node(NDRule.BOT_E, goal, major)
        return None

    def _by_cases(self, context, goal, depth, frames, fresh) -> Optional[NDProof]:
        def accept(item):
            return isinstance(item.formula, Or)

        for major in self._majors(context, accept, Or, depth - 1, frames, fresh):
            disjunction = major.conclusion
            left = LabelledFormula(disjunction.formula.left, disjunction.label)
            right = LabelledFormula(disjunction.formula.right, disjunction.label)
            if left in context or right in context:
                continue
            first = self._prove(context | {left}, goal, depth - 1, frames, fresh)
            if first is None:
                continue
            second = self._prove(context | {right}, goal, depth - 1, frames, fresh)
            if second is None:
                continue
            return node(NDRule.OR_E, goal, major, first, second, discharged=[set(), {left}, {right}])
        return None

    def _by_witness(self, context, goal, depth, frames, fresh) -> Optional[NDProof]:
        if fresh <= 0:
            return None
        relations = [r for r in context if isinstance(r, RelAssumption)]
        def accept(item):
            return isinstance(item.formula, Dia)

        for major in self._majors(context, accept, Dia, depth - 1, frames, fresh):
            diamond = major.conclusion
            z, body = diamond.label, diamond.formula.body
            if any(r.source == z and LabelledFormula(body, r.target) in context for r in relations):
                continue
            y = self._eigen(context, goal)
            witness, edge = LabelledFormula(body, y), RelAssumption(z, y)
            minor = self._prove(context | {witness, edge}, goal, depth - 1, frames, fresh - 1)
            if minor is None:
                continue
            return node(NDRule.DIA_E, goal, major, minor, discharged=[set(), {witness, edge}], eigen=y)
        return None

    def _by_introduction(self, context, goal, depth, frames, fresh) -> Optional[NDProof]:
        phi, x = goal.formula, goal.label
        match phi:
            case Or(left, right):
                for rule, side in ((NDRule.OR_I1, left), (NDRule.OR_I2, right)):
                    proof = self._prove(context, LabelledFormula(side, x), depth - 1, frames, fresh)
                    if proof is not None:
                        return node(rule, goal, proof)
            case Dia(body):
                for relation in canonical(r for r in context if isinstance(r, RelAssumption)):
                    if relation.source != x:
                        continue
                    proof = self._prove(context, LabelledFormula(body, relation.target), depth - 1, frames, fresh)
                    if proof is not None:
                        return node(NDRule.DIA_I, goal, proof, hypothesis(relation))
        return None

    def _frame_attempts(self, context, goal, fresh) -> Iterator[tuple]:
        relations = canonical(r for r in context if isinstance(r, RelAssumption))
        labels = sorted(labels_of_all(context) | labels_of(goal))
        if Condition.T in self.gamma:
            for x in labels:
                yield NDRule.RT, (), (RelAssumption(x, x),), None
        if Condition.D in self.gamma and fresh > 0:
            y = self._eigen(context, goal)
            for x in labels:
                if not any(r.source == x for r in relations):
                    yield NDRule.RD, (), (RelAssumption(x, y),), y
        if Condition.B in self.gamma:
            for r in relations:
                yield NDRule.RB, (r,), (RelAssumption(r.target, r.source),), None
        pairs = list(itertools.product(relations, repeat=2))
        if Condition.FOUR in self.gamma:
            for r1, r2 in pairs:
                if r1.target == r2.source:
                    yield NDRule.R4, (r1, r2), (RelAssumption(r1.source, r2.target),), None
        if Condition.FIVE in self.gamma:
            for r1, r2 in pairs:
                if r1.source == r2.source:
                    yield NDRule.R5, (r1, r2), (RelAssumption(r1.target, r2.target),), None
        if Condition.TWO in self.gamma and fresh > 0:
            w = self._eigen(context, goal)
            for r1, r2 in pairs:
                if r1.source != r2.source or r1.target == r2.target:
                    continue
                joined = {r.target for r in relations if r.source == r1.target} & {
                    r.target for r in relations if r.source == r2.target
                }
                if not joined:
                    yield NDRule.R2, (r1, r2), (RelAssumption(r1.target, w), RelAssumption(r2.target, w)), w

    def _by_frame_rules(self, context, goal, depth, frames, fresh) -> Optional[NDProof]:
        if frames <= 0:
            return None
        for rule, sides, added, eigen in self._frame_attempts(context, goal, fresh):
            if all(relation in context for relation in added):
                continue
            spent = 1 if eigen is not None else 0
            main = self._prove(context | set(added), goal, depth - 1, frames - 1, fresh - spent)
            if main is None:
                continue
            premises = [hypothesis(side) for side in sides] + [main]
            discharged = [set() for _ in sides] + [set(added)]
            return node(rule, goal, *premises, discharged=discharged, eigen=eigen)
        return None


def prove_nd(gamma: FrameSpec, graph: Graph, goal: Sequent, budget: SearchBudget) -> Optional[NDProof]:
    """Search for a proof of ``goal`` relative to ``graph`` within ``budget``.

    ``None`` means nothing was found under the budget, not that the sequent
    is underivable.
    """
    claim_labels = labels_of_all(goal.context) | labels_of(goal.goal)
    if not claim_labels <= graph.vertices:
        raise SequentError(f"labels {sorted(claim_labels - graph.vertices)} are not vertices of the graph")
    search = NDSearch(gamma, graph, budget)
    proof = search.prove(goal)
    if proof is None:
        logger.log(f"No proof of {print_sequent(goal.context, goal.goal)} within depth {budget.depth}")
    return proof


def is_theorem(gamma: FrameSpec, phi: LabelledFormula, budget: SearchBudget) -> Optional[NDProof]:
    return prove_nd(gamma, Graph.trivial(phi.label), Sequent(frozenset(), phi), budget)

