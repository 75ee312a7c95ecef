"""Regression corpus: the acceptance criteria as report rows."""

import random
from typing import Callable, Iterable, Iterator

from .base import (
    EMPTY_BASE,
    Base,
    BasicRule,
    BasicSequent,
    LabelledAtom,
    SearchBudget,
    derives,
    extend,
    format_rule,
)
from .completeness import Provable, decide_validity, flatten_map, search_pool
from .constants import (
    CORPUS_FLATTEN_CASES,
    CORPUS_RANDOM_CASES,
    CORPUS_ROUND_TRIP,
    FRAME_TABLE,
    METAVAR_PREFIX,
)
from .custom_exceptions import BaseCustomException, ExceptionHandler
from .custom_types import ReportRow
from .logger import logger
from .proofs import Graph, check_nd_proof
from .prover import is_theorem, prove_nd
from .support import default_universe, falsify_validity, replay_witness, spotcheck_verdict
from .syntax import (
    ALL_CONDITIONS,
    And,
    Atom,
    Bot,
    Box,
    Condition,
    Dia,
    ExtendedSequent,
    FrameSpec,
    Imp,
    LabelledFormula,
    Or,
    RelAssumption,
    Sequent,
    Top,
    generalized_subformulae,
    parse_formula,
    print_item,
)

PASS, FAIL, SKIP = "pass", "fail", "skip"

NEGATIVE_BUDGET = SearchBudget(depth=8, modal_uses=0, fresh=2)
NEGATIVE_CONDITIONS = (Condition.T, Condition.B, Condition.FOUR, Condition.FIVE)

IK_THEOREMS = (
    "[](p -> q) -> ([]p -> []q)",
    "[](p & q) -> ([]p & []q)",
    "<>(p | q) -> (<>p | <>q)",
    "([]p & <>q) -> <>(p & q)",
)

NON_THEOREMS = ("[]p -> p", "p | (p -> bot)")


def axiom(condition: Condition, label: str = "x") -> LabelledFormula:
    return LabelledFormula(parse_formula(FRAME_TABLE[condition.value][2]), label)


def row(criterion: str, status: str, details: str = "") -> ReportRow:
    return {"id": criterion, "status": status, "details": details}


def _guarded(criterion: str, check: Callable[[], tuple]) -> ReportRow:
    try:
        ok, details = check()
    except BaseCustomException as error:
        ExceptionHandler.raise_exception_or_log(error)
        return row(criterion, FAIL, error.message)
    return row(criterion, PASS if ok else FAIL, details)


def random_formula(rng: random.Random, depth: int, atoms: tuple = ("p", "q")):
    if depth <= 0 or rng.random() < 0.3:
        choice = rng.randrange(len(atoms) + 2)
        if choice < len(atoms):
            return Atom(atoms[choice])
        return Top() if choice == len(atoms) else Bot()
    kind = rng.choice((And, Or, Imp, Box, Dia))
    if kind in (Box, Dia):
        return kind(random_formula(rng, depth - 1, atoms))
    return kind(random_formula(rng, depth - 1, atoms), random_formula(rng, depth - 1, atoms))


def random_sentence(rng: random.Random, atoms: tuple, labels: tuple):
    if rng.random() < 0.3:
        return RelAssumption(rng.choice(labels), rng.choice(labels))
    return LabelledAtom(rng.choice(atoms), rng.choice(labels))


def random_base(rng: random.Random, size: int, atoms=("p", "q", "r"), labels=("x", "y")) -> Base:
    rules = []
    for _ in range(size):
        head = LabelledAtom(rng.choice(atoms), rng.choice(labels))
        if rng.random() < 0.4:
            rules.append(BasicRule((), random_sentence(rng, atoms, labels)))
            continue
        antecedents = []
        for _ in range(rng.randrange(1, 3)):
            if rng.random() < 0.3:
                # modal cases only fire on bases with relational antecedents
                antecedents.append(BasicSequent(frozenset(), RelAssumption(rng.choice(labels), rng.choice(labels))))
                continue
            premises = frozenset(random_sentence(rng, atoms, labels) for _ in range(rng.randrange(0, 2)))
            antecedents.append(BasicSequent(premises, LabelledAtom(rng.choice(atoms), rng.choice(labels))))
        rules.append(BasicRule(tuple(antecedents), head))
    return extend(EMPTY_BASE, rules)


class Corpus:
    def __init__(self, frames: FrameSpec, budget: SearchBudget, pool_extra: int, seed: int):
        self.frames = frozenset(frames)
        self.budget = budget
        self.pool_extra = pool_extra
        self.seed = seed
        self.proved = []

    def run(self) -> list:
        rows = []
        for section in (
            self.axiom_rows,
            self.negative_rows,
            self.ik_rows,
            self.metatheory_rows,
            self.soundness_rows,
            self.round_trip_rows,
            self.falsifier_rows,
            self.flattening_rows,
        ):
            for result in section():
                logger.update_info("Criterion", result["id"])
                rows.append(result)
        return rows

    def universe_for(self, seq: Sequent):
        return default_universe(ExtendedSequent(seq.context, seq.goal), max_extra=self.pool_extra)

    def axiom_rows(self) -> Iterator[ReportRow]:
        for condition in ALL_CONDITIONS:
            criterion = f"1-axiom-{condition.value}"
            if condition not in self.frames:
                yield row(criterion, SKIP, "frame condition filtered out")
                continue
            phi = axiom(condition)
            gamma = frozenset({condition})

            def check(phi=phi, gamma=gamma):
                seq = Sequent(frozenset(), phi)
                proof = is_theorem(gamma, phi, self.budget)
                decision = decide_validity(gamma, seq, self.budget)
                if proof is None or not isinstance(decision, Provable):
                    return False, f"prove: {proof is not None}, decide: {isinstance(decision, Provable)}"
                graph = Graph.trivial(phi.label)
                both = check_nd_proof(gamma, graph, proof, seq) and check_nd_proof(gamma, graph, decision.proof, seq)
                self.proved.append((gamma, proof, seq))
                return both, f"{print_item(phi)} proved by both pipelines"

            yield _guarded(criterion, check)

    def negative_rows(self) -> Iterator[ReportRow]:
        for condition in NEGATIVE_CONDITIONS:
            phi = axiom(condition)

            def check(phi=phi):
                proof = is_theorem(frozenset(), phi, NEGATIVE_BUDGET)
                budget = f"depth {NEGATIVE_BUDGET.depth}, fresh {NEGATIVE_BUDGET.fresh}"
                return proof is None, f"{print_item(phi)} not proved within {budget}"

            yield _guarded(f"2-unprovable-{condition.value}", check)

    def ik_rows(self) -> Iterator[ReportRow]:
        for index, text in enumerate(IK_THEOREMS):
            phi = LabelledFormula(parse_formula(text), "x")

            def check(phi=phi):
                seq = Sequent(frozenset(), phi)
                proof = is_theorem(frozenset(), phi, self.budget)
                decision = decide_validity(frozenset(), seq, self.budget)
                if proof is not None:
                    self.proved.append((frozenset(), proof, seq))
                return proof is not None and isinstance(decision, Provable), print_item(phi)

            yield _guarded(f"3-ik-{index}", check)

    def metatheory_rows(self) -> Iterator[ReportRow]:
        rng = random.Random(self.seed)
        small = SearchBudget(6, 2, 1)
        failures = {"weakening": 0, "monotonicity": 0, "budget": 0, "basic-inference": 0}
        for _ in range(CORPUS_RANDOM_CASES):
            base = random_base(rng, rng.randrange(1, 6))
            more = random_base(rng, rng.randrange(1, 3))
            gamma = frozenset(rng.sample(ALL_CONDITIONS, rng.randrange(1, 3)))
            context = frozenset(random_sentence(rng, ("p", "q", "r"), ("x", "y")) for _ in range(rng.randrange(0, 3)))
            goal = LabelledAtom(rng.choice(("p", "q", "r")), rng.choice(("x", "y")))
            extra = random_sentence(rng, ("p", "q", "r"), ("x", "y"))
            axioms = [BasicRule((), s) for s in context]
            if derives(extend(base, axioms), gamma, frozenset(), goal, small) is not None:
                if derives(base, gamma, context, goal, SearchBudget(8, 3, 2)) is None:
                    failures["basic-inference"] += 1
            if derives(base, gamma, context, goal, small) is None:
                continue
            if derives(base, gamma, context | {extra}, goal, small) is None:
                failures["weakening"] += 1
            if derives(extend(base, more.ground), gamma, context, goal, small) is None:
                failures["monotonicity"] += 1
            if derives(base, gamma, context, goal, SearchBudget(8, 3, 2)) is None:
                failures["budget"] += 1
        for name, count in failures.items():
            yield row(f"4-{name}", PASS if count == 0 else FAIL, f"{count} failures in {CORPUS_RANDOM_CASES} cases")

    def soundness_rows(self) -> Iterator[ReportRow]:
        for index, (gamma, proof, seq) in enumerate(self.proved):

            def check(gamma=gamma, proof=proof, seq=seq):
                verdict = spotcheck_verdict(gamma, proof, seq, self.universe_for(seq), self.budget)
                if verdict.falsified:
                    witness = verdict.witness
                    rules = "; ".join(format_rule(rule) for rule in witness.extension) or "no rules"
                    return False, f"{print_item(seq.goal)}: refuted at {witness.query} by {rules}"
                return True, f"{print_item(seq.goal)}: {verdict.status.value}, no counterexample"

            yield _guarded(f"5-soundness-{index}", check)

    def round_trip_rows(self) -> Iterator[ReportRow]:
        rng = random.Random(self.seed + 1)
        search = SearchBudget(8, 1, 2)
        checked, failed, attempts = 0, [], 0
        while checked < CORPUS_ROUND_TRIP and attempts < 20 * CORPUS_ROUND_TRIP:
            attempts += 1
            seq = Sequent(frozenset(), LabelledFormula(random_formula(rng, 3), "x"))
            gamma = frozenset(c for c in self.frames if rng.random() < 0.3)
            try:
                proof = prove_nd(gamma, Graph.trivial("x"), seq, search)
                if proof is None:
                    continue
                checked += 1
                decision = decide_validity(gamma, seq, self.budget)
                if not isinstance(decision, Provable):
                    failed.append(str(seq))
            except BaseCustomException as error:
                failed.append(f"{seq}: {error.message}")
        details = f"{checked} provable sequents, {len(failed)} not recovered"
        if failed:
            details += f"; first: {failed[0]}"
        yield row("6-round-trip", PASS if not failed and checked else FAIL, details)

    def falsifier_rows(self) -> Iterator[ReportRow]:
        for index, text in enumerate(NON_THEOREMS):
            seq = Sequent(frozenset(), LabelledFormula(parse_formula(text), "x"))

            def check(seq=seq):
                universe = self.universe_for(seq)
                verdict = falsify_validity(frozenset(), seq, universe, self.budget)
                if not verdict.falsified:
                    return False, f"{seq}: {verdict.status.value}"
                return replay_witness(EMPTY_BASE, frozenset(), verdict.witness), f"{seq}: witness replays"

            yield _guarded(f"7-falsify-{index}", check)
        for index, text in enumerate(IK_THEOREMS):
            seq = Sequent(frozenset(), LabelledFormula(parse_formula(text), "x"))

            def check(seq=seq):
                verdict = falsify_validity(frozenset(), seq, self.universe_for(seq), self.budget)
                return not verdict.falsified, f"{seq}: {verdict.status.value}"

            yield _guarded(f"7-no-counterexample-{index}", check)

    def flattening_rows(self) -> Iterator[ReportRow]:
        rng = random.Random(self.seed + 2)
        failures = 0
        for _ in range(CORPUS_FLATTEN_CASES):
            seq = Sequent(frozenset(), LabelledFormula(random_formula(rng, 5), rng.choice(("x", "y"))))
            if not flattening_laws_hold(seq):
                failures += 1
        detail = f"{failures} failures in {CORPUS_FLATTEN_CASES} cases"
        yield row("8-flattening", PASS if failures == 0 else FAIL, detail)


def materialize(seq: Sequent, fresh: int = 2) -> list:
    """Closure members at the closure's labels plus a few fresh ones."""
    xi = generalized_subformulae(seq)
    pool = sorted(search_pool(set(xi.labels()), fresh))
    members = set(xi.ground)
    for entry in xi.schematic:
        anchors = pool if entry.anchor.startswith(METAVAR_PREFIX) else [entry.anchor]
        for anchor in anchors:
            for label in pool:
                members.add(entry.instantiate(label, anchor))
    return sorted(members, key=print_item)


def flattening_laws_hold(seq: Sequent) -> bool:
    fm = flatten_map(generalized_subformulae(seq))
    members = materialize(seq)
    images = [fm.flatten(member) for member in members]
    if len(set(images)) != len(members):
        return False
    return all(fm.unflatten(image) == member for image, member in zip(images, members))


def report_table(rows: Iterable[ReportRow]) -> list:
    return [[index + 1, r["id"], r["status"], r["details"]] for index, r in enumerate(rows)]
