"""Proof trees of the labelled natural deduction systems and their checker."""

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable

from .custom_exceptions import MalformedProofError, ParseError, ProofCheckError
from .logger import logger
from .syntax import (
    And,
    Bot,
    Box,
    Condition,
    Dia,
    FrameSpec,
    Imp,
    Item,
    LabelledFormula,
    Or,
    RelAssumption,
    Sequent,
    Top,
    canonical,
    labels_of,
    labels_of_all,
    parse_item,
    print_item,
)


class NDRule(str, Enum):
    HYP = "Hyp"
    TOP_I = "TopI"
    BOT_E = "BotE"
    IMP_I = "ImpI"
    IMP_E = "ImpE"
    AND_I = "AndI"
    AND_E1 = "AndE1"
    AND_E2 = "AndE2"
    OR_I1 = "OrI1"
    OR_I2 = "OrI2"
    OR_E = "OrE"
    BOX_I = "BoxI"
    BOX_E = "BoxE"
    DIA_I = "DiaI"
    DIA_E = "DiaE"
    RD = "RD"
    RT = "RT"
    RB = "RB"
    R4 = "R4"
    R5 = "R5"
    R2 = "R2"


ARITY = {
    NDRule.HYP: 0,
    NDRule.TOP_I: 0,
    NDRule.BOT_E: 1,
    NDRule.IMP_I: 1,
    NDRule.IMP_E: 2,
    NDRule.AND_I: 2,
    NDRule.AND_E1: 1,
    NDRule.AND_E2: 1,
    NDRule.OR_I1: 1,
    NDRule.OR_I2: 1,
    NDRule.OR_E: 3,
    NDRule.BOX_I: 1,
    NDRule.BOX_E: 2,
    NDRule.DIA_I: 2,
    NDRule.DIA_E: 2,
    NDRule.RD: 1,
    NDRule.RT: 1,
    NDRule.RB: 2,
    NDRule.R4: 3,
    NDRule.R5: 3,
    NDRule.R2: 3,
}

FRAME_RULES = {
    NDRule.RD: Condition.D,
    NDRule.RT: Condition.T,
    NDRule.RB: Condition.B,
    NDRule.R4: Condition.FOUR,
    NDRule.R5: Condition.FIVE,
    NDRule.R2: Condition.TWO,
}

EIGEN_RULES = {NDRule.BOX_I, NDRule.DIA_E, NDRule.RD, NDRule.R2}


@dataclass(frozen=True)
class Graph:
    vertices: frozenset
    edges: frozenset = frozenset()

    def __post_init__(self):
        if not self.vertices:
            raise ValueError("a graph has at least one vertex")
        if not labels_of_all(self.edges) <= self.vertices:
            raise ValueError("edge endpoints must be vertices")

    @staticmethod
    def trivial(label: str) -> "Graph":
        return Graph(frozenset({label}))

    @staticmethod
    def spanning(items: Iterable[Item], edges: Iterable[RelAssumption] = ()) -> "Graph":
        edges = frozenset(edges)
        return Graph(frozenset(labels_of_all(items) | labels_of_all(edges)), edges)


@dataclass(frozen=True)
class NDProof:
    rule: NDRule
    conclusion: Item
    premises: tuple = ()
    discharged: tuple = ()
    eigen: str | None = None

    def size(self) -> int:
        return 1 + sum(premise.size() for premise in self.premises)

    def height(self) -> int:
        return 1 + max((premise.height() for premise in self.premises), default=0)


def hypothesis(item: Item) -> NDProof:
    return NDProof(NDRule.HYP, item)


def node(rule: NDRule, conclusion: Item, *premises: NDProof, discharged=None, eigen=None) -> NDProof:
    if discharged is None:
        discharged = tuple(frozenset() for _ in premises)
    return NDProof(rule, conclusion, tuple(premises), tuple(frozenset(d) for d in discharged), eigen)


def open_assumptions(proof: NDProof) -> frozenset:
    if proof.rule == NDRule.HYP:
        return frozenset({proof.conclusion})
    result = set()
    for premise, discharged in zip(proof.premises, proof.discharged):
        result |= open_assumptions(premise) - discharged
    return frozenset(result)


def _check_shape(proof: NDProof, path: tuple):
    if proof.rule not in ARITY:
        raise MalformedProofError(f"unknown rule {proof.rule!r}")
    if len(proof.premises) != ARITY[proof.rule]:
        raise MalformedProofError(
            f"{proof.rule.value} at {'/'.join(map(str, path)) or 'root'} expects "
            f"{ARITY[proof.rule]} premises, got {len(proof.premises)}"
        )
    if len(proof.discharged) != len(proof.premises):
        raise MalformedProofError(
            f"{proof.rule.value} at {'/'.join(map(str, path)) or 'root'} lists "
            f"{len(proof.discharged)} discharge sets for {len(proof.premises)} premises"
        )


class _Checker:
    def __init__(self, gamma: FrameSpec):
        self.gamma = frozenset(gamma)

    def fail(self, reason: str, path: tuple):
        raise ProofCheckError(reason, path)

    def formula_at(self, item, path, what="a labelled formula") -> LabelledFormula:
        if not isinstance(item, LabelledFormula):
            self.fail(f"expected {what}, found {print_item(item)}", path)
        return item

    def relation_at(self, proof: NDProof, path) -> RelAssumption:
        if not isinstance(proof.conclusion, RelAssumption) or proof.rule != NDRule.HYP:
            self.fail(f"relational premise {print_item(proof.conclusion)} must be an assumption", path)
        return proof.conclusion

    def discharges(self, proof: NDProof, allowed: list, path):
        for index, discharged in enumerate(proof.discharged):
            permitted = allowed[index] if index < len(allowed) else set()
            extra = set(discharged) - set(permitted)
            if extra:
                items = ", ".join(print_item(i) for i in canonical(extra))
                self.fail(f"{proof.rule.value} cannot discharge {items} in premise {index}", path)

    def fresh(self, proof: NDProof, label: str, forbidden: set, reason: str, path):
        if proof.eigen != label:
            self.fail(f"{proof.rule.value} must record eigenlabel {label}", path)
        still_open = set()
        for premise, discharged in zip(proof.premises, proof.discharged):
            still_open |= open_assumptions(premise) - discharged
        if label in forbidden or label in labels_of_all(still_open):
            self.fail(f"eigenlabel {label} is not fresh: {reason}", path)

    def check(self, proof: NDProof, path: tuple = ()):
        _check_shape(proof, path)
        rule = proof.rule
        if rule in FRAME_RULES and FRAME_RULES[rule] not in self.gamma:
            self.fail(f"{rule.value} needs frame condition {FRAME_RULES[rule].value}", path)
        if rule not in EIGEN_RULES and proof.eigen is not None:
            self.fail(f"{rule.value} takes no eigenlabel", path)
        for index, premise in enumerate(proof.premises):
            self.check(premise, path + (index,))
        if rule == NDRule.HYP:
            return
        self.node(proof, path)

    def node(self, proof: NDProof, path: tuple):
        rule = proof.rule
        concl = self.formula_at(proof.conclusion, path, "a labelled formula conclusion")
        prem = [p.conclusion for p in proof.premises]
        phi, x = concl.formula, concl.label
        allowed = []
        match rule:
            case NDRule.TOP_I:
                ok = isinstance(phi, Top)
            case NDRule.BOT_E:
                ok = isinstance(prem[0], LabelledFormula) and isinstance(prem[0].formula, Bot)
            case NDRule.IMP_I:
                ok = isinstance(phi, Imp) and prem[0] == LabelledFormula(phi.right, x)
                if ok:
                    allowed = [{LabelledFormula(phi.left, x)}]
            case NDRule.IMP_E:
                ok = prem[0] == LabelledFormula(Imp(_formula(prem[1]), phi), x) and _label(prem[1]) == x
            case NDRule.AND_I:
                ok = isinstance(phi, And) and prem == [
                    LabelledFormula(phi.left, x),
                    LabelledFormula(phi.right, x),
                ]
            case NDRule.AND_E1:
                ok = isinstance(_formula(prem[0]), And) and prem[0] == LabelledFormula(
                    And(phi, prem[0].formula.right), x
                )
            case NDRule.AND_E2:
                ok = isinstance(_formula(prem[0]), And) and prem[0] == LabelledFormula(
                    And(prem[0].formula.left, phi), x
                )
            case NDRule.OR_I1:
                ok = isinstance(phi, Or) and prem[0] == LabelledFormula(phi.left, x)
            case NDRule.OR_I2:
                ok = isinstance(phi, Or) and prem[0] == LabelledFormula(phi.right, x)
            case NDRule.OR_E:
                major = prem[0]
                ok = isinstance(_formula(major), Or) and prem[1] == concl and prem[2] == concl
                if ok:
                    allowed = [
                        set(),
                        {LabelledFormula(major.formula.left, major.label)},
                        {LabelledFormula(major.formula.right, major.label)},
                    ]
            case NDRule.BOX_I:
                ok = isinstance(phi, Box) and isinstance(prem[0], LabelledFormula)
                ok = ok and prem[0].formula == phi.body
                if ok:
                    y = prem[0].label
                    allowed = [{RelAssumption(x, y)}]
                    self.discharges(proof, allowed, path)
                    self.fresh(proof, y, {x}, "must differ from x and open assumptions", path)
            case NDRule.BOX_E:
                rel = self.relation_at(proof.premises[1], path + (1,))
                ok = prem[0] == LabelledFormula(Box(phi), rel.source) and rel.target == x
            case NDRule.DIA_I:
                rel = self.relation_at(proof.premises[1], path + (1,))
                ok = (
                    isinstance(phi, Dia)
                    and rel.source == x
                    and prem[0] == LabelledFormula(phi.body, rel.target)
                )
            case NDRule.DIA_E:
                major = prem[0]
                ok = isinstance(_formula(major), Dia) and prem[1] == concl and proof.eigen is not None
                if ok:
                    y = proof.eigen
                    allowed = [set(), {LabelledFormula(major.formula.body, y), RelAssumption(major.label, y)}]
                    self.discharges(proof, allowed, path)
                    self.fresh(proof, y, {major.label, x}, "must differ from x, z and open assumptions", path)
            case NDRule.RD:
                ok = prem[0] == concl and _single_relation(proof.discharged[0], proof.eigen)
                if ok:
                    allowed = [set(proof.discharged[0])]
                    forbidden = {x} | {rel.source for rel in proof.discharged[0]}
                    self.fresh(proof, proof.eigen, forbidden, "must differ from x, z and open assumptions", path)
            case NDRule.RT:
                ok = prem[0] == concl and all(
                    isinstance(r, RelAssumption) and r.source == r.target for r in proof.discharged[0]
                )
                ok = ok and len(proof.discharged[0]) <= 1
                allowed = [set(proof.discharged[0])]
            case NDRule.RB:
                rel = self.relation_at(proof.premises[0], path + (0,))
                ok = prem[1] == concl
                allowed = [set(), {RelAssumption(rel.target, rel.source)}]
            case NDRule.R4:
                r1 = self.relation_at(proof.premises[0], path + (0,))
                r2 = self.relation_at(proof.premises[1], path + (1,))
                ok = prem[2] == concl and r1.target == r2.source
                allowed = [set(), set(), {RelAssumption(r1.source, r2.target)}]
            case NDRule.R5:
                r1 = self.relation_at(proof.premises[0], path + (0,))
                r2 = self.relation_at(proof.premises[1], path + (1,))
                ok = prem[2] == concl and r1.source == r2.source
                allowed = [set(), set(), {RelAssumption(r1.target, r2.target)}]
            case NDRule.R2:
                r1 = self.relation_at(proof.premises[0], path + (0,))
                r2 = self.relation_at(proof.premises[1], path + (1,))
                ok = prem[2] == concl and r1.source == r2.source and proof.eigen is not None
                if ok:
                    w = proof.eigen
                    allowed = [set(), set(), {RelAssumption(r1.target, w), RelAssumption(r2.target, w)}]
                    self.discharges(proof, allowed, path)
                    forbidden = {x, r1.source, r1.target, r2.target}
                    self.fresh(proof, w, forbidden, "must differ from v, x, y, z and open assumptions", path)
            case _:
                ok = False
        if not ok:
            self.fail(f"{print_item(concl)} is not a correct {rule.value} inference", path)
        self.discharges(proof, allowed, path)


def _formula(item):
    return item.formula if isinstance(item, LabelledFormula) else None


def _label(item):
    return item.label if isinstance(item, LabelledFormula) else None


def _single_relation(discharged: frozenset, eigen: str | None) -> bool:
    if eigen is None or len(discharged) > 1:
        return False
    return all(isinstance(r, RelAssumption) and r.target == eigen for r in discharged)


def validate_nd_proof(gamma: FrameSpec, graph: Graph, proof: NDProof, claim: Sequent):
    """Raise ProofCheckError unless ``proof`` derives ``claim`` relative to ``graph``."""
    claim_labels = labels_of_all(claim.context) | labels_of(claim.goal)
    if not claim_labels <= graph.vertices:
        raise ProofCheckError(f"graph does not contain the labels {sorted(claim_labels - graph.vertices)}")
    if proof.conclusion != claim.goal:
        raise ProofCheckError(
            f"proof concludes {print_item(proof.conclusion)}, claim is {print_item(claim.goal)}"
        )
    _Checker(gamma).check(proof)
    stray = open_assumptions(proof) - set(claim.context) - set(graph.edges)
    if stray:
        items = ", ".join(print_item(i) for i in canonical(stray))
        raise ProofCheckError(f"open assumptions not in the claim: {items}")


def check_nd_proof(gamma: FrameSpec, graph: Graph, proof: NDProof, claim: Sequent) -> bool:
    try:
        validate_nd_proof(gamma, graph, proof, claim)
    except ProofCheckError as error:
        logger.log(error.message)
        return False
    return True


def rename_label(proof: NDProof, old: str, new: str) -> NDProof:
    def item(i: Item) -> Item:
        if isinstance(i, RelAssumption):
            return RelAssumption(new if i.source == old else i.source, new if i.target == old else i.target)
        return LabelledFormula(i.formula, new if i.label == old else i.label)

    return NDProof(
        proof.rule,
        item(proof.conclusion),
        tuple(rename_label(p, old, new) for p in proof.premises),
        tuple(frozenset(item(i) for i in d) for d in proof.discharged),
        new if proof.eigen == old else proof.eigen,
    )


def proof_to_json(proof: NDProof) -> dict:
    encoded = {
        "rule": proof.rule.value,
        "conclusion": print_item(proof.conclusion),
        "discharged": [[print_item(i) for i in canonical(d)] for d in proof.discharged],
        "premises": [proof_to_json(p) for p in proof.premises],
    }
    if proof.eigen is not None:
        encoded["eigen"] = proof.eigen
    return encoded


def _typed(value, kind: type, what: str):
    if not isinstance(value, kind):
        raise MalformedProofError(f"{what} must be a {'string' if kind is str else 'list'}, got {value!r}")
    return value


def proof_from_json(data) -> NDProof:
    if not isinstance(data, dict):
        raise MalformedProofError("proof node must be an object")
    try:
        rule = NDRule(_typed(data["rule"], str, "rule"))
        conclusion = parse_item(_typed(data["conclusion"], str, "conclusion"), allow_reserved=True)
        premises = tuple(proof_from_json(p) for p in _typed(data.get("premises", []), list, "premises"))
        groups = _typed(data.get("discharged", [[] for _ in premises]), list, "discharged")
        discharged = tuple(
            frozenset(
                parse_item(_typed(i, str, "discharged item"), allow_reserved=True)
                for i in _typed(g, list, "discharge group")
            )
            for g in groups
        )
    except KeyError as missing:
        raise MalformedProofError(f"proof node lacks field {missing}")
    except ValueError:
        raise MalformedProofError(f"unknown rule {data.get('rule')!r}")
    except ParseError as error:
        raise MalformedProofError(error.message)
    eigen = data.get("eigen")
    if eigen is not None and not isinstance(eigen, str):
        raise MalformedProofError("eigenlabel must be a string")
    return NDProof(rule, conclusion, premises, discharged, eigen)


def dump_proof(proof: NDProof) -> str:
    return json.dumps(proof_to_json(proof), indent=2)


def load_proof(text: str) -> NDProof:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as error:
        raise MalformedProofError(f"invalid JSON: {error}")
    return proof_from_json(data)


def proof_lines(proof: NDProof, indent: int = 0) -> list:
    """Indented text rendering, conclusion first."""
    eigen = f" [{proof.eigen}]" if proof.eigen else ""
    lines = [f"{'  ' * indent}{print_item(proof.conclusion)}  ({proof.rule.value}{eigen})"]
    for premise in proof.premises:
        lines.extend(proof_lines(premise, indent + 1))
    return lines
