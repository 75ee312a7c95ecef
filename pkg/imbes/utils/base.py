"""Bases of atomic rules and the basic derivability relation.

A base is a set of rules ``(P1 => p1, ..., Pn => pn) => r`` over basic
sentences, which are labelled atoms ``p@x`` or relational assumptions
``x R y``. Label-schematic rules stand for their instances over a finite
label pool. ``derives`` is a budgeted, memoized backward search for
``S |- s`` using (Ref), (App) and the modal cases D, T, B, 4, 5, 2;
``check_atomic_derivation`` re-checks any derivation it returns.
"""

import itertools
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Union

from .constants import (
    DEFAULT_DEPTH,
    DEFAULT_FRESH,
    DEFAULT_MODAL_USES,
    METAVAR_PREFIX,
)
from .custom_exceptions import BaseFormatError, ConfigError, ParseError, ProofCheckError
from .logger import logger
from .syntax import Condition, FrameSpec, Parser, RelAssumption, fresh_label


@dataclass(frozen=True)
class LabelledAtom:
    atom: str
    label: str
    # second label carried by atoms that stand for a relational assumption
    param: str | None = None


BasicSentence = Union[LabelledAtom, RelAssumption]


def sentence_labels(sentence: BasicSentence) -> set:
    if isinstance(sentence, RelAssumption):
        return {sentence.source, sentence.target}
    if sentence.param is None:
        return {sentence.label}
    return {sentence.label, sentence.param}


def labels_of_sentences(sentences: Iterable[BasicSentence]) -> set:
    labels = set()
    for sentence in sentences:
        labels |= sentence_labels(sentence)
    return labels


def format_sentence(sentence: BasicSentence) -> str:
    if isinstance(sentence, RelAssumption):
        return f"{sentence.source} R {sentence.target}"
    if sentence.param is None:
        return f"{sentence.atom}@{sentence.label}"
    return f"{sentence.atom}[{sentence.param}]@{sentence.label}"


def sentence_key(sentence: BasicSentence) -> tuple:
    return (isinstance(sentence, RelAssumption), format_sentence(sentence))


def sorted_sentences(sentences: Iterable[BasicSentence]) -> tuple:
    return tuple(sorted(set(sentences), key=sentence_key))


@dataclass(frozen=True)
class BasicSequent:
    premises: frozenset
    head: BasicSentence

    def __post_init__(self):
        if self.premises and not isinstance(self.head, LabelledAtom):
            raise BaseFormatError(
                f"basic sequent with premises must conclude an atom, got {format_sentence(self.head)}"
            )

    def __str__(self):
        premises = ", ".join(format_sentence(s) for s in sorted_sentences(self.premises))
        return f"{premises} => {format_sentence(self.head)}" if premises else f"=> {format_sentence(self.head)}"


@dataclass(frozen=True, eq=False)
class BasicRule:
    antecedents: tuple
    conclusion: BasicSentence
    tag: str = field(default="")
    # labels that must not occur in the context the rule is applied in
    eigen: frozenset = field(default=frozenset())

    def __post_init__(self):
        if self.antecedents and not isinstance(self.conclusion, LabelledAtom):
            raise BaseFormatError(
                f"rule with antecedents must conclude an atom, got {format_sentence(self.conclusion)}"
            )

    def __eq__(self, other):
        if not isinstance(other, BasicRule):
            return NotImplemented
        return self.conclusion == other.conclusion and frozenset(
            self.antecedents
        ) == frozenset(other.antecedents)

    def __hash__(self):
        return hash((self.conclusion, frozenset(self.antecedents)))

    def __str__(self):
        return format_rule(self)


@dataclass(frozen=True)
class SchematicRule:
    template: BasicRule
    metavars: tuple
    # pairs (metavar, other) read as metavar != other
    constraints: frozenset = frozenset()
    eigen: frozenset = frozenset()

    @property
    def tag(self) -> str:
        return self.template.tag

    def __str__(self):
        return format_rule(self)


AnyRule = Union[BasicRule, SchematicRule]


@dataclass(frozen=True)
class Base:
    ground: frozenset = frozenset()
    schematic: frozenset = frozenset()

    def __len__(self):
        return len(self.ground) + len(self.schematic)

    def rules(self, pool: Iterable[str]) -> tuple:
        pool = sorted(set(pool))
        instances = set(self.ground)
        for rule in self.schematic:
            instances |= instantiate(rule, pool)
        return tuple(sorted(instances, key=rule_key))

    def issubset(self, other: "Base") -> bool:
        return self.ground <= other.ground and self.schematic <= other.schematic

    def admits(self, rule: BasicRule) -> Optional[dict]:
        """The substitution under which ``rule`` belongs to the base, if any."""
        if rule in self.ground:
            return {}
        for schema in sorted(self.schematic, key=rule_key):
            sigma = match_rule(schema, rule)
            if sigma is not None:
                return sigma
        return None


EMPTY_BASE = Base()


def rule_key(rule: AnyRule) -> tuple:
    return (rule.tag, format_rule(rule))


def extend(base: Base, more: Iterable[AnyRule]) -> Base:
    more = list(more)
    ground = frozenset(r for r in more if isinstance(r, BasicRule))
    schematic = frozenset(r for r in more if isinstance(r, SchematicRule))
    return Base(base.ground | ground, base.schematic | schematic)


def is_metavar(name: str | None) -> bool:
    return name is not None and name.startswith(METAVAR_PREFIX)


def substitute(sentence: BasicSentence, sigma: dict) -> BasicSentence:
    if isinstance(sentence, RelAssumption):
        return RelAssumption(
            sigma.get(sentence.source, sentence.source),
            sigma.get(sentence.target, sentence.target),
        )
    param = sentence.param
    return LabelledAtom(
        sentence.atom,
        sigma.get(sentence.label, sentence.label),
        sigma.get(param, param) if param is not None else None,
    )


def _substitute_rule(template: BasicRule, sigma: dict, eigen: frozenset) -> BasicRule:
    antecedents = tuple(
        BasicSequent(
            frozenset(substitute(s, sigma) for s in antecedent.premises),
            substitute(antecedent.head, sigma),
        )
        for antecedent in template.antecedents
    )
    return BasicRule(
        antecedents,
        substitute(template.conclusion, sigma),
        template.tag,
        frozenset(sigma[m] for m in eigen),
    )


def _satisfies(constraints: frozenset, sigma: dict) -> bool:
    for metavar, other in constraints:
        if sigma[metavar] == sigma.get(other, other):
            return False
    return True


def instantiate(rule: SchematicRule, pool: Iterable[str]) -> set:
    pool = sorted(set(pool))
    instances = set()
    for values in itertools.product(pool, repeat=len(rule.metavars)):
        sigma = dict(zip(rule.metavars, values))
        if _satisfies(rule.constraints, sigma):
            instances.add(_substitute_rule(rule.template, sigma, rule.eigen))
    return instances


def _bind(pattern: str | None, value: str | None, sigma: dict) -> bool:
    if pattern is None or value is None:
        return pattern == value
    if not is_metavar(pattern):
        return pattern == value
    if pattern in sigma:
        return sigma[pattern] == value
    sigma[pattern] = value
    return True


def _match_sentence(pattern: BasicSentence, sentence: BasicSentence, sigma: dict) -> bool:
    if isinstance(pattern, RelAssumption):
        return (
            isinstance(sentence, RelAssumption)
            and _bind(pattern.source, sentence.source, sigma)
            and _bind(pattern.target, sentence.target, sigma)
        )
    return (
        isinstance(sentence, LabelledAtom)
        and pattern.atom == sentence.atom
        and _bind(pattern.label, sentence.label, sigma)
        and _bind(pattern.param, sentence.param, sigma)
    )


def _match_sets(patterns: tuple, sentences: tuple, sigma: dict) -> Optional[dict]:
    if len(patterns) != len(sentences):
        return None
    if not patterns:
        return sigma
    first, rest = patterns[0], patterns[1:]
    for index, sentence in enumerate(sentences):
        attempt = dict(sigma)
        if _match_sentence(first, sentence, attempt):
            others = sentences[:index] + sentences[index + 1 :]
            result = _match_sets(rest, others, attempt)
            if result is not None:
                return result
    return None


def match_rule(schema: SchematicRule, rule: BasicRule) -> Optional[dict]:
    template = schema.template
    if len(template.antecedents) != len(rule.antecedents):
        return None
    sigma = {}
    if not _match_sentence(template.conclusion, rule.conclusion, sigma):
        return None
    # instances keep the template's antecedent order
    for pattern, antecedent in zip(template.antecedents, rule.antecedents):
        if not _match_sentence(pattern.head, antecedent.head, sigma):
            return None
        sigma = _match_sets(
            tuple(sorted_sentences(pattern.premises)),
            tuple(sorted_sentences(antecedent.premises)),
            sigma,
        )
        if sigma is None:
            return None
    if set(sigma) != set(schema.metavars) or not _satisfies(schema.constraints, sigma):
        return None
    return sigma


@dataclass(frozen=True)
class SearchBudget:
    depth: int = DEFAULT_DEPTH
    modal_uses: int = DEFAULT_MODAL_USES
    fresh: int = DEFAULT_FRESH
    pool: frozenset = frozenset()

    def __post_init__(self):
        if min(self.depth, self.modal_uses, self.fresh) < 0:
            raise ConfigError("search budgets must be nonnegative")

    def with_pool(self, pool: Iterable[str]) -> "SearchBudget":
        return SearchBudget(self.depth, self.modal_uses, self.fresh, frozenset(pool))


class Step(str, Enum):
    REF = "Ref"
    APP = "App"
    D = "D"
    T = "T"
    B = "B"
    FOUR = "4"
    FIVE = "5"
    TWO = "2"


MODAL_STEPS = {
    Condition.D: Step.D,
    Condition.T: Step.T,
    Condition.B: Step.B,
    Condition.FOUR: Step.FOUR,
    Condition.FIVE: Step.FIVE,
    Condition.TWO: Step.TWO,
}


@dataclass(frozen=True)
class AtomicDerivation:
    step: Step
    context: frozenset
    conclusion: BasicSentence
    children: tuple = ()
    rule: BasicRule | None = None
    eigen: str | None = None
    # relational assumptions a modal case adds to the context of its last child
    added: tuple = ()

    def size(self) -> int:
        return 1 + sum(child.size() for child in self.children)


class DerivabilitySearch:
    def __init__(self, base: Base, gamma: FrameSpec, budget: SearchBudget):
        self.base = base
        self.gamma = frozenset(gamma)
        self.budget = budget
        self.pool = sorted(budget.pool)
        self.index = {}
        for rule in base.rules(self.pool):
            self.index.setdefault(rule.conclusion, []).append(rule)
        # relational assumptions are consumed only by rule antecedents
        self.modal_enabled = bool(self.gamma) and any(
            isinstance(antecedent.head, RelAssumption)
            for rules in self.index.values()
            for rule in rules
            for antecedent in rule.antecedents
        )
        self.relation_axioms = sorted_sentences(
            conclusion
            for conclusion, rules in self.index.items()
            if isinstance(conclusion, RelAssumption) and any(not r.antecedents for r in rules)
        )
        self.successes = {}
        self.failures = {}
        self.open = set()
        self.cuts = 0

    def derive(self, context: Iterable[BasicSentence], goal: BasicSentence) -> Optional[AtomicDerivation]:
        context = frozenset(context)
        for depth in range(1, self.budget.depth + 1):
            result = self._derive(context, goal, depth, self.budget.modal_uses)
            if result is not None:
                return result
        return None

    def _derive(self, context, goal, depth, modal) -> Optional[AtomicDerivation]:
        if depth <= 0:
            return None
        if goal in context:
            return AtomicDerivation(Step.REF, context, goal)
        key = (context, goal)
        if key in self.successes:
            return self.successes[key]
        if any(depth <= d and modal <= m for d, m in self.failures.get(key, ())):
            return None
        if key in self.open:
            self.cuts += 1
            return None

        self.open.add(key)
        cuts_before = self.cuts
        try:
            result = self._by_rules(context, goal, depth, modal)
            if result is None and modal > 0 and self.modal_enabled and isinstance(goal, LabelledAtom):
                result = self._by_modal_cases(context, goal, depth, modal)
        finally:
            self.open.discard(key)

        if result is not None:
            self.successes[key] = result
        elif self.cuts == cuts_before:
            self.failures.setdefault(key, []).append((depth, modal))
        return result

    def _blocked(self, context, antecedent: BasicSequent) -> bool:
        head = antecedent.head
        if head in context or head in antecedent.premises or head in self.index:
            return False
        return isinstance(head, RelAssumption) or not self.modal_enabled

    def _by_rules(self, context, goal, depth, modal) -> Optional[AtomicDerivation]:
        labels = None
        for rule in self.index.get(goal, ()):
            if rule.eigen:
                if labels is None:
                    labels = labels_of_sentences(context) | sentence_labels(goal)
                if rule.eigen & labels:
                    continue
            if any(self._blocked(context, antecedent) for antecedent in rule.antecedents):
                continue
            children = []
            for antecedent in rule.antecedents:
                child = self._derive(context | antecedent.premises, antecedent.head, depth - 1, modal)
                if child is None:
                    break
                children.append(child)
            else:
                return AtomicDerivation(Step.APP, context, goal, tuple(children), rule)
        return None

    def _relation(self, context, relation: RelAssumption) -> AtomicDerivation:
        if relation in context:
            return AtomicDerivation(Step.REF, context, relation)
        rule = next(r for r in self.index[relation] if not r.antecedents)
        return AtomicDerivation(Step.APP, context, relation, (), rule)

    def _extended(self, step, context, goal, depth, modal, added, sides=(), eigen=None):
        if all(relation in context for relation in added):
            return None
        main = self._derive(context | frozenset(added), goal, depth - 1, modal - 1)
        if main is None:
            return None
        children = tuple(self._relation(context, side) for side in sides) + (main,)
        return AtomicDerivation(step, context, goal, children, None, eigen, tuple(added))

    def _by_modal_cases(self, context, goal, depth, modal) -> Optional[AtomicDerivation]:
        in_play = labels_of_sentences(context) | sentence_labels(goal)
        labels = sorted(in_play | set(self.pool))
        relations = sorted_sentences(
            [s for s in context if isinstance(s, RelAssumption)] + list(self.relation_axioms)
        )
        attempts = []
        if Condition.D in self.gamma:
            for x in labels:
                y = fresh_label(in_play | {x})
                attempts.append((Step.D, (RelAssumption(x, y),), (), y))
        if Condition.T in self.gamma:
            for x in labels:
                attempts.append((Step.T, (RelAssumption(x, x),), (), None))
        if Condition.B in self.gamma:
            for r in relations:
                attempts.append((Step.B, (RelAssumption(r.target, r.source),), (r,), None))
        if Condition.FOUR in self.gamma:
            for r1, r2 in itertools.product(relations, repeat=2):
                if r1.target == r2.source:
                    attempts.append((Step.FOUR, (RelAssumption(r1.source, r2.target),), (r1, r2), None))
        if Condition.FIVE in self.gamma:
            for r1, r2 in itertools.product(relations, repeat=2):
                if r1.source == r2.source:
                    attempts.append((Step.FIVE, (RelAssumption(r1.target, r2.target),), (r1, r2), None))
        if Condition.TWO in self.gamma:
            for r1, r2 in itertools.product(relations, repeat=2):
                if r1.source == r2.source:
                    w = fresh_label(in_play | {r1.source, r1.target, r2.target})
                    added = (RelAssumption(r1.target, w), RelAssumption(r2.target, w))
                    attempts.append((Step.TWO, added, (r1, r2), w))

        for step, added, sides, eigen in attempts:
            result = self._extended(step, context, goal, depth, modal, added, sides, eigen)
            if result is not None:
                return result
        return None


def derives(
    base: Base,
    gamma: FrameSpec,
    context: Iterable[BasicSentence],
    goal: BasicSentence,
    budget: SearchBudget,
) -> Optional[AtomicDerivation]:
    return DerivabilitySearch(base, gamma, budget).derive(context, goal)


def _fail(reason: str, path: tuple):
    raise ProofCheckError(reason, path)


def validate_atomic_derivation(base: Base, gamma: FrameSpec, d: AtomicDerivation, path: tuple = ()):
    context, goal = d.context, d.conclusion
    match d.step:
        case Step.REF:
            if d.children or goal not in context:
                _fail(f"{format_sentence(goal)} is not among the hypotheses", path)
            return
        case Step.APP:
            _validate_application(base, d, path)
        case _:
            _validate_modal_case(gamma, d, path)
    for index, child in enumerate(d.children):
        validate_atomic_derivation(base, gamma, child, path + (index,))


def _validate_application(base: Base, d: AtomicDerivation, path: tuple):
    rule = d.rule
    if rule is None or rule.conclusion != d.conclusion:
        _fail("rule does not conclude the node's sentence", path)
    sigma = base.admits(rule)
    if sigma is None:
        _fail(f"rule {format_rule(rule)} is not in the base", path)
    schema_eigen = set()
    if sigma:
        schema = next(s for s in base.schematic if match_rule(s, rule) == sigma)
        schema_eigen = {sigma[m] for m in schema.eigen}
    if schema_eigen & (labels_of_sentences(d.context) | sentence_labels(d.conclusion)):
        _fail("eigenlabel of the rule occurs in the context", path)
    if len(d.children) != len(rule.antecedents):
        _fail("number of subderivations does not match the rule", path)
    for index, (child, antecedent) in enumerate(zip(d.children, rule.antecedents)):
        if child.context != d.context | antecedent.premises or child.conclusion != antecedent.head:
            _fail(f"subderivation {index} does not establish {antecedent}", path)


def _validate_modal_case(gamma: FrameSpec, d: AtomicDerivation, path: tuple):
    step = d.step
    condition = next(c for c, s in MODAL_STEPS.items() if s == step)
    if condition not in gamma:
        _fail(f"modal case {step.value} needs frame condition {condition.value}", path)
    if not isinstance(d.conclusion, LabelledAtom):
        _fail("modal cases conclude labelled atoms only", path)
    if not d.children:
        _fail("modal case without subderivations", path)
    *sides, main = d.children
    if main.conclusion != d.conclusion or main.context != d.context | frozenset(d.added):
        _fail("main subderivation does not match the extended context", path)
    for side in sides:
        if side.context != d.context or not isinstance(side.conclusion, RelAssumption):
            _fail("relational side premise is not derived from the node's context", path)
    rels = [side.conclusion for side in sides]
    added = list(d.added)
    expected = None
    match step:
        case Step.D:
            if len(added) == 1 and not rels:
                x, y = added[0].source, added[0].target
                forbidden = labels_of_sentences(d.context) | sentence_labels(d.conclusion) | {x}
                if d.eigen != y or y in forbidden:
                    _fail("eigenlabel of (D) is not fresh", path)
                return
            _fail("(D) adds exactly one relational assumption", path)
        case Step.T:
            if len(added) == 1 and not rels and added[0].source == added[0].target:
                return
            _fail("(T) adds a reflexive relational assumption", path)
        case Step.B:
            if len(rels) == 1:
                expected = [RelAssumption(rels[0].target, rels[0].source)]
        case Step.FOUR:
            if len(rels) == 2 and rels[0].target == rels[1].source:
                expected = [RelAssumption(rels[0].source, rels[1].target)]
        case Step.FIVE:
            if len(rels) == 2 and rels[0].source == rels[1].source:
                expected = [RelAssumption(rels[0].target, rels[1].target)]
        case Step.TWO:
            if len(rels) == 2 and rels[0].source == rels[1].source:
                w = d.eigen
                expected = [RelAssumption(rels[0].target, w), RelAssumption(rels[1].target, w)]
                forbidden = (
                    labels_of_sentences(d.context)
                    | sentence_labels(d.conclusion)
                    | labels_of_sentences(rels)
                )
                if w is None or w in forbidden:
                    _fail("eigenlabel of (2) is not fresh", path)
    if expected is None or sorted_sentences(expected) != sorted_sentences(added):
        _fail(f"({step.value}) does not add the relational assumption its clause requires", path)


def check_atomic_derivation(base: Base, gamma: FrameSpec, d: AtomicDerivation) -> bool:
    try:
        validate_atomic_derivation(base, gamma, d)
    except ProofCheckError as error:
        logger.log(error.message)
        return False
    return True


def format_rule(rule: AnyRule) -> str:
    schema = rule if isinstance(rule, SchematicRule) else None
    template = schema.template if schema else rule
    conclusion = format_sentence(template.conclusion)
    if template.antecedents:
        antecedents = ", ".join(str(a) for a in template.antecedents)
        text = f"({antecedents}) => {conclusion}"
    else:
        text = f"=> {conclusion}"
    if schema and (schema.constraints or schema.eigen):
        clauses = [f"{m} != {o}" for m, o in sorted(schema.constraints)]
        clauses += [f"fresh {m}" for m in sorted(schema.eigen)]
        text += " where " + ", ".join(clauses)
    return text


def format_base(base: Base, provenance: bool = False) -> str:
    lines = []
    for rule in sorted(base.ground, key=rule_key) + sorted(base.schematic, key=rule_key):
        line = format_rule(rule)
        if provenance and rule.tag:
            line += f"  # {rule.tag}"
        lines.append(line)
    return "\n".join(lines)


class _BaseParser(Parser):
    def __init__(self, text: str):
        super().__init__(text, allow_reserved=True, allow_metavars=True)

    def sentence(self) -> BasicSentence:
        if self.tokens.peek()[0] == "ident" and self.tokens.at("R", 1):
            source = self.label()
            self.tokens.advance()
            return RelAssumption(source, self.label())
        atom = self.atom_name()
        param = None
        if self.tokens.at("["):
            self.tokens.advance()
            param = self.label()
            self.tokens.expect("]")
        self.tokens.expect("@")
        return LabelledAtom(atom, self.label(), param)

    def antecedent(self) -> BasicSequent:
        premises = []
        if not self.tokens.at("=>"):
            premises.append(self.sentence())
            while self.tokens.at(","):
                self.tokens.advance()
                premises.append(self.sentence())
        self.tokens.expect("=>")
        return BasicSequent(frozenset(premises), self.sentence())

    def rule(self) -> AnyRule:
        antecedents = []
        if self.tokens.at("("):
            self.tokens.advance()
            antecedents.append(self.antecedent())
            while self.tokens.at(","):
                self.tokens.advance()
                antecedents.append(self.antecedent())
            self.tokens.expect(")")
        self.tokens.expect("=>")
        template = BasicRule(tuple(antecedents), self.sentence())
        constraints, eigen = set(), set()
        if self.tokens.at("where"):
            self.tokens.advance()
            while True:
                if self.tokens.at("fresh"):
                    self.tokens.advance()
                    eigen.add(self.label())
                else:
                    metavar = self.label()
                    self.tokens.expect("!=")
                    constraints.add((metavar, self.label()))
                if not self.tokens.at(","):
                    break
                self.tokens.advance()
        self.tokens.finish()
        metavars = _metavars_of(template)
        if not metavars:
            if constraints or eigen:
                raise BaseFormatError("constraints on a rule without metavariables")
            return template
        unknown = {m for m, _ in constraints} | eigen
        if not unknown <= set(metavars):
            raise BaseFormatError(f"constraint mentions unknown metavariables {sorted(unknown - set(metavars))}")
        return SchematicRule(template, metavars, frozenset(constraints), frozenset(eigen))


def _metavars_of(rule: BasicRule) -> tuple:
    sentences = [rule.conclusion]
    for antecedent in rule.antecedents:
        sentences.append(antecedent.head)
        sentences.extend(antecedent.premises)
    return tuple(sorted(m for m in labels_of_sentences(sentences) if is_metavar(m)))


def parse_rule(text: str) -> AnyRule:
    try:
        return _BaseParser(text).rule()
    except ParseError as error:
        raise BaseFormatError(error.message)


COMMENT = re.compile(r"#.*$")


def parse_base(text: str) -> Base:
    rules = []
    for line in text.splitlines():
        line = COMMENT.sub("", line).strip()
        if line:
            rules.append(parse_rule(line))
    return extend(EMPTY_BASE, rules)
