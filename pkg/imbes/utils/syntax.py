"""Formulas, labelled formulas, relational assumptions and sequents.

Concrete grammar (ASCII)::

    formula  := disj ( "->" formula )?
    disj     := conj ( "|" conj )*
    conj     := unary ( "&" unary )*
    unary    := "[]" unary | "<>" unary | "(" formula ")" | "top" | "bot" | atom
    item     := label "R" label | formula "@" label
    sequent  := [ item ( "," item )* ] "|-" item

Atoms and labels are lowercase identifiers. Labels ``w0, w1, ...`` and atoms
``f0, f1, ...`` belong to reserved namespaces and are rejected in user input.
"""

import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Union

from .constants import (
    BOT_ATOM,
    FLAT_ATOM_PREFIX,
    FRESH_LABEL_PREFIX,
    METAVAR_PREFIX,
    TOP_ATOM,
)
from .custom_exceptions import ParseError, SequentError

RESERVED_LABEL = re.compile(rf"{FRESH_LABEL_PREFIX}\d+")
RESERVED_ATOM = re.compile(rf"{FLAT_ATOM_PREFIX}(\d+|_r)")

TOKEN = re.compile(
    r"\s*(?:(?P<sym>->|\|-|=>|!=|\[\]|<>|&|\||\(|\)|\[|\]|,|@)"
    r"|(?P<ident>\??[A-Za-z_][A-Za-z0-9_]*)|(?P<bad>\S))"
)


class Formula:
    def __str__(self):
        return print_formula(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class Top(Formula):
    pass


@dataclass(frozen=True)
class Bot(Formula):
    pass


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Imp(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Box(Formula):
    body: Formula


@dataclass(frozen=True)
class Dia(Formula):
    body: Formula


@dataclass(frozen=True)
class LabelledFormula:
    formula: Formula
    label: str

    def __str__(self):
        return print_item(self)


@dataclass(frozen=True)
class RelAssumption:
    source: str
    target: str

    def __str__(self):
        return print_item(self)


Item = Union[LabelledFormula, RelAssumption]


def _items_text(context) -> str:
    return ", ".join(print_item(item) for item in canonical(context))


@dataclass(frozen=True)
class Sequent:
    context: frozenset
    goal: LabelledFormula

    def __post_init__(self):
        for item in self.context:
            if not isinstance(item, LabelledFormula):
                raise SequentError(f"{item} is not a labelled formula")
        if not isinstance(self.goal, LabelledFormula):
            raise SequentError(f"goal {self.goal} is not a labelled formula")

    def __str__(self):
        return print_sequent(self.context, self.goal)


@dataclass(frozen=True)
class ExtendedSequent:
    context: frozenset
    goal: Item

    def __post_init__(self):
        if isinstance(self.goal, RelAssumption) and self.context:
            raise SequentError("relational goal with nonempty context")

    def __str__(self):
        return print_sequent(self.context, self.goal)


class Condition(str, Enum):
    D = "D"
    T = "T"
    B = "B"
    FOUR = "4"
    FIVE = "5"
    TWO = "2"


FrameSpec = frozenset

ALL_CONDITIONS = tuple(Condition)


def parse_frames(text: str) -> FrameSpec:
    conditions = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            conditions.add(Condition(part))
        except ValueError:
            raise ParseError(f"unknown frame condition {part!r}")
    return frozenset(conditions)


def format_frames(gamma: FrameSpec) -> str:
    return ",".join(c.value for c in ALL_CONDITIONS if c in gamma)


# precedence: higher binds tighter
def _precedence(formula: Formula) -> int:
    match formula:
        case Imp():
            return 1
        case Or():
            return 2
        case And():
            return 3
        case Box() | Dia():
            return 4
    return 5


def _wrap(formula: Formula, parens: bool) -> str:
    text = print_formula(formula)
    return f"({text})" if parens else text


def print_formula(formula: Formula) -> str:
    match formula:
        case Atom(name):
            return name
        case Top():
            return "top"
        case Bot():
            return "bot"
        case Box(body):
            return "[]" + _wrap(body, _precedence(body) < 4)
        case Dia(body):
            return "<>" + _wrap(body, _precedence(body) < 4)
        case And(left, right):
            return f"{_wrap(left, _precedence(left) < 3)} & {_wrap(right, _precedence(right) <= 3)}"
        case Or(left, right):
            return f"{_wrap(left, _precedence(left) < 2)} | {_wrap(right, _precedence(right) <= 2)}"
        case Imp(left, right):
            return f"{_wrap(left, _precedence(left) <= 1)} -> {print_formula(right)}"
    raise TypeError(f"not a formula: {formula!r}")


def print_item(item: Item) -> str:
    if isinstance(item, RelAssumption):
        return f"{item.source} R {item.target}"
    return f"{_wrap(item.formula, _precedence(item.formula) < 4)}@{item.label}"


def print_sequent(context: Iterable[Item], goal: Item) -> str:
    premises = _items_text(context)
    return f"{premises} |- {print_item(goal)}" if premises else f"|- {print_item(goal)}"


def sort_key(item) -> tuple:
    return (isinstance(item, RelAssumption), print_item(item))


def canonical(items: Iterable[Item]) -> tuple:
    """Sorted duplicate-free sequence, the canonical form of a hypothesis set."""
    return tuple(sorted(set(items), key=sort_key))


def labels_of(item: Item) -> set:
    if isinstance(item, RelAssumption):
        return {item.source, item.target}
    return {item.label}


def labels_of_all(items: Iterable[Item]) -> set:
    labels = set()
    for item in items:
        labels |= labels_of(item)
    return labels


def is_reserved_label(name: str) -> bool:
    return RESERVED_LABEL.fullmatch(name) is not None


def is_reserved_atom(name: str) -> bool:
    return RESERVED_ATOM.fullmatch(name) is not None


def fresh_label(avoid: Iterable[str]) -> str:
    avoid = set(avoid)
    index = 0
    while f"{FRESH_LABEL_PREFIX}{index}" in avoid:
        index += 1
    return f"{FRESH_LABEL_PREFIX}{index}"


def subformulas(formula: Formula) -> tuple:
    match formula:
        case And(left, right) | Or(left, right) | Imp(left, right):
            return (left, right)
        case Box(body) | Dia(body):
            return (body,)
    return ()


def formula_depth(formula: Formula) -> int:
    children = subformulas(formula)
    return 1 + max((formula_depth(child) for child in children), default=0)


def atoms_of(formula: Formula) -> set:
    if isinstance(formula, Atom):
        return {formula.name}
    names = set()
    for child in subformulas(formula):
        names |= atoms_of(child)
    return names


class Tokens:
    def __init__(self, text: str):
        self.text = text
        self.items = []
        position = 0
        while position < len(text):
            match = TOKEN.match(text, position)
            if match is None or match.lastgroup is None:
                break
            if match.lastgroup == "bad":
                raise ParseError(f"unknown token {match.group('bad')!r}", match.start("bad"))
            kind = match.lastgroup
            self.items.append((kind, match.group(kind), match.start(kind)))
            position = match.end()
        self.items.append(("end", "", len(text)))
        self.index = 0

    def peek(self, offset: int = 0) -> tuple:
        return self.items[min(self.index + offset, len(self.items) - 1)]

    def at(self, value: str, offset: int = 0) -> bool:
        kind, token, _ = self.peek(offset)
        return kind != "end" and token == value

    def advance(self) -> tuple:
        token = self.peek()
        self.index += 1
        return token

    def expect(self, value: str) -> tuple:
        kind, token, position = self.peek()
        if token != value or kind == "end":
            found = token or "end of input"
            raise ParseError(f"expected {value!r}, found {found!r}", position)
        return self.advance()

    def finish(self):
        kind, token, position = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected trailing token {token!r}", position)


class Parser:
    def __init__(self, text: str, allow_reserved: bool = False, allow_metavars: bool = False):
        self.tokens = Tokens(text)
        self.allow_reserved = allow_reserved
        self.allow_metavars = allow_metavars

    def identifier(self, what: str) -> tuple:
        kind, token, position = self.tokens.peek()
        if kind != "ident":
            raise ParseError(f"expected {what}, found {token or 'end of input'!r}", position)
        self.tokens.advance()
        return token, position

    def label(self) -> str:
        name, position = self.identifier("label")
        if name.startswith(METAVAR_PREFIX):
            if not self.allow_metavars:
                raise ParseError(f"metavariable {name!r} not allowed here", position)
            return name
        if not name[0].islower():
            raise ParseError(f"labels are lowercase identifiers, got {name!r}", position)
        if is_reserved_label(name) and not self.allow_reserved:
            raise ParseError(f"label {name!r} is reserved for fresh labels", position)
        return name

    def atom_name(self) -> str:
        name, position = self.identifier("atom")
        if not name[0].islower():
            raise ParseError(f"atoms are lowercase identifiers, got {name!r}", position)
        if is_reserved_atom(name) and not self.allow_reserved:
            raise ParseError(f"atom {name!r} is reserved", position)
        return name

    def formula(self) -> Formula:
        left = self.disjunction()
        if self.tokens.at("->"):
            self.tokens.advance()
            return Imp(left, self.formula())
        return left

    def disjunction(self) -> Formula:
        left = self.conjunction()
        while self.tokens.at("|"):
            self.tokens.advance()
            left = Or(left, self.conjunction())
        return left

    def conjunction(self) -> Formula:
        left = self.unary()
        while self.tokens.at("&"):
            self.tokens.advance()
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        kind, token, position = self.tokens.peek()
        if kind == "sym" and token == "[]":
            self.tokens.advance()
            return Box(self.unary())
        if kind == "sym" and token == "<>":
            self.tokens.advance()
            return Dia(self.unary())
        if kind == "sym" and token == "(":
            self.tokens.advance()
            inner = self.formula()
            self.tokens.expect(")")
            return inner
        if kind == "ident" and token == TOP_ATOM:
            self.tokens.advance()
            return Top()
        if kind == "ident" and token == BOT_ATOM:
            self.tokens.advance()
            return Bot()
        if kind == "ident":
            return Atom(self.atom_name())
        raise ParseError(f"expected a formula, found {token or 'end of input'!r}", position)

    def item(self) -> Item:
        if self.tokens.peek()[0] == "ident" and self.tokens.at("R", 1):
            source = self.label()
            self.tokens.advance()
            return RelAssumption(source, self.label())
        formula = self.formula()
        self.tokens.expect("@")
        return LabelledFormula(formula, self.label())

    def extended_sequent(self) -> ExtendedSequent:
        context = []
        if not self.tokens.at("|-"):
            context.append(self.item())
            while self.tokens.at(","):
                self.tokens.advance()
                context.append(self.item())
        self.tokens.expect("|-")
        goal = self.item()
        self.tokens.finish()
        return ExtendedSequent(frozenset(context), goal)


def parse_formula(text: str) -> Formula:
    parser = Parser(text)
    formula = parser.formula()
    parser.tokens.finish()
    return formula


def parse_item(text: str, allow_reserved: bool = False) -> Item:
    parser = Parser(text, allow_reserved=allow_reserved)
    item = parser.item()
    parser.tokens.finish()
    return item


def parse_extended_sequent(text: str, allow_reserved: bool = False) -> ExtendedSequent:
    return Parser(text, allow_reserved=allow_reserved).extended_sequent()


def parse_sequent(text: str, allow_reserved: bool = False) -> Sequent:
    extended = parse_extended_sequent(text, allow_reserved)
    return Sequent(extended.context, extended.goal)


@dataclass(frozen=True)
class SchematicEntry:
    """The family {pattern^z : z} or, with no pattern, {anchor R z : z}."""

    pattern: Formula | None
    anchor: str
    metavar: str

    @property
    def relational(self) -> bool:
        return self.pattern is None

    def matches(self, item: Item) -> bool:
        if self.relational:
            if not isinstance(item, RelAssumption):
                return False
            return self.anchor.startswith(METAVAR_PREFIX) or item.source == self.anchor
        return isinstance(item, LabelledFormula) and item.formula == self.pattern

    def instantiate(self, label: str, anchor: str | None = None) -> Item:
        if self.relational:
            return RelAssumption(anchor or self.anchor, label)
        return LabelledFormula(self.pattern, label)


@dataclass(frozen=True)
class XiClosure:
    ground: frozenset
    schematic: frozenset

    def __contains__(self, item) -> bool:
        if item in self.ground:
            return True
        return any(entry.matches(item) for entry in self.schematic)

    def labels(self) -> frozenset:
        anchors = {
            entry.anchor
            for entry in self.schematic
            if not entry.anchor.startswith(METAVAR_PREFIX)
        }
        return frozenset(labels_of_all(self.ground) | anchors)

    @property
    def covers_all_labels(self) -> bool:
        # a modal subformula contributes members at every label
        return bool(self.schematic)

    def formulas(self) -> tuple:
        """Every formula occurring in the closure, with its ground labels and
        whether it also occurs at every label."""
        ground = {}
        for item in self.ground:
            if isinstance(item, LabelledFormula):
                ground.setdefault(item.formula, set()).add(item.label)
        families = {entry.pattern for entry in self.schematic if not entry.relational}
        occurring = set(ground) | families
        return tuple(
            (formula, frozenset(ground.get(formula, ())), formula in families)
            for formula in sorted(occurring, key=print_formula)
        )


def generalized_subformulae(seq: Sequent) -> XiClosure:
    ground = set()
    schematic = set()
    counter = iter(range(1 << 30))

    def close_ground(item: LabelledFormula):
        if item in ground:
            return
        ground.add(item)
        formula, label = item.formula, item.label
        match formula:
            case And(left, right) | Or(left, right) | Imp(left, right):
                close_ground(LabelledFormula(left, label))
                close_ground(LabelledFormula(right, label))
            case Box(body) | Dia(body):
                metavar = f"{METAVAR_PREFIX}z{next(counter)}"
                schematic.add(SchematicEntry(None, label, metavar))
                close_family(body, label, metavar)

    def close_family(formula: Formula, anchor: str, metavar: str):
        entry = SchematicEntry(formula, anchor, metavar)
        if any(known.pattern == formula for known in schematic):
            return
        schematic.add(entry)
        match formula:
            case And(left, right) | Or(left, right) | Imp(left, right):
                close_family(left, anchor, metavar)
                close_family(right, anchor, metavar)
            case Box(body) | Dia(body):
                inner = f"{METAVAR_PREFIX}z{next(counter)}"
                schematic.add(SchematicEntry(None, metavar, inner))
                close_family(body, metavar, inner)

    for item in canonical(set(seq.context) | {seq.goal}):
        close_ground(item)
    return XiClosure(frozenset(ground), frozenset(schematic))
