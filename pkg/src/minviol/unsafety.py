"""Level of unsafety of timed words and the lexicographic cost algebra.

A cost vector is a plain tuple of floats: one component per priority class
followed by elapsed time.  Python compares tuples lexicographically, which
is exactly the order used for minimum-violation planning, so tuples go
straight into heaps and ``min``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .fltl import (
    AlphabetError,
    GFormula,
    GXFormula,
    denext,
    eval_pair,
    parse,
    propositions_of,
    second_propositions,
)

CostVector = tuple  # tuple[float, ...]


@dataclass(frozen=True)
class TimedLetter:
    label: frozenset
    duration: float

    def __post_init__(self):
        if not self.duration >= 0.0:
            raise ValueError(f"negative duration {self.duration}")
        if not isinstance(self.label, frozenset):
            object.__setattr__(self, "label", frozenset(self.label))


@dataclass(frozen=True)
class TimedWord:
    letters: tuple

    def __post_init__(self):
        if len(self.letters) == 0:
            raise ValueError("a timed word needs at least one letter")
        object.__setattr__(self, "letters", tuple(self.letters))

    @classmethod
    def of(cls, pairs: Iterable) -> "TimedWord":
        """Build from ``(label, duration)`` pairs."""
        return cls(tuple(TimedLetter(frozenset(l), float(d)) for l, d in pairs))

    @property
    def labels(self) -> list:
        return [letter.label for letter in self.letters]

    @property
    def duration(self) -> float:
        return sum(letter.duration for letter in self.letters)

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)


@dataclass(frozen=True)
class Rule:
    name: str
    formula: GXFormula
    weight: int = 1
    priority: int = 0


@dataclass
class PrioritizedSpec:
    """Rules over an alphabet, partitioned into priority classes ``0..N``.

    Class 0 is the most important.  The paired (next-free) image of every
    rule is computed once at construction.
    """

    alphabet: frozenset
    rules: tuple
    paired: tuple = field(init=False, repr=False)
    _unsafe_state: dict = field(init=False, repr=False, default_factory=dict)
    _violated: dict = field(init=False, repr=False, default_factory=dict)

    def __post_init__(self):
        self.alphabet = frozenset(self.alphabet)
        self.rules = tuple(self.rules)
        if not self.rules:
            raise ValueError("a specification needs at least one rule")
        names = [r.name for r in self.rules]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate rule names in {names}")
        for rule in self.rules:
            unknown = propositions_of(rule.formula) - self.alphabet
            if unknown:
                raise AlphabetError(
                    f"rule {rule.name!r} refers to unknown propositions {sorted(unknown)}"
                )
            if int(rule.weight) != rule.weight or rule.weight < 1:
                raise ValueError(f"rule {rule.name!r}: weight must be a positive integer")
            if rule.priority < 0:
                raise ValueError(f"rule {rule.name!r}: negative priority class")
        classes = sorted({r.priority for r in self.rules})
        if classes != list(range(len(classes))):
            raise ValueError(f"priority classes must be contiguous from 0, got {classes}")
        self.paired = tuple(denext(r.formula) for r in self.rules)

    @classmethod
    def from_texts(cls, alphabet, rules: Sequence) -> "PrioritizedSpec":
        """``rules`` holds ``(name, formula_text, weight, priority)`` tuples."""
        built = []
        for name, text, weight, priority in rules:
            formula = parse(text)
            if not isinstance(formula, GXFormula):
                raise ValueError(f"rule {name!r} must not use paired atoms")
            built.append(Rule(name, formula, int(weight), int(priority)))
        return cls(frozenset(alphabet), tuple(built))

    @property
    def num_classes(self) -> int:
        return max(r.priority for r in self.rules) + 1

    @property
    def cost_length(self) -> int:
        return self.num_classes + 1

    def zero_cost(self) -> CostVector:
        return (0.0,) * self.cost_length

    def pair_violated(self, index: int, label: frozenset, next_label: frozenset) -> bool:
        key = (index, label, next_label)
        hit = self._violated.get(key)
        if hit is None:
            hit = not eval_pair(self.paired[index], label, next_label)
            self._violated[key] = hit
        return hit

    def state_unsafe(self, index: int, label: frozenset) -> bool:
        """Whether no successor label can satisfy rule ``index`` from ``label`` (memoised)."""
        key = (index, label)
        hit = self._unsafe_state.get(key)
        if hit is None:
            hit = _no_successor_satisfies(self.paired[index].body, label)
            self._unsafe_state[key] = hit
        return hit


def _no_successor_satisfies(body, label) -> bool:
    # Only propositions read in second coordinates can influence the outcome.
    seconds = sorted(second_propositions(body))
    for bits in itertools.product((False, True), repeat=len(seconds)):
        successor = frozenset(n for n, b in zip(seconds, bits) if b)
        if eval_pair(body, label, successor):
            return False
    return True


def tilde_lambda(letter: TimedLetter, formula: GFormula, alphabet=None) -> float:
    """Violation charged to a letter whose outgoing pair violates ``formula``.

    The letter's duration if every successor label violates the formula
    (an unsafe state), otherwise 1 (an unsafe transition).
    """
    body = formula.body if isinstance(formula, GFormula) else formula
    if alphabet is not None:
        extra = letter.label - frozenset(alphabet)
        if extra:
            raise AlphabetError(f"label has propositions outside the alphabet: {sorted(extra)}")
    return letter.duration if _no_successor_satisfies(body, letter.label) else 1.0


def level_of_unsafety(word: TimedWord, formula: GFormula | GXFormula) -> float:
    """Sum of :func:`tilde_lambda` over letters whose outgoing pair is violated.

    The last letter is paired with itself.
    """
    paired = denext(formula) if isinstance(formula, GXFormula) else formula
    letters = word.letters
    total = 0.0
    for i, letter in enumerate(letters):
        nxt = letters[i + 1].label if i + 1 < len(letters) else letter.label
        if not eval_pair(paired, letter.label, nxt):
            total += tilde_lambda(letter, paired)
    return total


def unsafety_vector(word: TimedWord, spec: PrioritizedSpec) -> tuple:
    """Weighted per-class unsafety, one component per priority class."""
    labels = word.labels
    for label in labels:
        extra = label - spec.alphabet
        if extra:
            raise AlphabetError(f"label has propositions outside the alphabet: {sorted(extra)}")
    out = [0.0] * spec.num_classes
    n = len(labels)
    for k, rule in enumerate(spec.rules):
        level = 0.0
        for i in range(n):
            nxt = labels[i + 1] if i + 1 < n else labels[i]
            if spec.pair_violated(k, labels[i], nxt):
                level += word.letters[i].duration if spec.state_unsafe(k, labels[i]) else 1.0
        out[rule.priority] += rule.weight * level
    return tuple(out)


def word_cost(word: TimedWord, spec: PrioritizedSpec, elapsed: float) -> CostVector:
    """Unsafety vector with the elapsed time appended."""
    return unsafety_vector(word, spec) + (float(elapsed),)


def cost_add(a: CostVector, b: CostVector) -> CostVector:
    if len(a) != len(b):
        raise ValueError(f"cost length mismatch: {len(a)} != {len(b)}")
    return tuple(x + y for x, y in zip(a, b))


def lex_compare(a: CostVector, b: CostVector) -> int:
    """-1, 0 or 1 as ``a`` is lexicographically less than, equal to or greater than ``b``."""
    if len(a) != len(b):
        raise ValueError(f"cost length mismatch: {len(a)} != {len(b)}")
    for x, y in zip(a, b):
        if x < y:
            return -1
        if x > y:
            return 1
    return 0
