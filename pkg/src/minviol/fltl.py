"""Safety formulas of the form ``G P`` over single and paired propositions.

Two formula families are supported:

* ``GXFormula``: ``G P`` where ``P`` is a Boolean combination of atoms ``p``
  and ``X p`` (proposition now / proposition in the next letter).
* ``GFormula``: ``G P`` where ``P`` is a Boolean combination of paired atoms
  ``(p, q)`` interpreted over two consecutive letters.

``denext`` maps the first family to the second without changing the
connective tree, so that evaluation of a word only needs to look at
consecutive pairs of letters.

Text grammar (precedence from tightest to loosest)::

    atom    := IDENT | True | False | X atom-name | '(' name ',' name ')'
    unary   := '!' unary | atom | '(' implies ')'
    and     := unary ('&' unary)*
    or      := and ('|' and)*
    implies := or ('->' implies)?          # right associative
    formula := 'G' unary-or-parenthesised body
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

__all__ = [
    "Prop",
    "TRUE",
    "FALSE",
    "Atom",
    "Next",
    "Pair",
    "Not",
    "And",
    "Or",
    "Implies",
    "GXFormula",
    "GFormula",
    "FormulaError",
    "AlphabetError",
    "BudgetError",
    "parse",
    "parse_gx",
    "parse_g",
    "to_text",
    "eval_prop",
    "eval_pair",
    "denext",
    "eval_gx_word",
    "check_stutter_invariant_bounded",
    "atoms_of",
    "propositions_of",
    "second_propositions",
    "node_count",
]


class FormulaError(ValueError):
    """Malformed formula text or AST."""


class AlphabetError(ValueError):
    """A formula refers to a proposition outside the alphabet."""


class BudgetError(RuntimeError):
    """An exhaustive check would exceed its configured budget."""


@dataclass(frozen=True)
class Prop:
    name: str

    @property
    def is_constant(self) -> bool:
        return self is TRUE or self is FALSE or self.name in _CONSTANT_NAMES

    def __str__(self) -> str:
        return self.name


TRUE = Prop("True")
FALSE = Prop("False")
_CONSTANT_NAMES = {"True": TRUE, "False": FALSE}


@dataclass(frozen=True)
class Atom:
    prop: Prop


@dataclass(frozen=True)
class Next:
    prop: Prop


@dataclass(frozen=True)
class Pair:
    first: Prop
    second: Prop


@dataclass(frozen=True)
class Not:
    operand: "Node"


@dataclass(frozen=True)
class And:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Or:
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Implies:
    left: "Node"
    right: "Node"


Node = Union[Atom, Next, Pair, Not, And, Or, Implies]
_BINARY = (And, Or, Implies)


def _leaves(node: Node) -> Iterator[Node]:
    stack = [node]
    while stack:
        n = stack.pop()
        if isinstance(n, Not):
            stack.append(n.operand)
        elif isinstance(n, _BINARY):
            stack.append(n.right)
            stack.append(n.left)
        elif isinstance(n, (Atom, Next, Pair)):
            yield n
        else:
            raise FormulaError(f"not a formula node: {n!r}")


@dataclass(frozen=True)
class GXFormula:
    """``G body`` with atoms ``p`` and ``X p``."""

    body: Node

    def __post_init__(self):
        for leaf in _leaves(self.body):
            if isinstance(leaf, Pair):
                raise FormulaError("paired atom inside a G/X formula")

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class GFormula:
    """``G body`` with paired atoms only; the image of :func:`denext`."""

    body: Node

    def __post_init__(self):
        for leaf in _leaves(self.body):
            if not isinstance(leaf, Pair):
                raise FormulaError("mixed arity: paired formula contains a single atom")

    def __str__(self) -> str:
        return to_text(self)


# --------------------------------------------------------------------------
# inspection helpers


def atoms_of(node: Node) -> list[Node]:
    return list(_leaves(node))


def propositions_of(formula: GXFormula | GFormula | Node) -> frozenset[str]:
    """Names of non-constant propositions occurring anywhere in the formula."""
    body = formula.body if isinstance(formula, (GXFormula, GFormula)) else formula
    names = set()
    for leaf in _leaves(body):
        props = (leaf.first, leaf.second) if isinstance(leaf, Pair) else (leaf.prop,)
        names.update(p.name for p in props if not p.is_constant)
    return frozenset(names)


def second_propositions(formula: GFormula | Node) -> frozenset[str]:
    """Non-constant propositions occurring in second coordinates of paired atoms."""
    body = formula.body if isinstance(formula, GFormula) else formula
    return frozenset(
        leaf.second.name
        for leaf in _leaves(body)
        if isinstance(leaf, Pair) and not leaf.second.is_constant
    )


def node_count(node: Node) -> int:
    if isinstance(node, Not):
        return 1 + node_count(node.operand)
    if isinstance(node, _BINARY):
        return 1 + node_count(node.left) + node_count(node.right)
    return 1


# --------------------------------------------------------------------------
# evaluation


def _holds(prop: Prop, label: frozenset | set, alphabet) -> bool:
    if prop.name == "True":
        return True
    if prop.name == "False":
        return False
    if alphabet is not None and prop.name not in alphabet:
        raise AlphabetError(f"proposition {prop.name!r} is not in the alphabet")
    return prop.name in label


def _eval(node: Node, atom_value) -> bool:
    if isinstance(node, Not):
        return not _eval(node.operand, atom_value)
    if isinstance(node, And):
        return _eval(node.left, atom_value) and _eval(node.right, atom_value)
    if isinstance(node, Or):
        return _eval(node.left, atom_value) or _eval(node.right, atom_value)
    if isinstance(node, Implies):
        return (not _eval(node.left, atom_value)) or _eval(node.right, atom_value)
    return atom_value(node)


def eval_prop(formula: Node, label, alphabet=None) -> bool:
    """Propositional satisfaction ``label |= formula`` for single-proposition atoms.

    When ``alphabet`` is given, atoms naming a proposition outside it raise
    :class:`AlphabetError`.
    """

    def atom_value(leaf):
        if not isinstance(leaf, Atom):
            raise FormulaError(f"eval_prop expects single atoms, got {leaf!r}")
        return _holds(leaf.prop, label, alphabet)

    return _eval(formula, atom_value)


def eval_pair(formula: Node | GFormula, label, next_label, alphabet=None) -> bool:
    """Satisfaction of a paired formula by the letter pair ``(label, next_label)``."""
    body = formula.body if isinstance(formula, GFormula) else formula

    def atom_value(leaf):
        if not isinstance(leaf, Pair):
            raise FormulaError(f"eval_pair expects paired atoms, got {leaf!r}")
        return _holds(leaf.first, label, alphabet) and _holds(leaf.second, next_label, alphabet)

    return _eval(body, atom_value)


def _denext_node(node: Node) -> Node:
    if isinstance(node, Atom):
        return Pair(node.prop, TRUE)
    if isinstance(node, Next):
        return Pair(TRUE, node.prop)
    if isinstance(node, Not):
        return Not(_denext_node(node.operand))
    if isinstance(node, _BINARY):
        return type(node)(_denext_node(node.left), _denext_node(node.right))
    raise FormulaError(f"cannot rewrite {node!r}")


def denext(formula: GXFormula) -> GFormula:
    """Rewrite ``p`` to ``(p, True)`` and ``X p`` to ``(True, p)``."""
    return GFormula(_denext_node(formula.body))


def eval_gx_word(formula: GXFormula | GFormula, word: Sequence, alphabet=None) -> bool:
    """Satisfaction of a finite word (sequence of label sets).

    Every consecutive pair must satisfy the paired body, and so must the
    terminal pair ``(l_n, l_n)``.
    """
    if len(word) == 0:
        raise ValueError("cannot evaluate an empty word")
    paired = denext(formula) if isinstance(formula, GXFormula) else formula
    for i in range(len(word) - 1):
        if not eval_pair(paired, word[i], word[i + 1], alphabet):
            return False
    return eval_pair(paired, word[-1], word[-1], alphabet)


def check_stutter_invariant_bounded(
    formula: GXFormula,
    alphabet: Iterable[str],
    max_len: int = 5,
    budget: int = 16,
) -> bool:
    """Search for a single-letter duplication that flips satisfaction.

    Returns ``False`` as soon as some word of length ``<= max_len`` and its
    copy with one letter duplicated disagree.  ``True`` only means that no
    counterexample exists up to the bound.  Raises :class:`BudgetError` when
    ``len(alphabet) * max_len`` exceeds ``budget``.
    """
    names = sorted(set(alphabet))
    if max_len < 1:
        raise ValueError("max_len must be positive")
    if len(names) * max_len > budget:
        raise BudgetError(
            f"{len(names)} propositions x length {max_len} exceeds budget {budget}"
        )
    paired = denext(formula)
    letters = [
        frozenset(n for n, bit in zip(names, bits) if bit)
        for bits in itertools.product((False, True), repeat=len(names))
    ]
    for length in range(1, max_len + 1):
        for word in itertools.product(letters, repeat=length):
            sat = eval_gx_word(paired, word)
            for i in range(length):
                stuttered = word[: i + 1] + word[i:]
                if eval_gx_word(paired, stuttered) != sat:
                    return False
    return True


# --------------------------------------------------------------------------
# text syntax

_TOKEN = re.compile(r"\s*(->|[()!&|,]|[A-Za-z_][A-Za-z0-9_']*)")
_KEYWORDS = {"G", "X"}
_CONSTANTS = {"True": TRUE, "TRUE": TRUE, "true": TRUE, "False": FALSE, "FALSE": FALSE, "false": FALSE}


def _tokenize(text: str) -> list[str]:
    pos, tokens = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise FormulaError(f"unexpected character {text[pos:].lstrip()[:1]!r} at offset {pos}")
        tokens.append(m.group(1))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self, k: int = 0):
        j = self.i + k
        return self.tokens[j] if j < len(self.tokens) else None

    def take(self, expected=None) -> str:
        tok = self.peek()
        if tok is None or (expected is not None and tok != expected):
            raise FormulaError(f"expected {expected or 'token'!r}, got {tok!r} in {self.text!r}")
        self.i += 1
        return tok

    def name(self) -> Prop:
        tok = self.take()
        if tok in _CONSTANTS:
            return _CONSTANTS[tok]
        if tok in _KEYWORDS or not re.match(r"[A-Za-z_]", tok):
            raise FormulaError(f"expected a proposition name, got {tok!r}")
        return Prop(tok)

    def formula(self):
        self.take("G")
        body = self.implies()
        if self.peek() is not None:
            raise FormulaError(f"trailing input at {self.peek()!r} in {self.text!r}")
        return body

    def implies(self) -> Node:
        left = self.disj()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.implies())
        return left

    def disj(self) -> Node:
        node = self.conj()
        while self.peek() == "|":
            self.take()
            node = Or(node, self.conj())
        return node

    def conj(self) -> Node:
        node = self.unary()
        while self.peek() == "&":
            self.take()
            node = And(node, self.unary())
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok == "!":
            self.take()
            return Not(self.unary())
        if tok == "X":
            self.take()
            return Next(self.name())
        if tok == "(":
            # a pair looks like "( name , name )"
            if self.peek(2) == "," and self.peek(4) == ")":
                self.take("(")
                first = self.name()
                self.take(",")
                second = self.name()
                self.take(")")
                return Pair(first, second)
            self.take("(")
            node = self.implies()
            self.take(")")
            return node
        return Atom(self.name())


def parse(text: str) -> GXFormula | GFormula:
    """Parse ``G ...`` text into a :class:`GXFormula` or :class:`GFormula`."""
    body = _Parser(text).formula()
    leaves = list(_leaves(body))
    if any(isinstance(leaf, Pair) for leaf in leaves):
        return GFormula(body)
    return GXFormula(body)


def parse_gx(text: str) -> GXFormula:
    f = parse(text)
    if not isinstance(f, GXFormula):
        raise FormulaError(f"expected a formula without paired atoms: {text!r}")
    return f


def parse_g(text: str) -> GFormula:
    f = parse(text)
    if not isinstance(f, GFormula):
        raise FormulaError(f"expected a paired formula: {text!r}")
    return f


def _node_text(node: Node) -> str:
    if isinstance(node, Atom):
        return node.prop.name
    if isinstance(node, Next):
        return f"X {node.prop.name}"
    if isinstance(node, Pair):
        return f"({node.first.name}, {node.second.name})"
    if isinstance(node, Not):
        return f"!{_wrap(node.operand)}"
    op = {And: "&", Or: "|", Implies: "->"}[type(node)]
    return f"{_wrap(node.left)} {op} {_wrap(node.right)}"


def _wrap(node: Node) -> str:
    text = _node_text(node)
    if isinstance(node, _BINARY):
        return f"({text})"
    return text


def to_text(formula: GXFormula | GFormula) -> str:
    """Fully parenthesised text; ``parse(to_text(f)) == f``."""
    return f"G {_wrap(formula.body)}"
