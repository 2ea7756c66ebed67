"""
Trace monoid combinatorics
Cliques are bitmasks over letter indices, traces are kept in Cartier-Foata normal form
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, Iterator, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx

from src.exceptions import (
    DuplicateLetter,
    NoRootInUnitInterval,
    NonPositiveWeight,
    NotADivisor,
    ReflexivePair,
    UnknownLetter,
)
from src.polynomials import Number, smaller_modulus_roots, smallest_positive_root

logger = logging.getLogger(__name__)

EMPTY_LABEL = 'ε'

Clique = int
Word = Union[str, Sequence[str]]


def bits(mask: int) -> Iterator[int]:
    """Indices set in mask, ascending"""
    index = 0
    while mask:
        if mask & 1:
            yield index
        mask >>= 1
        index += 1


def clique_size(mask: Clique) -> int:
    return mask.bit_count()


def clique_key(mask: Clique) -> Tuple[int, Tuple[int, ...]]:
    return (mask.bit_count(), tuple(bits(mask)))


@dataclass(frozen=True)
class Alphabet:
    """Letters with an irreflexive symmetric independence relation"""

    letters: Tuple[str, ...]
    independence: FrozenSet[FrozenSet[str]]
    index: Dict[str, int] = field(init=False, repr=False, compare=False)
    independent_masks: Tuple[int, ...] = field(init=False, repr=False, compare=False)
    irreducible: bool = field(init=False, compare=False)

    def __post_init__(self):
        index = {letter: i for i, letter in enumerate(self.letters)}
        masks = [0] * len(self.letters)
        for pair in self.independence:
            a, b = sorted(pair, key=index.__getitem__)
            masks[index[a]] |= 1 << index[b]
            masks[index[b]] |= 1 << index[a]

        dependence = nx.Graph()
        dependence.add_nodes_from(self.letters)
        for a, b in combinations(self.letters, 2):
            if frozenset((a, b)) not in self.independence:
                dependence.add_edge(a, b)
        connected = bool(self.letters) and nx.is_connected(dependence)

        object.__setattr__(self, 'index', index)
        object.__setattr__(self, 'independent_masks', tuple(masks))
        object.__setattr__(self, 'irreducible', connected)

    @property
    def size(self) -> int:
        return len(self.letters)

    @property
    def trivial(self) -> bool:
        return not self.letters

    @property
    def full_mask(self) -> int:
        return (1 << len(self.letters)) - 1

    @property
    def single_char(self) -> bool:
        return all(len(letter) == 1 for letter in self.letters)

    def letter_index(self, letter: str) -> int:
        try:
            return self.index[letter]
        except KeyError:
            raise UnknownLetter(letter) from None

    def dependent_mask(self, i: int) -> int:
        """Letters dependent on letter i, i itself included"""
        return self.full_mask & ~self.independent_masks[i]

    def are_independent(self, a: str, b: str) -> bool:
        return frozenset((a, b)) in self.independence

    def mask_of(self, letters: Iterable[str]) -> Clique:
        mask = 0
        for letter in letters:
            mask |= 1 << self.letter_index(letter)
        return mask

    def letters_of(self, mask: Clique) -> Tuple[str, ...]:
        return tuple(self.letters[i] for i in bits(mask))

    def is_clique(self, mask: Clique) -> bool:
        return all(not (mask & ~(1 << i) & ~self.independent_masks[i]) for i in bits(mask))

    def join(self, letters: Sequence[str]) -> str:
        if not letters:
            return EMPTY_LABEL
        return ''.join(letters) if self.single_char else '+'.join(letters)

    def label(self, mask: Clique) -> str:
        return self.join(self.letters_of(mask))

    def parse_word(self, word: Word) -> List[str]:
        if isinstance(word, str):
            if word in ('', EMPTY_LABEL):
                return []
            if word in self.index:
                return [word]
            if self.single_char:
                return list(word)
            return [part for part in word.replace('+', ' ').split() if part]
        return list(word)

    def parse_clique(self, label: str) -> Clique:
        return self.mask_of(self.parse_word(label))

    def without(self, letter: str) -> 'Alphabet':
        self.letter_index(letter)
        return Alphabet(
            letters=tuple(a for a in self.letters if a != letter),
            independence=frozenset(pair for pair in self.independence if letter not in pair),
        )


def validate_alphabet(letters: Sequence[str], pairs: Iterable[Sequence[str]]) -> Alphabet:
    """Check letters and independence pairs and build the alphabet"""
    declared = set()
    for letter in letters:
        if letter in declared:
            raise DuplicateLetter(letter)
        declared.add(letter)

    independence = set()
    for pair in pairs:
        a, b = pair
        for letter in (a, b):
            if letter not in declared:
                raise UnknownLetter(letter, where='independence relation')
        if a == b:
            raise ReflexivePair(a)
        independence.add(frozenset((a, b)))

    alphabet = Alphabet(letters=tuple(letters), independence=frozenset(independence))
    if alphabet.trivial:
        logger.info("alphabet is empty: trivial monoid")
    elif not alphabet.irreducible:
        logger.info("dependence graph is disconnected: monoid is not irreducible")
    return alphabet


@lru_cache(maxsize=128)
def enumerate_cliques(alphabet: Alphabet) -> Tuple[Clique, ...]:
    """All cliques, ε included, ordered by size then member indices"""
    cliques = []
    for size in range(alphabet.size + 1):
        for combo in combinations(range(alphabet.size), size):
            mask = sum(1 << i for i in combo)
            if alphabet.is_clique(mask):
                cliques.append(mask)
    return tuple(cliques)


def max_clique_size(alphabet: Alphabet) -> int:
    return max(clique_size(c) for c in enumerate_cliques(alphabet))


def is_normal_pair(alphabet: Alphabet, c1: Clique, c2: Clique) -> bool:
    """c1 -> c2: every letter of c2 depends on some letter of c1"""
    return all(c1 & alphabet.dependent_mask(b) for b in bits(c2))


def is_parallel(alphabet: Alphabet, c: Clique, d: Clique) -> bool:
    return not (c & d) and alphabet.is_clique(c | d)


@dataclass(frozen=True)
class Trace:
    """A trace stored as its sequence of non-empty normal-form cliques"""

    alphabet: Alphabet
    cliques: Tuple[Clique, ...] = ()

    @property
    def length(self) -> int:
        return sum(clique_size(c) for c in self.cliques)

    @property
    def height(self) -> int:
        return len(self.cliques)

    @property
    def word(self) -> Tuple[str, ...]:
        return tuple(letter for c in self.cliques for letter in self.alphabet.letters_of(c))

    @property
    def first_clique(self) -> Clique:
        return self.cliques[0] if self.cliques else 0

    @property
    def content(self) -> int:
        """Mask of the letters occurring in the trace"""
        mask = 0
        for c in self.cliques:
            mask |= c
        return mask

    def sort_key(self):
        return (self.length, tuple(clique_key(c) for c in self.cliques))

    def label(self) -> str:
        return self.alphabet.join(self.word)

    def __str__(self) -> str:
        if not self.cliques:
            return EMPTY_LABEL
        return ''.join(f"({self.alphabet.label(c)})" for c in self.cliques)


def empty_trace(alphabet: Alphabet) -> Trace:
    return Trace(alphabet, ())


def normal_form(alphabet: Alphabet, word: Word) -> Trace:
    """
    Cartier-Foata normal form of a word

    Letters are stacked as a heap: each letter lands one level above the highest
    letter it depends on, and the levels are the normal-form cliques.
    """
    levels: List[int] = []
    top = [0] * alphabet.size
    for letter in alphabet.parse_word(word):
        i = alphabet.letter_index(letter)
        level = 1 + max((top[j] for j in bits(alphabet.dependent_mask(i))), default=0)
        if level > len(levels):
            levels.append(0)
        levels[level - 1] |= 1 << i
        top[i] = level
    return Trace(alphabet, tuple(levels))


def trace_of_cliques(alphabet: Alphabet, cliques: Sequence[Clique]) -> Trace:
    return normal_form(alphabet, [letter for c in cliques for letter in alphabet.letters_of(c)])


def concat(x: Trace, y: Trace) -> Trace:
    return normal_form(x.alphabet, x.word + y.word)


def append_letter(x: Trace, letter: str) -> Trace:
    return normal_form(x.alphabet, x.word + (letter,))


def remove_front_letter(y: Trace, letter: str) -> Optional[Trace]:
    """The trace z with y = letter.z, or None when letter is not in the first clique"""
    i = y.alphabet.letter_index(letter)
    if not (y.first_clique >> i) & 1:
        return None
    word = list(y.word)
    # first occurrence lies in the first clique, which the linearization lists first
    word.remove(letter)
    return normal_form(y.alphabet, word)


def _pull_out(x: Trace, y: Trace) -> Optional[Trace]:
    current = y
    for letter in x.word:
        current = remove_front_letter(current, letter)
        if current is None:
            return None
    return current


def left_divides(x: Trace, y: Trace) -> bool:
    return _pull_out(x, y) is not None


def left_quotient(x: Trace, y: Trace) -> Trace:
    """The unique z with y = x.z"""
    quotient = _pull_out(x, y)
    if quotient is None:
        raise NotADivisor(f"{x} does not left-divide {y}")
    return quotient


def _letter_weights(alphabet: Alphabet, letter_weights: Optional[Mapping[str, Number]]) -> Dict[str, Number]:
    weights = {letter: Fraction(1) for letter in alphabet.letters}
    for letter, value in (letter_weights or {}).items():
        alphabet.letter_index(letter)
        if not value > 0:
            raise NonPositiveWeight(f"letter {letter!r}", value)
        weights[letter] = value
    return weights


def clique_weight(alphabet: Alphabet, weights: Mapping[str, Number], mask: Clique) -> Number:
    value = Fraction(1)
    for letter in alphabet.letters_of(mask):
        value = value * weights[letter]
    return value


def mobius_polynomial(alphabet: Alphabet, letter_weights: Optional[Mapping[str, Number]] = None) -> List[Number]:
    """Ascending coefficients of sum over cliques of weight * (-t)^size"""
    weights = _letter_weights(alphabet, letter_weights)
    coefficients: List[Number] = [Fraction(0)] * (max_clique_size(alphabet) + 1)
    for c in enumerate_cliques(alphabet):
        size = clique_size(c)
        coefficients[size] += (-1) ** size * clique_weight(alphabet, weights, c)
    return coefficients


def mobius_transform(alphabet: Alphabet, f: Mapping[Clique, Number]) -> Dict[Clique, Number]:
    """h(c) = sum over cliques c' containing c of (-1)^(|c'|-|c|) f(c')"""
    cliques = enumerate_cliques(alphabet)
    h: Dict[Clique, Number] = {}
    for gamma in cliques:
        total: Number = 0
        for other in cliques:
            if other & gamma == gamma:
                term = f.get(other, 0)
                total = total - term if (clique_size(other) - clique_size(gamma)) % 2 else total + term
        h[gamma] = total
    return h


def mobius_inverse(alphabet: Alphabet, h: Mapping[Clique, Number]) -> Dict[Clique, Number]:
    """f(c) = sum over cliques c' containing c of h(c')"""
    cliques = enumerate_cliques(alphabet)
    return {gamma: sum((h.get(other, 0) for other in cliques if other & gamma == gamma), 0)
            for gamma in cliques}


def smallest_root_monoid(coefficients: Sequence[Number], upper: float = 1.0, certify: bool = False) -> float:
    """Smallest positive root of a Möbius polynomial; lies in (0, 1] for the counting valuation"""
    root = smallest_positive_root(coefficients, upper=upper)
    if root is None:
        raise NoRootInUnitInterval(f"Möbius polynomial has no root in (0, {upper}]")
    if certify:
        smaller = smaller_modulus_roots(coefficients, root)
        if smaller:
            logger.warning(f"roots of smaller modulus than {root:.12g}: {smaller}")
    return root


def clique_digraph(alphabet: Alphabet) -> nx.DiGraph:
    """Non-empty cliques joined by normal-pair edges"""
    graph = nx.DiGraph()
    cliques = [c for c in enumerate_cliques(alphabet) if c]
    for c in cliques:
        graph.add_node(c, label=alphabet.label(c))
    for c in cliques:
        for d in cliques:
            if is_normal_pair(alphabet, c, d):
                graph.add_edge(c, d)
    return graph
