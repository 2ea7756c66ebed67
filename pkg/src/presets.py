"""
Preset systems
Worked examples used by the CLI and the tests: the three-state toy system, the dimer
monoid, free monoids, the cyclic-heap system on six letters, doubled trace monoids
(dining philosophers) and the free-monoid realization of a finite Markov chain.
"""

import logging
import string
from collections import deque
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.exceptions import ParseError, UnknownPreset
from src.polynomials import Number
from src.system_model import ConcurrentSystem, Entry, validate_system, wrap_monoid
from src.trace_core import (
    Alphabet,
    Trace,
    append_letter,
    empty_trace,
    enumerate_cliques,
    left_divides,
    left_quotient,
    normal_form,
    validate_alphabet,
)

logger = logging.getLogger(__name__)

PRESET_NAMES = ('toy', 'dimer', 'free', 'cyc6', 'philosophers', 'doubled')

CYC6_HEAP = '031425'
CYC6_SIZE = 6


def letter_names(n: int) -> List[str]:
    if n <= len(string.ascii_lowercase):
        return list(string.ascii_lowercase[:n])
    return [f"a{i}" for i in range(n)]


def toy() -> ConcurrentSystem:
    """Three states acted on by ⟨a, b, c | ab = ba⟩, with the counting valuation"""
    alphabet = validate_alphabet(['a', 'b', 'c'], [['a', 'b']])
    action = {
        ('0', 'a'): '1', ('0', 'b'): '2',
        ('1', 'a'): '0', ('1', 'b'): '2',
        ('2', 'a'): '2', ('2', 'b'): '2', ('2', 'c'): '0',
    }
    return validate_system(alphabet, ['0', '1', '2'], action, name='toy')


def dimer_alphabet() -> Alphabet:
    return validate_alphabet(['a', 'b', 'c', 'd'], [['a', 'c'], ['a', 'd'], ['b', 'd']])


def dimer() -> ConcurrentSystem:
    return wrap_monoid(dimer_alphabet(), name='dimer')


def free(n: int = 2) -> ConcurrentSystem:
    if n < 1:
        raise ParseError(f"free monoid needs at least one letter, got {n}", 'n')
    return wrap_monoid(validate_alphabet(letter_names(n), []), name=f"free-{n}")


def cycle_alphabet(n: int) -> Alphabet:
    """Letters around an n-cycle; neighbours depend on each other, the rest commute"""
    if n < 3:
        raise ParseError(f"cycle alphabet needs at least three letters, got {n}", 'n')
    letters = letter_names(n)
    pairs = [[letters[i], letters[j]] for i in range(n) for j in range(i + 1, n)
             if (j - i) % n not in (1, n - 1)]
    return validate_alphabet(letters, pairs)


def doubled(alphabet: Alphabet, name: str = '') -> ConcurrentSystem:
    """
    A trace monoid acting on its own cliques

    A letter leaves the clique when it is already in it, joins it when the result is
    still a clique, and kills the run otherwise.
    """
    cliques = enumerate_cliques(alphabet)
    labels = {c: alphabet.label(c) for c in cliques}
    action: Dict[Entry, str] = {}
    for c in cliques:
        for i, letter in enumerate(alphabet.letters):
            bit = 1 << i
            if c & bit:
                action[(labels[c], letter)] = labels[c & ~bit]
            elif alphabet.is_clique(c | bit):
                action[(labels[c], letter)] = labels[c | bit]
    return validate_system(alphabet, [labels[c] for c in cliques], action, name=name or 'doubled')


def philosophers(n: int = 5) -> ConcurrentSystem:
    return doubled(cycle_alphabet(n), name=f"philosophers-{n}")


def _canonical(w: Trace, y: Trace) -> Trace:
    while y.cliques and left_divides(w, y):
        y = left_quotient(w, y)
    return y


def cyc6() -> ConcurrentSystem:
    """
    Cyclic heap on Z/6Z

    Letters i and j depend on each other when they are equal or adjacent mod 6. States
    are the left divisors of w.w taken up to a leading copy of w = (03)(14)(25); a letter
    a is enabled at x when x.a still divides w.w.w.
    """
    letters = [str(i) for i in range(CYC6_SIZE)]
    pairs = [[letters[i], letters[j]] for i in range(CYC6_SIZE) for j in range(i + 1, CYC6_SIZE)
             if (j - i) % CYC6_SIZE not in (1, CYC6_SIZE - 1)]
    alphabet = validate_alphabet(letters, pairs)
    w = normal_form(alphabet, CYC6_HEAP)
    bound = normal_form(alphabet, CYC6_HEAP * 3)

    start = empty_trace(alphabet)
    found: Dict[Tuple[int, ...], Trace] = {start.cliques: start}
    edges: List[Tuple[Trace, str, Trace]] = []
    queue = deque([start])
    while queue:
        x = queue.popleft()
        for letter in letters:
            y = append_letter(x, letter)
            if not left_divides(y, bound):
                continue
            target = _canonical(w, y)
            if target.cliques not in found:
                found[target.cliques] = target
                queue.append(target)
            edges.append((x, letter, target))

    ordered = sorted(found.values(), key=lambda x: (x.length, x.label()))
    names = {x.cliques: x.label() for x in ordered}
    action = {(names[x.cliques], letter): names[y.cliques] for x, letter, y in edges}
    logger.debug(f"cyclic heap system: {len(ordered)} states, {len(action)} transitions")
    return validate_system(alphabet, [names[x.cliques] for x in ordered], action, name='cyc6')


def markov_chain_system(matrix: Sequence[Sequence[Number]], names: Optional[Sequence[str]] = None,
                        name: str = 'markov-chain') -> ConcurrentSystem:
    """
    Free-monoid system of a finite Markov chain

    One letter per state; letter e moves any state to e and weighs P[α, e]. With a
    stochastic P the valuation is already probabilistic and the chain has speedup 1.
    """
    size = len(matrix)
    if names is None:
        names = list(string.ascii_uppercase[:size]) if size <= 26 else [f"E{i}" for i in range(size)]
    if len(names) != size or any(len(row) != size for row in matrix):
        raise ParseError('transition matrix must be square and match the state names', 'matrix')
    alphabet = validate_alphabet(list(names), [])
    action: Dict[Entry, str] = {}
    weights: Dict[Entry, Number] = {}
    for i, alpha in enumerate(names):
        for j, target in enumerate(names):
            value = matrix[i][j]
            if isinstance(value, (np.floating, np.integer)):
                value = value.item()
            if value > 0:
                action[(alpha, target)] = target
                weights[(alpha, target)] = value
    return validate_system(alphabet, list(names), action, weights, name=name)


def _doubled_from_file(path: Optional[str]) -> ConcurrentSystem:
    if not path:
        raise ParseError('the doubled preset needs an alphabet file', 'alphabet')
    from src.model_document import parse_alphabet, read_json

    document = read_json(path)
    if not isinstance(document, dict):
        raise ParseError('alphabet document must be a JSON object', path)
    return doubled(parse_alphabet(document), name=f"doubled-{document.get('name') or 'alphabet'}")


def build_preset(name: str, n: Optional[int] = None, alphabet_path: Optional[str] = None) -> ConcurrentSystem:
    builders: Dict[str, Callable[[], ConcurrentSystem]] = {
        'toy': toy,
        'dimer': dimer,
        'cyc6': cyc6,
        'free': lambda: free(n if n is not None else 2),
        'philosophers': lambda: philosophers(n if n is not None else 5),
        'doubled': lambda: _doubled_from_file(alphabet_path),
    }
    key = name.strip().lower()
    if key not in builders:
        raise UnknownPreset(name)
    system = builders[key]()
    logger.info(f"built preset {system.name}: {len(system.states)} states, {system.alphabet.size} letters")
    return system

