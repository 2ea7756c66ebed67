"""
Concurrent systems
A trace monoid acting partially on a finite state set, with positive weights on the
defined (state, letter) entries; validation, irreducibility, Möbius and growth matrices
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import sympy

from src.exceptions import (
    BudgetExceeded,
    CommutationViolation,
    DuplicateState,
    NonPositiveWeight,
    SingularAtS,
    UnknownLetter,
    UnknownState,
    ValuationInconsistency,
    WeightSupportMismatch,
)
from src.polynomials import Number, is_exact, poly_from_coefficients
from src.trace_core import (
    Alphabet,
    Clique,
    Trace,
    append_letter,
    clique_size,
    empty_trace,
    enumerate_cliques,
    max_clique_size,
)

logger = logging.getLogger(__name__)

SINGLETON_STATE = '*'
MAX_TRAJECTORY_LENGTH = 14
RELATIVE_WEIGHT_TOL = 1e-9

Entry = Tuple[str, str]


@dataclass(frozen=True, eq=False)
class ConcurrentSystem:
    """Validated concurrent system; missing action entries mean the sink ⊥ (None)"""

    alphabet: Alphabet
    states: Tuple[str, ...]
    action: Mapping[Entry, str]
    weights: Mapping[Entry, Number]
    name: str = ''
    state_index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'state_index', {state: i for i, state in enumerate(self.states)})

    @property
    def initial_state(self) -> str:
        return self.states[0]

    @property
    def exact(self) -> bool:
        return all(is_exact(value) for value in self.weights.values())

    def step(self, state: Optional[str], letter: str) -> Optional[str]:
        if state is None:
            return None
        return self.action.get((state, letter))

    def run(self, state: Optional[str], word: Iterable[str]) -> Optional[str]:
        for letter in word:
            state = self.step(state, letter)
            if state is None:
                return None
        return state

    def enabled_letters(self, state: str) -> Tuple[str, ...]:
        return tuple(a for a in self.alphabet.letters if (state, a) in self.action)

    def act_clique(self, state: str, c: Clique) -> Optional[str]:
        return self.run(state, self.alphabet.letters_of(c))

    def enabled_cliques(self, state: str) -> List[Clique]:
        """Non-empty cliques c with state.c defined"""
        return [c for c in enumerate_cliques(self.alphabet) if c and self.act_clique(state, c) is not None]

    def word_weight(self, state: str, word: Iterable[str], values: Optional[Mapping[Entry, Number]] = None) -> Number:
        values = self.weights if values is None else values
        weight: Number = Fraction(1)
        current: Optional[str] = state
        for letter in word:
            nxt = self.step(current, letter)
            if nxt is None:
                return Fraction(0)
            weight = weight * values.get((current, letter), 0)
            current = nxt
        return weight

    def clique_weight(self, state: str, c: Clique, values: Optional[Mapping[Entry, Number]] = None) -> Number:
        letters = self.alphabet.letters_of(c)
        weight = self.word_weight(state, letters, values)
        if logger.isEnabledFor(logging.DEBUG) and len(letters) > 1:
            other = self.word_weight(state, tuple(reversed(letters)), values)
            if not math.isclose(float(weight), float(other), rel_tol=RELATIVE_WEIGHT_TOL, abs_tol=1e-15):
                logger.debug(f"clique {self.alphabet.label(c)} at {state}: weights {weight} and {other} differ")
        return weight


def _weights_agree(left: Number, right: Number) -> bool:
    if is_exact(left) and is_exact(right):
        return left == right
    return math.isclose(float(left), float(right), rel_tol=RELATIVE_WEIGHT_TOL, abs_tol=1e-300)


def validate_system(alphabet: Alphabet, states: Sequence[str], action: Mapping[Entry, str],
                    weights: Optional[Mapping[Entry, Number]] = None, name: str = '') -> ConcurrentSystem:
    """
    Build a concurrent system after checking its shape and semantics

    Args:
        alphabet: validated alphabet
        states: distinct state names, the first one is the reference state
        action: (state, letter) -> state, absent entries are ⊥
        weights: (state, letter) -> positive weight on exactly the defined entries;
            counting valuation when omitted

    Returns:
        The validated ConcurrentSystem
    """
    seen = set()
    for state in states:
        if state in seen:
            raise DuplicateState(state)
        seen.add(state)

    for (state, letter), target in action.items():
        if state not in seen:
            raise UnknownState(state)
        if target not in seen:
            raise UnknownState(target)
        if letter not in alphabet.index:
            raise UnknownLetter(letter, where='alphabet of the action table')

    if weights is None:
        weights = {entry: Fraction(1) for entry in action}
    for (state, letter), value in weights.items():
        if (state, letter) not in action:
            raise WeightSupportMismatch(state, letter, 'weight given where the action is undefined')
        if not value > 0:
            raise NonPositiveWeight(f"({state},{letter})", value)
    for state, letter in action:
        if (state, letter) not in weights:
            raise WeightSupportMismatch(state, letter, 'action defined without a weight')

    system = ConcurrentSystem(alphabet=alphabet, states=tuple(states), action=dict(action),
                              weights=dict(weights), name=name)

    for pair in sorted(alphabet.independence, key=lambda p: sorted(alphabet.index[x] for x in p)):
        a, b = sorted(pair, key=alphabet.index.__getitem__)
        for state in system.states:
            left = system.run(state, (a, b))
            right = system.run(state, (b, a))
            if left != right:
                raise CommutationViolation(state, a, b, left if left is not None else '⊥',
                                           right if right is not None else '⊥')
            if left is not None:
                if not _weights_agree(system.word_weight(state, (a, b)), system.word_weight(state, (b, a))):
                    raise ValuationInconsistency(state, a, b)

    logger.debug(f"validated system {name or '<anonymous>'}: {len(states)} states, {alphabet.size} letters")
    return system


def with_weights(system: ConcurrentSystem, weights: Mapping[Entry, Number], name: Optional[str] = None) -> ConcurrentSystem:
    """Same action with another valuation"""
    return validate_system(system.alphabet, system.states, system.action,
                           {entry: weights[entry] for entry in system.action},
                           name=system.name if name is None else name)


def act(system: ConcurrentSystem, state: str, x: Trace) -> Optional[str]:
    if state not in system.state_index:
        raise UnknownState(state)
    return system.run(state, x.word)


def trace_weight(system: ConcurrentSystem, state: str, x: Trace,
                 values: Optional[Mapping[Entry, Number]] = None) -> Number:
    """lambda_state(x), zero when state.x is ⊥"""
    return system.word_weight(state, x.word, values)


def wrap_monoid(alphabet: Alphabet, letter_weights: Optional[Mapping[str, Number]] = None,
                name: str = '') -> ConcurrentSystem:
    """The monoid acting on a single state"""
    action = {(SINGLETON_STATE, a): SINGLETON_STATE for a in alphabet.letters}
    weights = {(SINGLETON_STATE, a): (letter_weights or {}).get(a, Fraction(1)) for a in alphabet.letters}
    return validate_system(alphabet, (SINGLETON_STATE,), action, weights, name=name)


@dataclass(frozen=True)
class IrreducibilityReport:
    transitive: bool
    non_trivial: bool
    monoid_irreducible: bool
    live: bool

    @property
    def irreducible(self) -> bool:
        return self.transitive and self.non_trivial and self.monoid_irreducible and self.live

    def failed_clauses(self) -> List[str]:
        return [clause for clause in ('transitive', 'non_trivial', 'monoid_irreducible', 'live')
                if not getattr(self, clause)]

    def to_dict(self) -> Dict[str, bool]:
        return {
            'transitive': self.transitive,
            'non_trivial': self.non_trivial,
            'monoid_irreducible': self.monoid_irreducible,
            'live': self.live,
            'irreducible': self.irreducible,
        }


def step_graph(system: ConcurrentSystem) -> nx.DiGraph:
    """One-letter steps between states"""
    graph = nx.DiGraph()
    graph.add_nodes_from(system.states)
    for (state, letter), target in system.action.items():
        if graph.has_edge(state, target):
            graph[state][target]['letters'].append(letter)
        else:
            graph.add_edge(state, target, letters=[letter])
    return graph


def irreducibility_report(system: ConcurrentSystem) -> IrreducibilityReport:
    graph = step_graph(system)
    transitive = bool(system.states) and nx.is_strongly_connected(graph)
    non_trivial = bool(system.action)

    live = bool(system.alphabet.letters)
    for letter in system.alphabet.letters:
        enabled = {state for state in system.states if (state, letter) in system.action}
        reach = set(enabled)
        for state in enabled:
            reach |= nx.ancestors(graph, state)
        if reach != set(system.states):
            logger.debug(f"letter {letter!r} cannot be reached from {sorted(set(system.states) - reach)}")
            live = False
            break

    report = IrreducibilityReport(transitive=transitive, non_trivial=non_trivial,
                                  monoid_irreducible=system.alphabet.irreducible, live=live)
    logger.debug(f"irreducibility of {system.name or '<anonymous>'}: {report.to_dict()}")
    return report


@dataclass(frozen=True, eq=False)
class MobiusMatrix:
    """
    Polynomial matrix over states; entry (α, β) sums weight * (-t)^|c| over the cliques
    c leading from α to β
    """

    states: Tuple[str, ...]
    coefficients: Tuple[Tuple[Tuple[Number, ...], ...], ...]
    exact: bool
    array: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        size = len(self.states)
        degree = max((len(entry) for row in self.coefficients for entry in row), default=1) - 1
        array = np.zeros((degree + 1, size, size))
        for i, row in enumerate(self.coefficients):
            for j, entry in enumerate(row):
                for k, value in enumerate(entry):
                    array[k, i, j] = float(value)
        object.__setattr__(self, 'array', array)

    @property
    def size(self) -> int:
        return len(self.states)

    @property
    def degree(self) -> int:
        return self.array.shape[0] - 1

    def row_degrees(self) -> List[int]:
        degrees = []
        for row in self.coefficients:
            degrees.append(max((k for entry in row for k, value in enumerate(entry) if value != 0), default=0))
        return degrees

    def entry(self, alpha: str, beta: str) -> sympy.Poly:
        i, j = self.states.index(alpha), self.states.index(beta)
        return poly_from_coefficients(self.coefficients[i][j])

    def polys(self) -> List[List[sympy.Poly]]:
        return [[poly_from_coefficients(entry) for entry in row] for row in self.coefficients]

    def at(self, t) -> np.ndarray:
        return np.polynomial.polynomial.polyval(t, self.array)

    def coefficient_matrix(self, k: int) -> List[List[Number]]:
        """Matrix of the t^k coefficients"""
        zero = Fraction(0) if self.exact else 0.0
        return [[entry[k] if k < len(entry) else zero for entry in row] for row in self.coefficients]

    def with_entry(self, alpha: str, beta: str, coefficients: Sequence[Number]) -> 'MobiusMatrix':
        i, j = self.states.index(alpha), self.states.index(beta)
        rows = [list(row) for row in self.coefficients]
        rows[i][j] = tuple(coefficients)
        return MobiusMatrix(self.states, tuple(tuple(row) for row in rows), self.exact)


def mobius_matrix(system: ConcurrentSystem) -> MobiusMatrix:
    size = len(system.states)
    degree = max_clique_size(system.alphabet) if system.alphabet.letters else 0
    zero = Fraction(0) if system.exact else 0.0
    rows = [[[zero] * (degree + 1) for _ in range(size)] for _ in range(size)]
    for i, alpha in enumerate(system.states):
        for c in enumerate_cliques(system.alphabet):
            beta = system.act_clique(alpha, c)
            if beta is None:
                continue
            size_c = clique_size(c)
            weight = system.clique_weight(alpha, c)
            rows[i][system.state_index[beta]][size_c] += (-1) ** size_c * weight
    coefficients = tuple(tuple(tuple(entry) for entry in row) for row in rows)
    return MobiusMatrix(states=system.states, coefficients=coefficients, exact=system.exact)


def growth_matrix_at(matrix: MobiusMatrix, s: float, tol: float = 1e-9) -> np.ndarray:
    """G(s) = M(s)^-1; valid for 0 <= s < rho where every entry is non-negative"""
    m_at_s = matrix.at(s)
    try:
        if np.linalg.cond(m_at_s) > 1e13:
            raise np.linalg.LinAlgError('ill-conditioned')
        growth = np.linalg.inv(m_at_s)
    except np.linalg.LinAlgError as e:
        raise SingularAtS(f"M({s:.12g}) is numerically singular: {e}") from None
    if growth.min() < -tol:
        raise SingularAtS(f"G({s:.12g}) has a negative entry {growth.min():.3g}; s is beyond the characteristic root")
    return growth


def growth_row_sums(growth: np.ndarray) -> np.ndarray:
    return growth.sum(axis=1)


def restrict_letter(system: ConcurrentSystem, letter: str) -> ConcurrentSystem:
    """Drop one letter from the alphabet, keeping the induced action and weights"""
    if letter not in system.alphabet.index:
        raise UnknownLetter(letter)
    alphabet = system.alphabet.without(letter)
    action = {entry: target for entry, target in system.action.items() if entry[1] != letter}
    weights = {entry: value for entry, value in system.weights.items() if entry[1] != letter}
    return ConcurrentSystem(alphabet=alphabet, states=system.states, action=action, weights=weights,
                            name=f"{system.name}\\{letter}" if system.name else '')


def enumerate_trajectories(system: ConcurrentSystem, state: str, max_len: int) -> List[Trace]:
    """All traces x with state.x defined and |x| <= max_len"""
    if max_len > MAX_TRAJECTORY_LENGTH:
        raise BudgetExceeded(f"max_len={max_len} exceeds the guard of {MAX_TRAJECTORY_LENGTH}")
    if state not in system.state_index:
        raise UnknownState(state)
    start = empty_trace(system.alphabet)
    found = {start.cliques: start}
    layer = [(start, state)]
    for _ in range(max_len):
        following = {}
        for trace, current in layer:
            for letter in system.enabled_letters(current):
                extended = append_letter(trace, letter)
                if extended.cliques not in found and extended.cliques not in following:
                    following[extended.cliques] = (extended, system.action[(current, letter)])
        for key, (trace, _) in following.items():
            found[key] = trace
        layer = list(following.values())
    return sorted(found.values(), key=Trace.sort_key)
