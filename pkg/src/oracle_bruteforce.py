"""
Brute-force oracles
Slow, independent enumerations used to cross-check the series, Möbius and stability
machinery
"""

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import sympy

from src.dsc_graph import protection_search
from src.exceptions import BudgetExceeded
from src.markov_engine import SystemMobiusTransform
from src.polynomials import Number, to_sympy
from src.system_model import ConcurrentSystem, MobiusMatrix
from src.trace_core import Alphabet, enumerate_cliques, is_normal_pair, mobius_inverse, mobius_transform, normal_form

logger = logging.getLogger(__name__)

MAX_CENSUS_LENGTH = 12
MAX_CENSUS_WORDS = 10 ** 7

Bucket = Tuple[str, str, int]


@dataclass(frozen=True, eq=False)
class TraceCensus:
    """Count and weighted sum of the traces from α to β, per length"""

    states: Tuple[str, ...]
    max_len: int
    counts: Dict[Bucket, int] = field(default_factory=dict)
    weights: Dict[Bucket, Number] = field(default_factory=dict)

    def count(self, alpha: str, beta: str, length: int) -> int:
        return self.counts.get((alpha, beta, length), 0)

    def weight(self, alpha: str, beta: str, length: int) -> Number:
        return self.weights.get((alpha, beta, length), 0)

    def totals_by_length(self) -> List[int]:
        totals = [0] * (self.max_len + 1)
        for (_, _, length), count in self.counts.items():
            totals[length] += count
        return totals

    def frame(self) -> pd.DataFrame:
        rows = [{'from': a, 'to': b, 'length': n, 'count': self.counts[(a, b, n)],
                 'weight': float(self.weights[(a, b, n)])}
                for (a, b, n) in sorted(self.counts, key=lambda key: (self.states.index(key[0]),
                                                                      self.states.index(key[1]), key[2]))]
        return pd.DataFrame(rows, columns=['from', 'to', 'length', 'count', 'weight'])


def census(system: ConcurrentSystem, max_len: int) -> TraceCensus:
    """Enumerate words up to max_len from every state, deduplicated by normal form"""
    if max_len > MAX_CENSUS_LENGTH:
        raise BudgetExceeded(f"census length {max_len} exceeds {MAX_CENSUS_LENGTH}")
    counts: Dict[Bucket, int] = defaultdict(int)
    weights: Dict[Bucket, Number] = defaultdict(int)
    visited = 0

    for alpha in system.states:
        seen = set()
        stack: List[Tuple[Tuple[str, ...], str, Number]] = [((), alpha, Fraction(1))]
        while stack:
            word, state, weight = stack.pop()
            visited += 1
            if visited > MAX_CENSUS_WORDS:
                raise BudgetExceeded(f"census visited more than {MAX_CENSUS_WORDS} words")
            key = normal_form(system.alphabet, word).cliques
            if key not in seen:
                seen.add(key)
                counts[(alpha, state, len(word))] += 1
                weights[(alpha, state, len(word))] += weight
            if len(word) == max_len:
                continue
            for letter in reversed(system.enabled_letters(state)):
                stack.append((word + (letter,), system.action[(state, letter)],
                               weight * system.weights[(state, letter)]))

    logger.debug(f"census to length {max_len}: {visited} words, {sum(counts.values())} traces")
    return TraceCensus(states=system.states, max_len=max_len, counts=dict(counts), weights=dict(weights))


def census_by_normal_forms(system: ConcurrentSystem, max_len: int) -> TraceCensus:
    """Same buckets built from clique sequences c1 -> c2 -> ... instead of words"""
    if max_len > MAX_CENSUS_LENGTH:
        raise BudgetExceeded(f"census length {max_len} exceeds {MAX_CENSUS_LENGTH}")
    counts: Dict[Bucket, int] = defaultdict(int)
    weights: Dict[Bucket, Number] = defaultdict(int)
    for alpha in system.states:
        counts[(alpha, alpha, 0)] += 1
        weights[(alpha, alpha, 0)] += Fraction(1)
        stack = [(c, system.act_clique(alpha, c), c.bit_count(), system.clique_weight(alpha, c))
                 for c in system.enabled_cliques(alpha) if c.bit_count() <= max_len]
        while stack:
            last, state, length, weight = stack.pop()
            counts[(alpha, state, length)] += 1
            weights[(alpha, state, length)] += weight
            for d in system.enabled_cliques(state):
                if length + d.bit_count() <= max_len and is_normal_pair(system.alphabet, last, d):
                    stack.append((d, system.act_clique(state, d), length + d.bit_count(),
                                  weight * system.clique_weight(state, d)))
    return TraceCensus(states=system.states, max_len=max_len, counts=dict(counts), weights=dict(weights))


def series_coefficients(matrix: MobiusMatrix, max_len: int) -> List[sympy.Matrix]:
    """Taylor coefficients G_0..G_L of M(t)^-1 from M G = Id"""
    size = matrix.size
    blocks = [sympy.Matrix([[to_sympy(value) for value in row] for row in matrix.coefficient_matrix(k)])
              if size else sympy.zeros(0, 0)
              for k in range(matrix.degree + 1)]
    coefficients = [sympy.eye(size)]
    for n in range(1, max_len + 1):
        total = sympy.zeros(size, size)
        for k in range(1, min(n, matrix.degree) + 1):
            total += blocks[k] * coefficients[n - k]
        coefficients.append(-total)
    return coefficients


def growth_series_at(matrix: MobiusMatrix, s: float, terms: int = 2000) -> np.ndarray:
    """Partial sum of the series of M(t)^-1 at t = s, term n being G_n s^n"""
    size = matrix.size
    scaled = [matrix.array[k] * s ** k for k in range(matrix.degree + 1)]
    recent = [np.eye(size)]
    total = np.eye(size)
    for n in range(1, terms + 1):
        term = -sum(scaled[k] @ recent[-k] for k in range(1, min(n, matrix.degree) + 1))
        recent = (recent + [term])[-matrix.degree:]
        total += term
    return total


@dataclass(frozen=True)
class SeriesCheck:
    passed: bool
    checked: int
    first_mismatch: Optional[Tuple[str, str, int, str, str]] = None


def series_check(series_census: TraceCensus, matrix: MobiusMatrix, max_len: int) -> SeriesCheck:
    """Series of M(t)^-1 against the census weighted sums, exactly for rational weights"""
    coefficients = series_coefficients(matrix, max_len)
    checked = 0
    for n in range(max_len + 1):
        for i, alpha in enumerate(matrix.states):
            for j, beta in enumerate(matrix.states):
                expected = coefficients[n][i, j]
                observed = series_census.weight(alpha, beta, n)
                checked += 1
                if matrix.exact:
                    agree = expected == to_sympy(observed)
                else:
                    agree = math.isclose(float(expected), float(observed), rel_tol=1e-9, abs_tol=1e-12)
                if not agree:
                    logger.info(f"series mismatch at ({alpha},{beta}) degree {n}: {expected} vs {observed}")
                    return SeriesCheck(passed=False, checked=checked,
                                       first_mismatch=(alpha, beta, n, str(expected), str(observed)))
    return SeriesCheck(passed=True, checked=checked)


def mobius_roundtrip_check(alphabet: Alphabet, trials: int = 3, seed: int = 0) -> bool:
    """Random rational clique functions survive transform followed by inversion"""
    rng = np.random.default_rng(seed)
    cliques = enumerate_cliques(alphabet)
    for _ in range(trials):
        f = {c: Fraction(int(rng.integers(-50, 51)), int(rng.integers(1, 21))) for c in cliques}
        if mobius_inverse(alphabet, mobius_transform(alphabet, f)) != f:
            return False
    return True


@dataclass(frozen=True)
class StabilityCrossCheck:
    certified: Tuple[Tuple[str, str], ...]
    unstable: Tuple[Tuple[str, str], ...]
    mismatches: Tuple[Tuple[str, str], ...]

    @property
    def passed(self) -> bool:
        return not self.mismatches


def stability_cross_check(system: ConcurrentSystem, transform: SystemMobiusTransform,
                          depth: int = 8, tol: float = 1e-9) -> StabilityCrossCheck:
    """Every protection certificate must sit on a vertex with h > tol"""
    certified, unstable, mismatches = [], [], []
    for alpha in system.states:
        for c in system.enabled_cliques(alpha):
            label = (alpha, system.alphabet.label(c))
            stable = float(transform.value(alpha, c)) > tol
            if not stable:
                unstable.append(label)
            result = protection_search(system, alpha, c, depth)
            if result.certificate is not None:
                certified.append(label)
                if not stable:
                    mismatches.append(label)
    return StabilityCrossCheck(certified=tuple(certified), unstable=tuple(unstable), mismatches=tuple(mismatches))
