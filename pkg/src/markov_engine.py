"""
Markov chain of state-and-cliques
Möbius transform of a valuation per state, the normalizer g, the transition matrix and
initial laws, and stationary distributions of strongly connected pieces
"""

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, FrozenSet, List, Mapping, Optional, Tuple

import networkx as nx
import numpy as np

from src.exceptions import NotStochastic, NotStronglyConnected
from src.polynomials import Number
from src.system_model import SINGLETON_STATE, ConcurrentSystem, Entry, wrap_monoid
from src.trace_core import (
    Alphabet,
    Clique,
    enumerate_cliques,
    is_normal_pair,
    mobius_polynomial,
    mobius_transform,
    smallest_root_monoid,
)

logger = logging.getLogger(__name__)

Vertex = Tuple[str, Clique]


@dataclass(frozen=True, eq=False)
class SystemMobiusTransform:
    """h_α(c) for every state α and clique c, with the clique values f_α(c) it came from"""

    states: Tuple[str, ...]
    h: Dict[Vertex, Number]
    f: Dict[Vertex, Number]

    def value(self, state: str, c: Clique) -> Number:
        return self.h.get((state, c), 0)


def clique_values(system: ConcurrentSystem, f: Mapping[Entry, Number], state: str) -> Dict[Clique, Number]:
    """f_α extended multiplicatively to cliques, zero where α.c is ⊥"""
    values: Dict[Clique, Number] = {}
    for c in enumerate_cliques(system.alphabet):
        values[c] = Fraction(1) if c == 0 else system.clique_weight(state, c, f)
    return values


def system_mobius_transform(system: ConcurrentSystem, f: Mapping[Entry, Number]) -> SystemMobiusTransform:
    h: Dict[Vertex, Number] = {}
    extended: Dict[Vertex, Number] = {}
    for state in system.states:
        values = clique_values(system, f, state)
        for c, value in mobius_transform(system.alphabet, values).items():
            h[(state, c)] = value
        for c, value in values.items():
            extended[(state, c)] = value
    return SystemMobiusTransform(states=system.states, h=h, f=extended)


def g_function(system: ConcurrentSystem, transform: SystemMobiusTransform) -> Dict[Vertex, Number]:
    """g_β(c) = sum of h_β(d) over non-empty d enabled at β with c -> d"""
    g: Dict[Vertex, Number] = {}
    cliques = [c for c in enumerate_cliques(system.alphabet) if c]
    for beta in system.states:
        enabled = system.enabled_cliques(beta)
        for c in cliques:
            g[(beta, c)] = sum((transform.value(beta, d) for d in enabled
                                if is_normal_pair(system.alphabet, c, d)), 0)
    return g


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """
    Transition matrix over state-and-cliques

    Rows whose normalizer g vanishes are dead: they carry no mass and are never
    entered from the initial laws.
    """

    alphabet: Alphabet
    vertices: Tuple[Vertex, ...]
    targets: Tuple[str, ...]
    matrix: np.ndarray
    alternative: np.ndarray
    dead_rows: FrozenSet[int]
    initial: Dict[str, np.ndarray]
    h: Dict[Vertex, float]
    discrepancy: float
    index: Dict[Vertex, int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'index', {vertex: i for i, vertex in enumerate(self.vertices)})

    def label(self, vertex: Vertex) -> str:
        return f"{vertex[0]}-{self.alphabet.label(vertex[1])}"

    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    def live_rows(self) -> List[int]:
        return [i for i in range(len(self.vertices)) if i not in self.dead_rows]

    def restrict(self, vertices) -> np.ndarray:
        rows = [self.index[v] for v in vertices]
        return self.matrix[np.ix_(rows, rows)]


def transition_kernel(system: ConcurrentSystem, transform: SystemMobiusTransform,
                      g: Mapping[Vertex, Number], tol: float = 1e-9) -> TransitionKernel:
    """
    P((α,c),(β,d)) = h_β(d) / g_β(c) for β = α.c and c -> d

    The alternative form f_α(c) h_β(d) / h_α(c) is computed on rows with h_α(c) > tol
    and the largest entrywise gap between the two is kept in discrepancy.
    """
    vertices = [(state, c) for state in system.states for c in system.enabled_cliques(state)]
    index = {vertex: i for i, vertex in enumerate(vertices)}
    size = len(vertices)
    matrix = np.zeros((size, size))
    alternative = np.zeros((size, size))
    dead = set()
    h_clean = {vertex: float(transform.value(*vertex)) for vertex in vertices}
    h_clean = {vertex: (value if value > tol else 0.0) for vertex, value in h_clean.items()}

    for i, (alpha, c) in enumerate(vertices):
        beta = system.act_clique(alpha, c)
        normalizer = float(g[(beta, c)])
        successors = [(beta, d) for d in system.enabled_cliques(beta) if is_normal_pair(system.alphabet, c, d)]
        if normalizer <= tol:
            dead.add(i)
            continue
        h_alpha = h_clean[(alpha, c)]
        f_alpha = float(transform.f[(alpha, c)])
        for successor in successors:
            j = index[successor]
            matrix[i, j] = h_clean[successor] / normalizer
            if h_alpha > 0:
                alternative[i, j] = f_alpha * h_clean[successor] / h_alpha

    comparable = [i for i, vertex in enumerate(vertices) if i not in dead and h_clean[vertex] > 0]
    discrepancy = float(np.max(np.abs(matrix[comparable] - alternative[comparable]))) if comparable else 0.0
    if discrepancy > 1e3 * tol:
        logger.warning(f"transition matrix forms disagree by {discrepancy:.3g}")

    initial = {}
    for state in system.states:
        law = np.zeros(size)
        for vertex in vertices:
            if vertex[0] == state:
                law[index[vertex]] = h_clean[vertex]
        initial[state] = law

    logger.debug(f"transition kernel: {size} state-and-cliques, {len(dead)} dead rows")
    return TransitionKernel(
        alphabet=system.alphabet,
        vertices=tuple(vertices),
        targets=tuple(system.act_clique(alpha, c) for alpha, c in vertices),
        matrix=matrix,
        alternative=alternative,
        dead_rows=frozenset(dead),
        initial=initial,
        h=h_clean,
        discrepancy=discrepancy,
    )


def stationary_by_power_iteration(matrix: np.ndarray, tol: float = 1e-13, max_iter: int = 200000) -> np.ndarray:
    """Invariant law of the lazy chain (I + P) / 2, which shares it with P"""
    size = matrix.shape[0]
    lazy = 0.5 * (np.eye(size) + matrix)
    pi = np.full(size, 1.0 / size)
    for _ in range(max_iter):
        updated = pi @ lazy
        if np.abs(updated - pi).sum() < tol:
            pi = updated
            break
        pi = updated
    return pi / pi.sum()


def stationary_distribution(matrix: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Unique invariant law of a stochastic, strongly connected matrix"""
    size = matrix.shape[0]
    if size == 0:
        raise NotStochastic('empty component')
    deviation = float(np.max(np.abs(matrix.sum(axis=1) - 1.0)))
    if deviation > tol:
        raise NotStochastic(f"row sums deviate from 1 by {deviation:.3g}")
    if not nx.is_strongly_connected(nx.from_numpy_array(matrix, create_using=nx.DiGraph)):
        raise NotStronglyConnected('transition graph of the component is not strongly connected')

    system = matrix.T - np.eye(size)
    system[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    try:
        if np.linalg.cond(system) > 1e12:
            raise np.linalg.LinAlgError('ill-conditioned')
        pi = np.linalg.solve(system, rhs)
    except np.linalg.LinAlgError:
        logger.info("linear solve for the invariant law is ill-conditioned, using power iteration")
        pi = stationary_by_power_iteration(matrix)
    pi = np.where(np.abs(pi) < 1e-15, 0.0, pi)
    if np.min(pi) <= 0:
        raise NotStronglyConnected(f"invariant law is not positive: {pi.tolist()}")
    return pi / pi.sum()


@dataclass(frozen=True, eq=False)
class CliqueChain:
    """Memoryless measure of a trace monoid seen as a chain on its non-empty cliques"""

    alphabet: Alphabet
    rho: float
    h: Dict[Clique, float]
    g: Dict[Clique, float]
    kernel: TransitionKernel

    def matrix(self) -> Dict[Tuple[Clique, Clique], float]:
        return {(c, d): float(self.kernel.matrix[self.kernel.index[(SINGLETON_STATE, c)],
                                                 self.kernel.index[(SINGLETON_STATE, d)]])
                for (_, c) in self.kernel.vertices for (_, d) in self.kernel.vertices}


def clique_chain(alphabet: Alphabet, tol: float = 1e-9) -> CliqueChain:
    """Uniform valuation rho^|x| on the monoid and its chain of cliques"""
    rho = smallest_root_monoid(mobius_polynomial(alphabet))
    system = wrap_monoid(alphabet)
    uniform = {entry: rho for entry in system.action}
    transform = system_mobius_transform(system, uniform)
    g = g_function(system, transform)
    kernel = transition_kernel(system, transform, g, tol)
    return CliqueChain(
        alphabet=alphabet,
        rho=rho,
        h={c: float(transform.value(SINGLETON_STATE, c)) for c in enumerate_cliques(alphabet)},
        g={c: float(g[(SINGLETON_STATE, c)]) for c in enumerate_cliques(alphabet) if c},
        kernel=kernel,
    )
