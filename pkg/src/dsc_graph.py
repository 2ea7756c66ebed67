"""
Directed graph of state-and-cliques
Construction, stability classification, protections, the F matrix, condensation of the
stable part and DOT export
"""

import logging
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from src.exceptions import BudgetExceeded, StructuralInconsistency, UmbrellaViolation
from src.markov_engine import SystemMobiusTransform, Vertex
from src.polynomials import Number
from src.spectral_solver import Spectrum
from src.system_model import ConcurrentSystem
from src.trace_core import Clique, Trace, bits, clique_size, normal_form

logger = logging.getLogger(__name__)

MAX_PROTECTION_DEPTH = 12
BASIC_TOL = 1e-6


@dataclass(frozen=True)
class Component:
    vertices: Tuple[Vertex, ...]
    spectral_radius: float
    basic: bool
    final: bool


@dataclass(frozen=True, eq=False)
class DscGraph:
    """Vertices (α, c) with α.c defined and edges (α,c) -> (α.c, d) whenever c -> d"""

    system: ConcurrentSystem
    graph: nx.DiGraph
    vertices: Tuple[Vertex, ...]
    stable: Optional[Dict[Vertex, bool]] = None
    components: Tuple[Component, ...] = ()
    umbrella: Optional[bool] = None
    unstable_radius: Optional[float] = None

    def label(self, vertex: Vertex) -> str:
        return f"{vertex[0]}-{self.system.alphabet.label(vertex[1])}"

    def stable_vertices(self) -> List[Vertex]:
        return [v for v in self.vertices if self.stable and self.stable[v]]

    def unstable_vertices(self) -> List[Vertex]:
        return [v for v in self.vertices if self.stable is not None and not self.stable[v]]

    def plus(self) -> nx.DiGraph:
        """Subgraph on stable vertices"""
        return self.graph.subgraph(self.stable_vertices()).copy()

    def basic_components(self) -> List[Component]:
        return [c for c in self.components if c.basic]

    def final_components(self) -> List[Component]:
        return [c for c in self.components if c.final]


def build_dsc(system: ConcurrentSystem) -> DscGraph:
    graph = nx.DiGraph()
    vertices = [(state, c) for state in system.states for c in system.enabled_cliques(state)]
    for vertex in vertices:
        graph.add_node(vertex)
    for alpha, c in vertices:
        beta = system.act_clique(alpha, c)
        for d in system.enabled_cliques(beta):
            if all(c & system.alphabet.dependent_mask(b) for b in bits(d)):
                graph.add_edge((alpha, c), (beta, d))
    logger.debug(f"DSC: {graph.number_of_nodes()} vertices, {graph.number_of_edges()} edges")
    return DscGraph(system=system, graph=graph, vertices=tuple(vertices))


def classify_stable(dsc: DscGraph, transform: SystemMobiusTransform, tol: float = 1e-9) -> DscGraph:
    """Stable iff h_α(c) > tol, h taken from the probabilistic valuation"""
    stable = {vertex: float(transform.value(*vertex)) > tol for vertex in dsc.vertices}

    for u, v in dsc.graph.edges:
        if stable[v] and not stable[u]:
            raise StructuralInconsistency(
                f"{dsc.label(u)} precedes stable {dsc.label(v)} but is not stable")
    for vertex in dsc.vertices:
        if stable[vertex] and not any(stable[w] for w in dsc.graph.successors(vertex)):
            raise StructuralInconsistency(f"stable {dsc.label(vertex)} has no stable successor")
    if dsc.vertices and not any(stable.values()):
        raise StructuralInconsistency('no stable state-and-clique')

    unstable = [dsc.label(v) for v in dsc.vertices if not stable[v]]
    logger.info(f"{len(dsc.vertices) - len(unstable)} stable state-and-cliques, unstable: {unstable}")
    return replace(dsc, stable=stable)


@dataclass(frozen=True)
class ProtectionResult:
    certificate: Optional[Trace]
    exhausted: bool
    explored: int


def is_protection(system: ConcurrentSystem, state: str, c: Clique, x: Trace) -> bool:
    """x is a protection of (state, c): first clique c and no enabled letter independent of all of x"""
    if x.first_clique != c:
        return False
    end = system.run(state, x.word)
    if end is None:
        return False
    content = x.content
    for letter in system.enabled_letters(end):
        if not content & system.alphabet.dependent_mask(system.alphabet.index[letter]):
            return False
    return True


def protection_search(system: ConcurrentSystem, state: str, c: Clique, depth_budget: int = 8) -> ProtectionResult:
    """
    Breadth-first search for a protection of (state, c)

    Extensions only append letters depending on some letter already used, so the first
    clique stays c. Nodes are (current state, letters used), a finite set.

    Returns:
        ProtectionResult with a certificate when one exists within depth_budget letters
        beyond c; exhausted is True when every reachable node was explored
    """
    if depth_budget > MAX_PROTECTION_DEPTH:
        raise BudgetExceeded(f"depth_budget={depth_budget} exceeds {MAX_PROTECTION_DEPTH}")
    alphabet = system.alphabet
    start_state = system.act_clique(state, c)
    if start_state is None or not c:
        return ProtectionResult(certificate=None, exhausted=True, explored=0)

    start = (start_state, c)
    parents: Dict[Tuple[str, int], Optional[Tuple[Tuple[str, int], str]]] = {start: None}
    queue = deque([(start, 0)])
    truncated = False
    while queue:
        node, depth = queue.popleft()
        current, content = node
        enabled = system.enabled_letters(current)
        if all(content & alphabet.dependent_mask(alphabet.index[a]) for a in enabled):
            letters: List[str] = []
            walk = node
            while parents[walk] is not None:
                walk, letter = parents[walk]
                letters.append(letter)
            certificate = normal_form(alphabet, alphabet.letters_of(c) + tuple(reversed(letters)))
            return ProtectionResult(certificate=certificate, exhausted=False, explored=len(parents))
        if depth >= depth_budget:
            truncated = True
            continue
        for letter in enabled:
            i = alphabet.index[letter]
            if not content & alphabet.dependent_mask(i):
                continue
            child = (system.action[(current, letter)], content | (1 << i))
            if child not in parents:
                parents[child] = (node, letter)
                queue.append((child, depth + 1))
    return ProtectionResult(certificate=None, exhausted=not truncated, explored=len(parents))


@dataclass(frozen=True, eq=False)
class FMatrix:
    """F over state-and-cliques sorted stable first"""

    vertices: Tuple[Vertex, ...]
    matrix: np.ndarray
    n_stable: int

    @property
    def plus(self) -> np.ndarray:
        return self.matrix[:self.n_stable, :self.n_stable]

    @property
    def zero(self) -> np.ndarray:
        return self.matrix[self.n_stable:, self.n_stable:]

    @property
    def lower_left(self) -> np.ndarray:
        return self.matrix[self.n_stable:, :self.n_stable]

    def restrict(self, vertices: Sequence[Vertex]) -> np.ndarray:
        index = {v: i for i, v in enumerate(self.vertices)}
        rows = [index[v] for v in vertices]
        return self.matrix[np.ix_(rows, rows)]


def f_matrix(dsc: DscGraph, spectrum: Spectrum) -> FMatrix:
    """F((α,c),(β,d)) = rho^|c| lambda_α(c) on DSC edges"""
    if dsc.stable is None:
        raise StructuralInconsistency('classify_stable must run before building F')
    system = dsc.system
    ordered = dsc.stable_vertices() + dsc.unstable_vertices()
    index = {v: i for i, v in enumerate(ordered)}
    matrix = np.zeros((len(ordered), len(ordered)))
    for u, v in dsc.graph.edges:
        alpha, c = u
        matrix[index[u], index[v]] = spectrum.rho ** clique_size(c) * float(system.clique_weight(alpha, c))
    return FMatrix(vertices=tuple(ordered), matrix=matrix, n_stable=len(dsc.stable_vertices()))


def spectral_radius(matrix: np.ndarray, tol: float = 1e-12, max_iter: int = 10000) -> float:
    """
    Spectral radius of a non-negative matrix

    Power iteration on I + A with Collatz-Wielandt bounds; eigenvalues as a fallback
    when the bounds do not close or the matrix is reducible.
    """
    size = matrix.shape[0]
    if size == 0:
        return 0.0
    if not matrix.any():
        return 0.0
    shifted = np.eye(size) + matrix
    x = np.ones(size)
    for _ in range(max_iter):
        y = shifted @ x
        if np.any(x <= 0):
            break
        ratios = y / x
        lower, upper = float(ratios.min()), float(ratios.max())
        if upper - lower < tol * max(1.0, upper):
            return 0.5 * (lower + upper) - 1.0
        x = y / np.linalg.norm(y)
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


def condense(dsc: DscGraph, f: FMatrix) -> DscGraph:
    """
    Strongly connected components of the stable subgraph with their F radii

    Basic components reach the largest radius, final ones have no outgoing edge;
    they must coincide and the unstable block must have radius below 1.
    """
    plus = dsc.plus()
    sccs = [sorted(component, key=dsc.vertices.index) for component in nx.strongly_connected_components(plus)]
    sccs.sort(key=lambda members: dsc.vertices.index(members[0]))
    condensed = nx.condensation(plus, scc=[set(members) for members in sccs])

    radii = [spectral_radius(f.restrict(members)) for members in sccs]
    top = max(radii, default=0.0)
    components = []
    for k, members in enumerate(sccs):
        components.append(Component(
            vertices=tuple(members),
            spectral_radius=radii[k],
            basic=abs(radii[k] - top) <= BASIC_TOL,
            final=condensed.out_degree(k) == 0,
        ))

    umbrella = all(component.basic == component.final for component in components)
    unstable_radius = spectral_radius(f.zero)
    if not umbrella:
        raise UmbrellaViolation('basic and final components of the stable subgraph differ')
    if unstable_radius >= 1 - BASIC_TOL:
        raise UmbrellaViolation(f"spectral radius of the unstable block is {unstable_radius:.9g}")
    if abs(top - 1.0) > BASIC_TOL:
        logger.warning(f"largest component radius is {top:.9g}, expected 1")

    logger.info(f"condensation: {len(components)} components, "
                f"{sum(c.basic for c in components)} basic")
    return replace(dsc, components=tuple(components), umbrella=umbrella, unstable_radius=unstable_radius)


@dataclass(frozen=True)
class InvariantVectorReport:
    residual: float
    zero_on_unstable: bool
    positive_on_stable: bool
    tol: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tol and self.zero_on_unstable and self.positive_on_stable


def f_invariant_vector_check(f: FMatrix, spectrum: Spectrum, transform: SystemMobiusTransform,
                             tol: float = 1e-9) -> InvariantVectorReport:
    """u(α,c) = Delta(α0, α) h_α(c) must satisfy F u = u"""
    reference = spectrum.states[0]
    u = np.array([spectrum.delta(reference, alpha) * float(transform.value(alpha, c)) for alpha, c in f.vertices])
    residual = float(np.max(np.abs(f.matrix @ u - u))) if u.size else 0.0
    stable_part, unstable_part = u[:f.n_stable], u[f.n_stable:]
    return InvariantVectorReport(
        residual=residual,
        zero_on_unstable=bool(np.all(np.abs(unstable_part) <= tol)),
        positive_on_stable=bool(np.all(stable_part > tol)) if stable_part.size else False,
        tol=tol,
    )


def _quote(text: str) -> str:
    return '"' + text.replace('"', '\\"') + '"'


def to_dot(dsc: DscGraph, name: str = 'dsc') -> str:
    """Graphviz document: unstable vertices dashed, basic components clustered"""
    node_ids = {vertex: f"v{i}" for i, vertex in enumerate(dsc.vertices)}
    lines = [f"digraph {name} {{"]
    clustered = set()
    for k, component in enumerate(dsc.basic_components()):
        lines.append(f"  subgraph cluster_{k} {{")
        lines.append(f"    label={_quote(f'basic component {k}')};")
        for vertex in component.vertices:
            lines.append(f"    {node_ids[vertex]};")
            clustered.add(vertex)
        lines.append("  }")
    for vertex in dsc.vertices:
        style = 'dashed' if dsc.stable is not None and not dsc.stable[vertex] else 'solid'
        lines.append(f"  {node_ids[vertex]} [label={_quote(dsc.label(vertex))}, shape=box, style={style}];")
    for u, v in sorted(dsc.graph.edges, key=lambda edge: (dsc.vertices.index(edge[0]), dsc.vertices.index(edge[1]))):
        lines.append(f"  {node_ids[u]} -> {node_ids[v]};")
    lines.append("}")
    return '\n'.join(lines) + '\n'
