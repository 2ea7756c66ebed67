"""
Ergodic constants and their empirical checks
Speedup and additive limits from the stationary laws of final components, trajectory
simulation, ergodic means, hitting chains and Boltzmann convergence diagnostics
"""

import logging
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import pandas as pd

from src.dsc_graph import Component, DscGraph
from src.exceptions import (
    DeadRow,
    IncompatibleAdditive,
    LetterNeverHit,
    ParseError,
    SingularAtS,
    StructuralInconsistency,
    UnknownState,
)
from src.markov_engine import TransitionKernel, Vertex, stationary_distribution
from src.spectral_solver import Spectrum
from src.system_model import (
    ConcurrentSystem,
    Entry,
    MobiusMatrix,
    enumerate_trajectories,
    growth_matrix_at,
    growth_row_sums,
    mobius_matrix,
    trace_weight,
)
from src.trace_core import Trace, clique_size

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TestFunction:
    """Trajectory functional: additive family phi_α(a), length, height or a letter count"""

    __test__ = False

    kind: str
    values: Mapping[Entry, float] = field(default_factory=dict)
    letter: Optional[str] = None

    @classmethod
    def length(cls) -> 'TestFunction':
        return cls(kind='length')

    @classmethod
    def height(cls) -> 'TestFunction':
        return cls(kind='height')

    @classmethod
    def letter_count(cls, letter: str) -> 'TestFunction':
        return cls(kind='letter_count', letter=letter)

    @classmethod
    def additive(cls, values: Mapping[Entry, float]) -> 'TestFunction':
        return cls(kind='additive', values=dict(values))

    @property
    def name(self) -> str:
        return f"letter_count({self.letter})" if self.kind == 'letter_count' else self.kind

    def clique_value(self, system: ConcurrentSystem, state: str, c: int) -> float:
        if self.kind == 'length':
            return float(clique_size(c))
        if self.kind == 'height':
            return 1.0
        if self.kind == 'letter_count':
            return float((c >> system.alphabet.letter_index(self.letter)) & 1)
        total = 0.0
        current = state
        for letter in system.alphabet.letters_of(c):
            total += float(self.values.get((current, letter), 0.0))
            current = system.step(current, letter)
        return total


def check_compatibility(system: ConcurrentSystem, phi: TestFunction, tol: float = 1e-12) -> None:
    """phi_α(a) + phi_{α.a}(b) = phi_α(b) + phi_{α.b}(a) on every commuting square"""
    if phi.kind == 'height':
        raise IncompatibleAdditive('height is sub-additive; it has empirical limits only')
    if phi.kind != 'additive':
        return
    for pair in system.alphabet.independence:
        a, b = sorted(pair, key=system.alphabet.index.__getitem__)
        for state in system.states:
            if system.run(state, (a, b)) is None:
                continue
            left = phi.values.get((state, a), 0.0) + phi.values.get((system.step(state, a), b), 0.0)
            right = phi.values.get((state, b), 0.0) + phi.values.get((system.step(state, b), a), 0.0)
            if not math.isclose(left, right, rel_tol=tol, abs_tol=tol):
                raise IncompatibleAdditive(
                    f"test function is not compatible on the square {a}{b}={b}{a} at state {state!r}: "
                    f"{left} != {right}", state=state, a=a, b=b)


@dataclass(frozen=True, eq=False)
class ComponentLaw:
    component: Component
    pi: np.ndarray


@dataclass(frozen=True, eq=False)
class SpeedupReport:
    laws: Tuple[ComponentLaw, ...]
    per_component: Tuple[float, ...]
    speedup: float
    discrepancy: float

    def table(self, kernel: TransitionKernel) -> pd.DataFrame:
        return pd.DataFrame([
            {'component': k, 'size': len(law.component.vertices), 'speedup': s,
             'vertices': ' '.join(kernel.label(v) for v in law.component.vertices)}
            for k, (law, s) in enumerate(zip(self.laws, self.per_component))
        ])


def final_laws(kernel: TransitionKernel, dsc: DscGraph, tol: float = 1e-9) -> List[ComponentLaw]:
    """Invariant law of the chain restricted to each final component of the stable subgraph"""
    laws = []
    for component in dsc.final_components():
        pi = stationary_distribution(kernel.restrict(component.vertices), tol)
        laws.append(ComponentLaw(component=component, pi=pi))
    return laws


def speedup_analytic(kernel: TransitionKernel, dsc: DscGraph, tol: float = 1e-9) -> SpeedupReport:
    """s_J = sum of |d| pi_J(α, d) per final component J"""
    laws = final_laws(kernel, dsc, tol)
    values = tuple(float(sum(clique_size(c) * p for (_, c), p in zip(law.component.vertices, law.pi)))
                   for law in laws)
    discrepancy = max(values) - min(values) if values else 0.0
    if discrepancy > tol:
        logger.warning(f"speedup differs across final components by {discrepancy:.3g}")
    speedup = values[0] if values else float('nan')
    logger.info(f"speedup {speedup:.12g} from {len(values)} final component(s)")
    return SpeedupReport(laws=tuple(laws), per_component=values, speedup=speedup, discrepancy=discrepancy)


@dataclass(frozen=True)
class AdditiveLimit:
    name: str
    value: float
    per_component: Tuple[float, ...]
    discrepancy: float


def additive_limit(kernel: TransitionKernel, dsc: DscGraph, system: ConcurrentSystem,
                   phi: TestFunction, tol: float = 1e-9) -> AdditiveLimit:
    """k_phi = sum pi phi_α(c) / sum pi |c| on any final component"""
    check_compatibility(system, phi)
    values = []
    for law in final_laws(kernel, dsc, tol):
        numerator = sum(p * phi.clique_value(system, alpha, c) for (alpha, c), p in zip(law.component.vertices, law.pi))
        denominator = sum(p * clique_size(c) for (_, c), p in zip(law.component.vertices, law.pi))
        values.append(float(numerator / denominator))
    discrepancy = max(values) - min(values) if values else 0.0
    return AdditiveLimit(name=phi.name, value=values[0] if values else float('nan'),
                         per_component=tuple(values), discrepancy=discrepancy)


def letter_densities(kernel: TransitionKernel, dsc: DscGraph, system: ConcurrentSystem,
                     tol: float = 1e-9) -> Dict[str, float]:
    return {letter: additive_limit(kernel, dsc, system, TestFunction.letter_count(letter), tol).value
            for letter in system.alphabet.letters}


@dataclass(frozen=True, eq=False)
class Trajectory:
    """A sampled path of the chain, stored as vertex indices into the kernel"""

    kernel: TransitionKernel
    start: str
    seed: int
    path: np.ndarray

    @property
    def steps(self) -> int:
        return int(self.path.size)

    def vertices(self) -> List[Vertex]:
        return [self.kernel.vertices[i] for i in self.path]

    def sizes(self) -> np.ndarray:
        table = np.array([clique_size(c) for _, c in self.kernel.vertices], dtype=np.int64)
        return table[self.path]

    def lengths(self) -> np.ndarray:
        return np.cumsum(self.sizes())

    def heights(self) -> np.ndarray:
        return np.arange(1, self.steps + 1)

    def letter_indicators(self) -> np.ndarray:
        """steps x letters matrix of 0/1 occurrences"""
        alphabet = self.kernel.alphabet
        table = np.array([[(c >> i) & 1 for i in range(alphabet.size)] for _, c in self.kernel.vertices],
                         dtype=np.int64).reshape(len(self.kernel.vertices), alphabet.size)
        return table[self.path]

    def letter_counts(self) -> Dict[str, int]:
        totals = self.letter_indicators().sum(axis=0)
        return {letter: int(totals[i]) for i, letter in enumerate(self.kernel.alphabet.letters)}

    def frame(self) -> pd.DataFrame:
        alphabet = self.kernel.alphabet
        lengths = self.lengths()
        heights = self.heights()
        frame = pd.DataFrame({
            'step': heights,
            'state': [self.kernel.vertices[i][0] for i in self.path],
            'clique': [alphabet.label(self.kernel.vertices[i][1]) for i in self.path],
            'len_cum': lengths,
            'height_cum': heights,
            'mean_height_ratio': lengths / heights,
        })
        counts = np.cumsum(self.letter_indicators(), axis=0)
        for i, letter in enumerate(alphabet.letters):
            frame[f"count_{letter}"] = counts[:, i]
        return frame


def trajectory_seed(base_seed: int, index: int) -> int:
    """Independent per-trajectory seed derived from (base seed, trajectory index)"""
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1)[0])


def _cumulative(row: np.ndarray) -> Tuple[List[int], List[float]]:
    targets = np.nonzero(row > 0)[0]
    return targets.tolist(), np.cumsum(row[targets]).tolist()


def _draw(targets: List[int], cumulative: List[float], u: float) -> int:
    position = bisect_right(cumulative, u * cumulative[-1])
    return targets[min(position, len(targets) - 1)]


def sample_trajectory(kernel: TransitionKernel, start: str, steps: int, seed: int) -> Trajectory:
    """First clique from h_start, then steps-1 transitions; deterministic given seed"""
    if steps < 1:
        raise ParseError(f"must be at least 1, got {steps}", location='steps')
    if start not in kernel.initial:
        raise UnknownState(start)
    rng = np.random.default_rng(seed)
    uniforms = rng.random(steps).tolist()

    rows: Dict[int, Tuple[List[int], List[float]]] = {}
    initial_targets, initial_cumulative = _cumulative(kernel.initial[start])
    if not initial_targets:
        raise DeadRow(f"state {start!r} has no clique of positive initial mass")

    path = np.empty(steps, dtype=np.int64)
    current = _draw(initial_targets, initial_cumulative, uniforms[0])
    path[0] = current
    for n in range(1, steps):
        if current in kernel.dead_rows:
            raise DeadRow(f"entered dead row {kernel.label(kernel.vertices[current])} at step {n}")
        if current not in rows:
            if kernel.h[kernel.vertices[current]] <= 0:
                raise StructuralInconsistency(
                    f"trajectory entered unstable {kernel.label(kernel.vertices[current])}")
            rows[current] = _cumulative(kernel.matrix[current])
        targets, cumulative = rows[current]
        current = _draw(targets, cumulative, uniforms[n])
        path[n] = current
    return Trajectory(kernel=kernel, start=start, seed=seed, path=path)


def sample_trajectories(kernel: TransitionKernel, start: str, steps: int, seed: int, count: int) -> List[Trajectory]:
    """count independent trajectories, merged in trajectory-index order"""
    return [sample_trajectory(kernel, start, steps, trajectory_seed(seed, index)) for index in range(count)]


@dataclass(frozen=True, eq=False)
class ErgodicMeans:
    name: str
    series: np.ndarray
    final: float
    stderr: float


def _batch_ratio(numerator: np.ndarray, denominator: np.ndarray, batches: int) -> Tuple[float, float]:
    ratios = [num.sum() / den.sum() for num, den in zip(np.array_split(numerator, batches),
                                                       np.array_split(denominator, batches)) if den.sum() > 0]
    if len(ratios) < 2:
        return float('nan'), float('nan')
    return float(np.mean(ratios)), float(np.std(ratios, ddof=1) / math.sqrt(len(ratios)))


def ergodic_means(trajectory: Trajectory, phi: TestFunction, system: ConcurrentSystem,
                  batches: int = 20) -> ErgodicMeans:
    """Running M_phi(Y_n) = phi(Y_n) / |Y_n| with a batch-means standard error"""
    per_vertex = np.array([phi.clique_value(system, alpha, c) for alpha, c in trajectory.kernel.vertices])
    increments = per_vertex[trajectory.path]
    sizes = trajectory.sizes().astype(float)
    series = np.cumsum(increments) / np.cumsum(sizes)
    _, stderr = _batch_ratio(increments, sizes, batches)
    return ErgodicMeans(name=phi.name, series=series, final=float(series[-1]), stderr=stderr)


def speedup_estimate(trajectory: Trajectory, batches: int = 20) -> Tuple[float, float]:
    """length / height along the trajectory with its batch-means standard error"""
    sizes = trajectory.sizes().astype(float)
    _, stderr = _batch_ratio(sizes, np.ones_like(sizes), batches)
    return float(sizes.sum() / sizes.size), stderr


@dataclass(frozen=True, eq=False)
class HittingChain:
    letter: str
    boundaries: np.ndarray
    states: Tuple[str, ...]
    transitions: pd.DataFrame
    closed_classes: Tuple[Tuple[str, ...], ...]

    @property
    def hits(self) -> int:
        return int(self.boundaries.size)

    @property
    def single_closed_class(self) -> bool:
        return len(self.closed_classes) == 1


def hitting_chain(trajectory: Trajectory, letter: str) -> HittingChain:
    """
    States X_n reached after the successive cliques containing letter

    Hitting times are taken at clique granularity: the prefix ends with the first
    clique that contains the letter.
    """
    kernel = trajectory.kernel
    system_alphabet = kernel.alphabet
    bit = system_alphabet.letter_index(letter)
    contains = np.array([(c >> bit) & 1 for _, c in kernel.vertices], dtype=bool)
    boundaries = np.nonzero(contains[trajectory.path])[0]
    if boundaries.size == 0:
        raise LetterNeverHit(f"letter {letter!r} never occurs in the {trajectory.steps}-step trajectory")

    after = _states_after(trajectory)
    states = (trajectory.start,) + tuple(after[i] for i in boundaries)
    transitions = pd.crosstab(pd.Series(states[:-1], name='from'), pd.Series(states[1:], name='to'),
                              normalize='index')

    observed = nx.DiGraph()
    observed.add_nodes_from(states)
    observed.add_edges_from(zip(states[:-1], states[1:]))
    condensed = nx.condensation(observed)
    closed = sorted(tuple(sorted(condensed.nodes[k]['members'])) for k in condensed.nodes
                    if condensed.out_degree(k) == 0)
    return HittingChain(letter=letter, boundaries=boundaries, states=states,
                        transitions=transitions, closed_classes=tuple(closed))


def _states_after(trajectory: Trajectory) -> List[str]:
    """State α.c reached after each step"""
    return [trajectory.kernel.targets[i] for i in trajectory.path]


def boltzmann_cylinder(system: ConcurrentSystem, spectrum: Spectrum, state: str, x: Trace, s: float,
                       matrix: Optional[MobiusMatrix] = None) -> float:
    """s^|x| lambda_state(x) G_{state.x}(s) / G_state(s)"""
    if not 0 <= s < spectrum.rho:
        raise SingularAtS(f"s={s} is outside [0, rho={spectrum.rho:.12g})")
    target = system.run(state, x.word)
    if target is None:
        return 0.0
    totals = growth_row_sums(growth_matrix_at(matrix or mobius_matrix(system), s))
    index = system.state_index
    return float(s ** x.length * float(trace_weight(system, state, x)) * totals[index[target]] / totals[index[state]])


def growth_ratio(system: ConcurrentSystem, alpha: str, beta: str, s: float,
                 matrix: Optional[MobiusMatrix] = None) -> float:
    """H_{α,β}(s) = G_β(s) / G_α(s)"""
    totals = growth_row_sums(growth_matrix_at(matrix or mobius_matrix(system), s))
    return float(totals[system.state_index[beta]] / totals[system.state_index[alpha]])


@dataclass(frozen=True, eq=False)
class BoltzmannTable:
    frame: pd.DataFrame

    @property
    def monotone(self) -> bool:
        errors = self.frame['max_cylinder_error'].tolist()
        return all(later < earlier for earlier, later in zip(errors, errors[1:]))

    @property
    def final_error(self) -> float:
        return float(self.frame['max_cylinder_error'].iloc[-1])

    @property
    def final_ratio_error(self) -> float:
        return float(self.frame['max_ratio_error'].iloc[-1])


def boltzmann_convergence(system: ConcurrentSystem, spectrum: Spectrum,
                          traces: Optional[Mapping[str, Sequence[Trace]]] = None,
                          ks: Iterable[int] = range(1, 6), max_len: int = 4) -> BoltzmannTable:
    """
    Cylinder probabilities against the probabilistic valuation for s = rho (1 - 10^-k)

    Also tracks G_β(s)/G_α(s) against the cocycle Delta(α, β).
    """
    if traces is None:
        traces = {state: enumerate_trajectories(system, state, max_len) for state in system.states}
    matrix = mobius_matrix(system)
    index = system.state_index
    limits = {(state, x): float(trace_weight(system, state, x, spectrum.prob_valuation))
              for state, sample in traces.items() for x in sample}

    records = []
    for k in ks:
        s = spectrum.rho * (1 - 10.0 ** -k)
        totals = growth_row_sums(growth_matrix_at(matrix, s))
        cylinder_error = 0.0
        for (state, x), limit in limits.items():
            target = system.run(state, x.word)
            value = 0.0 if target is None else (
                s ** x.length * float(trace_weight(system, state, x)) * totals[index[target]] / totals[index[state]])
            cylinder_error = max(cylinder_error, abs(value - limit))
        ratio_error = max(abs(totals[index[beta]] / totals[index[alpha]] - spectrum.delta(alpha, beta))
                          for alpha in system.states for beta in system.states)
        records.append({'k': k, 's': s, 'max_cylinder_error': cylinder_error, 'max_ratio_error': float(ratio_error)})
        logger.debug(f"Boltzmann k={k}: cylinder error {cylinder_error:.3g}, ratio error {ratio_error:.3g}")
    return BoltzmannTable(frame=pd.DataFrame(records))
