"""
Ergodic analysis pipeline
Runs the stages in order (irreducibility, spectrum, Markov chain of state-and-cliques,
DSC and ergodic constants) and assembles the JSON analysis report
"""

import logging
import math
from functools import cached_property
from fractions import Fraction
from typing import Any, Dict, List, Optional

import numpy as np

from src import __version__
from src.dsc_graph import (
    DscGraph,
    FMatrix,
    InvariantVectorReport,
    build_dsc,
    classify_stable,
    condense,
    f_invariant_vector_check,
    f_matrix,
)
from src.ergodic_suite import SpeedupReport, letter_densities, speedup_analytic
from src.exceptions import IrreducibilityError
from src.markov_engine import (
    SystemMobiusTransform,
    TransitionKernel,
    clique_chain,
    g_function,
    system_mobius_transform,
    transition_kernel,
)
from src.polynomials import Number
from src.settings import Settings
from src.spectral_solver import (
    ProbabilisticCheck,
    Spectrum,
    check_probabilistic,
    compute_spectrum,
    spectral_gaps,
)
from src.system_model import (
    SINGLETON_STATE,
    ConcurrentSystem,
    IrreducibilityReport,
    irreducibility_report,
    with_weights,
)
from src.trace_core import enumerate_cliques, mobius_polynomial, smallest_root_monoid

logger = logging.getLogger(__name__)

DIGITS = 12
DOUBLED_TOL = 1e-9


def rounded(value: float) -> Optional[float]:
    """Twelve decimals; None for infinities"""
    value = float(value)
    if not math.isfinite(value):
        return None
    return round(value, DIGITS) + 0.0


def json_number(value: Number) -> Any:
    """Exact rationals as int or 'p/q', floats rounded"""
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else str(value)
    if isinstance(value, int):
        return value
    return rounded(value)


def uniform_weights(system: ConcurrentSystem) -> bool:
    values = list(system.weights.values())
    return all(value == values[0] for value in values)


def is_doubled(system: ConcurrentSystem) -> bool:
    """States are the cliques of the alphabet, acted on by toggling letters"""
    alphabet = system.alphabet
    cliques = enumerate_cliques(alphabet)
    labels = {c: alphabet.label(c) for c in cliques}
    if sorted(system.states) != sorted(labels.values()):
        return False
    for c in cliques:
        for i, letter in enumerate(alphabet.letters):
            bit = 1 << i
            if c & bit:
                expected = labels[c & ~bit]
            elif alphabet.is_clique(c | bit):
                expected = labels[c | bit]
            else:
                expected = None
            if system.action.get((labels[c], letter)) != expected:
                return False
    return True


class ErgodicAnalysisPipeline:
    """Lazily evaluated analysis stages of one concurrent system"""

    def __init__(self, system: ConcurrentSystem, settings: Optional[Settings] = None):
        self.system = system
        self.settings = settings or Settings()

    @property
    def tol(self) -> float:
        return self.settings.tol

    @cached_property
    def irreducibility(self) -> IrreducibilityReport:
        report = irreducibility_report(self.system)
        if not report.irreducible:
            raise IrreducibilityError(report.failed_clauses())
        return report

    @cached_property
    def spectrum(self) -> Spectrum:
        _ = self.irreducibility
        logger.info(f"🔢 Spectral stage for {self.system.name or 'model'}")
        return compute_spectrum(self.system, rank_tol=self.settings.rank_tol, residual_tol=self.tol)

    @cached_property
    def probabilistic(self) -> ProbabilisticCheck:
        check = check_probabilistic(self.system, self.spectrum.prob_valuation, self.tol)
        if not check.passed:
            logger.warning(f"normalized valuation fails the probabilistic test: {check.to_dict()}")
        return check

    @cached_property
    def transform(self) -> SystemMobiusTransform:
        return system_mobius_transform(self.system, self.spectrum.prob_valuation)

    @cached_property
    def kernel(self) -> TransitionKernel:
        logger.info("🔗 Building the chain of state-and-cliques")
        g = g_function(self.system, self.transform)
        return transition_kernel(self.system, self.transform, g, self.tol)

    @cached_property
    def classified(self) -> DscGraph:
        return classify_stable(build_dsc(self.system), self.transform, self.tol)

    @cached_property
    def f(self) -> FMatrix:
        return f_matrix(self.classified, self.spectrum)

    @cached_property
    def dsc(self) -> DscGraph:
        logger.info("🕸️ Condensing the stable state-and-cliques")
        return condense(self.classified, self.f)

    @cached_property
    def invariant(self) -> InvariantVectorReport:
        report = f_invariant_vector_check(self.f, self.spectrum, self.transform, self.tol)
        if not report.passed:
            logger.warning(f"F invariant vector residual {report.residual:.3g}")
        return report

    @cached_property
    def speedup(self) -> SpeedupReport:
        logger.info("⚡ Ergodic constants from the final components")
        return speedup_analytic(self.kernel, self.dsc, self.tol)

    @cached_property
    def densities(self) -> Dict[str, float]:
        return letter_densities(self.kernel, self.dsc, self.system, self.tol)

    @cached_property
    def gaps(self) -> Dict[str, float]:
        return spectral_gaps(self.system, self.spectrum)

    @property
    def speedup_label(self) -> str:
        return 'speedup' if uniform_weights(self.system) else 'speedup under measure m'

    def renormalization(self) -> Dict[str, Any]:
        """Normalizing the probabilistic valuation again must give rho = 1 and a flat cocycle"""
        again = compute_spectrum(with_weights(self.system, self.spectrum.prob_valuation),
                                 rank_tol=self.settings.rank_tol, residual_tol=self.tol)
        deviation = float(np.max(np.abs(again.kernel - 1.0)))
        return {
            'rho': rounded(again.rho),
            'max_delta_deviation': rounded(deviation),
            'passed': abs(again.rho - 1.0) <= self.tol and deviation <= self.tol,
        }

    def doubled_relation(self) -> Optional[Dict[str, Any]]:
        """rho^2 = r for a doubled monoid, r the root of the underlying Möbius polynomial"""
        if any(value != 1 for value in self.system.weights.values()) or not is_doubled(self.system):
            return None
        r = smallest_root_monoid(mobius_polynomial(self.system.alphabet))
        rho = self.spectrum.rho
        cliques = {self.system.alphabet.label(c): c.bit_count() for c in enumerate_cliques(self.system.alphabet)}
        delta_error = max(abs(self.spectrum.delta(a, b) - r ** ((cliques[b] - cliques[a]) / 2))
                          for a in self.system.states for b in self.system.states)
        return {
            'r': rounded(r),
            'rho_squared': rounded(rho * rho),
            'error': rounded(abs(rho * rho - r)),
            'max_delta_error': rounded(delta_error),
            'passed': abs(rho * rho - r) <= DOUBLED_TOL and delta_error <= DOUBLED_TOL,
        }

    def clique_chain_summary(self) -> Optional[Dict[str, Any]]:
        if self.system.states != (SINGLETON_STATE,) or not uniform_weights(self.system):
            return None
        chain = clique_chain(self.system.alphabet, self.tol)
        label = self.system.alphabet.label
        return {
            'rho': rounded(chain.rho),
            'h': {label(c): rounded(value) for c, value in chain.h.items()},
            'g': {label(c): rounded(value) for c, value in chain.g.items()},
        }

    def run(self) -> 'ErgodicAnalysisPipeline':
        """Force every stage; errors surface in stage order"""
        logger.info(f"🚀 Analysing {self.system.name or 'model'}: {len(self.system.states)} states, "
              f"{self.system.alphabet.size} letters")
        for stage in ('irreducibility', 'spectrum', 'probabilistic', 'kernel', 'dsc', 'invariant',
                      'speedup', 'densities', 'gaps'):
            getattr(self, stage)
        logger.info(f"✅ rho = {self.spectrum.rho:.12g}, {self.speedup_label} = {self.speedup.speedup:.12g}")
        return self

    def components(self) -> List[Dict[str, Any]]:
        return [
            {
                'vertices': [self.dsc.label(v) for v in component.vertices],
                'spectral_radius': rounded(component.spectral_radius),
                'basic': component.basic,
                'final': component.final,
            }
            for component in self.dsc.components
        ]

    def report(self) -> Dict[str, Any]:
        """Analysis report; deterministic once serialized with sorted keys"""
        self.run()
        system = self.system
        spectrum = self.spectrum
        valuation: Dict[str, Dict[str, float]] = {state: {} for state in system.states}
        for (state, letter), value in spectrum.prob_valuation.items():
            valuation[state][letter] = rounded(value)

        report: Dict[str, Any] = {
            'tool': 'csergo',
            'version': __version__,
            'model': system.name,
            'tolerances': {'tol': self.tol, 'rank_tol': self.settings.rank_tol},
            'irreducibility': self.irreducibility.to_dict(),
            'theta': [json_number(c) for c in spectrum.theta_coefficients()],
            'rho': rounded(spectrum.rho),
            'kernel': {state: rounded(spectrum.u(state)) for state in system.states},
            'delta': {a: {b: rounded(v) for b, v in row.items()} for a, row in spectrum.delta_table().items()},
            'probabilistic_valuation': valuation,
            'probabilistic_check': {k: (rounded(v) if isinstance(v, float) else v)
                                    for k, v in self.probabilistic.to_dict().items()},
            'renormalization': self.renormalization(),
            'diagnostics': list(spectrum.diagnostics),
            'stable': [self.dsc.label(v) for v in self.dsc.stable_vertices()],
            'unstable': [self.dsc.label(v) for v in self.dsc.unstable_vertices()],
            'components': self.components(),
            'umbrella': self.dsc.umbrella,
            'unstable_radius': rounded(self.dsc.unstable_radius),
            'invariant_vector_residual': rounded(self.invariant.residual),
            'kernel_discrepancy': rounded(self.kernel.discrepancy),
            'speedup': {
                'label': self.speedup_label,
                'value': rounded(self.speedup.speedup),
                'per_component': [rounded(s) for s in self.speedup.per_component],
                'discrepancy': rounded(self.speedup.discrepancy),
            },
            'letter_densities': {letter: rounded(v) for letter, v in self.densities.items()},
            'spectral_gaps': {letter: rounded(v) for letter, v in self.gaps.items()},
        }
        doubled = self.doubled_relation()
        if doubled is not None:
            report['doubled_relation'] = doubled
        chain = self.clique_chain_summary()
        if chain is not None:
            report['clique_chain'] = chain
        return report
