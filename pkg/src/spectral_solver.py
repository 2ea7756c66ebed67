"""
Spectral analysis of the Möbius matrix
Characteristic polynomial, characteristic root, kernel vector, cocycle and the
normalization of a valuation into the unique probabilistic valuation
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np
import sympy

from src.exceptions import GapViolation, KernelDimensionNot1, NoPositiveRoot, NonPositiveKernel
from src.markov_engine import system_mobius_transform
from src.polynomials import (
    Number,
    ascending_coefficients,
    bareiss_determinant,
    interpolated_determinant,
    poly_from_coefficients,
    real_positive_roots,
    smaller_modulus_roots,
    smallest_positive_root,
)
from src.system_model import ConcurrentSystem, Entry, MobiusMatrix, mobius_matrix, restrict_letter

logger = logging.getLogger(__name__)

ROOT_SCAN_UPPER = 2.0


@dataclass(frozen=True, eq=False)
class Spectrum:
    """rho, kernel vector U (U of the first state is 1), cocycle and probabilistic valuation"""

    states: Tuple[str, ...]
    theta: sympy.Poly
    rho: float
    kernel: np.ndarray
    prob_valuation: Dict[Entry, float]
    residual: float
    diagnostics: Tuple[str, ...] = ()
    index: Dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'index', {state: i for i, state in enumerate(self.states)})

    def u(self, state: str) -> float:
        return float(self.kernel[self.index[state]])

    def delta(self, alpha: str, beta: str) -> float:
        """Cocycle U_beta / U_alpha"""
        return float(self.kernel[self.index[beta]] / self.kernel[self.index[alpha]])

    def delta_table(self) -> Dict[str, Dict[str, float]]:
        return {alpha: {beta: self.delta(alpha, beta) for beta in self.states} for alpha in self.states}

    def theta_coefficients(self) -> List[Number]:
        return ascending_coefficients(self.theta)


def char_poly(matrix: MobiusMatrix) -> sympy.Poly:
    """theta(t) = det M(t); exact over QQ for rational weights"""
    if matrix.exact:
        return bareiss_determinant(matrix.polys())
    degree = max(sum(matrix.row_degrees()), 0)
    return poly_from_coefficients(interpolated_determinant(matrix.at, degree))


def characteristic_root(theta: sympy.Poly, upper: float = ROOT_SCAN_UPPER) -> float:
    """Smallest positive root of theta"""
    coefficients = ascending_coefficients(theta)
    rho = smallest_positive_root(coefficients, upper=upper)
    if rho is None:
        beyond = real_positive_roots(coefficients, upper=math.inf)
        if not beyond:
            raise NoPositiveRoot(f"theta(t) = {theta.as_expr()} has no positive root")
        rho = beyond[0]
        logger.info(f"characteristic root {rho:.12g} lies beyond the scan bound {upper}")
    return rho


def root_diagnostics(theta: sympy.Poly, rho: float) -> List[str]:
    smaller = smaller_modulus_roots(ascending_coefficients(theta), rho)
    if smaller:
        message = f"theta has roots of modulus below rho={rho:.12g}: {[complex(round(z.real, 9), round(z.imag, 9)) for z in smaller]}"
        logger.warning(message)
        return [message]
    return []


def kernel_vector(m_at_rho: np.ndarray, rank_tol: float = 1e-8) -> np.ndarray:
    """Positive generator of ker M(rho), scaled so its first entry is 1"""
    _, singular, vt = np.linalg.svd(m_at_rho)
    scale = max(float(singular[0]), 1.0) if singular.size else 1.0
    nullity = int(np.sum(singular <= rank_tol * scale))
    if nullity != 1:
        raise KernelDimensionNot1(
            f"numerical kernel of M(rho) has dimension {nullity} (singular values {singular.tolist()})")
    vector = vt[-1].copy()
    if vector.sum() < 0:
        vector = -vector
    if np.min(vector) <= 0:
        raise NonPositiveKernel(f"kernel vector has non-positive entries: {vector.tolist()}")
    return vector / vector[0]


def normalize_valuation(system: ConcurrentSystem, rho: float, kernel: np.ndarray) -> Dict[Entry, float]:
    """f(α, a) = rho * U_{α.a} / U_α * lambda_α(a)"""
    index = system.state_index
    return {
        (state, letter): rho * float(kernel[index[target]] / kernel[index[state]]) * float(system.weights[(state, letter)])
        for (state, letter), target in sorted(system.action.items(), key=lambda item: (index[item[0][0]], item[0][1]))
    }


def compute_spectrum(system: ConcurrentSystem, rank_tol: float = 1e-8, residual_tol: float = 1e-9) -> Spectrum:
    """Run the whole spectral chain for an irreducible system"""
    matrix = mobius_matrix(system)
    theta = char_poly(matrix)
    rho = characteristic_root(theta)
    diagnostics = root_diagnostics(theta, rho)

    m_at_rho = matrix.at(rho)
    kernel = kernel_vector(m_at_rho, rank_tol)
    residual = float(np.max(np.abs(m_at_rho @ kernel)))
    if residual > residual_tol:
        message = f"|M(rho) U| = {residual:.3g} exceeds {residual_tol:g}"
        logger.warning(message)
        diagnostics.append(message)

    logger.info(f"spectrum of {system.name or '<anonymous>'}: rho={rho:.12g}, U={np.round(kernel, 12).tolist()}")
    return Spectrum(
        states=system.states,
        theta=theta,
        rho=rho,
        kernel=kernel,
        prob_valuation=normalize_valuation(system, rho, kernel),
        residual=residual,
        diagnostics=tuple(diagnostics),
    )


@dataclass(frozen=True)
class ProbabilisticCheck:
    max_abs_h_empty: float
    min_h_nonempty: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_abs_h_empty <= self.tol and self.min_h_nonempty >= -self.tol

    def to_dict(self) -> Dict[str, object]:
        return {'max_abs_h_empty': self.max_abs_h_empty, 'min_h_nonempty': self.min_h_nonempty,
                'passed': self.passed}


def check_probabilistic(system: ConcurrentSystem, valuation: Mapping[Entry, Number], tol: float = 1e-9) -> ProbabilisticCheck:
    """h_α(ε) = 0 and h_α(c) >= 0 on enabled non-empty cliques for every state"""
    transform = system_mobius_transform(system, valuation)
    empty_values = [abs(float(transform.value(state, 0))) for state in system.states]
    nonempty_values = [float(transform.value(state, c)) for state in system.states
                       for c in system.enabled_cliques(state)]
    return ProbabilisticCheck(
        max_abs_h_empty=max(empty_values, default=0.0),
        min_h_nonempty=min(nonempty_values, default=0.0),
        tol=tol,
    )


def restricted_root(system: ConcurrentSystem, letter: str, upper: float) -> float:
    """Characteristic root of the system without one letter; inf when none in (0, upper]"""
    restricted = restrict_letter(system, letter)
    if restricted.alphabet.trivial:
        return math.inf
    theta = char_poly(mobius_matrix(restricted))
    root = smallest_positive_root(ascending_coefficients(theta), upper=upper)
    return math.inf if root is None else root


def spectral_gaps(system: ConcurrentSystem, spectrum: Spectrum, margin: float = 1e-9) -> Dict[str, float]:
    """rho^a for every letter; each must exceed rho"""
    upper = max(ROOT_SCAN_UPPER, 4 * spectrum.rho)
    gaps = {}
    for letter in system.alphabet.letters:
        rho_letter = restricted_root(system, letter, upper)
        if not rho_letter > spectrum.rho + margin:
            raise GapViolation(letter, spectrum.rho, rho_letter)
        gaps[letter] = rho_letter
    return gaps
