"""
Polynomial helpers
Exact polynomials in t (sympy, QQ domain) for rational weights and float coefficient
lists otherwise; root isolation and polynomial-matrix determinants
"""

import logging
import math
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Union

import numpy as np
import sympy

logger = logging.getLogger(__name__)

T = sympy.Symbol('t')

Number = Union[int, Fraction, float]

SCAN_STEP = 2.0 ** -10
BISECTION_TOL = 1e-12
IMAG_TOL = 1e-6


def is_exact(value) -> bool:
    return isinstance(value, (int, Fraction)) and not isinstance(value, bool)


def to_sympy(value: Number):
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    if isinstance(value, int):
        return sympy.Integer(value)
    return sympy.Float(value)


def from_sympy(value, exact: bool) -> Number:
    if exact:
        rational = sympy.Rational(value)
        return Fraction(int(rational.p), int(rational.q))
    return float(value)


def trim(coefficients: Sequence[Number]) -> List[Number]:
    """Drop vanishing leading (highest-degree) coefficients of an ascending list"""
    trimmed = list(coefficients)
    while len(trimmed) > 1 and trimmed[-1] == 0:
        trimmed.pop()
    return trimmed


def poly_from_coefficients(coefficients: Sequence[Number]) -> sympy.Poly:
    """Build a Poly in t from ascending coefficients (QQ when all are exact, RR otherwise)"""
    coefficients = trim(coefficients) or [0]
    domain = 'QQ' if all(is_exact(c) for c in coefficients) else 'RR'
    return sympy.Poly([to_sympy(c) for c in reversed(coefficients)], T, domain=domain)


def ascending_coefficients(poly: sympy.Poly) -> List[Number]:
    exact = poly.get_domain().is_QQ or poly.get_domain().is_ZZ
    return [from_sympy(c, exact) for c in reversed(poly.all_coeffs())]


def horner(coefficients: Sequence[Number], x):
    value = 0
    for c in reversed(coefficients):
        value = value * x + c
    return value


def _sign(value) -> int:
    return (value > 0) - (value < 0)


def _bisect(coefficients: Sequence[float], lo: float, hi: float, tol: float) -> float:
    f_lo = horner(coefficients, lo)
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        f_mid = horner(coefficients, mid)
        if f_mid == 0:
            return mid
        if _sign(f_mid) == _sign(f_lo):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def real_positive_roots(coefficients: Sequence[Number], upper: float) -> List[float]:
    """Companion-matrix roots that are real and lie in (0, upper]"""
    coefficients = trim(coefficients)
    if len(coefficients) <= 1:
        return []
    roots = np.roots([float(c) for c in reversed(coefficients)])
    found = [float(r.real) for r in roots
             if abs(r.imag) <= IMAG_TOL and 0 < r.real <= upper + BISECTION_TOL]
    return sorted(found)


def smallest_positive_root(coefficients: Sequence[Number], upper: float = 1.0,
                           step: float = SCAN_STEP, tol: float = BISECTION_TOL) -> Optional[float]:
    """
    Smallest root of a polynomial in (0, upper]

    Scans the grid k*step with exact evaluation when the coefficients are rational,
    bisects the first sign change to tol, and falls back to companion-matrix roots
    when the scan sees no sign change (even-multiplicity roots).

    Args:
        coefficients: ascending coefficients, constant term first
        upper: right end of the search interval
        step: grid step, a power of two so grid points are exact rationals
        tol: bisection width

    Returns:
        The root, or None if the polynomial has no root in (0, upper]
    """
    coefficients = trim(coefficients)
    if len(coefficients) <= 1:
        return None
    exact = all(is_exact(c) for c in coefficients)
    floats = [float(c) for c in coefficients]
    zero_band = 0.0 if exact else 1e-13 * sum(abs(c) for c in floats)

    grid_step = Fraction(step)
    bound = Fraction(upper)
    count = math.ceil(bound / grid_step)
    previous_x = Fraction(0)
    previous_value = coefficients[0]
    for k in range(1, count + 1):
        x = min(k * grid_step, bound)
        value = horner(coefficients, x) if exact else horner(floats, float(x))
        if value == 0 or abs(value) <= zero_band:
            return float(x)
        if _sign(value) != _sign(previous_value):
            return _bisect(floats, float(previous_x), float(x), tol)
        previous_x, previous_value = x, value

    candidates = real_positive_roots(coefficients, upper)
    if candidates:
        logger.debug(f"no sign change on the scan grid; companion roots give {candidates[0]:.12g}")
        return candidates[0]
    return None


def smaller_modulus_roots(coefficients: Sequence[Number], root: float, margin: float = 1e-7) -> List[complex]:
    """Complex roots of strictly smaller modulus than root"""
    coefficients = trim(coefficients)
    if len(coefficients) <= 1:
        return []
    roots = np.roots([float(c) for c in reversed(coefficients)])
    return [complex(r) for r in roots if abs(r) < root - margin * max(1.0, root)]


def bareiss_determinant(entries: List[List[sympy.Poly]]) -> sympy.Poly:
    """Fraction-free Gaussian elimination over QQ[t]"""
    size = len(entries)
    if size == 0:
        return sympy.Poly(1, T, domain='QQ')
    work = [list(row) for row in entries]
    sign = 1
    previous = sympy.Poly(1, T, domain='QQ')
    for k in range(size - 1):
        if work[k][k].is_zero:
            pivot = next((i for i in range(k + 1, size) if not work[i][k].is_zero), None)
            if pivot is None:
                return sympy.Poly(0, T, domain='QQ')
            work[k], work[pivot] = work[pivot], work[k]
            sign = -sign
        for i in range(k + 1, size):
            for j in range(k + 1, size):
                work[i][j] = (work[i][j] * work[k][k] - work[i][k] * work[k][j]).exquo(previous)
        previous = work[k][k]
    determinant = work[size - 1][size - 1]
    return -determinant if sign < 0 else determinant


def interpolated_determinant(evaluate: Callable[[complex], np.ndarray], degree: int) -> List[float]:
    """
    Coefficients of det(A(t)) for a float polynomial matrix A

    det is sampled at the degree+1 roots of unity and the coefficients are recovered
    with a discrete Fourier transform.
    """
    count = degree + 1
    nodes = np.exp(2j * np.pi * np.arange(count) / count)
    values = np.array([np.linalg.det(evaluate(z)) for z in nodes])
    coefficients = (np.fft.fft(values) / count).real
    scale = float(np.max(np.abs(coefficients))) if count else 0.0
    coefficients[np.abs(coefficients) < 1e-13 * scale] = 0.0
    return [float(c) for c in coefficients]
