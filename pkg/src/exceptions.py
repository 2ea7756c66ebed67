"""
csergo error hierarchy
Every error carries the exit code the command-line front end returns for it
"""

from typing import Any, Dict, Optional


class CsergoError(Exception):
    """Base class for all analysis errors"""

    exit_code = 1

    def __init__(self, message: str, **context: Any):
        super().__init__(message)
        self.message = message
        self.context = context

    def to_dict(self) -> Dict[str, Any]:
        payload = {
            'status': 'error',
            'error_type': type(self).__name__,
            'message': self.message,
        }
        if self.context:
            payload['context'] = {key: str(value) for key, value in sorted(self.context.items())}
        return payload


# Shape errors: the input cannot be read as a model at all

class ModelShapeError(CsergoError):
    exit_code = 2


class ParseError(ModelShapeError):
    def __init__(self, message: str, location: Optional[str] = None):
        text = f"{location}: {message}" if location else message
        super().__init__(text, location=location or '')


class ReflexivePair(ModelShapeError):
    def __init__(self, letter: str):
        super().__init__(f"independence pair ({letter},{letter}) is reflexive", letter=letter)


class UnknownLetter(ModelShapeError):
    def __init__(self, letter: str, where: str = 'alphabet'):
        super().__init__(f"letter {letter!r} is not declared in the {where}", letter=letter)


class DuplicateLetter(ModelShapeError):
    def __init__(self, letter: str):
        super().__init__(f"letter {letter!r} is declared twice", letter=letter)


class UnknownState(ModelShapeError):
    def __init__(self, state: str):
        super().__init__(f"state {state!r} is not declared", state=state)


class DuplicateState(ModelShapeError):
    def __init__(self, state: str):
        super().__init__(f"state {state!r} is declared twice", state=state)


class UnknownPreset(ModelShapeError):
    def __init__(self, name: str):
        super().__init__(f"unknown preset {name!r}", preset=name)


# Semantic errors: the model parses but is not a concurrent system

class ModelSemanticError(CsergoError):
    exit_code = 3


class CommutationViolation(ModelSemanticError):
    def __init__(self, state: str, a: str, b: str, left: Any, right: Any):
        super().__init__(
            f"commutation violated at state {state!r} for independent letters ({a},{b}): "
            f"({state}.{a}).{b}={left} but ({state}.{b}).{a}={right}",
            state=state, a=a, b=b,
        )


class WeightSupportMismatch(ModelSemanticError):
    def __init__(self, state: str, letter: str, detail: str):
        super().__init__(f"weight/action support mismatch at ({state},{letter}): {detail}",
                         state=state, letter=letter)


class NonPositiveWeight(ModelSemanticError):
    def __init__(self, where: str, value: Any):
        super().__init__(f"weight at {where} must be positive, got {value}", where=where)


class ValuationInconsistency(ModelSemanticError):
    def __init__(self, state: str, a: str, b: str):
        super().__init__(
            f"weights along {a}{b} and {b}{a} from state {state!r} differ; they do not define a valuation",
            state=state, a=a, b=b,
        )


class IncompatibleAdditive(ModelSemanticError):
    def __init__(self, message: str, **context: Any):
        super().__init__(message, **context)


# Irreducibility

class IrreducibilityError(CsergoError):
    exit_code = 4

    def __init__(self, failed_clauses):
        self.failed_clauses = list(failed_clauses)
        super().__init__("system is not irreducible: failed " + ', '.join(self.failed_clauses),
                         failed=','.join(self.failed_clauses))


# Numeric failures

class NumericError(CsergoError):
    exit_code = 5


class NoRootInUnitInterval(NumericError):
    pass


class NoPositiveRoot(NumericError):
    pass


class KernelDimensionNot1(NumericError):
    pass


class NonPositiveKernel(NumericError):
    pass


class SingularAtS(NumericError):
    pass


class GapViolation(NumericError):
    def __init__(self, letter: str, rho: float, rho_letter: float):
        super().__init__(
            f"restricting letter {letter!r} does not increase the characteristic root: "
            f"rho={rho:.12g}, rho^{letter}={rho_letter:.12g}",
            letter=letter,
        )


class NotStochastic(NumericError):
    pass


class NotStronglyConnected(NumericError):
    pass


class StructuralInconsistency(NumericError):
    pass


class UmbrellaViolation(NumericError):
    pass


class DeadRow(NumericError):
    pass


class BudgetExceeded(NumericError):
    pass


class NotADivisor(NumericError):
    pass


class LetterNeverHit(NumericError):
    pass
