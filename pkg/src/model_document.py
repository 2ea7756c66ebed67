"""
Model documents
JSON form of a concurrent system: letters, independence, states, action and optional
weights. Numbers are read as exact rationals whenever they can be.
"""

import json
import logging
import math
from decimal import Decimal
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, Mapping, Tuple, Union

from src.exceptions import ParseError, UnknownLetter, UnknownState
from src.polynomials import Number
from src.system_model import ConcurrentSystem, validate_system
from src.trace_core import Alphabet, validate_alphabet

logger = logging.getLogger(__name__)

PRESET_PREFIX = 'preset:'


def parse_number(value: Any, location: str) -> Number:
    """int, decimal or 'p/q' string to Fraction; other numeric strings to float"""
    if isinstance(value, bool) or value is None:
        raise ParseError(f"expected a number, got {value!r}", location)
    if isinstance(value, (int, Decimal, Fraction)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ParseError(f"weight {value!r} is not finite", location)
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError):
            pass
        try:
            number = float(value)
        except ValueError:
            raise ParseError(f"cannot read {value!r} as a number", location) from None
        if not math.isfinite(number):
            raise ParseError(f"weight {value!r} is not finite", location)
        return number
    raise ParseError(f"expected a number, got {type(value).__name__}", location)


def _require(document: Mapping[str, Any], key: str, kind, location: str = ''):
    if key not in document:
        raise ParseError(f"missing field {key!r}", location or key)
    value = document[key]
    if not isinstance(value, kind):
        raise ParseError(f"field {key!r} must be a {kind.__name__}", location or key)
    return value


def parse_alphabet(document: Mapping[str, Any]) -> Alphabet:
    letters = _require(document, 'letters', list)
    for position, letter in enumerate(letters):
        if not isinstance(letter, str) or not letter:
            raise ParseError('letters must be non-empty strings', f"letters[{position}]")
    pairs = document.get('independence', [])
    if not isinstance(pairs, list):
        raise ParseError("field 'independence' must be a list", 'independence')
    for position, pair in enumerate(pairs):
        if not isinstance(pair, list) or len(pair) != 2 or not all(isinstance(x, str) for x in pair):
            raise ParseError('each independence entry must be a list of two letters', f"independence[{position}]")
    return validate_alphabet(letters, pairs)


def parse_document(document: Any) -> ConcurrentSystem:
    if not isinstance(document, dict):
        raise ParseError('model document must be a JSON object')
    alphabet = parse_alphabet(document)
    states = _require(document, 'states', list)
    for position, state in enumerate(states):
        if not isinstance(state, str):
            raise ParseError('states must be strings', f"states[{position}]")
    declared = set(states)

    action: Dict[Tuple[str, str], str] = {}
    for state, row in _require(document, 'action', dict).items():
        if state not in declared:
            raise UnknownState(state)
        if not isinstance(row, dict):
            raise ParseError('action rows must map letters to states', f"action.{state}")
        for letter, target in row.items():
            if letter not in alphabet.index:
                raise UnknownLetter(letter, where=f"alphabet (action.{state})")
            if not isinstance(target, str):
                raise ParseError('action targets must be state names', f"action.{state}.{letter}")
            action[(state, letter)] = target

    weights: Dict[Tuple[str, str], Number] = {entry: Fraction(1) for entry in action}
    raw_weights = document.get('weights') or {}
    if not isinstance(raw_weights, dict):
        raise ParseError("field 'weights' must be an object", 'weights')
    for state, row in raw_weights.items():
        if not isinstance(row, dict):
            raise ParseError('weight rows must map letters to numbers', f"weights.{state}")
        for letter, value in row.items():
            weights[(state, letter)] = parse_number(value, f"weights.{state}.{letter}")

    name = document.get('name', '')
    return validate_system(alphabet, states, action, weights, name=name if isinstance(name, str) else '')


def read_json(path: Union[str, Path]) -> Any:
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        raise ParseError(f"cannot read model file: {e.strerror}", str(path)) from None
    try:
        return json.loads(text, parse_float=Decimal)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, f"{path}:{e.lineno}:{e.colno}") from None


def load_model(source: str) -> ConcurrentSystem:
    """A model file path, or preset:name[:n]"""
    if source.startswith(PRESET_PREFIX):
        from src.presets import build_preset

        parts = source[len(PRESET_PREFIX):].split(':')
        n = int(parts[1]) if len(parts) > 1 and parts[1] else None
        return build_preset(parts[0], n=n)
    system = parse_document(read_json(source))
    logger.info(f"loaded model {system.name or source}: {len(system.states)} states, {system.alphabet.size} letters")
    return system


def _format_number(value: Number) -> Union[int, float, str]:
    if isinstance(value, Fraction):
        return value.numerator if value.denominator == 1 else str(value)
    if isinstance(value, int):
        return value
    return float(value)


def to_document(system: ConcurrentSystem) -> Dict[str, Any]:
    letters = list(system.alphabet.letters)
    independence = sorted(
        (sorted(pair, key=system.alphabet.index.__getitem__) for pair in system.alphabet.independence),
        key=lambda pair: [system.alphabet.index[x] for x in pair],
    )
    action: Dict[str, Dict[str, str]] = {state: {} for state in system.states}
    weights: Dict[str, Dict[str, Any]] = {state: {} for state in system.states}
    for state in system.states:
        for letter in letters:
            if (state, letter) in system.action:
                action[state][letter] = system.action[(state, letter)]
                weights[state][letter] = _format_number(system.weights[(state, letter)])
    document: Dict[str, Any] = {
        'name': system.name,
        'letters': letters,
        'independence': independence,
        'states': list(system.states),
        'action': action,
    }
    if any(value != 1 for value in system.weights.values()):
        document['weights'] = weights
    return document


def dumps_document(system: ConcurrentSystem) -> str:
    return json.dumps(to_document(system), indent=2, ensure_ascii=False) + '\n'
