"""
Shared fixtures: the worked example systems, their analysis pipelines and random
irreducible systems for property tests
"""

from fractions import Fraction

import pytest
from hypothesis import HealthCheck, assume, settings, strategies as st

from src.analysis_pipeline import ErgodicAnalysisPipeline
from src.presets import cyc6, dimer, free, markov_chain_system, philosophers, toy
from src.settings import Settings
from src.system_model import irreducibility_report, validate_system, wrap_monoid
from src.trace_core import validate_alphabet

SLOW_CHECKS = [HealthCheck.filter_too_much, HealthCheck.too_slow]

settings.register_profile('default', max_examples=25, deadline=None, suppress_health_check=SLOW_CHECKS)
settings.register_profile('thorough', max_examples=200, deadline=None, suppress_health_check=SLOW_CHECKS)
settings.load_profile('default')


@pytest.fixture(scope='session')
def toy_system():
    return toy()


@pytest.fixture(scope='session')
def dimer_system():
    return dimer()


@pytest.fixture(scope='session')
def cyc6_system():
    return cyc6()


@pytest.fixture(scope='session')
def phil4_system():
    return philosophers(4)


@pytest.fixture(scope='session')
def phil5_system():
    return philosophers(5)


@pytest.fixture(scope='session')
def free2_system():
    return free(2)


@pytest.fixture(scope='session')
def toy_pipeline(toy_system):
    return ErgodicAnalysisPipeline(toy_system, Settings()).run()


@pytest.fixture(scope='session')
def dimer_pipeline(dimer_system):
    return ErgodicAnalysisPipeline(dimer_system, Settings()).run()


@pytest.fixture(scope='session')
def cyc6_pipeline(cyc6_system):
    return ErgodicAnalysisPipeline(cyc6_system, Settings()).run()


@pytest.fixture(scope='session')
def phil5_pipeline(phil5_system):
    return ErgodicAnalysisPipeline(phil5_system, Settings()).run()


def vertex(system, state, clique):
    return (state, system.alphabet.parse_clique(clique))


weights = st.fractions(min_value=Fraction(1, 2), max_value=3, max_denominator=4)


@st.composite
def irreducible_alphabets(draw, max_letters=4):
    n = draw(st.integers(min_value=1, max_value=max_letters))
    letters = [chr(ord('a') + i) for i in range(n)]
    pairs = [[letters[i], letters[j]] for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique_by=tuple, max_size=len(pairs))) if pairs else []
    alphabet = validate_alphabet(letters, chosen)
    if not alphabet.irreducible:
        # disconnected dependence graph: fall back to the free monoid
        alphabet = validate_alphabet(letters, [])
    return alphabet


@st.composite
def weighted_monoids(draw):
    alphabet = draw(irreducible_alphabets())
    letter_weights = {letter: draw(weights) for letter in alphabet.letters}
    return wrap_monoid(alphabet, letter_weights, name='random-monoid')


@st.composite
def markov_chains(draw, max_states=4):
    n = draw(st.integers(min_value=1, max_value=max_states))
    rows = []
    for _ in range(n):
        raw = [draw(st.integers(min_value=1, max_value=9)) for _ in range(n)]
        total = sum(raw)
        rows.append([Fraction(value, total) for value in raw])
    return markov_chain_system(rows, name='random-chain')


@st.composite
def product_systems(draw, max_letters=4):
    """
    Irreducible systems on a product of at most two two-state coordinates

    Each letter moves the first coordinate, the second, or both. Letters moving
    different coordinates may be declared independent, which keeps every square
    commuting and every valuation consistent.
    """
    sizes = (draw(st.integers(min_value=1, max_value=2)), draw(st.integers(min_value=1, max_value=2)))
    states = [f"{x}{y}" for x in range(sizes[0]) for y in range(sizes[1])]
    n = draw(st.integers(min_value=1, max_value=max_letters))
    letters = [chr(ord('a') + i) for i in range(n)]
    roles = [draw(st.sampled_from(('x', 'y', 'xy'))) for _ in letters]
    pairs = [(letters[i], letters[j]) for i in range(n) for j in range(i + 1, n) if {roles[i], roles[j]} == {'x', 'y'}]
    independent = draw(st.lists(st.sampled_from(pairs), unique=True, max_size=len(pairs))) if pairs else []
    alphabet = validate_alphabet(letters, [list(pair) for pair in independent])

    action, values = {}, {}
    for letter, role in zip(letters, roles):
        if role == 'xy':
            for state in states:
                target = draw(st.integers(min_value=-1, max_value=len(states) - 1))
                if target >= 0:
                    action[(state, letter)] = states[target]
                    values[(state, letter)] = draw(weights)
            continue
        axis = 0 if role == 'x' else 1
        moves = {}
        for local in range(sizes[axis]):
            target = draw(st.integers(min_value=-1, max_value=sizes[axis] - 1))
            moves[local] = (target, draw(weights)) if target >= 0 else None
        for state in states:
            coordinates = [int(state[0]), int(state[1])]
            move = moves[coordinates[axis]]
            if move is None:
                continue
            coordinates[axis] = move[0]
            action[(state, letter)] = f"{coordinates[0]}{coordinates[1]}"
            values[(state, letter)] = move[1]

    system = validate_system(alphabet, states, action, values, name='random-product')
    assume(irreducibility_report(system).irreducible)
    return system


random_systems = st.one_of(weighted_monoids(), markov_chains(), product_systems())
