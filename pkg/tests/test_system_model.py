from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from src.exceptions import (
    BudgetExceeded,
    CommutationViolation,
    NonPositiveWeight,
    SingularAtS,
    UnknownState,
    ValuationInconsistency,
    WeightSupportMismatch,
)
from src.oracle_bruteforce import growth_series_at, series_coefficients
from src.presets import cyc6, dimer_alphabet, philosophers, toy
from src.system_model import (
    act,
    enumerate_trajectories,
    growth_matrix_at,
    irreducibility_report,
    mobius_matrix,
    restrict_letter,
    trace_weight,
    validate_system,
    with_weights,
    wrap_monoid,
)
from src.trace_core import concat, normal_form

from tests.conftest import product_systems


def toy_parts(toy_system):
    return toy_system.alphabet, list(toy_system.states), dict(toy_system.action)


ACTING_SYSTEMS = [toy(), cyc6(), philosophers(5)]


def act_or_sink(system, state, x):
    return None if state is None else act(system, state, x)


@st.composite
def acting_triples(draw):
    """A system, a state and two traces, with ⊥ reachable"""
    system = draw(st.one_of(st.sampled_from(ACTING_SYSTEMS), product_systems()))
    letters = st.lists(st.sampled_from(system.alphabet.letters), max_size=6)
    state = draw(st.sampled_from(system.states))
    return system, state, normal_form(system.alphabet, draw(letters)), normal_form(system.alphabet, draw(letters))


class TestValidation:
    def test_toy_is_valid(self, toy_system):
        assert toy_system.states == ('0', '1', '2')
        assert toy_system.exact

    def test_commutation_violation_names_the_square(self, toy_system):
        alphabet, states, action = toy_parts(toy_system)
        action[('0', 'b')] = '1'
        with pytest.raises(CommutationViolation) as error:
            validate_system(alphabet, states, action)
        assert error.value.exit_code == 3
        assert error.value.context['state'] == '0'

    def test_unknown_target_state(self, toy_system):
        alphabet, states, action = toy_parts(toy_system)
        action[('0', 'a')] = '7'
        with pytest.raises(UnknownState):
            validate_system(alphabet, states, action)

    def test_weight_without_action(self, toy_system):
        alphabet, states, action = toy_parts(toy_system)
        weights = {entry: Fraction(1) for entry in action}
        weights[('0', 'c')] = Fraction(1)
        with pytest.raises(WeightSupportMismatch):
            validate_system(alphabet, states, action, weights)

    def test_zero_weight_rejected(self, toy_system):
        alphabet, states, action = toy_parts(toy_system)
        weights = {entry: Fraction(1) for entry in action}
        weights[('2', 'c')] = Fraction(0)
        with pytest.raises(NonPositiveWeight):
            validate_system(alphabet, states, action, weights)

    def test_weights_must_define_a_valuation(self, toy_system):
        weights = {entry: Fraction(1) for entry in toy_system.action}
        weights[('0', 'a')] = Fraction(2)
        with pytest.raises(ValuationInconsistency):
            with_weights(toy_system, weights)


class TestAction:
    def test_act_on_a_trace(self, toy_system):
        assert act(toy_system, '0', normal_form(toy_system.alphabet, 'ab')) == '2'
        assert act(toy_system, '0', normal_form(toy_system.alphabet, 'c')) is None

    def test_act_unknown_state(self, toy_system):
        with pytest.raises(UnknownState):
            act(toy_system, '9', normal_form(toy_system.alphabet, 'a'))

    def test_trace_weight_is_zero_off_support(self, toy_system):
        assert trace_weight(toy_system, '0', normal_form(toy_system.alphabet, 'c')) == 0
        assert trace_weight(toy_system, '0', normal_form(toy_system.alphabet, 'abc')) == 1

    @given(acting_triples())
    def test_action_of_a_product(self, triple):
        system, state, x, y = triple
        assert act(system, state, concat(x, y)) == act_or_sink(system, act(system, state, x), y)

    @pytest.mark.slow
    @settings(max_examples=10000)
    @given(acting_triples())
    def test_action_of_a_product_on_many_triples(self, triple):
        system, state, x, y = triple
        assert act(system, state, concat(x, y)) == act_or_sink(system, act(system, state, x), y)


class TestIrreducibility:
    def test_toy(self, toy_system):
        assert irreducibility_report(toy_system).irreducible

    def test_cyc6(self, cyc6_system):
        assert irreducibility_report(cyc6_system).irreducible

    def test_removing_the_only_c_arrow(self, toy_system):
        alphabet, states, action = toy_parts(toy_system)
        del action[('2', 'c')]
        report = irreducibility_report(validate_system(alphabet, states, action))
        assert not report.live
        assert not report.transitive
        assert 'live' in report.failed_clauses()

    def test_disconnected_dependence(self):
        from src.trace_core import validate_alphabet
        report = irreducibility_report(wrap_monoid(validate_alphabet(['a', 'b'], [['a', 'b']])))
        assert report.failed_clauses() == ['monoid_irreducible']


class TestMobiusMatrix:
    def test_toy(self, toy_system):
        matrix = mobius_matrix(toy_system)
        expected = [
            [(1, 0, 0), (0, -1, 0), (0, -1, 1)],
            [(0, -1, 0), (1, 0, 0), (0, -1, 1)],
            [(0, -1, 0), (0, 0, 0), (1, -2, 1)],
        ]
        assert [[tuple(entry) for entry in row] for row in matrix.coefficients] == expected

    def test_dimer_is_the_mobius_polynomial(self, dimer_system):
        matrix = mobius_matrix(dimer_system)
        assert matrix.coefficients == (((1, -4, 3),),)

    def test_growth_matrix_matches_the_series(self, toy_system):
        matrix = mobius_matrix(toy_system)
        s = 0.25
        series = sum(np.array(coefficient.tolist(), dtype=float) * s ** n
                     for n, coefficient in enumerate(series_coefficients(matrix, 40)))
        assert np.allclose(growth_matrix_at(matrix, s), series, atol=1e-9)

    @pytest.mark.parametrize('fixture', ['toy_pipeline', 'dimer_pipeline', 'cyc6_pipeline', 'phil5_pipeline'])
    @pytest.mark.parametrize('fraction', [0.1, 0.5, 0.9])
    def test_growth_inverts_the_mobius_matrix(self, fixture, fraction, request):
        pipeline = request.getfixturevalue(fixture)
        matrix = mobius_matrix(pipeline.system)
        s = fraction * pipeline.spectrum.rho
        growth = growth_matrix_at(matrix, s)
        assert np.allclose(growth @ matrix.at(s), np.eye(matrix.size), atol=1e-10)
        assert growth.min() >= -1e-12
        assert np.allclose(growth_series_at(matrix, s), growth, rtol=1e-8, atol=1e-10)

    def test_growth_beyond_the_root(self, toy_system):
        with pytest.raises(SingularAtS):
            growth_matrix_at(mobius_matrix(toy_system), 0.5)


class TestRestriction:
    def test_toy_without_c(self, toy_system):
        restricted = restrict_letter(toy_system, 'c')
        assert restricted.alphabet.letters == ('a', 'b')
        assert ('2', 'c') not in restricted.action
        assert restricted.states == toy_system.states

    def test_dimer_without_a(self):
        restricted = restrict_letter(wrap_monoid(dimer_alphabet()), 'a')
        assert restricted.alphabet.letters == ('b', 'c', 'd')
        assert restricted.alphabet.are_independent('b', 'd')
        assert not restricted.alphabet.are_independent('b', 'c')


class TestTrajectories:
    def test_length_one_from_state_zero(self, toy_system):
        traces = enumerate_trajectories(toy_system, '0', 1)
        assert [x.label() for x in traces] == ['ε', 'a', 'b']

    def test_counts_match_the_series(self, toy_system):
        matrix = mobius_matrix(toy_system)
        coefficients = series_coefficients(matrix, 2)
        traces = enumerate_trajectories(toy_system, '0', 2)
        for n in range(3):
            expected = sum(coefficients[n][0, j] for j in range(3))
            assert sum(1 for x in traces if x.length == n) == expected

    def test_guard(self, toy_system):
        with pytest.raises(BudgetExceeded):
            enumerate_trajectories(toy_system, '0', 15)
