from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings

from src.exceptions import NotStochastic, NotStronglyConnected
from src.markov_engine import (
    clique_chain,
    g_function,
    stationary_by_power_iteration,
    stationary_distribution,
    system_mobius_transform,
    transition_kernel,
)
from src.presets import dimer_alphabet
from src.spectral_solver import compute_spectrum

from tests.conftest import product_systems, random_systems, vertex

PIPELINES = ['toy_pipeline', 'dimer_pipeline', 'cyc6_pipeline', 'phil5_pipeline']


def kernel_of(system):
    spectrum = compute_spectrum(system)
    transform = system_mobius_transform(system, spectrum.prob_valuation)
    return transform, transition_kernel(system, transform, g_function(system, transform))


class TestMobiusTransformPerState:
    def test_toy_values(self, toy_pipeline, toy_system):
        transform = toy_pipeline.transform
        expected = {
            ('0', 'a'): 0.0, ('0', 'b'): 0.5, ('0', 'ab'): 0.5,
            ('1', 'a'): 0.0, ('1', 'b'): 0.5, ('1', 'ab'): 0.5,
            ('2', 'a'): 0.25, ('2', 'b'): 0.25, ('2', 'c'): 0.25, ('2', 'ab'): 0.25,
        }
        for (state, clique), value in expected.items():
            assert float(transform.value(*vertex(toy_system, state, clique))) == pytest.approx(value, abs=1e-12)

    def test_empty_clique_vanishes(self, toy_pipeline, toy_system):
        for state in toy_system.states:
            assert abs(float(toy_pipeline.transform.value(state, 0))) <= 1e-12

    def test_exact_weights_keep_fractions(self, dimer_system):
        transform = system_mobius_transform(dimer_system, dimer_system.weights)
        a = dimer_system.alphabet.parse_clique('a')
        # constant one: h(a) = 1 - 1 - 1 for the cliques a, ac, ad
        assert transform.value('*', a) == Fraction(-1)

    def test_g_sums_the_normal_successors(self, toy_pipeline, toy_system):
        g = g_function(toy_system, toy_pipeline.transform)
        assert float(g[vertex(toy_system, '2', 'ab')]) == pytest.approx(1.0)
        assert float(g[vertex(toy_system, '2', 'b')]) == pytest.approx(0.5)
        assert float(g[vertex(toy_system, '1', 'a')]) == pytest.approx(0.0, abs=1e-12)


class TestTransitionKernel:
    def test_toy_entries(self, toy_pipeline, toy_system):
        kernel = toy_pipeline.kernel
        row = kernel.index[vertex(toy_system, '0', 'ab')]
        assert kernel.matrix[row, kernel.index[vertex(toy_system, '2', 'c')]] == pytest.approx(0.25)
        row = kernel.index[vertex(toy_system, '0', 'b')]
        assert kernel.matrix[row, kernel.index[vertex(toy_system, '2', 'b')]] == pytest.approx(0.5)
        assert kernel.matrix[row, kernel.index[vertex(toy_system, '2', 'a')]] == 0

    def test_toy_dead_rows(self, toy_pipeline, toy_system):
        kernel = toy_pipeline.kernel
        dead = {kernel.vertices[i] for i in kernel.dead_rows}
        assert dead == {vertex(toy_system, '0', 'a'), vertex(toy_system, '1', 'a')}
        assert len(kernel.vertices) == 10

    def test_live_rows_are_stochastic(self, toy_pipeline):
        kernel = toy_pipeline.kernel
        assert np.allclose(kernel.row_sums()[kernel.live_rows()], 1.0, atol=1e-12)
        assert np.all(kernel.matrix >= 0)

    def test_initial_law_is_the_transform(self, toy_pipeline, toy_system):
        kernel = toy_pipeline.kernel
        law = kernel.initial['0']
        assert law.sum() == pytest.approx(1.0)
        assert law[kernel.index[vertex(toy_system, '0', 'b')]] == pytest.approx(0.5)
        assert law[kernel.index[vertex(toy_system, '0', 'a')]] == 0

    def test_labels(self, toy_pipeline, toy_system):
        assert toy_pipeline.kernel.label(vertex(toy_system, '2', 'ab')) == '2-ab'

    @given(random_systems)
    def test_random_systems(self, system):
        transform, kernel = kernel_of(system)
        assert all(abs(float(transform.value(state, 0))) <= 1e-9 for state in system.states)
        assert np.allclose(kernel.row_sums()[kernel.live_rows()], 1.0, atol=1e-9)
        for law in kernel.initial.values():
            assert law.sum() == pytest.approx(1.0, abs=1e-9)


def factorization_gap(system, transform):
    """Largest |h_α(c) - f_α(c) g_{α.c}(c)| over the state-and-cliques"""
    g = g_function(system, transform)
    gap = 0.0
    for state in system.states:
        for c in system.enabled_cliques(state):
            beta = system.act_clique(state, c)
            product = float(transform.f[(state, c)]) * float(g[(beta, c)])
            gap = max(gap, abs(float(transform.value(state, c)) - product))
    return gap


class TestTransformFactorization:
    @pytest.mark.parametrize('fixture', PIPELINES)
    def test_transform_is_valuation_times_normalizer(self, fixture, request):
        pipeline = request.getfixturevalue(fixture)
        assert factorization_gap(pipeline.system, pipeline.transform) <= 1e-9

    @pytest.mark.parametrize('fixture', PIPELINES)
    def test_kernel_forms_agree(self, fixture, request):
        kernel = request.getfixturevalue(fixture).kernel
        assert kernel.discrepancy <= 1e-9

    @given(random_systems)
    def test_random_systems(self, system):
        transform, kernel = kernel_of(system)
        assert factorization_gap(system, transform) <= 1e-9
        assert kernel.discrepancy <= 1e-9

    @pytest.mark.slow
    @settings(max_examples=100)
    @given(product_systems())
    def test_many_product_systems(self, system):
        transform, kernel = kernel_of(system)
        assert factorization_gap(system, transform) <= 1e-9
        assert kernel.discrepancy <= 1e-9
        assert np.allclose(kernel.row_sums()[kernel.live_rows()], 1.0, atol=1e-9)


class TestStationaryDistribution:
    def test_two_cycle(self):
        assert stationary_distribution(np.array([[0.0, 1.0], [1.0, 0.0]])) == pytest.approx([0.5, 0.5])

    def test_rejects_substochastic(self):
        with pytest.raises(NotStochastic):
            stationary_distribution(np.array([[0.5, 0.0], [1.0, 0.0]]))

    def test_rejects_transient_states(self):
        with pytest.raises(NotStronglyConnected):
            stationary_distribution(np.array([[0.0, 1.0], [0.0, 1.0]]))

    def test_power_iteration_agrees(self):
        matrix = np.array([[0.1, 0.9, 0.0], [0.0, 0.2, 0.8], [0.7, 0.0, 0.3]])
        assert stationary_by_power_iteration(matrix) == pytest.approx(stationary_distribution(matrix), abs=1e-9)

    def test_toy_final_component(self, toy_pipeline, toy_system):
        component = toy_pipeline.dsc.final_components()[0]
        pi = stationary_distribution(toy_pipeline.kernel.restrict(component.vertices))
        law = dict(zip(component.vertices, pi))
        expected = {('0', 'b'): 0.15, ('0', 'ab'): 0.15, ('2', 'a'): 0.1,
                    ('2', 'b'): 0.25, ('2', 'c'): 0.3, ('2', 'ab'): 0.05}
        for (state, clique), value in expected.items():
            assert law[vertex(toy_system, state, clique)] == pytest.approx(value, abs=1e-9)


class TestCliqueChain:
    def test_dimer(self):
        alphabet = dimer_alphabet()
        chain = clique_chain(alphabet)
        label = alphabet.label
        assert chain.rho == pytest.approx(1 / 3, abs=1e-12)
        h = {label(c): value for c, value in chain.h.items()}
        assert h['b'] == pytest.approx(2 / 9)
        assert h['ac'] == pytest.approx(1 / 9)
        assert h['ε'] == pytest.approx(0.0, abs=1e-12)
        assert {label(c): value for c, value in chain.g.items()}['a'] == pytest.approx(1 / 3)

    def test_dimer_rows(self):
        alphabet = dimer_alphabet()
        chain = clique_chain(alphabet)
        a, b, c = (alphabet.parse_clique(x) for x in 'abc')
        matrix = chain.matrix()
        assert matrix[(a, a)] == pytest.approx(1 / 3)
        assert matrix[(a, b)] == pytest.approx(2 / 3)
        assert matrix[(a, c)] == 0
        assert np.allclose(chain.kernel.row_sums(), 1.0)
