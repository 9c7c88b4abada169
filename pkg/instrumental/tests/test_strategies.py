from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from instrumental.helpers.exceptions import DimensionMismatchError, InvalidDistributionError
from instrumental.helpers.inequalities_helper import catalog, evaluate_batch
from instrumental.helpers.scenario_helper import Scenario, validate_distribution
from instrumental.helpers.strategies_helper import (
    InvalidMarginalError,
    LatentJoint,
    ZeroMarginalError,
    build_matrices,
    dependence_measure,
    dependence_measure_matrix,
    do_table_batch,
    enumerate_strategies,
    forward_distribution,
    instrument_marginal,
    interventional,
    make_latent_joint,
    n_strategies,
    observed_joint_batch,
    parse_latent_joint,
    point_mass,
    product_joint,
    random_independent_joint,
    random_joint,
    serialize_latent_joint,
    strategy_components,
    strategy_index,
)

F = Fraction


def two_point_joint(scenario, first, second):
    """Half the mass on each of two strategies."""
    return LatentJoint(scenario, point_mass(scenario, *first, F(1, 2)) + point_mass(scenario, *second, F(1, 2)), True)


class StrategyOrderTests(SimpleTestCase):
    def test_strategy_counts(self):
        self.assertEqual(n_strategies(Scenario(2)), 32)
        self.assertEqual(n_strategies(Scenario(3)), 96)
        self.assertEqual(n_strategies(Scenario(4)), 256)

    def test_response_tables_put_input_zero_first(self):
        strategies = enumerate_strategies(Scenario(2))
        self.assertEqual(strategies[0].g, (0, 0))
        self.assertEqual(strategies[1].g, (0, 1))
        self.assertEqual(strategies[2].g, (1, 0))
        self.assertEqual(strategies[3].g, (1, 1))
        self.assertEqual(strategies[strategy_index(Scenario(2), 0, 2, 0)].f, (1, 0))

    def test_index_and_components_are_inverse(self):
        scenario = Scenario(3)
        for index in range(n_strategies(scenario)):
            self.assertEqual(strategy_index(scenario, *strategy_components(scenario, index)), index)

    def test_outcome(self):
        scenario = Scenario(2)
        strategy = enumerate_strategies(scenario)[strategy_index(scenario, 1, 1, 2)]
        # f = (0, 1) so a = 1 at x = 1, g = negation so b = 0
        self.assertEqual(strategy.outcome(), (1, 1, 0))


class MatrixTests(SimpleTestCase):
    def test_incidence_structure(self):
        scenario = Scenario(3)
        mats = build_matrices(scenario, [F(1, 3)] * 3, with_do=True, exact=True)
        P_obs = np.asarray(mats.P_obs, dtype=int)
        P_do = np.asarray(mats.P_do, dtype=int)
        np.testing.assert_array_equal(P_obs.sum(axis=0), np.ones(96, dtype=int))
        np.testing.assert_array_equal(P_do.sum(axis=0), 2 * np.ones(96, dtype=int))
        np.testing.assert_array_equal(np.asarray(mats.Delta, dtype=int).sum(axis=1), [32, 32, 32])

    def test_m_annihilates_product_joints(self):
        p_x = [F(1, 4), F(3, 4)]
        r = [F(1, 16)] * 16
        q = product_joint(p_x, r, exact=True)
        mats = build_matrices(Scenario(2), p_x, exact=True)
        self.assertTrue(all(value == 0 for value in mats.M @ q.q))

    def test_marginal_is_checked(self):
        with self.assertRaises(InvalidMarginalError):
            build_matrices(Scenario(2), [0.7, 0.7])
        with self.assertRaises(DimensionMismatchError):
            build_matrices(Scenario(2), [0.5, 0.25, 0.25])

    def test_without_do_block(self):
        mats = build_matrices(Scenario(2), [0.5, 0.5], with_do=False)
        with self.assertRaises(DimensionMismatchError):
            mats.P_do


class ForwardMapTests(SimpleTestCase):
    def test_two_point_model(self):
        scenario = Scenario(2)
        # A = 0 always; B = 0 under x = 0 and B = 1 under x = 1
        q = two_point_joint(scenario, (0, 0, 0), (1, 0, 3))
        dist = forward_distribution(q)
        self.assertEqual(list(dist.p_x), [F(1, 2), F(1, 2)])
        self.assertEqual(dist.prob(0, 0, 0), 1)
        self.assertEqual(dist.prob(0, 1, 1), 1)
        do_dist = interventional(q)
        self.assertEqual(do_dist.prob(0, 0), F(1, 2))
        self.assertEqual(do_dist.prob(1, 1), F(1, 2))

    def test_zero_marginal(self):
        scenario = Scenario(2)
        q = LatentJoint(scenario, point_mass(scenario, 0, 1, 1), True)
        with self.assertRaises(ZeroMarginalError):
            forward_distribution(q)

    def test_vanishing_float_marginal(self):
        scenario = Scenario(2)
        q = np.zeros(n_strategies(scenario))
        q[strategy_index(scenario, 0, 1, 1)] = 1 - 1e-12
        q[strategy_index(scenario, 1, 1, 1)] = 1e-12
        with self.assertRaises(ZeroMarginalError):
            forward_distribution(LatentJoint(scenario, q))

    def test_latent_joint_validation(self):
        with self.assertRaises(InvalidDistributionError):
            make_latent_joint([0.5] * 32)
        with self.assertRaises(DimensionMismatchError):
            make_latent_joint([1 / 33] * 33)

    def test_random_joints_give_valid_distributions(self):
        rng = np.random.default_rng(7)
        for x_card in (2, 3, 4):
            for _ in range(20):
                q = random_joint(Scenario(x_card), rng)
                self.assertTrue(validate_distribution(forward_distribution(q)).ok)
                np.testing.assert_allclose(instrument_marginal(q), forward_distribution(q).p_x)


class DependenceMeasureTests(SimpleTestCase):
    def test_independent_joint_has_zero_dependence(self):
        q = product_joint([F(1, 3), F(2, 3)], [F(1, 16)] * 16, exact=True)
        self.assertEqual(dependence_measure(q), 0)
        self.assertEqual(dependence_measure_matrix(q), 0)

    def test_two_point_model_has_unit_dependence(self):
        q = two_point_joint(Scenario(2), (0, 0, 0), (1, 0, 3))
        self.assertEqual(dependence_measure(q), 1)
        self.assertEqual(dependence_measure_matrix(q), 1)

    def test_direct_and_matrix_forms_agree(self):
        rng = np.random.default_rng(11)
        n = 10000
        for p_x in ([0.3, 0.7], [0.2, 0.3, 0.5], [0.1, 0.2, 0.3, 0.4]):
            scenario = Scenario(len(p_x))
            block = n_strategies(scenario) // scenario.x_card
            rows = rng.dirichlet(np.ones(block), size=(n, scenario.x_card))
            Q = (np.asarray(p_x)[None, :, None] * rows).reshape(n, -1)
            mats = build_matrices(scenario, p_x, with_do=False)
            through_m = np.abs(Q @ np.asarray(mats.M, dtype=np.float64).T).sum(axis=1)
            blocks = Q.reshape(n, scenario.x_card, block)
            direct = np.abs(blocks - blocks.sum(axis=2)[:, :, None] * blocks.sum(axis=1)[:, None, :]).sum(axis=(1, 2))
            np.testing.assert_allclose(through_m, direct, atol=1e-12)

    def test_direct_and_matrix_forms_agree_exactly(self):
        rng = np.random.default_rng(12)
        for x_card in (2, 3):
            scenario = Scenario(x_card)
            for _ in range(5):
                weights = rng.integers(0, 20, size=n_strategies(scenario))
                weights[0] += 1
                total = int(weights.sum())
                q = LatentJoint(scenario, np.array([F(int(w), total) for w in weights], dtype=object), True)
                self.assertEqual(dependence_measure(q), dependence_measure_matrix(q))


class IndependenceSoundnessTests(SimpleTestCase):
    def test_independent_models_satisfy_the_catalog(self):
        rng = np.random.default_rng(2024)
        for x_card in (2, 3, 4):
            scenario = Scenario(x_card)
            Q = np.array([random_independent_joint(scenario, rng).q for _ in range(2500)])
            p_x = Q.reshape(len(Q), x_card, -1).sum(axis=2)
            conditional = observed_joint_batch(scenario, Q) / p_x[:, :, None, None]
            do_tables = do_table_batch(scenario, Q)
            for ineq in catalog(scenario):
                k_values = evaluate_batch(ineq, conditional, do_tables)
                self.assertGreaterEqual(k_values.min(), -1e-9, ineq.id)


class LatentJointDocumentTests(SimpleTestCase):
    def test_serialized_joint_parses_back(self):
        scenario = Scenario(2)
        q = two_point_joint(scenario, (0, 0, 0), (1, 3, 2))
        parsed = parse_latent_joint(serialize_latent_joint(q), exact=True)
        self.assertEqual(list(parsed.q), list(q.q))
        self.assertEqual(parsed.scenario, scenario)
