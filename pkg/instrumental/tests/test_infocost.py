from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from instrumental.helpers.dependence_helper import UnsupportedClosedFormError
from instrumental.helpers.exceptions import OutOfRangeError
from instrumental.helpers.inequalities_helper import evaluate_joint, get_inequality
from instrumental.helpers.infocost_helper import (
    achievability_model,
    binary_entropy,
    grouping,
    min_info_cost,
    mutual_information,
    mutual_information_batch,
    sampled_bound_check,
)
from instrumental.helpers.scenario_helper import Scenario
from instrumental.helpers.strategies_helper import instrument_marginal, product_joint, random_joint

F = Fraction


class EntropyTests(SimpleTestCase):
    def test_binary_entropy(self):
        self.assertEqual(binary_entropy(0), 0.0)
        self.assertEqual(binary_entropy(1), 0.0)
        self.assertAlmostEqual(binary_entropy(0.5), 1.0)
        self.assertAlmostEqual(binary_entropy(F(1, 4)), 0.8112781244591328)
        with self.assertRaises(OutOfRangeError):
            binary_entropy(1.2)

    def test_independent_joint_carries_no_information(self):
        q = product_joint([0.3, 0.7], np.full(16, 1 / 16))
        self.assertAlmostEqual(mutual_information(q), 0.0, places=12)

    def test_batch_matches_single_models(self):
        rng = np.random.default_rng(4)
        joints = [random_joint(Scenario(2), rng) for _ in range(20)]
        np.testing.assert_allclose(
            mutual_information_batch(Scenario(2), np.array([q.q for q in joints])),
            [mutual_information(q) for q in joints], atol=1e-12,
        )


class BoundTests(SimpleTestCase):
    def test_bound_values(self):
        self.assertAlmostEqual(min_info_cost(-0.5), 0.188722, places=6)
        self.assertAlmostEqual(min_info_cost(-0.2), 0.029049, places=6)
        self.assertAlmostEqual(min_info_cost(-1), 1.0)
        self.assertEqual(min_info_cost(0.3), 0.0)

    def test_bound_domain(self):
        with self.assertRaises(OutOfRangeError):
            min_info_cost(-1.5)
        with self.assertRaises(UnsupportedClosedFormError):
            min_info_cost(-0.5, p_x=[0.3, 0.7])
        self.assertAlmostEqual(min_info_cost(-0.5, p_x=[0.5, 0.5]), 0.188722, places=6)

    def test_sampled_models_respect_the_bound(self):
        self.assertEqual(sampled_bound_check(np.random.default_rng(0), 10000), 0)

    def test_non_uniform_shortfalls_are_only_counted(self):
        shortfalls = sampled_bound_check(np.random.default_rng(1), 2000, p_x=(0.2, 0.8))
        self.assertGreaterEqual(shortfalls, 0)


class WitnessTests(SimpleTestCase):
    def test_witness_meets_the_bound(self):
        pearl = get_inequality('pearl-00')
        for k_value in (F(-1), F(-3, 4), F(-1, 2), F(-1, 4), F(-1, 10)):
            model = achievability_model(k_value)
            self.assertEqual(list(instrument_marginal(model.witness)), [F(1, 2), F(1, 2)])
            self.assertEqual(evaluate_joint(pearl, model.witness).k_value, k_value)
            self.assertAlmostEqual(mutual_information(model.witness), model.bound, places=12)

    def test_float_witness(self):
        model = achievability_model(-0.5)
        self.assertFalse(model.witness.exact)
        self.assertAlmostEqual(mutual_information(model.witness), 0.188722, places=6)

    def test_grouping_reads_g_at_zero(self):
        self.assertEqual(grouping(Scenario(2)), {0: 0, 1: 0, 2: 1, 3: 1})

    def test_witness_needs_a_violation(self):
        with self.assertRaises(OutOfRangeError):
            achievability_model(F(1, 5))
        with self.assertRaises(OutOfRangeError):
            achievability_model(-2)
