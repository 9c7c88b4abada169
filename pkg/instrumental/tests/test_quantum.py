import math

import numpy as np
from django.test import SimpleTestCase

from instrumental.helpers.inequalities_helper import catalog, evaluate, get_inequality
from instrumental.helpers.quantum_helper import (
    AngleFamily,
    InvalidSetupError,
    QuantumSetup,
    born_probabilities,
    born_table,
    check_setup,
    coarse_design,
    do_table,
    family_statistics,
    maximize_violation,
    projectors,
    qace,
    quantum_do,
    random_family,
    random_setup,
    validate_setup,
)
from instrumental.helpers.scenario_helper import Scenario, validate_distribution

SQRT2 = math.sqrt(2)
QUANTUM_MAXIMA = {
    'c1': 3 - 2 * SQRT2,
    'bonet': 1 / SQRT2 - 0.5,
    'c2': 1 / SQRT2 - 0.5,
    'kedagni': SQRT2 - 1,
    'c3': SQRT2 - 1,
}


class BornRuleTests(SimpleTestCase):
    def test_maximally_entangled_correlations(self):
        setup = AngleFamily(math.pi / 4, (0.0, math.pi / 2), (0.0, 0.0)).to_setup()
        table = born_table(setup)
        np.testing.assert_allclose(table[0], [[0.5, 0.0], [0.0, 0.5]], atol=1e-12)
        np.testing.assert_allclose(table[1], np.full((2, 2), 0.25), atol=1e-12)

    def test_product_state_factorizes(self):
        # state angle pi/2 is |00>
        setup = AngleFamily(math.pi / 2, (0.0, math.pi), (0.0, math.pi / 2)).to_setup()
        table = born_table(setup)
        np.testing.assert_allclose(table[0], [[1.0, 0.0], [0.0, 0.0]], atol=1e-12)
        np.testing.assert_allclose(table[1], [[0.0, 0.0], [0.5, 0.5]], atol=1e-12)
        np.testing.assert_allclose(do_table(setup), [[1.0, 0.0], [0.5, 0.5]], atol=1e-12)
        self.assertAlmostEqual(qace(setup), 0.5)

    def test_maximally_mixed_state_has_no_causal_effect(self):
        rng = np.random.default_rng(8)
        family = random_family(rng, 2)
        setup = QuantumSetup(np.eye(4, dtype=complex) / 4, projectors(family.theta), projectors(family.eta))
        self.assertAlmostEqual(qace(setup), 0.0, places=12)
        np.testing.assert_allclose(born_table(setup), np.full((2, 2, 2), 0.25), atol=1e-12)

    def test_batched_family_matches_setups(self):
        rng = np.random.default_rng(12)
        for x_card in (2, 3, 4):
            families = [random_family(rng, x_card) for _ in range(5)]
            p_table, p_do = family_statistics([family.to_vector() for family in families], x_card)
            for i, family in enumerate(families):
                setup = family.to_setup()
                np.testing.assert_allclose(p_table[i], born_table(setup), atol=1e-12)
                np.testing.assert_allclose(p_do[i], do_table(setup), atol=1e-12)

    def test_family_vector_round_trip(self):
        family = AngleFamily(0.3, (0.1, 0.2, 0.4), (1.0, 2.0))
        self.assertEqual(AngleFamily.from_vector(family.to_vector(), 3), family)
        self.assertAlmostEqual(np.trace(family.to_setup().state).real, 1.0)


class SetupValidationTests(SimpleTestCase):
    def test_random_setups_are_valid(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            setup = random_setup(rng, x_card=3)
            self.assertEqual(validate_setup(setup), [])
            self.assertTrue(validate_distribution(born_probabilities(setup, [0.2, 0.3, 0.5])).ok)
            quantum_do(setup)

    def test_failures_are_listed(self):
        family = AngleFamily(0.0, (0.0, 1.0), (0.0, 1.0))
        doubled = QuantumSetup(2 * family.to_setup().state, projectors(family.theta), projectors(family.eta))
        self.assertIn('state trace is 2, not 1', validate_setup(doubled))
        broken = projectors(family.theta).copy()
        broken[0, 1] = broken[0, 0]
        violations = validate_setup(QuantumSetup(family.to_setup().state, broken, projectors(family.eta)))
        self.assertIn('A measurement 0 does not sum to identity', violations)
        negative = QuantumSetup(np.diag([1.5, -0.5, 0, 0]).astype(complex), projectors(family.theta),
                                projectors(family.eta))
        self.assertIn('state is not positive semidefinite', validate_setup(negative))
        with self.assertRaises(InvalidSetupError):
            check_setup(negative)

    def test_b_needs_one_measurement_per_a(self):
        family = AngleFamily(0.0, (0.0, 1.0), (0.0, 1.0))
        setup = QuantumSetup(family.to_setup().state, projectors(family.theta), projectors((0.0, 1.0, 2.0)))
        self.assertTrue(any(v.startswith('B needs one measurement') for v in validate_setup(setup)))


class QuantumSoundnessTests(SimpleTestCase):
    def test_pearl_holds_for_random_setups(self):
        rng = np.random.default_rng(99)
        pearl = catalog(Scenario(2))[:4]
        for _ in range(1000):
            dist = born_probabilities(random_setup(rng), [0.5, 0.5])
            for ineq in pearl:
                self.assertGreaterEqual(evaluate(ineq, dist).k_value, -1e-9, ineq.id)

    def test_pearl_cannot_be_violated_by_the_family(self):
        optimum = maximize_violation('pearl-00', grid=8, starts=2)
        self.assertLessEqual(optimum.alpha, 1e-9)


class OptimizerTests(SimpleTestCase):
    def test_design_size(self):
        design = coarse_design(2, 20, seed=0)
        self.assertEqual(design.shape, (8192, 5))
        self.assertTrue((design[:, 0] < math.pi).all())
        np.testing.assert_array_equal(design, coarse_design(2, 20, seed=0))

    def test_known_maxima(self):
        for ineq_id, expected in QUANTUM_MAXIMA.items():
            optimum = maximize_violation(get_inequality(ineq_id))
            self.assertAlmostEqual(optimum.alpha, expected, delta=1e-4, msg=ineq_id)
            self.assertEqual(optimum.family.x_card, get_inequality(ineq_id).x_card)
