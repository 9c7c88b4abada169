import math
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from instrumental.helpers.dependence_helper import (
    UnsupportedClosedFormError,
    adapted_bound,
    closed_form_binary,
    dependence_curve,
    is_convex,
    min_dependence,
    worst_case_instrument,
)
from instrumental.helpers.exceptions import OutOfRangeError
from instrumental.helpers.inequalities_helper import evaluate_batch, get_inequality
from instrumental.helpers.lp_helper import AlphaOutOfRangeError
from instrumental.helpers.scenario_helper import Scenario
from instrumental.helpers.strategies_helper import (
    do_table_batch,
    joint_with_marginal,
    observed_joint_batch,
)

F = Fraction
SQRT2 = math.sqrt(2)
GRID = [i / 10 for i in range(1, 10)]
ALPHAS = [i / 10 for i in range(1, 11)]


def batch_dependence(scenario, Q):
    blocks = Q.reshape(len(Q), scenario.x_card, -1)
    p_x = blocks.sum(axis=2)
    p_s = blocks.sum(axis=1)
    return np.abs(blocks - p_x[:, :, None] * p_s[:, None, :]).sum(axis=(1, 2))


class ClosedFormTests(SimpleTestCase):
    def test_float_grid(self):
        for p0 in GRID:
            for alpha in ALPHAS:
                for kind, ineq_id in (('pearl', 'pearl-00'), ('c1', 'c1')):
                    self.assertAlmostEqual(
                        min_dependence(ineq_id, [p0, 1 - p0], alpha),
                        closed_form_binary(kind, [p0, 1 - p0], alpha),
                        places=9, msg=f"{ineq_id} p0={p0} alpha={alpha}",
                    )

    def test_exact_grid(self):
        for p0 in (F(i, 10) for i in range(1, 10)):
            for alpha in (F(i, 10) for i in range(1, 11)):
                p_x = [p0, 1 - p0]
                self.assertEqual(min_dependence('pearl-00', p_x, alpha, exact=True),
                                 closed_form_binary('pearl', p_x, alpha))
                self.assertEqual(min_dependence('c1', p_x, alpha, exact=True),
                                 closed_form_binary('c1', p_x, alpha))

    def test_closed_form_errors(self):
        with self.assertRaises(UnsupportedClosedFormError):
            closed_form_binary('bonet', [0.5, 0.5], 0.1)
        with self.assertRaises(AlphaOutOfRangeError):
            closed_form_binary('pearl', [0.5, 0.5], 1.5)


class CurveTests(SimpleTestCase):
    def test_pearl_is_a_single_segment(self):
        curve = dependence_curve('pearl-00', [F(1, 3), F(2, 3)], exact=True)
        self.assertEqual(curve.breakpoints, [(0, 0), (1, F(8, 9))])
        self.assertEqual(curve.slopes, [F(8, 9)])
        self.assertEqual(curve.value_at(F(3, 4)), F(2, 3))
        with self.assertRaises(AlphaOutOfRangeError):
            curve.value_at(F(5, 4))

    def test_bonet_uniform_slope(self):
        curve = dependence_curve('bonet', [F(1, 3)] * 3, exact=True)
        self.assertEqual(curve.slopes, [F(2, 3)])
        self.assertEqual(curve.value_at(F(3, 10)), F(1, 5))

    def test_kedagni_uniform_slope(self):
        curve = dependence_curve('kedagni', [0.25] * 4)
        self.assertAlmostEqual(curve.first_slope, 0.5, places=8)
        self.assertGreaterEqual(float(curve.alpha_max), SQRT2 - 1)

    def test_curves_are_convex_monotone_and_start_at_zero(self):
        marginals = {
            'c2': ([1 / 3] * 3, [0.2, 0.3, 0.5], [0.5, 0.25, 0.25]),
            'c3': ([1 / 3] * 3, [0.6, 0.2, 0.2], [0.25, 0.25, 0.5]),
            'kedagni': ([0.25] * 4, [0.1, 0.2, 0.3, 0.4], [0.4, 0.1, 0.4, 0.1]),
        }
        for ineq_id, p_x_values in marginals.items():
            for p_x in p_x_values:
                curve = dependence_curve(ineq_id, p_x, workers=2)
                label = f"{ineq_id} {p_x}"
                self.assertEqual(curve.breakpoints[0], (0, 0), label)
                self.assertTrue(is_convex(curve, 1e-8), label)
                self.assertTrue(all(slope > 0 for slope in curve.slopes), label)
                values = [value for _, value in curve.breakpoints]
                self.assertEqual(values, sorted(values), label)

    def test_curve_matches_single_points(self):
        curve = dependence_curve('c2', [1 / 3] * 3)
        for alpha in np.linspace(0, float(curve.alpha_max), 7)[1:]:
            self.assertAlmostEqual(curve.value_at(alpha), min_dependence('c2', [1 / 3] * 3, alpha), places=7)

    def test_sample_grid(self):
        curve = dependence_curve('pearl-00', [F(1, 2)] * 2, exact=True)
        rows = curve.sample(5)
        self.assertEqual([row[0] for row in rows], [0, F(1, 4), F(1, 2), F(3, 4), 1])
        self.assertEqual([row[1] for row in rows], [0, F(1, 4), F(1, 2), F(3, 4), 1])
        self.assertEqual({row[2] for row in rows}, {1})

    def test_max_violation_given_dependence(self):
        curve = dependence_curve('pearl-00', [F(1, 2)] * 2, exact=True)
        self.assertEqual(curve.max_violation_given_dependence(F(1, 2)), F(1, 2))
        self.assertEqual(curve.max_violation_given_dependence(2), 1)
        with self.assertRaises(OutOfRangeError):
            curve.max_violation_given_dependence(-1)


class QuantumBridgeTests(SimpleTestCase):
    def test_bridge_value(self):
        p0 = 2 - SQRT2
        value = min_dependence('c1', [p0, 1 - p0], 3 - 2 * SQRT2)
        self.assertAlmostEqual(value, 68 - 48 * SQRT2, delta=1e-9)

    def test_sweep_peaks_at_the_bridge_marginal(self):
        p0_values = [i / 100 for i in range(1, 100)]
        best_p0, best_value, sweep = worst_case_instrument('c1', 3 - 2 * SQRT2, p0_values, workers=4)
        self.assertEqual(len(sweep), 99)
        self.assertAlmostEqual(best_p0, 0.59)
        self.assertLess(abs(best_p0 - (2 - SQRT2)), 0.01)
        self.assertLessEqual(best_value, 68 - 48 * SQRT2 + 1e-9)

    def test_uniform_dependence_at_the_quantum_maxima(self):
        self.assertAlmostEqual(min_dependence('bonet', [1 / 3] * 3, 1 / SQRT2 - 0.5), (SQRT2 - 1) / 3, delta=1e-9)
        self.assertAlmostEqual(min_dependence('kedagni', [0.25] * 4, SQRT2 - 1), 1 / SQRT2 - 0.5, delta=1e-9)


class AdaptedBoundTests(SimpleTestCase):
    def test_causal_statement(self):
        adapted = adapted_bound('c1', [F(1, 2)] * 2, F(1, 10), exact=True)
        self.assertEqual(adapted.slope, F(2, 3))
        self.assertEqual(adapted.threshold, F(-3, 20))
        self.assertEqual(adapted.statement, 'ACE >= 2p(0,0|0) + p(1,1|0) + p(0,1|1) + p(1,1|1) - 43/20')
        self.assertTrue(adapted.holds_for(F(-1, 10)))
        self.assertFalse(adapted.holds_for(F(-1, 5)))

    def test_pearl_statement(self):
        adapted = adapted_bound('pearl-00', [F(1, 2)] * 2, F(1, 10), exact=True)
        self.assertEqual(adapted.statement, 'p(0,0|0) + p(0,1|1) <= 11/10')
        self.assertEqual(adapted.p_x, ('1/2', '1/2'))

    def test_negative_level(self):
        with self.assertRaises(OutOfRangeError):
            adapted_bound('pearl-00', [0.5, 0.5], -0.1)

    def test_adapted_bounds_hold_for_random_models(self):
        rng = np.random.default_rng(17)
        cases = (('pearl-00', [0.3, 0.7]), ('c1', [0.5, 0.5]), ('bonet', [1 / 3] * 3))
        for ineq_id, p_x in cases:
            ineq = get_inequality(ineq_id)
            scenario = Scenario(ineq.x_card)
            slope = dependence_curve(ineq, p_x).first_slope
            Q = np.array([joint_with_marginal(scenario, rng, p_x).q for _ in range(10000)])
            conditional = observed_joint_batch(scenario, Q) / np.asarray(p_x)[None, :, None, None]
            k_values = evaluate_batch(ineq, conditional, do_table_batch(scenario, Q))
            margin = k_values + batch_dependence(scenario, Q) / slope
            self.assertGreaterEqual(margin.min(), -1e-7, ineq_id)
