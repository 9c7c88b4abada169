import json
import os
import tempfile
from fractions import Fraction

import numpy as np
from django.test import SimpleTestCase

from instrumental.helpers.exceptions import (
    DimensionMismatchError,
    InvalidDistributionError,
    MalformedDocumentError,
)
from instrumental.helpers.scenario_helper import (
    DegenerateSampleError,
    Sample,
    Scenario,
    iv_beta,
    iv_beta_covariance,
    iv_beta_from_arrays,
    joint_table,
    make_distribution,
    make_interventional,
    parse_distribution,
    parse_interventional,
    read_samples,
    serialize_distribution,
    uniform_distribution,
    validate_distribution,
    write_samples,
)

F = Fraction


def distribution_json(p_x, table, x_card=None):
    return json.dumps({
        'scenario': {'x_card': x_card if x_card is not None else len(p_x)},
        'p_x': p_x,
        'p_ab_given_x': table,
    })


class ScenarioTests(SimpleTestCase):
    def test_scenario_needs_two_instrument_values(self):
        with self.assertRaises(DimensionMismatchError):
            Scenario(1)
        with self.assertRaises(DimensionMismatchError):
            Scenario(2, a_card=3)

    def test_uniform_distribution_is_valid(self):
        dist = uniform_distribution(Scenario(3), exact=True)
        self.assertTrue(validate_distribution(dist).ok)
        self.assertEqual(dist.prob(1, 0, 2), F(1, 4))

    def test_validation_lists_every_problem(self):
        dist = make_distribution(
            [F(1, 2), F(1, 2)],
            [[[F(-1, 10), F(6, 10)], [F(3, 10), F(2, 10)]],
             [[F(1, 2), F(1, 2)], [F(1, 2), F(0)]]],
            exact=True, validate=False,
        )
        report = validate_distribution(dist)
        self.assertFalse(report.ok)
        self.assertIn('entry < 0 at (0,0,0)', report.violations)
        self.assertIn('x=1 not normalized', report.violations)

    def test_make_distribution_raises_with_violations(self):
        with self.assertRaises(InvalidDistributionError) as ctx:
            make_distribution([0.3, 0.3], [[[0.25] * 2] * 2] * 2)
        self.assertIn('p_x not normalized', ctx.exception.violations)

    def test_float_tolerance(self):
        dist = make_distribution([0.5, 0.5 + 1e-12], [[[0.25] * 2] * 2] * 2)
        self.assertTrue(validate_distribution(dist).ok)

    def test_parse_exact_fraction_strings(self):
        text = distribution_json(['1/3', '2/3'], [[['1/2', '1/4'], ['1/8', '1/8']], [[0.25] * 2] * 2])
        dist = parse_distribution(text, exact=True)
        self.assertEqual(dist.p_x[0], F(1, 3))
        self.assertEqual(dist.prob(1, 0, 0), F(1, 8))
        self.assertEqual(dist.prob(0, 0, 1), F(1, 4))

    def test_parse_rejects_malformed_and_mismatched_documents(self):
        with self.assertRaises(MalformedDocumentError):
            parse_distribution('{"scenario": {"x_card": 2}, "p_x": [0.5, 0.5]}')
        with self.assertRaises(DimensionMismatchError):
            parse_distribution(distribution_json([0.5, 0.5], [[[0.25] * 2] * 2] * 3))
        with self.assertRaises(DimensionMismatchError):
            parse_distribution(distribution_json([0.5, 0.5], [[[0.5, 0.5]], [[0.5, 0.5]]]))

    def test_serialized_distribution_parses_back(self):
        dist = make_distribution([F(1, 3), F(2, 3)],
                                 [[[F(1, 2), F(1, 2)], [0, 0]], [[F(1, 4)] * 2] * 2], exact=True)
        document = json.loads(serialize_distribution(dist))
        self.assertEqual(document['schema_version'], 1)
        self.assertEqual(document['p_x'], ['1/3', '2/3'])
        self.assertEqual(parse_distribution(serialize_distribution(dist), exact=True), dist)

    def test_joint_table(self):
        dist = uniform_distribution(Scenario(2), exact=True)
        joint = joint_table(dist)
        self.assertEqual(joint[1, 0, 1], F(1, 8))
        self.assertEqual(sum(joint.ravel()), 1)

    def test_interventional_documents(self):
        do_dist = parse_interventional('{"p_b_do_a": [["1/3", "2/3"], [1, 0]]}', exact=True)
        self.assertEqual(do_dist.prob(1, 0), F(2, 3))
        with self.assertRaises(InvalidDistributionError):
            make_interventional([[0.5, 0.6], [1, 0]])


class SampleTests(SimpleTestCase):
    def setUp(self):
        self.x = np.array([1, 1, 0, 1])
        self.a = np.array([1, 0, 0, 1])
        self.b = np.array([1, 1, 1, 1])

    def test_correlation_ratio_with_constant_outcome(self):
        # corr(X,B) = 1 when B is constant, so beta = 1/corr(X,A) = 3/4
        self.assertEqual(iv_beta_from_arrays(self.x, self.a, self.b, exact=True), F(3, 4))
        self.assertAlmostEqual(iv_beta_from_arrays(self.x, self.a, self.b), 0.75)

    def test_covariance_variant(self):
        sample = Sample(Scenario(2), np.column_stack([self.x, self.a, self.b]))
        self.assertAlmostEqual(iv_beta_covariance(sample), 0.0)
        self.assertEqual(iv_beta(sample, exact=True), F(3, 4))

    def test_degenerate_samples(self):
        with self.assertRaises(DegenerateSampleError):
            iv_beta_from_arrays(np.zeros(4, dtype=int), self.a, self.b)
        with self.assertRaises(DimensionMismatchError):
            iv_beta_from_arrays(self.x, self.a[:2], self.b)

    def test_sample_coordinates_are_checked(self):
        with self.assertRaises(InvalidDistributionError):
            Sample(Scenario(2), np.array([[2, 0, 1]]))
        with self.assertRaises(DimensionMismatchError):
            Sample(Scenario(2), np.array([0, 1, 1]))

    def test_csv_round_trip(self):
        sample = Sample(Scenario(3), np.array([[0, 1, 1], [2, 0, 1], [1, 1, 0]]))
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'samples.csv')
            write_samples(sample, path)
            loaded = read_samples(path)
        self.assertEqual(loaded.scenario.x_card, 3)
        np.testing.assert_array_equal(loaded.rows, sample.rows)

    def test_csv_with_missing_column(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'bad.csv')
            with open(path, 'w', encoding='utf-8') as f:
                f.write('x,a\n0,1\n')
            with self.assertRaises(MalformedDocumentError):
                read_samples(path)
