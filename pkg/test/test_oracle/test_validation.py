from unittest import TestCase

import numpy as np

from fluidmatch.application.exceptions import ConfigurationException
from fluidmatch.model.distributions import Exponential
from fluidmatch.model.network import Network
from fluidmatch.oracle import validation


class TestValidation(TestCase):
    def test_invariants(self):
        checks = {c.name: c for c in validation.invariants_suite(
            points=50, fluid_instances=3, gradient_points=5, seed=1)}
        self.assertEqual(
            set(checks), {'closed-form', 'fluid-fixed-point', 'gradient-finite-difference', 'hazard-convexity-class'}
        )
        self.assertTrue(checks['closed-form'].passed)
        self.assertTrue(checks['gradient-finite-difference'].passed)
        self.assertTrue(checks['hazard-convexity-class'].passed)
        self.assertLess(checks['fluid-fixed-point'].gap, 1e-3)

    def test_markov(self):
        checks = validation.run_suite('markov', ns=(1, 10, 100))
        self.assertEqual(len(checks), 7)
        self.assertTrue(all(c.passed for c in checks), [str(c) for c in checks])

    def test_extreme_points(self):
        checks = validation.run_suite('extreme-points', instances=10, seed=2, oracle_instances=1)
        self.assertEqual([c.name for c in checks], ['forest-structure', 'priority-replay', 'rational-oracle'])
        self.assertTrue(all(c.passed for c in checks), [str(c) for c in checks])

    def test_rational_vertices(self):
        self.assertEqual(validation.rational_vertices([1], [1]), [(0,), (1,)])
        self.assertEqual(len(validation.rational_vertices([1, 0.5], [1])), 4)

    def test_rate_gaps(self):
        net = Network.uniform_patience([1.0, 0.5], [1.0], [[1.0], [2.0]], Exponential(1.0))
        gaps = validation.rate_gaps(net, ns=(5, 20), horizon=2.0, seeds=2)
        self.assertEqual(set(gaps), {'matching-rate', 'priority'})
        for values in gaps.values():
            self.assertEqual(len(values), 2)
            self.assertTrue(all(v >= 0 for v in values))

    def test_check_row(self):
        check = validation.Check('markov', 'x', False, 0.5, 0.1, 'detail')
        self.assertEqual(check.to_row()['check'], 'x')
        self.assertTrue(str(check).startswith('FAIL markov/x'))

    def test_random_network(self):
        rng = np.random.default_rng(0)
        net = validation.random_network(rng, 2, 3, 'gamma-decreasing')
        self.assertEqual((net.J, net.K), (2, 3))
        self.assertTrue(all(c.nonincreasing for c in net.hazard_classes))
        self.assertTrue(validation.random_rates(rng, net, 0.2, 0.8).is_feasible(net))

    def test_unknown_suite(self):
        with self.assertRaises(ConfigurationException):
            validation.run_suite('nope')
