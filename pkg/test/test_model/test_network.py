from unittest import TestCase

import numpy as np

from fluidmatch.application.exceptions import ConfigurationException, FeasibilityException
from fluidmatch.model.distributions import Exponential, Gamma, HazardClass, Uniform
from fluidmatch.model.network import MatchingRates, Network


class TestNetwork(TestCase):
    def setUp(self):
        self.sut = Network.uniform_patience(
            lam=[2.0, 1.5], mu=[1.0, 2.0, 0.5], values=[[1, 1, 0], [0, 1, 1]], patience=Exponential(1.0)
        )

    def test_dimensions(self):
        self.assertEqual(self.sut.J, 2)
        self.assertEqual(self.sut.K, 3)
        self.assertEqual(len(self.sut.edges), 6)
        self.assertEqual(self.sut.edges[0], (0, 0))
        self.assertEqual(self.sut.edges[-1], (1, 2))
        self.assertFalse(self.sut.has_costs)

    def test_empty_queues(self):
        net = self.sut.with_patience([Exponential(2.0)] * 2, [Uniform(0.5)] * 3)
        demand, supply = net.empty_queues
        self.assertTrue(np.allclose(demand, [1.0, 0.75]))
        self.assertTrue(np.allclose(supply, [2.0, 4.0, 1.0]))
        self.assertEqual(net.hazard_classes, [HazardClass.CONSTANT] * 2 + [HazardClass.INCREASING] * 3)

    def test_record(self):
        record = {
            'lambda': [1, 0.5], 'mu': [1], 'values': [[1], [1]], 'cD': [3, 4], 'cS': [1],
            'patience': {'kind': 'gamma', 'shape': 2, 'scale': 0.5}
        }
        net = Network.from_record(record)
        self.assertTrue(net.has_costs)
        self.assertEqual(net.demand_patience[1], Gamma(2.0, 0.5))
        again = Network.from_record(net.to_record())
        self.assertTrue(np.array_equal(again.cost_demand, [3.0, 4.0]))
        self.assertFalse(net.without_costs().has_costs)

    def test_invalid(self):
        with self.assertRaises(ConfigurationException):
            Network.uniform_patience([1.0, -1.0], [1.0], [[1], [1]], Exponential(1.0))
        with self.assertRaises(ConfigurationException):
            Network.uniform_patience([1.0], [1.0], [[1, 2]], Exponential(1.0))
        with self.assertRaises(ConfigurationException):
            Network.uniform_patience([1.0], [1.0], [[-1]], Exponential(1.0))
        with self.assertRaises(ConfigurationException):
            Network.uniform_patience([1.0], [1.0], [[1]], Exponential(1.0), cost_demand=[1.0, 2.0])
        with self.assertRaises(ConfigurationException):
            Network.from_record({'lambda': [1], 'mu': [1], 'values': [[1]]})

    def test_arrays_are_read_only(self):
        with self.assertRaises(ValueError):
            self.sut.lam[0] = 5.0


class TestMatchingRates(TestCase):
    def setUp(self):
        self.net = Network.uniform_patience([2.0, 1.5], [1.0, 2.0, 0.5], [[1, 1, 0], [0, 1, 1]], Exponential(1.0))

    def test_feasible(self):
        sut = MatchingRates([[1.0, 1.0, 0.0], [0.0, 1.0, 0.5]])
        self.assertTrue(sut.is_feasible(self.net))
        self.assertEqual(sut.total, 3.5)
        self.assertEqual(sut.support(), [(0, 0), (0, 1), (1, 1), (1, 2)])
        self.assertIs(sut.ensure_feasible(self.net), sut)

    def test_violations(self):
        self.assertAlmostEqual(MatchingRates([[1.5, 1.0, 0.0], [0.0, 0.0, 0.0]]).violation(self.net), 0.5)
        self.assertAlmostEqual(MatchingRates([[0.0, 0.0, 0.0], [0.0, 0.0, -0.25]]).violation(self.net), 0.25)
        with self.assertRaises(FeasibilityException):
            MatchingRates([[0.0, 2.5, 0.0], [0.0, 0.0, 0.0]]).ensure_feasible(self.net)
        with self.assertRaises(FeasibilityException):
            MatchingRates([[0.0, 0.0]]).ensure_feasible(self.net)
        with self.assertRaises(FeasibilityException):
            MatchingRates([1.0, 2.0])
