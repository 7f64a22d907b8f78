from unittest import TestCase

import numpy as np

from fluidmatch.application.exceptions import InstanceTooLargeException, StructureException
from fluidmatch.model.distributions import Exponential
from fluidmatch.model.network import MatchingRates, Network
from fluidmatch.optimization import vertices
from fluidmatch.oracle.validation import rational_vertices


def network(lam, mu, values=None):
    values = values if values is not None else np.ones((len(lam), len(mu)))
    return Network.uniform_patience(lam, mu, values, Exponential(1.0))


class TestEnumerateExtremePoints(TestCase):
    def test_single_edge(self):
        points = vertices.enumerate_extreme_points(network([1.0], [1.0]))
        self.assertEqual([p.key() for p in points], [(0.0,), (1.0,)])

    def test_two_demand_nodes(self):
        points = vertices.enumerate_extreme_points(network([1.0, 0.5], [1.0]))
        self.assertEqual([p.key() for p in points], [(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (1.0, 0.0)])
        self.assertEqual(points[2].support, ((0, 0), (1, 0)))
        self.assertEqual(points[2].tight_demand.tolist(), [False, True])
        self.assertEqual(points[2].tight_supply.tolist(), [True])

    def test_against_rational_basis_enumeration(self):
        for lam, mu in (([1.0, 0.5], [0.75, 1.25]), ([2.0, 1.5], [1.0, 2.0, 0.5]), ([1.0, 1.0], [1.0, 1.0])):
            expected = {tuple(round(float(x), 9) for x in v) for v in rational_vertices(lam, mu)}
            found = {tuple(round(x, 9) for x in p.key()) for p in vertices.enumerate_extreme_points(network(lam, mu))}
            self.assertEqual(found, expected)

    def test_every_point_has_extreme_structure(self):
        net = network([2.0, 1.5], [1.0, 2.0, 0.5])
        for point in vertices.enumerate_extreme_points(net):
            self.assertTrue(point.m.is_feasible(net))
            self.assertTrue(vertices.is_extreme_point(net, point.m))

    def test_too_large(self):
        with self.assertRaises(InstanceTooLargeException):
            vertices.enumerate_extreme_points(network([1.0] * 5, [1.0] * 5))


class TestStructure(TestCase):
    def setUp(self):
        self.net = network([1.0, 1.0], [1.0, 1.0])

    def test_cycle(self):
        m = MatchingRates([[0.5, 0.5], [0.5, 0.5]])
        cycle = vertices.find_cycle(self.net, m.support())
        self.assertEqual(len(cycle), 4)
        self.assertEqual(set(cycle), {(0, 0), (0, 1), (1, 0), (1, 1)})
        with self.assertRaises(StructureException) as e:
            vertices.check_extreme_structure(self.net, m)
        self.assertEqual(len(e.exception.cycle), 4)
        self.assertFalse(vertices.is_extreme_point(self.net, m))

    def test_two_slack_nodes(self):
        m = MatchingRates([[0.5, 0.0], [0.0, 0.0]])
        with self.assertRaises(StructureException):
            vertices.check_extreme_structure(self.net, m)

    def test_forest(self):
        self.assertIsNone(vertices.find_cycle(self.net, [(0, 0), (1, 1), (0, 1)]))
        parts = vertices.components(self.net, [(0, 0)])
        self.assertEqual(len(parts), 3)
        self.assertEqual(parts[0], (frozenset({0, 2}), ((0, 0),)))

    def test_slack_nodes(self):
        m = MatchingRates([[1.0, 0.0], [0.0, 0.25]])
        self.assertEqual(vertices.slack_nodes(self.net, m, {0, 1, 2, 3}), [1, 3])


class TestCrossover(TestCase):
    def test_cycle_is_cancelled_without_losing_value(self):
        net = network([1.0, 1.0], [1.0, 1.0])
        weights = np.array([[3.0, 1.0], [1.0, 2.0]])
        m = np.array([[0.5, 0.5], [0.5, 0.5]])
        point = vertices.to_extreme_point(net, m, weights)
        self.assertTrue(np.allclose(point.m.m, [[1.0, 0.0], [0.0, 1.0]]))
        self.assertTrue(vertices.is_extreme_point(net, point.m))

    def test_interior_point_reaches_a_vertex(self):
        net = network([2.0, 1.5], [1.0, 2.0, 0.5])
        weights = np.array([[1.0, 1.0, 0.0], [0.0, 1.0, 1.0]])
        m = np.full((2, 3), 0.1)
        point = vertices.to_extreme_point(net, m, weights)
        self.assertTrue(vertices.is_extreme_point(net, point.m))
        self.assertGreaterEqual(float(np.sum(weights * point.m.m)), float(np.sum(weights * m)) - 1e-12)
