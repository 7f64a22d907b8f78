import itertools
from unittest import TestCase

import numpy as np

from fluidmatch.application.exceptions import FeasibilityException
from fluidmatch.model.distributions import Exponential
from fluidmatch.model.network import MatchingRates, Network
from fluidmatch.optimization.priority import build_priority_sets
from fluidmatch.simulation import policies

M_STAR = [[1.0, 1.0, 0.0], [0.0, 1.0, 0.5]]


class TestPolicies(TestCase):
    def setUp(self):
        self.net = Network.uniform_patience(
            [2.0, 1.5], [1.0, 2.0, 0.5], [[1, 1, 0], [0, 1, 1]], Exponential(1.0)
        )
        self.sets = build_priority_sets(self.net, M_STAR)

    def test_empty_snapshot(self):
        q, i = np.zeros(2, dtype=np.int64), np.zeros(3, dtype=np.int64)
        for sut in (
            policies.MatchingRatePolicy(self.net, MatchingRates(M_STAR), 100, 0.1),
            policies.PriorityPolicy(self.net, self.sets),
            policies.LpPolicy(self.net)
        ):
            counts = sut.decide(q, i)
            self.assertEqual(counts.shape, (2, 3))
            self.assertFalse(counts.any())

    def test_priority_on_a_scaled_snapshot(self):
        counts = policies.policy_priority_ordering(np.array([4, 3]), np.array([2, 4, 1]), self.net, self.sets)
        self.assertTrue(np.array_equal(counts, [[2, 2, 0], [0, 2, 1]]))

    def test_priority_spills_into_the_zero_set(self):
        counts = policies.policy_priority_ordering(np.array([5, 0]), np.array([1, 1, 3]), self.net, self.sets)
        self.assertTrue(np.array_equal(counts, [[1, 1, 3], [0, 0, 0]]))

    def test_matching_rate_counts(self):
        net = Network.uniform_patience([1.0], [1.0], [[1.0]], Exponential(1.0))
        sut = policies.MatchingRatePolicy(net, MatchingRates([[0.5]]), 100, 0.1)
        self.assertEqual(sut.decide(np.array([100]), np.array([100])).tolist(), [[5]])
        self.assertEqual(sut.decide(np.array([3]), np.array([100])).tolist(), [[1]])
        self.assertEqual(sut.decide(np.array([100]), np.array([0])).tolist(), [[0]])

    def test_matching_rate_needs_feasible_rates(self):
        with self.assertRaises(FeasibilityException):
            policies.MatchingRatePolicy(self.net, MatchingRates([[3.0, 0, 0], [0, 0, 0]]), 10, 0.1)

    def test_lp_against_brute_force(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            values = rng.integers(0, 5, size=(2, 3)).astype(float)
            net = Network.uniform_patience([1.0, 1.0], [1.0, 1.0, 1.0], values, Exponential(1.0))
            q = rng.integers(0, 4, size=2)
            i = rng.integers(0, 3, size=3)
            counts = policies.policy_lp_based(q, i, net)
            self.assertTrue(np.all(counts.sum(axis=1) <= q))
            self.assertTrue(np.all(counts.sum(axis=0) <= i))
            best = 0.0
            for flat in itertools.product(*[range(min(q[j], i[k]) + 1) for j in range(2) for k in range(3)]):
                y = np.array(flat).reshape(2, 3)
                if np.all(y.sum(axis=1) <= q) and np.all(y.sum(axis=0) <= i):
                    best = max(best, float(np.sum(values * y)))
            self.assertAlmostEqual(float(np.sum(values * counts)), best)

    def test_function_forms(self):
        q, i = np.array([40, 30]), np.array([20, 40, 10])
        counts = policies.policy_matching_rate_based(q, i, self.net, MatchingRates(M_STAR), 10, 1.0)
        self.assertTrue(np.array_equal(counts, [[10, 10, 0], [0, 10, 5]]))
