from dataclasses import replace
from unittest import TestCase

import numpy as np

from fluidmatch.application.exceptions import ConfigurationException
from fluidmatch.model.distributions import Exponential, Uniform
from fluidmatch.model.network import MatchingRates, Network
from fluidmatch.optimization.priority import build_priority_sets
from fluidmatch.simulation.engine import ArrivalKind
from fluidmatch.simulation.policies import PolicyKind
from fluidmatch.simulation.simulator import SimConfig, replicate, run

M_STAR = [[1.0, 1.0, 0.0], [0.0, 1.0, 0.5]]


class TestSimConfig(TestCase):
    def setUp(self):
        self.net = Network.uniform_patience([1.0], [1.0], [[1.0]], Exponential(1.0))

    def test_review_length(self):
        sut = SimConfig(self.net, n=1000, review_base=0.3, horizon=10.0, policy=PolicyKind.LP)
        self.assertAlmostEqual(sut.review_length, 0.003)
        self.assertEqual(sut.reviews, 3333)

    def test_invalid(self):
        with self.assertRaises(ConfigurationException):
            SimConfig(self.net, n=0, review_base=0.1, horizon=10.0, policy=PolicyKind.LP)
        with self.assertRaises(ConfigurationException):
            SimConfig(self.net, n=1, review_base=20.0, horizon=10.0, policy=PolicyKind.LP)
        with self.assertRaises(ConfigurationException):
            SimConfig(self.net, n=1, review_base=0.1, horizon=10.0, policy=PolicyKind.PRIORITY)
        with self.assertRaises(ConfigurationException):
            SimConfig(self.net, n=1, review_base=0.1, horizon=10.0, policy=PolicyKind.MATCHING_RATE)
        with self.assertRaises(ConfigurationException):
            SimConfig(self.net, n=1, review_base=0.1, horizon=10.0, policy=PolicyKind.MATCHING_RATE,
                      rates=MatchingRates([[2.0]]))
        with self.assertRaises(ConfigurationException):
            SimConfig(self.net, n=1, review_base=0.1, horizon=10.0, policy=PolicyKind.LP, review_exponent=1.0)


class TestRun(TestCase):
    def setUp(self):
        self.net = Network.uniform_patience(
            [2.0, 1.5], [1.0, 2.0, 0.5], [[1, 1, 0], [0, 1, 1]], Uniform(3.0),
            cost_demand=[1.0, 2.0], cost_supply=[2.0, 1.0, 2.0]
        )
        self.sets = build_priority_sets(self.net, M_STAR)
        self.cfg = SimConfig(
            self.net, n=20, review_base=0.3, horizon=5.0, policy=PolicyKind.PRIORITY, sets=self.sets, seed=3,
            track_rates=MatchingRates(M_STAR)
        )

    def test_deterministic_single_edge(self):
        net = Network.uniform_patience([1.0], [1.0], [[1.0]], Exponential(1.0))
        cfg = SimConfig(net, n=1, review_base=1.0, horizon=10.5, policy=PolicyKind.LP, review_exponent=0.0,
                        arrival_kind=ArrivalKind.DETERMINISTIC, record_trajectory=True)
        sut = run(cfg)
        self.assertEqual(sut.reviews, 10)
        self.assertEqual(sut.matches.tolist(), [[10]])
        self.assertEqual(int(sut.reneged_demand.sum() + sut.reneged_supply.sum()), 0)
        self.assertEqual(sut.objective, 10.0)
        self.assertEqual(float(sut.queue_integral_demand.sum()), 0.0)
        self.assertEqual(len(sut.trajectory), 10)
        self.assertEqual(sut.trajectory[0], [1.0, 0, 0])
        self.assertTrue(sut.flow_balanced())

    def test_flow_balance_and_admissibility(self):
        for policy in PolicyKind:
            cfg = replace(self.cfg, policy=policy, rates=MatchingRates(M_STAR))
            sut = run(cfg)
            self.assertTrue(sut.flow_balanced())
            self.assertTrue(np.all(sut.matches >= 0))
            self.assertGreater(int(sut.arrivals_demand.sum()), 0)
            self.assertEqual(sut.policy, policy.value)

    def test_same_seed_same_run(self):
        first, second = run(self.cfg), run(self.cfg)
        self.assertEqual(first.objective, second.objective)
        self.assertTrue(np.array_equal(first.matches, second.matches))
        other = run(replace(self.cfg, seed=4))
        self.assertFalse(
            first.objective == other.objective and np.array_equal(first.matches, other.matches)
        )

    def test_objective_accounts_for_waiting(self):
        sut = run(self.cfg)
        expected = float(np.sum(self.net.values * sut.matches)) \
            - float(np.dot(self.net.cost_demand, sut.queue_integral_demand)) \
            - float(np.dot(self.net.cost_supply, sut.queue_integral_supply))
        self.assertAlmostEqual(sut.objective, expected)
        self.assertTrue(np.allclose(sut.average_queue_demand, sut.queue_integral_demand / 100.0))
        self.assertGreaterEqual(sut.rate_gap, 0.0)
        row = sut.to_row()
        self.assertEqual(row['matches_total'], int(sut.matches.sum()))
        self.assertIn('M_2_3', row)

    def test_replicate(self):
        summary = replicate(self.cfg, 2)
        self.assertEqual([r.seed for r in summary.runs], [3, 4])
        self.assertAlmostEqual(
            float(summary.mean('objective')), (summary.runs[0].objective + summary.runs[1].objective) / 2
        )
        self.assertEqual(summary.as_dict()['matches']['mean'].shape, (2, 3))
        single = replicate(self.cfg, 1)
        self.assertEqual(float(single.stderr('objective')), 0.0)
        with self.assertRaises(ConfigurationException):
            replicate(self.cfg, 0)
