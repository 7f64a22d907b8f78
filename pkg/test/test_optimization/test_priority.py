from unittest import TestCase

import numpy as np

from fluidmatch.application.exceptions import StructureException
from fluidmatch.model.distributions import Exponential
from fluidmatch.model.network import MatchingRates, Network
from fluidmatch.optimization.priority import (
    PrioritySets, build_priority_sets, greedy_yp, replicates, sets_summary
)

M_STAR = [[1.0, 1.0, 0.0], [0.0, 1.0, 0.5]]


class TestPrioritySets(TestCase):
    def setUp(self):
        self.net = Network.uniform_patience(
            [2.0, 1.5], [1.0, 2.0, 0.5], [[1, 1, 0], [0, 1, 1]], Exponential(1.0)
        )

    def test_build(self):
        sut = build_priority_sets(self.net, M_STAR)
        self.assertEqual(sut.sets, (
            ((0, 0), (1, 2)),
            ((0, 1),),
            ((1, 1),),
            ((0, 2), (1, 0)),
        ))
        self.assertEqual(sut.H, 2)
        self.assertEqual(sut.first, ((0, 0), (1, 2)))
        self.assertEqual(sut.zero_set, ((0, 2), (1, 0)))
        self.assertEqual(str(sut).splitlines()[0], 'P0: (1,1) (2,3)')
        self.assertEqual(sets_summary(sut)['P3'], '(1,3) (2,1)')

    def test_greedy_replay(self):
        sut = build_priority_sets(self.net, M_STAR)
        self.assertTrue(np.array_equal(greedy_yp(self.net, M_STAR, sut).m, np.array(M_STAR)))
        self.assertTrue(replicates(self.net, MatchingRates(M_STAR), sut))

    def test_scaled_snapshot_keeps_the_rates(self):
        sut = build_priority_sets(self.net, M_STAR)
        for q in (1.0, 7.0, 100.0):
            scaled = Network.uniform_patience(
                [2 * q, 1.5 * q], [q, 2 * q, 0.5 * q], self.net.values, Exponential(1.0)
            )
            self.assertTrue(np.allclose(greedy_yp(scaled, M_STAR, sut).m, q * np.array(M_STAR)))

    def test_include_zero_set(self):
        net = Network.uniform_patience([1.0, 1.0], [2.0], [[1.0], [0.0]], Exponential(1.0))
        sut = build_priority_sets(net, [[1.0], [0.0]])
        self.assertEqual(sut.sets, (((0, 0),), ((1, 0),)))
        self.assertTrue(np.allclose(greedy_yp(net, [[1.0], [0.0]], sut).m, [[1.0], [0.0]]))
        self.assertTrue(np.allclose(greedy_yp(net, [[1.0], [0.0]], sut, include_zero_set=True).m, [[1.0], [1.0]]))

    def test_single_edge(self):
        net = Network.uniform_patience([1.0], [2.0], [[1.0]], Exponential(1.0))
        sut = build_priority_sets(net, [[1.0]])
        self.assertEqual(sut.sets, (((0, 0),), ()))

    def test_not_an_extreme_point(self):
        net = Network.uniform_patience([1.0, 1.0], [1.0, 1.0], np.ones((2, 2)), Exponential(1.0))
        with self.assertRaises(StructureException):
            build_priority_sets(net, [[0.5, 0.5], [0.5, 0.5]])

    def test_validate(self):
        with self.assertRaises(StructureException):
            PrioritySets(sets=(((0, 0), (0, 1)), ((1, 0), (1, 1), (0, 2), (1, 2)))).validate(self.net)
        with self.assertRaises(StructureException):
            PrioritySets(sets=(((0, 0),), ())).validate(self.net)
        with self.assertRaises(StructureException):
            PrioritySets(sets=(((0, 5),), ())).validate(self.net)
        with self.assertRaises(StructureException):
            PrioritySets(sets=())

    def test_record(self):
        sut = build_priority_sets(self.net, M_STAR)
        self.assertEqual(PrioritySets.from_record(sut.to_record()).sets, sut.sets)
