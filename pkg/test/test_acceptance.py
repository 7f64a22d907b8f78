"""
Full-size runs, enabled with FLUIDMATCH_SLOW_TESTS=1.
"""
import csv
import json
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from unittest import TestCase, skipUnless

import numpy as np

from fluidmatch import main, settings
from fluidmatch.application import schema
from fluidmatch.application.context import Context
from fluidmatch.builder import build_prepared, build_variants, sim_config
from fluidmatch.model.distributions import Exponential, Gamma
from fluidmatch.model.fluid import invariant_state
from fluidmatch.model.network import Network
from fluidmatch.optimization.solver import lp_value, solve_lp_value_only
from fluidmatch.oracle import validation
from fluidmatch.simulation.policies import PolicyKind
from fluidmatch.simulation.simulator import SimConfig, run

CONFIGS = os.path.join(os.path.dirname(__file__), '..', 'configs')


def single_edge(mu=1.0, patience=None):
    patience = patience or Exponential(1.0)
    return Network(
        lam=[1.0], mu=[mu], values=[[1.0]], cost_demand=[0.0], cost_supply=[0.0],
        demand_patience=[patience], supply_patience=[patience]
    )


def load_config(name, **changes):
    with open(os.path.join(CONFIGS, name)) as f:
        document = json.load(f)
    document.update(changes)
    return schema.parse(json.dumps(document))


@skipUnless(settings.SLOW_TESTS, 'slow')
class TestAcceptance(TestCase):
    def test_invariants(self):
        checks = validation.run_suite('invariants')
        self.assertTrue(all(c.passed for c in checks), [str(c) for c in checks if not c.passed])

    def test_extreme_points(self):
        checks = validation.run_suite('extreme-points')
        self.assertTrue(all(c.passed for c in checks), [str(c) for c in checks if not c.passed])

    def test_lp_policy_approaches_the_fluid_bound(self):
        net = single_edge()
        bound = lp_value(net)
        ratios = []
        for n in (10, 100, 1000):
            ratios.append(np.mean([
                run(SimConfig(net=net, n=n, review_base=1.0, horizon=10.0, policy=PolicyKind.LP, seed=s)).ratio(bound)
                for s in range(3)
            ]))
        self.assertGreaterEqual(ratios[-1], 0.9)
        self.assertGreater(ratios[-1], ratios[0])

    def test_gamma_queues_match_the_fluid_invariant(self):
        for shape in (0.7, 2.0, 5.0):
            for mu in (0.5, 1.5):
                net = single_edge(mu, Gamma.from_mean(1.0, shape))
                expected = invariant_state(net, solve_lp_value_only(net))
                results = [
                    run(SimConfig(net=net, n=100, review_base=0.1, horizon=100.0, policy=PolicyKind.LP, seed=s))
                    for s in range(30)
                ]
                if mu < 1.0:
                    simulated = np.mean([r.average_queue_demand[0] for r in results])
                    fluid = float(expected.q_star[0])
                else:
                    simulated = np.mean([r.average_queue_supply[0] for r in results])
                    fluid = float(expected.i_star[0])
                self.assertLess(abs(simulated - fluid), 0.1 * fluid, (shape, mu, simulated, fluid))

    def test_rate_gaps_shrink_with_scale(self):
        cfg = load_config('four_node_sweep.json')
        checks = validation.run_suite('convergence', net=build_variants(cfg)[0].net)
        self.assertTrue(all(c.passed for c in checks), [str(c) for c in checks])

    def test_reneging_table(self):
        directory = tempfile.TemporaryDirectory()
        self.addCleanup(directory.cleanup)
        ctx = Context()
        for layer in ('args', 'env', 'configfile'):
            ctx[layer] = {}
        summary = os.path.join(directory.name, 'table.csv')
        cfg = load_config('reneging_table.json', out=os.path.join(directory.name, 'rows.csv'), summary_out=summary)
        with ThreadPoolExecutor(max_workers=4) as executor:
            self.assertEqual(main.run_experiment(cfg, ctx, executor=executor), 0)
        with open(summary) as f:
            table = {row['mu']: row for row in csv.DictReader(f)}
        self.assertEqual(sorted(table), ['0.5', '0.9', '1', '1.2', '1.5'])
        expected = {
            ('0.5', 'demand'): (0.4942, 0.4847),
            ('0.9', 'demand'): (0.1193, 0.0959),
            ('1.5', 'supply'): (0.3314, 0.3328),
        }
        for (mu, side), (gamma, exponential) in expected.items():
            self.assertAlmostEqual(float(table[mu]['%s_gamma' % side]), gamma, delta=0.03)
            self.assertAlmostEqual(float(table[mu]['%s_exponential' % side]), exponential, delta=0.03)
        for row in table.values():
            self.assertLess(abs(float(row['demand_gamma']) - float(row['demand_exponential'])), 0.03)

    def test_four_node_policies(self):
        cfg = load_config('four_node_sweep.json')
        ratios = {PolicyKind.MATCHING_RATE: [], PolicyKind.PRIORITY: []}
        for prepared in build_prepared(cfg):
            for seed in range(20):
                for policy in ratios:
                    result = run(sim_config(cfg, prepared, 100, 0.01, policy.value, seed))
                    ratios[policy].append(result.ratio(prepared.bound))
        for policy, values in ratios.items():
            self.assertGreaterEqual(min(values), 0.8, policy)
            self.assertLessEqual(max(values), 1.05, policy)
        wins = np.mean(np.array(ratios[PolicyKind.PRIORITY]) >= np.array(ratios[PolicyKind.MATCHING_RATE]))
        self.assertGreaterEqual(wins, 0.7)
