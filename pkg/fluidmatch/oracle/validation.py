"""
Self-checks that compare the library against independent computations: closed forms, the fluid
fixed point, finite differences, the birth-death chain, exact vertex enumeration and the
rate convergence of the discrete-review policies.
"""
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from fluidmatch.application.exceptions import ConfigurationException
from fluidmatch.application.logging_factory import Logger
from fluidmatch.model.distributions import Exponential, Gamma, Uniform
from fluidmatch.model.fluid import fluid_trajectory, invariant_queue, invariant_state, mp_gradient, mp_objective
from fluidmatch.model.network import MatchingRates, Network
from fluidmatch.oracle import markov


@dataclass
class Check:
    suite: str
    name: str
    passed: bool
    gap: float
    tolerance: float
    detail: str = ''

    def to_row(self) -> Dict:
        return {
            'suite': self.suite,
            'check': self.name,
            'passed': self.passed,
            'gap': self.gap,
            'tolerance': self.tolerance,
            'detail': self.detail,
        }

    def __str__(self):
        return '%s %s/%s: gap %.3g (tolerance %.3g)%s' % (
            'PASS' if self.passed else 'FAIL', self.suite, self.name, self.gap, self.tolerance,
            self.detail and ' - %s' % self.detail
        )


def _check(suite, name, gap, tolerance, detail='') -> Check:
    return Check(suite=suite, name=name, passed=bool(gap <= tolerance), gap=float(gap), tolerance=tolerance,
                 detail=detail)


def random_patience(rng: np.random.Generator, kind: str):
    theta = float(rng.uniform(0.5, 2.0))
    if kind == 'exponential':
        return Exponential(theta)
    if kind == 'uniform':
        return Uniform(theta)
    if kind == 'gamma':
        return Gamma.from_mean(1.0 / theta, float(rng.choice([0.5, 0.7, 2.0, 3.0])))
    if kind == 'gamma-increasing':
        return Gamma.from_mean(1.0 / theta, float(rng.choice([2.0, 3.0])))
    if kind == 'gamma-decreasing':
        return Gamma.from_mean(1.0 / theta, float(rng.choice([0.5, 0.7])))
    raise ConfigurationException('unknown patience kind for random instances: %s' % kind)


def random_network(rng: np.random.Generator, J: int, K: int, kind='exponential', costs=True) -> Network:
    return Network(
        lam=rng.uniform(0.5, 2.0, J),
        mu=rng.uniform(0.5, 2.0, K),
        values=rng.uniform(0.0, 2.0, (J, K)),
        cost_demand=rng.uniform(0.0, 2.0, J) if costs else np.zeros(J),
        cost_supply=rng.uniform(0.0, 2.0, K) if costs else np.zeros(K),
        demand_patience=[random_patience(rng, kind) for _ in range(J)],
        supply_patience=[random_patience(rng, kind) for _ in range(K)]
    )


def random_rates(rng: np.random.Generator, net: Network, low=0.0, high=1.0) -> MatchingRates:
    """
    A random point of the polytope whose row and column loads lie in [low, high] times the caps.
    """
    m = rng.uniform(0.05, 1.0, (net.J, net.K))
    m = m * (net.lam / m.sum(axis=1))[:, None]
    m = m * np.minimum(1.0, net.mu / m.sum(axis=0))[None, :]
    load = max(np.max(m.sum(axis=1) / net.lam), np.max(m.sum(axis=0) / net.mu))
    return MatchingRates(m * rng.uniform(low, high) / load)


def invariants_suite(points=1000, fluid_instances=200, gradient_points=100, seed=0, horizon=60.0, dt=0.05):
    rng = np.random.default_rng(seed)
    checks = []

    errors = []
    for _ in range(points):
        lam, theta = rng.uniform(0.5, 2.0), rng.uniform(0.5, 2.0)
        s = rng.uniform(0.0, lam)
        errors.append(abs(invariant_queue(Exponential(theta), lam, s) - (lam - s) / theta))
        errors.append(abs(invariant_queue(Uniform(theta), lam, s) - lam / theta * (1 - (s / lam) ** 2)))
    checks.append(_check('invariants', 'closed-form', max(errors), 1e-9, '%s points' % points))

    gaps = []
    kinds = ('exponential', 'uniform', 'gamma')
    for i in range(fluid_instances):
        net = random_network(rng, 1, 1, kinds[i % 3])
        m = MatchingRates([[rng.uniform(0.1, 0.9) * min(net.lam[0], net.mu[0])]])
        terminal = fluid_trajectory(net, m, horizon, dt=dt, record_every=int(horizon / dt)).terminal
        gaps.append(terminal.distance(invariant_state(net, m)))
    checks.append(_check('invariants', 'fluid-fixed-point', max(gaps, default=0.0), 1e-4,
                         '%s instances' % fluid_instances))

    worst = 0.0
    for _ in range(gradient_points):
        net = random_network(rng, 2, 2, 'gamma')
        m = random_rates(rng, net, 0.2, 0.8)
        worst = max(worst, gradient_error(net, m))
    checks.append(_check('invariants', 'gradient-finite-difference', worst, 1e-5, '%s points' % gradient_points))

    checks.append(_check('invariants', 'hazard-convexity-class', hazard_convexity_violation(), 1e-9))
    return checks


def gradient_error(net: Network, m: MatchingRates, step=1e-5) -> float:
    """
    Largest relative gap between the analytic gradient and central differences.
    """
    analytic = mp_gradient(net, m)
    worst = 0.0
    for j, k in net.edges:
        bump = np.zeros((net.J, net.K))
        bump[j, k] = step
        numeric = (mp_objective(net, m.m + bump) - mp_objective(net, m.m - bump)) / (2 * step)
        worst = max(worst, abs(numeric - analytic[j, k]) / max(1.0, abs(analytic[j, k])))
    return worst


def hazard_convexity_violation(grid=101) -> float:
    """
    Midpoint test: q* is concave in the throughput under increasing hazards and convex under
    decreasing ones. Returns the largest violation.
    """
    worst = 0.0
    for dist, sign in ((Uniform(1.0), 1.0), (Gamma(3.0, 1.0 / 3.0), 1.0), (Gamma(0.5, 2.0), -1.0)):
        s = np.linspace(0.0, 1.0, grid)
        q = np.array([invariant_queue(dist, 1.0, x) for x in s])
        midpoint = q[1:-1] - 0.5 * (q[:-2] + q[2:])
        worst = max(worst, float(np.max(-sign * midpoint, initial=0.0)))
    return worst


def markov_suite(ns=(1, 10, 100)) -> List[Check]:
    checks = []
    unit = markov.BirthDeathSpec(1.0, 1.0, 1.0)
    dist = markov.stationary_distribution(unit)
    linear = markov.solve_balance_equations(unit, 1, dist.truncation)
    expected = 1.0 / (2 * np.e - 3)
    demand, _ = markov.mean_queues(unit, 1)
    checks.append(_check('markov', 'unit-mean-queue', abs(demand - expected), 1e-8, 'E[Q] vs 1/(2e-3)'))
    checks.append(_check('markov', 'product-form-vs-linear-solve',
                         float(np.max(np.abs(dist.probabilities - linear))), 1e-10))
    checks.append(_check('markov', 'closed-form-normalizer',
                         abs(markov.normalizing_constant_closed_form(unit) - dist.at(0)), 1e-10))
    skewed = markov.BirthDeathSpec(1.0, 0.5, 1.0)
    skewed_dist = markov.stationary_distribution(skewed)
    checks.append(_check('markov', 'balance-residual', markov.balance_residual(skewed, 1, skewed_dist), 1e-10))
    checks.append(_check('markov', 'detailed-balance-residual',
                         markov.detailed_balance_residual(skewed, 1, skewed_dist), 1e-10))
    rows = markov.convergence_rows(skewed, list(ns))
    gaps = [r['gap'] for r in rows]
    increases = max([b - a for a, b in zip(gaps, gaps[1:])], default=0.0)
    checks.append(_check('markov', 'convergence-monotone', max(increases, 0.0), 0.0,
                         ' '.join('n=%s:%.4g' % (r['n'], r['gap']) for r in rows)))
    checks.append(_check('markov', 'convergence-at-largest-n', gaps[-1], 0.02))
    return checks


def _solve_fraction_system(rows: List[List[Fraction]], rhs: List[Fraction]) -> Optional[List[Fraction]]:
    size = len(rhs)
    A = [list(r) + [b] for r, b in zip(rows, rhs)]
    for col in range(size):
        pivot = next((r for r in range(col, size) if A[r][col] != 0), None)
        if pivot is None:
            return None
        A[col], A[pivot] = A[pivot], A[col]
        for r in range(size):
            if r != col and A[r][col] != 0:
                factor = A[r][col] / A[col][col]
                A[r] = [a - factor * b for a, b in zip(A[r], A[col])]
    return [A[i][size] / A[i][i] for i in range(size)]


def rational_vertices(lam: Sequence, mu: Sequence) -> List[tuple]:
    """
    Vertices of the polytope by exhaustive basis enumeration in exact rational arithmetic:
    every choice of J*K linearly independent active constraints, kept when feasible.
    """
    lam = [Fraction(x) for x in lam]
    mu = [Fraction(x) for x in mu]
    J, K = len(lam), len(mu)
    size = J * K
    constraints = []
    for i in range(size):
        constraints.append(([Fraction(int(i == c)) for c in range(size)], Fraction(0)))
    for j in range(J):
        constraints.append(([Fraction(int(c // K == j)) for c in range(size)], lam[j]))
    for k in range(K):
        constraints.append(([Fraction(int(c % K == k)) for c in range(size)], mu[k]))
    vertices = set()
    for chosen in itertools.combinations(constraints, size):
        x = _solve_fraction_system([c[0] for c in chosen], [c[1] for c in chosen])
        if x is None or any(v < 0 for v in x):
            continue
        if any(sum(x[j * K:(j + 1) * K]) > lam[j] for j in range(J)):
            continue
        if any(sum(x[k::K]) > mu[k] for k in range(K)):
            continue
        vertices.add(tuple(x))
    return sorted(vertices)


def extreme_points_suite(instances=100, seed=0, oracle_instances=5) -> List[Check]:
    from fluidmatch.optimization.priority import build_priority_sets, greedy_yp
    from fluidmatch.optimization.vertices import check_extreme_structure, enumerate_extreme_points
    rng = np.random.default_rng(seed)
    structure_failures, replay_gap, total = 0, 0.0, 0
    for _ in range(instances):
        net = random_network(rng, int(rng.integers(1, 4)), int(rng.integers(1, 4)))
        for point in enumerate_extreme_points(net):
            total += 1
            try:
                check_extreme_structure(net, point.m)
            except Exception as e:
                structure_failures += 1
                Logger.oracle.warning('vertex %s fails the forest structure: %s', point.m, e)
                continue
            sets = build_priority_sets(net, point)
            replay_gap = max(replay_gap, float(np.max(np.abs(greedy_yp(net, point, sets).m - point.m.m))))
    checks = [
        _check('extreme-points', 'forest-structure', structure_failures, 0, '%s vertices' % total),
        _check('extreme-points', 'priority-replay', replay_gap, 1e-12, '%s vertices' % total),
    ]
    mismatches = 0
    for shape in ((2, 2), (2, 3)) * oracle_instances:
        lam = [Fraction(int(v), 4) for v in rng.integers(1, 9, shape[0])]
        mu = [Fraction(int(v), 4) for v in rng.integers(1, 9, shape[1])]
        net = Network.uniform_patience([float(x) for x in lam], [float(x) for x in mu],
                                       np.ones(shape), Exponential(1.0))
        ours = sorted(tuple(p.m.m.ravel().tolist()) for p in enumerate_extreme_points(net))
        exact = [tuple(float(v) for v in x) for x in rational_vertices(lam, mu)]
        if len(ours) != len(exact) or any(
                max(abs(a - b) for a, b in zip(x, y)) > 1e-9 for x, y in zip(ours, exact)):
            mismatches += 1
    checks.append(_check('extreme-points', 'rational-oracle', mismatches, 0, '%s instances' % (2 * oracle_instances)))
    return checks


def rate_gaps(net: Network, ns=(10, 100, 1000), horizon=10.0, seeds=10, review_base=1.0, seed=0) -> Dict[str, List[float]]:
    """
    Average over seeds of max_i |M(i l_n)/n - m* i l_n| for both rate-replicating policies.
    """
    from fluidmatch.optimization.priority import build_priority_sets
    from fluidmatch.optimization.solver import solve_mp
    from fluidmatch.simulation.policies import PolicyKind
    from fluidmatch.simulation.simulator import SimConfig, run
    solution = solve_mp(net)
    sets = build_priority_sets(net, solution.m_star)
    out = {}
    for policy in (PolicyKind.MATCHING_RATE, PolicyKind.PRIORITY):
        gaps = []
        for n in ns:
            values = [
                run(SimConfig(
                    net=net, n=n, review_base=review_base, horizon=horizon, policy=policy,
                    rates=solution.m_star, sets=sets, seed=seed + r, track_rates=solution.m_star
                )).rate_gap for r in range(seeds)
            ]
            gaps.append(float(np.mean(values)))
        out[policy.value] = gaps
    return out


def convergence_suite(net: Network, ns=(10, 100, 1000), horizon=10.0, seeds=10, review_base=1.0, seed=0):
    checks = []
    from fluidmatch.optimization.solver import solve_mp
    scale = float(np.sum(solve_mp(net).m_star.m)) * horizon
    for policy, gaps in rate_gaps(net, ns, horizon, seeds, review_base, seed).items():
        increases = max([b - a for a, b in zip(gaps, gaps[1:])], default=0.0)
        detail = ' '.join('n=%s:%.4g' % (n, g) for n, g in zip(ns, gaps))
        checks.append(_check('convergence', '%s-monotone' % policy, max(increases, 0.0), 0.0, detail))
        checks.append(_check('convergence', '%s-final-gap' % policy, gaps[-1], 0.05 * scale, detail))
    return checks


SUITES = {
    'invariants': invariants_suite,
    'markov': markov_suite,
    'extreme-points': extreme_points_suite,
    'convergence': convergence_suite,
}  # type: Dict[str, Callable[..., List[Check]]]


def run_suite(name: str, **kwargs) -> List[Check]:
    if name not in SUITES:
        raise ConfigurationException('unknown validation suite: %s' % name)
    checks = SUITES[name](**kwargs)
    for check in checks:
        (Logger.oracle.info if check.passed else Logger.oracle.warning)('%s', check)
    return checks
