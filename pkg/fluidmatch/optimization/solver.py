"""
The matching problem

    max  sum v_jk m_jk - sum_j cD_j q*_j(m) - sum_k cS_k i*_k(m)   over the transportation polytope,

dispatched on the hazard classes of the patience laws:

- constant hazards (or no holding costs): the objective is linear, solved as a transportation LP
  and moved to a vertex;
- nondecreasing hazards: convex maximization, the optimum sits on a vertex, all are evaluated;
- nonincreasing hazards: concave maximization, Frank-Wolfe with transportation subproblems;
- anything else: projected-gradient ascent from many starts, without a global guarantee.
"""
import enum
from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np
from scipy import optimize

from fluidmatch import settings
from fluidmatch.application.logging_factory import Logger
from fluidmatch.model.distributions import HazardClass
from fluidmatch.model.fluid import mp_gradient, mp_objective
from fluidmatch.model.network import MatchingRates, Network
from fluidmatch.optimization.transport import TransportInstance, solve_transport
from fluidmatch.optimization.vertices import (
    enumerate_extreme_points, is_extreme_point, to_extreme_point
)


class SolverUsed(enum.Enum):
    LP = 'LP'
    VERTEX_ENUMERATION = 'VertexEnumeration'
    FRANK_WOLFE = 'FrankWolfe'
    MULTI_START_GRADIENT = 'MultiStartGradient'


@dataclass(frozen=True, eq=False)
class MpSolution:
    m_star: MatchingRates
    objective: float
    is_extreme_point: bool
    solver_used: SolverUsed
    global_optimum: bool = True
    iterations: int = 0
    gap: Optional[float] = None

    def to_record(self) -> Dict:
        return {
            'm_star': self.m_star.m.tolist(),
            'objective': self.objective,
            'is_extreme_point': self.is_extreme_point,
            'solver_used': self.solver_used.value,
            'global_optimum': self.global_optimum,
            'iterations': self.iterations,
            'gap': self.gap
        }


def linear_weights(net: Network) -> np.ndarray:
    """
    Wait-cost adjusted weights v_jk + cD_j/theta_j + cS_k/theta_k, exact under exponential patience.
    """
    return net.values + (net.cost_demand / net.theta_demand)[:, None] + (net.cost_supply / net.theta_supply)[None, :]


def linear_offset(net: Network) -> float:
    qd, qs = net.empty_queues
    return -float(np.dot(net.cost_demand, qd) + np.dot(net.cost_supply, qs))


def solve_lp_value_only(net_or_values, row_caps=None, col_caps=None) -> MatchingRates:
    """
    max sum v m over the polytope, from a Network or from an explicit value matrix and caps.
    """
    if isinstance(net_or_values, Network):
        values, row_caps, col_caps = net_or_values.values, net_or_values.lam, net_or_values.mu
    else:
        values = net_or_values
    return MatchingRates(solve_transport(TransportInstance(values, row_caps, col_caps)).allocation)


def lp_value(net_or_values, row_caps=None, col_caps=None) -> float:
    """
    F(lambda, mu), the optimal matching value without holding costs.
    """
    if isinstance(net_or_values, Network):
        values = net_or_values.values
    else:
        values = np.asarray(net_or_values, dtype=float)
    return float(np.sum(values * solve_lp_value_only(net_or_values, row_caps, col_caps).m))


def _solve_linear(net: Network) -> MpSolution:
    weights = linear_weights(net) if net.has_costs else net.values
    allocation = solve_transport(TransportInstance(weights, net.lam, net.mu)).allocation
    vertex = to_extreme_point(net, allocation, weights)
    objective = mp_objective(net, vertex.m)
    Logger.solver.debug(
        'linear route: lp value %s, offset %s, objective %s',
        float(np.sum(weights * vertex.m.m)), linear_offset(net), objective
    )
    return MpSolution(m_star=vertex.m, objective=objective, is_extreme_point=True, solver_used=SolverUsed.LP)


def _best_vertex(net: Network, points) -> (MatchingRates, float):
    values = [mp_objective(net, p.m) for p in points]
    best = max(values)
    # points are sorted, so the first within tolerance is the lexicographically smallest
    for point, value in zip(points, values):
        if value >= best - settings.OBJECTIVE_TOLERANCE:
            return point.m, value


def _solve_vertices(net: Network) -> MpSolution:
    points = enumerate_extreme_points(net)
    m, value = _best_vertex(net, points)
    return MpSolution(
        m_star=m, objective=value, is_extreme_point=True,
        solver_used=SolverUsed.VERTEX_ENUMERATION, iterations=len(points)
    )


def _atom_key(m: np.ndarray) -> bytes:
    return np.round(m, 12).tobytes()


def _line_search(net: Network, m: np.ndarray, direction: np.ndarray, limit: float):
    """
    Best step in [0, limit] along `direction`. The objective is concave on the segment, so the
    bounded search finds the interior maximum and the endpoint is compared separately.
    """
    def value_at(step):
        return mp_objective(net, _feasible(net, m + step * direction))

    found = optimize.minimize_scalar(
        lambda step: -value_at(step), bounds=(0.0, limit), method='bounded', options={'xatol': 1e-12}
    )
    step, value = float(found.x), -float(found.fun)
    end = value_at(limit)
    if end >= value:
        step, value = limit, end
    return step, _feasible(net, m + step * direction), value


def frank_wolfe(net: Network, start=None, max_iterations=10000, gap_tolerance=1e-8):
    """
    Away-step conditional gradient ascent with exact line search. The iterate is kept as a
    convex combination of transportation vertices (and the starting point); each iteration
    either moves toward the best vertex or away from the worst active one.
    Returns (m, objective, iterations, gap), gap being the duality-gap estimate g.(s - m).
    """
    m = np.array(_interior_point(net) if start is None else start, dtype=float)
    atoms = {_atom_key(m): m.copy()}
    weights = {_atom_key(m): 1.0}
    value = mp_objective(net, m)
    gap = np.inf
    iteration = 0
    for iteration in range(1, max_iterations + 1):
        gradient = mp_gradient(net, m, extend_boundary=True)
        target = solve_transport(TransportInstance(gradient, net.lam, net.mu)).allocation
        gap = float(np.sum(gradient * (target - m)))
        if gap < gap_tolerance:
            break
        away = min(weights, key=lambda key: float(np.sum(gradient * atoms[key])))
        alpha = weights[away]
        away_gain = float(np.sum(gradient * (m - atoms[away])))
        if gap >= away_gain or alpha >= 1.0:
            step, candidate, candidate_value = _line_search(net, m, target - m, 1.0)
            key = _atom_key(target)
            if step >= 1.0:
                atoms, weights = {key: target}, {key: 1.0}
            else:
                weights = {k: w * (1.0 - step) for k, w in weights.items()}
                atoms.setdefault(key, target)
                weights[key] = weights.get(key, 0.0) + step
        else:
            limit = alpha / (1.0 - alpha)
            step, candidate, candidate_value = _line_search(net, m, m - atoms[away], limit)
            weights = {k: w * (1.0 + step) for k, w in weights.items()}
            weights[away] -= step
            if step >= limit or weights[away] <= 0.0:
                del weights[away]
                del atoms[away]
        if step <= 0.0 or candidate_value < value:
            break
        m, value = candidate, candidate_value
    if gap >= gap_tolerance:
        Logger.solver.warning(
            'frank-wolfe stopped after %s iterations with gap %.3g above %.3g', iteration, gap, gap_tolerance
        )
    else:
        Logger.solver.debug('frank-wolfe converged after %s iterations, gap %.3g', iteration, gap)
    return MatchingRates(m), value, iteration, gap


def _interior_point(net: Network) -> np.ndarray:
    return 0.5 * np.minimum(net.lam[:, None] / net.K, net.mu[None, :] / net.J)


def _feasible(net: Network, m: np.ndarray) -> np.ndarray:
    """
    Removes round-off that pushes a convex combination out of the polytope.
    """
    m = np.clip(m, 0.0, None)
    rows = m.sum(axis=1)
    m = m * np.minimum(1.0, net.lam / np.where(rows > 0, rows, 1.0))[:, None]
    cols = m.sum(axis=0)
    return m * np.minimum(1.0, net.mu / np.where(cols > 0, cols, 1.0))[None, :]


def _solve_frank_wolfe(net: Network) -> MpSolution:
    m, value, iterations, gap = frank_wolfe(net)
    return MpSolution(
        m_star=m, objective=value, is_extreme_point=is_extreme_point(net, m),
        solver_used=SolverUsed.FRANK_WOLFE, iterations=iterations, gap=gap,
        global_optimum=gap < settings.DUALITY_GAP_TOLERANCE
    )


def project_capped_simplex(x: np.ndarray, cap: float) -> np.ndarray:
    """
    Euclidean projection onto {y >= 0, sum y <= cap}.
    """
    y = np.clip(x, 0.0, None)
    if y.sum() <= cap:
        return y
    u = np.sort(x)[::-1]
    cumulative = np.cumsum(u) - cap
    index = np.arange(1, x.size + 1)
    rho = np.nonzero(u - cumulative / index > 0)[0][-1]
    tau = cumulative[rho] / (rho + 1.0)
    return np.clip(x - tau, 0.0, None)


def _project_rows(net: Network, m: np.ndarray) -> np.ndarray:
    return np.array([project_capped_simplex(m[j], net.lam[j]) for j in range(net.J)])


def _project_cols(net: Network, m: np.ndarray) -> np.ndarray:
    return np.array([project_capped_simplex(m[:, k], net.mu[k]) for k in range(net.K)]).T


def project_polytope(net: Network, m, max_iterations=1000, tol=1e-12) -> np.ndarray:
    """
    Dykstra's alternating projection onto the row and column constraint sets, followed by a
    repair pass that can only lower entries.
    """
    x = np.array(m, dtype=float)
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for _ in range(max_iterations):
        y = _project_rows(net, x + p)
        p = x + p - y
        previous = x
        x = _project_cols(net, y + q)
        q = y + q - x
        if np.max(np.abs(x - previous)) < tol:
            break
    return _project_cols(net, _project_rows(net, np.clip(x, 0.0, None)))


def projected_ascent(net: Network, start, max_iterations=200, min_step=1e-10):
    m = project_polytope(net, start)
    value = mp_objective(net, m)
    scale = float(max(net.lam.max(), net.mu.max()))
    step = 0.5
    for _ in range(max_iterations):
        gradient = mp_gradient(net, m, extend_boundary=True)
        size = np.max(np.abs(gradient))
        if size == 0:
            break
        direction = gradient / size
        while step >= min_step:
            candidate = project_polytope(net, m + step * scale * direction)
            candidate_value = mp_objective(net, candidate)
            if candidate_value > value + settings.OBJECTIVE_TOLERANCE:
                m, value = candidate, candidate_value
                step = min(2.0 * step, 1.0)
                break
            step /= 2.0
        else:
            break
    return m, value


def _starting_points(net: Network, starts: int, seed: int) -> List[np.ndarray]:
    rng = np.random.default_rng(seed)
    scale = np.minimum(net.lam[:, None], net.mu[None, :])
    points = [project_polytope(net, rng.uniform(0.0, 1.0, (net.J, net.K)) * scale) for _ in range(starts)]
    if net.J * net.K <= settings.MAX_ENUMERATION_EDGES:
        points.extend(p.m.m for p in enumerate_extreme_points(net))
    else:
        Logger.solver.info('instance too large for vertex starts, using %s random starts only', starts)
    return points


def _solve_multistart(net: Network, starts=50, seed=0) -> MpSolution:
    best_m, best_value = None, -np.inf
    points = _starting_points(net, starts, seed)
    for start in points:
        m, value = projected_ascent(net, start)
        if best_m is None or value > best_value + settings.OBJECTIVE_TOLERANCE or (
                abs(value - best_value) <= settings.OBJECTIVE_TOLERANCE and tuple(m.ravel()) < tuple(best_m.ravel())):
            best_m, best_value = m, value
    rates = MatchingRates(best_m)
    return MpSolution(
        m_star=rates, objective=mp_objective(net, rates), is_extreme_point=is_extreme_point(net, rates),
        solver_used=SolverUsed.MULTI_START_GRADIENT, global_optimum=False, iterations=len(points)
    )


def solve_mp(net: Network, seed=0) -> MpSolution:
    classes = net.hazard_classes
    if not net.has_costs or all(c is HazardClass.CONSTANT for c in classes):
        solution = _solve_linear(net)
    elif all(c.nondecreasing for c in classes):
        solution = _solve_vertices(net)
    elif all(c.nonincreasing for c in classes):
        solution = _solve_frank_wolfe(net)
    else:
        solution = _solve_multistart(net, seed=seed)
    Logger.solver.info(
        'matching problem solved by %s: objective %.9g, extreme point %s%s',
        solution.solver_used.value, solution.objective, solution.is_extreme_point,
        '' if solution.global_optimum else ' (no global guarantee)'
    )
    return solution


def upper_bound(net: Network, solution: Optional[MpSolution] = None) -> float:
    """
    Fluid bound on the long-run average value of any admissible policy.
    """
    solution = solution or solve_mp(net)
    return mp_objective(net, solution.m_star)
