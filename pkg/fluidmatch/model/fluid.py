"""
Invariant states of the fluid model, the matching-problem objective and its gradient, and the
queue-level fluid dynamics started from an empty system.
"""
import math
from dataclasses import dataclass
from typing import Iterator, List, Optional, Sequence

import numpy as np

from fluidmatch import settings
from fluidmatch.application.exceptions import DomainException, GradientUndefinedException
from fluidmatch.application.logging_factory import Logger
from fluidmatch.model.distributions import PatienceDistribution
from fluidmatch.model.network import MatchingRates, Network

BOUNDARY_TOLERANCE = 1e-9


@dataclass(frozen=True, eq=False)
class InvariantState:
    q_star: np.ndarray
    i_star: np.ndarray

    def distance(self, other: 'InvariantState') -> float:
        return float(max(
            np.max(np.abs(self.q_star - other.q_star)),
            np.max(np.abs(self.i_star - other.i_star))
        ))


def _clamped_throughput(matched: float, rate: float) -> float:
    if matched < -BOUNDARY_TOLERANCE or matched > rate + BOUNDARY_TOLERANCE:
        raise DomainException('throughput %s outside [0, %s]' % (matched, rate))
    return min(max(matched, 0.0), rate)


def invariant_queue(patience: PatienceDistribution, rate: float, matched: float) -> float:
    """
    Invariant queue of a node with arrival rate ``rate`` that is matched at rate ``matched``:
    rate/theta * G_e(G^{-1}(1 - matched/rate)).
    """
    matched = _clamped_throughput(matched, rate)
    if matched == 0.0:
        return rate / patience.theta
    level = 1.0 - matched / rate
    if level <= 0.0:
        return 0.0
    return rate / patience.theta * float(patience.excess_life_cdf(patience.inverse_cdf(level)))


def invariant_queue_slope(patience: PatienceDistribution, rate: float, matched: float) -> float:
    """
    d/d(matched) of the invariant queue, -1/h(G^{-1}(1 - matched/rate)), with one-sided
    limits at both ends of [0, rate].
    """
    matched = _clamped_throughput(matched, rate)
    hazard = patience.hazard_at_quantile(1.0 - matched / rate)
    if hazard == 0.0:
        return -math.inf
    return -1.0 / hazard


def _rates(net: Network, m) -> MatchingRates:
    rates = m if isinstance(m, MatchingRates) else MatchingRates(m)
    return rates.ensure_feasible(net)


def q_star(net: Network, m, j: int) -> float:
    rates = _rates(net, m)
    return invariant_queue(net.demand_patience[j], net.lam[j], rates.row_sums[j])


def i_star(net: Network, m, k: int) -> float:
    rates = _rates(net, m)
    return invariant_queue(net.supply_patience[k], net.mu[k], rates.col_sums[k])


def invariant_state(net: Network, m) -> InvariantState:
    rates = _rates(net, m)
    rows, cols = rates.row_sums, rates.col_sums
    return InvariantState(
        q_star=np.array([
            invariant_queue(net.demand_patience[j], net.lam[j], rows[j]) for j in range(net.J)
        ]),
        i_star=np.array([
            invariant_queue(net.supply_patience[k], net.mu[k], cols[k]) for k in range(net.K)
        ])
    )


def mp_objective(net: Network, m) -> float:
    rates = _rates(net, m)
    state = invariant_state(net, rates)
    return float(
        np.sum(net.values * rates.m)
        - np.dot(net.cost_demand, state.q_star)
        - np.dot(net.cost_supply, state.i_star)
    )


def _holding_weight(cost: float, slope: float, limit: float) -> float:
    if cost == 0.0:
        return 0.0
    return min(-cost * slope, limit)


def mp_gradient(net: Network, m, extend_boundary=False, limit=1e12) -> np.ndarray:
    """
    Gradient of the matching-problem objective:
    v_jk + c_j / h_j(G_j^{-1}(1 - row_j/lambda_j)) + c_k / h_k(G_k^{-1}(1 - col_k/mu_k)).

    On the boundary of the polytope the gradient is undefined unless ``extend_boundary``
    is set, in which case the one-sided limits are used and infinite weights are capped at
    ``limit``.
    """
    rates = _rates(net, m)
    rows, cols = rates.row_sums, rates.col_sums
    if not extend_boundary:
        tol = settings.FEASIBILITY_TOLERANCE
        if np.any(rows <= tol) or np.any(rows >= net.lam - tol) or \
                np.any(cols <= tol) or np.any(cols >= net.mu - tol):
            raise GradientUndefinedException('the matching-problem gradient is undefined on the boundary')
    demand_weight = np.array([
        _holding_weight(
            net.cost_demand[j], invariant_queue_slope(net.demand_patience[j], net.lam[j], rows[j]), limit
        ) for j in range(net.J)
    ])
    supply_weight = np.array([
        _holding_weight(
            net.cost_supply[k], invariant_queue_slope(net.supply_patience[k], net.mu[k], cols[k]), limit
        ) for k in range(net.K)
    ])
    return net.values + demand_weight[:, None] + supply_weight[None, :]


def reneging_fractions(net: Network, m):
    """
    Fluid fractions of demand and supply that renege when matched at rates m.
    """
    rates = _rates(net, m)
    demand = np.clip(net.lam - rates.row_sums, 0.0, None) / net.lam
    supply = np.clip(net.mu - rates.col_sums, 0.0, None) / net.mu
    return demand, supply


@dataclass(frozen=True, eq=False)
class FluidTrajectory:
    times: np.ndarray
    demand: np.ndarray
    supply: np.ndarray

    @property
    def terminal(self) -> InvariantState:
        return InvariantState(q_star=self.demand[-1].copy(), i_star=self.supply[-1].copy())

    def at(self, t: float) -> InvariantState:
        i = int(np.argmin(np.abs(self.times - t)))
        return InvariantState(q_star=self.demand[i].copy(), i_star=self.supply[i].copy())

    @property
    def header(self) -> List[str]:
        return ['t'] + ['Q%s' % (j + 1) for j in range(self.demand.shape[1])] + \
               ['I%s' % (k + 1) for k in range(self.supply.shape[1])]

    def rows(self) -> Iterator[List[float]]:
        for i, t in enumerate(self.times):
            yield [float(t)] + self.demand[i].tolist() + self.supply[i].tolist()


class _AgeDynamics:
    """
    Queue-level fluid equation Q' = rate * (1 - G(G_e^{-1}(theta Q / rate))) - matched,
    written in the age coordinate x with Q = rate/theta * G_e(x):  x' = 1 - matched / (rate (1 - G(x))).
    """
    def __init__(self, patience: Sequence[PatienceDistribution], rates: np.ndarray, matched: np.ndarray):
        self.patience = tuple(patience)
        self.rates = rates
        self.matched = matched
        self.edges = np.array([d.support_edge for d in self.patience])
        self.theta = np.array([d.theta for d in self.patience])

    def clip(self, x: np.ndarray) -> np.ndarray:
        upper = np.where(np.isfinite(self.edges), self.edges * (1.0 - 1e-12), np.inf)
        return np.clip(x, 0.0, upper)

    def derivative(self, x: np.ndarray) -> np.ndarray:
        x = self.clip(x)
        out = np.empty_like(x)
        for i, dist in enumerate(self.patience):
            if self.matched[i] == 0.0:
                out[i] = 1.0
                continue
            survival = max(1.0 - float(dist.cdf(x[i])), 1e-300)
            out[i] = 1.0 - self.matched[i] / (self.rates[i] * survival)
        return out

    def queues(self, x: np.ndarray) -> np.ndarray:
        x = self.clip(x)
        return np.array([
            self.rates[i] / self.theta[i] * float(dist.excess_life_cdf(x[i]))
            for i, dist in enumerate(self.patience)
        ])


def default_step(net: Network) -> float:
    return min(1.0 / (10.0 * float(np.max(np.concatenate([net.theta_demand, net.theta_supply])))), 0.01)


def fluid_trajectory(net: Network, m, horizon: float, dt: Optional[float] = None, record_every=1) -> FluidTrajectory:
    """
    Integrates the fluid queues from an empty system with the classic fixed-step RK4 scheme.
    """
    if not horizon > 0:
        raise DomainException('horizon must be positive, found %s' % horizon)
    dt = default_step(net) if dt is None else dt
    if not dt > 0:
        raise DomainException('dt must be positive, found %s' % dt)
    rates = _rates(net, m)
    matched = np.concatenate([
        [_clamped_throughput(s, r) for s, r in zip(rates.row_sums, net.lam)],
        [_clamped_throughput(s, r) for s, r in zip(rates.col_sums, net.mu)],
    ])
    dynamics = _AgeDynamics(net.patience, np.concatenate([net.lam, net.mu]), matched)
    steps = int(math.ceil(horizon / dt - 1e-12))
    x = np.zeros(net.J + net.K)
    times, states = [0.0], [dynamics.queues(x)]
    t = 0.0
    for step in range(1, steps + 1):
        h = min(dt, horizon - t)
        k1 = dynamics.derivative(x)
        k2 = dynamics.derivative(x + 0.5 * h * k1)
        k3 = dynamics.derivative(x + 0.5 * h * k2)
        k4 = dynamics.derivative(x + h * k3)
        x = dynamics.clip(x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
        t += h
        if step % record_every == 0 or step == steps:
            times.append(t)
            states.append(dynamics.queues(x))
    states = np.clip(np.array(states), 0.0, None)
    Logger.fluid.debug('fluid trajectory integrated: %s steps, dt=%s, horizon=%s', steps, dt, horizon)
    return FluidTrajectory(times=np.array(times), demand=states[:, :net.J], supply=states[:, net.J:])
