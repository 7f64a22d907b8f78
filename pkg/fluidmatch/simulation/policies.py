import enum

import numpy as np

from fluidmatch.application.abstracts import MatchingPolicy
from fluidmatch.model.network import MatchingRates, Network
from fluidmatch.optimization.priority import PrioritySets
from fluidmatch.optimization.transport import TransportInstance, solve_transport


class PolicyKind(enum.Enum):
    MATCHING_RATE = 'matching-rate'
    PRIORITY = 'priority'
    LP = 'lp'


def _integral(q) -> np.ndarray:
    return np.asarray(q, dtype=np.int64)


def _within(counts: np.ndarray, q: np.ndarray, i: np.ndarray) -> np.ndarray:
    # floor of a rounded product can overshoot by one unit on a knife edge
    for j in np.nonzero(counts.sum(axis=1) > q)[0]:
        for k in range(counts.shape[1]):
            excess = counts[j].sum() - q[j]
            if excess <= 0:
                break
            counts[j, k] -= min(excess, counts[j, k])
    for k in np.nonzero(counts.sum(axis=0) > i)[0]:
        for j in range(counts.shape[0]):
            excess = counts[:, k].sum() - i[k]
            if excess <= 0:
                break
            counts[j, k] -= min(excess, counts[j, k])
    return counts


class MatchingRatePolicy(MatchingPolicy):
    """
    Matches floor(n m_jk min(l_n, Q_j/(n lambda_j), I_k/(n mu_k))) on every edge.
    """
    name = PolicyKind.MATCHING_RATE.value

    def __init__(self, net: Network, rates: MatchingRates, n: int, review_length: float):
        self.m = rates.ensure_feasible(net).m
        self.scaled_lam = n * net.lam
        self.scaled_mu = n * net.mu
        self.n = n
        self.review_length = review_length

    def decide(self, queue_demand, queue_supply):
        q = _integral(queue_demand)
        i = _integral(queue_supply)
        horizon = np.minimum(
            np.minimum(self.review_length, q / self.scaled_lam)[:, None],
            (i / self.scaled_mu)[None, :]
        )
        return _within(np.floor(self.n * self.m * horizon).astype(np.int64), q, i)


class PriorityPolicy(MatchingPolicy):
    """
    Greedy matching through the priority sets in order, the zero-rate set included.
    """
    name = PolicyKind.PRIORITY.value

    def __init__(self, net: Network, sets: PrioritySets):
        self.shape = (net.J, net.K)
        self.order = [edge for edges in sets.validate(net).sets for edge in edges]

    def decide(self, queue_demand, queue_supply):
        q = _integral(queue_demand).copy()
        i = _integral(queue_supply).copy()
        counts = np.zeros(self.shape, dtype=np.int64)
        for j, k in self.order:
            amount = min(q[j], i[k])
            if amount > 0:
                counts[j, k] = amount
                q[j] -= amount
                i[k] -= amount
        return counts


class LpPolicy(MatchingPolicy):
    """
    Solves the value-maximizing transportation problem on the snapshot, integral by construction.
    """
    name = PolicyKind.LP.value

    def __init__(self, net: Network):
        self.values = net.values

    def decide(self, queue_demand, queue_supply):
        q = _integral(queue_demand)
        i = _integral(queue_supply)
        if not q.any() or not i.any():
            return np.zeros(self.values.shape, dtype=np.int64)
        allocation = solve_transport(TransportInstance(self.values, q, i)).allocation
        return np.rint(allocation).astype(np.int64)


def policy_matching_rate_based(queue_demand, queue_supply, net: Network, rates, n: int, review_length: float):
    return MatchingRatePolicy(net, rates, n, review_length).decide(queue_demand, queue_supply)


def policy_priority_ordering(queue_demand, queue_supply, net: Network, sets: PrioritySets):
    return PriorityPolicy(net, sets).decide(queue_demand, queue_supply)


def policy_lp_based(queue_demand, queue_supply, net: Network):
    return LpPolicy(net).decide(queue_demand, queue_supply)
