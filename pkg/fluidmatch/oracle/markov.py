"""
Exact stationary analysis of a single demand node and a single supply node with exponential
patience and immediate matching. X > 0 counts waiting demand, X < 0 waiting supply; X is a
birth-death chain with

    up(x)   = n lambda + max(-x, 0) theta
    down(x) = n mu     + max(x, 0)  theta
"""
import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np
from scipy import special

from fluidmatch.application.exceptions import DomainException, TruncationException
from fluidmatch.application.logging_factory import Logger
from fluidmatch.model.distributions import Exponential
from fluidmatch.model.fluid import invariant_state
from fluidmatch.model.network import Network

TAIL_TOLERANCE = 1e-12
MAX_TRUNCATION = 1 << 22


@dataclass(frozen=True)
class BirthDeathSpec:
    lam: float
    mu: float
    theta: float
    truncation: Optional[int] = None

    def __post_init__(self):
        for name in ('lam', 'mu', 'theta'):
            value = getattr(self, name)
            if not value > 0 or not math.isfinite(value):
                raise DomainException('%s must be positive, found %s' % (name, value))
        if self.truncation is not None and self.truncation < 1:
            raise DomainException('truncation must be a positive integer, found %s' % self.truncation)

    def initial_truncation(self, n: int) -> int:
        return int(math.ceil(10 * n * max(self.lam, self.mu) / self.theta))


class StationaryDistribution(NamedTuple):
    states: np.ndarray
    probabilities: np.ndarray
    tail_mass: float

    @property
    def truncation(self) -> int:
        return int(self.states[-1])

    def at(self, x: int) -> float:
        return float(self.probabilities[x + self.truncation])


def _log_weights(spec: BirthDeathSpec, n: int, N: int) -> np.ndarray:
    """
    log pi(x) - log pi(0) for x = -N..N, cumulative sums in log space.
    """
    steps = np.arange(1, N + 1)
    positive = np.cumsum(np.log(n * spec.lam) - np.log(n * spec.mu + steps * spec.theta))
    negative = np.cumsum(np.log(n * spec.mu) - np.log(n * spec.lam + steps * spec.theta))
    return np.concatenate([negative[::-1], [0.0], positive])


def _tail_bound(spec: BirthDeathSpec, n: int, N: int, log_pi: np.ndarray) -> float:
    # beyond +-N the ratio of consecutive masses is below r, so the tail is at most pi(N) r / (1 - r)
    r_up = n * spec.lam / (n * spec.mu + (N + 1) * spec.theta)
    r_down = n * spec.mu / (n * spec.lam + (N + 1) * spec.theta)
    if r_up >= 1 or r_down >= 1:
        return math.inf
    return float(np.exp(log_pi[-1]) * r_up / (1 - r_up) + np.exp(log_pi[0]) * r_down / (1 - r_down))


def _truncated(spec: BirthDeathSpec, n: int, N: int) -> StationaryDistribution:
    log_w = _log_weights(spec, n, N)
    log_pi = log_w - special.logsumexp(log_w)
    return StationaryDistribution(
        states=np.arange(-N, N + 1),
        probabilities=np.exp(log_pi),
        tail_mass=_tail_bound(spec, n, N, log_pi)
    )


def stationary_distribution(spec: BirthDeathSpec, n: int = 1) -> StationaryDistribution:
    if n < 1:
        raise DomainException('scaling n must be positive, found %s' % n)
    if spec.truncation is not None:
        dist = _truncated(spec, n, spec.truncation)
        if dist.tail_mass >= TAIL_TOLERANCE:
            raise TruncationException('tail mass %.3g beyond +-%s exceeds %s' % (
                dist.tail_mass, spec.truncation, TAIL_TOLERANCE))
        return dist
    N = spec.initial_truncation(n)
    while N <= MAX_TRUNCATION:
        dist = _truncated(spec, n, N)
        if dist.tail_mass < TAIL_TOLERANCE:
            Logger.oracle.debug('stationary distribution truncated at +-%s, tail %.3g', N, dist.tail_mass)
            return dist
        N *= 2
    raise TruncationException('no truncation up to %s reaches tail mass %s' % (MAX_TRUNCATION, TAIL_TOLERANCE))


def mean_queues(spec: BirthDeathSpec, n: int = 1):
    """
    (E[Q]/n, E[I]/n) with Q = X+ and I = X-.
    """
    dist = stationary_distribution(spec, n)
    demand = float(np.sum(np.clip(dist.states, 0, None) * dist.probabilities))
    supply = float(np.sum(np.clip(-dist.states, 0, None) * dist.probabilities))
    return demand / n, supply / n


def generator_matrix(spec: BirthDeathSpec, n: int, N: int) -> np.ndarray:
    states = np.arange(-N, N + 1)
    size = states.size
    Q = np.zeros((size, size))
    for i, x in enumerate(states):
        up = n * spec.lam + max(-x, 0) * spec.theta
        down = n * spec.mu + max(x, 0) * spec.theta
        if i + 1 < size:
            Q[i, i + 1] = up
        if i > 0:
            Q[i, i - 1] = down
        Q[i, i] = -Q[i].sum()
    return Q


def solve_balance_equations(spec: BirthDeathSpec, n: int, N: int) -> np.ndarray:
    """
    Dense solve of pi Q = 0, sum pi = 1 on the truncated chain.
    """
    A = generator_matrix(spec, n, N).T.copy()
    A[-1, :] = 1.0
    b = np.zeros(A.shape[0])
    b[-1] = 1.0
    return np.linalg.solve(A, b)


def balance_residual(spec: BirthDeathSpec, n: int, dist: StationaryDistribution) -> float:
    """
    Largest global-balance residual over the interior states.
    """
    residual = dist.probabilities @ generator_matrix(spec, n, dist.truncation)
    return float(np.max(np.abs(residual[1:-1])))


def detailed_balance_residual(spec: BirthDeathSpec, n: int, dist: StationaryDistribution) -> float:
    x = dist.states[:-1]
    up = n * spec.lam + np.clip(-x, 0, None) * spec.theta
    down = n * spec.mu + np.clip(x + 1, 0, None) * spec.theta
    return float(np.max(np.abs(dist.probabilities[:-1] * up - dist.probabilities[1:] * down)))


def normalizing_constant_closed_form(spec: BirthDeathSpec, n: int = 1) -> float:
    """
    pi(0) from confluent hypergeometric series:
    1/pi(0) = 1F1(1; 1 + n mu/theta; n lam/theta) + 1F1(1; 1 + n lam/theta; n mu/theta) - 1.
    """
    a, b = n * spec.lam / spec.theta, n * spec.mu / spec.theta
    return 1.0 / (special.hyp1f1(1.0, 1.0 + b, a) + special.hyp1f1(1.0, 1.0 + a, b) - 1.0)


def invariant_queues(spec: BirthDeathSpec):
    """
    Fluid invariant (q*, i*) of the single edge matched at rate min(lambda, mu).
    """
    net = Network.uniform_patience([spec.lam], [spec.mu], [[1.0]], Exponential(spec.theta))
    state = invariant_state(net, [[min(spec.lam, spec.mu)]])
    return float(state.q_star[0]), float(state.i_star[0])


def convergence_rows(spec: BirthDeathSpec, ns: List[int]) -> List[dict]:
    q_star, i_star = invariant_queues(spec)
    rows = []
    for n in ns:
        demand, supply = mean_queues(spec, n)
        rows.append({
            'n': n,
            'EQ_over_n': demand,
            'EI_over_n': supply,
            'q_star': q_star,
            'i_star': i_star,
            'gap': max(abs(demand - q_star), abs(supply - i_star)),
        })
    return rows
