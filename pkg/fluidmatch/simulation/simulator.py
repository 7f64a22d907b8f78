"""
Discrete-review simulation of the two-sided matching system in the high-volume scaling:
arrival rates n*lambda and n*mu, review period l_n = l * n^(-delta), empty start.
"""
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np

from fluidmatch.application.abstracts import MatchingPolicy
from fluidmatch.application.exceptions import ConfigurationException, FeasibilityException
from fluidmatch.application.logging_factory import Logger
from fluidmatch.model.network import MatchingRates, Network
from fluidmatch.optimization.priority import PrioritySets
from fluidmatch.simulation.engine import (
    ArrivalKind, BatchedSampler, Entry, EventKind, EventQueue, NodeQueue, interarrival_sampler
)
from fluidmatch.simulation.policies import LpPolicy, MatchingRatePolicy, PolicyKind, PriorityPolicy

DEFAULT_REVIEW_EXPONENT = 2.0 / 3.0


@dataclass(frozen=True, eq=False)
class SimConfig:
    net: Network
    n: int
    review_base: float
    horizon: float
    policy: PolicyKind
    review_exponent: float = DEFAULT_REVIEW_EXPONENT
    rates: Optional[MatchingRates] = None
    sets: Optional[PrioritySets] = None
    arrival_kind: ArrivalKind = ArrivalKind.POISSON
    erlang_k: int = 2
    seed: int = 0
    record_trajectory: bool = False
    track_rates: Optional[MatchingRates] = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ConfigurationException('scaling n must be a positive integer, found %s' % self.n)
        if not self.review_base > 0:
            raise ConfigurationException('review length must be positive, found %s' % self.review_base)
        if not self.horizon > 0:
            raise ConfigurationException('horizon must be positive, found %s' % self.horizon)
        if not 0 <= self.review_exponent < 1:
            raise ConfigurationException('review exponent must lie in [0, 1), found %s' % self.review_exponent)
        if self.review_exponent != 0 and not 0.5 < self.review_exponent < 1:
            Logger.simulator.warning(
                'review exponent %s is outside (1/2, 1), asymptotic optimality is not guaranteed',
                self.review_exponent
            )
        if not self.review_length < self.horizon:
            raise ConfigurationException('review length %s must be shorter than the horizon %s' % (
                self.review_length, self.horizon))
        if self.arrival_kind is ArrivalKind.ERLANG and self.erlang_k < 1:
            raise ConfigurationException('erlang arrivals need k >= 1')
        if self.policy is PolicyKind.MATCHING_RATE and self.rates is None:
            raise ConfigurationException('the matching-rate policy needs matching rates')
        if self.policy is PolicyKind.PRIORITY and self.sets is None:
            raise ConfigurationException('the priority policy needs priority sets')
        if self.rates is not None and not self.rates.is_feasible(self.net):
            raise ConfigurationException('matching rates are infeasible for the instance')
        if self.sets is not None:
            try:
                self.sets.validate(self.net)
            except Exception as e:
                raise ConfigurationException('invalid priority sets: %s' % e) from e

    @property
    def review_length(self) -> float:
        return self.review_base * self.n ** (-self.review_exponent)

    @property
    def reviews(self) -> int:
        return int(math.floor(self.horizon / self.review_length + 1e-9))

    def make_policy(self) -> MatchingPolicy:
        if self.policy is PolicyKind.MATCHING_RATE:
            return MatchingRatePolicy(self.net, self.rates, self.n, self.review_length)
        if self.policy is PolicyKind.PRIORITY:
            return PriorityPolicy(self.net, self.sets)
        return LpPolicy(self.net)


@dataclass(eq=False)
class SimResult:
    matches: np.ndarray
    reneged_demand: np.ndarray
    reneged_supply: np.ndarray
    arrivals_demand: np.ndarray
    arrivals_supply: np.ndarray
    residents_demand: np.ndarray
    residents_supply: np.ndarray
    queue_integral_demand: np.ndarray
    queue_integral_supply: np.ndarray
    objective: float
    reviews: int
    horizon: float
    n: int
    seed: int
    policy: str
    rate_gap: Optional[float] = None
    trajectory: Optional[List[List[float]]] = None

    @property
    def demand_reneging_fraction(self) -> float:
        return float(self.reneged_demand.sum() / max(self.arrivals_demand.sum(), 1))

    @property
    def supply_reneging_fraction(self) -> float:
        return float(self.reneged_supply.sum() / max(self.arrivals_supply.sum(), 1))

    @property
    def average_queue_demand(self) -> np.ndarray:
        return self.queue_integral_demand / (self.n * self.horizon)

    @property
    def average_queue_supply(self) -> np.ndarray:
        return self.queue_integral_supply / (self.n * self.horizon)

    def ratio(self, bound: float) -> float:
        return self.objective / (self.n * self.horizon * bound)

    def flow_balanced(self) -> bool:
        demand = self.arrivals_demand == self.residents_demand + self.reneged_demand + self.matches.sum(axis=1)
        supply = self.arrivals_supply == self.residents_supply + self.reneged_supply + self.matches.sum(axis=0)
        return bool(demand.all() and supply.all())

    def to_row(self) -> Dict:
        row = {
            'seed': self.seed,
            'n': self.n,
            'policy': self.policy,
            'horizon': self.horizon,
            'reviews': self.reviews,
            'objective': self.objective,
            'matches_total': int(self.matches.sum()),
            'arrivals_demand': int(self.arrivals_demand.sum()),
            'arrivals_supply': int(self.arrivals_supply.sum()),
            'reneged_demand': int(self.reneged_demand.sum()),
            'reneged_supply': int(self.reneged_supply.sum()),
            'reneging_fraction_demand': self.demand_reneging_fraction,
            'reneging_fraction_supply': self.supply_reneging_fraction,
            'queue_integral_demand': float(self.queue_integral_demand.sum()),
            'queue_integral_supply': float(self.queue_integral_supply.sum()),
            'rate_gap': self.rate_gap,
        }
        for (j, k), value in np.ndenumerate(self.matches):
            row['M_%s_%s' % (j + 1, k + 1)] = int(value)
        return row


class _Run:
    """
    Mutable state of a single replication. Nodes are numbered demand first, then supply.
    """
    def __init__(self, cfg: SimConfig):
        net = cfg.net
        self.cfg = cfg
        self.J, self.K = net.J, net.K
        size = net.J + net.K
        streams = np.random.SeedSequence(cfg.seed).spawn(2 * size)
        rates = np.concatenate([cfg.n * net.lam, cfg.n * net.mu])
        patience = net.patience
        self.interarrival = [
            interarrival_sampler(np.random.default_rng(streams[i]), rates[i], cfg.arrival_kind, cfg.erlang_k)
            for i in range(size)
        ]
        self.patience = [self._patience_sampler(np.random.default_rng(streams[size + i]), patience[i])
                         for i in range(size)]
        self.queues = [NodeQueue() for _ in range(size)]
        self.arrivals = np.zeros(size, dtype=np.int64)
        self.reneged = np.zeros(size, dtype=np.int64)
        self.waited = np.zeros(size)
        self.matches = np.zeros((net.J, net.K), dtype=np.int64)
        self.events = EventQueue()
        self.policy = cfg.make_policy()
        self.trajectory = [] if cfg.record_trajectory else None
        self.rate_gap = 0.0 if cfg.track_rates is not None else None

    @staticmethod
    def _patience_sampler(rng, distribution):
        return BatchedSampler(rng, lambda r, size: distribution.sample(r, size))

    def lengths(self) -> np.ndarray:
        return np.array([q.length for q in self.queues], dtype=np.int64)

    def start(self):
        for node in range(self.J + self.K):
            self._schedule_arrival(node, 0.0)
        self.events.push(self.cfg.review_length, EventKind.REVIEW, payload=1)

    def _schedule_arrival(self, node: int, now: float):
        at = now + self.interarrival[node]()
        if at <= self.cfg.horizon:
            self.events.push(at, EventKind.ARRIVAL, node)

    def on_arrival(self, now: float, node: int):
        entry = Entry(now, now + self.patience[node]())
        self.queues[node].append(entry)
        self.arrivals[node] += 1
        if entry.deadline <= self.cfg.horizon:
            self.events.push(entry.deadline, EventKind.DEADLINE, node, entry)
        self._schedule_arrival(node, now)

    def on_deadline(self, now: float, node: int, entry: Entry):
        if self.queues[node].renege(entry):
            self.reneged[node] += 1
            self.waited[node] += now - entry.arrival

    def on_review(self, now: float, index: int):
        lengths = self.lengths()
        q, i = lengths[:self.J], lengths[self.J:]
        counts = self.policy.decide(q, i)
        rows, cols = counts.sum(axis=1), counts.sum(axis=0)
        if np.any(counts < 0) or np.any(rows > q) or np.any(cols > i):
            raise FeasibilityException('policy %s is not admissible at t=%s' % (self.policy.name, now))
        for j in range(self.J):
            if rows[j]:
                self.waited[j] += self.queues[j].serve(int(rows[j]), now)
        for k in range(self.K):
            if cols[k]:
                self.waited[self.J + k] += self.queues[self.J + k].serve(int(cols[k]), now)
        self.matches += counts
        if self.trajectory is not None:
            self.trajectory.append([now] + self.lengths().tolist())
        if self.rate_gap is not None:
            expected = self.cfg.n * self.cfg.track_rates.m * now
            gap = float(np.max(np.abs(self.matches - expected))) / self.cfg.n
            self.rate_gap = max(self.rate_gap, gap)
        if index < self.cfg.reviews:
            self.events.push((index + 1) * self.cfg.review_length, EventKind.REVIEW, payload=index + 1)

    def loop(self):
        self.start()
        while self.events:
            now, kind, node, payload = self.events.pop()
            if kind is EventKind.ARRIVAL:
                self.on_arrival(now, node)
            elif kind is EventKind.DEADLINE:
                self.on_deadline(now, node, payload)
            else:
                self.on_review(now, payload)
        horizon = self.cfg.horizon
        for node, queue in enumerate(self.queues):
            self.waited[node] += sum(horizon - e.arrival for e in queue.residents())

    def result(self) -> SimResult:
        net = self.cfg.net
        lengths = self.lengths()
        integral_demand, integral_supply = self.waited[:self.J], self.waited[self.J:]
        objective = float(
            np.sum(net.values * self.matches)
            - np.dot(net.cost_demand, integral_demand)
            - np.dot(net.cost_supply, integral_supply)
        )
        return SimResult(
            matches=self.matches,
            reneged_demand=self.reneged[:self.J].copy(),
            reneged_supply=self.reneged[self.J:].copy(),
            arrivals_demand=self.arrivals[:self.J].copy(),
            arrivals_supply=self.arrivals[self.J:].copy(),
            residents_demand=lengths[:self.J],
            residents_supply=lengths[self.J:],
            queue_integral_demand=integral_demand.copy(),
            queue_integral_supply=integral_supply.copy(),
            objective=objective,
            reviews=self.cfg.reviews,
            horizon=self.cfg.horizon,
            n=self.cfg.n,
            seed=self.cfg.seed,
            policy=self.cfg.policy.value,
            rate_gap=self.rate_gap,
            trajectory=self.trajectory
        )


def run(cfg: SimConfig) -> SimResult:
    state = _Run(cfg)
    state.loop()
    result = state.result()
    Logger.simulator.info(
        'run finished: n=%s, policy=%s, seed=%s, objective=%.6g, matches=%s',
        cfg.n, cfg.policy.value, cfg.seed, result.objective, int(result.matches.sum())
    )
    return result


@dataclass(eq=False)
class ReplicationSummary:
    runs: List[SimResult] = field(default_factory=list)

    fields = (
        'objective', 'matches', 'reneged_demand', 'reneged_supply', 'arrivals_demand', 'arrivals_supply',
        'queue_integral_demand', 'queue_integral_supply', 'demand_reneging_fraction',
        'supply_reneging_fraction', 'average_queue_demand', 'average_queue_supply',
    )

    def _stack(self, name: str) -> np.ndarray:
        return np.array([np.asarray(getattr(r, name), dtype=float) for r in self.runs])

    def mean(self, name: str):
        return np.mean(self._stack(name), axis=0)

    def stderr(self, name: str):
        values = self._stack(name)
        if len(self.runs) < 2:
            return np.zeros_like(values[0])
        return np.std(values, axis=0, ddof=1) / np.sqrt(len(self.runs))

    def as_dict(self) -> Dict[str, Dict]:
        return {name: {'mean': self.mean(name), 'stderr': self.stderr(name)} for name in self.fields}


def replicate(cfg: SimConfig, replications: int) -> ReplicationSummary:
    if replications < 1:
        raise ConfigurationException('at least one replication is required, found %s' % replications)
    return ReplicationSummary(runs=[run(replace(cfg, seed=cfg.seed + r)) for r in range(replications)])
