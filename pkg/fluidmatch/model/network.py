from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np

from fluidmatch import settings
from fluidmatch.application.exceptions import ConfigurationException, FeasibilityException
from fluidmatch.model.distributions import (
    HazardClass, PatienceDistribution, distribution_from_record
)

Edge = Tuple[int, int]


def _vector(name, values, size=None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise ConfigurationException('%s must be a vector, found shape %s' % (name, arr.shape))
    if size is not None and arr.shape[0] != size:
        raise ConfigurationException('%s must have length %s, found %s' % (name, size, arr.shape[0]))
    if not np.all(np.isfinite(arr)):
        raise ConfigurationException('%s must be finite' % name)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Network:
    """
    Bipartite instance: demand nodes j < J, supply nodes k < K.
    """
    lam: np.ndarray
    mu: np.ndarray
    values: np.ndarray
    cost_demand: np.ndarray
    cost_supply: np.ndarray
    demand_patience: Tuple[PatienceDistribution, ...]
    supply_patience: Tuple[PatienceDistribution, ...]

    def __post_init__(self):
        lam = _vector('lambda', self.lam)
        mu = _vector('mu', self.mu)
        if lam.size == 0 or mu.size == 0:
            raise ConfigurationException('an instance needs at least one demand and one supply node')
        if np.any(lam <= 0) or np.any(mu <= 0):
            raise ConfigurationException('arrival rates must be strictly positive')
        values = np.array(self.values, dtype=float)
        if values.shape != (lam.size, mu.size):
            raise ConfigurationException('values must be a %sx%s matrix, found %s' % (lam.size, mu.size, values.shape))
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ConfigurationException('match values must be finite and nonnegative')
        values.setflags(write=False)
        cost_demand = _vector('cD', self.cost_demand, lam.size)
        cost_supply = _vector('cS', self.cost_supply, mu.size)
        if np.any(cost_demand < 0) or np.any(cost_supply < 0):
            raise ConfigurationException('holding costs must be nonnegative')
        demand_patience = tuple(self.demand_patience)
        supply_patience = tuple(self.supply_patience)
        if len(demand_patience) != lam.size or len(supply_patience) != mu.size:
            raise ConfigurationException('one patience distribution per node is required')
        for name, value in (
            ('lam', lam), ('mu', mu), ('values', values), ('cost_demand', cost_demand),
            ('cost_supply', cost_supply), ('demand_patience', demand_patience),
            ('supply_patience', supply_patience)
        ):
            object.__setattr__(self, name, value)

    @classmethod
    def uniform_patience(cls, lam, mu, values, patience: PatienceDistribution, cost_demand=None, cost_supply=None):
        lam, mu = list(lam), list(mu)
        return cls(
            lam=lam,
            mu=mu,
            values=values,
            cost_demand=cost_demand if cost_demand is not None else [0.0] * len(lam),
            cost_supply=cost_supply if cost_supply is not None else [0.0] * len(mu),
            demand_patience=[patience] * len(lam),
            supply_patience=[patience] * len(mu)
        )

    @property
    def J(self) -> int:
        return self.lam.size

    @property
    def K(self) -> int:
        return self.mu.size

    @property
    def edges(self) -> List[Edge]:
        return [(j, k) for j in range(self.J) for k in range(self.K)]

    @property
    def theta_demand(self) -> np.ndarray:
        return np.array([d.theta for d in self.demand_patience])

    @property
    def theta_supply(self) -> np.ndarray:
        return np.array([d.theta for d in self.supply_patience])

    @property
    def patience(self) -> Tuple[PatienceDistribution, ...]:
        return self.demand_patience + self.supply_patience

    @property
    def hazard_classes(self) -> List[HazardClass]:
        return [d.hazard_class for d in self.patience]

    @property
    def has_costs(self) -> bool:
        return bool(np.any(self.cost_demand > 0) or np.any(self.cost_supply > 0))

    @property
    def empty_queues(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Invariant queues when nothing is matched: lambda/theta and mu/theta.
        """
        return self.lam / self.theta_demand, self.mu / self.theta_supply

    def without_costs(self) -> 'Network':
        return replace(self, cost_demand=np.zeros(self.J), cost_supply=np.zeros(self.K))

    def with_patience(self, demand: Sequence[PatienceDistribution], supply: Sequence[PatienceDistribution]):
        return replace(self, demand_patience=tuple(demand), supply_patience=tuple(supply))

    def to_record(self) -> Dict:
        return {
            'lambda': self.lam.tolist(),
            'mu': self.mu.tolist(),
            'values': self.values.tolist(),
            'cD': self.cost_demand.tolist(),
            'cS': self.cost_supply.tolist(),
            'demand_patience': [d.to_record() for d in self.demand_patience],
            'supply_patience': [d.to_record() for d in self.supply_patience],
        }

    @classmethod
    def from_record(cls, record: Dict) -> 'Network':
        lam, mu = record['lambda'], record['mu']
        demand = record.get('demand_patience')
        supply = record.get('supply_patience')
        shared = record.get('patience')
        if shared is not None:
            demand = demand or [shared] * len(lam)
            supply = supply or [shared] * len(mu)
        if demand is None or supply is None:
            raise ConfigurationException('patience distributions missing for the instance')
        return cls(
            lam=lam,
            mu=mu,
            values=record['values'],
            cost_demand=record.get('cD') or [0.0] * len(lam),
            cost_supply=record.get('cS') or [0.0] * len(mu),
            demand_patience=[distribution_from_record(d) for d in demand],
            supply_patience=[distribution_from_record(d) for d in supply]
        )


@dataclass(frozen=True, eq=False)
class MatchingRates:
    """
    A J x K matrix of nonnegative matching rates, the decision variable of the matching problem.
    """
    m: np.ndarray = field()

    def __post_init__(self):
        m = np.array(self.m, dtype=float)
        if m.ndim != 2:
            raise FeasibilityException('matching rates must be a matrix, found shape %s' % (m.shape,))
        m.setflags(write=False)
        object.__setattr__(self, 'm', m)

    @classmethod
    def zeros(cls, net: Network) -> 'MatchingRates':
        return cls(np.zeros((net.J, net.K)))

    @property
    def row_sums(self) -> np.ndarray:
        return self.m.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.m.sum(axis=0)

    @property
    def total(self) -> float:
        return float(self.m.sum())

    def support(self, tol=settings.FEASIBILITY_TOLERANCE) -> List[Edge]:
        rows, cols = np.nonzero(self.m > tol)
        return list(zip(rows.tolist(), cols.tolist()))

    def violation(self, net: Network) -> float:
        if self.m.shape != (net.J, net.K):
            return np.inf
        return float(max(
            np.max(-self.m, initial=0.0),
            np.max(self.row_sums - net.lam, initial=0.0),
            np.max(self.col_sums - net.mu, initial=0.0)
        ))

    def is_feasible(self, net: Network, tol=settings.FEASIBILITY_TOLERANCE) -> bool:
        return self.violation(net) <= tol

    def ensure_feasible(self, net: Network, tol=settings.FEASIBILITY_TOLERANCE) -> 'MatchingRates':
        if self.m.shape != (net.J, net.K):
            raise FeasibilityException('matching rates shape %s does not fit a %sx%s instance' % (
                self.m.shape, net.J, net.K))
        violation = self.violation(net)
        if violation > tol:
            raise FeasibilityException('matching rates leave the polytope by %.3g' % violation)
        return self

    def __getitem__(self, item):
        return self.m[item]

    def __repr__(self):
        return 'MatchingRates(%s)' % np.array2string(self.m, precision=6, separator=', ')
