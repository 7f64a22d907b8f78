"""
Priority sets built from an optimal extreme point, and the greedy recursion that replays them.
"""
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from fluidmatch import settings
from fluidmatch.application.exceptions import StructureException
from fluidmatch.application.logging_factory import Logger
from fluidmatch.model.network import Edge, MatchingRates, Network
from fluidmatch.optimization.vertices import ExtremePoint, find_cycle


def _format_set(edges) -> str:
    return ' '.join('(%s,%s)' % (j + 1, k + 1) for j, k in edges)


@dataclass(frozen=True)
class PrioritySets:
    """
    Ordered partition P_0, ..., P_H, P_{H+1} of the edges. The last set holds the edges with zero
    rate and is always present, possibly empty.
    """
    sets: Tuple[Tuple[Edge, ...], ...]

    def __post_init__(self):
        sets = tuple(tuple((int(j), int(k)) for j, k in s) for s in self.sets)
        if not sets:
            raise StructureException('priority sets need at least the zero-rate set')
        object.__setattr__(self, 'sets', sets)

    @property
    def H(self) -> int:
        return len(self.sets) - 2

    @property
    def ranked(self) -> Tuple[Tuple[Edge, ...], ...]:
        return self.sets[:-1]

    @property
    def zero_set(self) -> Tuple[Edge, ...]:
        return self.sets[-1]

    @property
    def first(self) -> Tuple[Edge, ...]:
        return self.sets[0]

    def validate(self, net: Network) -> 'PrioritySets':
        seen = set()
        for h, edges in enumerate(self.sets):
            for j, k in edges:
                if not (0 <= j < net.J and 0 <= k < net.K):
                    raise StructureException('edge (%s,%s) is outside the %sx%s instance' % (j + 1, k + 1, net.J, net.K))
                if (j, k) in seen:
                    raise StructureException('edge (%s,%s) appears in more than one priority set' % (j + 1, k + 1))
                seen.add((j, k))
            if h < len(self.sets) - 1:
                rows = [j for j, _ in edges]
                cols = [k for _, k in edges]
                if len(set(rows)) != len(rows) or len(set(cols)) != len(cols):
                    raise StructureException('priority set P%s has edges sharing a node: %s' % (h, _format_set(edges)))
        if len(seen) != net.J * net.K:
            raise StructureException('priority sets cover %s of %s edges' % (len(seen), net.J * net.K))
        return self

    def to_record(self) -> List[List[List[int]]]:
        return [[[j, k] for j, k in edges] for edges in self.sets]

    @classmethod
    def from_record(cls, record: Sequence[Sequence[Sequence[int]]]) -> 'PrioritySets':
        return cls(sets=tuple(tuple((e[0], e[1]) for e in edges) for edges in record))

    def __str__(self):
        return '\n'.join('P%s: %s' % (h, _format_set(edges)) for h, edges in enumerate(self.sets))


def _rates(m) -> MatchingRates:
    if isinstance(m, ExtremePoint):
        return m.m
    return m if isinstance(m, MatchingRates) else MatchingRates(m)


def build_priority_sets(net: Network, m_star, tol=settings.FEASIBILITY_TOLERANCE) -> PrioritySets:
    """
    Peels tight edges off the support forest of ``m_star``: an edge joins the current set when
    its rate exhausts the residual capacity of one endpoint, and its neighbours wait for a
    later set. Candidate edges are inspected in lexicographic order.
    """
    rates = _rates(m_star).ensure_feasible(net)
    m = rates.m
    support = rates.support(tol)
    cycle = find_cycle(net, support)
    if cycle:
        raise StructureException(
            'matching rates are not an extreme point, support cycle: %s' % _format_set(cycle), cycle=cycle
        )
    d = net.lam.astype(float).copy()
    s = net.mu.astype(float).copy()
    remaining = sorted(support)
    sets = []
    while remaining:
        current = []
        candidates = list(remaining)
        while candidates:
            j, k = candidates.pop(0)
            if abs(m[j, k] - d[j]) <= tol or abs(m[j, k] - s[k]) <= tol:
                current.append((j, k))
                d[j] -= m[j, k]
                s[k] -= m[j, k]
                candidates = [(a, b) for a, b in candidates if a != j and b != k]
        if not current:
            raise StructureException('no tight edge left among %s' % _format_set(remaining))
        sets.append(tuple(current))
        remaining = [e for e in remaining if e not in current]
    sets.append(tuple((j, k) for j, k in net.edges if (j, k) not in set(support)))
    result = PrioritySets(sets=tuple(sets))
    Logger.priority.debug('priority sets built, H=%s\n%s', result.H, result)
    return result


def greedy_yp(net: Network, m_star, sets: PrioritySets, include_zero_set=False) -> MatchingRates:
    """
    Replays the priority order on the rates themselves: each edge takes the residual
    min(lambda_j - earlier row use, mu_k - earlier column use) left by the previous sets.
    The zero-rate set keeps zero unless ``include_zero_set`` extends the recursion to it.
    """
    sets.validate(net)
    y = np.zeros((net.J, net.K))
    row_used = np.zeros(net.J)
    col_used = np.zeros(net.K)
    stages = sets.sets if include_zero_set else sets.ranked
    for edges in stages:
        amounts = {
            (j, k): max(min(net.lam[j] - row_used[j], net.mu[k] - col_used[k]), 0.0) for j, k in edges
        }
        for (j, k), amount in amounts.items():
            y[j, k] = amount
            row_used[j] += amount
            col_used[k] += amount
    return MatchingRates(y)


def replicates(net: Network, m_star, sets: PrioritySets, tol=1e-12) -> bool:
    return bool(np.max(np.abs(greedy_yp(net, m_star, sets).m - _rates(m_star).m), initial=0.0) <= tol)


def sets_summary(sets: PrioritySets) -> Dict[str, str]:
    return {'P%s' % h: _format_set(edges) for h, edges in enumerate(sets.sets)}
