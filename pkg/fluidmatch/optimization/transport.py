"""
Capacitated max-value transportation problems:

    max sum_jk w_jk y_jk   s.t.  sum_k y_jk <= row_caps_j,  sum_j y_jk <= col_caps_k,  y >= 0

solved by successive maximum-profit augmenting paths on the flow network
source -> demand -> supply -> sink. Every augmentation moves min(residual) units, so integral
caps give integral allocations.
"""
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from fluidmatch.application.exceptions import DomainException
from fluidmatch.application.logging_factory import Logger

PROFIT_TOLERANCE = 1e-12
CAPACITY_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class TransportInstance:
    weights: np.ndarray
    row_caps: np.ndarray
    col_caps: np.ndarray

    def __post_init__(self):
        weights = np.array(self.weights, dtype=float)
        row_caps = np.array(self.row_caps, dtype=float).reshape(-1)
        col_caps = np.array(self.col_caps, dtype=float).reshape(-1)
        if weights.shape != (row_caps.size, col_caps.size):
            raise DomainException('weights shape %s does not fit %s rows and %s columns' % (
                weights.shape, row_caps.size, col_caps.size))
        for name, arr in (('weights', weights), ('row caps', row_caps), ('column caps', col_caps)):
            if not np.all(np.isfinite(arr)):
                raise DomainException('%s must be finite' % name)
            if np.any(arr < 0):
                raise DomainException('%s must be nonnegative' % name)
        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'row_caps', row_caps)
        object.__setattr__(self, 'col_caps', col_caps)

    @property
    def integral(self) -> bool:
        return bool(
            np.all(self.row_caps == np.floor(self.row_caps)) and np.all(self.col_caps == np.floor(self.col_caps))
        )


class TransportSolution(NamedTuple):
    allocation: np.ndarray
    value: float


def _longest_paths(weights, flow, row_open):
    """
    Bellman-Ford for maximum-profit paths from the source on the residual graph.
    Demand node j is a root when its source arc has residual capacity, forward arcs j -> k carry
    +w_jk with unbounded capacity, backward arcs k -> j carry -w_jk where flow is positive.
    Ties keep the first (lowest index) predecessor.
    """
    J, K = weights.shape
    dist_row = np.where(row_open, 0.0, -np.inf)
    dist_col = np.full(K, -np.inf)
    pred_row = np.full(J, -1)
    pred_col = np.full(K, -1)
    backward = flow > CAPACITY_TOLERANCE
    for _ in range(J + K + 1):
        changed = False
        reach_col = dist_row[:, None] + weights
        best_j = np.argmax(reach_col, axis=0)
        best_col = reach_col[best_j, np.arange(K)]
        improve = best_col > dist_col + PROFIT_TOLERANCE
        if np.any(improve):
            dist_col = np.where(improve, best_col, dist_col)
            pred_col = np.where(improve, best_j, pred_col)
            changed = True
        reach_row = np.where(backward, dist_col[None, :] - weights, -np.inf)
        best_k = np.argmax(reach_row, axis=1)
        best_row = reach_row[np.arange(J), best_k]
        improve = best_row > dist_row + PROFIT_TOLERANCE
        if np.any(improve):
            dist_row = np.where(improve, best_row, dist_row)
            pred_row = np.where(improve, best_k, pred_row)
            changed = True
        if not changed:
            break
    return dist_col, pred_row, pred_col


def solve_transport(inst: TransportInstance, max_augmentations=100000) -> TransportSolution:
    weights = inst.weights
    J, K = weights.shape
    flow = np.zeros((J, K))
    row_left = inst.row_caps.copy()
    col_left = inst.col_caps.copy()
    augmentations = 0
    while augmentations < max_augmentations:
        row_open = row_left > CAPACITY_TOLERANCE
        col_open = col_left > CAPACITY_TOLERANCE
        if not np.any(row_open) or not np.any(col_open):
            break
        dist_col, pred_row, pred_col = _longest_paths(weights, flow, row_open)
        profits = np.where(col_open, dist_col, -np.inf)
        k = int(np.argmax(profits))
        if not profits[k] > PROFIT_TOLERANCE:
            break
        path = []
        amount = col_left[k]
        node = k
        seen = set()
        while True:
            if node in seen:
                raise DomainException('residual graph has a positive cycle through supply node %s' % node)
            seen.add(node)
            j = int(pred_col[node])
            path.append((j, node))
            back = int(pred_row[j])
            if back < 0:
                amount = min(amount, row_left[j])
                break
            amount = min(amount, flow[j, back])
            path.append((j, back))
            node = back
        source = path[-1][0]
        for i, (j, kk) in enumerate(path):
            flow[j, kk] += amount if i % 2 == 0 else -amount
        row_left[source] -= amount
        col_left[k] -= amount
        augmentations += 1
    else:
        Logger.transport.warning('augmentation limit reached: %s', max_augmentations)
    flow = np.clip(flow, 0.0, None)
    value = float(np.sum(weights * flow))
    return TransportSolution(allocation=flow, value=value)


def transport_value(weights, row_caps, col_caps) -> float:
    return solve_transport(TransportInstance(weights, row_caps, col_caps)).value
