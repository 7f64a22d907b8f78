"""
Extreme points of the polytope {m >= 0, row sums <= lambda, column sums <= mu}.

A point is extreme exactly when its positive edges form a forest and every tree of that forest
has at most one node with slack. Enumeration walks every acyclic edge subset; for each tree and
each choice of slack node the edge values follow by peeling leaves.
"""
import itertools
from collections import defaultdict, deque
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

import numpy as np

from fluidmatch import settings
from fluidmatch.application.exceptions import InstanceTooLargeException, StructureException
from fluidmatch.application.logging_factory import Logger
from fluidmatch.model.network import Edge, MatchingRates, Network


@dataclass(frozen=True, eq=False)
class ExtremePoint:
    m: MatchingRates
    support: Tuple[Edge, ...]
    tight_demand: np.ndarray
    tight_supply: np.ndarray

    @classmethod
    def from_rates(cls, net: Network, m, tol=settings.FEASIBILITY_TOLERANCE) -> 'ExtremePoint':
        rates = m if isinstance(m, MatchingRates) else MatchingRates(m)
        return cls(
            m=rates,
            support=tuple(rates.support(tol)),
            tight_demand=rates.row_sums >= net.lam - tol,
            tight_supply=rates.col_sums >= net.mu - tol
        )

    def key(self):
        return tuple(self.m.m.ravel().tolist())


def _node(net: Network, edge: Edge) -> Tuple[int, int]:
    return edge[0], net.J + edge[1]


def _capacities(net: Network) -> np.ndarray:
    return np.concatenate([net.lam, net.mu])


class _DisjointSet:
    """
    Union-find with an undo log, for backtracking over edge subsets.
    """
    def __init__(self, size):
        self.parent = list(range(size))
        self.rank = [0] * size
        self.log = []

    def find(self, x):
        while self.parent[x] != x:
            x = self.parent[x]
        return x

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        bumped = self.rank[ra] == self.rank[rb]
        self.parent[rb] = ra
        if bumped:
            self.rank[ra] += 1
        self.log.append((rb, ra, bumped))
        return True

    def undo(self):
        rb, ra, bumped = self.log.pop()
        self.parent[rb] = rb
        if bumped:
            self.rank[ra] -= 1


def _adjacency(net: Network, edges) -> Dict[int, List[Tuple[int, Edge]]]:
    adjacency = defaultdict(list)
    for edge in edges:
        a, b = _node(net, edge)
        adjacency[a].append((b, edge))
        adjacency[b].append((a, edge))
    return adjacency


def _tree_path(adjacency, source: int, target: int) -> List[Edge]:
    previous = {source: None}
    queue = deque([source])
    while queue:
        node = queue.popleft()
        if node == target:
            break
        for other, edge in adjacency[node]:
            if other not in previous:
                previous[other] = (node, edge)
                queue.append(other)
    if target not in previous:
        return []
    path = []
    node = target
    while previous[node] is not None:
        node, edge = previous[node]
        path.append(edge)
    return path[::-1]


def find_cycle(net: Network, edges: Sequence[Edge]) -> Optional[List[Edge]]:
    """
    Returns the edges of one cycle in traversal order, or None for a forest.
    """
    ds = _DisjointSet(net.J + net.K)
    kept = []
    for edge in sorted(edges):
        a, b = _node(net, edge)
        if not ds.union(a, b):
            return _tree_path(_adjacency(net, kept), b, a) + [edge]
        kept.append(edge)
    return None


def components(net: Network, edges: Sequence[Edge]) -> List[Tuple[FrozenSet[int], Tuple[Edge, ...]]]:
    """
    Connected components of the graph on all J + K nodes, as (node set, edges) pairs.
    Isolated nodes come out as components with no edges.
    """
    adjacency = _adjacency(net, edges)
    seen, out = set(), []
    for start in range(net.J + net.K):
        if start in seen:
            continue
        nodes, queue = {start}, deque([start])
        while queue:
            node = queue.popleft()
            for other, _ in adjacency[node]:
                if other not in nodes:
                    nodes.add(other)
                    queue.append(other)
        seen |= nodes
        tree_edges = tuple(sorted(e for e in edges if _node(net, e)[0] in nodes))
        out.append((frozenset(nodes), tree_edges))
    return out


def _solve_tree(net: Network, caps: np.ndarray, edges: Tuple[Edge, ...], slack: int, tol: float):
    """
    Edge values of a tree whose nodes other than ``slack`` are tight, by peeling leaves towards
    the slack node. None when some value is not strictly positive or the slack node overflows.
    """
    adjacency = _adjacency(net, edges)
    order, parent = [], {slack: None}
    queue = deque([slack])
    while queue:
        node = queue.popleft()
        order.append(node)
        for other, edge in adjacency[node]:
            if other not in parent:
                parent[other] = (node, edge)
                queue.append(other)
    values = {}
    load = defaultdict(float)
    for node in reversed(order):
        if node == slack:
            break
        up, edge = parent[node]
        value = caps[node] - load[node]
        if value <= tol:
            return None
        values[edge] = value
        load[up] += value
    if load[slack] > caps[slack] + tol:
        return None
    return values


def _tree_solutions(net: Network, caps: np.ndarray, edges: Tuple[Edge, ...], tol: float):
    nodes = sorted({n for e in edges for n in _node(net, e)})
    solutions = []
    for slack in nodes:
        values = _solve_tree(net, caps, edges, slack, tol)
        if values is None:
            continue
        if any(all(abs(values[e] - other[e]) <= tol for e in edges) for other in solutions):
            continue
        solutions.append(values)
    return solutions


def _ensure_size(net: Network):
    if net.J * net.K > settings.MAX_ENUMERATION_EDGES:
        raise InstanceTooLargeException(
            'vertex enumeration is limited to %s edges, the instance has %s' % (
                settings.MAX_ENUMERATION_EDGES, net.J * net.K)
        )


def enumerate_extreme_points(net: Network, tol=settings.FEASIBILITY_TOLERANCE) -> List[ExtremePoint]:
    _ensure_size(net)
    caps = _capacities(net)
    edges = net.edges
    ds = _DisjointSet(net.J + net.K)
    memo = {}
    points = []

    def tree_solutions(tree):
        if tree not in memo:
            memo[tree] = _tree_solutions(net, caps, tree, tol)
        return memo[tree]

    def collect(chosen):
        trees = [t for _, t in components(net, chosen) if t]
        options = []
        for tree in trees:
            solutions = tree_solutions(tree)
            if not solutions:
                return
            options.append(solutions)
        for combination in itertools.product(*options):
            m = np.zeros((net.J, net.K))
            for values in combination:
                for (j, k), value in values.items():
                    m[j, k] = value
            points.append(ExtremePoint.from_rates(net, m, tol))

    def walk(i, chosen):
        if i == len(edges):
            collect(chosen)
            return
        walk(i + 1, chosen)
        a, b = _node(net, edges[i])
        if ds.union(a, b):
            chosen.append(edges[i])
            walk(i + 1, chosen)
            chosen.pop()
            ds.undo()

    walk(0, [])
    points.sort(key=ExtremePoint.key)
    Logger.solver.debug('enumerated %s extreme points on a %sx%s instance', len(points), net.J, net.K)
    return points


def slack_nodes(net: Network, m: MatchingRates, nodes, tol=settings.FEASIBILITY_TOLERANCE) -> List[int]:
    caps = _capacities(net)
    sums = np.concatenate([m.row_sums, m.col_sums])
    return [n for n in sorted(nodes) if sums[n] < caps[n] - tol]


def check_extreme_structure(net: Network, m, tol=settings.FEASIBILITY_TOLERANCE) -> ExtremePoint:
    """
    Verifies the forest and single-slack-node structure of an extreme point.
    """
    rates = m if isinstance(m, MatchingRates) else MatchingRates(m)
    support = rates.support(tol)
    cycle = find_cycle(net, support)
    if cycle:
        raise StructureException('support contains the cycle %s' % _format_edges(cycle), cycle=cycle)
    for nodes, tree in components(net, support):
        if len(slack_nodes(net, rates, nodes, tol)) > 1:
            raise StructureException('tree %s has more than one slack node' % _format_edges(tree))
    return ExtremePoint.from_rates(net, rates, tol)


def is_extreme_point(net: Network, m, tol=settings.FEASIBILITY_TOLERANCE) -> bool:
    try:
        check_extreme_structure(net, m, tol)
    except StructureException:
        return False
    return True


def _format_edges(edges) -> str:
    return ' '.join('(%s,%s)' % (j + 1, k + 1) for j, k in edges)


def _push(m: np.ndarray, path: List[Edge], weights: np.ndarray, limits: Callable):
    """
    Moves flow along an alternating path or cycle in the direction that does not lose value,
    until an edge empties or an endpoint limit binds.
    """
    signs = np.array([1.0 if i % 2 == 0 else -1.0 for i in range(len(path))])
    gain = sum(s * weights[e] for s, e in zip(signs, path))
    if gain < 0:
        signs = -signs
    step = min([m[e] for s, e in zip(signs, path) if s < 0] + limits(signs))
    for s, e in zip(signs, path):
        m[e] = max(m[e] + s * step, 0.0)


def to_extreme_point(net: Network, m, weights, tol=settings.FEASIBILITY_TOLERANCE, max_moves=10000) -> ExtremePoint:
    """
    Crossover from a point of the polytope to a vertex with no smaller linear value
    sum(weights * m): cancels support cycles, then merges slack nodes sharing a tree.
    """
    rates = MatchingRates(m).ensure_feasible(net)
    m = np.array(rates.m)
    weights = np.asarray(weights, dtype=float)
    caps = _capacities(net)
    for _ in range(max_moves):
        m[m <= tol] = 0.0
        current = MatchingRates(m)
        support = current.support(tol)
        cycle = find_cycle(net, support)
        if cycle:
            _push(m, [tuple(e) for e in cycle], weights, lambda signs: [])
            continue
        moved = False
        for nodes, tree in components(net, support):
            slack = slack_nodes(net, current, nodes, tol)
            if len(slack) < 2:
                continue
            u, v = slack[0], slack[1]
            path = _tree_path(_adjacency(net, tree), u, v)
            sums = np.concatenate([current.row_sums, current.col_sums])

            def limits(signs, u=u, v=v, sums=sums, path=path):
                out = []
                if signs[0] > 0:
                    out.append(caps[u] - sums[u])
                if signs[-1] > 0:
                    out.append(caps[v] - sums[v])
                return out

            _push(m, path, weights, limits)
            moved = True
            break
        if not moved:
            return ExtremePoint.from_rates(net, MatchingRates(m), tol)
    raise StructureException('crossover did not reach an extreme point in %s moves' % max_moves)
