"""
Event-engine building blocks: the time-ordered event heap, renewal streams and FCFS node queues
with lazy removal of reneged entries.
"""
import enum
import heapq
import itertools
from collections import deque
from typing import Callable, Optional, Tuple

import numpy as np


class EventKind(enum.IntEnum):
    # equal timestamps resolve in this order
    DEADLINE = 0
    ARRIVAL = 1
    REVIEW = 2


class EventQueue:
    def __init__(self):
        self._heap = []
        self._counter = itertools.count()

    def push(self, time: float, kind: EventKind, node: int = -1, payload=None):
        heapq.heappush(self._heap, (time, int(kind), node, next(self._counter), payload))

    def pop(self) -> Tuple[float, EventKind, int, object]:
        time, kind, node, _, payload = heapq.heappop(self._heap)
        return time, EventKind(kind), node, payload

    def __len__(self):
        return len(self._heap)

    def __bool__(self):
        return bool(self._heap)


class ArrivalKind(enum.Enum):
    POISSON = 'poisson'
    ERLANG = 'erlang'
    DETERMINISTIC = 'deterministic'


class BatchedSampler:
    """
    Draws from ``draw(rng, size)`` in blocks and serves one value at a time.
    """
    __slots__ = ('_rng', '_draw', '_block', '_buffer', '_index')

    def __init__(self, rng: np.random.Generator, draw: Callable, block=4096):
        self._rng = rng
        self._draw = draw
        self._block = block
        self._buffer = None
        self._index = block

    def __call__(self) -> float:
        if self._index >= self._block:
            self._buffer = self._draw(self._rng, self._block)
            self._index = 0
        value = self._buffer[self._index]
        self._index += 1
        return float(value)


def interarrival_sampler(rng: np.random.Generator, rate: float, kind: ArrivalKind, erlang_k: int = 2):
    """
    Interarrival times with mean 1/rate for an ordinary renewal process started at 0.
    """
    if kind is ArrivalKind.POISSON:
        return BatchedSampler(rng, lambda r, size: r.exponential(1.0 / rate, size))
    if kind is ArrivalKind.ERLANG:
        return BatchedSampler(rng, lambda r, size: r.gamma(erlang_k, 1.0 / (erlang_k * rate), size))
    return BatchedSampler(rng, lambda r, size: np.full(size, 1.0 / rate))


class Entry:
    __slots__ = ('arrival', 'deadline', 'alive')

    def __init__(self, arrival: float, deadline: float):
        self.arrival = arrival
        self.deadline = deadline
        self.alive = True


class NodeQueue:
    """
    FCFS queue of one node. Reneged entries are only flagged, and are skipped when the
    head of the queue is served.
    """
    def __init__(self):
        self._entries = deque()
        self._dead = 0
        self.length = 0

    def append(self, entry: Entry):
        self._entries.append(entry)
        self.length += 1

    def renege(self, entry: Entry) -> bool:
        if not entry.alive:
            return False
        entry.alive = False
        self.length -= 1
        self._dead += 1
        if self._dead > 1024 and self._dead > self.length:
            self._entries = deque(e for e in self._entries if e.alive)
            self._dead = 0
        return True

    def serve(self, count: int, now: float) -> float:
        """
        Removes the ``count`` oldest residents and returns the sum of their waiting times.
        """
        if count > self.length:
            raise ValueError('cannot serve %s entries from a queue of %s' % (count, self.length))
        waited = 0.0
        while count:
            entry = self._entries.popleft()
            if not entry.alive:
                self._dead -= 1
                continue
            entry.alive = False
            waited += now - entry.arrival
            self.length -= 1
            count -= 1
        return waited

    def head_waiting_time(self, now: float) -> Optional[float]:
        while self._entries and not self._entries[0].alive:
            self._entries.popleft()
            self._dead -= 1
        if not self._entries:
            return None
        return now - self._entries[0].arrival

    def residents(self):
        return (e for e in self._entries if e.alive)
