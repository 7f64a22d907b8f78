import asyncio
import csv
from concurrent.futures import Executor, ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, TextIO, Tuple

import async_timeout

from fluidmatch.application.abstracts import ResultsRepository
from fluidmatch.application.logging_factory import Logger
from fluidmatch.simulation.simulator import SimConfig, run

COLUMNS = [
    'experiment', 'cell', 'replication', 'n', 'l', 'delta', 'review_length', 'policy', 'distribution',
    'mu', 'seed', 'horizon', 'objective', 'bound', 'ratio', 'reneging_fraction_demand',
    'reneging_fraction_supply', 'average_queue_demand', 'average_queue_supply', 'fluid_queue_demand',
    'fluid_queue_supply', 'rate_gap', 'matches_total', 'status'
]


@dataclass(frozen=True, eq=False)
class SweepCell:
    index: int
    experiment: str
    distribution: str
    replication: int
    config: SimConfig
    bound: Optional[float] = None
    fluid_queues: Optional[Tuple[float, float]] = None

    def key(self) -> Dict:
        cfg = self.config
        fluid = self.fluid_queues or (None, None)
        return {
            'experiment': self.experiment,
            'cell': self.index,
            'replication': self.replication,
            'n': cfg.n,
            'l': cfg.review_base,
            'delta': cfg.review_exponent,
            'review_length': cfg.review_length,
            'policy': cfg.policy.value,
            'distribution': self.distribution,
            'mu': ' '.join('%g' % x for x in cfg.net.mu),
            'seed': cfg.seed,
            'horizon': cfg.horizon,
            'fluid_queue_demand': fluid[0],
            'fluid_queue_supply': fluid[1],
        }


def run_cell(cell: SweepCell) -> Dict:
    result = run(cell.config)
    row = cell.key()
    row.update({
        'objective': result.objective,
        'bound': cell.bound,
        'ratio': result.ratio(cell.bound) if cell.bound else None,
        'reneging_fraction_demand': result.demand_reneging_fraction,
        'reneging_fraction_supply': result.supply_reneging_fraction,
        'average_queue_demand': float(result.average_queue_demand.sum()),
        'average_queue_supply': float(result.average_queue_supply.sum()),
        'rate_gap': result.rate_gap,
        'matches_total': int(result.matches.sum()),
        'status': 'ok',
    })
    return row


def failed_row(cell: SweepCell, status: str) -> Dict:
    row = {column: None for column in COLUMNS}
    row.update(cell.key())
    row['bound'] = cell.bound
    row['status'] = status
    return row


class OrderedSink:
    """
    Single writer for sweep rows. Rows arrive in completion order and leave in cell order.
    """
    def __init__(self, stream: Optional[TextIO] = None, repository: Optional[ResultsRepository] = None):
        self.writer = stream and csv.DictWriter(stream, fieldnames=COLUMNS, extrasaction='ignore')
        self.repository = repository
        self.rows = []
        self._pending = {}
        self._next = 0
        self.writer and self.writer.writeheader()

    def put(self, position: int, row: Dict):
        self._pending[position] = row
        while self._next in self._pending:
            self._emit(self._pending.pop(self._next))
            self._next += 1

    def _emit(self, row: Dict):
        self.rows.append(row)
        self.writer and self.writer.writerow(row)
        self.repository and self.repository.save_rows([row])


class SweepReactor:
    def __init__(
            self,
            cells: Iterable[SweepCell],
            sink: OrderedSink,
            jobs: int = 1,
            cell_timeout: float = 600,
            executor: Optional[Executor] = None,
            worker=run_cell
    ):
        self.cells = list(cells)
        self.sink = sink
        self.jobs = max(1, int(jobs))
        self.cell_timeout = cell_timeout
        self.executor = executor
        self.worker = worker
        self.failures = 0

    async def _run_one(self, position: int, cell: SweepCell, semaphore: asyncio.Semaphore):
        loop = asyncio.get_event_loop()
        async with semaphore:
            try:
                async with async_timeout.timeout(self.cell_timeout):
                    row = await loop.run_in_executor(self.executor, self.worker, cell)
            except asyncio.TimeoutError:
                Logger.sweep.error('cell %s timed out after %ss', cell.index, self.cell_timeout)
                self.failures += 1
                row = failed_row(cell, 'timeout')
            except Exception as e:
                Logger.sweep.exception('cell %s failed: %s', cell.index, e)
                self.failures += 1
                row = failed_row(cell, 'error')
        self.sink.put(position, row)
        Logger.sweep.debug('cell %s replication %s done', cell.index, cell.replication)

    async def start(self) -> List[Dict]:
        own_executor = self.executor is None
        if own_executor:
            self.executor = ProcessPoolExecutor(max_workers=self.jobs)
        semaphore = asyncio.Semaphore(self.jobs)
        Logger.sweep.info('sweep started: %s runs on %s workers', len(self.cells), self.jobs)
        try:
            await asyncio.gather(*(
                self._run_one(position, cell, semaphore) for position, cell in enumerate(self.cells)
            ))
        finally:
            if own_executor:
                self.executor.shutdown(wait=False)
                self.executor = None
        Logger.sweep.info('sweep finished: %s rows, %s failures', len(self.sink.rows), self.failures)
        return self.sink.rows
