import io
import time
from concurrent.futures import ThreadPoolExecutor
from unittest import TestCase
from unittest.mock import Mock

from fluidmatch.application import tools
from fluidmatch.model.distributions import Exponential
from fluidmatch.model.network import Network
from fluidmatch.simulation.policies import PolicyKind
from fluidmatch.simulation.simulator import SimConfig
from fluidmatch.simulation.sweep import COLUMNS, OrderedSink, SweepCell, SweepReactor, failed_row, run_cell


def make_cell(index, seed=0, n=5):
    net = Network.uniform_patience([1.0], [1.0], [[1.0]], Exponential(1.0))
    cfg = SimConfig(net, n=n, review_base=0.5, horizon=2.0, policy=PolicyKind.LP, seed=seed)
    return SweepCell(index=index, experiment='test', distribution='exponential', replication=seed, config=cfg,
                     bound=1.0, fluid_queues=(0.0, 0.0))


class TestOrderedSink(TestCase):
    def test_rows_leave_in_order(self):
        stream = io.StringIO()
        repository = Mock()
        sut = OrderedSink(stream=stream, repository=repository)
        sut.put(2, {'cell': 2})
        sut.put(1, {'cell': 1})
        self.assertEqual(sut.rows, [])
        sut.put(0, {'cell': 0})
        self.assertEqual([r['cell'] for r in sut.rows], [0, 1, 2])
        lines = stream.getvalue().splitlines()
        self.assertEqual(lines[0], ','.join(COLUMNS))
        self.assertEqual(len(lines), 4)
        self.assertEqual(repository.save_rows.call_count, 3)


class TestSweepReactor(TestCase):
    def setUp(self):
        self.executor = ThreadPoolExecutor(max_workers=2)

    def tearDown(self):
        self.executor.shutdown(wait=True)

    def test_run_cells(self):
        cells = [make_cell(0, seed=0), make_cell(0, seed=1), make_cell(1, seed=0, n=10)]
        sut = SweepReactor(cells, OrderedSink(), jobs=2, executor=self.executor)
        rows = tools.run_until_complete(sut.start())
        self.assertEqual([(r['cell'], r['replication']) for r in rows], [(0, 0), (0, 1), (1, 0)])
        self.assertTrue(all(r['status'] == 'ok' for r in rows))
        self.assertEqual(rows[2]['n'], 10)
        self.assertEqual(rows[0]['mu'], '1')
        self.assertEqual(sut.failures, 0)

    def test_same_cell_same_row(self):
        first, second = run_cell(make_cell(0, seed=3)), run_cell(make_cell(0, seed=3))
        self.assertEqual(first, second)

    def test_failures_are_reported_as_rows(self):
        def worker(cell):
            if cell.index == 1:
                raise ValueError('boom')
            if cell.index == 2:
                time.sleep(2.0)
            return run_cell(cell)

        cells = [make_cell(0), make_cell(1), make_cell(2)]
        sut = SweepReactor(cells, OrderedSink(), jobs=3, cell_timeout=0.5, executor=self.executor, worker=worker)
        rows = tools.run_until_complete(sut.start())
        self.assertEqual([r['status'] for r in rows], ['ok', 'error', 'timeout'])
        self.assertEqual(sut.failures, 2)
        self.assertIsNone(rows[1]['objective'])

    def test_failed_row(self):
        row = failed_row(make_cell(4), 'timeout')
        self.assertEqual(set(row), set(COLUMNS))
        self.assertEqual(row['cell'], 4)
        self.assertEqual(row['bound'], 1.0)
