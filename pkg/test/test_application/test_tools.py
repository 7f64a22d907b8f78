import asyncio
import io
import os
import tempfile
from unittest import TestCase

import numpy as np

from fluidmatch.application import tools


class TestTools(TestCase):
    def test_write_rows(self):
        stream = io.StringIO()
        count = tools.write_rows(stream, ['a', 'b'], [{'a': 1, 'b': 2, 'c': 3}, {'a': 4}])
        self.assertEqual(count, 2)
        self.assertEqual(stream.getvalue().splitlines(), ['a,b', '1,2', '4,'])

    def test_write_header_only(self):
        stream = io.StringIO()
        self.assertEqual(tools.write_rows(stream, ['a'], []), 0)
        self.assertEqual(stream.getvalue().splitlines(), ['a'])

    def test_open_output(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, 'nested', 'out.csv')
            with tools.open_output(path) as f:
                f.write('x\n')
            with open(path) as f:
                self.assertEqual(f.read(), 'x\n')

    def test_format_matrix(self):
        lines = tools.format_matrix(np.array([[1.0, 0.5]]), precision=3)
        self.assertEqual(len(lines), 2)
        self.assertIn('k=2', lines[0])
        self.assertTrue(lines[1].startswith('j=1'))
        self.assertIn('0.5', lines[1])

    def test_run_until_complete(self):
        async def coro():
            await asyncio.sleep(0)
            return 42
        self.assertEqual(tools.run_until_complete(coro()), 42)
