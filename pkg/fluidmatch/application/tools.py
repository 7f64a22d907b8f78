import asyncio
import contextlib
import csv
import os
import sys
from typing import Dict, Iterable, List, Optional, Sequence, TextIO

import numpy as np


def create_directory(path: str):  # pragma: no cover
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.exists(directory):
        os.makedirs(directory)


@contextlib.contextmanager
def open_output(path: Optional[str]) -> TextIO:
    """
    A writable text stream for `path`, stdout when no path is given.
    """
    if not path or path == '-':
        yield sys.stdout
        sys.stdout.flush()
        return
    create_directory(path)
    with open(path, 'w', newline='') as f:
        yield f


def write_rows(stream: TextIO, header: Sequence[str], rows: Iterable[Dict]) -> int:
    writer = csv.DictWriter(stream, fieldnames=list(header), extrasaction='ignore')
    writer.writeheader()
    count = 0
    for row in rows:
        writer.writerow(row)
        count += 1
    return count


def format_matrix(m: np.ndarray, precision=6) -> List[str]:
    """
    Fixed-width rows of a J x K matrix with 1-based column headers.
    """
    m = np.atleast_2d(m)
    width = precision + 6
    lines = [' ' * 6 + ''.join(('k=%s' % (k + 1)).rjust(width) for k in range(m.shape[1]))]
    for j, row in enumerate(m):
        lines.append(('j=%s' % (j + 1)).ljust(6) + ''.join(('%.*g' % (precision, x)).rjust(width) for x in row))
    return lines


def run_until_complete(coro, loop=None):
    loop = loop or asyncio.new_event_loop()
    try:
        return loop.run_until_complete(coro)
    finally:
        loop.close()
