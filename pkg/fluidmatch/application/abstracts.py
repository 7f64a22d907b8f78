import abc
from typing import Dict, List

import numpy as np


class MatchingPolicy(metaclass=abc.ABCMeta):
    name = None  # type: str

    @abc.abstractmethod
    def decide(self, queue_demand: np.ndarray, queue_supply: np.ndarray) -> np.ndarray:
        """
        Integer J x K match counts for a review snapshot of the queue lengths.
        """
        pass  # pragma: no cover


class ResultsRepository(metaclass=abc.ABCMeta):
    @abc.abstractmethod
    def save_rows(self, rows: List[Dict]):
        pass  # pragma: no cover

    @abc.abstractmethod
    def close(self):
        pass  # pragma: no cover
