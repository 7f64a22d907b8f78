"""
Patience-time distributions.

Every functional of a patience law needed by the invariant-state formulas, the fluid ODE and
the simulator lives here: cdf, density, hazard, excess-life cdf and the two inverses.
Unbounded supports carry ``support_edge = inf``.
"""
import abc
import enum
import math
from dataclasses import dataclass
from typing import Dict, Union

import numpy as np
from scipy import optimize, special, stats

from fluidmatch.application.exceptions import DomainException, ConfigurationException

__all__ = [
    'HazardClass',
    'PatienceDistribution',
    'Exponential',
    'Uniform',
    'Gamma',
    'distribution_from_record',
]

ArrayLike = Union[float, np.ndarray]


class HazardClass(enum.Enum):
    CONSTANT = 'constant'
    INCREASING = 'increasing'
    DECREASING = 'decreasing'

    @property
    def nondecreasing(self) -> bool:
        return self in (HazardClass.CONSTANT, HazardClass.INCREASING)

    @property
    def nonincreasing(self) -> bool:
        return self in (HazardClass.CONSTANT, HazardClass.DECREASING)


def _unwrap(value: np.ndarray, scalar: bool) -> ArrayLike:
    return float(value) if scalar else value


def _points(x: ArrayLike):
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise DomainException('patience functionals are defined on x >= 0, found %s' % x)
    return arr, arr.ndim == 0


def _probabilities(p: ArrayLike):
    arr = np.asarray(p, dtype=float)
    if np.any(np.isnan(arr)) or np.any(arr < 0) or np.any(arr >= 1):
        raise DomainException('inverse is defined on p in [0, 1), found %s' % p)
    return arr, arr.ndim == 0


class PatienceDistribution(metaclass=abc.ABCMeta):
    """
    Base class for patience laws. Subclasses implement the raw functionals on arrays,
    the public methods validate the domain and unwrap scalars.
    """
    kind = None  # type: str

    @property
    @abc.abstractmethod
    def theta(self) -> float:
        pass  # pragma: no cover

    @property
    @abc.abstractmethod
    def support_edge(self) -> float:
        pass  # pragma: no cover

    @property
    @abc.abstractmethod
    def hazard_class(self) -> HazardClass:
        pass  # pragma: no cover

    @property
    @abc.abstractmethod
    def hazard_at_origin(self) -> float:
        pass  # pragma: no cover

    @property
    @abc.abstractmethod
    def hazard_at_edge(self) -> float:
        pass  # pragma: no cover

    @abc.abstractmethod
    def _cdf(self, x: np.ndarray) -> np.ndarray:
        pass  # pragma: no cover

    @abc.abstractmethod
    def _pdf(self, x: np.ndarray) -> np.ndarray:
        pass  # pragma: no cover

    @abc.abstractmethod
    def _hazard(self, x: np.ndarray) -> np.ndarray:
        pass  # pragma: no cover

    @abc.abstractmethod
    def _excess_life_cdf(self, x: np.ndarray) -> np.ndarray:
        pass  # pragma: no cover

    @abc.abstractmethod
    def _inverse_cdf(self, p: np.ndarray) -> np.ndarray:
        pass  # pragma: no cover

    @abc.abstractmethod
    def _inverse_excess_life_cdf(self, p: np.ndarray) -> np.ndarray:
        pass  # pragma: no cover

    @abc.abstractmethod
    def sample(self, rng: np.random.Generator, size=None) -> ArrayLike:
        pass  # pragma: no cover

    @abc.abstractmethod
    def to_record(self) -> Dict:
        pass  # pragma: no cover

    @property
    def mean(self) -> float:
        return 1.0 / self.theta

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.support_edge)

    def cdf(self, x: ArrayLike) -> ArrayLike:
        arr, scalar = _points(x)
        return _unwrap(self._cdf(arr), scalar)

    def pdf(self, x: ArrayLike) -> ArrayLike:
        arr, scalar = _points(x)
        return _unwrap(self._pdf(arr), scalar)

    def survival(self, x: ArrayLike) -> ArrayLike:
        arr, scalar = _points(x)
        return _unwrap(1.0 - self._cdf(arr), scalar)

    def hazard(self, x: ArrayLike) -> ArrayLike:
        arr, scalar = _points(x)
        if np.any(arr >= self.support_edge):
            raise DomainException(
                'hazard of %s is undefined at or beyond the support edge %s' % (self, self.support_edge)
            )
        return _unwrap(self._hazard(arr), scalar)

    def excess_life_cdf(self, x: ArrayLike) -> ArrayLike:
        arr, scalar = _points(x)
        if np.any(np.isinf(arr)):
            out = np.where(np.isinf(arr), 1.0, self._excess_life_cdf(np.where(np.isinf(arr), 0.0, arr)))
        else:
            out = self._excess_life_cdf(arr)
        return _unwrap(out, scalar)

    def inverse_cdf(self, p: ArrayLike) -> ArrayLike:
        arr, scalar = _probabilities(p)
        return _unwrap(self._inverse_cdf(arr), scalar)

    def inverse_excess_life_cdf(self, p: ArrayLike) -> ArrayLike:
        arr, scalar = _probabilities(p)
        return _unwrap(self._inverse_excess_life_cdf(arr), scalar)

    def hazard_at_quantile(self, p: ArrayLike) -> ArrayLike:
        """
        h(G^{-1}(p)) extended to p = 1 by the left limit at the support edge.
        """
        arr = np.asarray(p, dtype=float)
        scalar = arr.ndim == 0
        if np.any(arr < 0) or np.any(arr > 1):
            raise DomainException('quantile level out of [0, 1]: %s' % p)
        inner = np.clip(arr, 0.0, np.nextafter(1.0, 0.0))
        values = self._hazard(self._inverse_cdf(inner))
        values = np.where(arr >= 1.0, self.hazard_at_edge, values)
        values = np.where(arr <= 0.0, self.hazard_at_origin, values)
        return _unwrap(values, scalar)

    def __str__(self):
        params = ', '.join('%s=%g' % (k, v) for k, v in self.to_record().items() if k != 'kind')
        return '%s(%s)' % (self.kind, params)


@dataclass(frozen=True)
class Exponential(PatienceDistribution):
    rate: float
    kind = 'exponential'

    def __post_init__(self):
        if not self.rate > 0 or not math.isfinite(self.rate):
            raise DomainException('exponential rate must be positive, found %s' % self.rate)

    @property
    def theta(self):
        return self.rate

    @property
    def support_edge(self):
        return math.inf

    @property
    def hazard_class(self):
        return HazardClass.CONSTANT

    @property
    def hazard_at_origin(self):
        return self.rate

    @property
    def hazard_at_edge(self):
        return self.rate

    def _cdf(self, x):
        return -np.expm1(-self.rate * x)

    def _pdf(self, x):
        return self.rate * np.exp(-self.rate * x)

    def _hazard(self, x):
        return np.full_like(x, self.rate, dtype=float)

    def _excess_life_cdf(self, x):
        return self._cdf(x)

    def _inverse_cdf(self, p):
        return -np.log1p(-p) / self.rate

    def _inverse_excess_life_cdf(self, p):
        return self._inverse_cdf(p)

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)

    def to_record(self):
        return {'kind': self.kind, 'rate': self.rate}


@dataclass(frozen=True)
class Uniform(PatienceDistribution):
    """
    Uniform patience on [0, 2/rate], so that the mean is 1/rate.
    """
    rate: float
    kind = 'uniform'

    def __post_init__(self):
        if not self.rate > 0 or not math.isfinite(self.rate):
            raise DomainException('uniform rate must be positive, found %s' % self.rate)

    @property
    def theta(self):
        return self.rate

    @property
    def support_edge(self):
        return 2.0 / self.rate

    @property
    def hazard_class(self):
        return HazardClass.INCREASING

    @property
    def hazard_at_origin(self):
        return 1.0 / self.support_edge

    @property
    def hazard_at_edge(self):
        return math.inf

    def _cdf(self, x):
        return np.clip(x / self.support_edge, 0.0, 1.0)

    def _pdf(self, x):
        return np.where(x < self.support_edge, 1.0 / self.support_edge, 0.0)

    def _hazard(self, x):
        return 1.0 / (self.support_edge - x)

    def _excess_life_cdf(self, x):
        left = np.clip(1.0 - x / self.support_edge, 0.0, 1.0)
        return 1.0 - left * left

    def _inverse_cdf(self, p):
        return p * self.support_edge

    def _inverse_excess_life_cdf(self, p):
        return self.support_edge * (1.0 - np.sqrt(1.0 - p))

    def sample(self, rng, size=None):
        return rng.uniform(0.0, self.support_edge, size)

    def to_record(self):
        return {'kind': self.kind, 'rate': self.rate}


@dataclass(frozen=True)
class Gamma(PatienceDistribution):
    shape: float
    scale: float
    kind = 'gamma'

    inverse_tolerance = 1e-14

    def __post_init__(self):
        for name in ('shape', 'scale'):
            value = getattr(self, name)
            if not value > 0 or not math.isfinite(value):
                raise DomainException('gamma %s must be positive, found %s' % (name, value))

    @classmethod
    def from_mean(cls, mean: float, shape: float) -> 'Gamma':
        return cls(shape=shape, scale=mean / shape)

    @property
    def theta(self):
        return 1.0 / (self.shape * self.scale)

    @property
    def variance(self):
        return self.shape * self.scale ** 2

    @property
    def support_edge(self):
        return math.inf

    @property
    def hazard_class(self):
        if self.shape > 1:
            return HazardClass.INCREASING
        if self.shape < 1:
            return HazardClass.DECREASING
        return HazardClass.CONSTANT

    @property
    def hazard_at_origin(self):
        if self.shape > 1:
            return 0.0
        if self.shape < 1:
            return math.inf
        return 1.0 / self.scale

    @property
    def hazard_at_edge(self):
        return 1.0 / self.scale

    def _cdf(self, x):
        return special.gammainc(self.shape, x / self.scale)

    def _pdf(self, x):
        return stats.gamma.pdf(x, self.shape, scale=self.scale)

    def _hazard(self, x):
        with np.errstate(divide='ignore'):
            log_h = stats.gamma.logpdf(x, self.shape, scale=self.scale) - \
                    stats.gamma.logsf(x, self.shape, scale=self.scale)
        return np.where(x == 0, self.hazard_at_origin, np.exp(log_h))

    def _excess_life_cdf(self, x):
        # theta * int_0^x (1 - G) = x * (1 - G(x)) / (k s) + P(k + 1, x / s)
        z = x / self.scale
        return x * special.gammaincc(self.shape, z) * self.theta + special.gammainc(self.shape + 1.0, z)

    def _inverse_cdf(self, p):
        return special.gammaincinv(self.shape, p) * self.scale

    def _inverse_excess_life_cdf(self, p):
        flat = np.atleast_1d(p).astype(float)
        out = np.empty_like(flat)
        for i, level in enumerate(flat):
            out[i] = self._solve_excess_life(level)
        return out.reshape(np.shape(p))

    def _solve_excess_life(self, level: float) -> float:
        if level == 0.0:
            return 0.0
        upper = self.mean
        while self._excess_life_cdf(np.asarray(upper)) < level:
            upper *= 2.0
        return optimize.brentq(
            lambda x: float(self._excess_life_cdf(np.asarray(x))) - level,
            0.0, upper, xtol=self.inverse_tolerance, rtol=4 * np.finfo(float).eps, maxiter=500
        )

    def sample(self, rng, size=None):
        return rng.gamma(self.shape, self.scale, size)

    def to_record(self):
        return {'kind': self.kind, 'shape': self.shape, 'scale': self.scale}


_kinds = {
    'exponential': (Exponential, ('rate',)),
    'uniform': (Uniform, ('rate',)),
    'gamma': (Gamma, ('shape', 'scale')),
}


def distribution_from_record(record: Dict) -> PatienceDistribution:
    record = dict(record)
    kind = record.pop('kind', None)
    if kind not in _kinds:
        raise ConfigurationException('unknown patience distribution kind: %s' % kind)
    factory, fields = _kinds[kind]
    if 'mean' in record and kind != 'gamma' and 'rate' not in record:
        record['rate'] = 1.0 / float(record.pop('mean'))
    if kind == 'gamma' and 'mean' in record:
        mean = float(record.pop('mean'))
        record.setdefault('scale', mean / float(record.get('shape', 1.0)))
    unknown = set(record) - set(fields)
    if unknown:
        raise ConfigurationException('unknown keys for %s patience: %s' % (kind, sorted(unknown)))
    missing = set(fields) - set(record)
    if missing:
        raise ConfigurationException('missing keys for %s patience: %s' % (kind, sorted(missing)))
    try:
        return factory(**{k: float(v) for k, v in record.items()})
    except DomainException as e:
        raise ConfigurationException(str(e)) from e
