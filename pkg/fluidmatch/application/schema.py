"""
Experiment configuration documents. One JSON document describes the instance and the
experiment run on it; `serialize(parse(text))` is the canonical form.
"""
import json
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, PositiveInt, ValidationError, model_validator

from fluidmatch.application.exceptions import ConfigurationException, FluidmatchException
from fluidmatch.model.distributions import PatienceDistribution, distribution_from_record
from fluidmatch.model.network import Network

Experiment = Literal['solve', 'priority-sets', 'simulate', 'sweep', 'validate']
Suite = Literal['invariants', 'markov', 'extreme-points', 'convergence']
Policy = Literal['matching-rate', 'priority', 'lp']
Arrival = Literal['poisson', 'erlang', 'deterministic']


class _Strict(BaseModel):
    model_config = ConfigDict(extra='forbid', populate_by_name=True)


class PatienceSpec(_Strict):
    kind: Literal['exponential', 'uniform', 'gamma']
    rate: Optional[PositiveFloat] = None
    shape: Optional[PositiveFloat] = None
    scale: Optional[PositiveFloat] = None
    mean: Optional[PositiveFloat] = None

    def build(self) -> PatienceDistribution:
        return distribution_from_record(self.model_dump(exclude_none=True))

    @model_validator(mode='after')
    def _buildable(self):
        try:
            self.build()
        except FluidmatchException as e:
            raise ValueError(str(e)) from e
        return self


class InstanceSpec(_Strict):
    lam: List[PositiveFloat] = Field(alias='lambda', min_length=1)
    mu: List[PositiveFloat] = Field(min_length=1)
    values: List[List[float]]
    cD: Optional[List[float]] = None
    cS: Optional[List[float]] = None
    patience: Optional[PatienceSpec] = None
    demand_patience: Optional[List[PatienceSpec]] = None
    supply_patience: Optional[List[PatienceSpec]] = None

    def build(self, patience: Optional[PatienceSpec] = None, mu: Optional[List[float]] = None) -> Network:
        """
        The instance, optionally with every node's patience replaced and the supply rates overridden.
        """
        record = self.model_dump(by_alias=True, exclude_none=True)
        if patience is not None:
            record.pop('demand_patience', None)
            record.pop('supply_patience', None)
            record['patience'] = patience.model_dump(exclude_none=True)
        if mu is not None:
            record['mu'] = list(mu)
        return Network.from_record(record)

    @model_validator(mode='after')
    def _buildable(self):
        try:
            self.build()
        except FluidmatchException as e:
            raise ValueError(str(e)) from e
        return self


class PatienceVariant(_Strict):
    name: str
    patience: PatienceSpec


class SweepSpec(_Strict):
    n: List[PositiveInt] = Field(default_factory=lambda: [100], min_length=1)
    l: List[PositiveFloat] = Field(default_factory=lambda: [0.1], min_length=1)
    policy: List[Policy] = Field(default_factory=lambda: ['lp'], min_length=1)
    patience: List[PatienceVariant] = Field(default_factory=list)
    mu: List[List[PositiveFloat]] = Field(default_factory=list)


class MarkovSpec(_Strict):
    lam: PositiveFloat = Field(default=1.0, alias='lambda')
    mu: PositiveFloat = 0.5
    theta: List[PositiveFloat] = Field(default_factory=lambda: [1.0], min_length=1)
    n: List[PositiveInt] = Field(default_factory=lambda: [1, 10, 100], min_length=1)


class ExperimentConfig(_Strict):
    experiment: Optional[Experiment] = None
    name: str = 'experiment'
    instance: Optional[InstanceSpec] = None
    sweep: SweepSpec = Field(default_factory=SweepSpec)
    layout: Literal['rows', 'reneging'] = 'rows'
    replications: PositiveInt = 1
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    out: Optional[str] = None
    summary_out: Optional[str] = None
    trajectory_out: Optional[str] = None
    horizon: PositiveFloat = 100.0
    delta: float = Field(default=2.0 / 3.0, ge=0.0, lt=1.0)
    arrival: Arrival = 'poisson'
    erlang_k: PositiveInt = 2
    rates: Optional[List[List[float]]] = None
    sets: Optional[List[List[Tuple[PositiveInt, PositiveInt]]]] = None
    suite: Optional[Suite] = None
    markov: MarkovSpec = Field(default_factory=MarkovSpec)

    def patience_variants(self) -> List[Optional[PatienceVariant]]:
        return list(self.sweep.patience) or [None]

    def mu_variants(self) -> List[Optional[List[float]]]:
        return list(self.sweep.mu) or [None]

    @model_validator(mode='after')
    def _prerequisites(self):
        if self.experiment not in (None, 'validate') and self.instance is None:
            raise ValueError('experiment %s needs an instance' % self.experiment)
        if self.instance is None:
            return self
        J, K = len(self.instance.lam), len(self.instance.mu)
        for mu in self.sweep.mu:
            if len(mu) != K:
                raise ValueError('mu override %s does not match the %s supply nodes' % (mu, K))
        if self.rates is not None and (len(self.rates) != J or any(len(r) != K for r in self.rates)):
            raise ValueError('rates must be a %sx%s matrix' % (J, K))
        if self.sets is not None:
            for edges in self.sets:
                for j, k in edges:
                    if j > J or k > K:
                        raise ValueError('priority set edge (%s,%s) outside the %sx%s instance' % (j, k, J, K))
        if 'priority' in self.sweep.policy and self.sets is None:
            for variant in self.patience_variants():
                net = self.instance.build(variant and variant.patience)
                if not all(c.nondecreasing for c in net.hazard_classes):
                    raise ValueError(
                        'the priority policy needs explicit sets or nondecreasing hazards everywhere (%s)' % (
                            variant and variant.name or 'instance patience'))
        return self

    def with_overrides(self, **overrides) -> 'ExperimentConfig':
        values = {k: v for k, v in overrides.items() if v is not None}
        if not values:
            return self
        document = self.model_dump(mode='json', by_alias=True, exclude_none=True)
        document.update(values)
        return _validate(document)


def _one_line(error: ValidationError) -> str:
    return '; '.join(
        '%s: %s' % ('.'.join(str(p) for p in e['loc']) or 'config', e['msg']) for e in error.errors()
    )


def _validate(document) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigurationException('invalid config: %s' % _one_line(e)) from e


def parse(text: str) -> ExperimentConfig:
    try:
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigurationException('config is not valid JSON: %s' % e) from e
    return _validate(document)


def serialize(cfg: ExperimentConfig) -> str:
    return json.dumps(cfg.model_dump(mode='json', by_alias=True, exclude_none=True), indent=2, sort_keys=True)


def load(path: str) -> ExperimentConfig:
    try:
        with open(path, 'r') as f:
            return parse(f.read())
    except OSError as e:
        raise ConfigurationException('cannot read config %s: %s' % (path, e)) from e
