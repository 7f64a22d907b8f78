from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from fluidmatch.application.exceptions import ConfigurationException, FeasibilityException, StructureException
from fluidmatch.application.logging_factory import Logger
from fluidmatch.application.schema import ExperimentConfig
from fluidmatch.model.fluid import invariant_state
from fluidmatch.model.network import MatchingRates, Network
from fluidmatch.optimization.priority import PrioritySets, build_priority_sets
from fluidmatch.optimization.solver import MpSolution, solve_mp, upper_bound
from fluidmatch.simulation.engine import ArrivalKind
from fluidmatch.simulation.policies import PolicyKind
from fluidmatch.simulation.simulator import SimConfig
from fluidmatch.simulation.sweep import SweepCell


@dataclass(frozen=True, eq=False)
class Variant:
    """
    One instance of a sweep: the configured network under a patience parameterization and a
    supply-rate override.
    """
    distribution: str
    net: Network
    mu: Optional[Sequence[float]] = None


@dataclass(frozen=True, eq=False)
class Prepared:
    variant: Variant
    solution: MpSolution
    rates: MatchingRates
    sets: Optional[PrioritySets]
    bound: float
    fluid_queues: tuple


def build_variants(cfg: ExperimentConfig) -> List[Variant]:
    if cfg.instance is None:
        raise ConfigurationException('the experiment needs an instance')
    variants = []
    for patience in cfg.patience_variants():
        for mu in cfg.mu_variants():
            variants.append(Variant(
                distribution=patience.name if patience else 'instance',
                net=cfg.instance.build(patience and patience.patience, mu),
                mu=mu
            ))
    return variants


def complete_sets(net: Network, record) -> PrioritySets:
    """
    Priority sets from 1-based config edges; edges left out form the trailing zero-rate set.
    """
    ranked = [tuple((j - 1, k - 1) for j, k in edges) for edges in record]
    listed = {edge for edges in ranked for edge in edges}
    ranked.append(tuple(edge for edge in net.edges if edge not in listed))
    try:
        return PrioritySets(sets=tuple(ranked)).validate(net)
    except StructureException as e:
        raise ConfigurationException('invalid priority sets: %s' % e) from e


def prepare(cfg: ExperimentConfig, variant: Variant, need_sets=False) -> Prepared:
    net = variant.net
    solution = solve_mp(net, seed=cfg.seed)
    if cfg.rates is not None:
        rates = MatchingRates(np.asarray(cfg.rates, dtype=float))
        try:
            rates.ensure_feasible(net)
        except FeasibilityException as e:
            raise ConfigurationException('configured rates are infeasible: %s' % e) from e
    else:
        rates = solution.m_star
    sets = None
    if cfg.sets is not None:
        sets = complete_sets(net, cfg.sets)
    elif need_sets:
        if not solution.is_extreme_point:
            raise ConfigurationException(
                'the priority policy needs an extreme-point solution, %s returned an interior point' %
                solution.solver_used.value
            )
        sets = build_priority_sets(net, solution.m_star)
    state = invariant_state(net, rates)
    prepared = Prepared(
        variant=variant,
        solution=solution,
        rates=rates,
        sets=sets,
        bound=upper_bound(net, solution),
        fluid_queues=(float(state.q_star.sum()), float(state.i_star.sum()))
    )
    Logger.root.debug('prepared %s: bound %.6g, fluid queues %s', variant.distribution, prepared.bound,
                      prepared.fluid_queues)
    return prepared


def sim_config(cfg: ExperimentConfig, prepared: Prepared, n: int, l: float, policy: str, seed: int,
               record_trajectory=False) -> SimConfig:
    kind = PolicyKind(policy)
    return SimConfig(
        net=prepared.variant.net,
        n=n,
        review_base=l,
        horizon=cfg.horizon,
        policy=kind,
        review_exponent=cfg.delta,
        rates=prepared.rates if kind is PolicyKind.MATCHING_RATE else None,
        sets=prepared.sets if kind is PolicyKind.PRIORITY else None,
        arrival_kind=ArrivalKind(cfg.arrival),
        erlang_k=cfg.erlang_k,
        seed=seed,
        record_trajectory=record_trajectory,
        track_rates=prepared.rates
    )


def build_cells(cfg: ExperimentConfig, prepared: Sequence[Prepared]) -> List[SweepCell]:
    """
    One cell per (variant, n, l, policy), each replicated with seeds seed, seed+1, ...
    """
    cells = []
    index = 0
    for p in prepared:
        for n in cfg.sweep.n:
            for l in cfg.sweep.l:
                for policy in cfg.sweep.policy:
                    for r in range(cfg.replications):
                        cells.append(SweepCell(
                            index=index,
                            experiment=cfg.name,
                            distribution=p.variant.distribution,
                            replication=r,
                            config=sim_config(cfg, p, n, l, policy, cfg.seed + r),
                            bound=p.bound,
                            fluid_queues=p.fluid_queues
                        ))
                    index += 1
    return cells


def build_prepared(cfg: ExperimentConfig) -> List[Prepared]:
    need_sets = 'priority' in cfg.sweep.policy
    return [prepare(cfg, variant, need_sets) for variant in build_variants(cfg)]
