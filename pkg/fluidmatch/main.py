import sys
from typing import Dict, List, Optional, TextIO

import numpy as np

from fluidmatch.application import tools
from fluidmatch.application.context import Context
from fluidmatch.application.exceptions import ConfigurationException
from fluidmatch.application.logging_factory import Logger
from fluidmatch.application.schema import ExperimentConfig
from fluidmatch.builder import build_cells, build_prepared, build_variants, prepare, sim_config
from fluidmatch.model.fluid import fluid_trajectory, reneging_fractions
from fluidmatch.optimization.priority import build_priority_sets
from fluidmatch.optimization.solver import solve_lp_value_only
from fluidmatch.oracle import markov, validation
from fluidmatch.simulation.simulator import ReplicationSummary, run
from fluidmatch.simulation.sweep import OrderedSink, SweepReactor

SOLVE_COLUMNS = ['distribution', 'mu', 'solver_used', 'objective', 'bound', 'is_extreme_point', 'global_optimum',
                 'priority_edges', 'm_star']
SETS_COLUMNS = ['distribution', 'mu', 'set', 'edges']
CHECK_COLUMNS = ['suite', 'check', 'passed', 'gap', 'tolerance', 'detail']
MARKOV_COLUMNS = ['theta', 'n', 'EQ_over_n', 'EI_over_n', 'q_star', 'i_star', 'gap']


def _mu_label(mu) -> Optional[str]:
    return mu and ' '.join('%g' % x for x in mu)


def _edges(edges) -> str:
    return ' '.join('(%s,%s)' % (j + 1, k + 1) for j, k in edges)


def run_solve(cfg: ExperimentConfig, human: TextIO = sys.stdout) -> List[Dict]:
    rows = []
    trajectories = []
    header = None
    for p in (prepare(cfg, variant, need_sets=False) for variant in build_variants(cfg)):
        solution = p.solution
        sets = None
        if solution.is_extreme_point:
            sets = build_priority_sets(p.variant.net, solution.m_star)
        human.write('== %s%s ==\n' % (p.variant.distribution, p.variant.mu and ' mu=%s' % _mu_label(p.variant.mu) or ''))
        human.write('solver: %s, objective: %.9g, extreme point: %s%s\n' % (
            solution.solver_used.value, solution.objective, solution.is_extreme_point,
            '' if solution.global_optimum else ' (no global guarantee)'))
        human.write('\n'.join(tools.format_matrix(solution.m_star.m)) + '\n')
        if sets is not None:
            human.write('priority edges: %s\n' % _edges(sets.first))
        rows.append({
            'distribution': p.variant.distribution,
            'mu': _mu_label(p.variant.mu),
            'solver_used': solution.solver_used.value,
            'objective': solution.objective,
            'bound': p.bound,
            'is_extreme_point': solution.is_extreme_point,
            'global_optimum': solution.global_optimum,
            'priority_edges': sets and _edges(sets.first),
            'm_star': ';'.join(' '.join('%.12g' % x for x in row) for row in solution.m_star.m),
        })
        if cfg.trajectory_out:
            fluid = fluid_trajectory(p.variant.net, solution.m_star, cfg.horizon, record_every=10)
            header = ['distribution', 'mu'] + fluid.header
            trajectories.extend([p.variant.distribution, _mu_label(p.variant.mu)] + t for t in fluid.rows())
    if header:
        with tools.open_output(cfg.trajectory_out) as f:
            tools.write_rows(f, header, (dict(zip(header, t)) for t in trajectories))
    return rows


def run_priority_sets(cfg: ExperimentConfig, human: TextIO = sys.stdout) -> List[Dict]:
    rows = []
    for p in (prepare(cfg, variant, need_sets=True) for variant in build_variants(cfg)):
        human.write('== %s ==\n%s\n' % (p.variant.distribution, p.sets))
        for h, edges in enumerate(p.sets.sets):
            rows.append({
                'distribution': p.variant.distribution,
                'mu': _mu_label(p.variant.mu),
                'set': h,
                'edges': _edges(edges),
            })
    return rows


def run_simulate(cfg: ExperimentConfig) -> List[Dict]:
    rows = []
    trajectories = []
    for p in build_prepared(cfg):
        for n in cfg.sweep.n:
            for l in cfg.sweep.l:
                for policy in cfg.sweep.policy:
                    summary = ReplicationSummary()
                    for r in range(cfg.replications):
                        sim = sim_config(cfg, p, n, l, policy, cfg.seed + r,
                                         record_trajectory=bool(cfg.trajectory_out))
                        result = run(sim)
                        summary.runs.append(result)
                        row = result.to_row()
                        row.update({
                            'distribution': p.variant.distribution,
                            'mu': _mu_label(p.variant.mu),
                            'l': l,
                            'replication': r,
                            'bound': p.bound,
                            'ratio': result.ratio(p.bound) if p.bound else None,
                            'flow_balanced': result.flow_balanced(),
                        })
                        rows.append(row)
                        if result.trajectory is not None:
                            trajectories.extend(
                                [p.variant.distribution, n, l, policy, r] + t for t in result.trajectory
                            )
                    Logger.simulator.info(
                        '%s n=%s l=%s %s: objective %.6g +- %.3g over %s runs', p.variant.distribution, n, l,
                        policy, summary.mean('objective'), summary.stderr('objective'), len(summary.runs)
                    )
    if cfg.trajectory_out:
        net = build_variants(cfg)[0].net
        header = ['distribution', 'n', 'l', 'policy', 'replication', 't'] + \
            ['Q%s' % (j + 1) for j in range(net.J)] + ['I%s' % (k + 1) for k in range(net.K)]
        with tools.open_output(cfg.trajectory_out) as f:
            tools.write_rows(f, header, (dict(zip(header, t)) for t in trajectories))
    return rows


def run_sweep(cfg: ExperimentConfig, ctx: Context, stream: TextIO, executor=None, repository=None) -> List[Dict]:
    cells = build_cells(cfg, build_prepared(cfg))
    sink = OrderedSink(stream=stream, repository=repository)
    reactor = SweepReactor(cells, sink, jobs=ctx.jobs, cell_timeout=ctx.cell_timeout, executor=executor)
    rows = tools.run_until_complete(reactor.start())
    if reactor.failures:
        Logger.sweep.warning('%s of %s runs failed', reactor.failures, len(cells))
    return rows


def reneging_table(cfg: ExperimentConfig, rows: List[Dict]) -> List[Dict]:
    """
    Reneging fractions per supply rate and patience law, averaged over replications, with the
    fluid fractions of the zero-cost solution next to them.
    """
    names = [v.name for v in cfg.sweep.patience] or ['instance']
    table = []
    for mu in cfg.mu_variants():
        label = _mu_label(mu) or _mu_label(cfg.instance.mu)
        entry = {'mu': label}
        for name in names:
            selected = [r for r in rows if r['distribution'] == name and r['mu'] == label and r['status'] == 'ok']
            for side in ('demand', 'supply'):
                values = [r['reneging_fraction_%s' % side] for r in selected]
                entry['%s_%s' % (side, name)] = float(np.mean(values)) if values else None
        net = cfg.instance.build(None, mu).without_costs()
        demand, supply = reneging_fractions(net, solve_lp_value_only(net))
        entry['fluid_demand'] = float(np.sum(demand * net.lam) / np.sum(net.lam))
        entry['fluid_supply'] = float(np.sum(supply * net.mu) / np.sum(net.mu))
        table.append(entry)
    return table


def reneging_table_columns(cfg: ExperimentConfig) -> List[str]:
    names = [v.name for v in cfg.sweep.patience] or ['instance']
    return ['mu'] + ['%s_%s' % (side, name) for side in ('demand', 'supply') for name in names] + \
        ['fluid_demand', 'fluid_supply']


def run_validate(cfg: ExperimentConfig, suite: str, stream: TextIO, human: TextIO = sys.stdout) -> bool:
    if suite == 'convergence':
        if cfg.instance is None:
            raise ConfigurationException('the convergence suite needs an instance')
        net = build_variants(cfg)[0].net
        checks = validation.run_suite(suite, net=net, ns=tuple(cfg.sweep.n), horizon=cfg.horizon,
                                      seeds=cfg.replications, review_base=cfg.sweep.l[0], seed=cfg.seed)
    elif suite == 'markov':
        spec = cfg.markov
        checks = validation.run_suite(suite, ns=tuple(spec.n))
        rows = []
        for theta in spec.theta:
            for row in markov.convergence_rows(markov.BirthDeathSpec(spec.lam, spec.mu, theta), list(spec.n)):
                row['theta'] = theta
                rows.append(row)
        tools.write_rows(stream, MARKOV_COLUMNS, rows)
    else:
        checks = validation.run_suite(suite, seed=cfg.seed)
    for check in checks:
        human.write('%s\n' % check)
    if suite != 'markov':
        tools.write_rows(stream, CHECK_COLUMNS, (c.to_row() for c in checks))
    return all(c.passed for c in checks)


def run_experiment(cfg: ExperimentConfig, ctx: Context, executor=None) -> int:
    """
    Runs the configured experiment and writes its CSV output. Returns the exit status.
    """
    Logger.cli.info('running %s (%s)', cfg.experiment, cfg.name)
    # CSV owns stdout when no output path is given
    human = sys.stdout if cfg.out else sys.stderr
    if cfg.experiment == 'validate':
        with tools.open_output(cfg.out) as stream:
            return 0 if run_validate(cfg, cfg.suite or 'invariants', stream, human=human) else 1
    if cfg.experiment == 'solve':
        rows, columns = run_solve(cfg, human=human), SOLVE_COLUMNS
    elif cfg.experiment == 'priority-sets':
        rows, columns = run_priority_sets(cfg, human=human), SETS_COLUMNS
    elif cfg.experiment == 'simulate':
        rows = run_simulate(cfg)
        columns = list(rows[0]) if rows else []
    elif cfg.experiment == 'sweep':
        repository = None
        if ctx.db:
            from fluidmatch.repositories.results_repository import ResultsSQLiteRepository
            repository = ResultsSQLiteRepository.instance(ctx.db)
        try:
            with tools.open_output(cfg.out) as stream:
                rows = run_sweep(cfg, ctx, stream, executor=executor, repository=repository)
        finally:
            repository and repository.close()
        if cfg.layout == 'reneging':
            with tools.open_output(cfg.summary_out) as stream:
                tools.write_rows(stream, reneging_table_columns(cfg), reneging_table(cfg, rows))
        return 0 if all(r['status'] == 'ok' for r in rows) else 1
    else:
        raise ConfigurationException('unknown experiment: %s' % cfg.experiment)
    with tools.open_output(cfg.out) as stream:
        tools.write_rows(stream, columns, rows)
    return 0
