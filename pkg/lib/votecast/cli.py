"""
The ``votecast`` command-line program.

Usage::

    votecast <command> [options]

Commands:

    synth         write the two-candidate synthetic benchmark
                  (interactions.csv, polls.csv)
    validate      check the --interactions and/or --polls files
    describe      per-subject interaction statistics (describe.csv)
    grid          walk-forward errors of every feature set, window and model
                  (grid_<subject>.csv)
    forecast      predicted share of every subject at the final anchor
                  (forecast.csv, forecast_shares.csv)
    redistribute  allocate the undecided share of --shares proportionally
                  (redistributed.csv)
    scenario      round-two transfer scenarios of --scenario
                  (scenarios.csv, scenario_summary.csv)
    decompose     trend/seasonal/residual of each subject's daily poll share
                  (decompose_<subject>.csv)
    compare       errors of --shares against --actual (compare.csv)

Every configuration field can be given in a JSON file (--config) or as a
flag of the same name with dashes, e.g. ``--initial-train-fraction 0.7``.
Each run also writes ``run.json`` recording the command and the settings it
used; ``--deterministic`` leaves out its creation time.

Exit status is 0 on success, 1 when an input file fails validation and 2
for any other error.
"""
import argparse
import json
import logging
import os
import sys
from datetime import datetime, timezone

import numpy as np
from astropy.table import Table

from . import __version__
from . import arimax, evaluate, ingest, regressors, scenario, synth
from . import series as ser
from .config import FIELDS, ConfigError, load_config
from .logutil import LoggingExceptionHook, create_logger, level_for

__all__ = ['main', 'build_parser', 'COMMANDS']

log = logging.getLogger(__name__)

RUN_FILE = 'run.json'
DESCRIBE_COLUMNS = ('subject', 'platform', 'feature', 'count', 'min', 'max',
                    'mean', 'std')
FORECAST_COLUMNS = ('subject', 'anchor', 'predicted', 'last_poll',
                    'train_size', 'horizon')
DECOMPOSE_COLUMNS = ('date', 'observed', 'trend', 'seasonal', 'residual')
COMPARE_COLUMNS = ('subject', 'predicted', 'actual', 'error', 'abs_error')

# errors of the input data itself
_DATA_ERRORS = (ingest.IngestError,)
_RUN_ERRORS = (ConfigError, ser.SeriesError, regressors.RegressorError,
               arimax.ArimaxError, evaluate.EvaluationError,
               scenario.ScenarioError, synth.SynthError, OSError)


def _require(cfg, *names):
    missing = [n for n in names if not cfg[n]]
    if missing:
        raise ConfigError("Missing required setting(s): {}".format(
            ', '.join(missing)), missing)


def _output(cfg, name):
    os.makedirs(cfg.output_dir, exist_ok=True)
    return os.path.join(cfg.output_dir, name)


def _load_inputs(cfg):
    _require(cfg, 'interactions', 'polls')
    return ingest.parse_interactions(cfg.interactions), ingest.parse_polls(cfg.polls)


def _subjects(cfg, table, polls=None):
    if cfg.subjects:
        return list(cfg.subjects)
    if polls is None:
        return list(table.subjects)
    return [s for s in table.subjects if s in polls]


def do_synth(cfg):
    table, polls = synth.gen_benchmark(days=cfg.days, seed=cfg.seed,
                                       cadence=cfg.cadence,
                                       start=ser.day_from_iso(cfg.start_date))
    paths = _output(cfg, 'interactions.csv'), _output(cfg, 'polls.csv')
    ingest.write_interactions(table, paths[0])
    ingest.write_polls(polls, paths[1])
    log.info("Wrote %s and %s", *paths)
    return 0


def do_validate(cfg):
    if not (cfg.interactions or cfg.polls):
        raise ConfigError("validate needs --interactions and/or --polls",
                          ('interactions', 'polls'))
    if cfg.interactions:
        table = ingest.parse_interactions(cfg.interactions)
        log.info("%s: %d days, subjects %s", cfg.interactions, table.n_days,
                 ', '.join(table.subjects))
    if cfg.polls:
        polls = ingest.parse_polls(cfg.polls)
        for subject in polls.subjects:
            day, share = polls.latest(subject)
            log.info("%s: %s last polled %s at %.2f%%", cfg.polls, subject,
                     ser.days_to_iso([day])[0], share)
    return 0


def do_describe(cfg):
    _require(cfg, 'interactions')
    table = ingest.parse_interactions(cfg.interactions)
    rows = [row for subject in _subjects(cfg, table)
            for row in ingest.describe(table, subject).rows()]
    tab = Table(rows=rows, names=DESCRIBE_COLUMNS,
                dtype=[str, str, str, np.int64, float, float, float, float])
    path = _output(cfg, 'describe.csv')
    tab.write(path, format='ascii.csv', overwrite=True,
              formats={c: '%.4f' for c in ('min', 'max', 'mean', 'std')})
    log.info("Wrote %s (%d rows)", path, len(tab))
    return 0


def do_grid(cfg):
    table, polls = _load_inputs(cfg)
    for subject in _subjects(cfg, table, polls):
        grid = evaluate.run_grid(
            table, polls, subject, windows=cfg.windows,
            feature_sets=cfg.feature_set_list, models=cfg.model_map(),
            anchors=cfg.anchors, per_post=cfg.per_post,
            initial_train_fraction=cfg.initial_train_fraction,
            max_train_rows=cfg.max_train_rows, refit_every=cfg.refit_every,
            processes=cfg.processes)
        path = _output(cfg, 'grid_{}.csv'.format(ingest.safe_filename(subject)))
        grid.write(path)
        if len(grid):
            (fs, w, model), best = grid.best()
            log.info("%s: %d cells, best %s/w=%d/%s with MAE %.4f", subject,
                     len(grid), fs.value, w, model, best.mae)
        log.info("Wrote %s", path)
    return 0


def do_forecast(cfg):
    table, polls = _load_inputs(cfg)
    name, model = next(iter(cfg.model_map().items()))
    feature_set, window = cfg.feature_set_list[0], cfg.windows[0]
    log.info("Forecasting with %s/w=%d/%s", feature_set.value, window, name)
    results = []
    for subject in _subjects(cfg, table, polls):
        dataset = ingest.assemble_dataset(table, polls, subject, feature_set,
                                          window, cfg.anchors, cfg.per_post)
        results.append(evaluate.forecast_final(dataset, model, cfg.max_train_rows,
                                               cfg.processes))

    tab = Table([[r.subject for r in results],
                 ser.days_to_iso([r.anchor for r in results]),
                 [r.predicted for r in results], [r.last_poll for r in results],
                 [r.train_size for r in results], [r.horizon for r in results]],
                names=FORECAST_COLUMNS,
                dtype=[str, str, float, float, np.int64, np.int64])
    path = _output(cfg, 'forecast.csv')
    tab.write(path, format='ascii.csv', overwrite=True,
              formats={'predicted': '%.6f', 'last_poll': '%.6f'})
    log.info("Wrote %s", path)
    try:
        shares = scenario.ShareVector({r.subject: r.predicted for r in results})
    except scenario.ScenarioError as err:
        log.warning("Predicted shares are not a valid share vector: %s", err)
    else:
        scenario.write_shares(shares, _output(cfg, 'forecast_shares.csv'))
    return 0


def do_redistribute(cfg):
    _require(cfg, 'shares')
    result = scenario.redistribute_undecided(scenario.read_shares(cfg.shares))
    path = _output(cfg, 'redistributed.csv')
    scenario.write_shares(result, path, decimals=1)
    for subject, share in scenario.round_report(result.shares).items():
        log.info("%s: %.1f", subject, share)
    return 0


def do_scenario(cfg):
    _require(cfg, 'scenario')
    base, finalists, rules = scenario.load_scenarios(
        cfg.scenario, builtin=True if cfg.builtin else None)
    results = [scenario.apply_scenario(base, rule, finalists) for rule in rules]
    summary = scenario.summarize(results, cfg.labels or None)
    paths = _output(cfg, 'scenarios.csv'), _output(cfg, 'scenario_summary.csv')
    scenario.write_results(results, paths[0])
    scenario.write_summary(summary, paths[1])
    for subject, stats in summary.items():
        low, high = scenario.round_report([stats.min]), scenario.round_report([stats.max])
        log.info("%s: between %.1f and %.1f", subject, low[0], high[0])
    log.info("Wrote %s and %s", *paths)
    return 0


def do_decompose(cfg):
    _require(cfg, 'polls')
    polls = ingest.parse_polls(cfg.polls)
    subjects = list(cfg.subjects) if cfg.subjects else list(polls.subjects)
    for subject in subjects:
        daily = ser.interpolate_daily(polls.observations(subject))
        parts = ser.decompose(daily, cfg.period)
        tab = Table([ser.days_to_iso(daily.days), parts.observed, parts.trend,
                     parts.seasonal, parts.residual], names=DECOMPOSE_COLUMNS)
        path = _output(cfg, 'decompose_{}.csv'.format(ingest.safe_filename(subject)))
        tab.write(path, format='ascii.csv', overwrite=True,
                  formats={c: '%.6f' for c in DECOMPOSE_COLUMNS[1:]})
        log.info("Wrote %s", path)
    return 0


def do_compare(cfg):
    _require(cfg, 'shares', 'actual')
    result = scenario.compare_outcome(scenario.read_shares(cfg.shares),
                                      scenario.read_shares(cfg.actual))
    tab = Table(rows=list(result.rows), names=COMPARE_COLUMNS,
                dtype=[str, float, float, float, float])
    path = _output(cfg, 'compare.csv')
    tab.write(path, format='ascii.csv', overwrite=True,
              formats={c: '%.4f' for c in COMPARE_COLUMNS[1:]})
    log.info("MAE %.4f over %d subjects; wrote %s", result.mae, len(tab), path)
    return 0


COMMANDS = {
    'synth': do_synth,
    'validate': do_validate,
    'describe': do_describe,
    'grid': do_grid,
    'forecast': do_forecast,
    'redistribute': do_redistribute,
    'scenario': do_scenario,
    'decompose': do_decompose,
    'compare': do_compare,
}

HELP = {
    'synth': 'write the synthetic benchmark inputs',
    'validate': 'check input files',
    'describe': 'interaction statistics per subject',
    'grid': 'walk-forward error grid per subject',
    'forecast': 'final-anchor share forecasts (first configured feature set, window and model)',
    'redistribute': 'allocate undecided voters proportionally',
    'scenario': 'round-two transfer scenarios',
    'decompose': 'seasonal decomposition of daily poll shares',
    'compare': 'errors of predicted against actual shares',
}


def _flag(name):
    return '--' + name.replace('_', '-')


def _config_options():
    """Parent parser with one flag per configuration field."""
    opts = argparse.ArgumentParser(add_help=False)
    group = opts.add_argument_group('settings')
    lists = {'subjects': str, 'windows': int, 'labels': str}
    choices = {'feature_sets': [fs.value for fs in ingest.FeatureSet],
               'models': list(evaluate.MODEL_NAMES)}
    ints = {'max_train_rows', 'refit_every', 'seed', 'processes', 'forest_trees',
            'forest_depth', 'forest_min_leaf', 'boosting_stages',
            'boosting_depth', 'boosting_min_leaf', 'arima_p', 'arima_d',
            'arima_q', 'days', 'cadence', 'period'}
    floats = {'initial_train_fraction', 'boosting_learning_rate'}
    switches = {'per_post', 'deterministic', 'builtin'}
    for name in FIELDS:
        if name in lists:
            group.add_argument(_flag(name), dest=name, nargs='+', type=lists[name])
        elif name in choices:
            group.add_argument(_flag(name), dest=name, nargs='+',
                               choices=choices[name])
        elif name in switches:
            group.add_argument(_flag(name), dest=name, action='store_true',
                               default=None)
        elif name == 'forest_bootstrap':
            group.add_argument('--no-forest-bootstrap', dest=name,
                               action='store_false', default=None)
        elif name == 'anchors':
            group.add_argument(_flag(name), dest=name,
                               choices=[ser.TUMBLING, ser.ROLLING])
        elif name == 'arima_method':
            group.add_argument(_flag(name), dest=name, choices=['profile', 'joint'])
        else:
            kind = int if name in ints else float if name in floats else str
            group.add_argument(_flag(name), dest=name, type=kind)
    return opts


def build_parser():
    parser = argparse.ArgumentParser(
        prog='votecast', description='Vote-share forecasting from social media '
        'interactions and opinion polls.')
    parser.add_argument('--version', action='version',
                        version='%(prog)s {}'.format(__version__))

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON configuration file')
    common.add_argument('-v', '--verbose', action='store_true',
                        help='log progress at DEBUG level')
    common.add_argument('-q', '--quiet', action='store_true',
                        help='log warnings and errors only')
    common.add_argument('--log-file', help='also write the log to this file')

    settings = _config_options()
    sub = parser.add_subparsers(dest='command', metavar='command')
    sub.required = True
    for name in COMMANDS:
        sub.add_parser(name, parents=[common, settings], help=HELP[name])
    return parser


def _write_run_file(cfg, command):
    record = {'command': command, 'version': __version__,
              'settings': dict(sorted(cfg.items()))}
    if not cfg.deterministic:
        record['created'] = datetime.now(timezone.utc).isoformat(timespec='seconds')
    with open(_output(cfg, RUN_FILE), 'w', encoding='utf-8') as fh:
        json.dump(record, fh, indent=2)
        fh.write('\n')


def main(argv=None):
    args = build_parser().parse_args(argv)
    logger = create_logger('votecast', stream=sys.stderr,
                           level=level_for(args.verbose, args.quiet),
                           filename=args.log_file)
    hook = None
    if args.log_file:
        hook = LoggingExceptionHook(logger)
        sys.excepthook = hook

    try:
        cfg = load_config(args.config,
                          {name: getattr(args, name) for name in FIELDS})
        status = COMMANDS[args.command](cfg)
        _write_run_file(cfg, args.command)
    except _DATA_ERRORS as err:
        log.error("%s", err)
        return 1
    except _RUN_ERRORS as err:
        log.error("%s", err)
        return 2
    finally:
        if hook is not None:
            sys.excepthook = hook._oldexcepthook
    return status


if __name__ == '__main__':
    sys.exit(main())
