"""The ``rdmc`` command line interface."""
from __future__ import annotations

import json
import logging
import os
import sys
from argparse import ArgumentParser, Namespace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import anyio
import numpy as np

from . import __version__
from .attacks import AttackSpec, forge_profiles, select_target
from .enums import AttackScheme, DataFormat, Design, Missingness, TargetMode
from .exceptions import ConfigurationError
from .experiment import DIAGNOSTIC_FIELDS, RECORD_FIELDS, Experiment, ExperimentConfig
from .io import (
    DatasetDescriptor, RatingData, read_array, read_dataset, read_dense, write_dense)
from .losses import LOSS_NAMES, create_loss
from .methods import METHOD_NAMES, create_method
from .metrics import mae, mps
from .policies import StoppingPolicy
from .ratings import split_train_test
from .runners.async_ import AsyncExperimentRunner
from .runners.sync import ExperimentRunner
from .selection import fit_selected
from .serializers.json import JSONSerializer
from .simulation import RecommenderSimConfig, SurveySimConfig, gen_recommender, gen_survey
from .sinks.csv import CSVSink
from .summary import summarize
from .util import Stopwatch, spawn_seeds

logger = logging.getLogger(__name__)

DENSE_FORMAT = 'dense'
FIT_DIAGNOSTIC_FIELDS = ('phase', 'holdout', 'lambda', 'iterations', 'converged', 'final_loss',
                         'wall_time_ms')
RESERVED_OPTIONS = frozenset({'command', 'config', 'handler'})


def _output_dir(args: Namespace) -> Path:
    path = Path(args.out or '.')
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_meta(path: Path, meta: Dict[str, Any]) -> None:
    serializer = JSONSerializer(dump_options={'indent': 2, 'sort_keys': True})
    path.write_text(serializer.serialize_to_unicode(meta) + '\n', encoding='utf-8')


def _read_json(path: str) -> Dict[str, Any]:
    try:
        with open(path, encoding='utf-8') as fp:
            mapping = json.load(fp)
    except ValueError as exc:
        raise ConfigurationError(f'{path}: {exc}') from exc

    if not isinstance(mapping, dict):
        raise ConfigurationError(f'{path}: expected a JSON object at the top level')

    return mapping


def _load_data(args: Namespace) -> RatingData:
    if args.format == DENSE_FORMAT:
        matrix = read_dense(args.input, args.categories)
        return RatingData(matrix, np.arange(matrix.n), np.arange(matrix.p))

    return read_dataset(DatasetDescriptor(
        path=args.input, format=args.format, min_ratings=args.min_ratings,
        min_user_ratings=args.min_user_ratings, delimiter=args.delimiter,
        n_categories=args.categories, intersect_with=args.intersect_users))


#
# Subcommands
#

def simulate_command(args: Namespace) -> int:
    design = Design(args.design)
    if design is Design.survey:
        config = SurveySimConfig(n=args.n, constructs=args.constructs,
                                 items_per_construct=args.items_per_construct,
                                 n_categories=args.categories or 5,
                                 abandonment=args.abandonment, careless=args.careless)
        truth = gen_survey(config, args.seed)
    else:
        config = RecommenderSimConfig(n=args.n, p=args.p, rank=args.rank,
                                      n_categories=args.categories or 5,
                                      missingness=args.missingness,
                                      mcar_fraction=args.mcar_fraction)
        truth = gen_recommender(config, args.seed)

    out = _output_dir(args)
    write_dense(out / 'observed.csv', truth.observed)
    write_dense(out / 'truth.csv', truth.full)
    _write_meta(out / 'meta.json', {
        'command': 'simulate', 'version': __version__, 'design': design, 'seed': args.seed,
        'config': config, 'n_categories': truth.n_categories, 'shifts': truth.shifts,
        's_max': truth.s_max, 'careless_rows': truth.careless_rows,
        'permutation': truth.permutation, 'constructs': truth.constructs,
        'reverse_keyed': truth.reverse_keyed})
    logger.info('Wrote a %dx%d %s data set with %d observed ratings to %s', truth.observed.n,
                truth.observed.p, design.value, truth.observed.nnz, out)
    return 0


def fit_command(args: Namespace) -> int:
    data = _load_data(args)
    matrix = data.matrix
    loss = create_loss(args.loss, args.tau, matrix.scale.max_categories)
    method = create_method(args.method, loss=loss, stopping=args.stopping, seed=args.seed)
    split_seed, selection_seed = spawn_seeds(args.seed, 2)

    train, test = matrix, None
    if args.test_fraction:
        split = split_train_test(matrix, args.test_fraction, split_seed)
        train, test = split.train, split.test

    report = None
    with Stopwatch() as stopwatch:
        if args.lambda_ is not None and method.tunable:
            fit = method.fit(train, args.lambda_)
        else:
            fit, report = fit_selected(method, train, args.holdout_replications,
                                       args.holdout_fraction, selection_seed,
                                       max_workers=args.threads)

    out = _output_dir(args)
    write_dense(out / 'predictions.csv', fit.predictions)
    with CSVSink(out / 'diagnostics.csv', FIT_DIAGNOSTIC_FIELDS) as sink:
        if report is not None:
            sink.write_all({'phase': 'validation', 'holdout': record['replication'],
                            **_diagnostic_columns(record)}
                           for record in report.diagnostic_records())
        if fit.diagnostics is not None:
            sink.write({'phase': 'final', 'holdout': None,
                        **_diagnostic_columns(fit.diagnostics.as_record())})

    meta: Dict[str, Any] = {
        'command': 'fit', 'version': __version__, 'method': method.name, 'seed': args.seed,
        'lambda': fit.lambda_, 'wall_time_ms': stopwatch.elapsed_ms, 'ids': data.id_mapping()}
    if method.validation_loss is not None:
        meta['validation_loss'] = method.validation_loss
    if report is not None:
        meta['validation'] = {'lambdas': report.lambdas, 'mean_losses': report.mean_losses,
                              'replications': report.replications}
    if test is not None:
        meta['test_mae'] = mae(test.to_dense(), fit.predictions, (test.rows, test.cols))
        meta['test_entries'] = test.nnz
        print(f'{method.name}: test MAE {meta["test_mae"]:.4f} on {test.nnz} ratings')

    _write_meta(out / 'meta.json', meta)
    return 0


def _diagnostic_columns(record: Dict[str, Any]) -> Dict[str, Any]:
    return {key: record[key] for key in FIT_DIAGNOSTIC_FIELDS if key in record}


def attack_command(args: Namespace) -> int:
    data = _load_data(args)
    matrix = data.matrix
    if args.target is None:
        target = select_target(matrix, TargetMode.empirical, args.top_fraction)
    else:
        target = args.target

    spec = AttackSpec(scheme=args.scheme, epsilon=args.epsilon,
                      filler_fraction=args.filler_fraction,
                      selected_fraction=args.selected_fraction,
                      unpopular_threshold=args.unpopular_threshold)
    result = forge_profiles(matrix, target, spec, args.seed)

    out = _output_dir(args)
    write_dense(out / 'attacked.csv', result.matrix)
    _write_meta(out / 'meta.json', {
        'command': 'attack', 'version': __version__, 'seed': args.seed, 'attack': spec,
        'target': result.target, 'target_id': data.item_ids[result.target],
        'n_fake': result.n_fake, 'original_rows': result.original_rows,
        'selected_columns': result.selected_columns})
    print(f'Injected {result.n_fake} {spec.scheme.value} profiles against item {target}')
    return 0


def evaluate_command(args: Namespace) -> int:
    observed = read_dense(args.observed)
    predictions = read_array(args.predictions)
    if args.before is not None:
        if args.target is None:
            raise ConfigurationError('--target is required together with --before')

        rows = np.ones(observed.n, dtype=bool)
        rows[observed.column(args.target)[0]] = False
        value = mps(read_array(args.before), predictions, args.target, np.flatnonzero(rows))
        result = {'metric': 'mps', 'value': value, 'cells': int(rows.sum())}
    else:
        if args.truth is None:
            raise ConfigurationError('Either --truth or --before is required')

        missing = ~observed.mask()
        if args.meta:
            careless = _read_json(args.meta).get('careless_rows') or []
            missing[sorted(careless), :] = False

        cells = np.nonzero(missing)
        value = mae(read_array(args.truth), predictions, cells)
        result = {'metric': 'mae', 'value': value, 'cells': int(cells[0].size)}

    print(json.dumps(result))
    return 0


def experiment_command(args: Namespace) -> int:
    if not args.config:
        raise ConfigurationError('The experiment command needs --config')

    mapping = _read_json(args.config)
    if args.seed is not None:
        mapping['seed'] = args.seed
    if args.replications is not None:
        mapping['replications'] = args.replications

    config = ExperimentConfig.from_mapping(mapping)
    out = _output_dir(args)
    experiment = Experiment(config)
    sink = CSVSink(out / 'records.csv', RECORD_FIELDS)
    diagnostics_sink = CSVSink(out / 'diagnostics.csv', DIAGNOSTIC_FIELDS)
    if args.use_async:
        runner = AsyncExperimentRunner(experiment, sink, diagnostics_sink=diagnostics_sink,
                                       max_workers=args.threads)
        summary = anyio.run(runner.run)
    else:
        summary = ExperimentRunner(experiment, sink, diagnostics_sink=diagnostics_sink,
                                   max_workers=args.threads).run()

    meta: Dict[str, Any] = {'command': 'experiment', 'version': __version__,
                            'config': config.to_mapping(), 'jobs': summary.total,
                            'completed': summary.completed, 'failed': summary.failed,
                            'records': summary.records}
    if experiment.data is not None:
        meta['ids'] = experiment.data.id_mapping()

    _write_meta(out / 'meta.json', meta)
    print(f'{summary.completed} of {summary.total} jobs completed, {summary.records} records '
          f'written to {out / "records.csv"}')
    return 0


def summarize_command(args: Namespace) -> int:
    by = [column.strip() for column in args.by.split(',')] if args.by else None
    summary = summarize(args.records, by)
    if args.out:
        summary.to_csv(_output_dir(args) / 'summary.csv', index=False)
    else:
        summary.to_csv(sys.stdout, index=False)

    return 0


#
# Argument parsing
#

def _add_data_arguments(parser: ArgumentParser) -> None:
    parser.add_argument('input', help='rating file')
    parser.add_argument('--format', default=DENSE_FORMAT,
                        choices=[DENSE_FORMAT] + [item.value for item in DataFormat],
                        help='input format (default: %(default)s)')
    parser.add_argument('--categories', type=int,
                        help='number of rating categories (default: the largest rating)')
    parser.add_argument('--min-ratings', type=int, default=0,
                        help='drop items with fewer ratings')
    parser.add_argument('--min-user-ratings', type=int, default=0,
                        help='drop users with fewer ratings')
    parser.add_argument('--delimiter', default=',', help='field separator of long CSV files')
    parser.add_argument('--intersect-users', metavar='PATH',
                        help='keep only the users that also appear in this file')


def build_parser(defaults: Optional[Dict[str, Any]] = None) -> ArgumentParser:
    """
    Build the argument parser.

    :param defaults: option defaults applied to every subcommand
    """
    common = ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, help='seed of all random choices')
    common.add_argument('--threads', type=int, default=os.cpu_count() or 1,
                        help='number of worker threads (default: number of CPUs)')
    common.add_argument('--config', metavar='FILE',
                        help='JSON file with the experiment configuration, or with option '
                             'defaults for the other commands')
    common.add_argument('--out', metavar='DIR', help='output directory')
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument('-v', '--verbose', action='store_true', help='log debug messages')
    verbosity.add_argument('-q', '--quiet', action='store_true', help='log only warnings')

    parser = ArgumentParser(prog='rdmc', description='Robust discrete matrix completion')
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')
    subparsers = parser.add_subparsers(dest='command', metavar='command')
    subparsers.required = True

    simulate = subparsers.add_parser('simulate', parents=[common],
                                     help='generate a simulated data set')
    simulate.add_argument('--design', default='recommender', choices=['recommender', 'survey'])
    simulate.add_argument('--n', type=int, default=300, help='number of rows')
    simulate.add_argument('--p', type=int, default=200, help='number of items (recommender)')
    simulate.add_argument('--rank', type=int, default=20, help='rank of the latent signal')
    simulate.add_argument('--categories', type=int, help='number of rating categories')
    simulate.add_argument('--missingness', default=Missingness.mnar.value,
                          choices=[item.value for item in Missingness])
    simulate.add_argument('--mcar-fraction', type=float, default=0.7)
    simulate.add_argument('--constructs', type=int, default=10)
    simulate.add_argument('--items-per-construct', type=int, default=4)
    simulate.add_argument('--abandonment', type=float, default=0.2)
    simulate.add_argument('--careless', type=float, default=0.0)
    simulate.set_defaults(handler=simulate_command)

    fit = subparsers.add_parser('fit', parents=[common], help='complete a rating matrix')
    _add_data_arguments(fit)
    fit.add_argument('--method', default='rdmc', help=f'one of {", ".join(METHOD_NAMES)} or a '
                                                      f'module:factory reference')
    fit.add_argument('--loss', default='phuber', choices=LOSS_NAMES)
    fit.add_argument('--tau', type=float, help='scale parameter of the loss')
    fit.add_argument('--stopping', default=StoppingPolicy.strict.value,
                     choices=[item.value for item in StoppingPolicy])
    fit.add_argument('--lambda', dest='lambda_', type=float,
                     help='regularization parameter (selected by holdout validation if omitted)')
    fit.add_argument('--holdout-replications', type=int, default=10)
    fit.add_argument('--holdout-fraction', type=float, default=0.1)
    fit.add_argument('--test-fraction', type=float,
                     help='hold out this share of the ratings and report the test MAE')
    fit.set_defaults(handler=fit_command)

    attack = subparsers.add_parser('attack', parents=[common],
                                   help='inject fake profiles against an item')
    _add_data_arguments(attack)
    attack.add_argument('--scheme', default=AttackScheme.average.value,
                        choices=[item.value for item in AttackScheme
                                 if item is not AttackScheme.none])
    attack.add_argument('--epsilon', type=float, default=0.2,
                        help='fake profiles per observed rating of the target')
    attack.add_argument('--target', type=int,
                        help='target column (default: the best rated of the most rated items)')
    attack.add_argument('--top-fraction', type=float, default=0.1)
    attack.add_argument('--filler-fraction', type=float, default=0.1)
    attack.add_argument('--selected-fraction', type=float, default=0.1)
    attack.add_argument('--unpopular-threshold', type=int, default=20)
    attack.set_defaults(handler=attack_command)

    evaluate = subparsers.add_parser('evaluate', parents=[common],
                                     help='score predictions (MAE, or MPS with --before)')
    evaluate.add_argument('--observed', required=True, help='the observed matrix')
    evaluate.add_argument('--predictions', required=True, help='the predicted matrix')
    evaluate.add_argument('--truth', help='the complete true matrix')
    evaluate.add_argument('--meta', help='meta.json of the simulation (skips careless rows)')
    evaluate.add_argument('--before', help='predictions before an attack')
    evaluate.add_argument('--target', type=int, help='the attacked column')
    evaluate.set_defaults(handler=evaluate_command)

    experiment = subparsers.add_parser('experiment', parents=[common],
                                       help='run a replicated experiment')
    experiment.add_argument('--replications', type=int, help='override the replication count')
    experiment.add_argument('--async', dest='use_async', action='store_true',
                            help='run the jobs from an event loop')
    experiment.set_defaults(handler=experiment_command)

    summary = subparsers.add_parser('summarize', parents=[common],
                                    help='summarize result records per group')
    summary.add_argument('records', help='records.csv of an experiment')
    summary.add_argument('--by', help='comma separated grouping columns')
    summary.set_defaults(handler=summarize_command)
    if defaults:
        for subparser in (simulate, fit, attack, evaluate, experiment, summary):
            subparser.set_defaults(**defaults)

    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> Namespace:
    """
    Parse the command line.

    For commands other than ``experiment``, a ``--config`` file supplies defaults for the
    command's options (keys are option names with underscores).
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config and args.command != 'experiment':
        defaults = _read_json(args.config)
        unknown = sorted(key for key in defaults
                         if key in RESERVED_OPTIONS or not hasattr(args, key))
        if unknown:
            raise ConfigurationError(f'Unknown option(s) in {args.config}: {", ".join(unknown)}')

        args = build_parser(defaults).parse_args(argv)

    return args


def configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format='%(asctime)s %(levelname)s %(name)s: %(message)s')


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the command line interface.

    :return: 0 on success, 1 on a runtime error and 2 on a usage error
    """
    try:
        args = parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    except ConfigurationError as exc:
        print(f'rdmc: error: {exc}', file=sys.stderr)
        return 2

    configure_logging(args.verbose, args.quiet)
    try:
        return args.handler(args)
    except ConfigurationError as exc:
        logger.error('%s', exc)
        return 2
    except Exception as exc:
        logger.debug('Command failed', exc_info=True)
        logger.error('%s: %s', exc.__class__.__name__, exc)
        return 1
