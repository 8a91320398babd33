'''Command-line interface.

    bdagar simulate   graph + truth JSON -> dataset CSV
    bdagar fit        dataset + graph + config -> fit directory
    bdagar waic       fit directories -> comparison table
    bdagar corr-map   fit directory -> per-region cross-disease correlation
    bdagar export-map values CSV + GeoJSON -> joined GeoJSON
    bdagar check      graph + rho -> positive-definiteness / log-det diagnostics

Exit status is 0 on success, 1 for invalid input and 2 for runtime
failures.
'''
import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, dump_json, load_config, load_truth
from .dagar import dense_cholesky, spatial_precision, write_matrix_market
from .data import (INTERCEPT, export_choropleth, export_values_csv, load_dataset,
                   read_values_csv, simulate_dataset, write_dataset)
from .errors import DataError, FactorizationError, SamplerError
from .graph import read_graph
from .model import posterior_cross_correlation
from .sampler import (PosteriorDraws, disease_table, fitted_values, run_mcmc,
                      summarize, write_summary)
from .selection import (WaicReport, compare, pointwise_log_lik, render_comparison,
                        waic, write_comparison)
from .utils.definitions import (EXIT_OK, EXIT_RUNTIME, EXIT_VALIDATION, FIT_FILES,
                                KINDS, MODELS)

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s %(levelname)s %(name)s: %(message)s'


def configure_logging(verbosity):
    level = {0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG)
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger('bdagar').setLevel(level)


###########################
# subcommands             #
###########################

def cmd_simulate(args):
    graph = read_graph(args.graph)
    truth = load_truth(args.truth)
    if args.seed is not None:
        truth = truth.model_copy(update={'seed': args.seed})
    dataset, truth = simulate_dataset(graph, truth)
    out = Path(args.out)
    write_dataset(dataset, out)
    truth_out = Path(args.truth_out) if args.truth_out else out.with_name(out.stem + '_truth.json')
    dump_json(truth, truth_out)
    # a run config that reloads exactly this dataset
    config = RunConfig(
        model=truth.model,
        disease_order=dataset.disease_names,
        covariates={name: [c for c in covs if c != INTERCEPT]
                    for name, covs in zip(dataset.disease_names, dataset.covariate_names)},
    )
    config_out = out.with_name(out.stem + '_config.json')
    dump_json(config, config_out)
    print(f'wrote {out} ({dataset.k} regions), {truth_out} and {config_out}')
    return EXIT_OK


def _apply_overrides(config, args):
    doc = config.model_dump(mode='json')
    if args.model is not None:
        doc['model'] = args.model
    if args.order is not None:
        doc['disease_order'] = args.order
    for flag, key in (('seed', 'seed'), ('iterations', 'iterations'), ('burn_in', 'burn_in'),
                      ('thin', 'thin'), ('chains', 'n_chains')):
        value = getattr(args, flag)
        if value is not None:
            doc['mcmc'][key] = value
    if args.out is not None:
        doc['output_dir'] = args.out
    return RunConfig.model_validate(doc)


def cmd_fit(args):
    config = load_config(args.config) if args.config else RunConfig()
    config = _apply_overrides(config, args)
    if config.output_dir is None:
        raise DataError('no output directory; pass --out or set output_dir in the config')
    if config.mcmc.n_retained * config.mcmc.n_chains < 2:
        raise DataError('the run keeps fewer than two draws; lower burn_in or thin')
    dataset = load_dataset(args.data, args.graph, config)
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)

    echo = {'run_config': config.model_dump(mode='json')}
    try:
        draws = run_mcmc(dataset, config.kind, config.prior, config.mcmc, echo=echo)
    except SamplerError as err:
        dump_json({'message': str(err), 'chain': err.chain, 'iteration': err.iteration,
                   'state': err.state}, out / FIT_FILES['failure'])
        logger.error('sampler failed; state written to %s', out / FIT_FILES['failure'])
        raise
    draws.save(out)
    write_summary(summarize(draws), out / FIT_FILES['summary'])
    report = waic(pointwise_log_lik(draws, dataset))
    report.save(out / FIT_FILES['waic'])
    for name, values in fitted_values(draws, dataset).items():
        export_values_csv(values, out / f'fitted_{name}.csv')

    print(disease_table(draws).to_string())
    print(f'WAIC {report.waic:.2f} (lppd {report.lppd:.2f}, p_WAIC {report.p_waic:.2f})')
    return EXIT_OK


def cmd_waic(args):
    if args.names is not None and len(args.names) != len(args.fits):
        raise DataError(f'{len(args.names)} names given for {len(args.fits)} fit directories')
    names = args.names or [Path(d).name or str(d) for d in args.fits]
    reports = {}
    for name, directory in zip(names, args.fits):
        if name in reports:
            raise DataError(f'two fits are named {name!r}; pass --names')
        reports[name] = WaicReport.load(Path(directory) / FIT_FILES['waic'])
    table = compare(reports)
    print(render_comparison(table), end='')
    if args.csv:
        write_comparison(table, args.csv)
    return EXIT_OK


def cmd_corr_map(args):
    draws = PosteriorDraws.load(args.fit)
    values = posterior_cross_correlation(draws)
    export_values_csv(values, args.out)
    print(f'wrote cross-disease correlation for {draws.k} regions to {args.out}')
    return EXIT_OK


def cmd_export_map(args):
    values = read_values_csv(args.values)
    export_choropleth(values, args.geojson, args.id_property, args.field, args.out)
    print(f'wrote {args.out}')
    return EXIT_OK


def cmd_check(args):
    graph = read_graph(args.graph)
    if args.dump and len(args.rho) != 1:
        raise DataError('--dump needs exactly one --rho value')
    isolated = int(np.sum(graph.degrees == 0))
    print(f'k={graph.k} edges={len(graph.edges)} isolated={isolated} kind={args.kind}')
    status = EXIT_OK
    for rho in args.rho:
        prec = spatial_precision(graph, rho, args.kind)
        dense = prec.toarray()
        try:
            dense_cholesky(dense)
            pd_ok = True
        except FactorizationError:
            pd_ok = False
            status = EXIT_RUNTIME
        sign, dense_logdet = np.linalg.slogdet(dense)
        gap = abs(prec.logdet - dense_logdet) if sign > 0 else float('inf')
        print(f'rho={rho:g} positive-definite={"yes" if pd_ok else "NO"} '
              f'logdet={prec.logdet:.10g} dense={dense_logdet:.10g} |diff|={gap:.3g}')
        if args.kind == 'dagar' and rho == 0.0:
            identity = np.array_equal(dense, np.eye(graph.k))
            print('rho=0: Q = I confirmed' if identity else 'rho=0: Q differs from I')
            if not identity:
                status = EXIT_RUNTIME
        if args.dump:
            write_matrix_market(prec, args.dump)
    return status


###########################
# parser                  #
###########################

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('-v', '--verbose', action='count', default=0,
                        help='-v for progress, -vv for debugging output')

    parser = argparse.ArgumentParser(
        prog='bdagar', description='Bivariate DAGAR disease mapping toolkit.')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('simulate', parents=[common], help='simulate a dataset')
    p.add_argument('--graph', required=True, help='edge-list or JSON graph file')
    p.add_argument('--truth', required=True, help='truth JSON')
    p.add_argument('--out', required=True, help='dataset CSV to write')
    p.add_argument('--truth-out', help='where to write the truth with w (default <out>_truth.json)')
    p.add_argument('--seed', type=int, help='override the truth seed')
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser('fit', parents=[common], help='fit a model by MCMC')
    p.add_argument('--data', required=True, help='dataset CSV')
    p.add_argument('--graph', required=True, help='edge-list or JSON graph file')
    p.add_argument('--config', help='run config JSON')
    p.add_argument('--out', help='output directory (overrides output_dir)')
    p.add_argument('--model', choices=MODELS)
    p.add_argument('--order', nargs=2, metavar=('FIRST', 'SECOND'),
                   help='disease modelled first, then the conditional one')
    p.add_argument('--seed', type=int)
    p.add_argument('--iterations', type=int)
    p.add_argument('--burn-in', dest='burn_in', type=int)
    p.add_argument('--thin', type=int)
    p.add_argument('--chains', type=int)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser('waic', parents=[common], help='compare fits by WAIC')
    p.add_argument('fits', nargs='+', help='fit directories')
    p.add_argument('--names', nargs='+', help='row labels (default: directory names)')
    p.add_argument('--csv', help='also write the table as CSV')
    p.set_defaults(func=cmd_waic)

    p = sub.add_parser('corr-map', parents=[common],
                       help='posterior per-region correlation between the diseases')
    p.add_argument('fit', help='fit directory')
    p.add_argument('--out', required=True, help='values CSV to write')
    p.set_defaults(func=cmd_corr_map)

    p = sub.add_parser('export-map', parents=[common], help='join values onto GeoJSON')
    p.add_argument('--values', required=True, help='CSV with region,mean,lo,hi')
    p.add_argument('--geojson', required=True, help='input FeatureCollection')
    p.add_argument('--id-property', dest='id_property', required=True,
                   help='feature property holding the region id')
    p.add_argument('--field', default='value', help='property name for the joined mean')
    p.add_argument('--out', required=True, help='GeoJSON to write')
    p.set_defaults(func=cmd_export_map)

    p = sub.add_parser('check', parents=[common], help='precision diagnostics for a graph')
    p.add_argument('--graph', required=True, help='edge-list or JSON graph file')
    p.add_argument('--rho', type=float, nargs='+', default=[0.5])
    p.add_argument('--kind', choices=KINDS, default='dagar')
    p.add_argument('--dump', help='write the precision as Matrix Market')
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        # argparse exits 0 for --help and 2 for usage errors
        return EXIT_OK if exit_.code in (0, None) else EXIT_VALIDATION
    configure_logging(args.verbose)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as err:
        logger.debug('validation failure', exc_info=True)
        print(f'bdagar: error: {err}', file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as err:
        logger.debug('runtime failure', exc_info=True)
        print(f'bdagar: runtime error: {err}', file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == '__main__':
    sys.exit(main())
