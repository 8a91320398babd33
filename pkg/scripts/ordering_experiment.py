#!/usr/bin/env python3
'''Simulate under the order [d1] x [d2 | d1], fit both disease orders and
count how often the generating order attains the lower WAIC.

    python scripts/ordering_experiment.py --replicates 10 --iterations 4000
'''
import argparse
import logging

import pandas as pd

from bdagar.config import McmcConfig, PriorSpec, SimulationTruth
from bdagar.data import Dataset, simulate_dataset
from bdagar.graph import grid_graph
from bdagar.sampler import run_mcmc
from bdagar.selection import pointwise_log_lik, waic

logger = logging.getLogger('ordering_experiment')


def swap_diseases(dataset):
    return Dataset(dataset.graph, dataset.outcomes[::-1], dataset.covariates[::-1],
                   dataset.disease_names[::-1], dataset.covariate_names[::-1])


def fitted_waic(dataset, config):
    draws = run_mcmc(dataset, 'dagar', PriorSpec(), config)
    return waic(pointwise_log_lik(draws, dataset)).waic


def run(replicates, iterations, rows, cols):
    graph = grid_graph(rows, cols)
    results = []
    for seed in range(1, replicates + 1):
        truth = SimulationTruth(
            beta1=[1.0, 0.5], beta2=[-1.0, 0.5], sigma2=(0.2, 0.2), tau=(2.0, 4.0),
            rho=(0.8, 0.3), eta=(1.5, 0.4), seed=seed)
        dataset, _ = simulate_dataset(graph, truth)
        config = McmcConfig(iterations=iterations, burn_in=iterations // 2, seed=seed)
        matching = fitted_waic(dataset, config)
        reverse = fitted_waic(swap_diseases(dataset), config)
        results.append({'seed': seed, 'waic_matching': matching, 'waic_reverse': reverse,
                        'matching_wins': matching < reverse})
        logger.info('seed %d: matching %.2f, reverse %.2f', seed, matching, reverse)
    return pd.DataFrame(results)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument('--replicates', type=int, default=10)
    parser.add_argument('--iterations', type=int, default=4000)
    parser.add_argument('--rows', type=int, default=7)
    parser.add_argument('--cols', type=int, default=7)
    parser.add_argument('-v', '--verbose', action='store_true')
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    table = run(args.replicates, args.iterations, args.rows, args.cols)
    print(table.to_string(index=False, float_format='%.2f'))
    print(f'matching order wins in {int(table["matching_wins"].sum())} of {len(table)} replicates')


if __name__ == '__main__':
    main()
