#!/usr/bin/env python3
'''Posterior recovery on a 7 x 7 lattice: the truth is drawn once, then the
sampler is run with several seeds and credible-interval coverage of every
regression coefficient, eta and rho is reported.

    python scripts/recovery_experiment.py --seeds 10 --iterations 10000
'''
import argparse
import logging

import pandas as pd

from bdagar.config import McmcConfig, PriorSpec, SimulationTruth
from bdagar.data import simulate_dataset
from bdagar.graph import grid_graph
from bdagar.sampler import run_mcmc, summarize

logger = logging.getLogger('recovery_experiment')

TRUTH = SimulationTruth(
    beta1=[2.0, 1.0, -0.5], beta2=[-1.0, 0.5, 1.5], sigma2=(0.4, 0.4), tau=(3.0, 3.0),
    rho=(0.7, 0.3), eta=(0.8, 0.2), seed=2020)


def true_values(dataset):
    values = {}
    for i, beta in enumerate((TRUTH.beta1, TRUTH.beta2)):
        for name, b in zip(dataset.covariate_names[i], beta):
            values[f'beta{i + 1}_{name}'] = b
    values.update({'rho_1': TRUTH.rho[0], 'rho_2': TRUTH.rho[1],
                   'eta_0': TRUTH.eta[0], 'eta_1': TRUTH.eta[1]})
    return values


def run(seeds, iterations):
    dataset, _ = simulate_dataset(grid_graph(7, 7), TRUTH)
    truth = true_values(dataset)
    covered = {name: 0 for name in truth}
    for seed in range(seeds):
        config = McmcConfig(iterations=iterations, burn_in=iterations // 2, seed=seed)
        summary = summarize(run_mcmc(dataset, 'dagar', PriorSpec(), config))
        summary = summary.set_index('parameter')
        for name, value in truth.items():
            covered[name] += bool(summary.loc[name, 'lo'] <= value <= summary.loc[name, 'hi'])
        logger.info('seed %d done', seed)
    return pd.DataFrame({'parameter': list(truth), 'truth': list(truth.values()),
                         'covered': [covered[n] for n in truth], 'runs': seeds})


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument('--seeds', type=int, default=10)
    parser.add_argument('--iterations', type=int, default=10_000)
    parser.add_argument('-v', '--verbose', action='store_true')
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    print(run(args.seeds, args.iterations).to_string(index=False))


if __name__ == '__main__':
    main()
