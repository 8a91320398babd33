'''MCMC for the bivariate spatial regression

    y_ij = x_ij^T beta_i + w_ij + e_ij,   e_ij ~ N(0, sigma2_i),
    w ~ N(0, Qw(rho, tau, eta)) as precision,

with conjugate Gibbs updates for beta, w, sigma2, tau and eta and
random-walk Metropolis on logit(rho_i). One cycle updates, in order,
beta, w, sigma2, tau, eta, rho1, rho2.
'''
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import linalg, stats

from .config import McmcConfig, PriorSpec
from .dagar import dense_cholesky, spatial_precision
from .errors import FactorizationError, SamplerError
from .graph import from_edges, reorder
from .model import BdagarSpec, JointGaussian, LinkingParams, linking_matrix
from .utils.definitions import DRAWS_FLOAT_FORMAT, FIT_FILES, TABLE_FLOAT_FORMAT
from .utils import functions

logger = logging.getLogger(__name__)

SCALAR_PARAMETERS = ['sigma2_1', 'sigma2_2', 'tau_1', 'tau_2', 'rho_1', 'rho_2',
                     'eta_0', 'eta_1']


@dataclass
class ChainState:
    ''' Current values of one chain.

    Attributes
    ----------
        list beta: [beta_1, beta_2] coefficient vectors
        ndarray w: length-2k latent effects (w1 then w2)
        ndarray sigma2, tau, rho: length-2 arrays
        LinkingParams eta: eta0, eta1
        Generator rng: the chain's random stream
        ndarray step: Metropolis step sizes on logit(rho1), logit(rho2)
        OrderedRegionGraph graph: the ordered map
        str kind: 'dagar' or 'car'
    '''
    beta: list
    w: np.ndarray
    sigma2: np.ndarray
    tau: np.ndarray
    rho: np.ndarray
    eta: LinkingParams
    rng: np.random.Generator
    step: np.ndarray
    graph: object
    kind: str = 'dagar'
    _precisions: dict = field(default_factory=dict, repr=False)

    @property
    def k(self):
        return self.graph.k

    @property
    def w1(self):
        return self.w[:self.k]

    @property
    def w2(self):
        return self.w[self.k:]

    def precision(self, which, rho=None):
        '''Q_which(rho) (current rho by default), reusing the last build.'''
        rho = float(self.rho[which - 1] if rho is None else rho)
        cached = self._precisions.get(which)
        if cached is not None and cached[0] == rho:
            return cached[1]
        prec = spatial_precision(self.graph, rho, self.kind)
        if rho == self.rho[which - 1]:
            self._precisions[which] = (rho, prec)
        return prec

    def link(self):
        return linking_matrix(self.eta, self.graph)

    def spec(self):
        return BdagarSpec(self.graph, self.kind, self.rho[0], self.rho[1],
                          self.tau[0], self.tau[1], self.eta)

    def dump(self):
        '''JSON-ready snapshot for failure reports.'''
        return {
            'beta': [b.tolist() for b in self.beta],
            'w': self.w.tolist(),
            'sigma2': self.sigma2.tolist(),
            'tau': self.tau.tolist(),
            'rho': self.rho.tolist(),
            'eta': [self.eta.eta0, self.eta.eta1],
            'step': self.step.tolist(),
            'kind': self.kind,
        }


def _mvn_draw(mean, precision, rng):
    # N(mean, precision^{-1}) via the lower Cholesky factor of the precision
    L = dense_cholesky(precision)
    z = rng.standard_normal(mean.shape[0])
    return mean + linalg.solve_triangular(L, z, lower=True, trans='T')


def _solve_pd(precision, rhs):
    return linalg.cho_solve((dense_cholesky(precision), True), rhs)


def initial_state(dataset, prior, config, kind='dagar', chain=0):
    '''A function that builds the deterministic starting point of a chain:
    beta from least squares ignoring w, w = 0, sigma2 the residual sample
    variance, tau the prior mean, rho = 0.5, eta = 0.

    Parameters
    ----------
        Dataset dataset: the data
        PriorSpec prior: hyperparameters
        McmcConfig config: sampler settings (seed, initial steps)
        str kind: 'dagar' or 'car'
        int chain: chain index; the stream is seeded with seed + chain

    Returns
    -------
        ChainState state
    '''
    beta, sigma2 = [], []
    for X, y in zip(dataset.covariates, dataset.outcomes):
        coef, *_ = np.linalg.lstsq(X, y, rcond=None)
        resid = y - X @ coef
        variance = float(np.var(resid, ddof=1)) if y.size > 1 else 0.0
        beta.append(coef)
        sigma2.append(max(variance, 1e-6))
    return ChainState(
        beta=beta,
        w=np.zeros(2 * dataset.k),
        sigma2=np.array(sigma2),
        tau=np.full(2, prior.a_tau / prior.b_tau),
        rho=np.full(2, 0.5),
        eta=LinkingParams(0.0, 0.0),
        rng=np.random.default_rng(config.seed + chain),
        step=np.array(config.initial_step, dtype=float),
        graph=dataset.graph,
        kind=kind,
    )


###########################
# full conditionals       #
###########################

def beta_conditional(state, dataset, prior, i):
    '''Mean and precision of beta_i | rest:
    P = X^T X / sigma2 + I / beta_var, mean = P^{-1} X^T (y - w_i) / sigma2.'''
    X, y = dataset.covariates[i], dataset.outcomes[i]
    w_i = state.w[i * state.k:(i + 1) * state.k]
    s2 = state.sigma2[i]
    precision = X.T @ X / s2 + np.eye(X.shape[1]) / prior.beta_var
    mean = _solve_pd(precision, X.T @ (y - w_i) / s2)
    return mean, precision


def w_conditional(state, dataset):
    '''Mean and precision of w | rest: P = Qw + blockdiag(I/sigma2_1, I/sigma2_2),
    mean = P^{-1} ((y1 - X1 beta1)/sigma2_1, (y2 - X2 beta2)/sigma2_2).'''
    k = state.k
    joint = JointGaussian(state.spec())
    noise = np.repeat(1.0 / state.sigma2, k)
    precision = joint.Qw.toarray() + np.diag(noise)
    resid = np.concatenate([dataset.outcomes[i] - dataset.covariates[i] @ state.beta[i]
                            for i in range(2)])
    mean = _solve_pd(precision, resid * noise)
    return mean, precision


def sigma2_conditional(state, dataset, prior, i):
    '''(shape, rate) of the inverse-gamma full conditional of sigma2_i.'''
    k = state.k
    resid = (dataset.outcomes[i] - dataset.covariates[i] @ state.beta[i]
             - state.w[i * k:(i + 1) * k])
    return prior.a_sigma + 0.5 * k, prior.b_sigma + 0.5 * float(resid @ resid)


def tau_conditional(state, prior, i):
    '''(shape, rate) of the gamma full conditional of tau_i. tau_1 sees
    w1^T Q1 w1; tau_2 sees r^T Q2 r with r = w2 - A21 w1.'''
    if i == 0:
        quad = state.precision(1).quad_form(state.w1)
    else:
        quad = state.precision(2).quad_form(state.w2 - state.link() @ state.w1)
    return prior.a_tau + 0.5 * state.k, prior.b_tau + 0.5 * quad


def eta_conditional(state, prior):
    '''Mean and precision of (eta0, eta1) | rest. A21 w1 = U eta with
    U = [w1 | M w1], so V = tau2 U^T Q2 U + I / eta_var and
    mean = V^{-1} tau2 U^T Q2 w2.'''
    w1 = state.w1
    U = np.column_stack([w1, state.graph.adjacency @ w1])
    Q2U = state.precision(2).Q @ U
    tau2 = state.tau[1]
    precision = tau2 * (U.T @ Q2U) + np.eye(2) / prior.eta_var
    mean = _solve_pd(precision, tau2 * (Q2U.T @ state.w2))
    return mean, precision


def rho_log_target(state, which, rho):
    '''Log full conditional of rho_which on the rho scale (uniform prior),
    up to a constant: (1/2) log|Q(rho)| - (tau/2) r^T Q(rho) r.'''
    rho = float(rho)
    if not 0.0 <= rho < 1.0:
        return -np.inf
    prec = state.precision(which, rho)
    if which == 1:
        r = state.w1
    else:
        r = state.w2 - state.link() @ state.w1
    return 0.5 * prec.logdet - 0.5 * state.tau[which - 1] * prec.quad_form(r)


###########################
# updates                 #
###########################

def update_beta(state, dataset, prior):
    '''Draw beta_1 and beta_2 from their normal full conditionals.'''
    draws = []
    for i in range(2):
        mean, precision = beta_conditional(state, dataset, prior, i)
        draws.append(_mvn_draw(mean, precision, state.rng))
    return draws


def update_w(state, dataset, prior=None):
    '''Draw the 2k latent effects jointly from their normal full conditional.

    The 2k x 2k conditional precision is factorised densely with
    scipy.linalg.cholesky, as are the beta and eta precisions.
    '''
    mean, precision = w_conditional(state, dataset)
    return _mvn_draw(mean, precision, state.rng)


def update_sigma2(state, dataset, prior):
    '''Draw sigma2_i ~ IG(a_sigma + k/2, b_sigma + SSR_i/2).'''
    out = np.empty(2)
    for i in range(2):
        shape, rate = sigma2_conditional(state, dataset, prior, i)
        out[i] = 1.0 / state.rng.gamma(shape, 1.0 / rate)
    return out


def update_tau(state, prior):
    '''Draw tau_i ~ Gamma(a_tau + k/2, rate b_tau + quad_i/2).'''
    out = np.empty(2)
    for i in range(2):
        shape, rate = tau_conditional(state, prior, i)
        out[i] = state.rng.gamma(shape, 1.0 / rate)
    return out


def update_eta(state, prior):
    '''Draw (eta0, eta1) from the bivariate normal full conditional.'''
    mean, precision = eta_conditional(state, prior)
    eta0, eta1 = _mvn_draw(mean, precision, state.rng)
    return LinkingParams(eta0, eta1)


def update_rho(state, dataset, which):
    '''A function that makes one random-walk Metropolis step for rho_which
    on theta = logit(rho). The target adds the Jacobian log rho(1 - rho).

    Parameters
    ----------
        ChainState state: current chain state (its step size is used)
        Dataset dataset: unused; kept for a uniform update signature
        int which: 1 or 2

    Returns
    -------
        float rho: the new value (unchanged if rejected)
        bool accepted
    '''
    current = float(state.rho[which - 1])
    theta = functions.from_unit(current) + state.step[which - 1] * state.rng.standard_normal()
    proposal = float(functions.to_unit(theta))
    log_u = np.log(state.rng.random())
    if not 0.0 < proposal < 1.0:
        return current, False
    delta = (rho_log_target(state, which, proposal) + functions.log_jacobian(proposal)
             - rho_log_target(state, which, current) - functions.log_jacobian(current))
    if log_u < delta:
        return proposal, True
    return current, False


def log_posterior(state, dataset, prior):
    '''A function that evaluates the joint log posterior density of the
    full hierarchy (normalised priors, GMRF and likelihood).

    Parameters
    ----------
        ChainState state: parameter values
        Dataset dataset: the data
        PriorSpec prior: hyperparameters

    Returns
    -------
        float logp
    '''
    if np.any(state.rho < 0.0) or np.any(state.rho >= 1.0):
        return -np.inf
    logp = 0.0
    logp += stats.norm.logpdf([state.eta.eta0, state.eta.eta1], 0.0,
                              np.sqrt(prior.eta_var)).sum()
    for i in range(2):
        logp += stats.norm.logpdf(state.beta[i], 0.0, np.sqrt(prior.beta_var)).sum()
        logp += stats.gamma.logpdf(state.tau[i], prior.a_tau, scale=1.0 / prior.b_tau)
        logp += stats.invgamma.logpdf(state.sigma2[i], prior.a_sigma, scale=prior.b_sigma)
    logp += JointGaussian(state.spec()).log_density(state.w)
    k = state.k
    for i in range(2):
        mean = dataset.covariates[i] @ state.beta[i] + state.w[i * k:(i + 1) * k]
        logp += stats.norm.logpdf(dataset.outcomes[i], mean, np.sqrt(state.sigma2[i])).sum()
    return float(logp)


###########################
# chains                  #
###########################

def parameter_names(dataset):
    '''Column names of one draw, in state_vector order.'''
    names = []
    for i, covs in enumerate(dataset.covariate_names):
        names += [f'beta{i + 1}_{c}' for c in covs]
    names += SCALAR_PARAMETERS
    for i in range(2):
        names += [f'w{i + 1}_{r}' for r in dataset.graph.region_ids]
    return names


def state_vector(state):
    return np.concatenate(state.beta + [
        state.sigma2, state.tau, state.rho, [state.eta.eta0, state.eta.eta1], state.w])


def _cycle(state, dataset, prior):
    state.beta = update_beta(state, dataset, prior)
    state.w = update_w(state, dataset, prior)
    state.sigma2 = update_sigma2(state, dataset, prior)
    state.tau = update_tau(state, prior)
    state.eta = update_eta(state, prior)
    accepted = np.zeros(2, dtype=bool)
    for which in (1, 2):
        rho, accepted[which - 1] = update_rho(state, dataset, which)
        state.rho[which - 1] = rho
    return accepted


def run_chain(dataset, kind, prior, config, chain=0):
    '''A function that runs one chain to completion.

    Parameters
    ----------
        Dataset dataset: the data
        str kind: 'dagar' or 'car'
        PriorSpec prior: hyperparameters
        McmcConfig config: sampler settings
        int chain: chain index

    Returns
    -------
        ndarray draws: retained state vectors, one row per kept iteration
        list iterations: the iteration index of each row
        dict acceptance: post-burn-in acceptance rates and final step sizes
    '''
    state = initial_state(dataset, prior, config, kind, chain)
    logger.info('chain %d: %s model, k=%d, %d iterations', chain, kind, dataset.k,
                config.iterations)
    rows, iterations = [], []
    batch = np.zeros(2)
    kept = np.zeros(2)
    for it in range(config.iterations):
        try:
            accepted = _cycle(state, dataset, prior)
        except (FactorizationError, linalg.LinAlgError, ValueError, FloatingPointError) as err:
            raise SamplerError(str(err), iteration=it, chain=chain, state=state.dump()) from err
        if it < config.burn_in:
            batch += accepted
            if config.adapt and (it + 1) % config.adapt_interval == 0:
                rate = batch / config.adapt_interval
                state.step = state.step * np.exp(rate - config.target_accept)
                batch[:] = 0
            if it + 1 == config.burn_in:
                logger.info('chain %d: burn-in done, step sizes %s', chain,
                            np.round(state.step, 4).tolist())
        else:
            kept += accepted
            if (it - config.burn_in) % config.thin == 0:
                rows.append(state_vector(state))
                iterations.append(it)
        if (it + 1) % config.log_every == 0:
            logger.debug('chain %d: iteration %d, rho=%s, tau=%s', chain, it + 1,
                         np.round(state.rho, 3).tolist(), np.round(state.tau, 3).tolist())
    n_kept = config.iterations - config.burn_in
    acceptance = {
        'chain': chain,
        'rho_1': float(kept[0] / n_kept),
        'rho_2': float(kept[1] / n_kept),
        'step': state.step.tolist(),
    }
    logger.info('chain %d: done, acceptance rho_1=%.3f rho_2=%.3f', chain,
                acceptance['rho_1'], acceptance['rho_2'])
    return np.array(rows), iterations, acceptance


def run_mcmc(dataset, kind='dagar', prior=None, config=None, echo=None):
    '''A function that runs n_chains independent chains and merges them.
    Chains with n_chains > 1 run in worker processes; chain c is seeded
    with seed + c, so the output depends only on the inputs.

    Parameters
    ----------
        Dataset dataset: the data, its graph already in DAGAR order
        str kind: 'dagar' (BDAGAR) or 'car' (GMCAR)
        PriorSpec prior: hyperparameters (defaults when None)
        McmcConfig config: sampler settings (defaults when None)
        dict echo: extra configuration to record with the draws

    Returns
    -------
        PosteriorDraws draws
    '''
    prior = prior or PriorSpec()
    config = config or McmcConfig()
    # graph problems are input errors, raised before any chain starts
    spatial_precision(dataset.graph, 0.5, kind)
    chains = range(config.n_chains)
    if config.n_chains == 1:
        results = [run_chain(dataset, kind, prior, config, 0)]
    else:
        with ProcessPoolExecutor(max_workers=config.n_chains) as pool:
            futures = [pool.submit(run_chain, dataset, kind, prior, config, c) for c in chains]
            results = [f.result() for f in futures]
    frames = []
    for chain, (rows, iterations, _) in zip(chains, results):
        frame = pd.DataFrame(rows, columns=parameter_names(dataset))
        frame.insert(0, 'iteration', iterations)
        frame.insert(0, 'chain', chain)
        frames.append(frame)
    echo = dict(echo or {})
    echo.update({
        'kind': kind,
        'seed': config.seed,
        'disease_names': list(dataset.disease_names),
        'covariate_names': [list(c) for c in dataset.covariate_names],
        'order': list(dataset.graph.region_ids),
        'input_order': list(dataset.graph.input_ids),
        'graph': json.loads(dataset.graph.to_json()),
        'prior': prior.model_dump(mode='json'),
        'mcmc': config.model_dump(mode='json'),
    })
    return PosteriorDraws(
        frame=pd.concat(frames, ignore_index=True),
        acceptance=[r[2] for r in results],
        config=echo,
        graph=dataset.graph,
    )


class PosteriorDraws:
    ''' A class used to represent retained MCMC draws of every parameter.

    Attributes
    ----------
        DataFrame frame: one row per retained iteration; columns chain,
            iteration, then one column per scalar parameter
        list acceptance: per-chain acceptance rates for the rho updates
        dict config: configuration echo (seed, order, model kind, ...)
        OrderedRegionGraph graph: the ordered map the draws refer to
    '''

    def __init__(self, frame, acceptance, config, graph):
        if len(frame) < 1:
            raise ValueError('PosteriorDraws needs at least one draw')
        self.frame = frame
        self.acceptance = acceptance
        self.config = config
        self.graph = graph

    def __repr__(self):
        return (f'PosteriorDraws(kind={self.kind!r}, draws={self.n_draws}, '
                f'chains={self.frame["chain"].nunique()})')

    @property
    def kind(self):
        return self.config['kind']

    @property
    def disease_names(self):
        return tuple(self.config['disease_names'])

    @property
    def covariate_names(self):
        return tuple(tuple(c) for c in self.config['covariate_names'])

    @property
    def n_draws(self):
        return len(self.frame)

    @property
    def k(self):
        return self.graph.k

    def parameter(self, name):
        return self.frame[name].to_numpy()

    def beta(self, i):
        '''S x p_i matrix of beta_i draws (i is 0 or 1).'''
        columns = [f'beta{i + 1}_{c}' for c in self.covariate_names[i]]
        return self.frame[columns].to_numpy()

    def w(self, i):
        '''S x k matrix of w_i draws (i is 0 or 1), graph order.'''
        columns = [f'w{i + 1}_{r}' for r in self.graph.region_ids]
        return self.frame[columns].to_numpy()

    def sigma2(self):
        return self.frame[['sigma2_1', 'sigma2_2']].to_numpy()

    def save(self, directory):
        '''Write draws.csv, config_echo.json and acceptance.json.'''
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.frame.to_csv(directory / FIT_FILES['draws'], index=False,
                          float_format=DRAWS_FLOAT_FORMAT, lineterminator='\n')
        for key, doc in (('config', self.config), ('acceptance', self.acceptance)):
            (directory / FIT_FILES[key]).write_text(
                json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + '\n',
                encoding='utf-8')
        logger.info('saved %d draws to %s', self.n_draws, directory)

    @classmethod
    def load(cls, directory):
        '''Read draws saved by save().'''
        directory = Path(directory)
        config = json.loads((directory / FIT_FILES['config']).read_text(encoding='utf-8'))
        acceptance = json.loads((directory / FIT_FILES['acceptance']).read_text(encoding='utf-8'))
        frame = pd.read_csv(directory / FIT_FILES['draws'], float_precision='round_trip')
        # rebuild the input listing, then restore the DAGAR order
        edges = [tuple(edge) for edge in config['graph']['edges']]
        graph = reorder(from_edges(config['input_order'], edges), config['order'])
        return cls(frame, acceptance, config, graph)


###########################
# posterior summaries     #
###########################

def summarize(draws, include_w=False):
    '''A function that summarises every scalar parameter by its posterior
    mean and 95% equal-tailed interval, also rendered as "mean (lo, hi)".

    Parameters
    ----------
        PosteriorDraws draws: at least two draws
        bool include_w: also summarise the latent effects

    Returns
    -------
        DataFrame summary: columns parameter, mean, lo, hi, summary
    '''
    if draws.n_draws < 2:
        raise ValueError('summarize needs at least two draws')
    rows = []
    for name in draws.frame.columns[2:]:
        if not include_w and name.startswith(('w1_', 'w2_')):
            continue
        mean, lo, hi = functions.interval_summary(draws.parameter(name))
        rows.append({'parameter': name, 'mean': mean, 'lo': lo, 'hi': hi,
                     'summary': functions.format_interval(mean, lo, hi)})
    return pd.DataFrame(rows, columns=['parameter', 'mean', 'lo', 'hi', 'summary'])


def disease_table(draws):
    '''Two-column parameter table: one row per covariate, then sigma2, tau
    and rho; one column per disease; cells "mean (lo, hi)".'''
    summary = summarize(draws).set_index('parameter')['summary']
    rows = []
    for name in dict.fromkeys(c for covs in draws.covariate_names for c in covs):
        rows.append([name] + [summary.get(f'beta{i + 1}_{name}', '') for i in range(2)])
    for label, prefix in (('sigma2', 'sigma2'), ('tau', 'tau'), ('rho', 'rho')):
        rows.append([label] + [summary[f'{prefix}_{i + 1}'] for i in range(2)])
    return pd.DataFrame(rows, columns=['parameter', *draws.disease_names]).set_index('parameter')


def write_summary(summary, path):
    summary.to_csv(path, index=False, float_format=TABLE_FLOAT_FORMAT, lineterminator='\n')


def effective_sample_size(draws, parameter):
    '''A function that estimates the effective sample size of one
    parameter with the initial positive sequence estimator; with several
    chains the per-chain estimates are added.

    Parameters
    ----------
        PosteriorDraws draws: at least ten draws per chain
        str parameter: column name, e.g. "rho_1"

    Returns
    -------
        EffectiveSampleSize ess: value and degenerate-chain flag
    '''
    total, degenerate = 0.0, False
    for _, chain in draws.frame.groupby('chain', sort=True):
        values = chain[parameter].to_numpy()
        if values.size < 10:
            raise ValueError('effective_sample_size needs at least 10 draws per chain')
        ess = functions.effective_sample_size(values)
        total += ess.value
        degenerate = degenerate or ess.degenerate
    if degenerate:
        logger.warning('parameter %s has a constant chain', parameter)
    return functions.EffectiveSampleSize(total, degenerate)


def fitted_values(draws, dataset):
    '''Posterior summaries of x_ij^T beta_i + w_ij for each disease.

    Returns
    -------
        dict fitted: disease name -> DataFrame(region, mean, lo, hi)
    '''
    fitted = {}
    for i, name in enumerate(draws.disease_names):
        values = draws.beta(i) @ dataset.covariates[i].T + draws.w(i)
        rows = []
        for j, region in enumerate(dataset.graph.region_ids):
            mean, lo, hi = functions.interval_summary(values[:, j])
            rows.append({'region': region, 'mean': mean, 'lo': lo, 'hi': hi})
        fitted[name] = pd.DataFrame(rows, columns=['region', 'mean', 'lo', 'hi'])
    return fitted
