'''Model comparison by WAIC.

The pointwise density of an observation is conditional on the latent
effects: log N(y_ij | x_ij^T beta_i + w_ij, sigma2_i), evaluated at every
retained draw. From the S x 2k matrix of those values

    lppd   = sum_n log(mean_s exp ll[s, n])
    p_waic = sum_n var_s(ll[s, n])          (divisor S - 1)
    waic   = -2 (lppd - p_waic)
'''
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
from scipy import stats
from scipy.special import logsumexp

from .errors import DataError
from .utils.definitions import TABLE_FLOAT_FORMAT

logger = logging.getLogger(__name__)

COMPARISON_COLUMNS = ['name', 'lppd', 'p_waic', 'waic', 'best']


@dataclass(frozen=True, eq=False)
class PointwiseLogLik:
    ''' S x 2k matrix of pointwise log densities.

    Column n < k is disease 1 at region n; column k + n is disease 2.
    '''
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError(f'expected a 2-d matrix, got shape {values.shape}')
        if values.size == 0:
            raise ValueError('pointwise log-likelihood matrix is empty')
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise ValueError(f'non-finite log density at draw {bad[0]}, point {bad[1]}')
        object.__setattr__(self, 'values', values)

    @property
    def n_draws(self):
        return self.values.shape[0]

    @property
    def n_points(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class WaicReport:
    ''' A class used to represent the WAIC of one fitted model.

    waic is not stored independently: it is always recomputed from lppd
    and p_waic, so the three fields can never disagree.

    Attributes
    ----------
        float lppd: log pointwise predictive density
        float p_waic: effective number of parameters (>= 0)
        ndarray per_point: optional per-observation WAIC contributions
    '''
    lppd: float
    p_waic: float
    per_point: np.ndarray = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'lppd', float(self.lppd))
        object.__setattr__(self, 'p_waic', float(self.p_waic))
        if not np.isfinite(self.lppd) or not np.isfinite(self.p_waic):
            raise ValueError(f'lppd and p_waic must be finite, got {self.lppd}, {self.p_waic}')
        if self.p_waic < 0.0:
            raise ValueError(f'p_waic must be non-negative, got {self.p_waic}')

    @property
    def waic(self):
        return -2.0 * (self.lppd - self.p_waic)

    @classmethod
    def from_parts(cls, lppd, p_waic):
        return cls(lppd, p_waic)

    def to_dict(self):
        return {'lppd': self.lppd, 'p_waic': self.p_waic, 'waic': self.waic}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + '\n'

    @classmethod
    def from_json(cls, text):
        try:
            doc = json.loads(text)
            return cls(doc['lppd'], doc['p_waic'])
        except (json.JSONDecodeError, KeyError, TypeError) as err:
            raise DataError(f'malformed WAIC report: {err}')

    def save(self, path):
        Path(path).write_text(self.to_json(), encoding='utf-8')

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            return cls.from_json(path.read_text(encoding='utf-8'))
        except DataError as err:
            raise DataError(str(err), location=str(path))


def pointwise_log_lik(draws, dataset):
    '''A function that evaluates log N(y_ij | x_ij^T beta_i + w_ij, sigma2_i)
    at every retained draw and observation.

    Parameters
    ----------
        PosteriorDraws draws: output of run_mcmc on this dataset
        Dataset dataset: the data the draws were fitted to

    Returns
    -------
        PointwiseLogLik ll: S x 2k matrix
    '''
    if draws.k != dataset.k:
        raise ValueError(f'draws have k={draws.k} regions but the dataset has k={dataset.k}')
    if tuple(draws.disease_names) != tuple(dataset.disease_names):
        raise ValueError(
            f'disease order differs: draws {draws.disease_names}, dataset {dataset.disease_names}')
    for i in range(2):
        if draws.beta(i).shape[1] != dataset.covariates[i].shape[1]:
            raise ValueError(f'disease {i + 1}: draws and dataset have different covariates')
    sd = np.sqrt(draws.sigma2())
    blocks = []
    for i in range(2):
        mean = draws.beta(i) @ dataset.covariates[i].T + draws.w(i)
        blocks.append(stats.norm.logpdf(dataset.outcomes[i][None, :], mean, sd[:, i:i + 1]))
    return PointwiseLogLik(np.hstack(blocks))


def waic(ll):
    '''A function that computes lppd, p_waic and WAIC from pointwise log
    densities. lppd uses log-sum-exp; a single draw gives p_waic = 0.

    Parameters
    ----------
        PointwiseLogLik ll: S x N matrix (a plain array is accepted)

    Returns
    -------
        WaicReport report
    '''
    if not isinstance(ll, PointwiseLogLik):
        ll = PointwiseLogLik(ll)
    values = ll.values
    S = ll.n_draws
    lppd_points = logsumexp(values, axis=0) - np.log(S)
    if S > 1:
        p_points = values.var(axis=0, ddof=1)
    else:
        p_points = np.zeros(ll.n_points)
    report = WaicReport(lppd_points.sum(), p_points.sum(),
                        per_point=-2.0 * (lppd_points - p_points))
    logger.info('WAIC %.2f (lppd %.2f, p_waic %.2f) over %d draws',
                report.waic, report.lppd, report.p_waic, S)
    return report


def compare(reports):
    '''A function that tabulates named WAIC reports, best model first.
    Ties in WAIC are broken by name.

    Parameters
    ----------
        dict reports: name -> WaicReport (or a list of (name, report) pairs)

    Returns
    -------
        DataFrame table: columns name, lppd, p_waic, waic, best
    '''
    items = list(reports.items()) if isinstance(reports, dict) else list(reports)
    if not items:
        raise ValueError('compare needs at least one report')
    names = [name for name, _ in items]
    if len(set(names)) != len(names):
        raise ValueError(f'duplicate model names: {names}')
    items.sort(key=lambda item: (item[1].waic, item[0]))
    rows = [{'name': name, 'lppd': r.lppd, 'p_waic': r.p_waic, 'waic': r.waic,
             'best': position == 0}
            for position, (name, r) in enumerate(items)]
    return pd.DataFrame(rows, columns=COMPARISON_COLUMNS)


def render_comparison(table):
    '''Aligned plain-text rendering with two decimals; the best row is
    marked with "*".'''
    header = ['model', 'lppd', 'p_WAIC', 'WAIC', '']
    body = [[row.name, f'{row.lppd:.2f}', f'{row.p_waic:.2f}', f'{row.waic:.2f}',
             '*' if row.best else '']
            for row in table.itertuples(index=False)]
    widths = [max(len(line[c]) for line in [header] + body) for c in range(len(header))]
    lines = []
    for line in [header] + body:
        cells = [line[0].ljust(widths[0])] + [
            line[c].rjust(widths[c]) for c in range(1, len(header) - 1)] + [line[-1]]
        lines.append('  '.join(cells).rstrip())
    return '\n'.join(lines) + '\n'


def write_comparison(table, path):
    table.to_csv(path, index=False, float_format=TABLE_FLOAT_FORMAT, lineterminator='\n')
