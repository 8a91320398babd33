'''The bivariate DAGAR (BDAGAR) model.

Disease 1 follows a univariate DAGAR, w1 ~ N(0, tau1 Q1(rho1)), and disease
2 given disease 1 follows w2 | w1 ~ N(A21 w1, tau2 Q2(rho2)) with the
linking matrix A21 = eta0 I + eta1 M. The joint precision of
w = (w1, w2) follows from that factorisation:

    Qw = [[tau1 Q1 + tau2 A^T Q2 A, -tau2 A^T Q2],
          [-tau2 Q2 A,               tau2 Q2    ]]

Setting kind='car' swaps both marginals for proper-CAR precisions, which
gives the GMCAR comparator with the same linking structure.
'''
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import pandas as pd
from scipy import sparse

from .dagar import (GmrfScale, LOG_2PI, as_generator, check_rho,
                    dense_cholesky, sample_gmrf, spatial_precision)
from .utils.definitions import KINDS
from .utils.functions import interval_summary

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinkingParams:
    '''Coefficients of A21 = eta0 I + eta1 M.'''
    eta0: float = 0.0
    eta1: float = 0.0

    def __post_init__(self):
        for name in ('eta0', 'eta1'):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f'{name} must be finite, got {value}')
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class BdagarSpec:
    ''' A class used to represent one parameter setting of the bivariate
    model on a shared graph.

    Attributes
    ----------
        OrderedRegionGraph graph: the ordered map shared by both diseases
        str kind: 'dagar' (BDAGAR) or 'car' (GMCAR comparator)
        float rho1, rho2: spatial autocorrelations in [0, 1)
        float tau1, tau2: positive precision multipliers
        LinkingParams link: eta0, eta1
    '''
    graph: object
    kind: str = 'dagar'
    rho1: float = 0.5
    rho2: float = 0.5
    tau1: float = 1.0
    tau2: float = 1.0
    link: LinkingParams = LinkingParams()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f'unknown precision kind {self.kind!r}; use one of {KINDS}')
        object.__setattr__(self, 'rho1', check_rho(self.rho1))
        object.__setattr__(self, 'rho2', check_rho(self.rho2))
        object.__setattr__(self, 'tau1', GmrfScale(self.tau1).tau)
        object.__setattr__(self, 'tau2', GmrfScale(self.tau2).tau)
        if not isinstance(self.link, LinkingParams):
            object.__setattr__(self, 'link', LinkingParams(*self.link))


def linking_matrix(link, graph):
    '''A21 = eta0 I + eta1 M as a sparse CSR matrix.'''
    A = link.eta0 * sparse.identity(graph.k, format='csr')
    if link.eta1 != 0.0:
        A = A + link.eta1 * graph.adjacency
    return sparse.csr_matrix(A)


class JointGaussian:
    ''' A class used to represent the joint distribution N(0, Qw^{-1}) of
    w = (w1, w2) for one BdagarSpec.

    Qw is assembled sparsely; its log-determinant uses the block-triangular
    factorisation, k log tau1 + log|Q1| + k log tau2 + log|Q2|. Covariance
    blocks are computed on first access by solves against Q1 and Q2.
    '''

    def __init__(self, spec):
        self.spec = spec
        self.k = spec.graph.k
        self.Q1 = spatial_precision(spec.graph, spec.rho1, spec.kind)
        self.Q2 = spatial_precision(spec.graph, spec.rho2, spec.kind)
        self.A = linking_matrix(spec.link, spec.graph)
        t1, t2 = spec.tau1, spec.tau2
        Q2A = self.Q2.Q @ self.A
        self.Qw = sparse.bmat([
            [t1 * self.Q1.Q + t2 * (self.A.T @ Q2A), -t2 * Q2A.T],
            [-t2 * Q2A, t2 * self.Q2.Q],
        ], format='csc')
        self.logdet = (self.k * np.log(t1) + self.Q1.logdet
                       + self.k * np.log(t2) + self.Q2.logdet)

    def __repr__(self):
        return f'JointGaussian(kind={self.spec.kind!r}, k={self.k}, logdet={self.logdet:.6g})'

    @cached_property
    def blocks(self):
        '''(C11, C12, C21, C22), the k x k blocks of Qw^{-1}.'''
        t1, t2 = self.spec.tau1, self.spec.tau2
        C11 = self.Q1.inverse() / t1
        C12 = np.asarray((self.A @ C11.T).T)
        C21 = C12.T
        C22 = np.asarray(self.A @ C12) + self.Q2.inverse() / t2
        return C11, C12, C21, C22

    def covariance(self):
        '''Dense 2k x 2k covariance Qw^{-1} assembled from the blocks.'''
        C11, C12, C21, C22 = self.blocks
        return np.block([[C11, C12], [C21, C22]])

    def log_density(self, w):
        '''log N(w | 0, Qw) with Qw as precision.'''
        w = np.asarray(w, dtype=float)
        if w.shape != (2 * self.k,):
            raise ValueError(f'expected w of length {2 * self.k}, got {w.shape}')
        quad = float(w @ (self.Qw @ w))
        return -self.k * LOG_2PI + 0.5 * self.logdet - 0.5 * quad

    def sample(self, rng=None, size=None):
        '''Draw w = (w1, w2) by the conditional construction: w1 from the
        first marginal, then w2 = A21 w1 + noise from the second.'''
        rng = as_generator(rng)
        w1 = sample_gmrf(GmrfScale(self.spec.tau1), self.Q1, rng=rng, size=size)
        if size is None:
            mean2 = self.A @ w1
            w2 = sample_gmrf(GmrfScale(self.spec.tau2), self.Q2, mean2, rng=rng)
            return np.concatenate([w1, w2])
        noise = sample_gmrf(GmrfScale(self.spec.tau2), self.Q2, rng=rng, size=size)
        w2 = np.asarray(self.A @ w1.T).T + noise
        return np.hstack([w1, w2])


def joint_precision(spec, check=True):
    '''A function that builds the joint BDAGAR distribution of (w1, w2).

    Parameters
    ----------
        BdagarSpec spec: model parameters
        bool check: verify positive-definiteness with a Cholesky factor

    Returns
    -------
        JointGaussian joint: Qw, its log-determinant and lazy covariance blocks
    '''
    joint = JointGaussian(spec)
    if check:
        # any failure here is a construction bug: Qw is PD for every valid spec
        dense_cholesky(joint.Qw.toarray())
    return joint


def joint_covariance(spec):
    '''The four k x k blocks (C11, C12, C21, C22) of Qw^{-1}:

        C11 = Q1^{-1}/tau1,  C12 = C11 A^T,  C21 = C12^T,
        C22 = A C11 A^T + Q2^{-1}/tau2
    '''
    return JointGaussian(spec).blocks


def cross_correlation_map(spec):
    '''A function that computes, for every region j, the correlation
    between w1j and w2j implied by the joint covariance.

    Parameters
    ----------
        BdagarSpec spec: model parameters

    Returns
    -------
        array corr: length-k vector with entries in [-1, 1]
    '''
    C11, C12, _, C22 = joint_covariance(spec)
    corr = np.diag(C12) / np.sqrt(np.diag(C11) * np.diag(C22))
    return np.clip(corr, -1.0, 1.0)


def spec_from_draw(graph, kind, row):
    '''BdagarSpec from one posterior draw given as a name -> value mapping.'''
    return BdagarSpec(
        graph=graph, kind=kind,
        rho1=row['rho_1'], rho2=row['rho_2'],
        tau1=row['tau_1'], tau2=row['tau_2'],
        link=LinkingParams(row['eta_0'], row['eta_1']),
    )


def posterior_cross_correlation(draws):
    '''A function that evaluates the per-region cross-disease correlation
    at every retained draw and summarises it by posterior mean and 95%
    equal-tailed interval.

    Parameters
    ----------
        PosteriorDraws draws: output of run_mcmc

    Returns
    -------
        DataFrame values: columns region, mean, lo, hi (region order of the graph)
    '''
    graph = draws.graph
    columns = ['rho_1', 'rho_2', 'tau_1', 'tau_2', 'eta_0', 'eta_1']
    params = draws.frame[columns].to_dict('records')
    maps = np.array([cross_correlation_map(spec_from_draw(graph, draws.kind, row))
                     for row in params])
    rows = []
    for j, region in enumerate(graph.region_ids):
        mean, lo, hi = interval_summary(maps[:, j])
        rows.append({'region': region, 'mean': mean, 'lo': lo, 'hi': hi})
    logger.info('evaluated cross-disease correlation over %d draws', len(params))
    return pd.DataFrame(rows, columns=['region', 'mean', 'lo', 'hi'])
