'''Univariate DAGAR and proper-CAR precision matrices.

For an ordered graph with earlier-neighbor counts n_<i, the DAGAR prior
has precision Q(rho) = (I - B)^T F (I - B) with

    b_ij = rho / (1 + (n_<i - 1) rho^2)     for j in N(i)
    f_ii = (1 + (n_<i - 1) rho^2) / (1 - rho^2)

B is strictly lower-triangular, so det(I - B) = 1 and log|Q| = sum log f_ii.
The proper-CAR comparator uses Q(rho) = D - rho M.
'''
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import linalg, sparse
from scipy.io import mmwrite
from scipy.sparse.linalg import spsolve_triangular

from .errors import FactorizationError, GraphError
from .utils.definitions import KINDS

logger = logging.getLogger(__name__)

LOG_2PI = np.log(2.0 * np.pi)


def check_rho(rho):
    '''Validate a spatial autocorrelation parameter; return it as float.'''
    rho = float(rho)
    if not np.isfinite(rho) or not 0.0 <= rho < 1.0:
        raise ValueError(f'rho must lie in [0, 1), got {rho}')
    return rho


def as_generator(rng):
    '''Accept a numpy Generator or an integer seed.'''
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


@dataclass(frozen=True, eq=False)
class DagarComponents:
    '''B (k x k strictly lower-triangular CSR), F (length-k diagonal), rho.'''
    B: sparse.csr_matrix
    F: np.ndarray
    rho: float


@dataclass(frozen=True)
class GmrfScale:
    '''Positive precision multiplier tau.'''
    tau: float

    def __post_init__(self):
        tau = float(self.tau)
        if not np.isfinite(tau) or tau <= 0.0:
            raise ValueError(f'tau must be positive, got {self.tau}')
        object.__setattr__(self, 'tau', tau)


class SpatialPrecision:
    ''' A class used to represent a sparse GMRF precision matrix together
    with the factor information needed to solve, sample and evaluate
    densities without forming its inverse.

    Attributes
    ----------
        csc_matrix Q: k x k symmetric positive-definite precision
        float logdet: log-determinant of Q
        str kind: 'dagar' or 'car'
        DagarComponents components: B and F (kind == 'dagar' only)
    '''

    def __init__(self, Q, logdet, kind, components=None, cholesky=None):
        if kind not in KINDS:
            raise ValueError(f'unknown precision kind {kind!r}; use one of {KINDS}')
        self.Q = sparse.csc_matrix(Q)
        self.logdet = float(logdet)
        self.kind = kind
        self.components = components
        self._cholesky = cholesky
        if kind == 'dagar':
            k = self.Q.shape[0]
            # unit lower-triangular I - B and its transpose, kept as CSR
            self._lower = (sparse.identity(k, format='csr') - components.B).tocsr()
            self._upper = self._lower.T.tocsr()
            self._sqrt_f = np.sqrt(components.F)

    def __repr__(self):
        return f'SpatialPrecision(kind={self.kind!r}, k={self.k}, logdet={self.logdet:.6g})'

    @property
    def k(self):
        return self.Q.shape[0]

    @property
    def cholesky(self):
        '''Dense lower Cholesky factor of Q (computed once).'''
        if self._cholesky is None:
            self._cholesky = dense_cholesky(self.Q.toarray())
        return self._cholesky

    def toarray(self):
        return self.Q.toarray()

    def quad_form(self, x):
        '''x^T Q x, using ||F^{1/2}(I - B)x||^2 for DAGAR.'''
        x = np.asarray(x, dtype=float)
        if self.kind == 'dagar':
            r = self._lower @ x
            return float(np.dot(self.components.F * r, r))
        return float(x @ (self.Q @ x))

    def solve(self, rhs):
        '''Q^{-1} rhs by triangular solves (DAGAR) or Cholesky (CAR).'''
        rhs = np.asarray(rhs, dtype=float)
        if self.kind == 'dagar':
            u = spsolve_triangular(self._upper, rhs, lower=False)
            v = u / (self.components.F if rhs.ndim == 1 else self.components.F[:, None])
            return spsolve_triangular(self._lower, v, lower=True)
        return linalg.cho_solve((self.cholesky, True), rhs)

    def half_solve(self, z):
        '''L^{-T} z where L L^T = Q; maps standard normals to N(0, Q^{-1}).'''
        z = np.asarray(z, dtype=float)
        if self.kind == 'dagar':
            scale = self._sqrt_f if z.ndim == 1 else self._sqrt_f[:, None]
            return spsolve_triangular(self._lower, z / scale, lower=True)
        return linalg.solve_triangular(self.cholesky, z, lower=True, trans='T')

    def inverse(self):
        '''Dense Q^{-1}. For diagnostics and small maps only.'''
        return self.solve(np.eye(self.k))


def dense_cholesky(A):
    '''Lower Cholesky factor of a dense matrix; FactorizationError if not PD.'''
    try:
        return linalg.cholesky(A, lower=True)
    except linalg.LinAlgError as err:
        raise FactorizationError(f'matrix is not positive-definite: {err}')


@lru_cache(maxsize=64)
def _b_pattern(graph):
    # row/column indices of the non-zeros of B and the n_<i counts
    neighbors = graph.neighbors
    rows = np.repeat(np.arange(graph.k), neighbors.counts)
    cols = np.array([j for s in neighbors.sets for j in s], dtype=int)
    return rows, cols, np.asarray(neighbors.counts, dtype=float)


def build_BF(graph, rho):
    '''A function that evaluates the DAGAR matrices B and F at rho.

    Parameters
    ----------
        OrderedRegionGraph graph: the ordered map
        float rho: spatial autocorrelation in [0, 1)

    Returns
    -------
        DagarComponents components: B, F and rho
    '''
    rho = check_rho(rho)
    rows, cols, counts = _b_pattern(graph)
    rho2 = rho * rho
    # n_<1 = 0 gives f_11 = (1 - rho^2)/(1 - rho^2) = 1
    denom = 1.0 + (counts - 1.0) * rho2
    F = denom / (1.0 - rho2)
    b = rho / denom
    B = sparse.csr_matrix((b[rows], (rows, cols)), shape=(graph.k, graph.k))
    return DagarComponents(B=B, F=F, rho=rho)


def dagar_precision(graph, rho):
    '''A function that assembles Q(rho) = (I - B)^T F (I - B) sparsely.
    The log-determinant is the closed form sum log f_ii.

    Parameters
    ----------
        OrderedRegionGraph graph: the ordered map
        float rho: spatial autocorrelation in [0, 1)

    Returns
    -------
        SpatialPrecision precision: kind 'dagar'
    '''
    components = build_BF(graph, rho)
    lower = sparse.identity(graph.k, format='csr') - components.B
    Q = lower.T @ sparse.diags(components.F) @ lower
    return SpatialPrecision(Q, np.log(components.F).sum(), 'dagar', components)


def car_precision(graph, rho):
    '''A function that assembles the proper-CAR precision D - rho M, with D
    the diagonal of degrees. The log-determinant comes from its dense
    Cholesky factor.

    Parameters
    ----------
        OrderedRegionGraph graph: the map; every region needs a neighbor
        float rho: spatial autocorrelation in [0, 1)

    Returns
    -------
        SpatialPrecision precision: kind 'car'
    '''
    rho = check_rho(rho)
    degrees = graph.degrees
    isolated = [graph.region_ids[i] for i in np.flatnonzero(degrees == 0)]
    if isolated:
        raise GraphError(
            f'proper CAR needs every region to have a neighbor; isolated: {isolated}')
    Q = (sparse.diags(degrees.astype(float)) - rho * graph.adjacency).tocsc()
    chol = dense_cholesky(Q.toarray())
    logdet = 2.0 * np.log(np.diag(chol)).sum()
    return SpatialPrecision(Q, logdet, 'car', cholesky=chol)


def spatial_precision(graph, rho, kind='dagar'):
    '''Dispatch to the DAGAR or proper-CAR precision builder.'''
    if kind == 'dagar':
        return dagar_precision(graph, rho)
    if kind == 'car':
        return car_precision(graph, rho)
    raise ValueError(f'unknown precision kind {kind!r}; use one of {KINDS}')


def gmrf_log_density(w, scale, prec, mean=None):
    '''A function that evaluates log N(w | mean, tau Q) where the second
    argument is a precision:

        -(k/2) log 2pi + (k/2) log tau + (1/2) log|Q| - (tau/2) r^T Q r

    Parameters
    ----------
        array w: length-k vector
        GmrfScale scale: precision multiplier tau
        SpatialPrecision prec: Q
        array mean: length-k vector (zeros if omitted)

    Returns
    -------
        float logp: the log density
    '''
    w = np.asarray(w, dtype=float)
    k = prec.k
    mean = np.zeros(k) if mean is None else np.asarray(mean, dtype=float)
    if w.shape != (k,) or mean.shape != (k,):
        raise ValueError(
            f'dimension mismatch: w {w.shape}, mean {mean.shape}, precision k={k}')
    r = w - mean
    return float(
        -0.5 * k * LOG_2PI + 0.5 * k * np.log(scale.tau) + 0.5 * prec.logdet
        - 0.5 * scale.tau * prec.quad_form(r))


def sample_gmrf(scale, prec, mean=None, rng=None, size=None):
    '''A function that draws from N(mean, (tau Q)^{-1}) as
    mean + L^{-T} z / sqrt(tau) with L L^T = Q and z standard normal.

    Parameters
    ----------
        GmrfScale scale: precision multiplier tau
        SpatialPrecision prec: Q
        array mean: length-k vector (zeros if omitted)
        Generator rng: numpy random stream or integer seed
        int size: number of draws; None for a single vector

    Returns
    -------
        array w: shape (k,) or (size, k)
    '''
    rng = as_generator(rng)
    k = prec.k
    mean = np.zeros(k) if mean is None else np.asarray(mean, dtype=float)
    if mean.shape != (k,):
        raise ValueError(f'dimension mismatch: mean {mean.shape}, precision k={k}')
    if size is None:
        z = rng.standard_normal(k)
        return mean + prec.half_solve(z) / np.sqrt(scale.tau)
    z = rng.standard_normal((k, int(size)))
    return mean + (prec.half_solve(z) / np.sqrt(scale.tau)).T


def write_matrix_market(prec, path):
    '''Dump the precision in Matrix-Market coordinate format.'''
    comment = f'{prec.kind} precision, k={prec.k}, logdet={prec.logdet!r}'
    mmwrite(str(path), sparse.coo_matrix(prec.Q), comment=comment, symmetry='general')
    logger.info('wrote %s precision to %s', prec.kind, path)
