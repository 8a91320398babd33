from typing import NamedTuple

import arviz as az
import numpy as np
from scipy.special import expit, logit

from bdagar.utils.definitions import INTERVAL, MIN_ESS_DRAWS

# define scope of package
__all__ = [
    "to_unit", "from_unit", "log_jacobian", "interval_summary",
    "format_interval", "EffectiveSampleSize",
    "effective_sample_size",
]
def __dir__():
    default = [key for key in globals().keys() if key[:2] == '__']
    return default + __all__


def to_unit(theta):
    '''Map a real line value back to (0, 1) with the logistic function.'''
    return expit(theta)


def from_unit(rho):
    '''Map a value in (0, 1) onto the real line with the logit function.'''
    return logit(rho)


def log_jacobian(rho):
    '''log |d rho / d theta| for rho = expit(theta), i.e. log rho(1 - rho).'''
    return np.log(rho) + np.log1p(-rho)


def interval_summary(values, interval=INTERVAL):
    '''A function that reduces a vector of draws to its posterior mean and
    equal-tailed credible interval. Quantiles use linear interpolation
    between order statistics.

    Parameters
    ----------
        array values: 1-d array of draws
        tuple interval: lower and upper tail probabilities

    Returns
    -------
        tuple (mean, lo, hi): floats
    '''
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size == 0:
        raise ValueError('interval_summary expects a non-empty 1-d array')
    lo, hi = np.quantile(values, interval)
    return float(values.mean()), float(lo), float(hi)


def format_interval(mean, lo, hi, digits=2):
    '''Render "mean (lo, hi)" with a fixed number of decimals.'''
    return f'{mean:.{digits}f} ({lo:.{digits}f}, {hi:.{digits}f})'


class EffectiveSampleSize(NamedTuple):
    value: float
    degenerate: bool


def effective_sample_size(chain):
    '''A function that estimates the effective sample size of a single
    chain with arviz's mean estimator (Geyer's initial positive and
    monotone sequences, capped at n log10(n) for anti-correlated chains).

    A constant chain, or one shorter than four draws, has no defined
    autocorrelation; it is reported with value 0 and the degenerate flag set.

    Parameters
    ----------
        array chain: 1-d array of draws

    Returns
    -------
        EffectiveSampleSize ess: (value, degenerate)
    '''
    x = np.asarray(chain, dtype=float)
    if x.size < MIN_ESS_DRAWS or np.ptp(x) == 0.0:
        return EffectiveSampleSize(0.0, True)
    value = az.ess(x[None, :], method='mean')
    return EffectiveSampleSize(float(value), False)
