'''Validated run configuration.

Every model here rejects unknown keys, so a misspelled field in a JSON
config fails loudly instead of silently falling back to a default.
'''
import json
import logging
from pathlib import Path
from typing import Annotated, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, model_validator

from .utils.definitions import MCMC_DEFAULTS, MODEL_KIND, MODELS, PRIOR_DEFAULTS, TRANSFORMS

logger = logging.getLogger(__name__)

UnitInterval = Annotated[float, Field(ge=0.0, lt=1.0)]


class _Strict(BaseModel):
    model_config = ConfigDict(extra='forbid')


class PriorSpec(_Strict):
    '''Hyperparameters of the hierarchy. 1/tau ~ IG(a_tau, b_tau), i.e.
    tau ~ Gamma(shape a_tau, rate b_tau); sigma^2 ~ IG(a_sigma, b_sigma);
    beta ~ N(0, beta_var I); eta ~ N(0, eta_var I); rho ~ Uniform(0, 1).'''
    a_tau: PositiveFloat = PRIOR_DEFAULTS['a_tau']
    b_tau: PositiveFloat = PRIOR_DEFAULTS['b_tau']
    a_sigma: PositiveFloat = PRIOR_DEFAULTS['a_sigma']
    b_sigma: PositiveFloat = PRIOR_DEFAULTS['b_sigma']
    beta_var: PositiveFloat = PRIOR_DEFAULTS['beta_var']
    eta_var: PositiveFloat = PRIOR_DEFAULTS['eta_var']


class McmcConfig(_Strict):
    iterations: int = Field(MCMC_DEFAULTS['iterations'], gt=0)
    burn_in: int = Field(MCMC_DEFAULTS['burn_in'], ge=0)
    thin: int = Field(MCMC_DEFAULTS['thin'], ge=1)
    n_chains: int = Field(MCMC_DEFAULTS['n_chains'], ge=1)
    seed: int = Field(MCMC_DEFAULTS['seed'], ge=0, lt=2 ** 64)
    # step sizes adapt during burn-in only
    adapt: bool = MCMC_DEFAULTS['adapt']
    initial_step: Tuple[PositiveFloat, PositiveFloat] = MCMC_DEFAULTS['initial_step']
    target_accept: float = Field(MCMC_DEFAULTS['target_accept'], gt=0.0, lt=1.0)
    adapt_interval: int = Field(MCMC_DEFAULTS['adapt_interval'], ge=1)
    log_every: int = Field(MCMC_DEFAULTS['log_every'], ge=1)

    @model_validator(mode='after')
    def _burn_in_before_end(self):
        if self.burn_in >= self.iterations:
            raise ValueError(
                f'burn_in ({self.burn_in}) must be smaller than iterations ({self.iterations})')
        return self

    @property
    def n_retained(self):
        '''Retained draws per chain after burn-in and thinning.'''
        return len(range(self.burn_in, self.iterations, self.thin))


class RunConfig(_Strict):
    ''' Everything a `fit` needs besides the data and graph files.

    disease_order names the disease modelled first (the marginal) and the
    one modelled conditionally. When omitted, the order of the y_ columns
    in the dataset is used.
    '''
    model: Literal[MODELS] = 'bdagar'
    disease_order: Optional[Tuple[str, str]] = None
    covariates: Optional[Dict[str, List[str]]] = None
    prior: PriorSpec = Field(default_factory=PriorSpec)
    mcmc: McmcConfig = Field(default_factory=McmcConfig)
    vertex_order: Optional[List[str]] = None
    output_dir: Optional[str] = None
    transform: Literal[TRANSFORMS] = 'identity'

    @model_validator(mode='after')
    def _distinct_diseases(self):
        if self.disease_order is not None and self.disease_order[0] == self.disease_order[1]:
            raise ValueError('disease_order must name two different diseases')
        return self

    @property
    def kind(self):
        return MODEL_KIND[self.model]


class SimulationTruth(_Strict):
    '''Parameters a synthetic dataset is generated from. w is filled in
    with the drawn latent effects once the dataset exists.'''
    beta1: List[float] = Field(min_length=1)
    beta2: List[float] = Field(min_length=1)
    sigma2: Tuple[PositiveFloat, PositiveFloat]
    tau: Tuple[PositiveFloat, PositiveFloat]
    rho: Tuple[UnitInterval, UnitInterval]
    eta: Tuple[float, float]
    seed: int = Field(0, ge=0, lt=2 ** 64)
    model: Literal[MODELS] = 'bdagar'
    disease_names: Tuple[str, str] = ('d1', 'd2')
    w: Optional[List[float]] = None

    @property
    def kind(self):
        return MODEL_KIND[self.model]


def load_config(path):
    '''Read a RunConfig from a JSON file.'''
    text = Path(path).read_text(encoding='utf-8')
    config = RunConfig.model_validate_json(text)
    logger.debug('loaded config from %s', path)
    return config


def load_truth(path):
    '''Read a SimulationTruth from a JSON file.'''
    return SimulationTruth.model_validate_json(Path(path).read_text(encoding='utf-8'))


def dump_json(model, path):
    '''Write a pydantic model (or plain dict) as indented, key-stable JSON.'''
    doc = model.model_dump(mode='json') if isinstance(model, BaseModel) else model
    Path(path).write_text(
        json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + '\n',
        encoding='utf-8')
