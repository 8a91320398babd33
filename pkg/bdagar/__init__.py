from .graph import OrderedRegionGraph, grid_graph, read_graph
from .dagar import dagar_precision, car_precision, spatial_precision
from .model import BdagarSpec, JointGaussian, LinkingParams, cross_correlation_map
from .data import Dataset, load_dataset, simulate_dataset
from .sampler import PosteriorDraws, run_mcmc, summarize
from .selection import WaicReport, compare, pointwise_log_lik, waic
