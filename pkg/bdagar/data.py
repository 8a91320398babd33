'''Datasets, simulation and map-ready exports.

Dataset CSV schema: a `region` column, one `y_<disease>` column per
disease, then covariate columns shared by name between diseases. Rows may
come in any order; they are aligned to the graph's DAGAR positions.
'''
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from .config import RunConfig, SimulationTruth
from .dagar import as_generator
from .errors import DataError
from .graph import OrderedRegionGraph, read_graph, reorder
from .model import BdagarSpec, JointGaussian, LinkingParams
from .utils.definitions import DRAWS_FLOAT_FORMAT, TABLE_FLOAT_FORMAT

logger = logging.getLogger(__name__)

INTERCEPT = 'intercept'
OUTCOME_PREFIX = 'y_'
VALUE_COLUMNS = ['region', 'mean', 'lo', 'hi']


@dataclass(frozen=True, eq=False)
class Dataset:
    ''' A class used to represent outcomes and covariates of two diseases
    over the regions of one graph. Row j of every array belongs to
    graph.region_ids[j].

    Attributes
    ----------
        OrderedRegionGraph graph: the ordered map
        ndarray outcomes: 2 x k matrix of y_ij; row 0 is the first-modelled disease
        tuple covariates: (X1, X2), k x p_i matrices whose first column is 1
        tuple disease_names: names in model order
        tuple covariate_names: per disease, column names starting with 'intercept'
    '''
    graph: OrderedRegionGraph
    outcomes: np.ndarray
    covariates: tuple
    disease_names: tuple
    covariate_names: tuple

    def __post_init__(self):
        k = self.graph.k
        outcomes = np.asarray(self.outcomes, dtype=float)
        if outcomes.shape != (2, k):
            raise DataError(f'outcomes must be 2 x {k}, got {outcomes.shape}')
        if not np.isfinite(outcomes).all():
            raise DataError('outcomes contain missing or non-finite values')
        object.__setattr__(self, 'outcomes', outcomes)
        if len(self.disease_names) != 2 or self.disease_names[0] == self.disease_names[1]:
            raise DataError(f'need two distinct disease names, got {self.disease_names}')
        matrices = []
        for i, X in enumerate(self.covariates):
            X = np.asarray(X, dtype=float)
            if X.ndim != 2 or X.shape[0] != k or X.shape[1] < 1:
                raise DataError(f'covariates for disease {i + 1} must be {k} x p, got {X.shape}')
            if not np.isfinite(X).all():
                raise DataError(f'covariates for disease {i + 1} contain missing values')
            if not np.all(X[:, 0] == 1.0):
                raise DataError(f'first covariate column of disease {i + 1} must be the intercept')
            if len(self.covariate_names[i]) != X.shape[1]:
                raise DataError(f'covariate names for disease {i + 1} do not match columns')
            matrices.append(X)
        object.__setattr__(self, 'covariates', tuple(matrices))
        object.__setattr__(self, 'disease_names', tuple(self.disease_names))
        object.__setattr__(self, 'covariate_names',
                           tuple(tuple(names) for names in self.covariate_names))

    @property
    def k(self):
        return self.graph.k

    @property
    def p(self):
        return tuple(X.shape[1] for X in self.covariates)

    def to_frame(self):
        '''Back to the CSV schema (intercept dropped), in graph order.'''
        frame = pd.DataFrame({'region': list(self.graph.region_ids)})
        for name, y in zip(self.disease_names, self.outcomes):
            frame[OUTCOME_PREFIX + name] = y
        for names, X in zip(self.covariate_names, self.covariates):
            for j, column in enumerate(names):
                if column != INTERCEPT and column not in frame:
                    frame[column] = X[:, j]
        return frame


def write_dataset(dataset, path):
    '''Write a dataset CSV at full float precision so it reloads exactly.'''
    dataset.to_frame().to_csv(
        path, index=False, float_format=DRAWS_FLOAT_FORMAT, lineterminator='\n',
        encoding='utf-8')
    logger.info('wrote %d regions to %s', dataset.k, path)


def load_dataset(data_csv, graph_file, config=None):
    '''A function that reads a dataset CSV and aligns it with a graph.

    Parameters
    ----------
        str data_csv: path to the CSV (region, y_<d1>, y_<d2>, covariates...)
        graph_file: path to an edge-list/JSON graph, or an OrderedRegionGraph
        RunConfig config: disease order, covariate selection, vertex order,
            outcome transform (defaults when None)

    Returns
    -------
        Dataset dataset: rows in DAGAR order, intercept prepended
    '''
    config = config or RunConfig()
    graph = graph_file if isinstance(graph_file, OrderedRegionGraph) else read_graph(graph_file)
    if config.vertex_order is not None:
        graph = reorder(graph, config.vertex_order)

    frame = pd.read_csv(data_csv, dtype={'region': str}, encoding='utf-8',
                        float_precision='round_trip')
    if 'region' not in frame.columns:
        raise DataError('missing "region" column', location=str(data_csv))
    regions = frame['region']
    if regions.isna().any():
        row = int(np.flatnonzero(regions.isna())[0]) + 2
        raise DataError('empty region id', location=f'{data_csv}:{row}')
    duplicated = regions[regions.duplicated()].tolist()
    if duplicated:
        raise DataError(f'duplicate regions {sorted(set(duplicated))}', location=str(data_csv))
    unknown = sorted(set(regions) - set(graph.region_ids))
    if unknown:
        raise DataError(f'regions absent from the graph: {unknown}', location=str(data_csv))
    missing = sorted(set(graph.region_ids) - set(regions))
    if missing:
        raise DataError(f'graph regions missing from the data: {missing}', location=str(data_csv))

    # outcome columns
    outcome_columns = [c for c in frame.columns if c.startswith(OUTCOME_PREFIX)]
    available = [c[len(OUTCOME_PREFIX):] for c in outcome_columns]
    if config.disease_order is not None:
        diseases = tuple(config.disease_order)
        for name in diseases:
            if name not in available:
                raise DataError(f'unknown disease {name!r}; outcome columns are {available}',
                                location=str(data_csv))
    elif len(available) == 2:
        diseases = tuple(available)
    else:
        raise DataError(f'expected two y_ columns, found {available}; set disease_order',
                        location=str(data_csv))

    # covariate selection
    candidates = [c for c in frame.columns if c != 'region' and c not in outcome_columns]
    selection = []
    for name in diseases:
        columns = candidates if config.covariates is None else config.covariates.get(name, [])
        for column in columns:
            if column not in candidates:
                raise DataError(f'unknown covariate column {column!r} for {name!r}',
                                location=str(data_csv))
            if column == INTERCEPT:
                raise DataError(f'column name {INTERCEPT!r} is reserved', location=str(data_csv))
        selection.append(list(columns))
    if config.covariates is not None:
        extra = sorted(set(config.covariates) - set(diseases))
        if extra:
            raise DataError(f'covariates given for unknown diseases {extra}', location=str(data_csv))

    frame = frame.set_index('region').loc[list(graph.region_ids)]
    used = [OUTCOME_PREFIX + d for d in diseases] + sorted({c for s in selection for c in s})
    for column in used:
        values = pd.to_numeric(frame[column], errors='coerce')
        bad = values.isna()
        if bad.any():
            region = frame.index[np.flatnonzero(bad.to_numpy())[0]]
            raise DataError(f'missing or non-numeric value in column {column!r}',
                            location=f'{data_csv}: region {region}')
        frame[column] = values.astype(float)

    outcomes = np.vstack([frame[OUTCOME_PREFIX + d].to_numpy() for d in diseases])
    if config.transform == 'log':
        if (outcomes <= 0).any():
            raise DataError('log transform needs strictly positive outcomes', location=str(data_csv))
        outcomes = np.log(outcomes)

    covariates, names = [], []
    for columns in selection:
        X = np.column_stack([np.ones(graph.k)] + [frame[c].to_numpy() for c in columns])
        covariates.append(X)
        names.append([INTERCEPT] + columns)
    logger.info('loaded %d regions, diseases %s, p=%s', graph.k, diseases,
                [len(n) for n in names])
    return Dataset(graph, outcomes, tuple(covariates), diseases, tuple(names))


def simulate_dataset(graph, truth, rng=None, covariates=None):
    '''A function that simulates a dataset from known parameters:
    w ~ N(0, Qw^{-1}), then y_ij = x_ij^T beta_i + w_ij + e_ij with
    e_ij ~ N(0, sigma2_i).

    Covariates are shared columns x1..xm (m = max(p_i) - 1); disease i uses
    the first p_i - 1 of them. They are drawn standard normal unless given.

    Parameters
    ----------
        OrderedRegionGraph graph: the ordered map
        SimulationTruth truth: parameters (its seed is used when rng is None)
        Generator rng: numpy random stream or seed
        array covariates: optional k x m matrix

    Returns
    -------
        Dataset dataset: the simulated dataset
        SimulationTruth truth: copy of the input with w filled in
    '''
    rng = as_generator(truth.seed if rng is None else rng)
    k = graph.k
    m = max(len(truth.beta1), len(truth.beta2)) - 1
    if covariates is None:
        covariates = rng.standard_normal((k, m))
    covariates = np.asarray(covariates, dtype=float)
    if covariates.ndim == 1:
        covariates = covariates[:, None]
    if covariates.ndim != 2 or covariates.shape[0] != k or covariates.shape[1] < m:
        raise DataError(f'need a {k} x {m} covariate matrix, got {covariates.shape}')
    spec = BdagarSpec(
        graph=graph, kind=truth.kind, rho1=truth.rho[0], rho2=truth.rho[1],
        tau1=truth.tau[0], tau2=truth.tau[1], link=LinkingParams(*truth.eta))
    w = JointGaussian(spec).sample(rng)

    column_names = [f'x{j + 1}' for j in range(m)]
    X, names, outcomes = [], [], []
    for i, beta in enumerate((truth.beta1, truth.beta2)):
        p = len(beta)
        design = np.column_stack([np.ones(k), covariates[:, :p - 1]])
        noise = np.sqrt(truth.sigma2[i]) * rng.standard_normal(k)
        outcomes.append(design @ np.asarray(beta, dtype=float) + w[i * k:(i + 1) * k] + noise)
        X.append(design)
        names.append([INTERCEPT] + column_names[:p - 1])
    dataset = Dataset(graph, np.vstack(outcomes), tuple(X), tuple(truth.disease_names),
                      tuple(names))
    logger.info('simulated %s data on %d regions (seed %s)', truth.model, k, truth.seed)
    return dataset, truth.model_copy(update={'w': w.tolist()})


def values_frame(values):
    '''Coerce per-region summaries into a DataFrame with VALUE_COLUMNS.

    Accepts a DataFrame with those columns or a mapping
    region -> (mean, lo, hi).'''
    if isinstance(values, pd.DataFrame):
        missing = [c for c in VALUE_COLUMNS if c not in values.columns]
        if missing:
            raise DataError(f'values are missing columns {missing}')
        frame = values[VALUE_COLUMNS].copy()
    else:
        frame = pd.DataFrame(
            [(region, *triple) for region, triple in values.items()], columns=VALUE_COLUMNS)
    frame['region'] = frame['region'].astype(str)
    if frame['region'].duplicated().any():
        raise DataError('values contain duplicate regions')
    return frame.sort_values('region', kind='mergesort').reset_index(drop=True)


def export_values_csv(values, path):
    '''A function that writes per-region summaries as region,mean,lo,hi,
    sorted by region id, 6 significant digits, UTF-8 with LF endings.

    Parameters
    ----------
        values: DataFrame or mapping region -> (mean, lo, hi)
        str path: output CSV path
    '''
    frame = values_frame(values)
    frame.to_csv(path, index=False, float_format=TABLE_FLOAT_FORMAT,
                 lineterminator='\n', encoding='utf-8')
    logger.info('wrote %d region values to %s', len(frame), path)


def read_values_csv(path):
    frame = pd.read_csv(path, dtype={'region': str}, encoding='utf-8')
    return values_frame(frame)


def export_choropleth(values, geojson_in, id_property, value_field, path):
    '''A function that joins per-region values onto the features of a
    GeoJSON FeatureCollection. Each feature's properties gain value_field
    plus value_field_lo and value_field_hi; nothing else changes.

    Parameters
    ----------
        values: DataFrame or mapping region -> (mean, lo, hi)
        str geojson_in: path to the input FeatureCollection
        str id_property: feature property holding the region id
        str value_field: property name for the joined mean
        str path: output GeoJSON path
    '''
    table = values_frame(values).set_index('region')
    try:
        doc = json.loads(Path(geojson_in).read_text(encoding='utf-8'))
    except json.JSONDecodeError as err:
        raise DataError(f'malformed GeoJSON: {err}', location=str(geojson_in))
    if not isinstance(doc, dict) or doc.get('type') != 'FeatureCollection' \
            or not isinstance(doc.get('features'), list):
        raise DataError('expected a GeoJSON FeatureCollection', location=str(geojson_in))

    unmatched = []
    for index, feature in enumerate(doc['features']):
        properties = feature.get('properties') if isinstance(feature, dict) else None
        if not isinstance(properties, dict) or id_property not in properties:
            raise DataError(f'feature {index} has no property {id_property!r}',
                            location=str(geojson_in))
        region = str(properties[id_property])
        if region not in table.index:
            unmatched.append(region)
            continue
        row = table.loc[region]
        properties[value_field] = float(row['mean'])
        properties[f'{value_field}_lo'] = float(row['lo'])
        properties[f'{value_field}_hi'] = float(row['hi'])
    if unmatched:
        raise DataError(f'features without values: {unmatched}', location=str(geojson_in))

    Path(path).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + '\n',
                          encoding='utf-8')
    logger.info('joined %s onto %d features in %s', value_field, len(doc['features']), path)
