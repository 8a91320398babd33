'''Ordered areal adjacency graphs.

A DAGAR prior depends on the order of the regions, so a graph here is an
ordered vertex set: position p of ``region_ids`` is the p-th vertex of the
directed acyclic construction. Positions are 0-based throughout the
package. Everything downstream (adjacency matrices, precisions, datasets)
is indexed by position.
'''
import json
import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse

from .errors import GraphError

logger = logging.getLogger(__name__)

NODES_HEADER = 'nodes:'


@dataclass(frozen=True)
class NeighborSets:
    ''' Earlier-position neighbors of every vertex.

    sets[i] holds the positions j < i adjacent to position i, sorted;
    counts[i] = |sets[i]| is n_<i (0 for the first vertex).
    '''
    sets: tuple
    counts: tuple

    def __len__(self):
        return len(self.sets)


@dataclass(frozen=True)
class OrderedRegionGraph:
    ''' A class used to represent an areal map as an ordered graph.

    Attributes
    ----------
        tuple region_ids: region labels in DAGAR position order
        frozenset edges: unordered edges as (i, j) position pairs with i < j
        tuple order: order[q] is the position of the q-th input region
        tuple input_ids: region labels in the order they were read
    '''
    region_ids: tuple
    edges: frozenset
    order: tuple = None
    input_ids: tuple = field(default=None, compare=False)

    def __post_init__(self):
        ids = tuple(str(r) for r in self.region_ids)
        object.__setattr__(self, 'region_ids', ids)
        k = len(ids)
        if k == 0:
            raise GraphError('graph has no vertices')
        if len(set(ids)) != k:
            seen = set()
            dupes = sorted({r for r in ids if r in seen or seen.add(r)})
            raise GraphError(f'duplicate region ids: {dupes}')
        # normalise edges to sorted position pairs
        edges = set()
        for a, b in self.edges:
            a, b = int(a), int(b)
            if a == b:
                raise GraphError(f'self-loop at region {ids[a]!r}')
            if not (0 <= a < k and 0 <= b < k):
                raise GraphError(f'edge ({a}, {b}) out of range for k={k}')
            edges.add((min(a, b), max(a, b)))
        object.__setattr__(self, 'edges', frozenset(edges))
        # default: input order is the DAGAR order
        input_ids = ids if self.input_ids is None else tuple(self.input_ids)
        object.__setattr__(self, 'input_ids', input_ids)
        order = tuple(range(k)) if self.order is None else tuple(int(p) for p in self.order)
        if sorted(order) != list(range(k)) or len(input_ids) != k:
            raise GraphError('order is not a bijection on the region positions')
        if any(ids[order[q]] != input_ids[q] for q in range(k)):
            raise GraphError('order does not map input regions to their positions')
        object.__setattr__(self, 'order', order)

    def __repr__(self):
        return (f'OrderedRegionGraph(k={self.k}, edges={len(self.edges)}, '
                f'first={self.region_ids[:3]})')

    @property
    def k(self):
        return len(self.region_ids)

    @cached_property
    def index(self):
        '''dict mapping region id -> position'''
        return {r: i for i, r in enumerate(self.region_ids)}

    @cached_property
    def adjacency(self):
        '''k x k symmetric binary adjacency matrix M (CSR, zero diagonal).'''
        k = self.k
        if not self.edges:
            return sparse.csr_matrix((k, k), dtype=float)
        rows, cols = np.array(sorted(self.edges)).T
        data = np.ones(2 * rows.size)
        M = sparse.coo_matrix(
            (data, (np.r_[rows, cols], np.r_[cols, rows])), shape=(k, k))
        return M.tocsr()

    @cached_property
    def degrees(self):
        return np.asarray(self.adjacency.sum(axis=1)).ravel().astype(int)

    @cached_property
    def neighbors(self):
        return neighbor_sets(self)

    def edge_labels(self):
        '''Set of frozenset({id_a, id_b}) pairs; independent of ordering.'''
        ids = self.region_ids
        return {frozenset((ids[a], ids[b])) for a, b in self.edges}

    def sorted_edges(self):
        return sorted(self.edges)

    def to_edge_list(self):
        '''Serialise as edge-list text: a nodes header then sorted edges.'''
        for r in self.region_ids:
            if (any(c.isspace() for c in r) or ',' in r or r.startswith('#')
                    or r.lower().startswith(NODES_HEADER)):
                raise GraphError(
                    f'region id {r!r} cannot be written as an edge list; use JSON')
        ids = self.region_ids
        lines = [NODES_HEADER + ' ' + ','.join(ids)]
        lines += [f'{ids[a]} {ids[b]}' for a, b in self.sorted_edges()]
        return '\n'.join(lines) + '\n'

    def to_json(self):
        '''Serialise as {"nodes": [...], "edges": [[a, b], ...]}.'''
        ids = self.region_ids
        doc = {
            'nodes': list(ids),
            'edges': [[ids[a], ids[b]] for a, b in self.sorted_edges()],
        }
        return json.dumps(doc, indent=2, ensure_ascii=False) + '\n'


def from_edges(region_ids, labelled_edges):
    '''Build a graph from ordered region ids and (id_a, id_b) label pairs.'''
    region_ids = tuple(region_ids)
    index = {r: i for i, r in enumerate(region_ids)}
    edges = set()
    for a, b in labelled_edges:
        if a == b:
            raise GraphError(f'self-loop at region {a!r}')
        try:
            edges.add((index[a], index[b]))
        except KeyError as err:
            raise GraphError(f'edge names unknown region {err.args[0]!r}')
    return OrderedRegionGraph(region_ids, frozenset(edges))


def parse_adjacency(text):
    '''A function that parses an edge-list document into a graph. Vertices
    are numbered by first appearance; duplicate edges are collapsed.

    Format: one "<id_a> <id_b>" pair per line; lines starting with '#' and
    blank lines are ignored; an optional "nodes: a,b,c" line declares
    vertices (including isolated ones) in order.

    Parameters
    ----------
        str text: the edge-list document

    Returns
    -------
        OrderedRegionGraph graph: graph in first-appearance order
    '''
    ids = []
    seen = set()
    edges = []
    n_duplicates = 0

    def add(region):
        if region not in seen:
            seen.add(region)
            ids.append(region)

    pairs = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith('#'):
            continue
        if line.lower().startswith(NODES_HEADER):
            names = [n.strip() for n in line[len(NODES_HEADER):].split(',')]
            for name in names:
                if not name:
                    raise GraphError('empty name in nodes header', line=lineno)
                add(name)
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise GraphError(
                f'expected "<id_a> <id_b>", got {line!r}', line=lineno)
        a, b = tokens
        if a == b:
            raise GraphError(f'self-loop at region {a!r}', line=lineno)
        add(a)
        add(b)
        key = frozenset((a, b))
        if key in pairs:
            n_duplicates += 1
            continue
        pairs.add(key)
        edges.append((a, b))
    if not ids:
        raise GraphError('graph has no vertices')
    if n_duplicates:
        logger.info('collapsed %d duplicate edges', n_duplicates)
    return from_edges(ids, edges)


def parse_graph_json(text):
    '''Parse the JSON graph format {"nodes": [...], "edges": [[a, b], ...]}.
    Nodes not listed but named by an edge are appended in edge order.'''
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise GraphError(f'invalid JSON graph: {err}')
    if not isinstance(doc, dict) or 'edges' not in doc:
        raise GraphError('JSON graph must be an object with an "edges" list')
    ids = [str(n) for n in doc.get('nodes', [])]
    seen = set(ids)
    if len(seen) != len(ids):
        raise GraphError('duplicate entries in "nodes"')
    edges = []
    pairs = set()
    for number, edge in enumerate(doc['edges']):
        if not isinstance(edge, (list, tuple)) or len(edge) != 2:
            raise GraphError(f'edge {number} is not a pair: {edge!r}')
        a, b = str(edge[0]), str(edge[1])
        if a == b:
            raise GraphError(f'edge {number} is a self-loop at region {a!r}')
        for r in (a, b):
            if r not in seen:
                seen.add(r)
                ids.append(r)
        if frozenset((a, b)) not in pairs:
            pairs.add(frozenset((a, b)))
            edges.append((a, b))
    if not ids:
        raise GraphError('graph has no vertices')
    return from_edges(ids, edges)


def read_graph(path):
    '''Read a graph file, detecting JSON by extension or a leading brace.'''
    path = Path(path)
    text = path.read_text(encoding='utf-8')
    if path.suffix.lower() == '.json' or text.lstrip().startswith('{'):
        return parse_graph_json(text)
    return parse_adjacency(text)


def neighbor_sets(graph):
    '''A function that computes N(i) = {j < i : j ~ i} for every position
    under the graph's order.

    Parameters
    ----------
        OrderedRegionGraph graph: the ordered graph

    Returns
    -------
        NeighborSets neighbors: earlier neighbors and their counts
    '''
    sets = [[] for _ in range(graph.k)]
    # each edge contributes to exactly one N(i): that of its later endpoint
    for a, b in graph.sorted_edges():
        sets[b].append(a)
    sets = tuple(tuple(sorted(s)) for s in sets)
    return NeighborSets(sets=sets, counts=tuple(len(s) for s in sets))


def grid_graph(rows, cols):
    '''A function that builds a rook-adjacency lattice with row-major
    vertex order. Region ids are "<row>_<col>".

    Parameters
    ----------
        int rows: number of lattice rows (>= 1)
        int cols: number of lattice columns (>= 1)

    Returns
    -------
        OrderedRegionGraph graph: k = rows * cols
    '''
    if int(rows) < 1 or int(cols) < 1:
        raise GraphError(f'grid dimensions must be positive, got {rows}x{cols}')
    rows, cols = int(rows), int(cols)
    ids = [f'{r}_{c}' for r in range(rows) for c in range(cols)]
    edges = set()
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                edges.add((i, i + 1))
            if r + 1 < rows:
                edges.add((i, i + cols))
    return OrderedRegionGraph(tuple(ids), frozenset(edges))


def path_graph(k):
    '''Path v0 - v1 - ... - v{k-1} in path order.'''
    if int(k) < 1:
        raise GraphError(f'path length must be positive, got {k}')
    ids = [f'v{i}' for i in range(int(k))]
    return OrderedRegionGraph(tuple(ids), frozenset((i, i + 1) for i in range(int(k) - 1)))


def star_graph(leaves):
    '''A hub joined to every leaf; the hub comes first.'''
    ids = ['hub'] + [f'leaf{i}' for i in range(int(leaves))]
    return OrderedRegionGraph(tuple(ids), frozenset((0, i) for i in range(1, len(ids))))


def reorder(graph, permutation):
    '''A function that puts the regions of a graph in a new DAGAR order.
    Edges are carried over by label; the input order is preserved so
    outputs can report both.

    Parameters
    ----------
        OrderedRegionGraph graph: the graph to reorder
        list permutation: every region id exactly once, in the new order

    Returns
    -------
        OrderedRegionGraph reordered: same edges, new positions
    '''
    permutation = tuple(str(r) for r in permutation)
    if len(permutation) != graph.k or set(permutation) != set(graph.region_ids):
        missing = sorted(set(graph.region_ids) - set(permutation))
        extra = sorted(set(permutation) - set(graph.region_ids))
        raise GraphError(
            'permutation is not a rearrangement of the region ids '
            f'(missing {missing}, unknown {extra}, length {len(permutation)} vs {graph.k})')
    position = {r: i for i, r in enumerate(permutation)}
    ids = graph.region_ids
    edges = frozenset(
        tuple(sorted((position[ids[a]], position[ids[b]]))) for a, b in graph.edges)
    order = tuple(position[r] for r in graph.input_ids)
    return OrderedRegionGraph(permutation, edges, order, graph.input_ids)
