"""Connected-component analysis of fast and slow edge regions.

Fast clusters are components of the subgraph of edges below a small cutoff
(edge-based, Z^d).  Slow regions are tracked through *open* vertices, those
touching an edge above a large cutoff M, clustered under the diagonal L^d
adjacency.  The bypass constructor certifies that any two exterior-boundary
vertices of a finite open cluster are joined by a short path of moderate
edges, which is what keeps renormalised passage times local.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy import ndimage
from scipy.sparse.csgraph import connected_components, dijkstra

from .errors import DomainError, PreconditionError, WindowTooSmallError
from .lattice import Region, VertexSet, adjacency_structure, exterior_boundary
from .weights import WeightField

__all__ = [
    "ClusterReport",
    "epsilon_clusters",
    "open_vertices",
    "open_ld_clusters",
    "lemma1_bypass",
]


@dataclass(frozen=True)
class ClusterReport:
    """Vertex labelling of connected clusters under one adjacency rule.

    ``labels[v]`` is the cluster id of vertex v or -1 when unlabelled;
    ``sizes[c]`` counts vertices of cluster c.
    """

    region: Region
    adjacency: str
    labels: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        self.labels.setflags(write=False)
        self.sizes.setflags(write=False)

    @property
    def n_clusters(self) -> int:
        return self.sizes.size

    def size_of_vertex(self, v: int) -> int:
        lab = self.labels[v]
        return 0 if lab < 0 else int(self.sizes[lab])

    def cluster(self, label: int) -> VertexSet:
        return VertexSet(self.region, self.labels == label)

    def clusters_larger_than(self, m: float) -> list[int]:
        """Labels of clusters with strictly more than m vertices."""
        return np.flatnonzero(self.sizes > m).tolist()

    def size_tail(self, sizes_grid) -> np.ndarray:
        """Empirical P[cluster size >= s] over clusters, per grid point."""
        if self.n_clusters == 0:
            return np.zeros(len(sizes_grid))
        return np.array([(self.sizes >= s).mean() for s in sizes_grid])


def epsilon_clusters(field: WeightField, epsilon: float) -> ClusterReport:
    """Z^d components of the subgraph of edges with t(e) < epsilon.

    Vertices with no incident fast edge stay unlabelled; sizes count
    vertices.
    """
    if epsilon <= 0:
        raise DomainError("epsilon must be positive")
    region = field.region
    emask = field.weights < epsilon
    tails = region.edge_tail[emask]
    heads = region.edge_head[emask]
    V = region.n_vertices
    labels = np.full(V, -1, dtype=np.int64)
    if tails.size == 0:
        return ClusterReport(region, "zd", labels, np.zeros(0, dtype=np.int64))
    touched = np.zeros(V, dtype=bool)
    touched[tails] = True
    touched[heads] = True
    graph = sp.coo_matrix((np.ones(tails.size, dtype=np.int8), (tails, heads)), shape=(V, V))
    _, raw = connected_components(graph, directed=False)
    # compact labels over touched vertices only
    raw = np.where(touched, raw, -1)
    used = np.unique(raw[raw >= 0])
    remap = np.full(used.max() + 1, -1, dtype=np.int64)
    remap[used] = np.arange(used.size)
    labels[touched] = remap[raw[touched]]
    sizes = np.bincount(labels[labels >= 0], minlength=used.size)
    return ClusterReport(region, "zd", labels, sizes.astype(np.int64))


def open_vertices(field: WeightField, M: float) -> VertexSet:
    """Vertices with at least one incident edge strictly above M."""
    if M <= 0:
        raise DomainError("M must be positive")
    region = field.region
    big = field.weights > M
    mask = np.zeros(region.n_vertices, dtype=bool)
    mask[region.edge_tail[big]] = True
    mask[region.edge_head[big]] = True
    return VertexSet(region, mask)


def open_ld_clusters(field: WeightField, M: float) -> ClusterReport:
    """L^d components of the open vertices."""
    region = field.region
    ov = open_vertices(field, M)
    grid = ov.grid
    labgrid, n = ndimage.label(grid, structure=adjacency_structure(region.d, "ld"))
    labels = labgrid.ravel().astype(np.int64) - 1
    sizes = np.bincount(labels[labels >= 0], minlength=n).astype(np.int64)
    return ClusterReport(region, "ld", labels, sizes)


def lemma1_bypass(
    cluster: VertexSet,
    field: WeightField,
    M: float,
    x,
    y,
) -> list[tuple[int, ...]]:
    """Witness path between two exterior-boundary vertices of an open cluster.

    Returns a Z^d path from x to y avoiding the cluster whose edges all have
    t(e) <= M and whose length is at most 3^d * |cluster|.  Existence is
    guaranteed on the infinite lattice; if the finite window clips every
    candidate, a WindowTooSmallError is raised rather than a verdict.
    """
    region = field.region
    ext = exterior_boundary(cluster)
    xi, yi = region.vertex_index(x), region.vertex_index(y)
    if not (ext.mask[xi] and ext.mask[yi]):
        raise PreconditionError("endpoints must lie on the exterior boundary of the cluster")
    if xi == yi:
        return [tuple(x)]
    ok_edges = field.weights <= M
    tails, heads = region.edge_tail, region.edge_head
    usable = ok_edges & ~cluster.mask[tails] & ~cluster.mask[heads]
    V = region.n_vertices
    graph = sp.coo_matrix(
        (np.ones(int(usable.sum()), dtype=np.int8), (tails[usable], heads[usable])),
        shape=(V, V),
    ).tocsr()
    dist, pred = dijkstra(
        graph, directed=False, indices=xi, unweighted=True, return_predecessors=True
    )
    if not np.isfinite(dist[yi]):
        raise WindowTooSmallError(
            "no bypass inside the window; enlarge the margin around the cluster"
        )
    path = [yi]
    while path[-1] != xi:
        path.append(int(pred[path[-1]]))
    path.reverse()
    return [region.vertex_coords(v) for v in path]
