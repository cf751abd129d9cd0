"""Renormalised edge weights with bounded-geometry growth.

The transform caps at 1 every edge that sits inside an oversized fast
cluster (many edges below epsilon) or an oversized slow cluster (open
vertices under L^d adjacency), where "oversized" means strictly more than
theta_n = (ln n)^(1+delta) vertices.  Everything else keeps its original
weight.  The payoff is locality: the capped-or-kept decision for an edge is
determined by the original weights within distance theta_n of it, which the
locality checker certifies by brute-force rerandomisation.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import ceil, log, sqrt

import numpy as np

from .errors import ConfigurationError, DomainError, PreconditionError
from .lattice import Region
from .weights import WeightField, redraw_edges
from .clusters import epsilon_clusters, open_ld_clusters

__all__ = [
    "TauField",
    "tau_transform",
    "tau_locality_check",
    "theta_threshold",
    "TAG_NAMES",
    "TAG_MID",
    "TAG_SMALL_KEPT",
    "TAG_SMALL_CAPPED",
    "TAG_LARGE_KEPT",
    "TAG_LARGE_CAPPED",
]

TAG_MID = 0
TAG_SMALL_KEPT = 1
TAG_SMALL_CAPPED = 2
TAG_LARGE_KEPT = 3
TAG_LARGE_CAPPED = 4

TAG_NAMES = {
    TAG_MID: "mid",
    TAG_SMALL_KEPT: "small_kept",
    TAG_SMALL_CAPPED: "small_capped",
    TAG_LARGE_KEPT: "large_kept",
    TAG_LARGE_CAPPED: "large_capped",
}


def theta_threshold(n: int, delta: float) -> float:
    """Cluster-size threshold (ln n)^(1+delta)."""
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0,1), got {delta}")
    return log(n) ** (1.0 + delta)


@dataclass(frozen=True)
class TauField:
    """Transformed weights tau(e) plus the rule tag that fired per edge."""

    region: Region
    tau: np.ndarray
    tags: np.ndarray
    epsilon: float
    M: float
    n: int
    delta: float

    def __post_init__(self):
        self.tau.setflags(write=False)
        self.tags.setflags(write=False)

    @property
    def theta(self) -> float:
        return theta_threshold(self.n, self.delta)

    def tag_counts(self) -> dict[str, int]:
        c = np.bincount(self.tags, minlength=5)
        return {TAG_NAMES[t]: int(c[t]) for t in range(5)}

    def tau_of(self, coords, axis: int) -> float:
        return float(self.tau[self.region.edge_index(coords, axis)])

    def tag_of(self, coords, axis: int) -> str:
        return TAG_NAMES[int(self.tags[self.region.edge_index(coords, axis)])]


def tau_transform(
    field: WeightField, epsilon: float, M: float, n: int, delta: float
) -> TauField:
    """Apply the capping rules to one configuration.

    Per edge: weights in [epsilon, M] pass through; weights below epsilon are
    capped at 1 iff their fast cluster exceeds theta_n vertices; weights
    above M are capped at 1 iff the open L^d cluster of their endpoints
    exceeds theta_n vertices.
    """
    if not epsilon < M:
        raise ConfigurationError(f"epsilon must be < M, got epsilon={epsilon} M={M}")
    theta = theta_threshold(n, delta)
    region = field.region
    t = field.weights
    tags = np.full(t.size, TAG_MID, dtype=np.uint8)

    small = t < epsilon
    if np.any(small):
        rep = epsilon_clusters(field, epsilon)
        # both endpoints of a fast edge share its cluster label
        lab = rep.labels[region.edge_tail[small]]
        big = rep.sizes[lab] > theta
        tags[np.flatnonzero(small)[big]] = TAG_SMALL_CAPPED
        tags[np.flatnonzero(small)[~big]] = TAG_SMALL_KEPT

    large = t > M
    if np.any(large):
        rep = open_ld_clusters(field, M)
        # endpoints of a slow edge are open and L^d-adjacent, hence share
        # one open cluster; membership realises the adjacency reading
        lab = rep.labels[region.edge_tail[large]]
        big = rep.sizes[lab] > theta
        tags[np.flatnonzero(large)[big]] = TAG_LARGE_CAPPED
        tags[np.flatnonzero(large)[~big]] = TAG_LARGE_KEPT

    tau = np.where(
        (tags == TAG_SMALL_CAPPED) | (tags == TAG_LARGE_CAPPED), 1.0, t
    )
    return TauField(region, tau, tags, float(epsilon), float(M), int(n), float(delta))


def _edge_sq_dist_to(region: Region, vertex_indices) -> np.ndarray:
    """Squared Euclidean distance from each edge (closest endpoint) to the
    closest vertex of the given set, exact in integer arithmetic."""
    coords = region.all_coords()
    anchor = coords[np.asarray(vertex_indices, dtype=np.int64)]
    # exact integer squared distances vertex -> anchor set
    diffs = coords[:, None, :] - anchor[None, :, :]
    vsq = np.min(np.sum(diffs * diffs, axis=2), axis=1)
    return np.minimum(vsq[region.edge_tail], vsq[region.edge_head])


def tau_locality_check(
    field: WeightField,
    edge_index: int,
    epsilon: float,
    M: float,
    n: int,
    delta: float,
    rounds: int = 20,
) -> bool:
    """True iff rerandomising everything beyond distance theta_n from the
    edge never changes its transformed weight.

    This is the deterministic core of the independence of distant
    transformed weights.
    """
    region = field.region
    theta = theta_threshold(n, delta)
    r = ceil(theta)
    ends = region.edge_endpoints(edge_index)
    for c in ends:
        if any(x - l <= r or h - x <= r for x, l, h in zip(c, region.lo, region.hi)):
            raise PreconditionError(
                f"edge at {ends} needs a margin of {r + 1} vertices inside the window"
            )
    base_tau = tau_transform(field, epsilon, M, n, delta).tau[edge_index]
    near = _edge_sq_dist_to(
        region, [region.vertex_index(ends[0]), region.vertex_index(ends[1])]
    ) <= theta * theta
    far = ~near
    current = field
    for _ in range(rounds):
        current = redraw_edges(current, far)
        new_tau = tau_transform(current, epsilon, M, n, delta).tau[edge_index]
        if new_tau != base_tau:
            return False
    return True
