"""Finite axis-aligned windows of the Z^d lattice.

A :class:`Region` is the simulation universe: a box ``[lo, hi]`` of Z^d with
deterministic vertex and edge indexing (vertices lexicographic by coordinate,
edges by lower endpoint then axis).  Determinism matters because edge indices
key the counter-based RNG in :mod:`fpplab.weights`.

Two adjacencies are used throughout: ``zd`` (nearest neighbours, Euclidean
distance 1) and ``ld`` (Euclidean distance < 2, i.e. diagonal steps allowed).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, log

import numpy as np
from scipy import ndimage

from .errors import DomainError, PreconditionError

__all__ = [
    "Region",
    "VertexSet",
    "zd_neighbors",
    "ld_neighbors",
    "box_D_n",
    "boundaries",
    "exterior_boundary",
    "adjacency_structure",
]


def adjacency_structure(d: int, kind: str) -> np.ndarray:
    """Binary footprint of an adjacency as a (3,)*d boolean array.

    ``zd`` keeps offsets at Euclidean distance exactly 1, ``ld`` those at
    distance < 2 (offsets in {-1,0,1}^d with at most 3 nonzero entries, which
    is the exact criterion in every dimension).
    """
    if kind == "zd":
        return ndimage.generate_binary_structure(d, 1)
    if kind == "ld":
        return ndimage.generate_binary_structure(d, min(d, 3))
    raise DomainError(f"unknown adjacency kind {kind!r}, expected 'zd' or 'ld'")


def _offsets(d: int, kind: str) -> np.ndarray:
    struct = adjacency_structure(d, kind)
    offs = np.argwhere(struct) - 1
    offs = offs[np.any(offs != 0, axis=1)]
    # lexicographic order for deterministic neighbour listings
    return offs[np.lexsort(offs.T[::-1])]


@dataclass(frozen=True)
class Region:
    """Axis-aligned box of Z^d with vertex/edge index bijections.

    Immutable after construction; derived index arrays are cached on first
    use and shared by concurrent readers.
    """

    lo: tuple[int, ...]
    hi: tuple[int, ...]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        lo = tuple(int(x) for x in self.lo)
        hi = tuple(int(x) for x in self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if len(lo) != len(hi):
            raise DomainError("lo and hi must have the same dimension")
        if len(lo) < 2:
            raise DomainError("dimension must be at least 2")
        if any(l > h for l, h in zip(lo, hi)):
            raise DomainError(f"empty region: lo={lo} hi={hi}")

    # -- basic geometry -------------------------------------------------

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def n_vertices(self) -> int:
        return int(np.prod(self.shape))

    def contains(self, coords) -> bool:
        c = tuple(coords)
        return len(c) == self.d and all(
            l <= x <= h for x, l, h in zip(c, self.lo, self.hi)
        )

    # -- vertex indexing -------------------------------------------------

    def vertex_index(self, coords) -> int:
        """Lexicographic index of a vertex; raises DomainError outside."""
        if not self.contains(coords):
            raise DomainError(f"vertex {tuple(coords)} outside region {self.lo}..{self.hi}")
        rel = tuple(int(x) - l for x, l in zip(coords, self.lo))
        return int(np.ravel_multi_index(rel, self.shape))

    def vertex_coords(self, index: int) -> tuple[int, ...]:
        rel = np.unravel_index(int(index), self.shape)
        return tuple(int(r) + l for r, l in zip(rel, self.lo))

    def vertex_index_array(self, coords: np.ndarray) -> np.ndarray:
        """Vectorised vertex_index for an (N, d) coordinate array."""
        rel = np.asarray(coords) - np.asarray(self.lo)
        return np.ravel_multi_index(tuple(rel.T), self.shape)

    def all_coords(self) -> np.ndarray:
        """(V, d) coordinates of every vertex in index order."""
        key = "all_coords"
        if key not in self._cache:
            grids = np.indices(self.shape).reshape(self.d, -1).T
            self._cache[key] = grids + np.asarray(self.lo)
        return self._cache[key]

    # -- edge indexing ---------------------------------------------------
    #
    # Edge i joins vertex ``edge_tail[i]`` to its +1 neighbour along
    # ``edge_axis[i]``.  Ordering: by tail vertex index, then axis.

    def _edges(self):
        key = "edges"
        if key not in self._cache:
            rel = self.all_coords() - np.asarray(self.lo)
            tails, axes = [], []
            for a in range(self.d):
                ok = np.flatnonzero(rel[:, a] < self.shape[a] - 1)
                tails.append(ok)
                axes.append(np.full(ok.size, a, dtype=np.int8))
            tails = np.concatenate(tails)
            axes = np.concatenate(axes)
            order = np.lexsort((axes, tails))
            tails, axes = tails[order], axes[order]
            strides = np.array(
                [int(np.prod(self.shape[a + 1:], dtype=np.int64)) for a in range(self.d)],
                dtype=np.int64,
            )
            heads = tails + strides[axes]
            table = np.full((self.n_vertices, self.d), -1, dtype=np.int64)
            table[tails, axes] = np.arange(tails.size)
            self._cache[key] = (tails, heads, axes, table)
        return self._cache[key]

    @property
    def n_edges(self) -> int:
        return self._edges()[0].size

    @property
    def edge_tail(self) -> np.ndarray:
        return self._edges()[0]

    @property
    def edge_head(self) -> np.ndarray:
        return self._edges()[1]

    @property
    def edge_axis(self) -> np.ndarray:
        return self._edges()[2]

    def edge_index(self, coords, axis: int) -> int:
        """Index of the edge from ``coords`` to ``coords + e_axis``."""
        v = self.vertex_index(coords)
        e = int(self._edges()[3][v, axis])
        if e < 0:
            raise DomainError(f"no edge from {tuple(coords)} along axis {axis}")
        return e

    def edge_between(self, u: int, v: int) -> int:
        """Edge index joining two Z^d-adjacent vertex indices."""
        lo, hi = (u, v) if u < v else (v, u)
        table = self._edges()[3]
        diff = hi - lo
        strides = [int(np.prod(self.shape[a + 1:], dtype=np.int64)) for a in range(self.d)]
        for a, s in enumerate(strides):
            if diff == s:
                e = int(table[lo, a])
                if e >= 0:
                    return e
        raise DomainError(f"vertices {lo} and {hi} are not Z^d-adjacent in this region")

    def edge_endpoints(self, index: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        tails, heads, _, _ = self._edges()
        return self.vertex_coords(tails[index]), self.vertex_coords(heads[index])

    # -- symmetric CSR adjacency (shared by shortest-path engines) -------

    def csr_structure(self):
        """Fixed CSR structure (indptr, indices, slot->edge map) of the
        symmetric adjacency; per-configuration weights are scattered into
        the data array without re-sorting."""
        key = "csr"
        if key not in self._cache:
            import scipy.sparse as sp

            tails, heads, _, _ = self._edges()
            rows = np.concatenate([tails, heads])
            cols = np.concatenate([heads, tails])
            eids = np.concatenate([np.arange(tails.size)] * 2)
            coo = sp.coo_matrix(
                (np.arange(rows.size, dtype=np.int64), (rows, cols)),
                shape=(self.n_vertices, self.n_vertices),
            )
            csr = coo.tocsr()
            slot_edge = eids[csr.data]
            self._cache[key] = (csr.indptr, csr.indices, slot_edge)
        return self._cache[key]

    def neighbor_lists(self):
        """Python adjacency lists [(neighbor, edge_index), ...] per vertex,
        for the pure-python reference engine."""
        key = "adj"
        if key not in self._cache:
            indptr, indices, slot_edge = self.csr_structure()
            adj = [
                list(zip(indices[indptr[v]:indptr[v + 1]].tolist(),
                         slot_edge[indptr[v]:indptr[v + 1]].tolist()))
                for v in range(self.n_vertices)
            ]
            self._cache[key] = adj
        return self._cache[key]

    def face_mask(self) -> np.ndarray:
        """Boolean mask of vertices on the window faces."""
        rel = self.all_coords() - np.asarray(self.lo)
        m = np.zeros(self.n_vertices, dtype=bool)
        for a in range(self.d):
            m |= rel[:, a] == 0
            m |= rel[:, a] == self.shape[a] - 1
        return m


class VertexSet:
    """Immutable vertex subset of a region, held as a boolean mask."""

    __slots__ = ("region", "_mask")

    def __init__(self, region: Region, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (region.n_vertices,):
            raise DomainError("mask length does not match region vertex count")
        self.region = region
        self._mask = mask.copy()
        self._mask.setflags(write=False)

    # -- constructors ----------------------------------------------------

    @classmethod
    def empty(cls, region: Region) -> "VertexSet":
        return cls(region, np.zeros(region.n_vertices, dtype=bool))

    @classmethod
    def full(cls, region: Region) -> "VertexSet":
        return cls(region, np.ones(region.n_vertices, dtype=bool))

    @classmethod
    def from_coords(cls, region: Region, coords) -> "VertexSet":
        mask = np.zeros(region.n_vertices, dtype=bool)
        for c in coords:
            mask[region.vertex_index(c)] = True
        return cls(region, mask)

    @classmethod
    def from_indices(cls, region: Region, indices) -> "VertexSet":
        mask = np.zeros(region.n_vertices, dtype=bool)
        mask[np.asarray(indices, dtype=np.int64)] = True
        return cls(region, mask)

    @classmethod
    def box(cls, region: Region, lo, hi) -> "VertexSet":
        """All region vertices inside the (clipped) box [lo, hi]."""
        coords = region.all_coords()
        mask = np.ones(region.n_vertices, dtype=bool)
        for a in range(region.d):
            mask &= (coords[:, a] >= lo[a]) & (coords[:, a] <= hi[a])
        return cls(region, mask)

    # -- queries -----------------------------------------------------------

    @property
    def mask(self) -> np.ndarray:
        return self._mask

    @property
    def grid(self) -> np.ndarray:
        return self._mask.reshape(self.region.shape)

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self._mask)

    def coords(self) -> np.ndarray:
        return self.region.all_coords()[self._mask]

    def __len__(self) -> int:
        return int(self._mask.sum())

    def __contains__(self, coords) -> bool:
        return self.region.contains(coords) and bool(
            self._mask[self.region.vertex_index(coords)]
        )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, VertexSet)
            and self.region is other.region
            and np.array_equal(self._mask, other._mask)
        )

    def issubset(self, other: "VertexSet") -> bool:
        return bool(np.all(~self._mask | other._mask))

    # -- algebra (within the window) ----------------------------------------

    def _check(self, other: "VertexSet"):
        if self.region is not other.region and self.region != other.region:
            raise DomainError("vertex sets live on different regions")

    def union(self, other: "VertexSet") -> "VertexSet":
        self._check(other)
        return VertexSet(self.region, self._mask | other._mask)

    def intersection(self, other: "VertexSet") -> "VertexSet":
        self._check(other)
        return VertexSet(self.region, self._mask & other._mask)

    def complement(self) -> "VertexSet":
        return VertexSet(self.region, ~self._mask)

    def difference(self, other: "VertexSet") -> "VertexSet":
        self._check(other)
        return VertexSet(self.region, self._mask & ~other._mask)

    __or__ = union
    __and__ = intersection
    __sub__ = difference


# -- neighbour operations ---------------------------------------------------


def _neighbors(v, region: Region, kind: str) -> list[tuple[int, ...]]:
    if not region.contains(v):
        raise DomainError(f"vertex {tuple(v)} outside region")
    base = np.asarray(v, dtype=np.int64)
    out = []
    for off in _offsets(region.d, kind):
        u = base + off
        if region.contains(u):
            out.append(tuple(int(x) for x in u))
    return out


def zd_neighbors(v, region: Region) -> list[tuple[int, ...]]:
    """Vertices of the region at Euclidean distance exactly 1 from ``v``."""
    return _neighbors(v, region, "zd")


def ld_neighbors(v, region: Region) -> list[tuple[int, ...]]:
    """Vertices of the region at Euclidean distance < 2 from ``v``."""
    return _neighbors(v, region, "ld")


# -- growth-scale boxes -------------------------------------------------------


def box_halfwidth(n: int, M: float, delta: float, d: int) -> int:
    """Half-width ceil(3^d * M * (ln n)^(1+delta)) of the anchor box."""
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    return int(ceil(3**d * M * log(n) ** (1.0 + delta)))


def box_D_n(center, n: int, M: float, delta: float, region: Region) -> VertexSet:
    """Cube of half-width ceil(3^d M (ln n)^(1+delta)) around ``center``,
    clipped to the region."""
    if not region.contains(center):
        raise DomainError(f"center {tuple(center)} outside region")
    h = box_halfwidth(n, M, delta, region.d)
    lo = [c - h for c in center]
    hi = [c + h for c in center]
    return VertexSet.box(region, lo, hi)


# -- boundary notions ---------------------------------------------------------


def boundaries(A: VertexSet, adjacency: str = "zd"):
    """Inner boundary, outer boundary and the Z^d edges between them.

    Returns ``(inner, outer, edge_ids)`` where ``inner`` are vertices of A
    adjacent (under ``adjacency``) to the complement, ``outer`` are
    complement vertices adjacent to A, and ``edge_ids`` indexes the Z^d
    edges with one endpoint in each.
    """
    if len(A) == 0:
        raise DomainError("boundary of an empty set is undefined")
    region = A.region
    struct = adjacency_structure(region.d, adjacency)
    grid = A.grid
    dil = ndimage.binary_dilation(grid, structure=struct)
    ero = ndimage.binary_erosion(grid, structure=struct, border_value=1)
    inner = VertexSet(region, (grid & ~ero).ravel())
    outer = VertexSet(region, (dil & ~grid).ravel())
    tails, heads = region.edge_tail, region.edge_head
    im, om = inner.mask, outer.mask
    emask = (im[tails] & om[heads]) | (om[tails] & im[heads])
    return inner, outer, np.flatnonzero(emask)


def exterior_boundary(A: VertexSet) -> VertexSet:
    """Outer (L^d) boundary vertices of A from which a Z^d path avoiding A
    reaches the window face.

    The window faces stand in for infinity, so A must not touch them.
    """
    region = A.region
    if len(A) == 0:
        raise DomainError("exterior boundary of an empty set is undefined")
    if bool(np.any(A.mask & region.face_mask())):
        raise PreconditionError(
            "set touches the window face; the face-flood proxy for infinity needs a margin"
        )
    grid = A.grid
    # Z^d components of the complement; those containing a face vertex are
    # the "reachable from infinity" region.
    labels, _ = ndimage.label(~grid, structure=adjacency_structure(region.d, "zd"))
    face = region.face_mask().reshape(region.shape)
    inf_labels = np.unique(labels[face & ~grid])
    reach = np.isin(labels, inf_labels[inf_labels > 0])
    louter = ndimage.binary_dilation(grid, structure=adjacency_structure(region.d, "ld")) & ~grid
    return VertexSet(region, (louter & reach).ravel())
