"""Edge-weight families and reproducible configuration sampling.

Every edge weight is a pure function of (master seed, edge index, resample
round, distribution): a vectorised Philox-2x64-10 counter PRF turns the
(edge, round) pair into a uniform variate, which an inverse CDF maps to the
family.  Re-deriving any single edge reproduces it bit-exactly, which is what
lets conditional resampling keep a frozen sub-window untouched without
storing whole configurations.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from math import exp, inf, log

import numpy as np
from scipy import ndimage

from .errors import ConfigurationError, DomainError
from .lattice import Region, VertexSet, adjacency_structure

__all__ = [
    "DistributionSpec",
    "WeightField",
    "sample_configuration",
    "resample_outside",
    "redraw_edges",
    "p_open",
    "tail_mass",
    "derive_seed",
]

_FAMILIES = ("point_mass", "bernoulli", "uniform", "exponential", "pareto")

# Philox-2x64 round constants (public domain algorithm constants).
_PHILOX_MULT = np.uint64(0xD2B74407B1CE6E93)
_PHILOX_BUMP = np.uint64(0x9E3779B97F4A7C15)


def _mulhilo64(a: np.ndarray, b: np.uint64):
    """High and low 64-bit halves of a*b for uint64 arrays."""
    mask = np.uint64(0xFFFFFFFF)
    a_hi, a_lo = a >> np.uint64(32), a & mask
    b_hi, b_lo = b >> np.uint64(32), b & mask
    lo_lo = a_lo * b_lo
    cross1 = a_hi * b_lo + (lo_lo >> np.uint64(32))
    cross2 = a_lo * b_hi + (cross1 & mask)
    hi = a_hi * b_hi + (cross1 >> np.uint64(32)) + (cross2 >> np.uint64(32))
    lo = a * b
    return hi, lo


def _philox2x64(c0: np.ndarray, c1: np.ndarray, key: int):
    """Ten Philox-2x64 rounds over arrays of counters with a scalar key."""
    x0 = np.asarray(c0, dtype=np.uint64).copy()
    x1 = np.asarray(c1, dtype=np.uint64).copy()
    k = np.uint64(key)
    with np.errstate(over="ignore"):
        for _ in range(10):
            hi, lo = _mulhilo64(x0, _PHILOX_MULT)
            x0 = hi ^ k ^ x1
            x1 = lo
            k = k + _PHILOX_BUMP
    return x0, x1


def counter_uniform(seed: int, index, round_) -> np.ndarray:
    """Uniform(0,1) variates keyed by (seed, index, round); pure function."""
    idx = np.asarray(index, dtype=np.uint64)
    rnd = np.broadcast_to(np.asarray(round_, dtype=np.uint64), idx.shape)
    x0, _ = _philox2x64(idx, rnd, seed)
    return (x0 >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def derive_seed(master: int, *parts: int) -> int:
    """Deterministic 64-bit sub-seed, e.g. per (n, replica)."""
    c0, c1 = np.uint64(0), np.uint64(1)
    for p in parts:
        x0, x1 = _philox2x64(np.atleast_1d(c0 ^ np.uint64(p)), np.atleast_1d(c1), master)
        c0, c1 = x0[0], x1[0]
    x0, _ = _philox2x64(np.atleast_1d(c0), np.atleast_1d(c1), master)
    return int(x0[0])


@dataclass(frozen=True)
class DistributionSpec:
    """A nonnegative edge-weight family with exact CDF bookkeeping.

    Families: point_mass(c), bernoulli(a, b, p) with P[t=a]=p, uniform(lo,hi),
    exponential(rate), pareto(alpha, scale).  Pareto requires alpha > 1 so the
    mean exists; alpha <= 2 flags a heavy tail (infinite variance).
    """

    family: str
    params: tuple[float, ...]

    def __post_init__(self):
        f, p = self.family, self.params
        if f not in _FAMILIES:
            raise ConfigurationError(f"unknown family {f!r}")
        if any(x < 0 for x in p):
            raise ConfigurationError(f"{f}: parameters must be nonnegative, got {p}")
        if f == "bernoulli":
            a, b, prob = p
            if not a < b:
                raise ConfigurationError(f"bernoulli needs a < b, got a={a} b={b}")
            if not 0.0 <= prob <= 1.0:
                raise ConfigurationError(f"bernoulli needs p in [0,1], got {prob}")
        elif f == "uniform":
            lo, hi = p
            if not lo < hi:
                raise ConfigurationError(f"uniform needs lo < hi, got {p}")
        elif f == "exponential":
            if p[0] <= 0:
                raise ConfigurationError("exponential rate must be positive")
        elif f == "pareto":
            alpha, scale = p
            if alpha <= 1.0:
                raise ConfigurationError(
                    f"pareto alpha must exceed 1 so the mean exists, got {alpha}"
                )
            if scale <= 0:
                raise ConfigurationError("pareto scale must be positive")

    # -- constructors ------------------------------------------------------

    @classmethod
    def point_mass(cls, c: float) -> "DistributionSpec":
        return cls("point_mass", (float(c),))

    @classmethod
    def bernoulli_two_point(cls, a: float, b: float, p: float) -> "DistributionSpec":
        return cls("bernoulli", (float(a), float(b), float(p)))

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "DistributionSpec":
        return cls("uniform", (float(lo), float(hi)))

    @classmethod
    def exponential(cls, rate: float) -> "DistributionSpec":
        return cls("exponential", (float(rate),))

    @classmethod
    def pareto(cls, alpha: float, scale: float) -> "DistributionSpec":
        return cls("pareto", (float(alpha), float(scale)))

    @classmethod
    def parse(cls, text: str) -> "DistributionSpec":
        """Parse config strings like ``exponential:rate=1`` or
        ``bernoulli:a=0,b=1,p=0.5``."""
        try:
            family, _, arg_str = text.strip().partition(":")
            family = family.strip()
            kwargs = {}
            if arg_str:
                for item in arg_str.split(","):
                    k, _, v = item.partition("=")
                    kwargs[k.strip()] = float(v)
        except ValueError as exc:
            raise ConfigurationError(f"cannot parse distribution {text!r}: {exc}") from None
        order = {
            "point_mass": ("c",),
            "bernoulli": ("a", "b", "p"),
            "uniform": ("lo", "hi"),
            "exponential": ("rate",),
            "pareto": ("alpha", "scale"),
        }
        if family not in order:
            raise ConfigurationError(f"unknown family {family!r} in {text!r}")
        try:
            params = tuple(kwargs.pop(k) for k in order[family])
        except KeyError as exc:
            raise ConfigurationError(f"{family}: missing parameter {exc}") from None
        if kwargs:
            raise ConfigurationError(f"{family}: unexpected parameters {sorted(kwargs)}")
        return cls(family, params)

    def spec_string(self) -> str:
        names = {
            "point_mass": ("c",),
            "bernoulli": ("a", "b", "p"),
            "uniform": ("lo", "hi"),
            "exponential": ("rate",),
            "pareto": ("alpha", "scale"),
        }[self.family]
        args = ",".join(f"{k}={v:g}" for k, v in zip(names, self.params))
        return f"{self.family}:{args}"

    # -- exact distribution functions ---------------------------------------

    def sample(self, u: np.ndarray) -> np.ndarray:
        """Inverse-CDF transform of uniforms in [0, 1)."""
        u = np.asarray(u, dtype=np.float64)
        f, p = self.family, self.params
        if f == "point_mass":
            return np.full_like(u, p[0])
        if f == "bernoulli":
            a, b, prob = p
            return np.where(u < prob, a, b)
        if f == "uniform":
            lo, hi = p
            return lo + u * (hi - lo)
        if f == "exponential":
            return -np.log1p(-u) / p[0]
        alpha, scale = p  # pareto
        return scale * (1.0 - u) ** (-1.0 / alpha)

    def atoms(self) -> dict[float, float]:
        if self.family == "point_mass":
            return {self.params[0]: 1.0}
        if self.family == "bernoulli":
            a, b, prob = self.params
            return {a: prob, b: 1.0 - prob}
        return {}

    def cdf(self, x: float) -> float:
        """P[t <= x], right-continuous."""
        f, p = self.family, self.params
        if f == "point_mass":
            return 1.0 if x >= p[0] else 0.0
        if f == "bernoulli":
            a, b, prob = p
            if x < a:
                return 0.0
            return prob if x < b else 1.0
        if f == "uniform":
            lo, hi = p
            return float(np.clip((x - lo) / (hi - lo), 0.0, 1.0))
        if f == "exponential":
            return 0.0 if x < 0 else 1.0 - exp(-p[0] * x)
        alpha, scale = p
        return 0.0 if x < scale else 1.0 - (scale / x) ** alpha

    def cdf_strict(self, x: float) -> float:
        """P[t < x]; differs from cdf at atoms."""
        return self.cdf(x) - self.atoms().get(float(x), 0.0)

    def tail(self, x: float) -> float:
        """P[t >= x], exact per family."""
        return 1.0 - self.cdf_strict(x)

    def mean(self) -> float:
        f, p = self.family, self.params
        if f == "point_mass":
            return p[0]
        if f == "bernoulli":
            a, b, prob = p
            return a * prob + b * (1.0 - prob)
        if f == "uniform":
            return 0.5 * (p[0] + p[1])
        if f == "exponential":
            return 1.0 / p[0]
        alpha, scale = p
        return alpha * scale / (alpha - 1.0)

    @property
    def heavy_tail(self) -> bool:
        """True when the variance does not exist (pareto alpha <= 2)."""
        return self.family == "pareto" and self.params[0] <= 2.0

    @property
    def is_atomic(self) -> bool:
        return bool(self.atoms())


@dataclass(frozen=True)
class WeightField:
    """One sampled configuration: nonnegative weights on the region edges.

    ``rounds[e]`` counts how many times edge ``e`` has been resampled; the
    weights array is always the deterministic image of (seed, edge, round).
    """

    region: Region
    dist: DistributionSpec
    seed: int
    rounds: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.rounds.setflags(write=False)
        self.weights.setflags(write=False)

    @property
    def n_edges(self) -> int:
        return self.weights.size

    def weight_of(self, coords, axis: int) -> float:
        return float(self.weights[self.region.edge_index(coords, axis)])

    def with_weights(self, weights: np.ndarray) -> "WeightField":
        """Hand-built variant for constructed examples; keeps provenance off."""
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != self.weights.shape or np.any(w < 0):
            raise DomainError("weights must be a nonnegative array of the edge count")
        return replace(self, weights=w, rounds=self.rounds.copy())


def sample_configuration(region: Region, dist: DistributionSpec, seed: int) -> WeightField:
    """I.i.d. configuration; deterministic in (region, dist, seed)."""
    rounds = np.zeros(region.n_edges, dtype=np.uint64)
    u = counter_uniform(seed, np.arange(region.n_edges, dtype=np.uint64), rounds)
    return WeightField(region, dist, int(seed), rounds, dist.sample(u))


def redraw_edges(field: WeightField, edge_mask: np.ndarray) -> WeightField:
    """New field with the masked edges advanced one resample round.

    Unmasked edges are carried over bit-exactly.
    """
    edge_mask = np.asarray(edge_mask, dtype=bool)
    rounds = field.rounds.copy()
    rounds[edge_mask] += np.uint64(1)
    weights = field.weights.copy()
    idx = np.flatnonzero(edge_mask).astype(np.uint64)
    u = counter_uniform(field.seed, idx, rounds[edge_mask])
    weights[edge_mask] = field.dist.sample(u)
    return WeightField(field.region, field.dist, field.seed, rounds, weights)


def keep_closure_edges(region: Region, keep: VertexSet) -> np.ndarray:
    """Edges with both endpoints in keep plus its Z^d outer boundary."""
    closure = ndimage.binary_dilation(
        keep.grid, structure=adjacency_structure(region.d, "zd")
    ).ravel()
    return closure[region.edge_tail] & closure[region.edge_head]


def resample_outside(field: WeightField, keep: VertexSet) -> WeightField:
    """Redraw every edge outside the keep closure; inside edges unchanged."""
    if keep.region is not field.region and keep.region != field.region:
        raise DomainError("keep set lives on a different region")
    if len(keep) == 0:
        return redraw_edges(field, np.ones(field.n_edges, dtype=bool))
    inside = keep_closure_edges(field.region, keep)
    return redraw_edges(field, ~inside)


def p_open(dist: DistributionSpec, M: float, d: int) -> float:
    """Probability that a vertex has an incident edge above the slow
    threshold: 1 - P[t < M]^(2d)."""
    if M <= 0:
        raise DomainError("M must be positive")
    return 1.0 - dist.cdf_strict(M) ** (2 * d)


def tail_mass(dist: DistributionSpec, x: float) -> float:
    """P[t >= x] for x >= 0."""
    if x < 0:
        raise DomainError("x must be nonnegative")
    return dist.tail(x)
