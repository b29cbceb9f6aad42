"""Domain types shared across the package.

Ranks are 1-based everywhere: a global rank lies in ``[1, N]`` and a sampled
rank in ``[1, n]``. All containers are immutable after construction; their
numpy buffers are marked read-only.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

import numpy as np

MAX_ITEMS = 1_000_000


class SampledEvalError(ValueError):
    """Base class for invalid inputs and failed numerical steps."""


class EmptySet(SampledEvalError):
    pass


class RankOutOfRange(SampledEvalError):
    def __init__(self, user: int, value: int, message: str = ""):
        self.user = user
        self.value = value
        super().__init__(message or f"rank {value} out of range for user index {user}")


class InvalidSampleSize(SampledEvalError):
    pass


class MismatchedConfig(SampledEvalError):
    pass


class SizeMismatch(SampledEvalError):
    pass


class DegenerateLikelihood(SampledEvalError):
    pass


class SingularSystem(SampledEvalError):
    pass


class InvalidSubsetSize(SampledEvalError):
    pass


class DegeneratePool(SampledEvalError):
    pass


class NonConvergence(UserWarning):
    """Emitted when an iterative solver stops on its iteration cap."""


class MetricKind(str, enum.Enum):
    RECALL = "recall"
    NDCG = "ndcg"
    AP = "ap"


class SamplingScheme(str, enum.Enum):
    WITH_REPLACEMENT = "with"
    WITHOUT_REPLACEMENT = "without"


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class MetricSpec:
    kind: MetricKind
    cutoff: int

    def __post_init__(self):
        object.__setattr__(self, "kind", MetricKind(self.kind))
        if int(self.cutoff) < 1:
            raise SampledEvalError(f"cutoff must be >= 1, got {self.cutoff}")
        object.__setattr__(self, "cutoff", int(self.cutoff))

    def __str__(self):
        return f"{self.kind.value}@{self.cutoff}"


@dataclass(frozen=True, eq=False)
class RankPmf:
    """Probability mass over global ranks ``1..n_items``; ``probs[R-1]`` is P(R)."""

    n_items: int
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size != self.n_items:
            raise SampledEvalError(
                f"pmf must have length n_items={self.n_items}, got shape {probs.shape}"
            )
        if self.n_items < 1 or self.n_items > MAX_ITEMS:
            raise SampledEvalError(f"n_items must be in [1, {MAX_ITEMS}]")
        if not np.all(np.isfinite(probs)) or np.any(probs < 0):
            raise SampledEvalError("pmf entries must be finite and nonnegative")
        if abs(probs.sum() - 1.0) > 1e-9:
            raise SampledEvalError(f"pmf sums to {probs.sum():.12g}, not 1")
        object.__setattr__(self, "probs", _frozen(probs, float))

    @classmethod
    def from_weights(cls, weights) -> "RankPmf":
        """Normalise any nonnegative, not-all-zero vector into a pmf."""
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise SampledEvalError("weights must be a nonempty vector")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise SampledEvalError("weights must be finite and nonnegative")
        total = w.sum()
        if total <= 0:
            raise SampledEvalError("weights are all zero")
        return cls(w.size, w / total)

    @classmethod
    def uniform(cls, n_items: int) -> "RankPmf":
        return cls(n_items, np.full(n_items, 1.0 / n_items))

    @classmethod
    def point_mass(cls, n_items: int, rank: int) -> "RankPmf":
        p = np.zeros(n_items)
        p[rank - 1] = 1.0
        return cls(n_items, p)

    def __getitem__(self, rank: int) -> float:
        return float(self.probs[rank - 1])

    def cdf(self) -> np.ndarray:
        return np.cumsum(self.probs)

    def __eq__(self, other):
        if not isinstance(other, RankPmf):
            return NotImplemented
        return self.n_items == other.n_items and np.array_equal(self.probs, other.probs)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GlobalRankSet:
    """True rank of every test user's held-out item among all ``n_items`` items."""

    n_items: int
    ranks: np.ndarray
    user_ids: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "ranks", _frozen(self.ranks, np.int64))
        uid = np.arange(self.ranks.size) if self.user_ids is None else self.user_ids
        object.__setattr__(self, "user_ids", _frozen(uid, np.int64))
        validate_rank_set(self)

    @property
    def n_users(self) -> int:
        return int(self.ranks.size)

    def __len__(self):
        return self.n_users

    def __eq__(self, other):
        if not isinstance(other, GlobalRankSet):
            return NotImplemented
        return (
            self.n_items == other.n_items
            and np.array_equal(self.ranks, other.ranks)
            and np.array_equal(self.user_ids, other.user_ids)
        )

    __hash__ = None


@dataclass(frozen=True)
class SampledObservation:
    rank: int
    sample_size: int


@dataclass(frozen=True, eq=False)
class SampledRankSet:
    """Observed ranks ``r_u`` within per-user samples of size ``n_u``.

    Stored column-wise; :attr:`observations` gives the per-user view.
    """

    n_items: int
    ranks: np.ndarray
    sample_sizes: np.ndarray
    user_ids: Optional[np.ndarray] = None
    allow_oversize: bool = field(default=False, compare=False)

    def __post_init__(self):
        ranks = _frozen(self.ranks, np.int64)
        sizes = np.asarray(self.sample_sizes, dtype=np.int64)
        if sizes.ndim == 0:
            sizes = np.full(ranks.shape, int(sizes))
        object.__setattr__(self, "ranks", ranks)
        object.__setattr__(self, "sample_sizes", _frozen(sizes, np.int64))
        uid = np.arange(ranks.size) if self.user_ids is None else self.user_ids
        object.__setattr__(self, "user_ids", _frozen(uid, np.int64))
        validate_rank_set(self)

    @classmethod
    def fixed(cls, n_items: int, ranks, n: int, **kw) -> "SampledRankSet":
        ranks = np.asarray(ranks)
        return cls(n_items, ranks, np.full(ranks.shape, n), **kw)

    @property
    def n_users(self) -> int:
        return int(self.ranks.size)

    def __len__(self):
        return self.n_users

    @property
    def observations(self) -> Iterator[SampledObservation]:
        for r, n in zip(self.ranks.tolist(), self.sample_sizes.tolist()):
            yield SampledObservation(r, n)

    @property
    def is_fixed_size(self) -> bool:
        return bool(np.all(self.sample_sizes == self.sample_sizes[0]))

    @property
    def sample_size(self) -> int:
        """The common sample size; raises for adaptive (varying-size) sets."""
        if not self.is_fixed_size:
            raise SizeMismatch("sample sizes vary across users")
        return int(self.sample_sizes[0])

    def rank_distribution(self) -> np.ndarray:
        """Empirical P~(r) over ``r = 1..n`` for a fixed-size set."""
        n = self.sample_size
        return np.bincount(self.ranks, minlength=n + 1)[1:] / self.n_users

    def __eq__(self, other):
        if not isinstance(other, SampledRankSet):
            return NotImplemented
        return (
            self.n_items == other.n_items
            and np.array_equal(self.ranks, other.ranks)
            and np.array_equal(self.sample_sizes, other.sample_sizes)
            and np.array_equal(self.user_ids, other.user_ids)
        )

    __hash__ = None


RankSet = Union[GlobalRankSet, SampledRankSet]


def validate_rank_set(rank_set: RankSet) -> None:
    """Raise if any type invariant of ``rank_set`` is violated.

    Sampled sizes may exceed ``n_items`` only when ``allow_oversize`` is set,
    which with-replacement sampling permits.
    """
    n_items = int(rank_set.n_items)
    if n_items < 1 or n_items > MAX_ITEMS:
        raise SampledEvalError(f"n_items must be in [1, {MAX_ITEMS}], got {n_items}")
    ranks = np.asarray(rank_set.ranks)
    if ranks.ndim != 1 or ranks.size == 0:
        raise EmptySet("rank set has no users")
    if rank_set.user_ids is not None and len(rank_set.user_ids) != ranks.size:
        raise SampledEvalError("user_ids length does not match ranks")

    if isinstance(rank_set, SampledRankSet):
        sizes = np.asarray(rank_set.sample_sizes)
        if sizes.shape != ranks.shape:
            raise SampledEvalError("sample_sizes length does not match ranks")
        upper = np.iinfo(np.int64).max if rank_set.allow_oversize else n_items
        bad = np.flatnonzero((ranks < 1) | (ranks > sizes) | (sizes < 1) | (sizes > upper))
        if bad.size:
            u = int(bad[0])
            raise RankOutOfRange(
                u, int(ranks[u]),
                f"observation (r={ranks[u]}, n={sizes[u]}) invalid for user index {u}",
            )
    else:
        bad = np.flatnonzero((ranks < 1) | (ranks > n_items))
        if bad.size:
            u = int(bad[0])
            raise RankOutOfRange(u, int(ranks[u]))
