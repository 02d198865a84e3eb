"""Request-probability model for a single edge server.

Per-video popularity is Zipf over popularity rank, skewed per user by a
content-type preference factor, then split between the HD and SD encodings
by a rank-linear characteristic. The aggregate table averages the per-user
tables over the whole population.

Representation indices are 0-based and ordered by decreasing quality:
index 0 is HD, index 1 is SD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

__all__ = [
    "CONTENT_TYPES",
    "DEFAULT_ALPHAS",
    "HD",
    "SD",
    "InvalidInputError",
    "Video",
    "VideoCatalog",
    "UserProfile",
    "UserPopulation",
    "DemandTable",
    "DemandModel",
    "zipf_popularity",
    "user_request_distribution",
    "representation_split",
    "aggregate_demand",
    "build_demand",
    "generate_catalog",
    "generate_population",
]

HD = 0
SD = 1
N_REPRESENTATIONS = 2

CONTENT_TYPES = ("news", "scene", "sport", "traffic", "person")
DEFAULT_ALPHAS = (0.2, 0.5, 0.8)
SIZE_BOUNDS = (3, 65)


class InvalidInputError(ValueError):
    """Raised when a model input violates its contract."""


@dataclass(frozen=True)
class Video:
    id: int
    rank: int
    content_type: str
    size_hd: int
    size_sd: int

    @property
    def sizes(self) -> tuple[int, int]:
        return (self.size_hd, self.size_sd)


@dataclass(frozen=True)
class VideoCatalog:
    videos: tuple[Video, ...]
    gamma: float = 0.6
    types: tuple[str, ...] = CONTENT_TYPES

    def __post_init__(self):
        object.__setattr__(self, "videos", tuple(self.videos))
        object.__setattr__(self, "types", tuple(self.types))
        K = len(self.videos)
        if K < 1:
            raise InvalidInputError("catalog must contain at least one video")
        if self.gamma < 0 or not math.isfinite(self.gamma):
            raise InvalidInputError(f"gamma must be a finite non-negative number, got {self.gamma}")
        if sorted(v.rank for v in self.videos) != list(range(1, K + 1)):
            raise InvalidInputError("popularity ranks must be a permutation of 1..K")
        if [v.id for v in self.videos] != list(range(1, K + 1)):
            raise InvalidInputError("video ids must be 1..K in order")
        for v in self.videos:
            if v.content_type not in self.types:
                raise InvalidInputError(f"video {v.id}: unknown content type {v.content_type!r}")
            if not (v.size_hd >= v.size_sd >= 1):
                raise InvalidInputError(
                    f"video {v.id}: sizes must satisfy size_hd >= size_sd >= 1 "
                    f"(got {v.size_hd}, {v.size_sd})"
                )

    @property
    def num_types(self) -> int:
        return len(self.types)

    def __len__(self) -> int:
        return len(self.videos)

    @property
    def ranks(self) -> np.ndarray:
        return np.array([v.rank for v in self.videos], dtype=np.int64)

    @property
    def sizes(self) -> np.ndarray:
        """K x 2 integer matrix of (HD, SD) sizes."""
        return np.array([v.sizes for v in self.videos], dtype=np.int64).reshape(-1, N_REPRESENTATIONS)

    @property
    def content_types(self) -> list[str]:
        return [v.content_type for v in self.videos]

    def with_ranks(self, ranks: Sequence[int]) -> "VideoCatalog":
        videos = tuple(
            Video(v.id, int(r), v.content_type, v.size_hd, v.size_sd)
            for v, r in zip(self.videos, ranks)
        )
        return VideoCatalog(videos, self.gamma, self.types)


@dataclass(frozen=True)
class UserProfile:
    id: int
    preferred_type: str
    alpha: float
    base_station: int = 1

    def __post_init__(self):
        if not (0.0 <= self.alpha < 1.0):
            raise InvalidInputError(
                f"user {self.id}: preference factor alpha must lie in [0, 1), got {self.alpha}"
            )


@dataclass(frozen=True)
class UserPopulation:
    users: tuple[UserProfile, ...]
    num_base_stations: int = 4

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))

    def __len__(self) -> int:
        return len(self.users)


@dataclass(frozen=True, eq=False)
class DemandTable:
    """Per-user (N x K x L) and aggregate (K x L) request probabilities."""

    per_user: np.ndarray
    aggregate: np.ndarray = field(repr=False)


def zipf_popularity(ranks, gamma: float) -> np.ndarray:
    """Zipf request probability for each video given its popularity rank."""
    ranks = np.asarray(ranks, dtype=np.float64)
    if ranks.ndim != 1 or ranks.size == 0:
        raise InvalidInputError("zipf_popularity needs a non-empty rank vector")
    if gamma < 0:
        raise InvalidInputError(f"gamma must be non-negative, got {gamma}")
    weights = ranks ** (-float(gamma))
    return weights / weights.sum()


def user_request_distribution(r, user: UserProfile, catalog: VideoCatalog) -> np.ndarray:
    """Skew the popularity vector toward the user's preferred content type.

    Videos of the preferred type are scaled by ``1 + alpha``, all others by
    ``1 - alpha``, and the result is renormalized.
    """
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (len(catalog),):
        raise InvalidInputError(f"popularity vector has shape {r.shape}, expected ({len(catalog)},)")
    if not (0.0 <= user.alpha < 1.0):
        raise InvalidInputError(f"alpha must lie in [0, 1), got {user.alpha}")
    preferred = np.array([v.content_type == user.preferred_type for v in catalog.videos])
    skewed = np.where(preferred, r * (1.0 + user.alpha), r * (1.0 - user.alpha))
    return skewed / skewed.sum()


def representation_split(r_hat, rank, K: int):
    """Split video demand into (HD, SD) shares; SD weight grows linearly with rank.

    A single-video catalog sends all demand to HD.
    """
    if K < 1:
        raise InvalidInputError("K must be at least 1")
    rank = np.asarray(rank, dtype=np.float64)
    g = np.zeros_like(rank) if K == 1 else (rank - 1.0) / (K - 1.0)
    r_hat = np.asarray(r_hat, dtype=np.float64)
    hd = r_hat * (1.0 - g)
    sd = r_hat * g
    if hd.ndim == 0:
        return float(hd), float(sd)
    return hd, sd


def aggregate_demand(per_user) -> np.ndarray:
    per_user = np.asarray(per_user, dtype=np.float64)
    if per_user.ndim != 3:
        raise InvalidInputError("per-user table must be N x K x L")
    if per_user.shape[0] == 0:
        raise InvalidInputError("cannot aggregate demand over zero users")
    return per_user.sum(axis=0) / per_user.shape[0]


def build_demand(catalog: VideoCatalog, users: UserPopulation) -> DemandTable:
    if len(users) == 0:
        raise InvalidInputError("population must contain at least one user")
    K = len(catalog)
    ranks = catalog.ranks
    r = zipf_popularity(ranks, catalog.gamma)
    per_user = np.empty((len(users), K, N_REPRESENTATIONS))
    for i, user in enumerate(users.users):
        r_hat = user_request_distribution(r, user, catalog)
        hd, sd = representation_split(r_hat, ranks, K)
        per_user[i, :, HD] = hd
        per_user[i, :, SD] = sd
    return DemandTable(per_user=per_user, aggregate=aggregate_demand(per_user))


def _quota_counts(n: int, shares: Sequence[float]) -> list[int]:
    """Largest-remainder apportionment of n items to the given shares."""
    shares = np.asarray(shares, dtype=np.float64)
    total = shares.sum()
    if n < 0 or total <= 0 or np.any(shares < 0):
        raise InvalidInputError("shares must be non-negative with a positive sum")
    exact = shares / total * n
    counts = np.floor(exact).astype(int)
    remainder = n - counts.sum()
    order = sorted(range(len(shares)), key=lambda i: (-(exact[i] - counts[i]), i))
    for i in order[:remainder]:
        counts[i] += 1
    return counts.tolist()


def generate_catalog(
    K: int,
    rng: np.random.Generator,
    gamma: float = 0.6,
    types: Sequence[str] = CONTENT_TYPES,
    sd_size_range: tuple[int, int] = (3, 32),
    hd_multiplier: float = 2.0,
    size_bounds: tuple[int, int] = SIZE_BOUNDS,
) -> VideoCatalog:
    """Random catalog: shuffled ranks, balanced content types, bounded sizes.

    SD sizes are uniform integers in ``sd_size_range``; HD sizes are the SD
    size times ``hd_multiplier`` rounded up. Both are clamped to
    ``size_bounds``.
    """
    if K < 1:
        raise InvalidInputError("K must be at least 1")
    lo, hi = size_bounds
    ranks = rng.permutation(K) + 1
    type_idx = rng.permutation(np.arange(K) % len(types))
    sd = rng.integers(sd_size_range[0], sd_size_range[1], size=K, endpoint=True)
    videos = []
    for v in range(K):
        s_sd = int(min(max(sd[v], lo), hi))
        s_hd = int(min(max(math.ceil(s_sd * hd_multiplier), lo), hi))
        videos.append(Video(v + 1, int(ranks[v]), types[type_idx[v]], max(s_hd, s_sd), s_sd))
    return VideoCatalog(tuple(videos), gamma, tuple(types))


def generate_population(
    N: int,
    rng: np.random.Generator,
    type_shares: dict[str, float],
    alpha_shares: dict[float, float],
    num_base_stations: int = 4,
) -> UserPopulation:
    """Population with exact type and alpha quotas, randomly assigned to users.

    Users are spread round-robin over ``num_base_stations``.
    """
    if N < 1:
        raise InvalidInputError("population size must be at least 1")
    type_names = list(type_shares)
    alphas = list(alpha_shares)
    type_labels = np.repeat(np.arange(len(type_names)), _quota_counts(N, list(type_shares.values())))
    alpha_labels = np.repeat(np.arange(len(alphas)), _quota_counts(N, list(alpha_shares.values())))
    type_labels = rng.permutation(type_labels)
    alpha_labels = rng.permutation(alpha_labels)
    users = tuple(
        UserProfile(
            u + 1,
            type_names[type_labels[u]],
            float(alphas[alpha_labels[u]]),
            u % num_base_stations + 1,
        )
        for u in range(N)
    )
    return UserPopulation(users, num_base_stations)


class DemandModel(TransformerMixin, BaseEstimator, auto_wrap_output_keys=None):
    """Estimator wrapper around :func:`build_demand`.

    ``fit`` takes a catalog and a user population and stores the demand
    tables; ``transform`` returns the aggregate K x L request table.
    """

    def __init__(self, gamma=None):
        self.gamma = gamma

    def fit(self, catalog: VideoCatalog, users: UserPopulation = None):
        if users is None:
            raise InvalidInputError("DemandModel.fit needs a user population")
        if self.gamma is not None:
            catalog = VideoCatalog(catalog.videos, self.gamma, catalog.types)
        table = build_demand(catalog, users)
        self.catalog_ = catalog
        self.per_user_ = table.per_user
        self.aggregate_ = table.aggregate
        self.popularity_ = zipf_popularity(catalog.ranks, catalog.gamma)
        return self

    def transform(self, catalog=None):
        check_is_fitted(self, "aggregate_")
        return self.aggregate_.copy()

    def fit_transform(self, catalog, users=None, **fit_params):
        return self.fit(catalog, users).transform()

    @property
    def demand_table_(self) -> DemandTable:
        check_is_fitted(self, "aggregate_")
        return DemandTable(self.per_user_, self.aggregate_)
