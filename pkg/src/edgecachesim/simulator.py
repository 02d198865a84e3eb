"""Trace generation and replay for the static placement and online policies.

Randomness comes from one root seed split into named, independent
sub-streams: ``catalog``, ``population`` and ``oracle`` (index 0),
``trace`` and ``refresh`` (index = day). Each sub-stream is seeded with
``SeedSequence(seed, spawn_key=(stream_id, index))``, so adding days or
changing one stage never perturbs another.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import CacheState, make_policy, serve
from .demand import (
    DemandTable,
    InvalidInputError,
    UserPopulation,
    VideoCatalog,
    build_demand,
)
from .placement import HIT, MISS, TRANSCODE_HIT, Placement, serve_static, solve_placement, value_table

__all__ = [
    "STREAMS",
    "substream",
    "DelayModel",
    "SimulationConfig",
    "RequestTrace",
    "Counts",
    "DayResult",
    "SimMetrics",
    "Period",
    "generate_trace",
    "refresh_popularity",
    "build_periods",
    "delay_and_backhaul",
    "tally",
    "run_offline",
    "run_proposed",
    "run_online",
]

STREAMS = {"catalog": 0, "population": 1, "trace": 2, "refresh": 3, "oracle": 4}
ALL = "ALL"


def substream(seed: int, name: str, index: int = 0) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(STREAMS[name], int(index))))


@dataclass(frozen=True)
class DelayModel:
    """Startup delay per outcome, in milliseconds.

    A transcode hit costs ``hit_ms + transcode_ms``.
    """

    hit_ms: float = 10.0
    transcode_ms: float = 5.0
    miss_ms: float = 100.0

    def __post_init__(self):
        if not (0 <= self.hit_ms and self.transcode_ms >= 0 and self.hit_ms + self.transcode_ms <= self.miss_ms):
            raise InvalidInputError(
                "delay model must satisfy 0 <= hit <= hit + transcode <= miss "
                f"(got hit={self.hit_ms}, transcode={self.transcode_ms}, miss={self.miss_ms})"
            )

    def per_outcome(self) -> np.ndarray:
        table = np.empty(3)
        table[MISS] = self.miss_ms
        table[HIT] = self.hit_ms
        table[TRANSCODE_HIT] = self.hit_ms + self.transcode_ms
        return table


@dataclass(frozen=True)
class SimulationConfig:
    lam: float = 0.9
    requests_per_day: int = 900
    days: int = 1
    seed: int = 0
    delay: DelayModel = field(default_factory=DelayModel)
    refresh_rho: float = 0.0
    num_base_stations: int = 4
    transcode_serve: bool = True
    wgdsf_half_life_days: float = 1.0
    wgdsf_type_weights: tuple = ()
    wgdsf_cost: str = "byte"

    def __post_init__(self):
        if not self.lam > 0:
            raise InvalidInputError(f"lambda must be positive, got {self.lam}")
        if self.requests_per_day < 1:
            raise InvalidInputError("requests_per_day must be at least 1")
        if self.days < 1:
            raise InvalidInputError("days must be at least 1")
        if not 0.0 <= self.refresh_rho <= 1.0:
            raise InvalidInputError(f"refresh rho must lie in [0, 1], got {self.refresh_rho}")

    @property
    def day_length(self) -> float:
        """Expected span of one day's arrivals in trace time units."""
        return self.requests_per_day / self.lam


@dataclass(frozen=True, eq=False)
class RequestTrace:
    timestamps: np.ndarray
    users: np.ndarray
    videos: np.ndarray
    reps: np.ndarray
    day: int = 0

    def __len__(self) -> int:
        return len(self.timestamps)

    @property
    def requests(self) -> np.ndarray:
        return np.column_stack([self.videos, self.reps])

    @property
    def end_time(self) -> float:
        return float(self.timestamps[-1]) if len(self) else 0.0


def generate_trace(
    demand: DemandTable,
    config: SimulationConfig,
    day_index: int = 0,
    rng: np.random.Generator | None = None,
    start_time: float = 0.0,
) -> RequestTrace:
    """One day of requests: exponential gaps, uniform user, then (video, rep)."""
    if rng is None:
        rng = substream(config.seed, "trace", day_index)
    Q = config.requests_per_day
    per_user = demand.per_user
    N, K, L = per_user.shape
    gaps = rng.exponential(1.0 / config.lam, size=Q)
    timestamps = start_time + np.cumsum(gaps)
    users = rng.integers(0, N, size=Q)
    u = rng.random(Q)
    flat_tables = per_user.reshape(N, K * L)
    cdf = np.cumsum(flat_tables, axis=1)[users]
    # first cell whose cumulative mass exceeds u; zero-mass cells are never picked
    flat = (cdf <= u[:, None]).sum(axis=1)
    overflow = flat == K * L
    if np.any(overflow):
        last_positive = K * L - 1 - np.argmax(flat_tables[:, ::-1] > 0, axis=1)
        flat[overflow] = last_positive[users[overflow]]
    return RequestTrace(
        timestamps=timestamps,
        users=users,
        videos=flat // L,
        reps=flat % L,
        day=day_index,
    )


def refresh_popularity(catalog: VideoCatalog, rng: np.random.Generator, rho: float) -> VideoCatalog:
    """Swap ``ceil(rho * K / 2)`` random disjoint pairs of popularity ranks."""
    if not 0.0 <= rho <= 1.0:
        raise InvalidInputError(f"rho must lie in [0, 1], got {rho}")
    K = len(catalog)
    n_pairs = min(math.ceil(rho * K / 2), K // 2)
    if n_pairs == 0:
        return catalog
    ranks = catalog.ranks.copy()
    chosen = rng.permutation(K)[: 2 * n_pairs]
    a, b = chosen[0::2], chosen[1::2]
    ranks[a], ranks[b] = ranks[b], ranks[a].copy()
    return catalog.with_ranks(ranks)


@dataclass(frozen=True, eq=False)
class Period:
    day: int
    catalog: VideoCatalog
    demand: DemandTable
    trace: RequestTrace


def build_periods(catalog: VideoCatalog, users: UserPopulation, config: SimulationConfig) -> list[Period]:
    """Per-day catalogs, demand tables and traces shared by every algorithm."""
    periods = []
    start = 0.0
    for day in range(config.days):
        if day > 0:
            catalog = refresh_popularity(catalog, substream(config.seed, "refresh", day), config.refresh_rho)
        demand = build_demand(catalog, users)
        trace = generate_trace(demand, config, day, start_time=start)
        start = trace.end_time
        periods.append(Period(day, catalog, demand, trace))
    return periods


@dataclass
class Counts:
    requests: int = 0
    exact_hits: int = 0
    transcode_hits: int = 0
    misses: int = 0
    backhaul_units: int = 0
    delay_total_ms: float = 0.0

    @property
    def hits(self) -> int:
        return self.exact_hits + self.transcode_hits

    @property
    def hit_ratio(self) -> float:
        return self.hits / self.requests if self.requests else 0.0

    @property
    def mean_delay_ms(self) -> float:
        return self.delay_total_ms / self.requests if self.requests else 0.0

    def __add__(self, other: "Counts") -> "Counts":
        return Counts(
            self.requests + other.requests,
            self.exact_hits + other.exact_hits,
            self.transcode_hits + other.transcode_hits,
            self.misses + other.misses,
            self.backhaul_units + other.backhaul_units,
            self.delay_total_ms + other.delay_total_ms,
        )


@dataclass
class DayResult:
    day: int
    counts: dict  # content type or "ALL" -> Counts
    predicted_hit_ratio: float | None = None


@dataclass
class SimMetrics:
    algorithm: str
    capacity: int
    days: list = field(default_factory=list)
    placements: list = field(default_factory=list)

    def total(self, content_type: str = ALL) -> Counts:
        out = Counts()
        for d in self.days:
            out = out + d.counts[content_type]
        return out

    @property
    def hit_ratio(self) -> float:
        return self.total().hit_ratio


def delay_and_backhaul(outcomes, delay_model: DelayModel, sizes) -> tuple[float, int]:
    """Mean startup delay and backhaul units for an outcome stream.

    ``sizes`` holds the size of each requested object; only misses load the
    backhaul.
    """
    outcomes = np.asarray(outcomes, dtype=np.int64)
    sizes = np.asarray(sizes)
    if outcomes.size == 0:
        return 0.0, 0
    delays = delay_model.per_outcome()[outcomes]
    return float(delays.mean()), int(sizes[outcomes == MISS].sum())


def _counts(outcomes, sizes, delays) -> Counts:
    return Counts(
        requests=int(outcomes.size),
        exact_hits=int(np.count_nonzero(outcomes == HIT)),
        transcode_hits=int(np.count_nonzero(outcomes == TRANSCODE_HIT)),
        misses=int(np.count_nonzero(outcomes == MISS)),
        backhaul_units=int(sizes[outcomes == MISS].sum()),
        delay_total_ms=float(delays.sum()),
    )


def tally(outcomes, trace: RequestTrace, catalog: VideoCatalog, delay_model: DelayModel) -> dict:
    """Counts overall and per content type for one replayed trace."""
    outcomes = np.asarray(outcomes, dtype=np.int64)
    sizes = catalog.sizes[trace.videos, trace.reps]
    delays = delay_model.per_outcome()[outcomes]
    video_type = np.array([catalog.types.index(t) for t in catalog.content_types])
    req_type = video_type[trace.videos]
    result = {ALL: _counts(outcomes, sizes, delays)}
    for i, name in enumerate(catalog.types):
        mask = req_type == i
        result[name] = _counts(outcomes[mask], sizes[mask], delays[mask])
    return result


def run_offline(placement: Placement, trace: RequestTrace, catalog: VideoCatalog,
                delay_model: DelayModel = DelayModel()) -> DayResult:
    outcomes = serve_static(placement.x, placement.y, trace.videos, trace.reps)
    return DayResult(trace.day, tally(outcomes, trace, catalog, delay_model), placement.predicted_hit_ratio)


def run_proposed(periods: list[Period], capacity: int, config: SimulationConfig) -> SimMetrics:
    """Re-solve the placement at the start of each period and replay its trace."""
    metrics = SimMetrics("PROPOSED", int(capacity))
    for period in periods:
        values = value_table(period.demand.aggregate)
        placement = solve_placement(values, period.catalog.sizes, capacity)
        metrics.placements.append(placement)
        metrics.days.append(run_offline(placement, period.trace, period.catalog, config.delay))
    return metrics


def run_online(policy_name: str, capacity: int, periods: list[Period], config: SimulationConfig) -> SimMetrics:
    """Replay every period through one warm online cache.

    Cache contents persist across day boundaries; the policy's counters are
    reset at each boundary.
    """
    if capacity < 0:
        raise InvalidInputError("capacity must be non-negative")
    params = {}
    if policy_name in ("WGDSF", "WGDSF*"):
        params = dict(
            half_life=config.wgdsf_half_life_days * config.day_length,
            type_weights=dict(config.wgdsf_type_weights),
            cost=config.wgdsf_cost,
        )
    policy = make_policy(policy_name, **params)
    state = CacheState(int(capacity))
    metrics = SimMetrics(policy.name, int(capacity))
    for period in periods:
        if period.day > 0:
            policy.on_refresh()
        catalog, trace = period.catalog, period.trace
        sizes = catalog.sizes
        types = catalog.content_types
        outcomes = np.empty(len(trace), dtype=np.int64)
        for i, (t, v, l) in enumerate(zip(trace.timestamps.tolist(), trace.videos.tolist(), trace.reps.tolist())):
            outcomes[i] = serve(state, policy, v, l, t, int(sizes[v, l]), types[v], config.transcode_serve)
        metrics.days.append(DayResult(period.day, tally(outcomes, trace, catalog, config.delay)))
    return metrics
