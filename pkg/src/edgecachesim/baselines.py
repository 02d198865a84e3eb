"""Online replacement policies replayed against a request trace.

All policies share one serving rule: an exact resident copy is a hit, a
resident higher-quality copy of the same video is a transcode hit, anything
else is a miss. Missed objects are admitted (fetch-on-miss) unless larger
than the whole cache, and at most one representation per video is resident.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .demand import InvalidInputError
from .placement import HIT, MISS, TRANSCODE_HIT

__all__ = [
    "CacheState",
    "LRUPolicy",
    "LFUPolicy",
    "WGDSFPolicy",
    "make_policy",
    "serve",
    "eviction_order",
    "OnlineCache",
    "LRUCache",
    "LFUCache",
    "WGDSFCache",
    "POLICY_NAMES",
]

POLICY_NAMES = ("LRU", "LFU", "WGDSF*")


@dataclass
class CacheState:
    capacity: int
    resident: dict = field(default_factory=dict)  # (video, rep) -> size
    used: int = 0
    by_video: dict = field(default_factory=dict)  # video -> resident rep

    def admit(self, obj, size):
        self.resident[obj] = size
        self.by_video[obj[0]] = obj[1]
        self.used += size

    def remove(self, obj):
        self.used -= self.resident.pop(obj)
        del self.by_video[obj[0]]


class LRUPolicy:
    name = "LRU"

    def __init__(self):
        self.last_access = {}
        self._tick = 0

    def touch(self, obj, timestamp, size, content_type):
        self._tick += 1
        self.last_access[obj] = self._tick

    def forget(self, obj):
        self.last_access.pop(obj, None)

    def key(self, obj):
        return (self.last_access[obj],)

    def on_evict(self, obj):
        self.forget(obj)

    def on_refresh(self):
        pass


class LFUPolicy(LRUPolicy):
    """Perfect LFU: counts survive eviction until the next popularity refresh."""

    name = "LFU"

    def __init__(self):
        super().__init__()
        self.counts = {}

    def touch(self, obj, timestamp, size, content_type):
        super().touch(obj, timestamp, size, content_type)
        self.counts[obj] = self.counts.get(obj, 0) + 1

    def key(self, obj):
        return (self.counts.get(obj, 0), self.last_access[obj])

    def on_refresh(self):
        self.counts.clear()


class WGDSFPolicy(LRUPolicy):
    """Greedy-dual priority with time-decayed frequency and per-type weights.

    ``H = clock + weight[type] * decayed_frequency * cost / size``, frozen at
    each access. On eviction the clock advances to the evicted key and the
    object's frequency history is dropped. With the default ``cost="byte"``
    the cost equals the size, so ``cost / size == 1``.
    """

    name = "WGDSF*"

    def __init__(self, half_life=1000.0, type_weights=None, cost="byte"):
        super().__init__()
        if half_life <= 0:
            raise InvalidInputError("WGDSF half-life must be positive")
        if cost not in ("byte", "unit"):
            raise InvalidInputError(f"WGDSF cost model must be 'byte' or 'unit', got {cost!r}")
        type_weights = dict(type_weights or {})
        if any(w <= 0 for w in type_weights.values()):
            raise InvalidInputError("WGDSF type weights must be positive")
        self.half_life = float(half_life)
        self.type_weights = type_weights
        self.cost = cost
        self.clock = 0.0
        self.freq = {}  # obj -> (decayed count, time of last update)
        self.priority = {}

    def decayed(self, obj, timestamp):
        f, t0 = self.freq.get(obj, (0.0, timestamp))
        return f * math.pow(2.0, -(timestamp - t0) / self.half_life)

    def touch(self, obj, timestamp, size, content_type):
        super().touch(obj, timestamp, size, content_type)
        f = self.decayed(obj, timestamp) + 1.0
        self.freq[obj] = (f, timestamp)
        cost = size if self.cost == "byte" else 1.0
        weight = self.type_weights.get(content_type, 1.0)
        self.priority[obj] = self.clock + weight * f * cost / size

    def key(self, obj):
        return (self.priority[obj], self.last_access[obj])

    def on_evict(self, obj):
        self.clock = self.priority.pop(obj)
        self.freq.pop(obj, None)
        super().on_evict(obj)


def make_policy(name: str, **params):
    if name == "LRU":
        return LRUPolicy()
    if name == "LFU":
        return LFUPolicy()
    if name in ("WGDSF", "WGDSF*"):
        return WGDSFPolicy(**params)
    raise InvalidInputError(f"unknown policy {name!r}")


def eviction_order(state: CacheState, policy) -> list:
    """Resident objects in the order the policy would evict them."""
    return sorted(state.resident, key=policy.key)


def _evict(state: CacheState, policy, obj):
    state.remove(obj)
    policy.on_evict(obj)


def serve(state: CacheState, policy, video, rep, timestamp, size, content_type="", transcode=True):
    """Serve one request, updating ``state`` and ``policy`` in place.

    ``size`` is the size of the requested representation. Returns the
    outcome code (``HIT``, ``TRANSCODE_HIT`` or ``MISS``).
    """
    obj = (video, rep)
    held = state.by_video.get(video)
    if held == rep:
        policy.touch(obj, timestamp, size, content_type)
        return HIT
    if held is not None and held < rep and transcode:
        other = (video, held)
        policy.touch(other, timestamp, state.resident[other], content_type)
        return TRANSCODE_HIT

    if size <= state.capacity:
        if held is not None:
            _evict(state, policy, (video, held))
        while state.used + size > state.capacity:
            victim = min(state.resident, key=policy.key)
            _evict(state, policy, victim)
        state.admit(obj, size)
        policy.touch(obj, timestamp, size, content_type)
    return MISS


class OnlineCache(BaseEstimator):
    """Shared estimator surface for the online policies.

    ``fit(sizes, content_types)`` binds the catalog and empties the cache;
    ``predict(requests, timestamps)`` replays requests in order, carrying
    cache state across calls, and returns outcome codes. ``refresh`` marks a
    popularity-period boundary.
    """

    policy_name = None

    def __init__(self, capacity=0, transcode=True):
        self.capacity = capacity
        self.transcode = transcode

    def _make_policy(self):
        return make_policy(self.policy_name)

    def fit(self, sizes, content_types=None):
        sizes = check_array(sizes, dtype=np.int64)
        if self.capacity < 0:
            raise InvalidInputError("capacity must be non-negative")
        self.sizes_ = sizes
        self.content_types_ = list(content_types) if content_types is not None else [""] * len(sizes)
        self.state_ = CacheState(int(self.capacity))
        self.policy_ = self._make_policy()
        return self

    def refresh(self):
        check_is_fitted(self, "state_")
        self.policy_.on_refresh()
        return self

    def predict(self, requests, timestamps=None) -> np.ndarray:
        check_is_fitted(self, "state_")
        requests = check_array(requests, dtype=np.int64)
        if timestamps is None:
            timestamps = np.arange(len(requests), dtype=np.float64)
        out = np.empty(len(requests), dtype=np.int64)
        sizes, types = self.sizes_, self.content_types_
        for i, (v, l) in enumerate(requests.tolist()):
            out[i] = serve(
                self.state_, self.policy_, v, l, float(timestamps[i]),
                int(sizes[v, l]), types[v], self.transcode,
            )
        return out

    def score(self, requests, timestamps=None) -> float:
        return float(np.mean(self.predict(requests, timestamps) != MISS))

    def eviction_order(self) -> list:
        check_is_fitted(self, "state_")
        return eviction_order(self.state_, self.policy_)


class LRUCache(OnlineCache):
    policy_name = "LRU"


class LFUCache(OnlineCache):
    policy_name = "LFU"


class WGDSFCache(OnlineCache):
    policy_name = "WGDSF*"

    def __init__(self, capacity=0, transcode=True, half_life=1000.0, type_weights=None, cost="byte"):
        super().__init__(capacity=capacity, transcode=transcode)
        self.half_life = half_life
        self.type_weights = type_weights
        self.cost = cost

    def _make_policy(self):
        return WGDSFPolicy(self.half_life, self.type_weights, self.cost)
