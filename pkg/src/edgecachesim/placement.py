"""Hit-ratio-maximizing cache placement as a grouped knapsack.

Each video is a group whose members are its representations; at most one
member per group may be cached. Caching a representation serves its own
requests and, by transcoding down, the requests for every lower-quality
representation of the same video. Representation index 0 is the highest
quality.

The dynamic program runs over integer capacities ``0..S`` and stores an
explicit choice matrix for traceback. Ties are broken toward (a) not caching,
(b) the smaller object, (c) the lower representation index, in that order.
:func:`brute_force_placement` enumerates every group choice and applies the
same preference order, so both routes agree on value and, barring float
rounding coincidences, on the placement itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .demand import InvalidInputError

__all__ = [
    "NONE",
    "Placement",
    "DpState",
    "value_table",
    "solve_placement",
    "derive_transcode",
    "predicted_hit_ratio",
    "brute_force_placement",
    "HitRatioPlacement",
    "BruteForcePlacement",
    "MISS",
    "HIT",
    "TRANSCODE_HIT",
]

NONE = -1
BRUTE_FORCE_MAX_K = 12

MISS, HIT, TRANSCODE_HIT = 0, 1, 2


@dataclass(frozen=True, eq=False)
class Placement:
    x: np.ndarray
    y: np.ndarray
    predicted_hit_ratio: float
    capacity_used: int
    capacity: int

    @property
    def cached(self) -> list[tuple[int, int]]:
        """(video index, representation) pairs held in the cache, 0-based."""
        return [tuple(map(int, p)) for p in np.argwhere(self.x == 1)]

    def to_dict(self) -> dict:
        return {
            "capacity": int(self.capacity),
            "capacity_used": int(self.capacity_used),
            "predicted_hit_ratio": float(self.predicted_hit_ratio),
            "x": self.x.astype(int).tolist(),
            "y": self.y.astype(int).tolist(),
        }


@dataclass(frozen=True, eq=False)
class DpState:
    trans: np.ndarray
    choice: np.ndarray


def _check_req(req) -> np.ndarray:
    req = check_array(req, dtype=np.float64, ensure_min_features=1, ensure_all_finite=True)
    if np.any(req < 0):
        raise InvalidInputError("demand entries must be non-negative")
    return req


def _check_sizes(sizes, shape=None) -> np.ndarray:
    arr = check_array(sizes, dtype=None, ensure_all_finite=True)
    if not np.all(np.equal(np.mod(arr, 1), 0)):
        raise InvalidInputError("sizes must be integers (storage units)")
    arr = arr.astype(np.int64)
    if np.any(arr < 1):
        raise InvalidInputError("sizes must be positive")
    if shape is not None and arr.shape != shape:
        raise InvalidInputError(f"sizes have shape {arr.shape}, expected {shape}")
    return arr


def _check_capacity(S) -> int:
    if int(S) != S or S < 0:
        raise InvalidInputError(f"capacity must be a non-negative integer, got {S!r}")
    return int(S)


def value_table(req) -> np.ndarray:
    """Covered request probability for caching each representation.

    Caching representation ``l`` covers ``l`` itself and every lower-quality
    representation ``m > l``, so ``p[:, l] = req[:, l:].sum(axis=1)``.
    """
    req = _check_req(req)
    # reverse cumulative sum, accumulated from the lowest quality upward
    return np.cumsum(req[:, ::-1], axis=1)[:, ::-1]


def _member_order(sizes_v: np.ndarray) -> list[int]:
    return sorted(range(len(sizes_v)), key=lambda l: (sizes_v[l], l))


def solve_placement(values, sizes, S, return_state: bool = False):
    """Grouped-knapsack DP over capacities ``0..S`` with traceback.

    Returns a :class:`Placement`; with ``return_state=True`` also returns the
    :class:`DpState` holding the value and choice matrices.
    """
    p = check_array(values, dtype=np.float64)
    sizes = _check_sizes(sizes, p.shape)
    S = _check_capacity(S)
    K, L = p.shape

    trans = np.zeros((K + 1, S + 1))
    choice = np.full((K + 1, S + 1), NONE, dtype=np.int64)
    for v in range(1, K + 1):
        prev = trans[v - 1]
        best = prev.copy()
        pick = np.full(S + 1, NONE, dtype=np.int64)
        for l in _member_order(sizes[v - 1]):
            s = sizes[v - 1, l]
            if s > S:
                continue
            cand = prev[: S + 1 - s] + p[v - 1, l]
            improved = cand > best[s:]
            best[s:][improved] = cand[improved]
            pick[s:][improved] = l
        trans[v] = best
        choice[v] = pick

    x = np.zeros((K, L), dtype=np.int64)
    w = S
    for v in range(K, 0, -1):
        l = choice[v, w]
        if l != NONE:
            x[v - 1, l] = 1
            w -= sizes[v - 1, l]

    placement = Placement(
        x=x,
        y=derive_transcode(x),
        predicted_hit_ratio=float(trans[K, S]),
        capacity_used=int((x * sizes).sum()),
        capacity=S,
    )
    if return_state:
        return placement, DpState(trans, choice)
    return placement


def derive_transcode(x) -> np.ndarray:
    """Representations servable by transcoding down from a cached higher one."""
    x = np.asarray(x)
    if x.ndim != 2:
        raise InvalidInputError("placement matrix must be K x L")
    if np.any((x != 0) & (x != 1)):
        raise InvalidInputError("placement entries must be 0 or 1")
    if np.any(x.sum(axis=1) > 1):
        raise InvalidInputError("at most one representation per video may be cached")
    higher_cached = np.cumsum(x, axis=1) - x
    return (higher_cached > 0).astype(np.int64)


def predicted_hit_ratio(x, y, req) -> float:
    """Expected fraction of requests served at the edge (exact or transcoded)."""
    req = _check_req(req)
    covered = np.asarray(x) + np.asarray(y)
    if np.any(covered > 1):
        raise InvalidInputError("a representation cannot be both cached and transcoded")
    return float((covered * req).sum())


def brute_force_placement(values, sizes, S, max_k: int = BRUTE_FORCE_MAX_K) -> Placement:
    """Exhaustive optimum over every group choice; the DP's optimality oracle.

    Choices are laid out so the flat index orders selections
    lexicographically by (last group, ..., first group) with each group's
    options in tie-break order. The first maximum is therefore the selection
    the DP traceback produces.
    """
    p = check_array(values, dtype=np.float64)
    sizes = _check_sizes(sizes, p.shape)
    S = _check_capacity(S)
    K, L = p.shape
    if K > max_k:
        raise InvalidInputError(
            f"brute force refused: K={K} exceeds bound {max_k} ({L + 1}^{K} selections)"
        )

    total_value = np.zeros(1)
    total_size = np.zeros(1, dtype=np.int64)
    options = []
    for v in range(K):
        opts = [NONE] + _member_order(sizes[v])
        opt_val = np.array([0.0] + [p[v, l] for l in opts[1:]])
        opt_size = np.array([0] + [sizes[v, l] for l in opts[1:]], dtype=np.int64)
        # group v becomes the most significant digit
        total_value = np.add.outer(opt_val, total_value).ravel()
        total_size = np.add.outer(opt_size, total_size).ravel()
        options.append(opts)

    masked = np.where(total_size <= S, total_value, -np.inf)
    best = int(np.argmax(masked))

    x = np.zeros((K, L), dtype=np.int64)
    idx = best
    for v in range(K):
        digit = idx % (L + 1)
        idx //= L + 1
        l = options[v][digit]
        if l != NONE:
            x[v, l] = 1
    return Placement(
        x=x,
        y=derive_transcode(x),
        predicted_hit_ratio=float(masked[best]),
        capacity_used=int((x * sizes).sum()),
        capacity=S,
    )


def serve_static(x, y, videos, representations) -> np.ndarray:
    """Outcome code for each request against a fixed placement."""
    videos = np.asarray(videos, dtype=np.int64)
    reps = np.asarray(representations, dtype=np.int64)
    out = np.full(videos.shape, MISS, dtype=np.int64)
    out[np.asarray(y)[videos, reps] == 1] = TRANSCODE_HIT
    out[np.asarray(x)[videos, reps] == 1] = HIT
    return out


class HitRatioPlacement(BaseEstimator):
    """Optimal static placement for a known demand table.

    Parameters
    ----------
    capacity : int
        Edge storage ``S`` in storage units.

    ``fit(req, sizes)`` solves the placement; ``predict`` maps requests,
    given as an ``(n, 2)`` array of 0-based ``(video, representation)``
    pairs, to outcome codes; ``score`` is the empirical hit ratio of those
    requests.
    """

    def __init__(self, capacity=0):
        self.capacity = capacity

    def _solve(self, values, sizes):
        return solve_placement(values, sizes, self.capacity, return_state=True)

    def fit(self, req, sizes):
        req = _check_req(req)
        self.values_ = value_table(req)
        placement, state = self._solve(self.values_, sizes)
        self.placement_ = placement
        self.state_ = state
        self.x_ = placement.x
        self.y_ = placement.y
        self.predicted_hit_ratio_ = placement.predicted_hit_ratio
        self.n_videos_, self.n_representations_ = req.shape
        return self

    def predict(self, requests) -> np.ndarray:
        check_is_fitted(self, "x_")
        requests = check_array(requests, dtype=np.int64)
        if requests.shape[1] != 2:
            raise InvalidInputError("requests must be an (n, 2) array of (video, representation)")
        return serve_static(self.x_, self.y_, requests[:, 0], requests[:, 1])

    def score(self, requests, y=None) -> float:
        outcomes = self.predict(requests)
        return float(np.mean(outcomes != MISS))


class BruteForcePlacement(HitRatioPlacement):
    """Exhaustive-search twin of :class:`HitRatioPlacement` (small K only)."""

    def __init__(self, capacity=0, max_k=BRUTE_FORCE_MAX_K):
        super().__init__(capacity=capacity)
        self.max_k = max_k

    def _solve(self, values, sizes):
        return brute_force_placement(values, sizes, self.capacity, self.max_k), None
