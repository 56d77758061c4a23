"""Per-server client limit assignment.

Two policies, matching the two ways a server can spread its limit over
its clients when demand exceeds it:

* ``proportional_split``: every client keeps the same throttled ratio.
* ``waterfill_split``: every client gets the same cap (the water level),
  so large requesters absorb the throttling; the resulting accepted
  vector is the max-min fair allocation.

The water level is the unique ``l`` with ``sum_j min(r_j, l) == limit``,
found exactly by a single sorted prefix scan.  A legacy slack-update
recurrence (`slack_recurrence_level`) is kept for comparison only: it
double-counts redistributed slack and can over-allocate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ClientDemands:
    """Per-client request counts plus the server's own limit."""

    requests: np.ndarray
    server_limit: float

    def __post_init__(self):
        requests = np.asarray(self.requests, dtype=np.float64)
        if requests.ndim != 1 or requests.size < 1:
            raise ValueError("need at least one client")
        if np.any(requests < 0):
            raise ValueError("client requests must be >= 0")
        if self.server_limit < 0:
            raise ValueError(f"server limit must be >= 0, got {self.server_limit}")
        object.__setattr__(self, "requests", requests)
        object.__setattr__(self, "server_limit", float(self.server_limit))
        requests.setflags(write=False)

    @property
    def total(self) -> float:
        return float(np.sum(self.requests))


@dataclass(frozen=True)
class Allocation:
    """Per-client limits; ``water_level`` is set by the waterfilling policy."""

    limits: np.ndarray
    water_level: float | None = None

    def accepted(self, requests: np.ndarray) -> np.ndarray:
        """Traffic each client actually gets through: min(limit, request)."""
        return np.minimum(self.limits, requests)


def proportional_split(d: ClientDemands) -> Allocation:
    """Uniform throttled ratio: each client is scaled by limit/total demand."""
    if d.total <= d.server_limit:
        return Allocation(limits=d.requests.copy())
    ratio = d.server_limit / d.total
    return Allocation(limits=ratio * d.requests)


def water_level(d: ClientDemands) -> float:
    """The cap ``l`` solving ``sum_j min(r_j, l) = limit``.

    Defined for over-subscribed demand (total >= limit); returns the
    minimal solution on the boundary total == limit.  Exact sorted prefix
    scan, no iteration.
    """
    if d.total < d.server_limit:
        raise ValueError("water level undefined: demand does not exceed the limit")
    return _scan_level(d.requests, d.server_limit)


def _scan_level(requests: np.ndarray, limit: float) -> float:
    rs = np.sort(requests)
    c = rs.size
    prefix = 0.0
    for k in range(c):
        candidate = (limit - prefix) / (c - k)
        if candidate <= rs[k]:
            return float(candidate)
        prefix += rs[k]
    # unreachable when total >= limit; guard for exact-total rounding
    return float(rs[-1])


def waterfill_split(d: ClientDemands, use_slack_recurrence: bool = False) -> Allocation:
    """Equal-cap split: all clients get the water level as their limit.

    Under-subscribed servers pass demand through unchanged.  The cap is
    assigned even to clients demanding less than it; their accepted
    traffic is still just their demand.
    """
    if d.total <= d.server_limit:
        return Allocation(limits=d.requests.copy())
    level = slack_recurrence_level(d) if use_slack_recurrence else water_level(d)
    return Allocation(limits=np.full(d.requests.size, level), water_level=level)


def slack_recurrence_level(d: ClientDemands) -> float:
    """Legacy slack-redistribution recurrence for the cap.

    Walks the sorted demands accumulating slack ``s := s - r + l`` and
    raising ``l := s/(c - j) + l``.  The slack term re-counts already
    redistributed surplus, so the level comes out high and the implied
    allocation can exceed the server limit (for demands (1, 2, 3, 10) and
    limit 8 it yields 3.0, which over-allocates by 1).  Non-conserving;
    use `water_level` for the exact cap.
    """
    rs = np.sort(d.requests)
    c = rs.size
    s = 0.0
    level = d.server_limit / c
    for j in range(1, c + 1):
        if level > rs[j - 1]:
            if c - j == 0:
                break
            s = s - rs[j - 1] + level
            level = s / (c - j) + level
    return float(level)
