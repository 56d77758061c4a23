import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dst.allocation import (
    ClientDemands,
    proportional_split,
    slack_recurrence_level,
    water_level,
    waterfill_split,
)

from conftest import rng_for


def _bisect_level(requests, limit, iters=200):
    lo, hi = 0.0, float(np.max(requests))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.sum(np.minimum(requests, mid)) < limit:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _progressive_fill(requests, limit):
    """Raise all active clients together; the max-min fair allocation."""
    alloc = np.zeros_like(requests, dtype=np.float64)
    remaining = float(limit)
    for _ in range(requests.size + 1):
        active = requests - alloc > 1e-12
        if remaining <= 1e-13 or not np.any(active):
            break
        headroom = np.min(requests[active] - alloc[active])
        step = min(remaining / np.count_nonzero(active), headroom)
        alloc[active] += step
        remaining -= step * np.count_nonzero(active)
    return alloc


# --- proportional ----------------------------------------------------------------


def test_proportional_examples():
    a = proportional_split(ClientDemands(np.array([2.0, 6.0]), 4.0))
    assert np.allclose(a.limits, [1.0, 3.0])
    a = proportional_split(ClientDemands(np.array([2.0, 6.0]), 10.0))
    assert np.allclose(a.limits, [2.0, 6.0])
    a = proportional_split(ClientDemands(np.array([5.0]), 0.0))
    assert np.allclose(a.limits, [0.0])
    a = proportional_split(ClientDemands(np.array([0.0, 0.0]), 0.0))
    assert np.allclose(a.limits, [0.0, 0.0])


def test_proportional_uniform_ratio():
    rng = rng_for(61)
    for _ in range(200):
        c = int(rng.integers(1, 30))
        req = 100.0 * rng.random(c)
        if req.sum() == 0:
            continue
        limit = 0.8 * req.sum() * rng.random()
        a = proportional_split(ClientDemands(req, limit))
        pos = req > 0
        if np.any(pos) and req.sum() > limit:
            ratios = (req[pos] - a.limits[pos]) / req[pos]
            assert np.max(ratios) - np.min(ratios) <= 1e-12


# --- water level -------------------------------------------------------------------


def test_water_level_examples():
    assert water_level(ClientDemands(np.array([1.0, 2.0, 3.0, 10.0]), 8.0)) == pytest.approx(2.5)
    assert water_level(ClientDemands(np.full(4, 3.0), 6.0)) == pytest.approx(1.5)
    assert water_level(ClientDemands(np.array([4.0, 4.0]), 8.0)) == pytest.approx(4.0)


def test_water_level_requires_oversubscription():
    with pytest.raises(ValueError):
        water_level(ClientDemands(np.array([1.0, 1.0]), 5.0))


def test_water_level_vs_bisection_seeded():
    rng = rng_for(62)
    for _ in range(500):
        c = int(rng.integers(1, 100))
        req = 100.0 * rng.random(c)
        total = req.sum()
        if total <= 0:
            continue
        limit = total * (0.05 + 0.9 * rng.random())
        lvl = water_level(ClientDemands(req, limit))
        assert abs(lvl - _bisect_level(req, limit)) <= 1e-10 * max(1.0, limit)
        assert np.sum(np.minimum(req, lvl)) == pytest.approx(limit, abs=1e-9)


@given(
    st.lists(st.floats(min_value=0.0, max_value=100.0), min_size=1, max_size=20),
    st.floats(min_value=0.0, max_value=0.999),
)
@settings(max_examples=100, deadline=None)
def test_water_level_property(reqs, frac):
    req = np.array(reqs)
    total = float(req.sum())
    if total <= 0:
        return
    limit = total * frac
    lvl = water_level(ClientDemands(req, limit))
    assert np.sum(np.minimum(req, lvl)) == pytest.approx(limit, abs=1e-9 * max(1.0, limit))


# --- waterfilling split ---------------------------------------------------------------


def test_waterfill_examples():
    a = waterfill_split(ClientDemands(np.array([1.0, 2.0, 3.0, 10.0]), 8.0))
    assert a.water_level == pytest.approx(2.5)
    assert np.allclose(a.limits, 2.5)
    assert np.allclose(a.accepted(np.array([1.0, 2.0, 3.0, 10.0])), [1.0, 2.0, 2.5, 2.5])

    a = waterfill_split(ClientDemands(np.array([1.0, 1.0, 1.0]), 9.0))
    assert a.water_level is None
    assert np.allclose(a.limits, 1.0)

    a = waterfill_split(ClientDemands(np.array([0.0, 5.0]), 3.0))
    assert a.water_level == pytest.approx(3.0)
    assert np.allclose(a.accepted(np.array([0.0, 5.0])), [0.0, 3.0])


def test_full_utilization_both_algorithms():
    rng = rng_for(63)
    for _ in range(2000):
        c = int(rng.integers(1, 100))
        req = 100.0 * rng.random(c)
        limit = 1.5 * req.sum() * rng.random()
        d = ClientDemands(req, limit)
        for split in (proportional_split, waterfill_split):
            a = split(d)
            got = float(np.sum(a.accepted(req)))
            assert got == pytest.approx(min(limit, req.sum()), abs=1e-9 * max(1.0, limit))


def test_waterfill_is_max_min_fair():
    rng = rng_for(64)
    for _ in range(300):
        c = int(rng.integers(1, 9))
        req = np.round(100.0 * rng.random(c), 3)
        total = req.sum()
        if total <= 0:
            continue
        limit = total * (0.1 + 0.85 * rng.random())
        a = waterfill_split(ClientDemands(req, limit))
        accepted = a.accepted(req)
        fair = _progressive_fill(req, limit)
        assert np.max(np.abs(accepted - fair)) <= 1e-8


def test_monotone_in_limit():
    rng = rng_for(65)
    for _ in range(200):
        c = int(rng.integers(1, 20))
        req = 50.0 * rng.random(c)
        l1 = req.sum() * 0.8 * rng.random()
        l2 = l1 + 5.0 * rng.random()
        for split in (proportional_split, waterfill_split):
            a1 = split(ClientDemands(req, l1)).accepted(req)
            a2 = split(ClientDemands(req, l2)).accepted(req)
            assert np.all(a2 >= a1 - 1e-12)


def test_tie_order_independent():
    req = np.array([2.0, 5.0, 2.0, 5.0])
    lvl1 = water_level(ClientDemands(req, 9.0))
    lvl2 = water_level(ClientDemands(req[::-1].copy(), 9.0))
    assert lvl1 == lvl2


# --- legacy slack recurrence -----------------------------------------------------------


def test_slack_recurrence_overallocates_reference_case():
    d = ClientDemands(np.array([1.0, 2.0, 3.0, 10.0]), 8.0)
    lvl = slack_recurrence_level(d)
    assert lvl == pytest.approx(3.0)
    # the implied allocation exceeds the server limit: the recurrence is
    # not conserving, which is why the prefix scan is the default
    assert np.sum(np.minimum(d.requests, lvl)) == pytest.approx(9.0)
    a = waterfill_split(d, use_slack_recurrence=True)
    assert a.water_level == pytest.approx(3.0)


def test_validation():
    with pytest.raises(ValueError):
        ClientDemands(np.array([]), 1.0)
    with pytest.raises(ValueError):
        ClientDemands(np.array([-1.0]), 1.0)
    with pytest.raises(ValueError):
        ClientDemands(np.array([1.0]), -0.5)
