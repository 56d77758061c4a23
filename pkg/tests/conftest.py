"""Shared test helpers: seeded random graphs, trees, and noise."""

import heapq

import numpy as np
import pytest

from dst.dynamics import make_rng
from dst.graph import build_graph
from dst.spectral import graph_spectrum


def rng_for(seed):
    return make_rng(seed)


def random_tree_edges(rng, n):
    """Uniform random labeled tree (Pruefer decode)."""
    if n == 2:
        return [(0, 1)]
    seq = rng.integers(0, n, size=n - 2)
    degree = np.ones(n, dtype=np.int64)
    for s in seq:
        degree[s] += 1
    leaves = [i for i in range(n) if degree[i] == 1]
    heapq.heapify(leaves)
    edges = []
    for s in seq:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, int(s)))
        degree[s] -= 1
        if degree[s] == 1:
            heapq.heappush(leaves, int(s))
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((u, v))
    return edges


def random_connected_graph(rng, n, extra_edges=None, w_lo=0.05, w_hi=2.0):
    """Random tree plus extra edges, weights uniform in (w_lo, w_hi]."""
    edges = {tuple(sorted(e)) for e in random_tree_edges(rng, n)}
    if extra_edges is None:
        extra_edges = int(rng.integers(0, n))
    pool = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in edges]
    if pool and extra_edges:
        take = rng.permutation(len(pool))[: min(extra_edges, len(pool))]
        edges.update(pool[k] for k in take)
    weighted = [(i, j, float(w_lo + (w_hi - w_lo) * rng.random())) for i, j in sorted(edges)]
    return build_graph(n, weighted)


def stable_gamma(rng, g, lo=0.5, hi=1.05, max_factor=0.98):
    """Random update cycle with a usefully bounded convergence factor."""
    sd = graph_spectrum(g)
    for _ in range(64):
        gamma = float((lo + (hi - lo) * rng.random()) * 2.0 / (sd.lambda2 + sd.lambda_max))
        cf = float(np.max(np.abs(1.0 - gamma * sd.eigenvalues[1:])))
        if cf <= max_factor:
            return gamma
    return 2.0 / (sd.lambda2 + sd.lambda_max)


def random_psd(rng, n, scale=1.0):
    A = rng.standard_normal((n, n))
    return scale * (A @ A.T) / n


def random_scenario(rng, case, horizon=1000, n_lo=3, n_hi=10):
    """Randomized but domain-safe scenario for the given nodal-measure case."""
    from dst.dynamics import DstScenario, LoadModel

    n = int(rng.integers(n_lo, n_hi + 1))
    g = random_connected_graph(rng, n)
    sd = graph_spectrum(g)
    lam_max = sd.lambda_max
    r0 = 20.0 + 40.0 * rng.random(n)
    min_r = float(np.min(r0))

    if case == "I":
        gamma = stable_gamma(rng, g)
        if rng.random() < 0.5:
            load = LoadModel.steady(r0)
        else:
            load = LoadModel.random_walk(r0, 0.2 + 0.8 * rng.random(n), clamp_min=0.0)
        x0 = r0 * (0.3 + 0.6 * rng.random(n))
    elif case == "II":
        gamma = float((0.3 + 0.7 * rng.random()) * min_r / lam_max)
        if rng.random() < 0.5:
            load = LoadModel.steady(r0)
        else:
            load = LoadModel.random_walk(r0, 0.2 * rng.random(n), clamp_min=0.8 * min_r)
        x0 = r0 * (0.3 + 0.6 * rng.random(n))
    elif case == "III":
        x0 = r0 * (0.9 + 0.2 * rng.random(n))
        gamma = float((0.2 + 0.6 * rng.random()) * np.min(x0) / lam_max)
        if rng.random() < 0.5:
            load = LoadModel.steady(r0)
        else:
            load = LoadModel.random_walk(r0, 0.08 * rng.random(n), clamp_min=0.8 * min_r)
    else:
        gamma = float((0.2 + 1.3 * rng.random()) / lam_max)
        if rng.random() < 0.5:
            load = LoadModel.steady(r0)
        else:
            load = LoadModel.random_walk(r0, 0.3 * rng.random(n), clamp_min=0.6 * min_r)
        x0 = r0 * rng.random(n)
    return DstScenario(
        graph=g,
        gamma=gamma,
        case=case,
        initial_limits=x0,
        load=load,
        horizon=horizon,
        seed=int(rng.integers(0, 2**63 - 1)),
    )


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels():
    # compile the jit kernels once so per-test timings stay honest
    from dst import kernels

    kernels.warm_up()
