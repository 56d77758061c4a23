import json

import numpy as np
import pytest

from dst.dynamics import DstScenario, LoadModel, simulate
from dst.errors import NumericalBlowupError, UnstableError
from dst.graph import complete_graph, laplacian, path_graph, star_graph
from dst.measures import (
    INFINITE,
    NoiseModel,
    convergence_factor,
    dispersion_centrality,
    iid_dispersion,
    is_convergent,
    is_infinite,
    lyapunov_dispersion,
    lyapunov_gramian,
    measure_report,
    resistance_limit,
    steady_state_dispersion,
    total_mismatch_loss,
)
from dst.spectral import graph_spectrum

from conftest import random_connected_graph, random_psd, rng_for, stable_gamma


# --- convergence factor -----------------------------------------------------


def test_convergence_factor_examples():
    assert convergence_factor(complete_graph(5, 0.2), 1.0) == pytest.approx(0.0, abs=1e-12)
    assert convergence_factor(path_graph(2), 0.5) == pytest.approx(0.0, abs=1e-12)
    assert convergence_factor(path_graph(3), 0.1) == pytest.approx(0.9, abs=1e-12)


def test_is_convergent_examples():
    assert is_convergent(path_graph(2), 0.5)
    assert not is_convergent(path_graph(2), 1.0)  # marginal boundary is excluded
    assert not is_convergent(path_graph(3), 0.7)  # 0.7 * 3 - 1 = 1.1


def test_marginal_case_oscillates():
    # at the boundary the mismatch swaps forever instead of decaying
    A = np.eye(2) - 1.0 * laplacian(path_graph(2))
    p = np.array([1.0, -1.0])
    p2 = A @ (A @ p)
    assert np.allclose(p2, p)


# --- steady-state dispersion -------------------------------------------------


def test_dispersion_closed_p2():
    val = steady_state_dispersion(path_graph(2), 0.5, NoiseModel.iid(1.0))
    assert val == pytest.approx(0.5, abs=1e-12)


def test_dispersion_infinite_branch():
    assert is_infinite(steady_state_dispersion(path_graph(3), 0.7, NoiseModel.iid(1.0)))
    assert is_infinite(iid_dispersion(path_graph(2), 1.0, 1.0))
    assert repr(INFINITE) == "INFINITE"


def test_iid_dispersion_values():
    assert iid_dispersion(path_graph(2), 0.5, 1.0) == pytest.approx(0.5, abs=1e-12)
    assert iid_dispersion(complete_graph(5), 0.1, 1.0) == pytest.approx(4 / 7.5, rel=1e-12)


def test_iid_matches_closed_form():
    rng = rng_for(31)
    for _ in range(20):
        g = random_connected_graph(rng, int(rng.integers(3, 13)))
        gamma = stable_gamma(rng, g)
        sigma = 0.3 + rng.random()
        a = iid_dispersion(g, gamma, sigma)
        b = steady_state_dispersion(g, gamma, NoiseModel.iid(sigma, gamma_scaling=True))
        assert a == pytest.approx(b, rel=1e-10)


def test_gamma_scaling_conventions_differ_by_gamma():
    g = random_connected_graph(rng_for(32), 6)
    gamma = stable_gamma(rng_for(33), g)
    C = random_psd(rng_for(34), 6)
    scaled = steady_state_dispersion(g, gamma, NoiseModel.general(C, gamma_scaling=True))
    free = steady_state_dispersion(g, gamma, NoiseModel.general(C, gamma_scaling=False))
    assert scaled == pytest.approx(gamma * free, rel=1e-12)


def test_total_mismatch_loss_is_alias():
    assert total_mismatch_loss is steady_state_dispersion


def test_noise_model_validation():
    with pytest.raises(ValueError):
        NoiseModel.iid(-1.0)
    with pytest.raises(ValueError):
        NoiseModel.general(np.array([[1.0, 0.5], [0.4, 1.0]]))  # not symmetric
    with pytest.raises(ValueError):
        NoiseModel.general(np.array([[1.0, 2.0], [2.0, 1.0]]))  # not PSD


# --- Lyapunov oracle ----------------------------------------------------------


def test_lyapunov_p2():
    val = lyapunov_dispersion(path_graph(2), 0.5, NoiseModel.iid(1.0))
    assert val == pytest.approx(0.5, abs=1e-10)


def test_lyapunov_matches_closed_random():
    rng = rng_for(35)
    for _ in range(20):
        n = int(rng.integers(3, 9))
        g = random_connected_graph(rng, n)
        gamma = stable_gamma(rng, g)
        noise = NoiseModel.general(random_psd(rng, n), gamma_scaling=False)
        closed = steady_state_dispersion(g, gamma, noise)
        oracle = lyapunov_dispersion(g, gamma, noise)
        assert abs(closed - oracle) <= 1e-8 * max(1.0, abs(closed))


def test_lyapunov_gramian_kills_consensus_direction():
    g = random_connected_graph(rng_for(36), 6)
    Q = lyapunov_gramian(g, stable_gamma(rng_for(37), g))
    assert np.max(np.abs(Q @ np.ones(6))) <= 1e-9


def test_lyapunov_unstable_rejected():
    with pytest.raises(UnstableError):
        lyapunov_dispersion(path_graph(2), 1.0, NoiseModel.iid(1.0))


# --- centrality ----------------------------------------------------------------


def test_centrality_p2():
    c = dispersion_centrality(path_graph(2), 0.5)
    assert np.allclose(c, [0.5, 0.5], atol=1e-12)


def test_centrality_vertex_transitive_equal():
    c = dispersion_centrality(complete_graph(6), 0.05)
    assert np.max(c) - np.min(c) <= 1e-10


def test_centrality_star_hub_least_critical():
    c = dispersion_centrality(star_graph(5), 0.1)
    # brute-force pseudoinverse of the shifted matrix
    L = laplacian(star_graph(5))
    M = L - 0.05 * (L @ L)
    ref = np.diag(np.linalg.pinv(M))
    assert np.allclose(c, ref, atol=1e-9)
    assert c[0] < np.min(c[1:])
    assert np.all(c > 0)


def test_centrality_decomposes_dispersion():
    rng = rng_for(38)
    g = random_connected_graph(rng, 7)
    gamma = stable_gamma(rng, g)
    sigmas = 0.2 + rng.random(7)
    c = dispersion_centrality(g, gamma)
    direct = steady_state_dispersion(
        g, gamma, NoiseModel.independent(sigmas, gamma_scaling=True)
    )
    assert 0.5 * float(np.sum(c * sigmas**2)) == pytest.approx(direct, rel=1e-10)


def test_centrality_unstable_rejected():
    with pytest.raises(UnstableError):
        dispersion_centrality(path_graph(2), 1.0)


# --- resistance limit -----------------------------------------------------------


def test_resistance_limit_values():
    assert resistance_limit(path_graph(2), 1.0) == pytest.approx(0.25, abs=1e-12)
    assert resistance_limit(complete_graph(3), 1.0) == pytest.approx(1 / 3, rel=1e-10)
    assert resistance_limit(complete_graph(3), 0.0) == 0.0


def test_small_gamma_limit():
    rng = rng_for(39)
    for _ in range(10):
        g = random_connected_graph(rng, int(rng.integers(3, 15)))
        limit = resistance_limit(g, 1.0)
        val = iid_dispersion(g, 1e-6, 1.0)
        assert abs(val - limit) / limit <= 1e-3


def test_monotone_in_weights_at_small_gamma():
    rng = rng_for(40)
    for _ in range(15):
        n = int(rng.integers(4, 10))
        g = random_connected_graph(rng, n)
        base = iid_dispersion(g, 1e-4, 1.0)
        w = g.weights()
        k = int(rng.integers(0, g.m))
        w2 = w.copy()
        w2[k] += 0.5
        assert iid_dispersion(g.with_weights(w2), 1e-4, 1.0) <= base + 1e-12
        # adding a brand-new edge helps too
        present = {(i, j) for i, j, _ in g.edges}
        missing = [(i, j) for i in range(n) for j in range(i + 1, n) if (i, j) not in present]
        if missing:
            i, j = missing[int(rng.integers(0, len(missing)))]
            from dst.graph import build_graph

            g3 = build_graph(n, list(g.edges) + [(i, j, 1.0)])
            assert iid_dispersion(g3, 1e-4, 1.0) <= base + 1e-12


# --- topology ordering -----------------------------------------------------------


def test_topology_ordering_small_gamma():
    n = 8
    gamma = 1e-3 / n
    cf_path = convergence_factor(path_graph(n), gamma)
    cf_star = convergence_factor(star_graph(n), gamma)
    cf_complete = convergence_factor(complete_graph(n), gamma)
    assert cf_complete < cf_star < cf_path


def test_star_best_path_worst_among_trees():
    from dst.graph import build_graph

    from conftest import random_tree_edges

    n = 8
    gamma = 1e-3 / n
    cf_star = convergence_factor(star_graph(n), gamma)
    cf_path = convergence_factor(path_graph(n), gamma)
    rng = rng_for(41)
    for _ in range(20):
        tree = build_graph(n, [(i, j, 1.0) for i, j in random_tree_edges(rng, n)])
        cf = convergence_factor(tree, gamma)
        assert cf_star <= cf + 1e-12
        assert cf <= cf_path + 1e-12


# --- convergence criterion vs simulation -------------------------------------


def _consensus_scenario(g, gamma, p0, horizon):
    base = 10.0 * np.ones(g.n)
    return DstScenario(
        graph=g,
        gamma=gamma,
        case="I",
        initial_limits=base - p0,
        load=LoadModel.steady(base),
        horizon=horizon,
        seed=0,
    )


def test_convergence_iff_criterion_smoke():
    rng = rng_for(42)
    kept = 0
    while kept < 12:
        g = random_connected_graph(rng, int(rng.integers(3, 10)))
        sd = graph_spectrum(g)
        gamma = float((0.05 + 1.55 * rng.random()) * 2.0 / sd.lambda_max)
        cf = convergence_factor(g, gamma)
        if abs(cf - 1.0) < 1e-3:
            continue
        kept += 1
        signs = rng.choice([-1.0, 1.0], size=g.n - 1)
        coeffs = signs * (0.1 + 0.9 * rng.random(g.n - 1))
        p0 = sd.eigenvectors[:, 1:] @ coeffs
        p0 *= 5e-4 / np.linalg.norm(p0)
        try:
            traj = simulate(_consensus_scenario(g, gamma, p0, 10_000))
            spread = traj.final_spread()
        except NumericalBlowupError:
            spread = np.inf
        assert (spread <= 1e-6) == is_convergent(g, gamma), (
            f"cf={cf} spread={spread}"
        )


def test_spread_contracts_at_the_spectral_rate():
    rng = rng_for(43)
    g = random_connected_graph(rng, 7)
    gamma = stable_gamma(rng, g)
    cf = convergence_factor(g, gamma)
    p0 = rng.standard_normal(7)
    p0 -= p0.mean()
    traj = simulate(_consensus_scenario(g, gamma, p0 / np.linalg.norm(p0), 60))
    p = traj.p
    for k in range(40):
        a = np.linalg.norm(p[k + 1] - p[k + 1].mean())
        b = np.linalg.norm(p[k] - p[k].mean())
        assert a <= (cf + 1e-9) * b + 1e-15


# --- report ----------------------------------------------------------------------


def test_measure_report_serialization():
    rep = measure_report(complete_graph(5, 0.2), 1.0, NoiseModel.iid(1.0))
    rec = json.loads(rep.to_json())
    assert rec["phi_cr"] == pytest.approx(0.0, abs=1e-12)
    assert rec["stable"] is True
    assert isinstance(rec["phi_ss"], float)
    assert len(rec["centrality"]) == 5
    assert rec["resistance_limit"] == pytest.approx(resistance_limit(complete_graph(5, 0.2), 1.0))


def test_measure_report_unstable():
    rep = measure_report(path_graph(2), 1.0, NoiseModel.iid(1.0))
    rec = rep.to_record()
    assert rec["stable"] is False
    assert rec["phi_ss"] == "inf"
    assert rec["centrality"] is None
