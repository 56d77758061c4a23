"""Closed-form network performance measures for throttler graphs.

Two scalar measures drive everything downstream:

* the convergence factor ``max_{i>=2} |1 - gamma lambda_i|`` (strictly
  below 1 iff the noiseless mismatch dynamics reach consensus), and
* the steady-state dispersion, the stationary expected spread of the
  nodal measures under random-walk demand:
  ``(1/(2 gamma)) Tr[(L - (gamma/2) L^2)^+ Cov(v)]``.

The dispersion has an independent cross-check (`lyapunov_dispersion`)
that solves the discrete Lyapunov equation by fixed-point iteration
instead of going through the spectral formula.

Demand-increment covariance comes in two conventions that differ by a
factor of gamma; `NoiseModel.gamma_scaling` selects between them.  With
``gamma_scaling=True`` the effective covariance is ``gamma * base`` (the
per-node variance decomposition convention); with ``False`` the base
covariance is used as-is (the convention under which the dispersion has
an interior optimum in gamma).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergenceError, UnstableError
from .graph import WeightedGraph, laplacian
from .spectral import (
    NULL_SPACE_TOL,
    SpectralData,
    graph_spectrum,
    shifted_pseudoinverse,
    spectrum,
    total_effective_resistance,
)


class Infinite:
    """Tagged infinite-dispersion value.

    Kept distinct from ``float('inf')`` so reports serialize unambiguously
    (the wire value is the string ``"inf"``).
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITE"


INFINITE = Infinite()


def is_infinite(value) -> bool:
    return value is INFINITE


@dataclass(frozen=True)
class NoiseModel:
    """Zero-mean demand-increment noise: iid, independent, or general covariance."""

    kind: str
    gamma_scaling: bool
    sigma: float | None = None
    sigmas: np.ndarray | None = None
    cov: np.ndarray | None = None

    @classmethod
    def iid(cls, sigma: float, gamma_scaling: bool = True) -> "NoiseModel":
        sigma = float(sigma)
        if sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        return cls(kind="iid", gamma_scaling=gamma_scaling, sigma=sigma)

    @classmethod
    def independent(cls, sigmas, gamma_scaling: bool = True) -> "NoiseModel":
        sigmas = np.asarray(sigmas, dtype=np.float64)
        if np.any(sigmas < 0):
            raise ValueError("per-node sigmas must be >= 0")
        return cls(kind="independent", gamma_scaling=gamma_scaling, sigmas=sigmas)

    @classmethod
    def general(cls, cov, gamma_scaling: bool = False) -> "NoiseModel":
        cov = np.asarray(cov, dtype=np.float64)
        scale = max(1.0, float(np.max(np.abs(cov))))
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise ValueError(f"covariance must be square, got shape {cov.shape}")
        if np.max(np.abs(cov - cov.T)) > 1e-10 * scale:
            raise ValueError("covariance must be symmetric")
        min_eig = float(spectrum(cov).eigenvalues[0])
        if min_eig < -1e-10 * scale:
            raise ValueError(f"covariance not PSD (min eigenvalue {min_eig:.3e})")
        return cls(kind="general", gamma_scaling=gamma_scaling, cov=cov)

    def base_covariance(self, n: int) -> np.ndarray:
        if self.kind == "iid":
            return self.sigma**2 * np.eye(n)
        if self.kind == "independent":
            if self.sigmas.shape != (n,):
                raise ValueError(f"expected {n} sigmas, got {self.sigmas.shape}")
            return np.diag(self.sigmas**2)
        if self.cov.shape != (n, n):
            raise ValueError(f"expected {n}x{n} covariance, got {self.cov.shape}")
        return self.cov.copy()

    def covariance(self, gamma: float, n: int) -> np.ndarray:
        """Effective Cov(v) under this model's convention."""
        base = self.base_covariance(n)
        return gamma * base if self.gamma_scaling else base


def convergence_factor(g: WeightedGraph, gamma: float) -> float:
    """Largest modulus of the non-consensus modes of the mismatch update."""
    sd = graph_spectrum(g)
    return _convergence_factor_from_eigs(sd.eigenvalues, gamma)


def _convergence_factor_from_eigs(eigenvalues: np.ndarray, gamma: float) -> float:
    return float(np.max(np.abs(1.0 - gamma * eigenvalues[1:])))


def is_convergent(g: WeightedGraph, gamma: float) -> bool:
    """True iff the noiseless mismatch dynamics reach consensus."""
    return convergence_factor(g, gamma) < 1.0


def _stable_shifted_eigs(eigenvalues: np.ndarray, gamma: float) -> np.ndarray | None:
    """mu_i = lambda_i (1 - gamma lambda_i / 2) for i >= 2, or None if unstable."""
    lam = eigenvalues[1:]
    mu = lam * (1.0 - 0.5 * gamma * lam)
    if np.any(mu <= NULL_SPACE_TOL):
        return None
    return mu


def steady_state_dispersion(g: WeightedGraph, gamma: float, noise: NoiseModel):
    """Stationary dispersion of the nodal measures, or INFINITE when unstable.

    Computed spectrally: with ``mu_i`` the nonzero eigenvalues of
    ``L - (gamma/2) L^2`` and ``q_i = v_i^T Cov(v) v_i``, the value is
    ``(1/(2 gamma)) sum_i q_i / mu_i``.
    """
    sd = graph_spectrum(g)
    mu = _stable_shifted_eigs(sd.eigenvalues, gamma)
    if mu is None:
        return INFINITE
    C = noise.covariance(gamma, g.n)
    V = sd.eigenvectors[:, 1:]
    q = np.einsum("ij,ij->j", V, C @ V)
    return float(np.sum(q / mu) / (2.0 * gamma))


# The expected cumulative mismatch loss of a one-shot random demand draw
# equals the stationary dispersion; expose the alias rather than a second
# computation.
total_mismatch_loss = steady_state_dispersion


def iid_dispersion(g: WeightedGraph, gamma: float, sigma: float):
    """Dispersion under iid per-step demand increments of variance gamma*sigma^2.

    Spectral form ``sum_{i>=2} sigma^2 / (lambda_i (2 - gamma lambda_i))``;
    INFINITE unless every nonzero eigenvalue lies in (0, 2/gamma).
    """
    sd = graph_spectrum(g)
    lam = sd.eigenvalues[1:]
    denom = lam * (2.0 - gamma * lam)
    if np.any(denom <= 2.0 * NULL_SPACE_TOL):
        return INFINITE
    return float(sigma**2 * np.sum(1.0 / denom))


def lyapunov_gramian(g: WeightedGraph, gamma: float, tol: float = 1e-12,
                     max_iters: int = 1_000_000) -> np.ndarray:
    """Controllability-style Gramian of the mismatch dynamics.

    Fixed-point iteration ``Q <- A Q A^T + (I - J/n)`` with ``A = I - gamma L``,
    started from zero and projected onto the complement of the consensus
    direction each step, until the update max-norm drops below ``tol``.
    Deliberately independent of the spectral dispersion formula.
    """
    cf = convergence_factor(g, gamma)
    if cf >= 1.0:
        raise UnstableError(f"convergence factor {cf:.6f} >= 1; Gramian diverges")
    n = g.n
    A = np.eye(n) - gamma * laplacian(g)
    Pi = np.eye(n) - np.full((n, n), 1.0 / n)
    Q = np.zeros((n, n))
    for _ in range(max_iters):
        Qn = Pi @ (A @ Q @ A.T + Pi) @ Pi
        delta = float(np.max(np.abs(Qn - Q)))
        Q = Qn
        if delta <= tol:
            return Q
    raise NoConvergenceError("Gramian fixed-point iteration did not settle")


def lyapunov_dispersion(g: WeightedGraph, gamma: float, noise: NoiseModel) -> float:
    """Dispersion via the Lyapunov fixed point: ``Tr[Q Cov(v)]``."""
    Q = lyapunov_gramian(g, gamma)
    C = noise.covariance(gamma, g.n)
    return float(np.trace(Q @ C))


def dispersion_centrality(g: WeightedGraph, gamma: float) -> np.ndarray:
    """Per-node dispersion impact: diagonal of the shifted pseudoinverse.

    Entry i weights node i's demand variance in the independent-noise
    decomposition of the dispersion; larger means the node's noise hurts
    the network more.
    """
    sd = graph_spectrum(g)
    mu = _stable_shifted_eigs(sd.eigenvalues, gamma)
    if mu is None:
        raise UnstableError("dynamics unstable at this gamma; centrality undefined")
    return np.asarray(shifted_pseudoinverse(sd, gamma)).diagonal().copy()


def resistance_limit(g: WeightedGraph, sigma: float) -> float:
    """Small-update-cycle limit of the iid dispersion.

    Equals ``sigma^2 / (2n)`` times the total effective resistance.
    """
    return sigma**2 / (2.0 * g.n) * total_effective_resistance(g)


@dataclass(frozen=True)
class MeasureReport:
    """Bundle of the scalar measures for one (graph, gamma, noise) triple."""

    phi_cr: float
    phi_ss: float | Infinite
    stable: bool
    centrality: np.ndarray | None
    resistance_limit: float

    def to_record(self) -> dict:
        return {
            "phi_cr": self.phi_cr,
            "phi_ss": "inf" if is_infinite(self.phi_ss) else self.phi_ss,
            "stable": self.stable,
            "centrality": None if self.centrality is None else list(self.centrality),
            "resistance_limit": self.resistance_limit,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_record())


def measure_report(g: WeightedGraph, gamma: float, noise: NoiseModel) -> MeasureReport:
    """Evaluate all measures; centrality is None when the dynamics diverge.

    The resistance limit is reported for the iid-equivalent noise floor
    ``sigma^2 = tr(base covariance) / n``.
    """
    cf = convergence_factor(g, gamma)
    stable = cf < 1.0
    phi_ss = steady_state_dispersion(g, gamma, noise)
    centrality = dispersion_centrality(g, gamma) if not is_infinite(phi_ss) else None
    sigma_eq = float(np.sqrt(np.trace(noise.base_covariance(g.n)) / g.n))
    return MeasureReport(
        phi_cr=cf,
        phi_ss=phi_ss,
        stable=stable,
        centrality=centrality,
        resistance_limit=resistance_limit(g, sigma_eq),
    )
