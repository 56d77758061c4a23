"""Laplacian spectra, pseudoinverses, and effective resistance.

All eigen-decompositions go through the cyclic Jacobi kernel (dense, desk
scale n <= ~200).  The Moore-Penrose pseudoinverse of a connected-graph
Laplacian uses the rank-one ones-shift identity
``(L + (1/n) 1 1^T)^{-1} - (1/n) 1 1^T``; pseudoinverses of the shifted
matrix ``L - (gamma/2) L^2`` are assembled spectrally because the shift
identity only applies to the Laplacian itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import NoConvergenceError, SameNodeError, SingularError, UnstableError
from .graph import WeightedGraph, laplacian

JACOBI_TOL_FACTOR = 1e-12
JACOBI_MAX_SWEEPS = 100

# eigenvalues of the shifted matrix at or below this are treated as its
# null space / instability
NULL_SPACE_TOL = 1e-10


@dataclass(frozen=True)
class SpectralData:
    """Ascending eigenvalues with matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    @property
    def lambda2(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])


def spectrum(L: np.ndarray, max_sweeps: int = JACOBI_MAX_SWEEPS) -> SpectralData:
    """Full symmetric eigendecomposition of L, eigenvalues ascending."""
    L = np.asarray(L, dtype=np.float64)
    fro = float(np.sqrt(np.sum(L * L)))
    off_tol = JACOBI_TOL_FACTOR * fro
    vals, vecs, converged = kernels.jacobi_eigh(L, off_tol, max_sweeps)
    if not converged:
        raise NoConvergenceError(
            f"Jacobi sweeps exhausted ({max_sweeps}) before reaching tolerance"
        )
    order = np.argsort(vals, kind="stable")
    return SpectralData(eigenvalues=vals[order].copy(), eigenvectors=vecs[:, order].copy())


def graph_spectrum(g: WeightedGraph) -> SpectralData:
    return spectrum(laplacian(g))


def pseudoinverse(L: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a connected-graph Laplacian.

    Uses the ones-shift identity; raises SingularError when the second
    smallest eigenvalue is not safely positive.
    """
    L = np.asarray(L, dtype=np.float64)
    n = L.shape[0]
    sd = spectrum(L)
    scale = max(1.0, sd.lambda_max)
    if sd.lambda2 <= NULL_SPACE_TOL * scale:
        raise SingularError(
            f"second eigenvalue {sd.lambda2:.3e} is not positive; graph disconnected?"
        )
    J = np.full((n, n), 1.0 / n)
    return np.linalg.inv(L + J) - J


def shifted_pseudoinverse(sd: SpectralData, gamma: float) -> np.ndarray:
    """Spectral pseudoinverse of ``L - (gamma/2) L^2``.

    The shifted eigenvalues are ``mu_i = lambda_i (1 - gamma lambda_i / 2)``;
    any ``mu_i <= 1e-10`` for i >= 2 means the noisy update dynamics are not
    stable and UnstableError is raised.
    """
    lam = sd.eigenvalues[1:]
    mu = lam * (1.0 - 0.5 * gamma * lam)
    if np.any(mu <= NULL_SPACE_TOL):
        raise UnstableError(
            "shifted Laplacian has a nonpositive mode; dynamics unstable at this gamma"
        )
    V = sd.eigenvectors[:, 1:]
    return (V / mu) @ V.T


def effective_resistance(g: WeightedGraph, i: int, j: int) -> float:
    """Electrical distance between two nodes via the Laplacian pseudoinverse."""
    if i == j:
        raise SameNodeError(f"effective resistance needs two distinct nodes, got {i}")
    lp = pseudoinverse(laplacian(g))
    return float(lp[i, i] + lp[j, j] - lp[i, j] - lp[j, i])


def total_effective_resistance(g: WeightedGraph) -> float:
    """Sum of effective resistances over all node pairs."""
    L = laplacian(g)
    lp = pseudoinverse(L)
    d = np.diag(lp)
    pair_matrix = d[:, None] + d[None, :] - lp - lp.T
    total = float(np.sum(pair_matrix) / 2.0)
    # internal consistency: equals n * sum of reciprocal nonzero eigenvalues
    sd = spectrum(L)
    spectral_total = g.n * float(np.sum(1.0 / sd.eigenvalues[1:]))
    assert abs(total - spectral_total) <= 1e-8 * max(1.0, abs(spectral_total))
    return total
