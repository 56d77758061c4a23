"""Optimal update-cycle and link-weight design.

Four problems:

* ``optimal_gamma_steady``: closed-form fastest update cycle
  ``2 / (lambda_2 + lambda_n)`` for constant demand.
* ``optimal_gamma_nonsteady``: scalar convex minimization of the
  steady-state dispersion over the stable interval ``(0, 2/lambda_n)``
  by golden-section search, polished by bisection on the analytic
  derivative.
* ``fastest_weights``: minimize the convergence factor over nonnegative
  link weights by projected subgradient descent (subgradients of tied
  extreme eigenvalues are averaged so the step stays in the
  subdifferential and symmetric supports stay symmetric).
* ``robust_weights``: minimize the dispersion over nonnegative link
  weights by projected gradient descent with backtracking; iterates that
  lose strict stability are rejected, so the objective sequence is
  non-increasing and every accepted iterate is strictly stable.

Both weight problems are convex; small instances are validated against
grid-search oracles in the test suite.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleStartError, NoInteriorOptimumError, UnstableError
from .graph import WeightedGraph, laplacian
from .measures import NoiseModel, steady_state_dispersion
from .spectral import NULL_SPACE_TOL, spectrum

log = logging.getLogger(__name__)

STRICT_STABILITY_MARGIN = 1e-9
EIG_TIE_TOL = 1e-8


@dataclass(frozen=True)
class FixedStep:
    eta: float


@dataclass(frozen=True)
class DiminishingStep:
    eta0: float = 1.0


@dataclass(frozen=True)
class BacktrackingStep:
    beta: float = 0.5
    c: float = 1e-4


StepRule = FixedStep | DiminishingStep | BacktrackingStep


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 3000
    tol: float = 1e-9
    step_rule: StepRule | None = None

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.tol <= 0:
            raise ValueError(f"tol must be > 0, got {self.tol}")


@dataclass(frozen=True)
class DesignResult:
    """Outcome of a design solve: the decision variable plus diagnostics."""

    objective: float
    iterations: int
    converged: bool
    kkt_residual: float
    gamma: float | None = None
    weights: np.ndarray | None = None

    def to_record(self) -> dict:
        rec: dict = {
            "objective": float(self.objective),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "kkt_residual": float(self.kkt_residual),
        }
        if self.gamma is not None:
            rec["gamma"] = float(self.gamma)
        if self.weights is not None:
            rec["weights"] = [float(w) for w in self.weights]
        return rec

    def to_json(self) -> str:
        return json.dumps(self.to_record())


# ---------------------------------------------------------------------------
# weight-space helpers (no graph re-validation: iterates may carry zeros)
# ---------------------------------------------------------------------------


def _assemble_laplacian(n, ei, ej, w) -> np.ndarray:
    L = np.zeros((n, n))
    for a, b, wv in zip(ei, ej, w):
        L[a, b] -= wv
        L[b, a] -= wv
        L[a, a] += wv
        L[b, b] += wv
    return L


def _phi_cr_of_weights(n, ei, ej, w, gamma) -> float:
    sd = spectrum(_assemble_laplacian(n, ei, ej, w))
    return float(np.max(np.abs(1.0 - gamma * sd.eigenvalues[1:])))


def _phi_ss_of_weights(n, ei, ej, w, gamma, C) -> float:
    """Dispersion as a plain float, +inf when not strictly stable."""
    sd = spectrum(_assemble_laplacian(n, ei, ej, w))
    lam = sd.eigenvalues[1:]
    mu = lam * (1.0 - 0.5 * gamma * lam)
    if np.any(mu <= NULL_SPACE_TOL):
        return np.inf
    V = sd.eigenvectors[:, 1:]
    q = np.einsum("ij,ij->j", V, C @ V)
    return float(np.sum(q / mu) / (2.0 * gamma))


def _weight_gradient(n, ei, ej, w, gamma, C) -> np.ndarray:
    """Analytic dispersion gradient with respect to each edge weight.

    With ``M = L - (gamma/2) L^2`` and ``B = M^+ Cov M^+``:
    ``d/dw_e = -(1/(2 gamma)) Tr[B (L_e - (gamma/2)(L_e L + L L_e))]``.
    """
    L = _assemble_laplacian(n, ei, ej, w)
    sd = spectrum(L)
    lam = sd.eigenvalues[1:]
    mu = lam * (1.0 - 0.5 * gamma * lam)
    if np.any(mu <= NULL_SPACE_TOL):
        raise UnstableError("gradient undefined: weights are not strictly stable")
    V = sd.eigenvectors[:, 1:]
    Mpinv = (V / mu) @ V.T
    B = Mpinv @ C @ Mpinv
    S = L @ B + B @ L
    grad = np.empty(len(ei))
    for e, (a, b) in enumerate(zip(ei, ej)):
        t1 = B[a, a] + B[b, b] - 2.0 * B[a, b]
        t2 = S[a, a] + S[b, b] - 2.0 * S[a, b]
        grad[e] = -(t1 - 0.5 * gamma * t2) / (2.0 * gamma)
    return grad


def _projected_kkt_residual(w: np.ndarray, grad: np.ndarray) -> float:
    return float(np.max(np.abs(w - np.maximum(w - grad, 0.0))))


# ---------------------------------------------------------------------------
# update-cycle design
# ---------------------------------------------------------------------------


def optimal_gamma_steady(g: WeightedGraph) -> DesignResult:
    """Fastest update cycle under constant demand: ``2/(lambda_2 + lambda_n)``."""
    sd = spectrum(laplacian(g))
    gamma = 2.0 / (sd.lambda2 + sd.lambda_max)
    objective = float(np.max(np.abs(1.0 - gamma * sd.eigenvalues[1:])))
    return DesignResult(
        objective=objective, iterations=0, converged=True, kkt_residual=0.0, gamma=gamma
    )


def optimal_gamma_nonsteady(
    g: WeightedGraph, noise: NoiseModel, cfg: SolverConfig | None = None
) -> DesignResult:
    """Minimize the steady-state dispersion over the update cycle.

    Requires the gamma-free covariance convention; with a gamma-scaled
    covariance the objective is monotone and no interior optimum exists.
    Raises NoInteriorOptimumError when the objective is monotone on the
    stable interval.
    """
    if noise.gamma_scaling:
        raise ValueError(
            "update-cycle optimization needs gamma_scaling=False; the scaled "
            "convention has no interior optimum"
        )
    cfg = cfg or SolverConfig(max_iters=200, tol=1e-10)
    sd = spectrum(laplacian(g))
    lam = sd.eigenvalues[1:]
    V = sd.eigenvectors[:, 1:]
    C = noise.base_covariance(g.n)
    q = np.einsum("ij,ij->j", V, C @ V)
    q = np.maximum(q, 0.0)
    if np.all(q <= 1e-14 * max(1.0, float(np.max(np.abs(C))))):
        raise NoInteriorOptimumError("noise does not excite any mismatch mode")

    hi_edge = 2.0 / float(lam[-1])

    def value(gamma: float) -> float:
        denom = gamma * lam * (2.0 - gamma * lam)
        return float(np.sum(q / denom))

    def slope(gamma: float) -> float:
        denom = gamma * lam * (2.0 - gamma * lam)
        return float(np.sum(q * 2.0 * lam * (gamma * lam - 1.0) / denom**2))

    lo = 1e-9 * hi_edge
    hi = (1.0 - 1e-9) * hi_edge
    if slope(lo) >= 0.0 or slope(hi) <= 0.0:
        raise NoInteriorOptimumError("dispersion is monotone on the stable interval")

    # golden-section bracket shrink, then derivative bisection inside the
    # final bracket to squeeze out the flat-minimum floating-point slack
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = value(c), value(d)
    iterations = 0
    while b - a > cfg.tol * hi_edge and iterations < cfg.max_iters:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = value(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = value(d)
        iterations += 1
    golden_converged = b - a <= cfg.tol * hi_edge

    # near the flat minimum the golden comparisons degenerate to roundoff
    # noise, so the bracket can drift by ~sqrt(eps); re-center it with a
    # sign bisection on the analytic slope
    pad = max(1e-6 * hi_edge, cfg.tol * hi_edge)
    blo, bhi = max(lo, a - pad), min(hi, b + pad)
    if not (slope(blo) < 0.0 < slope(bhi)):
        blo, bhi = lo, hi
    for _ in range(200):
        mid = 0.5 * (blo + bhi)
        if slope(mid) < 0.0:
            blo = mid
        else:
            bhi = mid
        iterations += 1
        if bhi - blo <= 1e-15 * hi_edge:
            break
    gamma = 0.5 * (blo + bhi)
    objective = steady_state_dispersion(g, gamma, noise)
    return DesignResult(
        objective=float(objective),
        iterations=iterations,
        converged=golden_converged,
        kkt_residual=abs(slope(gamma)),
        gamma=float(gamma),
    )


# ---------------------------------------------------------------------------
# link-weight design
# ---------------------------------------------------------------------------


def fastest_weights(
    topology: WeightedGraph, gamma: float, cfg: SolverConfig | None = None
) -> DesignResult:
    """Minimize the convergence factor over nonnegative weights on a support.

    Starts from the input weights rescaled to the best uniform multiple,
    then runs projected subgradient descent with normalized diminishing
    steps, returning the best iterate seen.  ``converged=False`` means the
    iteration budget ran out while the objective was still improving.
    """
    cfg = cfg or SolverConfig(max_iters=3000, tol=1e-9, step_rule=DiminishingStep(0.25))
    rule = cfg.step_rule or DiminishingStep(0.25)
    if isinstance(rule, BacktrackingStep):
        raise ValueError("subgradient solver supports fixed or diminishing steps only")
    ei, ej, w0 = topology.edge_arrays()
    n = topology.n

    def eig(w):
        return spectrum(_assemble_laplacian(n, ei, ej, w))

    # best uniform rescale of the starting weights (closed form)
    sd0 = eig(w0)
    if sd0.lambda2 > NULL_SPACE_TOL:
        w = w0 * (2.0 / (gamma * (sd0.lambda2 + sd0.lambda_max)))
    else:
        w = w0.copy()
    step_scale = max(float(np.linalg.norm(w)), 1e-9)

    def subgradient(sd) -> tuple[float, np.ndarray]:
        lam = sd.eigenvalues[1:]
        vals = np.abs(1.0 - gamma * lam)
        fval = float(np.max(vals))
        tied = np.nonzero(vals >= fval - EIG_TIE_TOL)[0]
        gsub = np.zeros(len(ei))
        for idx in tied:
            vec = sd.eigenvectors[:, idx + 1]
            sign = np.sign(gamma * lam[idx] - 1.0)
            gsub += sign * gamma * (vec[ei] - vec[ej]) ** 2
        return fval, gsub / len(tied)

    best_w = w.copy()
    sd = eig(w)
    best_f, gsub = subgradient(sd)
    best_iter = 0
    iterations = 0
    patience = max(200, cfg.max_iters // 4)
    for k in range(1, cfg.max_iters + 1):
        iterations = k
        if best_f <= cfg.tol:
            break
        if k - best_iter > patience:
            break
        norm = float(np.linalg.norm(gsub))
        if norm <= 1e-15:
            break
        if isinstance(rule, FixedStep):
            eta = rule.eta
        else:
            eta = rule.eta0 / np.sqrt(k)
        w = np.maximum(w - eta * step_scale * (gsub / norm), 0.0)
        sd = eig(w)
        fval, gsub = subgradient(sd)
        if fval < best_f - 1e-15:
            best_f, best_w, best_iter = fval, w.copy(), k
    _, gbest = subgradient(eig(best_w))
    converged = best_f <= cfg.tol or iterations - best_iter > patience
    return DesignResult(
        objective=float(_phi_cr_of_weights(n, ei, ej, best_w, gamma)),
        iterations=iterations,
        converged=bool(converged),
        kkt_residual=_projected_kkt_residual(best_w, gbest),
        weights=best_w,
    )


def robust_weights(
    topology: WeightedGraph,
    gamma: float,
    noise: NoiseModel,
    cfg: SolverConfig | None = None,
) -> DesignResult:
    """Minimize the steady-state dispersion over nonnegative weights.

    Projected gradient descent with backtracking; trial points that are not
    strictly stable (convergence factor above ``1 - 1e-9``) are rejected, so
    iterates never leave the stable region and the objective never increases.
    Raises InfeasibleStartError when no uniform rescale of the input weights
    is strictly stable (disconnected support).
    """
    cfg = cfg or SolverConfig(max_iters=2000, tol=1e-8, step_rule=BacktrackingStep())
    rule = cfg.step_rule or BacktrackingStep()
    beta, armijo_c = (rule.beta, rule.c) if isinstance(rule, BacktrackingStep) else (0.5, 1e-4)
    ei, ej, w0 = topology.edge_arrays()
    n = topology.n
    C = noise.covariance(gamma, n)

    sd0 = spectrum(_assemble_laplacian(n, ei, ej, w0))
    if sd0.lambda2 <= NULL_SPACE_TOL * max(1.0, sd0.lambda_max):
        raise InfeasibleStartError("support has no spanning positive-weight subgraph")
    w = w0 / (gamma * sd0.lambda_max)

    def phi_cr(wv):
        return _phi_cr_of_weights(n, ei, ej, wv, gamma)

    def phi_ss(wv):
        return _phi_ss_of_weights(n, ei, ej, wv, gamma, C)

    f = phi_ss(w)
    if not np.isfinite(f) or phi_cr(w) > 1.0 - STRICT_STABILITY_MARGIN:
        raise InfeasibleStartError("no strictly stable uniform rescale exists")

    if isinstance(rule, FixedStep):
        trial0 = rule.eta
    elif isinstance(rule, DiminishingStep):
        trial0 = rule.eta0
    else:
        trial0 = 1.0
    grad = _weight_gradient(n, ei, ej, w, gamma, C)
    kkt = _projected_kkt_residual(w, grad)
    iterations = 0
    converged = kkt <= cfg.tol
    t = trial0
    for k in range(1, cfg.max_iters + 1):
        iterations = k
        if isinstance(rule, DiminishingStep):
            t = trial0 / np.sqrt(k)
        accepted = False
        for _ in range(60):
            wc = np.maximum(w - t * grad, 0.0)
            move = wc - w
            if float(np.max(np.abs(move))) <= 1e-18:
                break
            if phi_cr(wc) <= 1.0 - STRICT_STABILITY_MARGIN:
                fc = phi_ss(wc)
                if np.isfinite(fc) and fc <= f - (armijo_c / t) * float(move @ move):
                    accepted = True
                    break
            t *= beta
        if not accepted:
            break
        w, f = wc, fc
        grad = _weight_gradient(n, ei, ej, w, gamma, C)
        kkt = _projected_kkt_residual(w, grad)
        if isinstance(rule, BacktrackingStep):
            t = min(t * 2.0, 1e12)
        if kkt <= cfg.tol:
            converged = True
            break
    return DesignResult(
        objective=float(phi_ss(w)),
        iterations=iterations,
        converged=bool(converged or kkt <= cfg.tol),
        kkt_residual=float(kkt),
        weights=w,
    )


def dispersion_weight_gradient(
    g: WeightedGraph, gamma: float, noise: NoiseModel
) -> np.ndarray:
    """Analytic gradient of the dispersion with respect to edge weights.

    Entries follow ``g.edges`` order.  Raises UnstableError off the strictly
    stable region.
    """
    ei, ej, w = g.edge_arrays()
    C = noise.covariance(gamma, g.n)
    return _weight_gradient(g.n, ei, ej, w, gamma, C)
