"""Hot numerical kernels: numba-jitted fast path with a pure-numpy fallback.

The numba path is used whenever numba imports successfully, unless the
environment variable ``DST_NUMBA`` is set to ``0``/``false``/``off`` (read
once at import time).  Both paths implement the same arithmetic; results
agree to floating-point roundoff, and each path is bit-reproducible on its
own.  ``benchmarks/bench_backends.py`` times the two side by side.

Kernels here are deliberately free of package types: they take plain
float64/int64 arrays so they can be jitted and benchmarked in isolation.
"""

from __future__ import annotations

import os

import numpy as np

BLOWUP_LIMIT = 1e15

# run_* status codes
STATUS_OK = 0
STATUS_DOMAIN = 1
STATUS_BLOWUP = 2


def _env_wants_numba() -> bool:
    return os.environ.get("DST_NUMBA", "").strip().lower() not in ("0", "false", "off", "no")


try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba installed
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and _env_wants_numba()


def backend_name() -> str:
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# Cyclic Jacobi eigensolver for real symmetric matrices.
#
# Convergence: off-diagonal Frobenius mass <= off_tol (caller scales it by
# the input norm).  Sweeps are row-cyclic so both implementations visit
# rotations in the same order.
# ---------------------------------------------------------------------------


def _jacobi_numba_impl(a, off_tol, max_sweeps):
    n = a.shape[0]
    v = np.eye(n)
    converged = False
    for _sweep in range(max_sweeps):
        off2 = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off2 += a[i, j] * a[i, j]
        if np.sqrt(2.0 * off2) <= off_tol:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for i in range(n):
                    if i != p and i != q:
                        aip = a[i, p]
                        aiq = a[i, q]
                        a[i, p] = aip * c - aiq * s
                        a[p, i] = a[i, p]
                        a[i, q] = aiq * c + aip * s
                        a[q, i] = a[i, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for i in range(n):
                    vip = v[i, p]
                    viq = v[i, q]
                    v[i, p] = vip * c - viq * s
                    v[i, q] = viq * c + vip * s
    if not converged:
        off2 = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off2 += a[i, j] * a[i, j]
        converged = np.sqrt(2.0 * off2) <= off_tol
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, v, converged


def _jacobi_numpy_impl(a, off_tol, max_sweeps):
    # Same rotation schedule as the jitted version, with the inner i-loops
    # replaced by vectorized column updates.
    n = a.shape[0]
    v = np.eye(n)
    converged = False
    for _sweep in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= off_tol:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                newp = colp * c - colq * s
                newq = colq * c + colp * s
                a[:, p] = newp
                a[p, :] = newp
                a[:, q] = newq
                a[q, :] = newq
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = vp * c - vq * s
                v[:, q] = vq * c + vp * s
    if not converged:
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        converged = off <= off_tol
    return np.diag(a).copy(), v, converged


# ---------------------------------------------------------------------------
# Trajectory loops for the linear nodal measures (cases 1..3).
#
# X is (N+1, n) with X[0] prefilled; R is (N+1, n).  The loop fills X[1:]
# and returns (status, step): OK with step N, DOMAIN/BLOWUP with the index
# of the first invalid state.  R itself is domain-checked by the caller.
# ---------------------------------------------------------------------------


def _run_linear_numba_impl(X, R, ei, ej, ew, gamma, case):
    N = X.shape[0] - 1
    n = X.shape[1]
    m = ei.shape[0]
    p = np.empty(n)
    for k in range(N):
        if case == 1:
            for i in range(n):
                p[i] = R[k, i] - X[k, i]
        elif case == 2:
            for i in range(n):
                p[i] = (R[k, i] - X[k, i]) / R[k, i]
        else:
            for i in range(n):
                if X[k, i] <= 0.0:
                    return STATUS_DOMAIN, k
                p[i] = np.log(R[k, i] / X[k, i])
        for i in range(n):
            X[k + 1, i] = X[k, i]
        for e in range(m):
            d = gamma * ew[e] * (p[ei[e]] - p[ej[e]])
            X[k + 1, ei[e]] += d
            X[k + 1, ej[e]] -= d
        for i in range(n):
            if np.abs(X[k + 1, i]) > BLOWUP_LIMIT:
                return STATUS_BLOWUP, k + 1
    if case == 3:
        for i in range(n):
            if X[N, i] <= 0.0:
                return STATUS_DOMAIN, N
    return STATUS_OK, N


def _run_linear_numpy_impl(X, R, L, gamma, case):
    N = X.shape[0] - 1
    for k in range(N):
        x = X[k]
        r = R[k]
        if case == 1:
            p = r - x
        elif case == 2:
            p = (r - x) / r
        else:
            if np.any(x <= 0.0):
                return STATUS_DOMAIN, k
            p = np.log(r / x)
        xn = x + gamma * (L @ p)
        X[k + 1] = xn
        if np.any(np.abs(xn) > BLOWUP_LIMIT):
            return STATUS_BLOWUP, k + 1
    if case == 3 and np.any(X[N] <= 0.0):
        return STATUS_DOMAIN, N
    return STATUS_OK, N


# ---------------------------------------------------------------------------
# Trajectory loop for the saturating measure (case 4): p = x with boundary
# freezing.  A node is frozen for one step when it sits exactly on a
# boundary and the unconstrained update would push it out; its incident
# edges are masked symmetrically for that step, so row sums of the masked
# Laplacian stay zero and the total limit is conserved.  Residual boundary
# crossings are clamped and the residue is pushed to unlocked neighbors
# with headroom (weight-proportional, last recipient takes the exact
# remainder); a violator with no recipients reverts its whole masked
# component to the pre-step state.
#
# Adjacency is CSR: neighbors of i are adj_nbr[adj_ptr[i]:adj_ptr[i+1]].
# This single source runs uncompiled as the numpy fallback and jitted as
# the fast path.
# ---------------------------------------------------------------------------


def _run_case4_impl(X, R, adj_ptr, adj_nbr, adj_w, gamma):
    N = X.shape[0] - 1
    n = X.shape[1]
    u = np.zeros(n)
    frozen = np.zeros(n, dtype=np.bool_)
    locked = np.zeros(n, dtype=np.bool_)
    queue = np.empty(n, dtype=np.int64)
    for k in range(N):
        x = X[k]
        r = R[k]
        for i in range(n):
            s = 0.0
            for a in range(adj_ptr[i], adj_ptr[i + 1]):
                s += adj_w[a] * (x[i] - x[adj_nbr[a]])
            u[i] = gamma * s
        for i in range(n):
            frozen[i] = (x[i] == r[i] and u[i] > 0.0) or (x[i] == 0.0 and u[i] < 0.0)
        for i in range(n):
            if frozen[i]:
                X[k + 1, i] = x[i]
            else:
                s = 0.0
                for a in range(adj_ptr[i], adj_ptr[i + 1]):
                    j = adj_nbr[a]
                    if not frozen[j]:
                        s += adj_w[a] * (x[i] - x[j])
                X[k + 1, i] = x[i] + gamma * s
        xn = X[k + 1]
        for i in range(n):
            locked[i] = frozen[i]
        for _pass in range(4 * n + 8):
            nviol = 0
            for i in range(n):
                if locked[i]:
                    continue
                if xn[i] > r[i]:
                    residue = xn[i] - r[i]
                    xn[i] = r[i]
                elif xn[i] < 0.0:
                    residue = xn[i]
                    xn[i] = 0.0
                else:
                    continue
                nviol += 1
                wsum = 0.0
                nrec = 0
                for a in range(adj_ptr[i], adj_ptr[i + 1]):
                    j = adj_nbr[a]
                    if locked[j]:
                        continue
                    if (residue > 0.0 and xn[j] < r[j]) or (residue < 0.0 and xn[j] > 0.0):
                        wsum += adj_w[a]
                        nrec += 1
                if nrec == 0 or wsum <= 0.0:
                    # no recipient: skip the step for this masked component
                    head = 0
                    tail = 0
                    queue[tail] = i
                    tail += 1
                    locked[i] = True
                    xn[i] = x[i]
                    while head < tail:
                        cnode = queue[head]
                        head += 1
                        for a in range(adj_ptr[cnode], adj_ptr[cnode + 1]):
                            j = adj_nbr[a]
                            if not frozen[j] and not locked[j]:
                                locked[j] = True
                                xn[j] = x[j]
                                queue[tail] = j
                                tail += 1
                    continue
                given = 0.0
                cnt = 0
                for a in range(adj_ptr[i], adj_ptr[i + 1]):
                    j = adj_nbr[a]
                    if locked[j]:
                        continue
                    if not ((residue > 0.0 and xn[j] < r[j]) or (residue < 0.0 and xn[j] > 0.0)):
                        continue
                    cnt += 1
                    if cnt == nrec:
                        share = residue - given
                    else:
                        share = residue * (adj_w[a] / wsum)
                    xn[j] += share
                    given += share
            if nviol == 0:
                break
        # pass budget exhausted: revert components of any remaining violators
        for i in range(n):
            if locked[i] or (xn[i] >= 0.0 and xn[i] <= r[i]):
                continue
            head = 0
            tail = 0
            queue[tail] = i
            tail += 1
            locked[i] = True
            xn[i] = x[i]
            while head < tail:
                cnode = queue[head]
                head += 1
                for a in range(adj_ptr[cnode], adj_ptr[cnode + 1]):
                    j = adj_nbr[a]
                    if not frozen[j] and not locked[j]:
                        locked[j] = True
                        xn[j] = x[j]
                        queue[tail] = j
                        tail += 1
        for i in range(n):
            if np.abs(xn[i]) > BLOWUP_LIMIT:
                return STATUS_BLOWUP, k + 1
    return STATUS_OK, N


# ---------------------------------------------------------------------------
# Reflected Gaussian random walk for demand generation.  R is (N+1, n) with
# R[0] prefilled, incr is (N, n); values reflect off clamp_min.
# ---------------------------------------------------------------------------


def _walk_numba_impl(R, incr, clamp_min):
    N = incr.shape[0]
    n = incr.shape[1]
    for k in range(N):
        for i in range(n):
            val = R[k, i] + incr[k, i]
            if val < clamp_min:
                val = 2.0 * clamp_min - val
            R[k + 1, i] = val


def _walk_numpy_impl(R, incr, clamp_min):
    for k in range(incr.shape[0]):
        val = R[k] + incr[k]
        R[k + 1] = np.where(val < clamp_min, 2.0 * clamp_min - val, val)


if HAS_NUMBA:
    _jacobi_jit = njit(cache=True)(_jacobi_numba_impl)
    _run_linear_jit = njit(cache=True)(_run_linear_numba_impl)
    _run_case4_jit = njit(cache=True)(_run_case4_impl)
    _walk_jit = njit(cache=True)(_walk_numba_impl)


def warm_up() -> None:
    """Trigger jit compilation of all kernels (no-op on the numpy backend)."""
    if not USE_NUMBA:
        return
    a = np.array([[1.0, -1.0], [-1.0, 1.0]])
    _jacobi_jit(a.copy(), 1e-12, 4)
    X = np.zeros((2, 2))
    R = np.ones((2, 2))
    ei = np.array([0], dtype=np.int64)
    ej = np.array([1], dtype=np.int64)
    ew = np.array([1.0])
    _run_linear_jit(X.copy(), R, ei, ej, ew, 0.1, 1)
    ptr = np.array([0, 1, 2], dtype=np.int64)
    nbr = np.array([1, 0], dtype=np.int64)
    _run_case4_jit(X.copy(), R, ptr, nbr, ew.repeat(2), 0.1)
    _walk_jit(R.copy(), np.zeros((1, 2)), 0.0)


def jacobi_eigh(matrix: np.ndarray, off_tol: float, max_sweeps: int):
    """Diagonalize a symmetric matrix by cyclic Jacobi rotations.

    Returns ``(diag, vectors, converged)`` with eigenvalues unsorted (in
    final diagonal order) and eigenvectors in the matching columns.
    """
    a = np.array(matrix, dtype=np.float64, order="C", copy=True)
    if USE_NUMBA:
        return _jacobi_jit(a, float(off_tol), int(max_sweeps))
    return _jacobi_numpy_impl(a, float(off_tol), int(max_sweeps))


def run_linear_case(X, R, ei, ej, ew, n, gamma, case):
    """Run the case 1/2/3 update loop in place; returns (status, step)."""
    if USE_NUMBA:
        return _run_linear_jit(X, R, ei, ej, ew, float(gamma), int(case))
    L = np.zeros((n, n))
    for a, b, wv in zip(ei, ej, ew):
        L[a, b] -= wv
        L[b, a] -= wv
        L[a, a] += wv
        L[b, b] += wv
    return _run_linear_numpy_impl(X, R, L, float(gamma), int(case))


def run_case4(X, R, adj_ptr, adj_nbr, adj_w, gamma):
    """Run the case 4 (saturating) update loop in place; returns (status, step)."""
    if USE_NUMBA:
        return _run_case4_jit(X, R, adj_ptr, adj_nbr, adj_w, float(gamma))
    return _run_case4_impl(X, R, adj_ptr, adj_nbr, adj_w, float(gamma))


def reflected_walk(R, incr, clamp_min):
    """Fill R[1:] with a Gaussian walk reflected at clamp_min."""
    if USE_NUMBA:
        _walk_jit(R, incr, float(clamp_min))
    else:
        _walk_numpy_impl(R, incr, float(clamp_min))
