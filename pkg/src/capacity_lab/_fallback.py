"""Pure numpy versions of the compiled kernels.

Same signatures and semantics as ``_kernels``; used when the extension is
not built or when ``CAPACITY_LAB_PURE=1``.
"""
from __future__ import annotations

import numpy as np

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-9


def _sign(x):
    # sign(0) = +1
    return np.where(x >= 0.0, 1.0, -1.0)


def select_support(a, K, fixed):
    """Boolean mask of the entries kept by ``eta_K(a | fixed)``.

    Fixed entries always survive; the remaining ``K - |fixed|`` slots go to
    the largest magnitudes among the rest, ties to the lowest index.
    """
    keep = fixed.astype(bool).copy()
    free = K - int(keep.sum())
    if free > 0:
        idx = np.flatnonzero(~keep)
        order = np.argsort(-np.abs(a[idx]), kind="stable")
        keep[idx[order[:free]]] = True
    return keep


def biht_stage(X, y, w, K, fixed, tau, eps, L):
    """Run BIHT from ``w`` until the update norm drops to ``eps`` or ``L`` steps.

    Returns ``(w, iterations, err_trace)``; ``w`` is not normalized.
    """
    N = X.shape[1]
    w = np.array(w, dtype=float)
    trace = np.empty(L)
    half = 0.5 * tau
    it = 0
    for it in range(1, L + 1):
        a = w + half * (X.T @ (y - _sign(X @ w)))
        keep = select_support(a, K, fixed)
        new = np.where(keep, a, 0.0)
        err = np.linalg.norm(new - w) / N
        w = new
        trace[it - 1] = err
        if err <= eps:
            break
    return w, it, trace[:it].copy()


def separable(U):
    """Strict linear separability of the rows of ``U`` through the origin.

    Decides ``exists w: U w > 0`` through its Gordan alternative: the rows
    are *not* separable iff some convex combination of them vanishes.  The
    latter is a phase-1 simplex problem, solved densely with Bland's rule.
    """
    U = np.asarray(U, dtype=float)
    P, M = U.shape
    m = M + 1
    n = P + m
    T = np.zeros((m + 1, n + 1))
    T[:M, :P] = U.T
    T[M, :P] = 1.0
    T[:m, P:P + m] = np.eye(m)
    T[M, n] = 1.0
    T[m, :P] = -T[:m, :P].sum(axis=0)
    T[m, n] = -1.0
    basis = list(range(P, P + m))
    while True:
        neg = np.flatnonzero(T[m, :n] < -PIVOT_TOL)
        if neg.size == 0:
            break
        j = neg[0]
        col = T[:m, j]
        ok = np.flatnonzero(col > PIVOT_TOL)
        if ok.size == 0:  # cannot happen for a bounded phase-1 problem
            break
        ratios = T[ok, n] / col[ok]
        best = ratios.min()
        cand = ok[ratios <= best + PIVOT_TOL]
        i = min(cand, key=lambda r: basis[r])
        T[i] /= T[i, j]
        for r in range(m + 1):
            if r != i and T[r, j] != 0.0:
                T[r] -= T[r, j] * T[i]
        basis[i] = j
    return bool(-T[m, n] > FEAS_TOL)


def first_separable(Z, supports):
    """Index of the first row of ``supports`` on which ``Z`` separates, else -1."""
    for s in range(supports.shape[0]):
        if separable(Z[:, supports[s]]):
            return s
    return -1
