# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled BIHT stage loop and simplex separability test.

Semantics match ``_fallback`` exactly: sign(0) = +1, magnitude ties in the
hard threshold go to the lowest index, and the separability test solves
the same phase-1 problem with Bland's rule and the same tolerances.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt
from libc.stdlib cimport malloc, free

cnp.import_array()

cdef double PIVOT_TOL = 1e-9
cdef double FEAS_TOL = 1e-9


cdef void _select(const double* a, const unsigned char* fixed, int N, int K,
                  unsigned char* keep) noexcept nogil:
    cdef int i, k, best, nfix = 0
    cdef double bm, m
    for i in range(N):
        keep[i] = fixed[i]
        nfix += fixed[i] != 0
    for k in range(K - nfix):
        best = -1
        bm = -1.0
        for i in range(N):
            if keep[i]:
                continue
            m = fabs(a[i])
            # strict '>' keeps the lowest index on ties
            if m > bm:
                bm = m
                best = i
        if best < 0:
            break
        keep[best] = 1


def biht_stage(const double[:, ::1] X, const double[::1] y, w_init,
               int K, const unsigned char[::1] fixed, double tau, double eps,
               int L):
    """Run BIHT from ``w_init``; returns ``(w, iterations, err_trace)``."""
    cdef Py_ssize_t P = X.shape[0], N = X.shape[1]
    cdef cnp.ndarray[double, ndim=1] w_arr = np.array(w_init, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] trace = np.empty(L)
    cdef double[::1] w = w_arr
    cdef double* a = <double*> malloc(N * sizeof(double))
    cdef double* resid = <double*> malloc(P * sizeof(double))
    cdef unsigned char* keep = <unsigned char*> malloc(N * sizeof(unsigned char))
    cdef Py_ssize_t mu, i
    cdef int it = 0, l
    cdef double half = 0.5 * tau, acc, d, err
    if a == NULL or resid == NULL or keep == NULL:
        free(a); free(resid); free(keep)
        raise MemoryError()
    try:
        with nogil:
            for l in range(1, L + 1):
                it = l
                for mu in range(P):
                    acc = 0.0
                    for i in range(N):
                        acc = acc + X[mu, i] * w[i]
                    resid[mu] = y[mu] - (1.0 if acc >= 0.0 else -1.0)
                for i in range(N):
                    a[i] = 0.0
                for mu in range(P):
                    if resid[mu] != 0.0:
                        for i in range(N):
                            a[i] = a[i] + X[mu, i] * resid[mu]
                for i in range(N):
                    a[i] = w[i] + half * a[i]
                _select(a, &fixed[0], <int> N, K, keep)
                err = 0.0
                for i in range(N):
                    if not keep[i]:
                        a[i] = 0.0
                    d = a[i] - w[i]
                    err = err + d * d
                    w[i] = a[i]
                err = sqrt(err) / N
                trace[l - 1] = err
                if err <= eps:
                    break
    finally:
        free(a); free(resid); free(keep)
    return w_arr, it, trace[:it].copy()


cdef int _separable(const double* U, int P, int M, double* T) noexcept nogil:
    """Phase-1 simplex on the Gordan system; ``U`` is row-major P x M."""
    cdef int m = M + 1, n = P + m, W = n + 1
    cdef int r, c, j, i, piv
    cdef double v, best, ratio, f
    cdef int* basis = <int*> malloc(m * sizeof(int))
    if basis == NULL:
        return -1
    for r in range((m + 1) * W):
        T[r] = 0.0
    for r in range(M):
        for c in range(P):
            T[r * W + c] = U[c * M + r]
    for c in range(P):
        T[M * W + c] = 1.0
    for r in range(m):
        T[r * W + P + r] = 1.0
        basis[r] = P + r
    T[M * W + n] = 1.0
    for c in range(P):
        v = 0.0
        for r in range(m):
            v = v + T[r * W + c]
        T[m * W + c] = -v
    T[m * W + n] = -1.0
    while True:
        j = -1
        for c in range(n):
            if T[m * W + c] < -PIVOT_TOL:
                j = c
                break
        if j < 0:
            break
        best = -1.0
        for r in range(m):
            v = T[r * W + j]
            if v > PIVOT_TOL:
                ratio = T[r * W + n] / v
                if best < 0.0 or ratio < best:
                    best = ratio
        # Bland: among (near-)minimal ratios leave the lowest basic index
        piv = -1
        for r in range(m):
            v = T[r * W + j]
            if v > PIVOT_TOL and T[r * W + n] / v <= best + PIVOT_TOL:
                if piv < 0 or basis[r] < basis[piv]:
                    piv = r
        if piv < 0:
            break
        f = T[piv * W + j]
        for c in range(W):
            T[piv * W + c] = T[piv * W + c] / f
        for r in range(m + 1):
            if r == piv:
                continue
            f = T[r * W + j]
            if f != 0.0:
                for c in range(W):
                    T[r * W + c] = T[r * W + c] - f * T[piv * W + c]
        basis[piv] = j
    free(basis)
    return 1 if -T[m * W + n] > FEAS_TOL else 0


def separable(U):
    """Strict separability of the rows of ``U`` through the origin."""
    cdef cnp.ndarray[double, ndim=2, mode="c"] A = np.ascontiguousarray(U, dtype=np.float64)
    cdef int P = A.shape[0], M = A.shape[1]
    cdef double* T = <double*> malloc((M + 3) * (P + M + 2) * sizeof(double))
    cdef int res
    if T == NULL:
        raise MemoryError()
    res = _separable(&A[0, 0], P, M, T)
    free(T)
    if res < 0:
        raise MemoryError()
    return bool(res)


def first_separable(Z, supports):
    """Index of the first row of ``supports`` on which ``Z`` separates, else -1."""
    cdef const double[:, ::1] A = np.ascontiguousarray(Z, dtype=np.float64)
    cdef const cnp.int64_t[:, ::1] S = np.ascontiguousarray(supports, dtype=np.int64)
    cdef int P = A.shape[0], ns = S.shape[0], M = S.shape[1]
    cdef double* T = <double*> malloc((M + 3) * (P + M + 2) * sizeof(double))
    cdef double* U = <double*> malloc(P * M * sizeof(double))
    cdef int s, mu, k, res = 0, found = -1
    if T == NULL or U == NULL:
        free(T); free(U)
        raise MemoryError()
    with nogil:
        for s in range(ns):
            for mu in range(P):
                for k in range(M):
                    U[mu * M + k] = A[mu, S[s, k]]
            res = _separable(U, P, M, T)
            if res < 0:
                break
            if res == 1:
                found = s
                break
    free(T); free(U)
    if res < 0:
        raise MemoryError()
    return found
