# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Mirrors ``_kernels_py`` exactly in semantics."""

import numpy as np
from libc.math cimport sqrt, fabs, isfinite
from libc.stdint cimport uint64_t


cdef bint _chol_solve(double[:, ::1] G, double[::1] h, Py_ssize_t* idx, Py_ssize_t m,
                      double[:, ::1] L, double[::1] y, double[::1] out, double floor) nogil:
    cdef Py_ssize_t i, r, k
    cdef double s
    for i in range(m):
        s = G[idx[i], idx[i]]
        for k in range(i):
            s -= L[i, k] * L[i, k]
        if s <= floor:
            return False
        L[i, i] = sqrt(s)
        for r in range(i + 1, m):
            s = G[idx[r], idx[i]]
            for k in range(i):
                s -= L[r, k] * L[i, k]
            L[r, i] = s / L[i, i]
    for i in range(m):
        s = h[idx[i]]
        for k in range(i):
            s -= L[i, k] * y[k]
        y[i] = s / L[i, i]
    for i in range(m - 1, -1, -1):
        s = y[i]
        for k in range(i + 1, m):
            s -= L[k, i] * out[k]
        out[i] = s / L[i, i]
    return True


def nnls_gram(G_in, h_in, double tol=1e-10, Py_ssize_t max_iter=0):
    """Lawson-Hanson active set on ``min 0.5 x'Gx - h'x, x >= 0``. Returns ``(x, iterations)``."""
    cdef double[:, ::1] G = np.ascontiguousarray(G_in, dtype=np.float64)
    cdef double[::1] h = np.ascontiguousarray(h_in, dtype=np.float64)
    cdef Py_ssize_t n = h.shape[0]
    if max_iter <= 0:
        max_iter = 10 * n + 50
    x_arr = np.zeros(n)
    cdef double[::1] x = x_arr
    cdef double[::1] xb = np.zeros(n)
    cdef double[::1] z = np.zeros(n)
    cdef double[::1] w = np.zeros(n)
    cdef double[:, ::1] L = np.zeros((max(n, 1), max(n, 1)))
    cdef double[::1] y = np.zeros(max(n, 1))
    cdef double[::1] sol = np.zeros(max(n, 1))
    idx_arr = np.zeros(max(n, 1), dtype=np.intp)
    cdef Py_ssize_t[::1] idx = idx_arr
    cdef unsigned char[::1] passive = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] blocked = np.zeros(n, dtype=np.uint8)
    cdef Py_ssize_t i, j, k, m, it = 0, kmin
    cdef double gtol = 1.0, dmax = 0.0, best, alpha, a, s
    cdef bint ok, allpos, changed, anyp
    for i in range(n):
        if fabs(h[i]) > gtol:
            gtol = fabs(h[i])
        if G[i, i] > dmax:
            dmax = G[i, i]
        w[i] = h[i]
    gtol *= tol
    cdef double floor = 1e-13 * (dmax if dmax > 1e-300 else 1e-300)
    with nogil:
        while it < max_iter:
            j = -1
            best = gtol
            for i in range(n):
                if not passive[i] and not blocked[i] and w[i] > best:
                    best = w[i]
                    j = i
            if j < 0:
                break
            passive[j] = 1
            for i in range(n):
                xb[i] = x[i]
            while it < max_iter:
                it += 1
                m = 0
                for i in range(n):
                    if passive[i]:
                        idx[m] = i
                        m += 1
                ok = _chol_solve(G, h, &idx[0], m, L, y, sol, floor)
                if not ok:
                    passive[j] = 0
                    blocked[j] = 1
                    break
                allpos = True
                for i in range(n):
                    z[i] = 0.0
                for k in range(m):
                    z[idx[k]] = sol[k]
                    if sol[k] <= 0:
                        allpos = False
                if allpos:
                    for i in range(n):
                        x[i] = z[i]
                    break
                alpha = 2.0
                kmin = -1
                for k in range(m):
                    i = idx[k]
                    if z[i] <= 0:
                        a = x[i] / (x[i] - z[i]) if x[i] - z[i] > 0 else 0.0
                        if a < alpha:
                            alpha = a
                            kmin = i
                for i in range(n):
                    x[i] = x[i] + alpha * (z[i] - x[i])
                x[kmin] = 0.0
                anyp = False
                for i in range(n):
                    if passive[i] and not (x[i] > 0):
                        passive[i] = 0
                    if not passive[i]:
                        x[i] = 0.0
                    else:
                        anyp = True
                if not anyp:
                    break
            changed = False
            for i in range(n):
                if x[i] != xb[i]:
                    changed = True
                    break
            if not changed:
                blocked[j] = 1
                passive[j] = x[j] > 0
            else:
                for i in range(n):
                    blocked[i] = 0
            for i in range(n):
                s = h[i]
                for k in range(n):
                    s -= G[i, k] * x[k]
                w[i] = s
    return x_arr, it


# reduced square family: A0 = B0 = D0 = I, B1 = Z, A1[0,0] = 1

ctypedef double complex cplx


cdef inline void _mm(cplx* X, cplx* Y, cplx* out) nogil:
    out[0] = X[0] * Y[0] + X[1] * Y[2]
    out[1] = X[0] * Y[1] + X[1] * Y[3]
    out[2] = X[2] * Y[0] + X[3] * Y[2]
    out[3] = X[2] * Y[1] + X[3] * Y[3]


cdef inline cplx _conj(cplx v) nogil:
    return v.real - 1j * v.imag


cdef double _objective(cplx* zp, cplx* grad) nogil:
    cdef cplx A[2][4]
    cdef cplx B[2][4]
    cdef cplx C[2][4]
    cdef cplx D[2][4]
    cdef cplx gC[2][4]
    cdef cplx gA[4]
    cdef cplx gD[4]
    cdef cplx AB[4]
    cdef cplx ABC[4]
    cdef cplx M[4]
    cdef cplx T[4]
    cdef cplx CD[4]
    cdef cplx r
    cdef double f = 0.0
    cdef int a, b, c, d, k
    for k in range(4):
        A[0][k] = 1.0 if (k == 0 or k == 3) else 0.0
        B[0][k] = A[0][k]
        D[0][k] = A[0][k]
        C[0][k] = zp[k]
        C[1][k] = zp[4 + k]
        D[1][k] = zp[11 + k]
        gC[0][k] = 0
        gC[1][k] = 0
        gA[k] = 0
        gD[k] = 0
    B[1][0] = 1.0
    B[1][1] = 0.0
    B[1][2] = 0.0
    B[1][3] = -1.0
    A[1][0] = 1.0
    A[1][1] = zp[8]
    A[1][2] = zp[9]
    A[1][3] = zp[10]
    for a in range(2):
        for b in range(2):
            _mm(A[a], B[b], AB)
            for c in range(2):
                _mm(AB, C[c], ABC)
                for d in range(2):
                    _mm(ABC, D[d], M)
                    r = M[0] + M[3]
                    if a == c and b == d:
                        r = r - 1.0
                    f += r.real * r.real + r.imag * r.imag
                    if grad != NULL:
                        r = 2.0 * r
                        _mm(D[d], AB, T)
                        for k in range(2):
                            gC[c][2 * k] += r * _conj(T[k])
                            gC[c][2 * k + 1] += r * _conj(T[2 + k])
                        if a == 1:
                            _mm(C[c], D[d], CD)
                            _mm(B[b], CD, T)
                            for k in range(2):
                                gA[2 * k] += r * _conj(T[k])
                                gA[2 * k + 1] += r * _conj(T[2 + k])
                        if d == 1:
                            for k in range(2):
                                gD[2 * k] += r * _conj(ABC[k])
                                gD[2 * k + 1] += r * _conj(ABC[2 + k])
    if grad != NULL:
        for k in range(4):
            grad[k] = gC[0][k]
            grad[4 + k] = gC[1][k]
            grad[11 + k] = gD[k]
        grad[8] = gA[1]
        grad[9] = gA[2]
        grad[10] = gA[3]
    return f


def square_objective(z_in):
    """Squared residual of the reduced square family and its gradient ``df/dRe + i df/dIm``."""
    cdef cplx[::1] z = np.ascontiguousarray(z_in, dtype=np.complex128)
    grad_arr = np.zeros(15, dtype=np.complex128)
    cdef cplx[::1] g = grad_arr
    cdef double f = _objective(&z[0], &g[0])
    return f, grad_arr


def square_descent(z0, Py_ssize_t max_iter, double conv_tol, double f_stop=0.0):
    """Backtracking gradient descent; returns ``(z, f, iterations)``."""
    z_arr = np.array(z0, dtype=np.complex128)
    cdef cplx[::1] z = z_arr
    cdef cplx g[15]
    cdef cplx gn[15]
    cdef cplx zn[15]
    cdef double f, fn, gg, step = 0.1, decrease
    cdef Py_ssize_t it = 0
    cdef int k
    cdef bint stalled = False
    with nogil:
        f = _objective(&z[0], g)
        while it < max_iter and f > f_stop:
            it += 1
            gg = 0.0
            for k in range(15):
                gg += g[k].real * g[k].real + g[k].imag * g[k].imag
            if gg == 0.0 or not isfinite(gg):
                break
            step *= 2.0
            while True:
                for k in range(15):
                    zn[k] = z[k] - step * g[k]
                fn = _objective(zn, gn)
                if fn <= f - 0.25 * step * gg:
                    break
                step *= 0.5
                if step < 1e-300:
                    stalled = True
                    break
            if stalled:
                break
            decrease = f - fn
            for k in range(15):
                z[k] = zn[k]
                g[k] = gn[k]
            f = fn
            if decrease <= conv_tol * (f if f > 1e-300 else 1e-300):
                break
    return z_arr, f, it


cdef int _popcount(uint64_t v) nogil:
    cdef int c = 0
    while v:
        v &= v - 1
        c += 1
    return c


cdef int _lowbit(uint64_t v) nogil:
    cdef int i = 0
    while not (v & 1):
        v >>= 1
        i += 1
    return i


cdef void _expand(uint64_t* compat, int* chosen, int depth, uint64_t cand,
                  int* best, int* best_size) nogil:
    cdef int v, k
    if depth > best_size[0]:
        best_size[0] = depth
        for k in range(depth):
            best[k] = chosen[k]
    while cand:
        if depth + _popcount(cand) <= best_size[0]:
            return
        v = _lowbit(cand)
        cand &= ~((<uint64_t>1) << v)
        chosen[depth] = v
        _expand(compat, chosen, depth + 1, cand & compat[v], best, best_size)


def max_fooling_clique(compat_in, int n):
    """Lexicographically first maximum clique; ``compat[i]`` is a bitmask, n <= 64."""
    if n > 64:
        raise ValueError("at most 64 vertices")
    cdef uint64_t compat[64]
    cdef int chosen[64]
    cdef int best[64]
    cdef int best_size = 0
    cdef int i
    for i in range(n):
        compat[i] = <uint64_t>int(compat_in[i])
    cdef uint64_t full = 0
    for i in range(n):
        full |= (<uint64_t>1) << i
    with nogil:
        _expand(compat, chosen, 0, full, best, &best_size)
    return [best[i] for i in range(best_size)]


ctypedef fused scalar:
    double
    double complex


cdef void _accumulate(Py_ssize_t[:, ::1] gidx, scalar[::1] x, Py_ssize_t skip,
                      Py_ssize_t[::1] out_idx, scalar[::1] out) nogil:
    cdef Py_ssize_t W = gidx.shape[0], Q = gidx.shape[1], q, w
    cdef scalar p
    for q in range(Q):
        p = 1
        for w in range(W):
            if w != skip:
                p = p * x[gidx[w, q]]
        out[out_idx[q]] += p


def accumulate(gidx_in, xflat, Py_ssize_t skip, out_idx_in, Py_ssize_t n_out):
    """Configuration-sum of node-entry products binned by `out_idx`; see the Python twin."""
    cdef Py_ssize_t[:, ::1] gidx = np.ascontiguousarray(gidx_in, dtype=np.intp)
    cdef Py_ssize_t[::1] out_idx = np.ascontiguousarray(out_idx_in, dtype=np.intp)
    x = np.ascontiguousarray(xflat)
    cdef double[::1] xr, outr
    cdef double complex[::1] xc, outc
    if x.dtype == np.complex128:
        out = np.zeros(n_out, dtype=np.complex128)
        xc = x
        outc = out
        with nogil:
            _accumulate(gidx, xc, skip, out_idx, outc)
    else:
        x = x.astype(np.float64, copy=False)
        out = np.zeros(n_out, dtype=np.float64)
        xr = x
        outr = out
        with nogil:
            _accumulate(gidx, xr, skip, out_idx, outr)
    return out
