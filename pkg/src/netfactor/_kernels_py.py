"""Pure-Python versions of the hot kernels.

Same signatures and semantics as the compiled ``_kernels`` extension; used
when the extension is unavailable or ``NETFACTOR_PURE_PYTHON=1`` is set.
"""
from __future__ import annotations

import numpy as np

# identity, Pauli Z
_I2 = np.eye(2, dtype=complex)
_Z2 = np.diag([1.0, -1.0]).astype(complex)


def nnls_gram(G, h, tol=1e-10, max_iter=0):
    """Solve ``min 0.5 x'Gx - h'x`` subject to ``x >= 0`` by the Lawson-Hanson active set.

    `G` is a symmetric positive semidefinite Gram matrix. Returns ``(x, iterations)``.
    The KKT gradient ``h - Gx`` ends at most ``tol * max(1, |h|_inf)`` on the zero set.
    """
    G = np.ascontiguousarray(G, dtype=float)
    h = np.ascontiguousarray(h, dtype=float)
    n = h.shape[0]
    if max_iter <= 0:
        max_iter = 10 * n + 50
    x = np.zeros(n)
    passive = np.zeros(n, dtype=bool)
    blocked = np.zeros(n, dtype=bool)
    gtol = tol * max(1.0, float(np.max(np.abs(h))) if n else 1.0)
    dmax = float(np.max(np.diag(G))) if n else 0.0
    w = h.copy()
    it = 0
    while it < max_iter:
        cand = np.where(~passive & ~blocked & (w > gtol), w, -np.inf)
        if n == 0 or not np.isfinite(cand.max()):
            break
        j = int(np.argmax(cand))
        passive[j] = True
        x_before = x.copy()
        while it < max_iter:
            it += 1
            idx = np.flatnonzero(passive)
            z = np.zeros(n)
            sub = G[np.ix_(idx, idx)]
            sol = _chol_solve(sub, h[idx], dmax)
            if sol is None:
                passive[j] = False
                blocked[j] = True
                break
            z[idx] = sol
            if np.all(sol > 0):
                x = z
                break
            neg = idx[sol <= 0]
            gap = x[neg] - z[neg]
            alphas = np.divide(x[neg], gap, out=np.zeros_like(gap), where=gap > 0)
            k = int(np.argmin(alphas))
            alpha = alphas[k]
            x = x + alpha * (z - x)
            x[neg[k]] = 0.0
            passive &= x > 0
            x[~passive] = 0.0
            if not passive.any():
                break
        if np.array_equal(x, x_before):
            blocked[j] = True
            passive[j] = x[j] > 0
        else:
            blocked[:] = False
        w = h - G @ x
    return x, it


def _chol_solve(A, b, dmax):
    """Cholesky solve; None when a pivot is not safely positive."""
    m = A.shape[0]
    L = np.zeros_like(A)
    floor = 1e-13 * max(dmax, 1e-300)
    for i in range(m):
        s = A[i, i] - L[i, :i] @ L[i, :i]
        if s <= floor:
            return None
        L[i, i] = np.sqrt(s)
        for r in range(i + 1, m):
            L[r, i] = (A[r, i] - L[r, :i] @ L[i, :i]) / L[i, i]
    y = np.zeros(m)
    for i in range(m):
        y[i] = (b[i] - L[i, :i] @ y[:i]) / L[i, i]
    out = np.zeros(m)
    for i in range(m - 1, -1, -1):
        out[i] = (y[i] - L[i + 1:, i] @ out[i + 1:]) / L[i, i]
    return out


def _unpack(z):
    z = np.asarray(z, dtype=complex)
    C0 = z[0:4].reshape(2, 2)
    C1 = z[4:8].reshape(2, 2)
    A1 = np.array([[1.0, z[8]], [z[9], z[10]]], dtype=complex)
    D1 = z[11:15].reshape(2, 2)
    return [_I2, A1], [_I2, _Z2], [C0, C1], [_I2, D1]


def square_objective(z):
    """Squared residual of the reduced square family and its gradient.

    The 15 complex parameters are C0 (4), C1 (4), A1 without its fixed (0,0)
    entry (3) and D1 (4), all row-major. The gradient is ``df/dRe + i df/dIm``.
    """
    A, B, C, D = _unpack(z)
    f = 0.0
    gC = [np.zeros((2, 2), complex), np.zeros((2, 2), complex)]
    gA1 = np.zeros((2, 2), complex)
    gD1 = np.zeros((2, 2), complex)
    for a in range(2):
        for b in range(2):
            for c in range(2):
                for d in range(2):
                    AB = A[a] @ B[b]
                    r = np.trace(AB @ C[c] @ D[d]) - (1.0 if (a == c and b == d) else 0.0)
                    f += abs(r) ** 2
                    gC[c] += 2 * r * np.conj(D[d] @ AB).T
                    if a == 1:
                        gA1 += 2 * r * np.conj(B[b] @ C[c] @ D[d]).T
                    if d == 1:
                        gD1 += 2 * r * np.conj(AB @ C[c]).T
    grad = np.concatenate([gC[0].ravel(), gC[1].ravel(), [gA1[0, 1], gA1[1, 0], gA1[1, 1]], gD1.ravel()])
    return float(f), grad


def square_descent(z0, max_iter, conv_tol, f_stop=0.0):
    """Gradient descent with backtracking on the reduced square objective.

    Stops after `max_iter` steps, when the relative decrease of f drops below
    `conv_tol`, or when f <= `f_stop`. Returns ``(z, f, iterations)``.
    """
    z = np.array(z0, dtype=complex)
    f, g = square_objective(z)
    step = 0.1
    it = 0
    while it < max_iter and f > f_stop:
        it += 1
        gg = float(np.vdot(g, g).real)
        if gg == 0.0 or not np.isfinite(gg):
            break
        step *= 2.0
        while True:
            zn = z - step * g
            fn, gn = square_objective(zn)
            if fn <= f - 0.25 * step * gg:
                break
            step *= 0.5
            if step < 1e-300:
                return z, f, it
        decrease = f - fn
        z, f, g = zn, fn, gn
        if decrease <= conv_tol * max(f, 1e-300):
            break
    return z, f, it


def max_fooling_clique(compat, n):
    """Lexicographically first maximum clique of the compatibility graph.

    ``compat[i]`` is an integer bitmask of the vertices compatible with ``i``
    (n <= 64). Returns the clique as a sorted list of vertex indices.
    """
    compat = [int(c) for c in compat]
    best: list = []

    def expand(chosen, cand):
        nonlocal best
        if len(chosen) > len(best):
            best = list(chosen)
        while cand:
            if len(chosen) + bin(cand).count("1") <= len(best):
                return
            v = (cand & -cand).bit_length() - 1
            cand &= ~(1 << v)
            chosen.append(v)
            expand(chosen, cand & compat[v])
            chosen.pop()

    expand([], (1 << n) - 1 if n else 0)
    return best


def accumulate(gidx, xflat, skip, out_idx, n_out):
    """Sum over configurations of the product of node entries, binned by `out_idx`.

    ``gidx[w, q]`` is the position in `xflat` of node w's entry under
    configuration q; node `skip` (or none when negative) is left out of the
    product. Returns a length-`n_out` array of `xflat`'s dtype.
    """
    xflat = np.asarray(xflat)
    W = gidx.shape[0]
    prod = None
    for w in range(W):
        if w == skip:
            continue
        vals = xflat[gidx[w]]
        prod = vals if prod is None else prod * vals
    if prod is None:
        prod = np.ones(gidx.shape[1], dtype=xflat.dtype)
    if np.iscomplexobj(prod):
        return (np.bincount(out_idx, prod.real, n_out) + 1j * np.bincount(out_idx, prod.imag, n_out))
    return np.bincount(out_idx, prod, n_out)
