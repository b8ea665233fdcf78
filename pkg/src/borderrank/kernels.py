"""Hot numeric kernels for order-3 float64 tensors.

Each kernel has a numba ``@njit`` body and a pure-numpy twin.  The compiled
path is used when numba imports cleanly and ``BORDERRANK_DISABLE_JIT`` is not
set to a truthy value; otherwise the numpy twins are bound under the same
names.  Both paths are importable directly (``*_numpy`` / ``*_jit``) so the
benchmark and tests can compare them.
"""

import os

import numpy as np

_FLAG = os.environ.get("BORDERRANK_DISABLE_JIT", "").strip().lower()
JIT_REQUESTED = _FLAG not in ("1", "true", "yes", "on")

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    HAVE_NUMBA = False

USE_JIT = JIT_REQUESTED and HAVE_NUMBA


# --------------------------------------------------------------------------
# numpy reference implementations
# --------------------------------------------------------------------------

def mttkrp3_numpy(X, B, C, mode):
    """Matricized tensor times Khatri-Rao product for a 3-way array.

    ``mode`` selects the free index; ``B`` and ``C`` are the factor matrices
    of the two remaining modes in increasing mode order.
    """
    if mode == 0:
        return np.einsum("ijk,jr,kr->ir", X, B, C, optimize=True)
    if mode == 1:
        return np.einsum("ijk,ir,kr->jr", X, B, C, optimize=True)
    return np.einsum("ijk,ir,jr->kr", X, B, C, optimize=True)


def cp_full3_numpy(U, V, W):
    """Dense sum of rank-1 terms ``sum_r U[:, r] o V[:, r] o W[:, r]``."""
    return np.einsum("ir,jr,kr->ijk", U, V, W, optimize=True)


def delta_batch_numpy(T):
    """Hyperdeterminant of every 2x2x2 slice of an ``(n, 2, 2, 2)`` array."""
    a111, a112 = T[:, 0, 0, 0], T[:, 0, 0, 1]
    a121, a122 = T[:, 0, 1, 0], T[:, 0, 1, 1]
    a211, a212 = T[:, 1, 0, 0], T[:, 1, 0, 1]
    a221, a222 = T[:, 1, 1, 0], T[:, 1, 1, 1]
    sq = (a111 * a222) ** 2 + (a112 * a221) ** 2 + (a121 * a212) ** 2 + (a122 * a211) ** 2
    cross = (
        a111 * a112 * a221 * a222
        + a111 * a121 * a212 * a222
        + a111 * a122 * a211 * a222
        + a112 * a121 * a212 * a221
        + a112 * a122 * a221 * a211
        + a121 * a122 * a212 * a211
    )
    quad = a111 * a122 * a212 * a221 + a112 * a121 * a211 * a222
    return sq - 2.0 * cross + 4.0 * quad


def _als3_stop(res, prev, tol, abs_stop):
    if res <= abs_stop:
        return True
    return prev >= 0.0 and abs(prev - res) <= tol * max(prev, 1e-300)


def als3_sweeps_numpy(X, A, B, C, n_iter, tol, abs_stop, prev, ridge, cond_limit):
    """Up to ``n_iter`` cyclic least-squares sweeps of a 3-way CP fit.

    ``A``, ``B``, ``C`` are updated in place.  ``prev`` is the residual of the
    sweep before this call (negative if none).  Returns ``(done, stopped,
    residuals, lambdas, cosines)`` where the histories hold ``done`` rows.
    """
    r = A.shape[1]
    res_h = np.empty(n_iter)
    lam_h = np.empty((n_iter, r))
    cos_h = np.full((n_iter, 3), np.nan)
    fac = [A, B, C]
    done, stopped = 0, False
    for it in range(n_iter):
        for m in range(3):
            o = [fac[j] for j in range(3) if j != m]
            G = (o[0].T @ o[0]) * (o[1].T @ o[1])
            if np.linalg.cond(G) > cond_limit:
                G = G + ridge * max(np.trace(G) / r, 1e-300) * np.eye(r)
            M = mttkrp3_numpy(X, o[0], o[1], m)
            fac[m][...] = np.linalg.solve(G, M.T).T
        res = float(np.linalg.norm((X - cp_full3_numpy(A, B, C)).ravel()))
        norms = [np.linalg.norm(U, axis=0) for U in fac]
        res_h[it] = res
        lam_h[it] = norms[0] * norms[1] * norms[2]
        if r >= 2:
            iu = np.triu_indices(r, 1)
            for m in range(3):
                V = fac[m] / np.where(norms[m] > 0, norms[m], 1.0)
                vals = (V.T @ V)[iu]
                cos_h[it, m] = vals[np.argmax(np.abs(vals))]
        done = it + 1
        if _als3_stop(res, prev, tol, abs_stop):
            stopped = True
            break
        prev = res
    return done, stopped, res_h[:done], lam_h[:done], cos_h[:done]


# --------------------------------------------------------------------------
# numba implementations
# --------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def mttkrp3_jit(X, B, C, mode):
        d0, d1, d2 = X.shape
        r = B.shape[1]
        if mode == 0:
            out = np.zeros((d0, r))
            for i in range(d0):
                for j in range(d1):
                    for k in range(d2):
                        x = X[i, j, k]
                        if x == 0.0:
                            continue
                        for c in range(r):
                            out[i, c] += x * B[j, c] * C[k, c]
        elif mode == 1:
            out = np.zeros((d1, r))
            for i in range(d0):
                for j in range(d1):
                    for k in range(d2):
                        x = X[i, j, k]
                        if x == 0.0:
                            continue
                        for c in range(r):
                            out[j, c] += x * B[i, c] * C[k, c]
        else:
            out = np.zeros((d2, r))
            for i in range(d0):
                for j in range(d1):
                    for k in range(d2):
                        x = X[i, j, k]
                        if x == 0.0:
                            continue
                        for c in range(r):
                            out[k, c] += x * B[i, c] * C[j, c]
        return out

    @njit(cache=True)
    def cp_full3_jit(U, V, W):
        d0, r = U.shape
        d1 = V.shape[0]
        d2 = W.shape[0]
        out = np.zeros((d0, d1, d2))
        for i in range(d0):
            for j in range(d1):
                for c in range(r):
                    uv = U[i, c] * V[j, c]
                    for k in range(d2):
                        out[i, j, k] += uv * W[k, c]
        return out

    @njit(cache=True)
    def delta_batch_jit(T):
        n = T.shape[0]
        out = np.empty(n)
        for s in range(n):
            a111 = T[s, 0, 0, 0]
            a112 = T[s, 0, 0, 1]
            a121 = T[s, 0, 1, 0]
            a122 = T[s, 0, 1, 1]
            a211 = T[s, 1, 0, 0]
            a212 = T[s, 1, 0, 1]
            a221 = T[s, 1, 1, 0]
            a222 = T[s, 1, 1, 1]
            sq = (
                (a111 * a222) ** 2
                + (a112 * a221) ** 2
                + (a121 * a212) ** 2
                + (a122 * a211) ** 2
            )
            cross = (
                a111 * a112 * a221 * a222
                + a111 * a121 * a212 * a222
                + a111 * a122 * a211 * a222
                + a112 * a121 * a212 * a221
                + a112 * a122 * a221 * a211
                + a121 * a122 * a212 * a211
            )
            quad = a111 * a122 * a212 * a221 + a112 * a121 * a211 * a222
            out[s] = sq - 2.0 * cross + 4.0 * quad
        return out

    @njit(cache=True)
    def _gram_except_jit(P, Q):
        r = P.shape[1]
        G = np.empty((r, r))
        for a in range(r):
            for b in range(r):
                sp = 0.0
                for i in range(P.shape[0]):
                    sp += P[i, a] * P[i, b]
                sq = 0.0
                for i in range(Q.shape[0]):
                    sq += Q[i, a] * Q[i, b]
                G[a, b] = sp * sq
        return G

    @njit(cache=True)
    def als3_sweeps_jit(X, A, B, C, n_iter, tol, abs_stop, prev, ridge, cond_limit):
        r = A.shape[1]
        res_h = np.empty(n_iter)
        lam_h = np.empty((n_iter, r))
        cos_h = np.full((n_iter, 3), np.nan)
        done = 0
        stopped = False
        for it in range(n_iter):
            for m in range(3):
                if m == 0:
                    P, Q, U = B, C, A
                elif m == 1:
                    P, Q, U = A, C, B
                else:
                    P, Q, U = A, B, C
                G = _gram_except_jit(P, Q)
                if np.linalg.cond(G) > cond_limit:
                    tr = 0.0
                    for a in range(r):
                        tr += G[a, a]
                    shift = ridge * max(tr / r, 1e-300)
                    for a in range(r):
                        G[a, a] += shift
                M = mttkrp3_jit(X, P, Q, m)
                U[:, :] = np.linalg.solve(G, np.ascontiguousarray(M.T)).T
            F = cp_full3_jit(A, B, C)
            s = 0.0
            for i in range(X.shape[0]):
                for j in range(X.shape[1]):
                    for k in range(X.shape[2]):
                        d = X[i, j, k] - F[i, j, k]
                        s += d * d
            res = np.sqrt(s)
            res_h[it] = res
            for c in range(r):
                lam_h[it, c] = 1.0
            for m in range(3):
                U = A if m == 0 else (B if m == 1 else C)
                nrm = np.empty(r)
                for c in range(r):
                    nrm[c] = np.sqrt(np.sum(U[:, c] ** 2))
                    lam_h[it, c] *= nrm[c]
                best = 0.0
                found = False
                for a in range(r):
                    for b in range(a + 1, r):
                        na = nrm[a] if nrm[a] > 0 else 1.0
                        nb = nrm[b] if nrm[b] > 0 else 1.0
                        v = np.sum(U[:, a] * U[:, b]) / (na * nb)
                        if not found or abs(v) > abs(best):
                            best = v
                            found = True
                if found:
                    cos_h[it, m] = best
            done = it + 1
            if res <= abs_stop or (prev >= 0.0 and abs(prev - res) <= tol * max(prev, 1e-300)):
                stopped = True
                break
            prev = res
        return done, stopped, res_h[:done], lam_h[:done], cos_h[:done]

else:  # pragma: no cover
    mttkrp3_jit = mttkrp3_numpy
    cp_full3_jit = cp_full3_numpy
    delta_batch_jit = delta_batch_numpy
    als3_sweeps_jit = als3_sweeps_numpy


def _contig(a):
    return np.ascontiguousarray(a, dtype=np.float64)


if USE_JIT:

    def mttkrp3(X, B, C, mode):
        return mttkrp3_jit(_contig(X), _contig(B), _contig(C), int(mode))

    def cp_full3(U, V, W):
        return cp_full3_jit(_contig(U), _contig(V), _contig(W))

    def delta_batch(T):
        return delta_batch_jit(_contig(T))

    def als3_sweeps(X, A, B, C, n_iter, tol, abs_stop, prev, ridge, cond_limit):
        return als3_sweeps_jit(
            _contig(X), A, B, C, int(n_iter), float(tol), float(abs_stop),
            float(prev), float(ridge), float(cond_limit),
        )

else:
    mttkrp3 = mttkrp3_numpy
    cp_full3 = cp_full3_numpy
    delta_batch = delta_batch_numpy
    als3_sweeps = als3_sweeps_numpy


def backend():
    """Name of the active kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_JIT else "numpy"
