"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``HELMPSO_NUMBA`` is not ``"0"``. Both implementations of every
kernel are importable under ``numpy_impl`` / ``numba_impl`` so tests and the
benchmark can compare them directly.
"""

import os
import types

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and os.environ.get("HELMPSO_NUMBA", "1") != "0"


# ---------------------------------------------------------------------------
# pure numpy
# ---------------------------------------------------------------------------

def _p1_local_numpy(nodes, triangles):
    p = nodes[triangles]  # (T, 3, 2)
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    area = 0.5 * det
    # gradients of barycentric coordinates: rotate opposite edge by -90deg / det
    opp = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
    grad = np.empty_like(opp)
    grad[..., 0] = opp[..., 1] / det[:, None]
    grad[..., 1] = -opp[..., 0] / det[:, None]
    K = area[:, None, None] * np.einsum("tik,tjk->tij", grad, grad)
    M = (area / 12.0)[:, None, None] * (np.ones((3, 3)) + np.eye(3))
    return K, M, area


def _swarm_move_numpy(X, V, P, g, r1, r2, omega, c1, c2, lb, ub):
    V *= omega
    V += c1 * r1 * (P - X) + c2 * r2 * (g - X)
    X += V
    lo = X < lb
    hi = X > ub
    X[lo] = np.broadcast_to(lb, X.shape)[lo]
    X[hi] = np.broadcast_to(ub, X.shape)[hi]
    V[lo | hi] = 0.0


def _update_bests_numpy(X, fx, P, fp, g_idx, g_val):
    better = fx < fp
    P[better] = X[better]
    fp[better] = fx[better]
    # sequential scan in particle order; strict < keeps the incumbent on ties
    for i in np.flatnonzero(better):
        if fp[i] < g_val:
            g_idx = int(i)
            g_val = float(fp[i])
    return g_idx, g_val


def _quad_form_numpy(X, H, b, k):
    HX = (X[:, None, :] * H[None, :, :]).sum(axis=2)
    return k + (X * (b + 0.5 * HX)).sum(axis=1)


def _pso_iter_quadratic_numpy(X, V, P, fp, fx, g_idx, g_val, r1, r2,
                              omega, c1, c2, lb, ub, H, b, k):
    n = X.shape[0]
    for i in range(n):
        _swarm_move_numpy(X[i:i + 1], V[i:i + 1], P[i:i + 1], P[g_idx].copy(),
                          r1[i:i + 1], r2[i:i + 1], omega, c1, c2, lb, ub)
        fx[i] = _quad_form_numpy(X[i:i + 1], H, b, k)[0]
        if fx[i] < fp[i]:
            fp[i] = fx[i]
            P[i] = X[i]
            if fp[i] < g_val:
                g_idx = i
                g_val = fp[i]
    return g_idx, g_val


numpy_impl = types.SimpleNamespace(
    p1_local=_p1_local_numpy,
    swarm_move=_swarm_move_numpy,
    update_bests=_update_bests_numpy,
    quad_form=_quad_form_numpy,
    pso_iter_quadratic=_pso_iter_quadratic_numpy,
)


# ---------------------------------------------------------------------------
# numba
# ---------------------------------------------------------------------------

if numba is not None:
    _jit = numba.njit(cache=True, fastmath=False, nogil=True)

    @_jit
    def _p1_local_numba(nodes, triangles):
        T = triangles.shape[0]
        K = np.empty((T, 3, 3))
        M = np.empty((T, 3, 3))
        area = np.empty(T)
        gx = np.empty(3)
        gy = np.empty(3)
        for t in range(T):
            a, b, c = triangles[t, 0], triangles[t, 1], triangles[t, 2]
            x0, y0 = nodes[a, 0], nodes[a, 1]
            x1, y1 = nodes[b, 0], nodes[b, 1]
            x2, y2 = nodes[c, 0], nodes[c, 1]
            det = (x1 - x0) * (y2 - y0) - (y1 - y0) * (x2 - x0)
            ar = 0.5 * det
            area[t] = ar
            gx[0] = (y2 - y1) / det
            gy[0] = -(x2 - x1) / det
            gx[1] = (y0 - y2) / det
            gy[1] = -(x0 - x2) / det
            gx[2] = (y1 - y0) / det
            gy[2] = -(x1 - x0) / det
            for i in range(3):
                for j in range(3):
                    K[t, i, j] = ar * (gx[i] * gx[j] + gy[i] * gy[j])
                    M[t, i, j] = ar / 12.0 * (2.0 if i == j else 1.0)
        return K, M, area

    @_jit
    def _swarm_move_numba(X, V, P, g, r1, r2, omega, c1, c2, lb, ub):
        n, d = X.shape
        for i in range(n):
            for j in range(d):
                v = omega * V[i, j]
                v += c1 * r1[i, j] * (P[i, j] - X[i, j]) + c2 * r2[i, j] * (g[j] - X[i, j])
                x = X[i, j] + v
                if x < lb[j]:
                    x = lb[j]
                    v = 0.0
                elif x > ub[j]:
                    x = ub[j]
                    v = 0.0
                X[i, j] = x
                V[i, j] = v

    @_jit
    def _update_bests_numba(X, fx, P, fp, g_idx, g_val):
        n, d = X.shape
        for i in range(n):
            if fx[i] < fp[i]:
                fp[i] = fx[i]
                for j in range(d):
                    P[i, j] = X[i, j]
                if fp[i] < g_val:
                    g_idx = i
                    g_val = fp[i]
        return g_idx, g_val

    @_jit
    def _quad_form_numba(X, H, b, k):
        n, d = X.shape
        out = np.empty(n)
        for i in range(n):
            s = 0.0
            for j in range(d):
                hx = 0.0
                for m in range(d):
                    hx += H[j, m] * X[i, m]
                s += X[i, j] * (b[j] + 0.5 * hx)
            out[i] = k + s
        return out

    @_jit
    def _pso_iter_quadratic_numba(X, V, P, fp, fx, g_idx, g_val, r1, r2,
                                  omega, c1, c2, lb, ub, H, b, k):
        # one asynchronous sweep: particle i sees the global best left by i-1
        n, d = X.shape
        g = np.empty(d)
        for i in range(n):
            for j in range(d):
                g[j] = P[g_idx, j]
            _swarm_move_numba(X[i:i + 1], V[i:i + 1], P[i:i + 1], g,
                              r1[i:i + 1], r2[i:i + 1], omega, c1, c2, lb, ub)
            fx[i] = _quad_form_numba(X[i:i + 1], H, b, k)[0]
            if fx[i] < fp[i]:
                fp[i] = fx[i]
                for j in range(d):
                    P[i, j] = X[i, j]
                if fp[i] < g_val:
                    g_idx = i
                    g_val = fp[i]
        return g_idx, g_val

    numba_impl = types.SimpleNamespace(
        p1_local=_p1_local_numba,
        swarm_move=_swarm_move_numba,
        update_bests=_update_bests_numba,
        quad_form=_quad_form_numba,
        pso_iter_quadratic=_pso_iter_quadratic_numba,
    )
else:  # pragma: no cover
    numba_impl = None


def backend():
    """Name of the active kernel backend ("numba" or "numpy")."""
    return "numba" if USE_NUMBA else "numpy"


_active = numba_impl if USE_NUMBA else numpy_impl

p1_local = _active.p1_local
swarm_move = _active.swarm_move
update_bests = _active.update_bests
quad_form = _active.quad_form
pso_iter_quadratic = _active.pso_iter_quadratic
