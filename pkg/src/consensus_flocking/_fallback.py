"""Pure numpy implementation of the integration core.

Mirrors the signatures of the compiled ``_kernels`` module so either can be
selected at import time.
"""

import numpy as np

FAMILY_CONSTANT = 0
FAMILY_POWERLAW = 1
FAMILY_TABULATED = 2


def phi_array(r, family, c, beta, tab_x, tab_y):
    if family == FAMILY_CONSTANT:
        return np.full_like(r, c)
    if family == FAMILY_POWERLAW:
        return c / (1.0 + r) ** beta
    return np.interp(r, tab_x, tab_y)


def coupling(x, M, family, c, beta, tab_x, tab_y, normalized):
    """Return ``(diff, W)`` where ``diff[i, j] = x_j - x_i`` and W holds lambda_i/N * M_ij * phi_ij."""
    n = x.shape[0]
    diff = x[None, :, :] - x[:, None, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    phi = phi_array(dist, family, c, beta, tab_x, tab_y)
    if normalized:
        scale = 1.0 / phi.sum(axis=1)
    else:
        scale = np.full(n, 1.0 / n)
    return diff, (M * phi) * scale[:, None]


def rhs_first(x, M, family, c, beta, tab_x, tab_y, normalized):
    diff, W = coupling(x, M, family, c, beta, tab_x, tab_y, normalized)
    return np.einsum("ij,ijk->ik", W, diff)


def rhs_second(x, v, M, family, c, beta, tab_x, tab_y, normalized):
    _, W = coupling(x, M, family, c, beta, tab_x, tab_y, normalized)
    dv = v[None, :, :] - v[:, None, :]
    return v.copy(), np.einsum("ij,ijk->ik", W, dv)


def integrate_first(x0, times, seg_index, M_stack, family, c, beta, tab_x, tab_y, normalized):
    """Classical RK4 over ``times``; step k uses ``M_stack[seg_index[k]]``.

    Returns ``(X, bad)`` with ``bad`` the first step yielding a non-finite
    state, or -1.
    """
    K = times.shape[0] - 1
    X = np.empty((K + 1,) + x0.shape)
    X[0] = x0
    x = x0.copy()
    args = (family, c, beta, tab_x, tab_y, normalized)
    for k in range(K):
        h = times[k + 1] - times[k]
        M = M_stack[seg_index[k]]
        k1 = rhs_first(x, M, *args)
        k2 = rhs_first(x + 0.5 * h * k1, M, *args)
        k3 = rhs_first(x + 0.5 * h * k2, M, *args)
        k4 = rhs_first(x + h * k3, M, *args)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            return X[: k + 1], k
        X[k + 1] = x
    return X, -1


def integrate_second(x0, v0, times, seg_index, M_stack, family, c, beta, tab_x, tab_y, normalized):
    K = times.shape[0] - 1
    X = np.empty((K + 1,) + x0.shape)
    V = np.empty_like(X)
    X[0], V[0] = x0, v0
    x, v = x0.copy(), v0.copy()
    args = (family, c, beta, tab_x, tab_y, normalized)
    for k in range(K):
        h = times[k + 1] - times[k]
        M = M_stack[seg_index[k]]
        a1, b1 = rhs_second(x, v, M, *args)
        a2, b2 = rhs_second(x + 0.5 * h * a1, v + 0.5 * h * b1, M, *args)
        a3, b3 = rhs_second(x + 0.5 * h * a2, v + 0.5 * h * b2, M, *args)
        a4, b4 = rhs_second(x + h * a3, v + h * b3, M, *args)
        x = x + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        v = v + (h / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            return X[: k + 1], V[: k + 1], k
        X[k + 1], V[k + 1] = x, v
    return X, V, -1
