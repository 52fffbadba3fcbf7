"""Reference implementations used only by the tests.

They share no code with the package and favour obviousness over speed.
"""

import math
from decimal import Decimal

import numpy as np
import numba


@numba.njit(cache=True)
def cd_lasso(X, y, lam, tol=1e-12, max_sweeps=10_000_000):
    """Cyclic coordinate descent for ``||Xw - y||^2 + lam * ||w||_1``."""
    n, d = X.shape
    G = X.T @ X
    b = X.T @ y
    w = np.zeros(d)
    Gw = np.zeros(d)
    for sweep in range(max_sweeps):
        delta = 0.0
        for j in range(d):
            if G[j, j] == 0.0:
                continue
            z = b[j] - Gw[j] + G[j, j] * w[j]
            if z > lam / 2:
                new = (z - lam / 2) / G[j, j]
            elif z < -lam / 2:
                new = (z + lam / 2) / G[j, j]
            else:
                new = 0.0
            diff = new - w[j]
            if diff != 0.0:
                for i in range(d):
                    Gw[i] += G[i, j] * diff
                w[j] = new
                if abs(diff) > delta:
                    delta = abs(diff)
        if delta < tol:
            return w
    return w


def lasso_objective(X, y, w, lam):
    r = X @ w - y
    return float(r @ r + lam * np.sum(np.abs(w)))


def lasso_kkt_residual(X, y, w, lam):
    """(worst inactive excess, worst active mismatch) of the lasso optimality conditions."""
    g = 2 * X.T @ (X @ w - y)
    nz = w != 0
    inactive = float(np.max(np.abs(g[~nz]) - lam, initial=-np.inf))
    active = float(np.max(np.abs(g[nz] + lam * np.sign(w[nz])), initial=0.0))
    return inactive, active


def psi_by_hand(scores):
    """exp(sum (x - mean)^2 / (2 * population variance)), 1 when unanimous."""
    n = len(scores)
    mu = sum(scores) / n
    ss = sum((x - mu) ** 2 for x in scores)
    var = ss / n
    return 1.0 if var == 0 else math.exp(ss / (2 * var))


def decimal_within(pred, truth, threshold):
    """Exact decimal count of |pred - truth| <= threshold."""
    hits = sum(
        abs(Decimal(str(p)) - Decimal(str(t))) <= Decimal(str(threshold)) for p, t in zip(pred, truth)
    )
    return hits / len(pred)


def central_difference_grad(f, W, h=1e-5):
    G = np.zeros_like(W)
    for idx in np.ndindex(W.shape):
        E = np.zeros_like(W)
        E[idx] = h
        G[idx] = (f(W + E) - f(W - E)) / (2 * h)
    return G


def laplacian_by_degree(M, edges):
    """Degree matrix minus adjacency."""
    L = np.zeros((M, M))
    for a, b in edges:
        L[a, a] += 1
        L[b, b] += 1
        L[a, b] -= 1
        L[b, a] -= 1
    return L
