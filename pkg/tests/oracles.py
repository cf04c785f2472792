"""Independent reference computations used only by the tests."""

import math

import numpy as np


def normal_cdf(x):
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def bisect_quantile(coverage, tol=1e-13):
    """Two-sided z with P(|Z| <= z) = coverage, by bisection on erf."""
    lo, hi = 0.0, 40.0
    target = 0.5 + 0.5 * coverage
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if normal_cdf(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def dense_jackknife(H, r, gamma):
    """Sandwich covariance built entry by entry with explicit loops."""
    N, L = H.shape
    P = np.linalg.inv(H.T @ H + gamma * np.eye(L))
    M = np.zeros((L, L))
    for i in range(N):
        h = H[i]
        lev = 0.0
        for a in range(L):
            for b in range(L):
                lev += h[a] * P[a, b] * h[b]
        w = r[i] ** 2 / (1.0 - lev)
        for a in range(L):
            for b in range(L):
                M[a, b] += w * h[a] * h[b]
    return P @ M @ P, P


def dense_quadratic_diag(H, sigma):
    return np.diag(H @ sigma @ H.T)
