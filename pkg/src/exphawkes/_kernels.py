"""Compiled inner loops shared by the likelihood, compensator, and Volterra code.

Every function takes plain float64 arrays so the callers own all validation.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def loglik(times, horizon, mu, alpha, beta):
    """O(n*P) log-likelihood via the per-term excitation recursion."""
    n = times.shape[0]
    n_terms = alpha.shape[0]
    total = -mu * horizon
    for m in range(n_terms):
        acc = 0.0
        for i in range(n):
            acc += 1.0 - np.exp(-beta[m] * (horizon - times[i]))
        total -= alpha[m] / beta[m] * acc
    excite = np.zeros(n_terms)
    for k in range(n):
        if k > 0:
            dt = times[k] - times[k - 1]
            for m in range(n_terms):
                excite[m] = (1.0 + excite[m]) * np.exp(-beta[m] * dt)
        lam = mu
        for m in range(n_terms):
            lam += alpha[m] * excite[m]
        total += np.log(lam)
    return total


@njit(cache=True)
def loglik_grad(times, horizon, mu, alpha, beta):
    """Log-likelihood and its gradient w.r.t. (mu, alpha_1..P, beta_1..P)."""
    n = times.shape[0]
    n_terms = alpha.shape[0]
    grad = np.zeros(1 + 2 * n_terms)
    total = -mu * horizon
    grad[0] = -horizon
    for m in range(n_terms):
        acc = 0.0
        acc_d = 0.0
        for i in range(n):
            u = horizon - times[i]
            e = np.exp(-beta[m] * u)
            acc += 1.0 - e
            acc_d += u * e
        total -= alpha[m] / beta[m] * acc
        grad[1 + m] -= acc / beta[m]
        grad[1 + n_terms + m] += alpha[m] * acc / beta[m] ** 2 - alpha[m] / beta[m] * acc_d
    excite = np.zeros(n_terms)
    dexcite = np.zeros(n_terms)
    for k in range(n):
        if k > 0:
            dt = times[k] - times[k - 1]
            for m in range(n_terms):
                e = np.exp(-beta[m] * dt)
                dexcite[m] = (dexcite[m] - dt * (1.0 + excite[m])) * e
                excite[m] = (1.0 + excite[m]) * e
        lam = mu
        for m in range(n_terms):
            lam += alpha[m] * excite[m]
        total += np.log(lam)
        inv = 1.0 / lam
        grad[0] += inv
        for m in range(n_terms):
            grad[1 + m] += excite[m] * inv
            grad[1 + n_terms + m] += alpha[m] * dexcite[m] * inv
    return total, grad


@njit(cache=True)
def compensators_at_events(times, mu, alpha, beta):
    """Integrated intensity evaluated at every event time."""
    n = times.shape[0]
    n_terms = alpha.shape[0]
    out = np.empty(n)
    excite = np.zeros(n_terms)
    for k in range(n):
        if k > 0:
            dt = times[k] - times[k - 1]
            for m in range(n_terms):
                excite[m] = (1.0 + excite[m]) * np.exp(-beta[m] * dt)
        value = mu * times[k]
        for m in range(n_terms):
            value += alpha[m] / beta[m] * (k - excite[m])
        out[k] = value
    return out


@njit(cache=True)
def volterra_product(mu, alpha, left_weight, right_weight, decay, n_nodes):
    """Second-kind Volterra solve for the mean intensity on a uniform grid.

    Trapezoidal product integration: per step the exponential kernel is
    integrated exactly against the piecewise-linear interpolant, with
    per-term weights precomputed by the caller. The exponential kernel makes
    each step O(P) via decaying partial sums. Caller guarantees
    1 - sum(alpha * right_weight) > 0.
    """
    n_terms = alpha.shape[0]
    phi = np.empty(n_nodes)
    phi[0] = mu
    denom = 1.0
    for m in range(n_terms):
        denom -= alpha[m] * right_weight[m]
    conv = np.zeros(n_terms)
    for j in range(1, n_nodes):
        rhs = mu
        for m in range(n_terms):
            conv[m] = decay[m] * conv[m] + phi[j - 1] * left_weight[m]
            rhs += alpha[m] * conv[m]
        value = rhs / denom
        phi[j] = value
        for m in range(n_terms):
            conv[m] += value * right_weight[m]
    return phi
