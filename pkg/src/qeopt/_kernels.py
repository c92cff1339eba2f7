"""Compiled inner loops for the statevector emulator and tabu search."""

from __future__ import annotations

import numba
import numpy as np

_jit = numba.njit(cache=True, nogil=True)
_fast = numba.njit(cache=True, nogil=True, fastmath=True)


@_jit
def apply_phase(psi, energies, gamma):
    for k in range(psi.shape[0]):
        a = gamma * energies[k]
        psi[k] *= complex(np.cos(a), np.sin(a))


@_jit
def apply_phase_levels(psi, index, levels, gamma):
    """Phase layer for diagonals with few distinct values (table lookup)."""
    ph = np.exp(1j * gamma * levels)
    for k in range(psi.shape[0]):
        psi[k] *= ph[index[k]]


@_fast
def apply_mixer(psi, n, beta):
    """exp(i beta X) on every qubit, two qubits per memory sweep."""
    c = np.cos(beta)
    s = np.sin(beta)
    cc = c * c
    ss = -s * s
    cs = 1j * c * s
    size = psi.shape[0]
    j = 0
    while j + 1 < n:
        a1 = 1 << j
        a2 = a1 << 1
        for base in range(0, size, 2 * a2):
            for k0 in range(base, base + a1):
                k1 = k0 + a1
                k2 = k0 + a2
                k3 = k1 + a2
                x0 = psi[k0]
                x1 = psi[k1]
                x2 = psi[k2]
                x3 = psi[k3]
                psi[k0] = cc * x0 + cs * (x1 + x2) + ss * x3
                psi[k1] = cc * x1 + cs * (x0 + x3) + ss * x2
                psi[k2] = cc * x2 + cs * (x0 + x3) + ss * x1
                psi[k3] = cc * x3 + cs * (x1 + x2) + ss * x0
        j += 2
    if j < n:
        st = 1 << j
        si = 1j * s
        for base in range(0, size, 2 * st):
            for k in range(base, base + st):
                a = psi[k]
                b = psi[k + st]
                psi[k] = c * a + si * b
                psi[k + st] = si * a + c * b


@_fast
def _im_conj(a, b):
    return a.real * b.imag - a.imag * b.real


@_fast
def mixer_overlap_imag(mu, psi, n):
    """``Im <mu| sum_j X_j |psi>``, two qubits per memory sweep."""
    acc = 0.0
    size = psi.shape[0]
    j = 0
    while j + 1 < n:
        a1 = 1 << j
        a2 = a1 << 1
        for base in range(0, size, 2 * a2):
            for k0 in range(base, base + a1):
                k1 = k0 + a1
                k2 = k0 + a2
                k3 = k1 + a2
                m0 = mu[k0]
                m1 = mu[k1]
                m2 = mu[k2]
                m3 = mu[k3]
                x0 = psi[k0]
                x1 = psi[k1]
                x2 = psi[k2]
                x3 = psi[k3]
                acc += _im_conj(m0, x1 + x2) + _im_conj(m1, x0 + x3)
                acc += _im_conj(m2, x3 + x0) + _im_conj(m3, x2 + x1)
        j += 2
    if j < n:
        st = 1 << j
        for base in range(0, size, 2 * st):
            for k in range(base, base + st):
                acc += _im_conj(mu[k], psi[k + st]) + _im_conj(mu[k + st], psi[k])
    return acc


@_fast
def cost_overlap_imag(mu, psi, energies):
    """``Im <mu| C |psi>`` for diagonal ``C``."""
    acc = 0.0
    for k in range(psi.shape[0]):
        acc += energies[k] * _im_conj(mu[k], psi[k])
    return acc


@_jit
def tabu_run(Q, lin, x, grad, state, tabu_until, order, tenures, t_end, target, hist_it, hist_cost, best_x):
    """Advance one tabu search from its saved state up to iteration ``t_end``.

    ``state`` holds ``[t, cost, best_cost, best_iter, hit_iter, n_hist]`` and is
    updated in place together with ``x``, ``grad`` (the per-variable field
    ``lin_i + 2 sum_j Q_ij x_j``), ``tabu_until`` and ``best_x``. Returns True
    once ``target`` has been reached.
    """
    n = x.shape[0]
    t = int(state[0])
    cost = state[1]
    best = state[2]
    nh = int(state[5])
    eps = 1e-9
    while t < t_end:
        if state[4] >= 0:
            break
        t += 1
        pick = -1
        pick_d = np.inf
        fall = -1
        fall_d = np.inf
        for r in range(n):
            i = order[r]
            d = (1 - 2 * x[i]) * grad[i]
            if d < fall_d:
                fall_d = d
                fall = i
            if tabu_until[i] < t or cost + d < best - eps:
                if d < pick_d:
                    pick_d = d
                    pick = i
        if pick < 0:
            pick = fall
            pick_d = fall_d
        delta = 1 - 2 * x[pick]
        x[pick] = 1 - x[pick]
        cost += pick_d
        for j in range(n):
            grad[j] += 2.0 * Q[j, pick] * delta
        tabu_until[pick] = t + tenures[(t - 1) % tenures.shape[0]]
        if cost < best - eps:
            best = cost
            state[3] = t
            for j in range(n):
                best_x[j] = x[j]
            if nh < hist_it.shape[0]:
                hist_it[nh] = t
                hist_cost[nh] = cost
                nh += 1
            if best <= target + eps:
                state[4] = t
    state[0] = t
    state[1] = cost
    state[2] = best
    state[5] = nh
    return state[4] >= 0


@_jit
def local_descent(Q, lin, x, grad):
    """Best-improvement 1-flip descent; returns the number of flips."""
    n = x.shape[0]
    flips = 0
    while True:
        pick = -1
        pick_d = -1e-12
        for i in range(n):
            d = (1 - 2 * x[i]) * grad[i]
            if d < pick_d:
                pick_d = d
                pick = i
        if pick < 0:
            return flips
        delta = 1 - 2 * x[pick]
        x[pick] = 1 - x[pick]
        for j in range(n):
            grad[j] += 2.0 * Q[j, pick] * delta
        flips += 1
