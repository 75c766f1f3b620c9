"""Numba-compiled message-passing inner loops (same contracts as reference).

Small matrix products are hand-rolled: at n_t <= 8 the BLAS call overhead
dominates the arithmetic.  Batch entry points parallelize over trials with
per-trial output slots, so results are identical for any thread count.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit, prange

from .reference import VAR_FLOOR


@njit(cache=True, nogil=True, fastmath=True)
def mpgsm_iterations(G, G2, y, sigma2, delta, max_iters, epsilon):
    n_rx, k_users, size = G.shape
    p_edge = np.full((k_users, n_rx, size), 1.0 / size)
    posts = np.full((k_users, size), 1.0 / size)
    new_posts = np.empty((k_users, size))
    mu_t = np.empty((n_rx, k_users), dtype=np.complex128)
    var_t = np.empty((n_rx, k_users))
    mu_i = np.empty(n_rx, dtype=np.complex128)
    var_i = np.empty(n_rx)
    logpost = np.empty((k_users, size))
    qk = np.empty((n_rx, size))
    lt = np.empty(size)
    norm_dev = 0.0
    iters = 0
    for _ in range(max_iters):
        iters += 1
        for i in range(n_rx):
            mi = 0.0 + 0.0j
            vi = sigma2
            for j in range(k_users):
                m = 0.0 + 0.0j
                e2 = 0.0
                for s in range(size):
                    pj = p_edge[j, i, s]
                    m += pj * G[i, j, s]
                    e2 += pj * G2[i, j, s]
                mu_t[i, j] = m
                v = e2 - (m.real * m.real + m.imag * m.imag)
                var_t[i, j] = v
                mi += m
                vi += v
            mu_i[i] = mi
            var_i[i] = vi
        change = 0.0
        for k in range(k_users):
            for s in range(size):
                logpost[k, s] = 0.0
            for i in range(n_rx):
                e = y[i] - (mu_i[i] - mu_t[i, k])
                v = var_i[i] - var_t[i, k]
                if v < VAR_FLOOR:
                    v = VAR_FLOOR
                inv2 = 0.5 / v
                for s in range(size):
                    d = e - G[i, k, s]
                    qq = (d.real * d.real + d.imag * d.imag) * inv2
                    qk[i, s] = qq
                    logpost[k, s] -= qq
            mx = -1.0e300
            for s in range(size):
                if logpost[k, s] > mx:
                    mx = logpost[k, s]
            tot = 0.0
            for s in range(size):
                new_posts[k, s] = math.exp(logpost[k, s] - mx)
                tot += new_posts[k, s]
            ssum = 0.0
            for s in range(size):
                new_posts[k, s] /= tot
                ssum += new_posts[k, s]
                diff = new_posts[k, s] - posts[k, s]
                change += diff * diff
            if abs(ssum - 1.0) > norm_dev:
                norm_dev = abs(ssum - 1.0)
            for i in range(n_rx):
                mx2 = -1.0e300
                for s in range(size):
                    lt[s] = logpost[k, s] + qk[i, s]
                    if lt[s] > mx2:
                        mx2 = lt[s]
                tot2 = 0.0
                for s in range(size):
                    lt[s] = math.exp(lt[s] - mx2)
                    tot2 += lt[s]
                esum = 0.0
                for s in range(size):
                    val = (1.0 - delta) * lt[s] / tot2 + delta * p_edge[k, i, s]
                    p_edge[k, i, s] = val
                    esum += val
                if abs(esum - 1.0) > norm_dev:
                    norm_dev = abs(esum - 1.0)
        posts, new_posts = new_posts, posts
        if math.sqrt(change) < epsilon:
            break
    return posts.copy(), iters, norm_dev


@njit(cache=True, nogil=True, fastmath=True)
def chemp_iterations(z, j_blocks, sigma_v2, s_mat, s_outer, delta, max_iters, epsilon):
    k_users, n_t = z.shape
    size = s_mat.shape[0]
    posts = np.full((k_users, size), 1.0 / size)
    jkk_s = np.empty((k_users, n_t, size), dtype=np.complex128)
    for k in range(k_users):
        for l in range(n_t):
            for s in range(size):
                acc = 0.0 + 0.0j
                for m in range(n_t):
                    acc += j_blocks[k, k, l, m] * s_mat[s, m]
                jkk_s[k, l, s] = acc
    ex = np.empty((k_users, n_t), dtype=np.complex128)
    cov = np.empty((k_users, n_t, n_t), dtype=np.complex128)
    tmp = np.empty((n_t, n_t), dtype=np.complex128)
    logpost = np.empty(size)
    norm_dev = 0.0
    iters = 0
    for _ in range(max_iters):
        iters += 1
        for j in range(k_users):
            for l in range(n_t):
                acc = 0.0 + 0.0j
                for s in range(size):
                    acc += posts[j, s] * s_mat[s, l]
                ex[j, l] = acc
            for l in range(n_t):
                for m in range(n_t):
                    acc = 0.0 + 0.0j
                    for s in range(size):
                        acc += posts[j, s] * s_outer[s, l, m]
                    cov[j, l, m] = acc - ex[j, l] * np.conj(ex[j, m])
        change = 0.0
        for k in range(k_users):
            mu = np.zeros(n_t, dtype=np.complex128)
            sig = np.zeros((n_t, n_t), dtype=np.complex128)
            for j in range(k_users):
                if j == k:
                    continue
                for l in range(n_t):
                    acc = 0.0 + 0.0j
                    for m in range(n_t):
                        acc += j_blocks[k, j, l, m] * ex[j, m]
                    mu[l] += acc
                for l in range(n_t):
                    for m in range(n_t):
                        acc = 0.0 + 0.0j
                        for n in range(n_t):
                            acc += j_blocks[k, j, l, n] * cov[j, n, m]
                        tmp[l, m] = acc
                for l in range(n_t):
                    for p in range(n_t):
                        acc = 0.0 + 0.0j
                        for m in range(n_t):
                            acc += tmp[l, m] * np.conj(j_blocks[k, j, p, m])
                        sig[l, p] += acc
            tr = 0.0
            for l in range(n_t):
                sig[l, l] += sigma_v2
                tr += sig[l, l].real
            ridge = 1e-12 * tr / n_t
            if ridge < VAR_FLOOR:
                ridge = VAR_FLOOR
            for l in range(n_t):
                sig[l, l] += ridge
            r = np.empty((n_t, size), dtype=np.complex128)
            for s in range(size):
                for l in range(n_t):
                    r[l, s] = z[k, l] - jkk_s[k, l, s] - mu[l]
            br = np.linalg.solve(sig, r)
            mx = -1.0e300
            for s in range(size):
                acc = 0.0
                for l in range(n_t):
                    acc += (np.conj(r[l, s]) * br[l, s]).real
                logpost[s] = -0.5 * acc
                if logpost[s] > mx:
                    mx = logpost[s]
            tot = 0.0
            for s in range(size):
                logpost[s] = math.exp(logpost[s] - mx)
                tot += logpost[s]
            ssum = 0.0
            for s in range(size):
                val = (1.0 - delta) * logpost[s] / tot + delta * posts[k, s]
                diff = val - posts[k, s]
                change += diff * diff
                posts[k, s] = val
                ssum += val
            if abs(ssum - 1.0) > norm_dev:
                norm_dev = abs(ssum - 1.0)
        if math.sqrt(change) < epsilon:
            break
    return posts, iters, norm_dev


@njit(cache=True, nogil=True, parallel=True, fastmath=True)
def mpgsm_batch(h_r, yb, s_mat, sigma2, delta, max_iters, epsilon):
    """Detect a batch of trials; h_r is (B, N, K, n_t), yb is (B, N).

    Returns per-trial hard decisions (B, K) and normalization deviations.
    """
    n_batch, n_rx, k_users, n_t = h_r.shape
    size = s_mat.shape[0]
    hard = np.empty((n_batch, k_users), dtype=np.int64)
    dev = np.empty(n_batch)
    for b in prange(n_batch):
        G = np.empty((n_rx, k_users, size), dtype=np.complex128)
        G2 = np.empty((n_rx, k_users, size))
        for i in range(n_rx):
            for k in range(k_users):
                for s in range(size):
                    acc = 0.0 + 0.0j
                    for l in range(n_t):
                        acc += h_r[b, i, k, l] * s_mat[s, l]
                    G[i, k, s] = acc
                    G2[i, k, s] = acc.real * acc.real + acc.imag * acc.imag
        posts, _, d = mpgsm_iterations(G, G2, yb[b], sigma2, delta, max_iters, epsilon)
        for k in range(k_users):
            best = 0
            bv = posts[k, 0]
            for s in range(1, size):
                if posts[k, s] > bv:
                    bv = posts[k, s]
                    best = s
            hard[b, k] = best
        dev[b] = d
    return hard, dev


@njit(cache=True, nogil=True, parallel=True, fastmath=True)
def chemp_batch(zb, jb, sigma_v2, s_mat, s_outer, pattern_idx, symbol_idx,
                label_int, n_patterns, m_bits, delta, max_iters, epsilon):
    """Batch CHEMP detection on precomputed Gram models.

    Hard decisions marginalize the posteriors over the activation pattern
    and each symbol slot, then recompose the codeword index.
    """
    n_batch, k_users, n_t = zb.shape
    size, n_rf = symbol_idx.shape
    n_alpha = label_int.shape[0]
    hard = np.empty((n_batch, k_users), dtype=np.int64)
    dev = np.empty(n_batch)
    for b in prange(n_batch):
        posts, _, d = chemp_iterations(zb[b], jb[b], sigma_v2, s_mat, s_outer,
                                       delta, max_iters, epsilon)
        pm = np.empty(n_patterns)
        am = np.empty(n_alpha)
        for k in range(k_users):
            for p in range(n_patterns):
                pm[p] = 0.0
            for s in range(size):
                pm[pattern_idx[s]] += posts[k, s]
            best_p = 0
            bv = pm[0]
            for p in range(1, n_patterns):
                if pm[p] > bv:
                    bv = pm[p]
                    best_p = p
            idx = best_p
            for l in range(n_rf):
                for a in range(n_alpha):
                    am[a] = 0.0
                for s in range(size):
                    am[symbol_idx[s, l]] += posts[k, s]
                best_a = 0
                bv2 = am[0]
                for a in range(1, n_alpha):
                    if am[a] > bv2:
                        bv2 = am[a]
                        best_a = a
                idx = (idx << m_bits) | label_int[best_a]
            hard[b, k] = idx
        dev[b] = d
    return hard, dev
