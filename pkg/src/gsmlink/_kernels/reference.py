"""Pure-numpy implementations of the message-passing inner loops.

Reference semantics for the jit backend; selected via GSMLINK_BACKEND=numpy.
"""

from __future__ import annotations

import numpy as np

VAR_FLOOR = 1e-30  # keeps noiseless degenerate runs finite


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    m = logits.max(axis=-1, keepdims=True)
    e = np.exp(logits - m)
    return e / e.sum(axis=-1, keepdims=True)


def mpgsm_iterations(G, G2, y, sigma2, delta, max_iters, epsilon):
    """Factor-graph iterations on the direct model y = Hx + n.

    G[i, j, s] is the codeword-s contribution of user j at observation i
    (h_{i,[j]} dot s); G2 = |G|^2.  Returns the final per-user posteriors,
    the iteration count, and the worst normalization deviation seen.
    """
    n_rx, k_users, size = G.shape
    p_edge = np.full((k_users, n_rx, size), 1.0 / size)
    posts = np.full((k_users, size), 1.0 / size)
    norm_dev = 0.0
    iters = 0
    for _ in range(max_iters):
        iters += 1
        mu_t = np.einsum("jis,ijs->ij", p_edge, G)        # (N, K)
        e2_t = np.einsum("jis,ijs->ij", p_edge, G2)
        var_t = e2_t - np.abs(mu_t) ** 2
        resid = y[:, None] - (mu_t.sum(axis=1)[:, None] - mu_t)   # y_i - mu_ik
        var_ik = np.maximum((var_t.sum(axis=1)[:, None] - var_t) + sigma2, VAR_FLOOR)
        q = np.abs(resid[:, :, None] - G) ** 2 / (2.0 * var_ik[:, :, None])
        logpost = -q.sum(axis=0)                          # (K, S)
        new_posts = _softmax_rows(logpost)
        # extrinsic edge messages: add the own-observation term back, damp
        lt = logpost[:, None, :] + q.transpose(1, 0, 2)   # (K, N, S)
        p_edge = (1.0 - delta) * _softmax_rows(lt) + delta * p_edge
        norm_dev = max(
            norm_dev,
            float(np.abs(p_edge.sum(axis=-1) - 1.0).max()),
            float(np.abs(new_posts.sum(axis=-1) - 1.0).max()),
        )
        change = float(np.linalg.norm(new_posts - posts))
        posts = new_posts
        if change < epsilon:
            break
    return posts, iters, norm_dev


def chemp_iterations(z, j_blocks, sigma_v2, s_mat, s_outer, delta, max_iters, epsilon):
    """Gram-domain message passing on z = Jx + v.

    z: (K, n_t); j_blocks: (K, K, n_t, n_t); s_mat: (S, n_t) codebook
    vectors; s_outer[s] = s s^H.  Interference from all other users is
    approximated as Gaussian with a leave-one-out mean and covariance.
    """
    k_users, n_t = z.shape
    size = s_mat.shape[0]
    posts = np.full((k_users, size), 1.0 / size)
    norm_dev = 0.0
    iters = 0
    jkk_s = np.einsum("klm,sm->kls", np.stack([j_blocks[k, k] for k in range(k_users)]), s_mat)
    for _ in range(max_iters):
        iters += 1
        ex = posts @ s_mat                                     # (K, n_t)
        exx = np.einsum("ks,slm->klm", posts, s_outer)
        cov = exx - np.einsum("kl,km->klm", ex, ex.conj())
        je = np.einsum("kjlm,jm->kjl", j_blocks, ex)           # (K, K, n_t)
        mu = je.sum(axis=1) - np.einsum("kkl->kl", je)
        jc = np.einsum("kjlm,jmn,kjpn->kjlp", j_blocks, cov, j_blocks.conj())
        sig = jc.sum(axis=1) - np.einsum("kklp->klp", jc)
        sig = sig + sigma_v2 * np.eye(n_t)[None]
        logpost = np.empty((k_users, size))
        for k in range(k_users):
            sk = sig[k] + max(1e-12 * sig[k].trace().real / n_t, VAR_FLOOR) * np.eye(n_t)
            r = z[k][:, None] - jkk_s[k] - mu[k][:, None]      # (n_t, S)
            br = np.linalg.solve(sk, r)
            logpost[k] = -0.5 * np.einsum("ls,ls->s", r.conj(), br).real
        new_posts = (1.0 - delta) * _softmax_rows(logpost) + delta * posts
        norm_dev = max(norm_dev, float(np.abs(new_posts.sum(axis=-1) - 1.0).max()))
        change = float(np.linalg.norm(new_posts - posts))
        posts = new_posts
        if change < epsilon:
            break
    return posts, iters, norm_dev


def mpgsm_batch(h_r, yb, s_mat, sigma2, delta, max_iters, epsilon):
    """Batch counterpart of mpgsm_iterations returning hard decisions."""
    n_batch, n_rx, k_users, n_t = h_r.shape
    hard = np.empty((n_batch, k_users), dtype=np.int64)
    dev = np.empty(n_batch)
    for b in range(n_batch):
        G = np.einsum("ikl,sl->iks", h_r[b], s_mat)
        posts, _, d = mpgsm_iterations(G, np.abs(G) ** 2, yb[b], sigma2,
                                       delta, max_iters, epsilon)
        hard[b] = np.argmax(posts, axis=1)
        dev[b] = d
    return hard, dev


def chemp_batch(zb, jb, sigma_v2, s_mat, s_outer, pattern_idx, symbol_idx,
                label_int, n_patterns, m_bits, delta, max_iters, epsilon):
    """Batch CHEMP with marginal pattern/symbol hard decisions."""
    n_batch, k_users, _ = zb.shape
    size, n_rf = symbol_idx.shape
    hard = np.empty((n_batch, k_users), dtype=np.int64)
    dev = np.empty(n_batch)
    pat_onehot = np.zeros((size, n_patterns))
    pat_onehot[np.arange(size), pattern_idx] = 1.0
    sym_onehot = np.zeros((n_rf, size, len(label_int)))
    for l in range(n_rf):
        sym_onehot[l, np.arange(size), symbol_idx[:, l]] = 1.0
    for b in range(n_batch):
        posts, _, d = chemp_iterations(zb[b], jb[b], sigma_v2, s_mat, s_outer,
                                       delta, max_iters, epsilon)
        pat_hat = np.argmax(posts @ pat_onehot, axis=1)
        sym_marg = np.einsum("ks,lsa->kla", posts, sym_onehot)
        sym_hat = np.argmax(sym_marg, axis=2)
        for k in range(k_users):
            idx = int(pat_hat[k])
            for l in range(n_rf):
                idx = (idx << m_bits) | int(label_int[sym_hat[k, l]])
            hard[b, k] = idx
        dev[b] = d
    return hard, dev
