"""Detectors: brute-force ML, MMSE + nearest codeword, and the two
message-passing detectors (direct-model and Gram-domain).

Hard decisions are codeword indices per user; ``hard_bits`` demaps them.
All argmin/argmax ties resolve to the lowest codebook index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import get_kernels
from .modulation import GsmCodebook

__all__ = [
    "DetectorParams",
    "SoftOutput",
    "GramModel",
    "ml_detect",
    "mmse_detect",
    "mpgsm_detect",
    "gram_model",
    "chemp_detect",
    "hard_bits",
]


@dataclass(frozen=True)
class DetectorParams:
    """Damping, iteration cap, and convergence threshold for the
    message-passing detectors.  New messages get weight (1 - damping)."""

    damping: float = 0.3
    max_iters: int = 8
    epsilon: float = 1e-3

    def __post_init__(self):
        if not 0.0 <= self.damping <= 1.0:
            raise ValueError("damping must lie in [0, 1]")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must be small and non-negative")


MPGSM_DEFAULTS = DetectorParams(damping=0.3, max_iters=8, epsilon=1e-3)
CHEMP_DEFAULTS = DetectorParams(damping=0.3, max_iters=10, epsilon=1e-3)


@dataclass
class SoftOutput:
    """Per-user probability vectors over the codebook."""

    probs: np.ndarray  # (K, codebook size)
    iterations_used: int
    norm_deviation: float

    def to_json(self) -> str:
        """Debug export: final-iteration posteriors, one list per user."""
        import json

        return json.dumps({
            "iterations_used": self.iterations_used,
            "norm_deviation": self.norm_deviation,
            "probs": [[float(p) for p in row] for row in self.probs],
        })


@dataclass(frozen=True)
class GramModel:
    """Matched-filtered observation model z = Jx + v."""

    z: np.ndarray        # (K*n_t,)
    J: np.ndarray        # (K*n_t, K*n_t) Hermitian PSD
    sigma_v2: float


# cached per-codebook tables, keyed on object identity
_ml_cache: dict = {}
_marginal_cache: dict = {}


def _ml_candidates(codebook: GsmCodebook, k_users: int):
    """All |codebook|^K stacked candidate vectors plus per-user digits."""
    key = (id(codebook), k_users)
    hit = _ml_cache.get(key)
    if hit is not None and hit[0] is codebook:
        return hit[1], hit[2]
    g = codebook.size**k_users
    if g > 1 << 16:
        raise ValueError("ML search space exceeds the 2^16 guard")
    digits = np.empty((g, k_users), dtype=np.int64)
    t = np.arange(g)
    for k in range(k_users - 1, -1, -1):
        digits[:, k] = t % codebook.size
        t = t // codebook.size
    n_t = codebook.n_t
    x = np.empty((g, k_users * n_t), dtype=np.complex128)
    for k in range(k_users):
        x[:, k * n_t:(k + 1) * n_t] = codebook.vectors[digits[:, k]]
    _ml_cache[key] = (codebook, x, digits)
    return x, digits


def ml_detect(y: np.ndarray, H: np.ndarray, codebook: GsmCodebook, k_users: int) -> np.ndarray:
    """Exact argmin of ||y - Hx||^2 over the K-user signal set."""
    x, digits = _ml_candidates(codebook, k_users)
    resid = y[None, :] - x @ H.T  # (G, N)
    best = int(np.argmin(np.einsum("gi,gi->g", resid.real, resid.real)
                         + np.einsum("gi,gi->g", resid.imag, resid.imag)))
    return digits[best].copy()


def mmse_detect(y: np.ndarray, H: np.ndarray, sigma2: float, codebook: GsmCodebook,
                k_users: int) -> np.ndarray:
    """(H^H H + (sigma2/E_s) I)^{-1} H^H y, then per-user nearest codeword.

    E_s is the average active-symbol energy of the alphabet.
    """
    n_cols = H.shape[1]
    gram = H.conj().T @ H
    reg = sigma2 / codebook.alphabet.avg_energy
    try:
        x_lin = np.linalg.solve(gram + reg * np.eye(n_cols), H.conj().T @ y)
    except np.linalg.LinAlgError as exc:
        raise ValueError("regularized MMSE matrix is singular "
                         "(sigma2 = 0 with rank-deficient H)") from exc
    return nearest_codewords(x_lin, codebook, k_users)


def nearest_codewords(x_lin: np.ndarray, codebook: GsmCodebook, k_users: int) -> np.ndarray:
    """Per-user argmin ||x_k - s||^2 over the codebook."""
    n_t = codebook.n_t
    out = np.empty(k_users, dtype=np.int64)
    for k in range(k_users):
        d = np.abs(x_lin[k * n_t:(k + 1) * n_t][None, :] - codebook.vectors) ** 2
        out[k] = int(np.argmin(d.sum(axis=1)))
    return out


def _contribution_tensor(H: np.ndarray, codebook: GsmCodebook, k_users: int):
    """G[i, j, s] = h_{i,[j]} @ s for every codeword s."""
    n_rx = H.shape[0]
    h = np.ascontiguousarray(H.reshape(n_rx, k_users, codebook.n_t))
    G = np.einsum("ijl,sl->ijs", h, codebook.vectors)
    return np.ascontiguousarray(G), np.ascontiguousarray(np.abs(G) ** 2)


def mpgsm_detect(y: np.ndarray, H: np.ndarray, sigma2: float, codebook: GsmCodebook,
                 k_users: int, params: DetectorParams = MPGSM_DEFAULTS,
                 backend: str | None = None):
    """Message passing on the fully connected (observation x user) factor
    graph, with damped extrinsic edge messages.

    Returns (SoftOutput, hard decision indices); the hard decision is the
    argmax of the final-iteration posteriors.
    """
    if not 0.0 < params.damping <= 1.0:
        raise ValueError("direct-model damping must lie in (0, 1]")
    kern = get_kernels(backend)
    G, G2 = _contribution_tensor(H, codebook, k_users)
    posts, iters, dev = kern.mpgsm_iterations(
        G, G2, np.ascontiguousarray(y, dtype=np.complex128), float(sigma2),
        float(params.damping), int(params.max_iters), float(params.epsilon))
    soft = SoftOutput(posts, int(iters), float(dev))
    return soft, np.argmax(posts, axis=1)


def gram_model(y: np.ndarray, H: np.ndarray, sigma2: float) -> GramModel:
    """z = H^H y / N, J = H^H H / N, noise variance sigma2 / N."""
    n_rx = H.shape[0]
    return GramModel(H.conj().T @ y / n_rx, H.conj().T @ H / n_rx, sigma2 / n_rx)


def _marginal_tables(codebook: GsmCodebook):
    key = id(codebook)
    hit = _marginal_cache.get(key)
    if hit is not None and hit[0] is codebook:
        return hit[1], hit[2]
    pat_onehot = np.zeros((codebook.size, codebook.pattern_set.size))
    pat_onehot[np.arange(codebook.size), codebook.pattern_idx] = 1.0
    sym_onehot = np.zeros((codebook.n_rf, codebook.size, codebook.alphabet.order))
    for l in range(codebook.n_rf):
        sym_onehot[l, np.arange(codebook.size), codebook.symbol_idx[:, l]] = 1.0
    _marginal_cache[key] = (codebook, pat_onehot, sym_onehot)
    return pat_onehot, sym_onehot


def chemp_detect(gram: GramModel, codebook: GsmCodebook, k_users: int,
                 params: DetectorParams = CHEMP_DEFAULTS, backend: str | None = None):
    """Gram-domain message passing exploiting channel hardening.

    Hard outputs marginalize the final posteriors: the activation pattern
    and each modulation symbol are decided separately, then recomposed into
    a codeword (always valid, since they are independent label coordinates).
    """
    if not 0.0 <= params.damping < 1.0:
        raise ValueError("Gram-domain damping must lie in [0, 1)")
    kern = get_kernels(backend)
    n_t = codebook.n_t
    z = np.ascontiguousarray(gram.z.reshape(k_users, n_t))
    j_blocks = np.ascontiguousarray(
        gram.J.reshape(k_users, n_t, k_users, n_t).transpose(0, 2, 1, 3))
    s_outer = np.ascontiguousarray(
        codebook.vectors[:, :, None] * codebook.vectors.conj()[:, None, :])
    posts, iters, dev = kern.chemp_iterations(
        z, j_blocks, float(gram.sigma_v2), np.ascontiguousarray(codebook.vectors),
        s_outer, float(params.damping), int(params.max_iters), float(params.epsilon))
    soft = SoftOutput(posts, int(iters), float(dev))
    pat_onehot, sym_onehot = _marginal_tables(codebook)
    pat_hat = np.argmax(posts @ pat_onehot, axis=1)               # (K,)
    sym_marg = np.einsum("ks,lsa->kla", posts, sym_onehot)        # (K, n_rf, A)
    sym_hat = np.argmax(sym_marg, axis=2)
    hard = np.empty(k_users, dtype=np.int64)
    for k in range(k_users):
        codes = [codebook.alphabet.label_int(int(i)) for i in sym_hat[k]]
        hard[k] = codebook.index_of(int(pat_hat[k]), codes)
    return soft, hard


def hard_bits(indices: np.ndarray, codebook: GsmCodebook) -> np.ndarray:
    """Demap per-user codeword indices to their bit labels, shape (K, bpcu)."""
    return codebook.bit_labels[np.asarray(indices, dtype=np.int64)].copy()
