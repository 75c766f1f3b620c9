"""Cyclic-prefixed single-carrier transmission over frequency-selective
channels: framing, block-circulant channel construction, and the unitary
block-DFT that turns it into Q parallel flat subchannels.

With a cyclic prefix of L-1 transmit vectors, the time-domain frame channel
is block circulant, so (F (x) I_N) H' (F^H (x) I_{K n_t}) is block diagonal
with blocks D_q = sum_l H^(l) exp(-2 pi i q l / Q).  The equivalent model
z' = Hbar x' + w' keeps white noise because the transform is unitary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SelectiveChannel, complex_gaussian

__all__ = [
    "CpscFrameConfig",
    "EquivalentModel",
    "CpscFrame",
    "build_block_circulant",
    "dft_diagonalize",
    "equivalent_model",
    "equivalent_channel_matrix",
    "cpsc_frame_roundtrip",
]


@dataclass(frozen=True)
class CpscFrameConfig:
    """CPSC frame geometry: Q data vectors per block, I blocks per frame,
    L multipath taps, cyclic prefix of L-1 vectors."""

    q_vectors: int
    data_blocks: int
    n_taps: int
    pilot_power: float = 1.0

    def __post_init__(self):
        if self.q_vectors < self.n_taps:
            raise ValueError("need Q >= L")
        if self.data_blocks < 1 or self.n_taps < 1:
            raise ValueError("need I >= 1 and L >= 1")

    @property
    def cp_len(self) -> int:
        return self.n_taps - 1

    def frame_channel_uses(self, k_users: int, n_t: int) -> int:
        q, i, l = self.q_vectors, self.data_blocks, self.n_taps
        return (k_users * n_t + 1) * l + (q + l - 1) * i - 1


@dataclass(frozen=True)
class EquivalentModel:
    """Frequency-domain observation z' and the Q diagonal blocks D_q."""

    z_prime: np.ndarray   # (N*Q,)
    d_blocks: np.ndarray  # (Q, N, K*n_t)
    sigma2: float         # per-entry noise power, unchanged by the transform


@dataclass(frozen=True)
class CpscFrame:
    """One received CPSC frame after CP stripping, plus the ground truth."""

    y_pilot: np.ndarray       # (N, K*n_t*L) pilot-phase observation
    y_blocks: np.ndarray      # (I, Q, N) data observations
    tx_indices: np.ndarray    # (I, Q, K) transmitted codeword indices
    x_blocks: np.ndarray      # (I, Q, K*n_t) transmitted vectors


def build_block_circulant(channel: SelectiveChannel, q_vectors: int) -> np.ndarray:
    """H' of shape (N*Q, K*n_t*Q): block (t, t') = H^((t - t') mod Q)."""
    n_taps, n_rx, cols = channel.taps.shape
    if q_vectors < n_taps:
        raise ValueError("need Q >= L")
    out = np.zeros((n_rx * q_vectors, cols * q_vectors), dtype=np.complex128)
    for t in range(q_vectors):
        for l in range(n_taps):
            tp = (t - l) % q_vectors
            out[t * n_rx:(t + 1) * n_rx, tp * cols:(tp + 1) * cols] = channel.taps[l]
    return out


def dft_diagonalize(channel: SelectiveChannel, q_vectors: int) -> np.ndarray:
    """D_q = the q-th DFT bin of the zero-padded tap sequence, per entry."""
    if q_vectors < channel.n_taps:
        raise ValueError("need Q >= L")
    padded = np.zeros((q_vectors,) + channel.taps.shape[1:], dtype=np.complex128)
    padded[:channel.n_taps] = channel.taps
    return np.fft.fft(padded, axis=0)


def equivalent_channel_matrix(d_blocks: np.ndarray) -> np.ndarray:
    """Dense Hbar = blockdiag(D) (F (x) I_cols) with unitary F."""
    q_vectors, n_rx, cols = d_blocks.shape
    f = np.fft.fft(np.eye(q_vectors), axis=1) / np.sqrt(q_vectors)
    out = np.empty((n_rx * q_vectors, cols * q_vectors), dtype=np.complex128)
    for q in range(q_vectors):
        for t in range(q_vectors):
            out[q * n_rx:(q + 1) * n_rx, t * cols:(t + 1) * cols] = f[q, t] * d_blocks[q]
    return out


def equivalent_model(y_blocks: np.ndarray, channel: SelectiveChannel,
                     sigma2: float) -> EquivalentModel:
    """Unitary block DFT of one CP-stripped data block.

    y_blocks has shape (Q, N); z' stacks the Q transformed vectors.
    """
    q_vectors = y_blocks.shape[0]
    z = np.fft.fft(y_blocks, axis=0) / np.sqrt(q_vectors)
    return EquivalentModel(z.reshape(-1), dft_diagonalize(channel, q_vectors), sigma2)


def cpsc_frame_roundtrip(tx_indices: np.ndarray, codebook, config: CpscFrameConfig,
                         channel: SelectiveChannel, sigma2: float,
                         rng: np.random.Generator) -> CpscFrame:
    """Simulate one frame end to end through the tap convolution.

    ``tx_indices`` has shape (I, Q, K): the codeword index of each user in
    each channel use of each data block.  The frame is one pilot block
    (L-1 zero guard + impulse pilots) followed by I data blocks, each a
    CP of the block's last L-1 vectors plus its Q data vectors.  Returns
    the CP-stripped observations.
    """
    n_taps, n_rx, cols = channel.taps.shape
    q_vec, n_blocks = config.q_vectors, config.data_blocks
    if config.n_taps != n_taps:
        raise ValueError("config n_taps does not match the channel")
    if tx_indices.shape[:2] != (n_blocks, q_vec):
        raise ValueError("tx_indices must have shape (I, Q, K)")
    k_users = tx_indices.shape[2]
    n_t = cols // k_users

    x_blocks = np.zeros((n_blocks, q_vec, cols), dtype=np.complex128)
    for i in range(n_blocks):
        for t in range(q_vec):
            for k in range(k_users):
                x_blocks[i, t, k * n_t:(k + 1) * n_t] = codebook.vectors[tx_indices[i, t, k]]

    # frame timeline of transmit vectors
    pilot_len = (n_taps - 1) + cols * n_taps
    block_len = q_vec + config.cp_len
    total = pilot_len + n_blocks * block_len
    x_seq = np.zeros((total, cols), dtype=np.complex128)
    for kappa in range(cols):
        x_seq[(n_taps - 1) + kappa * n_taps, kappa] = np.sqrt(config.pilot_power)
    for i in range(n_blocks):
        start = pilot_len + i * block_len
        if config.cp_len:
            x_seq[start:start + config.cp_len] = x_blocks[i, q_vec - config.cp_len:]
        x_seq[start + config.cp_len:start + block_len] = x_blocks[i]

    y_seq = np.zeros((total, n_rx), dtype=np.complex128)
    for l in range(n_taps):
        contrib = x_seq[:total - l] @ channel.taps[l].T
        y_seq[l:] += contrib
    if sigma2 > 0:
        y_seq += complex_gaussian(rng, y_seq.shape, sigma2)

    y_pilot = y_seq[n_taps - 1:pilot_len].T.copy()  # (N, K*n_t*L)
    y_blocks = np.empty((n_blocks, q_vec, n_rx), dtype=np.complex128)
    for i in range(n_blocks):
        start = pilot_len + i * block_len + config.cp_len
        y_blocks[i] = y_seq[start:start + q_vec]
    return CpscFrame(y_pilot, y_blocks, tx_indices.copy(), x_blocks)
