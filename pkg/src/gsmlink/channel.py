"""Rayleigh channel and noise generation, and the forward model y = Hx + n.

All sampling is a pure function of (dimensions, parameters, seed).  Streams
are derived from a counter-style id (experiment seed, trial index, role tag)
so Monte Carlo trials are reproducible and order-independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ROLE_BITS",
    "ROLE_CHANNEL",
    "ROLE_NOISE",
    "ROLE_PILOT_NOISE",
    "stream",
    "FlatChannel",
    "SelectiveChannel",
    "NoiseModel",
    "sample_flat",
    "transmit_flat",
    "sample_selective",
    "delay_profile",
    "snr_to_sigma2",
    "complex_gaussian",
]

ROLE_BITS = 0
ROLE_CHANNEL = 1
ROLE_NOISE = 2
ROLE_PILOT_NOISE = 3


def stream(*key: int) -> np.random.Generator:
    """Named RNG stream for a counter-style id such as
    (experiment seed, grid point, trial batch, role tag)."""
    return np.random.default_rng(np.random.SeedSequence(tuple(int(k) for k in key)))


def complex_gaussian(rng: np.random.Generator, shape, var: float = 1.0) -> np.ndarray:
    """CN(0, var) samples: var/2 per real dimension."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


@dataclass(frozen=True)
class FlatChannel:
    """Flat-fading gain matrix, shape (N, K*n_t), with per-column variances."""

    gains: np.ndarray
    column_vars: np.ndarray

    @property
    def n_rx(self) -> int:
        return self.gains.shape[0]


@dataclass(frozen=True)
class SelectiveChannel:
    """L tap matrices H^(l) of shape (N, K*n_t) with power-delay profile."""

    taps: np.ndarray      # (L, N, K*n_t)
    profile: np.ndarray   # (L,) tap powers, sums to 1
    decay_db: float

    @property
    def n_taps(self) -> int:
        return self.taps.shape[0]

    @property
    def n_rx(self) -> int:
        return self.taps.shape[1]


@dataclass(frozen=True)
class NoiseModel:
    """Per-receive-antenna complex noise power: E|n_i|^2 = sigma2."""

    sigma2: float

    def sample(self, rng: np.random.Generator, shape) -> np.ndarray:
        return complex_gaussian(rng, shape, self.sigma2)


def sample_flat(n_rx: int, k_users: int, n_t: int, column_vars=None,
                rng: np.random.Generator | None = None, seed: int | None = None) -> FlatChannel:
    """i.i.d. complex Gaussian gains scaled per column.

    column_vars defaults to all ones (perfect power control); otherwise it
    must sum to K*n_t.
    """
    cols = k_users * n_t
    if column_vars is None:
        column_vars = np.ones(cols)
    else:
        column_vars = np.asarray(column_vars, dtype=np.float64)
        if column_vars.shape != (cols,) or np.any(column_vars <= 0):
            raise ValueError("column_vars must be positive with length K*n_t")
        if not np.isclose(column_vars.sum(), cols, rtol=1e-9):
            raise ValueError("column variances must sum to K*n_t")
    if rng is None:
        rng = stream(seed if seed is not None else 0, 0, ROLE_CHANNEL)
    gains = complex_gaussian(rng, (n_rx, cols)) * np.sqrt(column_vars)
    return FlatChannel(gains, column_vars)


def transmit_flat(channel: FlatChannel, x: np.ndarray, noise: NoiseModel,
                  rng: np.random.Generator | None = None, seed: int | None = None) -> np.ndarray:
    """y = Hx + n with CN(0, sigma2) noise entries."""
    x = np.asarray(x)
    if x.shape != (channel.gains.shape[1],):
        raise ValueError("x length must be K*n_t")
    if rng is None:
        rng = stream(seed if seed is not None else 0, 0, ROLE_NOISE)
    y = channel.gains @ x
    if noise.sigma2 > 0:
        y = y + noise.sample(rng, channel.n_rx)
    return y


def delay_profile(n_taps: int, xi_db: float) -> np.ndarray:
    """Exponential power-delay profile Omega_l = Omega_0 10^(-xi l / 10),
    normalized to unit total power."""
    if n_taps < 1 or xi_db < 0:
        raise ValueError("need L >= 1 and xi >= 0")
    raw = 10.0 ** (-xi_db * np.arange(n_taps) / 10.0)
    return raw / raw.sum()


def sample_selective(n_rx: int, k_users: int, n_t: int, n_taps: int, xi_db: float,
                     rng: np.random.Generator | None = None,
                     seed: int | None = None) -> SelectiveChannel:
    """Tap l entries are CN(0, Omega_l) with the exponential profile."""
    profile = delay_profile(n_taps, xi_db)
    if rng is None:
        rng = stream(seed if seed is not None else 0, 0, ROLE_CHANNEL)
    taps = complex_gaussian(rng, (n_taps, n_rx, k_users * n_t))
    taps *= np.sqrt(profile)[:, None, None]
    return SelectiveChannel(taps, profile, float(xi_db))


def snr_to_sigma2(snr_db: float, k_users: int, n_rf: int, avg_energy: float) -> float:
    """Noise power for a target average received SNR per receive antenna.

    Under unit channel variance the received signal power per antenna is
    K * n_rf * avg_energy, so sigma2 = that / 10^(snr_db/10).
    """
    return k_users * n_rf * avg_energy / (10.0 ** (snr_db / 10.0))
