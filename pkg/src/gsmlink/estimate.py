"""Pilot-based channel estimation.

Two families: conventional per-entry MMSE estimates of the gain matrix
(flat and frequency-selective), and the direct Gram-domain estimators that
feed the matched-filter detector without ever forming an explicit channel
estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import FlatChannel, SelectiveChannel, complex_gaussian

__all__ = [
    "FlatPilotObservation",
    "SelectivePilotObservation",
    "flat_pilot_phase",
    "mmse_channel_estimate_flat",
    "estimate_J",
    "estimate_z",
    "selective_pilot_phase",
    "mmse_channel_estimate_selective",
    "selective_pilot_length",
]


@dataclass(frozen=True)
class FlatPilotObservation:
    """Received pilot block Y_p = A H + W_p for the identity pilot matrix."""

    y_p: np.ndarray      # (N, K*n_t)
    amplitude: float     # A = sqrt(K * E_s)


@dataclass(frozen=True)
class SelectivePilotObservation:
    """Per-receive-antenna pilot observations of length K*n_t*L.

    The pilot layout is one sqrt(P) impulse per (user, antenna) slot of
    length L, so each tap response lands in its own slot.
    """

    y_p: np.ndarray      # (N, K*n_t*L)
    pilot_power: float
    n_taps: int


def flat_pilot_phase(channel: FlatChannel, sigma2: float, k_users: int,
                     symbol_energy: float, rng: np.random.Generator) -> FlatPilotObservation:
    """Y_p = A H + W_p with pilot amplitude A = sqrt(K * E_s)."""
    amplitude = float(np.sqrt(k_users * symbol_energy))
    y_p = amplitude * channel.gains
    if sigma2 > 0:
        y_p = y_p + complex_gaussian(rng, channel.gains.shape, sigma2)
    return FlatPilotObservation(y_p, amplitude)


def mmse_channel_estimate_flat(obs: FlatPilotObservation, sigma2: float) -> np.ndarray:
    """Per-entry linear MMSE estimate under unit channel variance:
    H_hat = A / (A^2 + sigma2) * Y_p."""
    a = obs.amplitude
    return (a / (a * a + sigma2)) * obs.y_p


def estimate_J(obs: FlatPilotObservation, sigma2: float, n_rx: int,
               full_correction: bool = False) -> np.ndarray:
    """Direct Gram-matrix estimate J_hat = Y_p^H Y_p / (N A^2) - (sigma_v^2/A^2) I.

    The printed correction subtracts sigma2/(N A^2); the pilot-noise Gram
    term actually has mean sigma2/A^2 on the diagonal, so a small positive
    bias of (1 - 1/N) sigma2/A^2 remains.  ``full_correction`` opts into
    removing all of it.
    """
    a2 = obs.amplitude**2
    j_hat = obs.y_p.conj().T @ obs.y_p / (n_rx * a2)
    corr = sigma2 / a2 if full_correction else sigma2 / (n_rx * a2)
    return j_hat - corr * np.eye(obs.y_p.shape[1])


def estimate_z(obs: FlatPilotObservation, y: np.ndarray, n_rx: int) -> np.ndarray:
    """Matched-filter observation estimate z_hat = Y_p^H y / (N A)."""
    if y.shape != (obs.y_p.shape[0],):
        raise ValueError("data-phase vector length must equal the antenna count")
    return obs.y_p.conj().T @ y / (n_rx * obs.amplitude)


def selective_pilot_length(k_users: int, n_t: int, n_taps: int) -> int:
    """Pilot block channel uses: (L - 1) guard + K*n_t*L impulse slots."""
    return (n_taps - 1) + k_users * n_t * n_taps


def selective_pilot_phase(channel: SelectiveChannel, sigma2: float, pilot_power: float,
                          rng: np.random.Generator) -> SelectivePilotObservation:
    """Receive the impulse-train pilot block through the multipath channel.

    Antenna kappa transmits sqrt(P) at slot offset kappa*L, so the i-th
    receive antenna observes sqrt(P) * [h_{i,1} ... h_{i,K n_t}] + noise,
    with h_{i,kappa} the L-tap response of that link.
    """
    n_taps, n_rx, cols = channel.taps.shape
    # taps (L, N, cols) -> per-antenna stacked responses (N, cols*L)
    h = channel.taps.transpose(1, 2, 0).reshape(n_rx, cols * n_taps)
    y_p = np.sqrt(pilot_power) * h
    if sigma2 > 0:
        y_p = y_p + complex_gaussian(rng, y_p.shape, sigma2)
    return SelectivePilotObservation(y_p, float(pilot_power), n_taps)


def mmse_channel_estimate_selective(obs: SelectivePilotObservation,
                                    sigma2: float) -> np.ndarray:
    """h_hat = sqrt(P) / (P + sigma2) * y_p, reshaped to (L, N, K*n_t)."""
    p = obs.pilot_power
    h_flat = (np.sqrt(p) / (p + sigma2)) * obs.y_p
    n_rx = h_flat.shape[0]
    cols = h_flat.shape[1] // obs.n_taps
    return h_flat.reshape(n_rx, cols, obs.n_taps).transpose(2, 0, 1)
