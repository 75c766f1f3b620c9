"""Scenario configuration, the Monte Carlo BER engine, sweeps, and result
emission.

Trials run in fixed-size batches; every random draw comes from a named
stream keyed by (seed, grid point, batch index, role), so aggregate counts
are byte-identical across runs and worker counts.  A point stops at the
bit-error target or the bit cap, whichever comes first, checked at batch
boundaries.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import dataclass, asdict

import numpy as np

from . import __version__
from ._kernels import BACKEND, get_kernels
from .channel import (ROLE_BITS, ROLE_CHANNEL, ROLE_NOISE, ROLE_PILOT_NOISE,
                      SelectiveChannel, complex_gaussian, sample_selective,
                      snr_to_sigma2, stream)
from .cpsc import (CpscFrameConfig, cpsc_frame_roundtrip, dft_diagonalize,
                   equivalent_channel_matrix)
from .detect import DetectorParams, MPGSM_DEFAULTS, CHEMP_DEFAULTS
from .estimate import (SelectivePilotObservation, mmse_channel_estimate_selective)
from .modulation import GsmCodebook, build_codebook, parse_alphabet

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "PointResult",
    "BerResult",
    "run_ber",
    "run_sweep",
    "snr_at_ber",
    "emit",
    "csv_rows",
]

BATCH_TRIALS = 64  # fixed batch granularity of the RNG stream ids

_DETECTORS = ("ml", "mmse", "mpgsm", "chemp")


class ConfigError(ValueError):
    """Scenario configuration is inconsistent; reported before any trial."""


@dataclass(frozen=True)
class ScenarioConfig:
    """One experiment: system dimensions, detector, channel, and stopping rule."""

    k_users: int
    n_rx: int
    n_t: int
    n_rf: int
    alphabet: str
    snr_grid_db: tuple
    detector: str = "mpgsm"
    damping: float | None = None
    max_iters: int | None = None
    epsilon: float | None = None
    csi: str = "perfect"           # perfect | estimated
    channel: str = "flat"          # flat | selective
    n_taps: int = 1
    xi_db: float = 0.0
    q_vectors: int = 1
    data_blocks: int = 1
    pilot_power: float | None = None  # selective mode; default K * E_s * L
    min_errors: int = 200
    max_bits: int = 20_000_000
    stop_below_ber: float = 0.0    # skip remaining grid points once BER falls below
    seed: int = 1
    name: str = "scenario"

    def validate(self) -> None:
        if min(self.k_users, self.n_rx, self.n_t, self.n_rf) < 1:
            raise ConfigError("dimension fields must be positive")
        if self.n_rf > self.n_t:
            raise ConfigError("n_rf cannot exceed n_t")
        if self.detector not in _DETECTORS:
            raise ConfigError(f"unknown detector {self.detector!r}")
        if self.csi not in ("perfect", "estimated"):
            raise ConfigError(f"unknown csi mode {self.csi!r}")
        if self.channel not in ("flat", "selective"):
            raise ConfigError(f"unknown channel mode {self.channel!r}")
        grid = tuple(self.snr_grid_db)
        if len(grid) == 0 or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("snr_grid_db must be non-empty and strictly increasing")
        if self.channel == "selective" and self.q_vectors < self.n_taps:
            raise ConfigError("need q_vectors >= n_taps")
        if self.pilot_power is not None and self.pilot_power <= 0:
            raise ConfigError("pilot_power must be positive")
        if self.min_errors < 1 or self.max_bits < 1:
            raise ConfigError("stopping rule must be positive")
        try:
            parse_alphabet(self.alphabet)
            params = self.detector_params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.detector == "mpgsm" and params.damping == 0.0:
            raise ConfigError("direct-model damping must lie in (0, 1]")
        if self.detector == "chemp" and params.damping == 1.0:
            raise ConfigError("Gram-domain damping must lie in [0, 1)")

    def codebook(self) -> GsmCodebook:
        return build_codebook(self.n_t, self.n_rf, parse_alphabet(self.alphabet))

    def detector_params(self) -> DetectorParams:
        base = CHEMP_DEFAULTS if self.detector == "chemp" else MPGSM_DEFAULTS
        return DetectorParams(
            damping=base.damping if self.damping is None else self.damping,
            max_iters=base.max_iters if self.max_iters is None else self.max_iters,
            epsilon=base.epsilon if self.epsilon is None else self.epsilon,
        )

    @property
    def eta(self) -> int:
        cb = self.codebook()
        return self.k_users * cb.bpcu

    def frame_overhead(self) -> float | None:
        """Pilot + cyclic-prefix fraction of a CPSC frame; None when flat."""
        if self.channel != "selective":
            return None
        cfg = CpscFrameConfig(self.q_vectors, self.data_blocks, self.n_taps)
        total = cfg.frame_channel_uses(self.k_users, self.n_t)
        return 1.0 - (self.q_vectors * self.data_blocks) / total

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in cls.__dataclass_fields__.values()}  # type: ignore[attr-defined]
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "snr_grid_db" in data:
            data = dict(data)
            data["snr_grid_db"] = tuple(float(s) for s in data["snr_grid_db"])
        sc = cls(**data)
        sc.validate()
        return sc

    def to_dict(self) -> dict:
        d = asdict(self)
        d["snr_grid_db"] = list(self.snr_grid_db)
        return d


@dataclass
class PointResult:
    snr_db: float
    sigma2: float
    bits: int
    errors: int

    @property
    def ber(self) -> float:
        return self.errors / self.bits if self.bits else math.nan

    @property
    def ci_half(self) -> float:
        """95% binomial normal-approximation half-width."""
        if not self.bits:
            return math.nan
        p = self.ber
        return 1.96 * math.sqrt(max(p * (1.0 - p), 0.0) / self.bits)


@dataclass
class BerResult:
    scenario: ScenarioConfig
    points: list
    wall_time_s: float = 0.0
    backend: str = BACKEND
    version: str = __version__

    def snr_at(self, target_ber: float):
        return snr_at_ber(self.points, target_ber)


# ---------------------------------------------------------------------------
# flat-fading batch engine


def _detect_batch(sc: ScenarioConfig, cb: GsmCodebook, kern, sigma2: float,
                  h_det: np.ndarray, y: np.ndarray, aux=None) -> np.ndarray:
    """Hard decisions (B, K) for one batch; h_det is the CSI the detector sees."""
    n_batch, n_rx, cols = h_det.shape
    params = sc.detector_params()
    if sc.detector == "mpgsm":
        h_r = np.ascontiguousarray(h_det.reshape(n_batch, n_rx, cols // cb.n_t, cb.n_t))
        hard, _ = kern.mpgsm_batch(h_r, np.ascontiguousarray(y), np.ascontiguousarray(cb.vectors),
                                   float(sigma2), params.damping, params.max_iters, params.epsilon)
        return hard
    if sc.detector == "chemp":
        if aux is not None:
            j_full, z_full = aux  # direct Gram-domain estimates
        else:
            j_full = np.matmul(h_det.conj().transpose(0, 2, 1), h_det) / n_rx
            z_full = np.matmul(h_det.conj().transpose(0, 2, 1), y[..., None])[..., 0] / n_rx
        k_v = cols // cb.n_t
        zb = np.ascontiguousarray(z_full.reshape(n_batch, k_v, cb.n_t))
        jb = np.ascontiguousarray(
            j_full.reshape(n_batch, k_v, cb.n_t, k_v, cb.n_t).transpose(0, 1, 3, 2, 4))
        s_outer = np.ascontiguousarray(cb.vectors[:, :, None] * cb.vectors.conj()[:, None, :])
        label_int = np.array([cb.alphabet.label_int(i) for i in range(cb.alphabet.order)],
                             dtype=np.int64)
        hard, _ = kern.chemp_batch(zb, jb, float(sigma2) / n_rx,
                                   np.ascontiguousarray(cb.vectors), s_outer,
                                   cb.pattern_idx, cb.symbol_idx, label_int,
                                   cb.pattern_set.size, cb.alphabet.bits_per_symbol,
                                   params.damping, params.max_iters, params.epsilon)
        return hard
    if sc.detector == "mmse":
        gram = np.matmul(h_det.conj().transpose(0, 2, 1), h_det)
        gram += (sigma2 / cb.alphabet.avg_energy) * np.eye(cols)
        rhs = np.matmul(h_det.conj().transpose(0, 2, 1), y[..., None])
        x_lin = np.linalg.solve(gram, rhs)[..., 0].reshape(n_batch, cols // cb.n_t, cb.n_t)
        d = np.abs(x_lin[:, :, None, :] - cb.vectors[None, None]) ** 2
        return np.argmin(d.sum(axis=-1), axis=-1)
    # ml
    k_v = cols // cb.n_t
    g = cb.size**k_v
    if g > 1 << 16:
        raise ConfigError("ML search space exceeds the 2^16 guard")
    from .detect import _ml_candidates
    x_all, digits = _ml_candidates(cb, k_v)
    hard = np.empty((n_batch, k_v), dtype=np.int64)
    for b in range(n_batch):
        resid = y[b][None, :] - x_all @ h_det[b].T
        hard[b] = digits[int(np.argmin(np.sum(resid.real**2 + resid.imag**2, axis=1)))]
    return hard


def _flat_batch(sc: ScenarioConfig, cb: GsmCodebook, kern, sigma2: float,
                point_idx: int, batch_idx: int):
    """One batch of flat-fading trials; returns (bit errors, bits)."""
    n_batch = BATCH_TRIALS
    cols = sc.k_users * sc.n_t
    r_bits = stream(sc.seed, point_idx, batch_idx, ROLE_BITS)
    r_ch = stream(sc.seed, point_idx, batch_idx, ROLE_CHANNEL)
    r_noise = stream(sc.seed, point_idx, batch_idx, ROLE_NOISE)
    tx = r_bits.integers(0, cb.size, (n_batch, sc.k_users))
    h = complex_gaussian(r_ch, (n_batch, sc.n_rx, cols))
    y = np.matmul(h, cb.vectors[tx].reshape(n_batch, cols)[..., None])[..., 0]
    if sigma2 > 0:
        y += complex_gaussian(r_noise, (n_batch, sc.n_rx), sigma2)
    aux = None
    h_det = h
    if sc.csi == "estimated":
        r_pn = stream(sc.seed, point_idx, batch_idx, ROLE_PILOT_NOISE)
        amp = math.sqrt(sc.k_users * cb.alphabet.avg_energy)
        y_p = amp * h
        if sigma2 > 0:
            y_p = y_p + complex_gaussian(r_pn, h.shape, sigma2)
        if sc.detector == "chemp":
            a2 = amp * amp
            j_hat = np.matmul(y_p.conj().transpose(0, 2, 1), y_p) / (sc.n_rx * a2)
            j_hat -= (sigma2 / (sc.n_rx * a2)) * np.eye(cols)
            z_hat = np.matmul(y_p.conj().transpose(0, 2, 1), y[..., None])[..., 0] / (sc.n_rx * amp)
            aux = (j_hat, z_hat)
        else:
            h_det = (amp / (amp * amp + sigma2)) * y_p
    hard = _detect_batch(sc, cb, kern, sigma2, h_det, y, aux)
    errors = int(np.sum(cb.bit_labels[hard] != cb.bit_labels[tx]))
    return errors, n_batch * sc.k_users * cb.bpcu


# ---------------------------------------------------------------------------
# CPSC (frequency-selective) engine: one frame per trial


def _cpsc_frame(sc: ScenarioConfig, cb: GsmCodebook, kern, sigma2: float,
                point_idx: int, frame_idx: int):
    # default pilot power carries the flat protocol's per-coefficient pilot
    # energy K * E_s into each of the L one-shot tap measurements
    pilot = sc.pilot_power
    if pilot is None:
        pilot = sc.k_users * cb.alphabet.avg_energy * sc.n_taps
    cfg = CpscFrameConfig(sc.q_vectors, sc.data_blocks, sc.n_taps, pilot_power=pilot)
    r_bits = stream(sc.seed, point_idx, frame_idx, ROLE_BITS)
    r_ch = stream(sc.seed, point_idx, frame_idx, ROLE_CHANNEL)
    r_noise = stream(sc.seed, point_idx, frame_idx, ROLE_NOISE)
    channel = sample_selective(sc.n_rx, sc.k_users, sc.n_t, sc.n_taps, sc.xi_db, rng=r_ch)
    tx = r_bits.integers(0, cb.size, (sc.data_blocks, sc.q_vectors, sc.k_users))
    frame = cpsc_frame_roundtrip(tx, cb, cfg, channel, sigma2, r_noise)
    if sc.csi == "estimated":
        obs = SelectivePilotObservation(frame.y_pilot, pilot, sc.n_taps)
        taps_hat = mmse_channel_estimate_selective(obs, sigma2)
        ch_det = SelectiveChannel(taps_hat, channel.profile, channel.decay_db)
    else:
        ch_det = channel
    d_blocks = dft_diagonalize(ch_det, sc.q_vectors)
    h_bar = equivalent_channel_matrix(d_blocks)
    errors = 0
    q = sc.q_vectors
    for i in range(sc.data_blocks):
        z_prime = (np.fft.fft(frame.y_blocks[i], axis=0) / math.sqrt(q)).reshape(-1)
        hard = _detect_batch(sc, cb, kern, sigma2, h_bar[None], z_prime[None])[0]
        # virtual user t*K + k carries user k's symbol of channel use t
        hard_tk = hard.reshape(q, sc.k_users)
        errors += int(np.sum(cb.bit_labels[hard_tk] != cb.bit_labels[tx[i]]))
    return errors, sc.data_blocks * q * sc.k_users * cb.bpcu


# ---------------------------------------------------------------------------
# point and sweep drivers


def run_ber(scenario: ScenarioConfig, workers: int | None = None) -> BerResult:
    """Simulate every SNR grid point of one scenario."""
    scenario.validate()
    if scenario.channel == "selective" and scenario.detector == "ml" \
            and scenario.codebook().size ** (scenario.k_users * scenario.q_vectors) > 1 << 16:
        raise ConfigError("ML search space exceeds the 2^16 guard")
    kern = get_kernels()
    if workers and BACKEND == "numba":
        import numba

        numba.set_num_threads(max(1, int(workers)))
    cb = scenario.codebook()
    t0 = time.perf_counter()
    points = []
    for point_idx, snr_db in enumerate(scenario.snr_grid_db):
        sigma2 = snr_to_sigma2(snr_db, scenario.k_users, scenario.n_rf,
                               cb.alphabet.avg_energy)
        errors = bits = 0
        batch_idx = 0
        while errors < scenario.min_errors and bits < scenario.max_bits:
            if scenario.channel == "flat":
                e, b = _flat_batch(scenario, cb, kern, sigma2, point_idx, batch_idx)
            else:
                e, b = _cpsc_frame(scenario, cb, kern, sigma2, point_idx, batch_idx)
            errors += e
            bits += b
            batch_idx += 1
        points.append(PointResult(float(snr_db), float(sigma2), bits, errors))
        if scenario.stop_below_ber > 0 and points[-1].ber < scenario.stop_below_ber:
            break
    return BerResult(scenario, points, wall_time_s=time.perf_counter() - t0)


def run_sweep(scenarios, workers: int | None = None) -> list:
    """run_ber over a list of scenarios (e.g. a preset)."""
    return [run_ber(sc, workers=workers) for sc in scenarios]


def snr_at_ber(points, target_ber: float):
    """SNR achieving the target BER by log-linear interpolation between the
    bracketing grid points; None when the target is not bracketed (censored,
    never extrapolated).  Zero-error points enter the interpolation at the
    half-an-error floor 0.5/bits."""
    pts = sorted(points, key=lambda p: p.snr_db)
    bers = [max(p.ber, 0.5 / p.bits) for p in pts]
    crossing = None
    for i in range(len(pts) - 1):
        if bers[i] >= target_ber >= bers[i + 1] and pts[i].errors > 0:
            crossing = i
    if crossing is None:
        return None
    i = crossing
    lo, hi = math.log10(bers[i]), math.log10(bers[i + 1])
    t = math.log10(target_ber)
    frac = 0.0 if hi == lo else (t - lo) / (hi - lo)
    return pts[i].snr_db + frac * (pts[i + 1].snr_db - pts[i].snr_db)


# ---------------------------------------------------------------------------
# emission

CSV_COLUMNS = ("scenario_id", "source", "snr_db", "ber", "ci_half", "bits", "errors")


def csv_rows(results, bounds=None) -> list:
    """Rows over simulation results and optional BoundResult overlays."""
    rows = []
    for r in results:
        for p in r.points:
            rows.append({"scenario_id": r.scenario.name, "source": "sim",
                         "snr_db": p.snr_db, "ber": p.ber, "ci_half": p.ci_half,
                         "bits": p.bits, "errors": p.errors})
    for name, br in (bounds or []):
        snrs = br.snr_db if br.snr_db is not None else [math.nan] * len(br.bound)
        for snr, val in zip(snrs, br.bound):
            rows.append({"scenario_id": name, "source": "bound", "snr_db": float(snr),
                         "ber": float(val), "ci_half": 0.0, "bits": 0, "errors": 0})
    return rows


def _csv_text(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: row[k] for k in CSV_COLUMNS})
    return buf.getvalue()


def emit(results, fmt: str, out_dir, bounds=None, stem: str = "results") -> list:
    """Write CSV and/or JSON outputs; returns the written paths.

    The CSV body is a pure function of the results (timestamps only live in
    the JSON metadata).
    """
    import pathlib

    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if fmt not in ("csv", "json", "both"):
        raise ConfigError(f"unknown format {fmt!r}")
    try:
        if fmt in ("csv", "both"):
            path = out / f"{stem}.csv"
            path.write_text(_csv_text(csv_rows(results, bounds)))
            written.append(path)
        if fmt in ("json", "both"):
            payload = {
                "version": __version__,
                "written_at_unix": time.time(),
                "results": [
                    {
                        "scenario": r.scenario.to_dict(),
                        "backend": r.backend,
                        "wall_time_s": r.wall_time_s,
                        "frame_overhead": r.scenario.frame_overhead(),
                        "points": [
                            {"snr_db": p.snr_db, "sigma2": p.sigma2, "bits": p.bits,
                             "errors": p.errors, "ber": p.ber, "ci_half": p.ci_half}
                            for p in r.points
                        ],
                    }
                    for r in results
                ],
            }
            if bounds:
                payload["bounds"] = [
                    {"scenario_id": name,
                     "snr_db": None if br.snr_db is None else [float(s) for s in br.snr_db],
                     "sigma2": [float(s) for s in br.sigma2],
                     "bound": [float(b) for b in br.bound],
                     "eta": br.eta}
                    for name, br in bounds
                ]
            path = out / f"{stem}.json"
            path.write_text(json.dumps(payload, indent=2))
            written.append(path)
    except OSError as exc:
        raise RuntimeError(f"failed writing results under {out}: {exc}") from exc
    return written
