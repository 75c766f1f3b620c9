#!/usr/bin/env python3
"""Benchmark the message-passing detector kernels: numba jit vs pure numpy.

Usage:
    python benchmarks/bench_detectors.py [--batch 64] [--k-users 16]
                                         [--n-rx 128] [--repeats 5]

The same batch of trials runs through both backends; decisions must agree.
First jit call includes compilation (cached on disk afterwards).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from gsmlink._kernels import get_kernels
from gsmlink.channel import complex_gaussian, snr_to_sigma2, stream
from gsmlink.modulation import build_alphabet, build_codebook


def make_batch(k_users, n_rx, batch, snr_db, seed=9):
    cb = build_codebook(4, 2, build_alphabet("QAM", 4))
    cols = k_users * 4
    sigma2 = snr_to_sigma2(snr_db, k_users, 2, cb.alphabet.avg_energy)
    h = complex_gaussian(stream(seed, 0, 1), (batch, n_rx, cols))
    tx = stream(seed, 0, 0).integers(0, cb.size, (batch, k_users))
    x = cb.vectors[tx].reshape(batch, cols)
    y = np.matmul(h, x[..., None])[..., 0]
    y += complex_gaussian(stream(seed, 0, 2), (batch, n_rx), sigma2)
    return cb, h, y, sigma2


def bench_mpgsm(cb, h, y, sigma2, backend, repeats):
    kern = get_kernels(backend)
    batch, n_rx, cols = h.shape
    h_r = np.ascontiguousarray(h.reshape(batch, n_rx, cols // 4, 4))
    s_mat = np.ascontiguousarray(cb.vectors)
    args = (h_r, np.ascontiguousarray(y), s_mat, sigma2, 0.3, 8, 1e-3)
    kern.mpgsm_batch(*args)  # warmup / jit compile
    times = []
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out, _ = kern.mpgsm_batch(*args)
        times.append(time.perf_counter() - t0)
    return out, min(times) / batch


def bench_chemp(cb, h, y, sigma2, backend, repeats):
    kern = get_kernels(backend)
    batch, n_rx, cols = h.shape
    k_v = cols // 4
    j_full = np.matmul(h.conj().transpose(0, 2, 1), h) / n_rx
    z_full = np.matmul(h.conj().transpose(0, 2, 1), y[..., None])[..., 0] / n_rx
    zb = np.ascontiguousarray(z_full.reshape(batch, k_v, 4))
    jb = np.ascontiguousarray(j_full.reshape(batch, k_v, 4, k_v, 4).transpose(0, 1, 3, 2, 4))
    s_outer = np.ascontiguousarray(cb.vectors[:, :, None] * cb.vectors.conj()[:, None, :])
    label_int = np.array([cb.alphabet.label_int(i) for i in range(4)], dtype=np.int64)
    args = (zb, jb, sigma2 / n_rx, np.ascontiguousarray(cb.vectors), s_outer,
            cb.pattern_idx, cb.symbol_idx, label_int, cb.pattern_set.size, 2,
            0.3, 10, 1e-3)
    kern.chemp_batch(*args)
    times = []
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out, _ = kern.chemp_batch(*args)
        times.append(time.perf_counter() - t0)
    return out, min(times) / batch


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--k-users", type=int, default=16)
    ap.add_argument("--n-rx", type=int, default=128)
    ap.add_argument("--snr-db", type=float, default=6.0)
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    cb, h, y, sigma2 = make_batch(args.k_users, args.n_rx, args.batch, args.snr_db)
    print(f"K={args.k_users}  N={args.n_rx}  batch={args.batch}  "
          f"codebook={cb.size}  snr={args.snr_db} dB\n")
    print(f"{'kernel':<10} {'backend':<8} {'ms/trial':>10} {'speedup':>9}")
    print("-" * 40)
    all_agree = True
    for name, fn in (("mpgsm", bench_mpgsm), ("chemp", bench_chemp)):
        ref_out, ref_t = fn(cb, h, y, sigma2, "numpy", max(1, args.repeats // 2))
        jit_out, jit_t = fn(cb, h, y, sigma2, "numba", args.repeats)
        agree = np.array_equal(ref_out, jit_out)
        all_agree = all_agree and agree
        print(f"{name:<10} {'numpy':<8} {ref_t * 1e3:>10.2f} {'1.00x':>9}")
        print(f"{name:<10} {'numba':<8} {jit_t * 1e3:>10.2f} {ref_t / jit_t:>8.2f}x"
              f"{'' if agree else '  DECISIONS DIFFER!'}")
    print("\nbackends agree on all hard decisions" if all_agree
          else "\nWARNING: backend decisions differ")


if __name__ == "__main__":
    main()
