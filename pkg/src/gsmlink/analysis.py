"""Analytical ABEP machinery: closed-form PEP, union bound, and the
complexity-reduced bound.

The reduced bound groups codeword-tuple pairs by activation-pattern
structure.  Pairs whose pattern tuples share the same slot-matching
structure have identical joint (distance, symbol-bit-error) spectra, so one
spectrum per equivalence class suffices; per-class index-bit distances are
accumulated separately.  This restores exact equality with the direct
double sum while evaluating the PEP only once per distinct distance value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, logsumexp

from .modulation import Alphabet, ActivationPatternSet, GsmCodebook

__all__ = [
    "pep",
    "ValueSets",
    "value_sets",
    "QClassTable",
    "phi_counts",
    "SpectrumClass",
    "AlphaSpectrum",
    "alpha_spectrum",
    "BoundResult",
    "union_bound_direct",
    "union_bound_reduced",
]

_LOG_DOMAIN_N = 64  # f(alpha)**N underflows quickly beyond this


def pep(alpha, n_rx: int):
    """Unconditional pairwise error probability over Rayleigh fading.

    ``alpha`` is the pair's squared distance already scaled by 1/(4 sigma^2).
    Evaluates f(a)^N * sum_{i<N} C(N-1+i, i) (1-f(a))^i with
    f(a) = (1 - sqrt(a/(1+a))) / 2, in the log domain for large N.
    """
    a = np.asarray(alpha, dtype=np.float64)
    if np.any(a < 0):
        raise ValueError("alpha must be non-negative")
    if n_rx < 1:
        raise ValueError("n_rx must be >= 1")
    f = 0.5 * (1.0 - np.sqrt(a / (1.0 + a)))
    scalar = f.ndim == 0
    f = np.atleast_1d(f)
    if n_rx < _LOG_DOMAIN_N:
        total = np.ones_like(f)
        term = np.ones_like(f)
        g = 1.0 - f
        for i in range(n_rx - 1):
            term = term * g * (n_rx + i) / (i + 1)
            total += term
        out = f**n_rx * total
    else:
        i = np.arange(n_rx)
        logc = gammaln(n_rx + i) - gammaln(n_rx) - gammaln(i + 1)
        with np.errstate(divide="ignore"):
            log_g = np.log1p(-f)
            log_f = np.log(f)
        logs = logc[None, :] + i[None, :] * log_g[:, None]
        out = np.exp(n_rx * log_f + logsumexp(logs, axis=1))
    return float(out[0]) if scalar else out


def _int_points(alphabet: Alphabet) -> np.ndarray:
    """Constellation as exact integer (re, im) pairs."""
    pts = np.stack([np.rint(alphabet.points.real), np.rint(alphabet.points.imag)], axis=1)
    if not np.allclose(pts, np.stack([alphabet.points.real, alphabet.points.imag], axis=1)):
        raise ValueError("alphabet points must lie on the integer grid")
    return pts.astype(np.int64)


@dataclass(frozen=True)
class ValueSets:
    """Distinct |c|^2 and |c - c~|^2 values of an alphabet, with counts."""

    j_values: tuple
    j_mult: tuple
    l_values: tuple
    l_mult: tuple


def value_sets(alphabet: Alphabet) -> ValueSets:
    """Sorted distinct energy and pairwise-distance values (exact integers)."""
    pts = _int_points(alphabet)
    j = {}
    for re, im in pts:
        v = int(re * re + im * im)
        j[v] = j.get(v, 0) + 1
    l = {}
    for a in pts:
        for b in pts:
            v = int((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2)
            l[v] = l.get(v, 0) + 1
    jv = sorted(j)
    lv = sorted(l)
    return ValueSets(tuple(jv), tuple(j[v] for v in jv), tuple(lv), tuple(l[v] for v in lv))


# ---------------------------------------------------------------------------
# Pattern-pair combinatorics


def _tuple_digits(n_tuples: int, k_users: int, base: int) -> np.ndarray:
    """Row t = the base-`base` digits of t, most significant digit first."""
    digits = np.empty((n_tuples, k_users), dtype=np.int64)
    t = np.arange(n_tuples)
    for k in range(k_users - 1, -1, -1):
        digits[:, k] = t % base
        t = t // base
    return digits


@dataclass(frozen=True)
class QClassTable:
    """Counts of ordered pattern-tuple pairs grouped by the number q of
    active antennas lost from the common set, plus the total index-bit
    Hamming distance accumulated in each group."""

    q_values: np.ndarray
    phi: np.ndarray
    idx_dist: np.ndarray


def phi_counts(pattern_set: ActivationPatternSet, k_users: int) -> QClassTable:
    """Group all |S|^K x |S|^K ordered pattern-tuple pairs by
    q = K*n_rf - (number of positions active in both stacked patterns)."""
    size = pattern_set.size
    n_tuples = size**k_users
    if n_tuples * n_tuples > 1 << 20:
        raise ValueError("pattern-tuple pair space exceeds the 2^20 guard")
    digits = _tuple_digits(n_tuples, k_users, size)
    pats = pattern_set.patterns.astype(np.int64)
    common_1u = pats @ pats.T  # per-user common active antennas
    didx_1u = np.zeros((size, size), dtype=np.int64)
    for a in range(size):
        for b in range(size):
            didx_1u[a, b] = bin(a ^ b).count("1")
    common = np.zeros((n_tuples, n_tuples), dtype=np.int64)
    didx = np.zeros((n_tuples, n_tuples), dtype=np.int64)
    for k in range(k_users):
        common += common_1u[digits[:, None, k], digits[None, :, k]]
        didx += didx_1u[digits[:, None, k], digits[None, :, k]]
    q = k_users * pattern_set.n_rf - common
    q_max = min(pattern_set.n_rf, pattern_set.n_t - pattern_set.n_rf) * k_users
    phi = np.bincount(q.ravel(), minlength=q_max + 1)
    idx_dist = np.bincount(q.ravel(), weights=didx.ravel(), minlength=q_max + 1)
    return QClassTable(np.arange(q_max + 1), phi, np.rint(idx_dist).astype(np.int64))


def _user_matching(pattern_set: ActivationPatternSet, a: int, b: int) -> tuple:
    """Slot pairs (r in a, r' in b) that land on the same antenna."""
    act_a = pattern_set.active_antennas(a)
    act_b = pattern_set.active_antennas(b)
    pos_b = {int(ant): r for r, ant in enumerate(act_b)}
    return tuple((r, pos_b[int(ant)]) for r, ant in enumerate(act_a) if int(ant) in pos_b)


@dataclass(frozen=True)
class SpectrumClass:
    """Descriptor of one pattern-pair equivalence class: the slot-to-slot
    matching of common antennas, per user."""

    n_rf: int
    matchings: tuple  # one tuple of (r, r') pairs per user

    @property
    def k_users(self) -> int:
        return len(self.matchings)

    @property
    def q(self) -> int:
        return self.k_users * self.n_rf - sum(len(m) for m in self.matchings)

    @property
    def identical(self) -> bool:
        full = tuple((r, r) for r in range(self.n_rf))
        return all(m == full for m in self.matchings)


@dataclass(frozen=True)
class AlphaSpectrum:
    """Joint distribution of (squared distance, symbol-bit distance) over
    all symbol assignments of one class, aggregated per distance value.

    entries: (alpha_value, pair_count, total_symbol_bit_distance) triples.
    alpha_value is the distance before the 1/(4 sigma^2) scaling.
    """

    entries: tuple

    @property
    def total_pairs(self) -> int:
        return sum(e[1] for e in self.entries)


def _symbol_tables(alphabet: Alphabet):
    pts = _int_points(alphabet)
    n = len(pts)
    d2 = np.empty((n, n), dtype=np.int64)
    for i in range(n):
        d2[i] = (pts[i, 0] - pts[:, 0]) ** 2 + (pts[i, 1] - pts[:, 1]) ** 2
    energy = pts[:, 0] ** 2 + pts[:, 1] ** 2
    bd = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        bd[i] = np.sum(alphabet.bits[i] != alphabet.bits, axis=1)
    return d2, energy, bd


_MAX_COMPONENT_ASSIGNMENTS = 1 << 24


def _user_spectrum(matching: tuple, alphabet: Alphabet, n_rf: int) -> dict:
    """Joint {(alpha, bit_dist): count} over the |A|^(2 n_rf) symbol
    assignments of one user, for one slot matching.

    Variables are the n_rf transmit slots of each side; slot r of both sides
    always shares a bit-distance term, matched slots additionally share a
    distance term.  Independent connected components are enumerated
    separately and convolved.
    """
    d2, energy, bd = _symbol_tables(alphabet)
    order = len(energy)
    matched_left = {r for r, _ in matching}
    matched_right = {r for _, r in matching}
    # vertices 0..n_rf-1 are x-slots, n_rf..2n_rf-1 are y-slots
    parent = list(range(2 * n_rf))

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    def union(u, v):
        parent[find(u)] = find(v)

    for r in range(n_rf):
        union(r, n_rf + r)  # bit-distance edge
    for r, rp in matching:
        union(r, n_rf + rp)  # distance edge
    comps = {}
    for v in range(2 * n_rf):
        comps.setdefault(find(v), []).append(v)

    spectrum = {(0, 0): 1}
    for verts in comps.values():
        n_assign = order ** len(verts)
        if n_assign > _MAX_COMPONENT_ASSIGNMENTS:
            raise ValueError("spectrum component too large to enumerate")
        pos = {v: i for i, v in enumerate(verts)}
        idx = np.arange(n_assign)
        sym = [(idx // order**i) % order for i in range(len(verts))]
        alpha = np.zeros(n_assign, dtype=np.int64)
        dist = np.zeros(n_assign, dtype=np.int64)
        for r in range(n_rf):
            if r in pos:  # bit edge lives where x_r does
                dist += bd[sym[pos[r]], sym[pos[n_rf + r]]]
            if r in pos and r not in matched_left:
                alpha += energy[sym[pos[r]]]
            if n_rf + r in pos and r not in matched_right:
                alpha += energy[sym[pos[n_rf + r]]]
        for r, rp in matching:
            if r in pos:
                alpha += d2[sym[pos[r]], sym[pos[n_rf + rp]]]
        stride = int(dist.max()) + 1
        uniq, counts = np.unique(alpha * stride + dist, return_counts=True)
        part = {(int(u) // stride, int(u) % stride): int(c) for u, c in zip(uniq, counts)}
        spectrum = _convolve(spectrum, part)
    return spectrum


def _convolve(sa: dict, sb: dict) -> dict:
    out = {}
    for (a1, d1), c1 in sa.items():
        for (a2, d2_), c2 in sb.items():
            key = (a1 + a2, d1 + d2_)
            out[key] = out.get(key, 0) + c1 * c2
    return out


def alpha_spectrum(descriptor: SpectrumClass, alphabet: Alphabet) -> AlphaSpectrum:
    """Exact (distance, symbol-bit-distance) spectrum of one class.

    For the identical-pattern class the single all-equal assignment
    (alpha = 0) is excluded, matching the x~ != x restriction of the bound.
    """
    spectrum = {(0, 0): 1}
    for m in descriptor.matchings:
        spectrum = _convolve(spectrum, _user_spectrum(m, alphabet, descriptor.n_rf))
    if descriptor.identical:
        n_same = alphabet.order ** (descriptor.k_users * descriptor.n_rf)
        assert spectrum.get((0, 0), 0) == n_same
        del spectrum[(0, 0)]
    agg = {}
    for (a, d), c in spectrum.items():
        cnt, tot = agg.get(a, (0, 0))
        agg[a] = (cnt + c, tot + d * c)
    entries = tuple((a,) + agg[a] for a in sorted(agg))
    return AlphaSpectrum(entries)


# ---------------------------------------------------------------------------
# Union bounds


@dataclass
class BoundResult:
    """ABEP upper bound on a noise grid, with reduction diagnostics."""

    sigma2: np.ndarray
    bound: np.ndarray
    eta: int
    snr_db: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)


def _tuple_space(codebook: GsmCodebook, k_users: int):
    """Stacked codeword tuples: vectors (G, K*n_t) and packed bit labels."""
    g = codebook.size**k_users
    digits = _tuple_digits(g, k_users, codebook.size)
    n_t = codebook.n_t
    x = np.empty((g, k_users * n_t), dtype=np.complex128)
    labels = np.zeros(g, dtype=np.uint64)
    lab_1u = codebook.labels_int
    for k in range(k_users):
        x[:, k * n_t:(k + 1) * n_t] = codebook.vectors[digits[:, k]]
        labels |= lab_1u[digits[:, k]] << np.uint64(codebook.bpcu * (k_users - 1 - k))
    return x, labels


def union_bound_direct(codebook: GsmCodebook, k_users: int, sigma2, n_rx: int,
                       snr_db=None) -> BoundResult:
    """Exact double sum over all ordered codeword-tuple pairs.

    Brute-force reference; cost is quadratic in the |S|^K tuple count,
    guarded at 2^16 tuples.
    """
    g = codebook.size**k_users
    if g > 1 << 16:
        raise ValueError("codeword tuple space exceeds the 2^16 guard")
    eta = k_users * codebook.bpcu
    x, labels = _tuple_space(codebook, k_users)
    sigma2 = np.atleast_1d(np.asarray(sigma2, dtype=np.float64))
    acc = np.zeros(len(sigma2))
    for i in range(g):
        theta = np.sum(np.abs(x - x[i]) ** 2, axis=1)
        d = np.bitwise_count(labels ^ labels[i]).astype(np.float64)
        for s, s2 in enumerate(sigma2):
            acc[s] += np.sum(pep(theta / (4.0 * s2), n_rx) * d)
    bound = acc / (2.0**eta * eta)
    return BoundResult(sigma2, bound, eta, snr_db=None if snr_db is None else np.asarray(snr_db))


def _interned_matchings(pattern_set: ActivationPatternSet):
    """Per-user pair tables: matching-key id matrix and index-bit distances."""
    size = pattern_set.size
    keys: list[tuple] = []
    key_id = {}
    keymat = np.zeros((size, size), dtype=np.int64)
    didx = np.zeros((size, size), dtype=np.int64)
    for a in range(size):
        for b in range(size):
            m = _user_matching(pattern_set, a, b)
            if m not in key_id:
                key_id[m] = len(keys)
                keys.append(m)
            keymat[a, b] = key_id[m]
            didx[a, b] = bin(a ^ b).count("1")
    return keys, keymat, didx


def union_bound_reduced(codebook: GsmCodebook, k_users: int, sigma2, n_rx: int,
                        snr_db=None) -> BoundResult:
    """Union bound via pattern-pair equivalence classes and cached spectra.

    Equals union_bound_direct wherever both are computable: classes are
    keyed on the full slot-matching structure so bit-distance weights stay
    exact, and all pair counts are carried as exact integers.
    """
    ps = codebook.pattern_set
    size = ps.size
    n_tuples = size**k_users
    if n_tuples * n_tuples > 1 << 20:
        raise ValueError("pattern-tuple pair space exceeds the 2^20 guard")
    eta = k_users * codebook.bpcu
    keys, keymat, didx_1u = _interned_matchings(ps)
    n_keys = len(keys)
    digits = _tuple_digits(n_tuples, k_users, size)

    cls = np.zeros((n_tuples, n_tuples), dtype=np.int64)
    didx = np.zeros((n_tuples, n_tuples), dtype=np.int64)
    for k in range(k_users):
        cls = cls * n_keys + keymat[digits[:, None, k], digits[None, :, k]]
        didx += didx_1u[digits[:, None, k], digits[None, :, k]]
    members = np.bincount(cls.ravel(), minlength=n_keys**k_users)
    didx_total = np.bincount(cls.ravel(), weights=didx.ravel(),
                             minlength=n_keys**k_users)

    @lru_cache(maxsize=None)
    def user_spec(key_idx: int) -> tuple:
        spec = _user_spectrum(keys[key_idx], codebook.alphabet, ps.n_rf)
        return tuple(sorted(spec.items()))

    @lru_cache(maxsize=None)
    def class_spec(sorted_key_idxs: tuple) -> tuple:
        spec = {(0, 0): 1}
        for ki in sorted_key_idxs:
            spec = _convolve(spec, dict(user_spec(ki)))
        return tuple(sorted(spec.items()))

    full_key = tuple((r, r) for r in range(ps.n_rf))
    full_id = keys.index(full_key) if full_key in keys else -1

    weight: dict[int, int] = {}
    n_classes = 0
    max_spectrum = 0
    for c in np.flatnonzero(members):
        n_classes += 1
        m_c = int(members[c])
        d_c = int(round(didx_total[c]))
        key_idxs = []
        rem = int(c)
        for _ in range(k_users):
            key_idxs.append(rem % n_keys)
            rem //= n_keys
        spec = dict(class_spec(tuple(sorted(key_idxs))))
        if full_id >= 0 and all(ki == full_id for ki in key_idxs):
            # identical-pattern class: drop the x~ = x assignment
            n_same = codebook.alphabet.order ** (k_users * ps.n_rf)
            assert spec.get((0, 0), 0) == n_same and d_c == 0
            del spec[(0, 0)]
        max_spectrum = max(max_spectrum, len(spec))
        for (a, d), cnt in spec.items():
            weight[a] = weight.get(a, 0) + d_c * cnt + m_c * d * cnt
    alphas = np.array(sorted(weight), dtype=np.float64)
    w = np.array([float(weight[int(a)]) for a in alphas])

    sigma2 = np.atleast_1d(np.asarray(sigma2, dtype=np.float64))
    bound = np.empty(len(sigma2))
    for s, s2 in enumerate(sigma2):
        bound[s] = np.sum(pep(alphas / (4.0 * s2), n_rx) * w) / (2.0**eta * eta)
    diagnostics = {
        "n_classes": n_classes,
        "n_pattern_pairs": int(n_tuples) ** 2,
        "n_distinct_alphas": len(alphas),
        "max_spectrum_entries": max_spectrum,
        "phi": phi_counts(ps, k_users),
    }
    return BoundResult(sigma2, bound, eta, snr_db=None if snr_db is None else np.asarray(snr_db),
                       diagnostics=diagnostics)
