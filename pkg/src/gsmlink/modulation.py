"""GSM constellation construction: activation patterns, bit mapping, codebooks.

A GSM codeword activates ``n_rf`` of ``n_t`` antennas and places one
modulation symbol on each active antenna.  Information rides both on the
chosen antenna subset (index bits) and on the symbols (symbol bits).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Alphabet",
    "ActivationPatternSet",
    "GsmCodebook",
    "GsmVector",
    "build_alphabet",
    "parse_alphabet",
    "build_pattern_set",
    "build_codebook",
    "gsm_encode",
    "gsm_decode",
    "bits_per_channel_use",
    "bit_distance",
    "activation_of",
    "matched_configs",
]

_QAM_SHAPES = {4: (2, 2), 8: (4, 2), 16: (4, 4), 32: (8, 4), 64: (8, 8)}


def _gray(i: int) -> int:
    return i ^ (i >> 1)


def _axis_levels(n: int) -> np.ndarray:
    """Odd-integer grid levels in ascending order, e.g. 4 -> [-3,-1,1,3]."""
    return np.arange(-(n - 1), n, 2, dtype=np.float64)


@dataclass(frozen=True)
class Alphabet:
    """A complex modulation alphabet with its bit labeling.

    ``points[i]`` carries the bit label ``bits[i]`` (MSB first).  Labels are
    a bijection between {0,1}^bits_per_symbol and the points.  Constellations
    live on the unnormalized odd-integer grid; ``avg_energy`` is the mean
    |c|^2 and is what SNR definitions consume.
    """

    name: str
    points: np.ndarray
    bits: np.ndarray  # (order, bits_per_symbol) uint8

    @property
    def order(self) -> int:
        return len(self.points)

    @property
    def bits_per_symbol(self) -> int:
        return self.bits.shape[1]

    @property
    def avg_energy(self) -> float:
        return float(np.mean(np.abs(self.points) ** 2))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple("".join(str(b) for b in row) for row in self.bits)

    def label_int(self, i: int) -> int:
        """Bit label of point i packed into an integer, MSB first."""
        out = 0
        for b in self.bits[i]:
            out = (out << 1) | int(b)
        return out

    def index_of_point(self, c: complex, tol: float = 1e-9) -> int:
        d = np.abs(self.points - c)
        i = int(np.argmin(d))
        if d[i] > tol:
            raise ValueError(f"{c!r} is not a point of alphabet {self.name}")
        return i


def build_alphabet(kind: str, order: int) -> Alphabet:
    """Standard Gray-labeled constellation on the integer grid.

    BPSK maps bit 0 -> +1, bit 1 -> -1.  Square and rectangular QAM use
    per-axis Gray labels with the real-axis bits leading; 4-QAM is the set
    {+-1 +-j} with avg_energy 2.
    """
    kind = kind.upper()
    if kind == "BPSK":
        if order != 2:
            raise ValueError("BPSK is order 2")
        points = np.array([1.0 + 0j, -1.0 + 0j])
        bits = np.array([[0], [1]], dtype=np.uint8)
        return Alphabet("BPSK", points, bits)
    if kind != "QAM":
        raise ValueError(f"unsupported modulation kind {kind!r}")
    if order not in _QAM_SHAPES:
        raise ValueError(f"unsupported QAM order {order}")
    n_re, n_im = _QAM_SHAPES[order]
    b_re, b_im = int(math.log2(n_re)), int(math.log2(n_im))
    re_levels, im_levels = _axis_levels(n_re), _axis_levels(n_im)
    # Gray label g indexes the level whose Gray code is g, per axis.
    re_of_gray = np.empty(n_re)
    im_of_gray = np.empty(n_im)
    for i in range(n_re):
        re_of_gray[_gray(i)] = re_levels[i]
    for i in range(n_im):
        im_of_gray[_gray(i)] = im_levels[i]
    points = np.empty(order, dtype=np.complex128)
    bits = np.empty((order, b_re + b_im), dtype=np.uint8)
    for code in range(order):
        g_re = code >> b_im
        g_im = code & (n_im - 1)
        points[code] = re_of_gray[g_re] + 1j * im_of_gray[g_im]
        for k in range(b_re + b_im):
            bits[code, k] = (code >> (b_re + b_im - 1 - k)) & 1
    return Alphabet(f"{order}-QAM", points, bits)


def parse_alphabet(name: str) -> Alphabet:
    """Parse names like 'BPSK', '4-QAM', 'qam16' into an Alphabet."""
    s = name.strip().upper().replace("-", "").replace("_", "")
    if s == "BPSK":
        return build_alphabet("BPSK", 2)
    if s.startswith("QAM"):
        return build_alphabet("QAM", int(s[3:]))
    if s.endswith("QAM"):
        return build_alphabet("QAM", int(s[:-3]))
    raise ValueError(f"cannot parse alphabet name {name!r}")


@dataclass(frozen=True)
class ActivationPatternSet:
    """The ordered set of activation patterns used for index signaling."""

    n_t: int
    n_rf: int
    patterns: np.ndarray  # (2**index_bits, n_t) uint8
    index_bits: int
    _lookup: dict = field(repr=False, hash=False, compare=False, default_factory=dict)

    def __post_init__(self):
        for i, p in enumerate(self.patterns):
            self._lookup[tuple(int(b) for b in p)] = i

    @property
    def size(self) -> int:
        return len(self.patterns)

    def index_of(self, pattern) -> int:
        key = tuple(int(b) for b in pattern)
        if key not in self._lookup:
            raise ValueError(f"pattern {key} is not in the signaling set")
        return self._lookup[key]

    def active_antennas(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.patterns[i])


def build_pattern_set(n_t: int, n_rf: int) -> ActivationPatternSet:
    """Enumerate C(n_t, n_rf) patterns in descending lexicographic order of
    the binary string (antenna 1 = MSB) and keep the first 2**floor(log2 C).

    For (4, 2) this reproduces the set {1100, 1010, 1001, 0110}.
    """
    if not 1 <= n_rf <= n_t:
        raise ValueError("need 1 <= n_rf <= n_t")
    n_choose = math.comb(n_t, n_rf)
    index_bits = n_choose.bit_length() - 1  # floor(log2 C)
    keep = 1 << index_bits
    # combinations() in ascending tuple order is exactly descending
    # lexicographic order of the binary strings.
    patterns = np.zeros((keep, n_t), dtype=np.uint8)
    for i, combo in enumerate(itertools.islice(itertools.combinations(range(n_t), n_rf), keep)):
        patterns[i, list(combo)] = 1
    return ActivationPatternSet(n_t, n_rf, patterns, index_bits)


@dataclass(frozen=True)
class GsmVector:
    """One transmit vector: symbols on active antennas, zeros elsewhere."""

    entries: np.ndarray  # (n_t,) complex
    user: int = 0


@dataclass(frozen=True)
class GsmCodebook:
    """The enumerated GSM signal set with its bit labeling.

    Codeword ``i`` has bit label ``binary(i)`` of width ``bpcu``: the top
    ``index_bits`` select the activation pattern by position, the remaining
    bits label the symbols on the active antennas in increasing antenna
    order.  All arrays are aligned on the codeword index.
    """

    pattern_set: ActivationPatternSet
    alphabet: Alphabet
    vectors: np.ndarray      # (size, n_t) complex
    bit_labels: np.ndarray   # (size, bpcu) uint8
    pattern_idx: np.ndarray  # (size,) pattern position per codeword
    symbol_idx: np.ndarray   # (size, n_rf) alphabet point index per slot

    @property
    def size(self) -> int:
        return len(self.vectors)

    @property
    def n_t(self) -> int:
        return self.pattern_set.n_t

    @property
    def n_rf(self) -> int:
        return self.pattern_set.n_rf

    @property
    def bpcu(self) -> int:
        return self.bit_labels.shape[1]

    @property
    def labels_int(self) -> np.ndarray:
        """Bit labels packed into uint64 (bpcu <= 64)."""
        weights = (1 << np.arange(self.bpcu - 1, -1, -1, dtype=np.uint64))
        return (self.bit_labels.astype(np.uint64) * weights).sum(axis=1)

    def index_of(self, pattern_pos: int, symbol_codes) -> int:
        """Codeword index from a pattern position and per-slot label codes."""
        m = self.alphabet.bits_per_symbol
        i = pattern_pos
        for c in symbol_codes:
            i = (i << m) | int(c)
        return i

    def bits_of(self, i: int) -> np.ndarray:
        return self.bit_labels[i]


def build_codebook(n_t: int, n_rf: int, alphabet: Alphabet) -> GsmCodebook:
    """Enumerate the full signal set |S| * |A|^n_rf in bit-label order."""
    ps = build_pattern_set(n_t, n_rf)
    m = alphabet.bits_per_symbol
    size = ps.size * alphabet.order**n_rf
    vectors = np.zeros((size, n_t), dtype=np.complex128)
    bit_labels = np.zeros((size, ps.index_bits + n_rf * m), dtype=np.uint8)
    pattern_idx = np.zeros(size, dtype=np.int64)
    symbol_idx = np.zeros((size, n_rf), dtype=np.int64)
    # Gray label code -> point, per slot
    point_of_code = np.empty(alphabet.order, dtype=np.complex128)
    for i in range(alphabet.order):
        point_of_code[alphabet.label_int(i)] = alphabet.points[i]
    idx_of_code = np.empty(alphabet.order, dtype=np.int64)
    for i in range(alphabet.order):
        idx_of_code[alphabet.label_int(i)] = i
    cw = 0
    for p in range(ps.size):
        active = ps.active_antennas(p)
        for codes in itertools.product(range(alphabet.order), repeat=n_rf):
            vectors[cw, active] = point_of_code[list(codes)]
            pattern_idx[cw] = p
            symbol_idx[cw] = idx_of_code[list(codes)]
            for k in range(bit_labels.shape[1]):
                bit_labels[cw, k] = (cw >> (bit_labels.shape[1] - 1 - k)) & 1
            cw += 1
    return GsmCodebook(ps, alphabet, vectors, bit_labels, pattern_idx, symbol_idx)


def bits_per_channel_use(n_t: int, n_rf: int, alphabet_size: int) -> int:
    """floor(log2 C(n_t, n_rf)) + n_rf * floor(log2 |A|)."""
    return (math.comb(n_t, n_rf).bit_length() - 1) + n_rf * (alphabet_size.bit_length() - 1)


def gsm_encode(bits, codebook: GsmCodebook, user: int = 0) -> GsmVector:
    """Map a bpcu-length bit string to its transmit vector."""
    bits = np.asarray(bits, dtype=np.uint8).ravel()
    if bits.size != codebook.bpcu:
        raise ValueError(f"need {codebook.bpcu} bits, got {bits.size}")
    i = 0
    for b in bits:
        i = (i << 1) | int(b)
    return GsmVector(codebook.vectors[i].copy(), user=user)


def gsm_decode(vector, codebook: GsmCodebook) -> np.ndarray:
    """Inverse of gsm_encode; raises if the vector is not a codeword."""
    entries = vector.entries if isinstance(vector, GsmVector) else np.asarray(vector)
    if entries.shape != (codebook.n_t,):
        raise ValueError("vector length does not match n_t")
    support = np.flatnonzero(np.abs(entries) > 1e-9)
    pattern = np.zeros(codebook.n_t, dtype=np.uint8)
    pattern[support] = 1
    p = codebook.pattern_set.index_of(pattern)  # raises if not in the set
    codes = []
    for a in support:
        i = codebook.alphabet.index_of_point(entries[a])
        codes.append(codebook.alphabet.label_int(i))
    cw = codebook.index_of(p, codes)
    if not np.allclose(codebook.vectors[cw], entries, atol=1e-9):
        raise ValueError("vector is not in the codebook")
    return codebook.bit_labels[cw].copy()


def bit_distance(i: int, j: int, codebook: GsmCodebook) -> int:
    """Hamming distance between the bit labels of codewords i and j."""
    return int(np.sum(codebook.bit_labels[i] != codebook.bit_labels[j]))


def activation_of(vector) -> np.ndarray:
    """Binary support indicator of a transmit vector."""
    entries = vector.entries if isinstance(vector, GsmVector) else np.asarray(vector)
    return (np.abs(entries) > 1e-9).astype(np.uint8)


def matched_configs(bpcu_target: int, max_n_t: int = 8, max_order: int = 64):
    """All (n_t, n_rf, alphabet order) triples achieving exactly the target
    bpcu within the bounded search space.  Conventional MIMO is n_rf = n_t,
    SM is n_rf = 1."""
    if bpcu_target < 1:
        raise ValueError("bpcu_target must be >= 1")
    out = []
    orders = [o for o in (2, 4, 8, 16, 32, 64) if o <= max_order]
    for n_t in range(1, max_n_t + 1):
        for n_rf in range(1, n_t + 1):
            for order in orders:
                if bits_per_channel_use(n_t, n_rf, order) == bpcu_target:
                    out.append((n_t, n_rf, order))
    return out
