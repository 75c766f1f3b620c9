import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gsmlink.modulation import (activation_of, bit_distance, bits_per_channel_use,
                                build_alphabet, build_codebook, build_pattern_set,
                                gsm_decode, gsm_encode, matched_configs,
                                parse_alphabet)


def bits_of(i, width):
    return np.array([int(b) for b in format(i, f"0{width}b")], dtype=np.uint8)


class TestAlphabet:
    def test_qam4_points(self):
        a = build_alphabet("QAM", 4)
        assert sorted((p.real, p.imag) for p in a.points) == [(-1, -1), (-1, 1), (1, -1), (1, 1)]
        assert a.avg_energy == pytest.approx(2.0)

    def test_bpsk(self):
        a = build_alphabet("BPSK", 2)
        assert list(a.points) == [1, -1]
        assert a.labels == ("0", "1")
        assert a.avg_energy == pytest.approx(1.0)

    @pytest.mark.parametrize("order,energy", [(4, 2), (8, 6), (16, 10), (32, 26), (64, 42)])
    def test_avg_energy_matches_direct_mean(self, order, energy):
        a = build_alphabet("QAM", order)
        assert np.mean(np.abs(a.points) ** 2) == pytest.approx(energy)
        assert a.avg_energy == pytest.approx(energy)

    def test_rejects_unsupported_order(self):
        with pytest.raises(ValueError):
            build_alphabet("QAM", 12)
        with pytest.raises(ValueError):
            build_alphabet("BPSK", 4)

    def test_labels_are_bijective(self):
        for order in (2, 4, 8, 16, 32, 64):
            a = parse_alphabet(f"{order}-QAM") if order > 2 else build_alphabet("BPSK", 2)
            assert len(set(a.labels)) == order
            assert all(len(lab) == a.bits_per_symbol for lab in a.labels)

    @pytest.mark.parametrize("order", [4, 8, 16, 32, 64])
    def test_gray_adjacency(self, order):
        # nearest grid neighbors differ in exactly one label bit
        a = build_alphabet("QAM", order)
        for i in range(order):
            for j in range(order):
                d = abs(a.points[i] - a.points[j])
                if abs(d - 2.0) < 1e-9:
                    hamming = int(np.sum(a.bits[i] != a.bits[j]))
                    assert hamming == 1

    def test_parse_names(self):
        assert parse_alphabet("bpsk").name == "BPSK"
        assert parse_alphabet("qam16").order == 16
        assert parse_alphabet("4-QAM").order == 4
        with pytest.raises(ValueError):
            parse_alphabet("psk8")


class TestPatternSet:
    def test_reproduces_reference_set_4_2(self):
        ps = build_pattern_set(4, 2)
        strings = ["".join(map(str, p)) for p in ps.patterns]
        assert strings == ["1100", "1010", "1001", "0110"]
        assert ps.index_bits == 2

    def test_all_active_single_pattern(self):
        ps = build_pattern_set(3, 3)
        assert ps.size == 1 and ps.index_bits == 0
        assert list(ps.patterns[0]) == [1, 1, 1]

    def test_8_choose_2_truncation(self):
        ps = build_pattern_set(8, 2)
        assert ps.size == 16 and ps.index_bits == 4  # floor(log2 28) = 4
        assert "".join(map(str, ps.patterns[0])) == "11000000"
        # descending lexicographic order of the binary strings
        vals = [int("".join(map(str, p)), 2) for p in ps.patterns]
        assert vals == sorted(vals, reverse=True)

    def test_deterministic(self):
        a = build_pattern_set(6, 3)
        b = build_pattern_set(6, 3)
        assert np.array_equal(a.patterns, b.patterns)

    def test_every_pattern_has_n_rf_ones(self):
        for n_t, n_rf in [(4, 2), (5, 2), (6, 3), (8, 2)]:
            ps = build_pattern_set(n_t, n_rf)
            assert np.all(ps.patterns.sum(axis=1) == n_rf)
            assert len({tuple(p) for p in ps.patterns}) == ps.size


class TestCodebook:
    def test_encode_reference_mapping_rows(self):
        cb = build_codebook(4, 2, build_alphabet("BPSK", 2))
        rows = {"00": [1, 1, 0, 0], "01": [1, 0, 1, 0], "10": [1, 0, 0, 1], "11": [0, 1, 1, 0]}
        for idx_bits, pattern in rows.items():
            v = gsm_encode([int(b) for b in idx_bits] + [0, 0], cb)
            assert list(activation_of(v)) == pattern

    def test_bpsk_4_2_signal_set(self):
        # the full 16-codeword set: +-1 on each pattern of the signaling set
        cb = build_codebook(4, 2, build_alphabet("BPSK", 2))
        expected = set()
        for pattern in ([1, 1, 0, 0], [1, 0, 1, 0], [1, 0, 0, 1], [0, 1, 1, 0]):
            active = [i for i, b in enumerate(pattern) if b]
            for s0, s1 in itertools.product((1, -1), repeat=2):
                v = [0] * 4
                v[active[0]], v[active[1]] = s0, s1
                expected.add(tuple(v))
        got = {tuple(int(x.real) for x in v) for v in cb.vectors}
        assert got == expected == {tuple(int(x.real) for x in v) for v in cb.vectors}
        assert cb.size == 16

    def test_decode_total_on_codebook(self):
        cb = build_codebook(4, 2, build_alphabet("BPSK", 2))
        for i in range(cb.size):
            assert np.array_equal(gsm_decode(cb.vectors[i], cb), cb.bit_labels[i])

    def test_single_pattern_decode_is_symbol_labels(self):
        cb = build_codebook(2, 2, build_alphabet("QAM", 4))
        assert cb.pattern_set.index_bits == 0
        bits = bits_of(9, cb.bpcu)
        v = gsm_encode(bits, cb)
        assert np.array_equal(gsm_decode(v, cb), bits)

    def test_encode_rejects_wrong_length(self):
        cb = build_codebook(4, 2, build_alphabet("BPSK", 2))
        with pytest.raises(ValueError):
            gsm_encode([0, 1], cb)

    def test_decode_rejects_non_codeword(self):
        cb = build_codebook(4, 2, build_alphabet("BPSK", 2))
        with pytest.raises(ValueError):
            gsm_decode(np.array([1, 1, 1, 0], dtype=complex), cb)  # pattern not in set
        with pytest.raises(ValueError):
            gsm_decode(np.array([0.5, 1, 0, 0], dtype=complex), cb)  # symbol off-grid

    @pytest.mark.parametrize("n_t,n_rf,order", [(4, 2, 2), (4, 2, 4), (3, 2, 4), (2, 1, 8)])
    def test_cardinality(self, n_t, n_rf, order):
        alph = build_alphabet("BPSK", 2) if order == 2 else build_alphabet("QAM", order)
        cb = build_codebook(n_t, n_rf, alph)
        index = 2 ** (math.comb(n_t, n_rf).bit_length() - 1)
        assert cb.size == index * order**n_rf
        supports = cb.vectors != 0
        assert np.all(supports.sum(axis=1) == n_rf)

    def test_cardinality_sweep(self):
        # every feasible configuration up to n_t = 8 and 16-QAM
        for n_t in range(1, 9):
            for n_rf in range(1, n_t + 1):
                for order in (2, 4, 8, 16):
                    index = 2 ** (math.comb(n_t, n_rf).bit_length() - 1)
                    size = index * order**n_rf
                    if size > 1 << 12:
                        continue
                    alph = build_alphabet("BPSK", 2) if order == 2 \
                        else build_alphabet("QAM", order)
                    cb = build_codebook(n_t, n_rf, alph)
                    assert cb.size == size
                    assert cb.bpcu == bits_per_channel_use(n_t, n_rf, order)

    @settings(max_examples=40, deadline=None)
    @given(st.sampled_from([(4, 2, 2), (4, 2, 4), (5, 2, 2), (6, 3, 2), (4, 1, 8), (3, 3, 4)]),
           st.integers(min_value=0, max_value=2**20))
    def test_roundtrip_bijection(self, cfg, raw):
        n_t, n_rf, order = cfg
        alph = build_alphabet("BPSK", 2) if order == 2 else build_alphabet("QAM", order)
        cb = build_codebook(n_t, n_rf, alph)
        bits = bits_of(raw % 2**cb.bpcu, cb.bpcu)
        assert np.array_equal(gsm_decode(gsm_encode(bits, cb), cb), bits)


class TestBitMetrics:
    def test_bpcu_values(self):
        assert bits_per_channel_use(4, 2, 4) == 6
        assert bits_per_channel_use(1, 1, 2) == 1
        assert bits_per_channel_use(4, 2, 2) == 4

    def test_bit_distance_basics(self):
        cb = build_codebook(4, 2, build_alphabet("BPSK", 2))
        assert bit_distance(5, 5, cb) == 0
        assert max(bit_distance(0, j, cb) for j in range(cb.size)) <= cb.bpcu
        # every codeword differs from the others in 32 total bit positions
        for i in range(cb.size):
            assert sum(bit_distance(i, j, cb) for j in range(cb.size) if j != i) == 32

    def test_bit_distance_matches_xor_popcount(self):
        cb = build_codebook(4, 2, build_alphabet("QAM", 4))
        labs = cb.labels_int
        for i in (0, 7, 33):
            for j in (1, 15, 60):
                assert bit_distance(i, j, cb) == bin(int(labs[i]) ^ int(labs[j])).count("1")

    def test_activation_of_examples(self):
        assert list(activation_of(np.array([1, -1, -1, 0], dtype=complex))) == [1, 1, 1, 0]
        assert list(activation_of(np.zeros(4, dtype=complex))) == [0, 0, 0, 0]
        cb = build_codebook(4, 2, build_alphabet("BPSK", 2))
        for v in cb.vectors:
            cb.pattern_set.index_of(activation_of(v))  # must not raise


class TestMatchedConfigs:
    def test_target_6(self):
        out = matched_configs(6)
        assert (4, 2, 4) in out and (4, 1, 16) in out and (1, 1, 64) in out

    def test_target_4(self):
        out = matched_configs(4)
        assert (4, 2, 2) in out and (2, 2, 4) in out and (1, 1, 16) in out

    def test_target_1(self):
        assert (1, 1, 2) in matched_configs(1)

    def test_all_results_hit_target(self):
        for n_t, n_rf, order in matched_configs(8):
            assert bits_per_channel_use(n_t, n_rf, order) == 8
