import numpy as np
import pytest

from gsmlink.channel import (NoiseModel, delay_profile, sample_flat,
                             sample_selective, snr_to_sigma2, stream,
                             transmit_flat)


class TestFlatSampling:
    def test_seed_determinism(self):
        a = sample_flat(8, 2, 4, rng=stream(42, 0, 1))
        b = sample_flat(8, 2, 4, rng=stream(42, 0, 1))
        assert np.array_equal(a.gains, b.gains)

    def test_streams_are_independent(self):
        a = sample_flat(8, 2, 4, rng=stream(42, 0, 1))
        b = sample_flat(8, 2, 4, rng=stream(42, 1, 1))
        assert not np.allclose(a.gains, b.gains)

    def test_unit_variance_moments(self):
        ch = sample_flat(1000, 25, 4, rng=stream(3, 0, 1))  # 1e5 entries
        m = ch.gains.size
        assert abs(ch.gains.mean()) < 4 / np.sqrt(m)
        assert np.mean(np.abs(ch.gains) ** 2) == pytest.approx(1.0, rel=0.05)

    def test_column_variance_scaling(self):
        cols = 4
        cv = np.array([2.0, 1.0, 0.5, 0.5])
        ch = sample_flat(20000, 1, cols, column_vars=cv, rng=stream(5, 0, 1))
        emp = np.mean(np.abs(ch.gains) ** 2, axis=0)
        assert np.allclose(emp, cv, rtol=0.1)

    def test_column_variance_validation(self):
        with pytest.raises(ValueError):
            sample_flat(4, 1, 4, column_vars=[1, 1, 1, 2], rng=stream(0))
        with pytest.raises(ValueError):
            sample_flat(4, 1, 4, column_vars=[4, 0, 0, 0], rng=stream(0))


class TestTransmit:
    def test_noiseless(self):
        ch = sample_flat(8, 2, 2, rng=stream(1, 0, 1))
        x = stream(1, 0, 0).standard_normal(4) + 0j
        y = transmit_flat(ch, x, NoiseModel(0.0), rng=stream(1, 0, 2))
        assert np.allclose(y, ch.gains @ x)

    def test_zero_signal_noise_power(self):
        ch = sample_flat(2000, 1, 1, rng=stream(2, 0, 1))
        y = transmit_flat(ch, np.zeros(1, dtype=complex), NoiseModel(2.5),
                          rng=stream(2, 0, 2))
        assert np.sum(np.abs(y) ** 2) == pytest.approx(2000 * 2.5, rel=0.1)

    def test_dimension_mismatch(self):
        ch = sample_flat(4, 2, 2, rng=stream(0))
        with pytest.raises(ValueError):
            transmit_flat(ch, np.zeros(3, dtype=complex), NoiseModel(1.0), rng=stream(0))

    def test_received_power_budget(self):
        # E||y||^2 / N = K n_rf E_avg + sigma2 for unit columns, random codewords
        from gsmlink.modulation import build_alphabet, build_codebook

        cb = build_codebook(4, 2, build_alphabet("QAM", 4))
        k_users, n_rx, sigma2 = 2, 16, 1.5
        rng = stream(7, 0, 1)
        rb = stream(7, 0, 0)
        rn = stream(7, 0, 2)
        total = 0.0
        trials = 400
        for _ in range(trials):
            ch = sample_flat(n_rx, k_users, 4, rng=rng)
            x = cb.vectors[rb.integers(0, cb.size, k_users)].reshape(-1)
            y = transmit_flat(ch, x, NoiseModel(sigma2), rng=rn)
            total += np.sum(np.abs(y) ** 2) / n_rx
        expected = k_users * 2 * cb.alphabet.avg_energy + sigma2
        assert total / trials == pytest.approx(expected, rel=0.05)


class TestSelective:
    def test_profile_examples(self):
        p = delay_profile(3, 3.0)
        raw = np.array([1.0, 10**-0.3, 10**-0.6])
        assert np.allclose(p, raw / raw.sum())
        assert np.allclose(delay_profile(4, 0.0), 0.25)

    @pytest.mark.parametrize("n_taps", [1, 2, 5, 16])
    @pytest.mark.parametrize("xi_db", [0.0, 3.0, 20.0])
    def test_profile_normalization(self, n_taps, xi_db):
        assert delay_profile(n_taps, xi_db).sum() == pytest.approx(1.0, abs=1e-12)

    def test_single_tap_degenerates_to_flat(self):
        ch = sample_selective(2000, 1, 2, 1, 0.0, rng=stream(4, 0, 1))
        assert ch.profile[0] == pytest.approx(1.0)
        assert np.mean(np.abs(ch.taps[0]) ** 2) == pytest.approx(1.0, rel=0.05)

    def test_tap_variances_follow_profile(self):
        ch = sample_selective(3000, 1, 2, 3, 3.0, rng=stream(4, 0, 1))
        emp = np.mean(np.abs(ch.taps) ** 2, axis=(1, 2))
        assert np.allclose(emp, ch.profile, rtol=0.1)


class TestSnrMapping:
    def test_reference_points(self):
        assert snr_to_sigma2(0.0, 1, 1, 1.0) == pytest.approx(1.0)
        assert snr_to_sigma2(10.0, 16, 2, 2.0) == pytest.approx(6.4)

    def test_db_gap_is_ratio(self):
        a = snr_to_sigma2(7.0, 4, 2, 2.0)
        b = snr_to_sigma2(10.0, 4, 2, 2.0)
        assert a / b == pytest.approx(10 ** 0.3)


def test_gram_offdiag_shrinks_with_n():
    # off-diagonal-to-diagonal ratio of H^H H / N falls like 1/sqrt(N)
    ratios = {}
    for n_rx in (16, 64):
        vals = []
        for t in range(200):
            h = sample_flat(n_rx, 2, 2, rng=stream(8, t, 1)).gains
            j = h.conj().T @ h / n_rx
            off = np.abs(j[~np.eye(4, dtype=bool)])
            vals.append(np.median(off) / np.median(np.diag(j).real))
        ratios[n_rx] = np.median(vals)
    assert 0.4 < ratios[64] / ratios[16] < 0.62  # expect ~ sqrt(16/64) = 0.5
