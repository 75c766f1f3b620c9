import itertools

import numpy as np
import pytest
from scipy.stats import norm

from gsmlink.analysis import (SpectrumClass, alpha_spectrum, pep, phi_counts,
                              union_bound_direct, union_bound_reduced, value_sets)
from gsmlink.modulation import build_alphabet, build_codebook, build_pattern_set


class TestPep:
    def test_zero_distance_single_antenna(self):
        assert pep(0.0, 1) == pytest.approx(0.5, abs=0)

    def test_zero_distance_any_n(self):
        # a zero-distance pair is a fair coin flip regardless of diversity
        for n in (2, 8, 64, 200):
            assert pep(0.0, n) == pytest.approx(0.5, rel=1e-12)

    def test_single_antenna_is_f(self):
        for a in (0.5, 2.0, 30.0):
            f = 0.5 * (1 - np.sqrt(a / (1 + a)))
            assert pep(a, 1) == pytest.approx(f, rel=1e-14)

    def test_monotone_in_alpha_and_n(self):
        alphas = np.array([0.1, 0.5, 1.0, 4.0, 20.0, 100.0])
        for n in (1, 4, 64, 128):
            vals = pep(alphas, n)
            assert np.all(np.diff(vals) < 0)
        for a in (0.5, 4.0):
            vals = [pep(a, n) for n in (1, 2, 4, 8, 64, 96)]
            assert all(x > y for x, y in zip(vals, vals[1:]))

    def test_log_and_linear_domains_agree(self):
        # the implementation switches regimes at N = 64
        for a in (0.2, 1.0, 8.0):
            assert pep(a, 63) / pep(a, 64) > 1  # monotone across the switch
        # continuity: N=64 between N=63 and N=65
        for a in (0.5, 5.0):
            assert pep(a, 63) > pep(a, 64) > pep(a, 65)

    @pytest.mark.parametrize("alpha,n_rx", [(1.0, 2), (0.5, 4)])
    def test_against_monte_carlo_expectation(self, alpha, n_rx):
        # independent oracle: E[Q(sqrt(2 alpha u))] with u ~ chi^2_{2N} / 2.
        # Limited to moderate tail depths where 1e6 draws give ~1% accuracy.
        rng = np.random.default_rng(123)
        u = rng.gamma(shape=n_rx, scale=1.0, size=1_000_000)
        mc = float(np.mean(norm.sf(np.sqrt(2.0 * alpha * u))))
        assert pep(alpha, n_rx) == pytest.approx(mc, rel=0.01)

    def test_against_quadrature(self):
        from math import gamma as gamma_fn

        from scipy.integrate import quad

        alpha, n_rx = 4.0, 8
        val, _ = quad(lambda u: norm.sf(np.sqrt(2 * alpha * u))
                      * u ** (n_rx - 1) * np.exp(-u) / gamma_fn(n_rx), 0, 60, limit=200)
        assert pep(alpha, n_rx) == pytest.approx(val, rel=1e-8)

    @pytest.mark.parametrize("alpha", [0.1, 1.0, 4.0, 30.0])
    @pytest.mark.parametrize("n_rx", [1, 2, 8, 63, 64, 128])
    def test_incomplete_beta_identity(self, alpha, n_rx):
        # E[Q(sqrt(2 a u))] over chi^2_{2N}/2 equals I_f(N, N); scipy's
        # betainc is an independent implementation covering the deep tail
        from scipy.special import betainc

        f = 0.5 * (1 - np.sqrt(alpha / (1 + alpha)))
        assert pep(alpha, n_rx) == pytest.approx(float(betainc(n_rx, n_rx, f)), rel=1e-9)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            pep(-1.0, 4)


class TestValueSets:
    def test_qam4(self):
        vs = value_sets(build_alphabet("QAM", 4))
        assert vs.j_values == (2,) and vs.j_mult == (4,)
        assert vs.l_values == (0, 4, 8) and vs.l_mult == (4, 8, 4)

    def test_bpsk(self):
        vs = value_sets(build_alphabet("BPSK", 2))
        assert vs.j_values == (1,) and vs.l_values == (0, 4)

    def test_mass_conservation(self):
        for order in (4, 8, 16):
            a = build_alphabet("QAM", order)
            vs = value_sets(a)
            assert sum(vs.j_mult) == order
            assert sum(vs.l_mult) == order**2
            assert 0 in vs.l_values


def brute_force_phi(pattern_set, k_users):
    """Independent double loop over pattern tuples; stacked common actives."""
    pats = [tuple(int(b) for b in p) for p in pattern_set.patterns]
    n_rf = pattern_set.n_rf
    phi = {}
    idx = {}
    for si in itertools.product(range(len(pats)), repeat=k_users):
        for sj in itertools.product(range(len(pats)), repeat=k_users):
            common = sum(sum(x & y for x, y in zip(pats[a], pats[b]))
                         for a, b in zip(si, sj))
            q = k_users * n_rf - common
            d = sum(bin(a ^ b).count("1") for a, b in zip(si, sj))
            phi[q] = phi.get(q, 0) + 1
            idx[q] = idx.get(q, 0) + d
    return phi, idx


class TestPhiCounts:
    def test_matches_brute_force_k2(self):
        ps = build_pattern_set(4, 2)
        qt = phi_counts(ps, 2)
        phi, idx = brute_force_phi(ps, 2)
        assert qt.phi.tolist() == [phi.get(q, 0) for q in range(5)]
        assert qt.idx_dist.tolist() == [idx.get(q, 0) for q in range(5)]

    def test_matches_brute_force_other_configs(self):
        for n_t, n_rf, k in [(4, 2, 1), (5, 2, 2), (6, 3, 1)]:
            ps = build_pattern_set(n_t, n_rf)
            qt = phi_counts(ps, k)
            phi, _ = brute_force_phi(ps, k)
            got = {int(q): int(c) for q, c in zip(qt.q_values, qt.phi) if c}
            assert got == phi

    def test_invariants(self):
        ps = build_pattern_set(4, 2)
        for k in (1, 2, 3):
            qt = phi_counts(ps, k)
            assert qt.phi.sum() == ps.size ** (2 * k)
            assert qt.phi[0] == ps.size**k
            assert qt.idx_dist[0] == 0

    def test_single_pattern_case(self):
        qt = phi_counts(build_pattern_set(3, 3), 1)
        assert qt.phi.tolist() == [1]


class TestAlphaSpectrum:
    def test_single_slot_identical_bpsk(self):
        # one user, one slot, same pattern: after excluding x~ = x only the
        # two ordered differing pairs remain, each at distance 4 and 1 bit
        spec = alpha_spectrum(SpectrumClass(1, (((0, 0),),)), build_alphabet("BPSK", 2))
        assert spec.entries == ((4, 2, 2),)

    def test_q1_aligned_4qam_nrf3(self):
        # two mismatched slots contribute 2 each; two aligned pairs contribute
        # L values {0,4,8}: alpha covers 4..20 in steps of 4
        matching = ((0, 0), (1, 1))  # two of three slots aligned
        spec = alpha_spectrum(SpectrumClass(3, (matching,)), build_alphabet("QAM", 4))
        alphas = [e[0] for e in spec.entries]
        assert alphas == [4, 8, 12, 16, 20]
        assert spec.total_pairs == 4**6

    def test_q1_aligned_matches_direct_enumeration(self):
        a = build_alphabet("QAM", 4)
        pts, bits = a.points, a.bits
        matching = ((0, 0), (1, 1))
        hist = {}
        for xs in itertools.product(range(4), repeat=3):
            for ys in itertools.product(range(4), repeat=3):
                alpha = (abs(pts[xs[0]] - pts[ys[0]]) ** 2
                         + abs(pts[xs[1]] - pts[ys[1]]) ** 2
                         + abs(pts[xs[2]]) ** 2 + abs(pts[ys[2]]) ** 2)
                d = sum(int(np.sum(bits[x] != bits[y])) for x, y in zip(xs, ys))
                key = int(round(alpha))
                cnt, tot = hist.get(key, (0, 0))
                hist[key] = (cnt + 1, tot + d)
        spec = alpha_spectrum(SpectrumClass(3, (matching,)), a)
        assert {e[0]: (e[1], e[2]) for e in spec.entries} == hist

    def test_identical_class_mass(self):
        a = build_alphabet("QAM", 4)
        full = tuple((r, r) for r in range(2))
        spec = alpha_spectrum(SpectrumClass(2, (full, full)), a)
        m = 4**4
        assert spec.total_pairs == m * (m - 1)
        assert all(e[0] > 0 for e in spec.entries)

    def test_cross_class_mass(self):
        a = build_alphabet("BPSK", 2)
        spec = alpha_spectrum(SpectrumClass(2, (((0, 1),), ((0, 0), (1, 1)))), a)
        assert spec.total_pairs == 2 ** (2 * 2 * 2)


class TestUnionBounds:
    def test_closed_form_rayleigh_bpsk(self):
        cb = build_codebook(1, 1, build_alphabet("BPSK", 2))
        for sigma2 in (4.0, 1.0, 0.05):
            gbar = 1.0 / sigma2
            exact = 0.5 * (1 - np.sqrt(gbar / (1 + gbar)))
            for fn in (union_bound_direct, union_bound_reduced):
                got = fn(cb, 1, [sigma2], 1).bound[0]
                assert got == pytest.approx(exact, rel=1e-12)

    def test_low_snr_limit(self):
        cb = build_codebook(1, 1, build_alphabet("BPSK", 2))
        assert union_bound_reduced(cb, 1, [1e12], 1).bound[0] == pytest.approx(0.5, rel=1e-5)

    def test_diversity_strictly_helps(self):
        cb = build_codebook(2, 1, build_alphabet("BPSK", 2))
        b1 = union_bound_reduced(cb, 1, [0.5], 1).bound[0]
        b2 = union_bound_reduced(cb, 1, [0.5], 2).bound[0]
        assert b2 < b1

    @pytest.mark.parametrize("n_t,n_rf,order,k,n_rx", [
        (2, 1, 2, 1, 2),
        (4, 2, 2, 2, 4),
        (4, 3, 4, 1, 2),
        (2, 2, 8, 1, 3),
    ])
    def test_reduced_equals_direct(self, n_t, n_rf, order, k, n_rx):
        alph = build_alphabet("BPSK", 2) if order == 2 else build_alphabet("QAM", order)
        cb = build_codebook(n_t, n_rf, alph)
        sigma2 = np.array([8.0, 2.0, 0.5, 0.125])
        bd = union_bound_direct(cb, k, sigma2, n_rx).bound
        br = union_bound_reduced(cb, k, sigma2, n_rx).bound
        assert np.all(np.abs(br - bd) <= 1e-9 * bd)

    def test_monotone_non_increasing_in_snr(self):
        cb = build_codebook(4, 2, build_alphabet("QAM", 4))
        sigma2 = np.array([10.0, 5.0, 2.0, 1.0, 0.5, 0.1])  # decreasing = increasing SNR
        vals = union_bound_reduced(cb, 1, sigma2, 4).bound
        assert np.all(np.diff(vals) <= 0)
        assert np.all(vals >= 0)

    def test_class_cache_stays_small(self):
        cb = build_codebook(4, 2, build_alphabet("BPSK", 2))
        br = union_bound_reduced(cb, 2, [1.0], 4)
        assert br.diagnostics["n_classes"] <= 64
        assert br.diagnostics["n_pattern_pairs"] == 256

    def test_direct_guard(self):
        cb = build_codebook(4, 2, build_alphabet("QAM", 4))
        with pytest.raises(ValueError):
            union_bound_direct(cb, 3, [1.0], 4)  # 64^3 > 2^16

    def test_eta(self):
        cb = build_codebook(4, 2, build_alphabet("QAM", 4))
        assert union_bound_reduced(cb, 2, [1.0], 4).eta == 12
