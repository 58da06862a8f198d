"""Filter bank construction: zero mean, unit mass, frames, dilations, cascade."""

import numpy as np
import pytest

from scatterkit.errors import FrameError, ScaleError
from scatterkit.filterbank import (
    BankParams,
    apply_cascade,
    build_bank_1d,
    build_morlet_2d,
    cascade_filters,
    frame_bounds,
    littlewood_paley,
    load_bank,
    periodize_kernel,
    save_bank,
)
from scatterkit.signal import Signal, convolve


class TestBuildGates:
    def test_scale_exceeding_grid(self):
        with pytest.raises(ScaleError):
            build_morlet_2d((32, 32), 6, 4)

    def test_scale_error_1d(self):
        with pytest.raises(ScaleError):
            build_bank_1d((16,), 5, 1)

    def test_frame_gate_raises_with_frequency(self):
        # a single 2D orientation cannot tile the plane
        with pytest.raises(FrameError) as err:
            build_morlet_2d((64, 64), 3, 1)
        assert err.value.frequency is not None

    def test_high_q_bank_needs_lowered_gate(self):
        # 12 narrow bands per octave leave the top fraction-octave uncovered
        with pytest.raises(FrameError):
            build_bank_1d((4096,), 4, 12)
        bank = build_bank_1d((4096,), 4, 12, BankParams(frame_min=0.0))
        assert bank.frame_upper <= 1.0 + 1e-6


class TestFilterInvariants:
    def test_zero_mean_band_passes(self, bank_2d_128):
        for (j, k), kern in bank_2d_128.wavelets.items():
            h = kern.spatial()
            assert abs(h.sum()) <= 1e-6 * np.abs(h).sum(), (j, k)

    def test_unit_mass_low_pass(self, bank_2d_128):
        assert abs(bank_2d_128.low_pass.samples[0, 0] - 1.0) <= 1e-9
        for j in range(bank_2d_128.n_scales + 1):
            phi = bank_2d_128.low_pass_at_scale(j)
            assert abs(phi[(0, 0)] - 1.0) <= 1e-9

    def test_paper_figure_layout(self, bank_2d_128):
        # J=4 scales, K=4 orientations: 16 band-pass channels plus 1 low-pass
        assert len(bank_2d_128.wavelets) == 16
        assert bank_2d_128.low_pass.kind == "low_pass"
        assert {j for j, _ in bank_2d_128.wavelets} == {1, 2, 3, 4}

    def test_frame_bounds_2d_default(self, bank_2d_128):
        # measured on the dense FFT sweep; frozen from the tuned defaults
        assert bank_2d_128.frame_lower >= 0.5
        assert bank_2d_128.frame_upper <= 1.0 + 1e-6
        assert bank_2d_128.frame_lower == pytest.approx(0.699, abs=0.005)

    def test_frame_bounds_1d(self):
        for n_bands in (1, 2):
            bank = build_bank_1d((128,), 4, n_bands)
            assert bank.frame_lower >= 0.5
            assert bank.frame_upper <= 1.0 + 1e-6

    def test_half_tone_band_count(self):
        # 12 bands per octave, each octave populated
        bank = build_bank_1d((4096,), 3, 12, BankParams(frame_min=0.0))
        assert sorted({k for _, k in bank.wavelets}) == list(range(12))
        assert len(bank.wavelets) == 36

    def test_k1_degenerates_to_dyadic(self):
        bank = build_bank_1d((128,), 4, 1)
        assert len(bank.wavelets) == 4
        # band centers fall by factor 2 per scale
        centers = []
        w = 2 * np.pi * np.fft.fftfreq(128)
        for j in range(1, 5):
            centers.append(abs(w[np.argmax(np.abs(bank.wavelets[(j, 0)].samples))]))
        ratios = np.array(centers[:-1]) / np.array(centers[1:])
        assert np.allclose(ratios, 2.0, rtol=0.1)


class TestDilationCovariance:
    def test_kernels_match_dilated_mother_2d(self, bank_2d_128):
        from scatterkit.filterbank import _freq_vectors

        omega = _freq_vectors(bank_2d_128.shape)
        dc = (0, 0)
        for (j, k), kern in bank_2d_128.wavelets.items():
            expected = bank_2d_128.mother_hat(omega, k, bank_2d_128.dilation(j, k))
            expected[dc] = 0.0
            assert np.max(np.abs(kern.samples - expected)) <= 1e-6

    def test_cross_scale_shared_grid_points(self, bank_2d_128):
        # psi_[j+1,k](w) == psi_[j,k](2w) on interior grid points.  Sampled
        # dilation covariance is exact once the filter's 2*pi-wrapped tails
        # die out: at j=2 the perpendicular envelope still wraps at the 1e-3
        # level, from j=3 the match is at roundoff.
        n = bank_2d_128.shape[0]
        m = np.arange(-n // 8, n // 8)  # |omega| < pi/4: doubling stays interior
        for k in range(bank_2d_128.n_bands):
            for j, tol in ((2, 1e-2), (3, 1e-6)):
                fine = bank_2d_128.wavelets[(j, k)].samples
                coarse = bank_2d_128.wavelets[(j + 1, k)].samples
                diff = coarse[np.ix_(m, m)] - fine[np.ix_(2 * m, 2 * m)]
                assert np.max(np.abs(diff)) <= tol, (j, k)

    def test_log_frequency_shift_1d(self):
        bank = build_bank_1d((128,), 4, 2)
        n = 128
        m = np.arange(-n // 8, n // 8)
        for k in range(2):
            for j in (2, 3):
                fine = bank.wavelets[(j, k)].samples
                coarse = bank.wavelets[(j + 1, k)].samples
                assert np.max(np.abs(coarse[m] - fine[2 * m])) <= 1e-6


class TestLittlewoodPaley:
    def test_sweep_statistics(self, bank_2d_128):
        lp = littlewood_paley(
            bank_2d_128.low_pass.samples,
            [w.samples for w in bank_2d_128.wavelets.values()],
        )
        a, b, worst = frame_bounds(
            bank_2d_128.low_pass.samples,
            [w.samples for w in bank_2d_128.wavelets.values()],
        )
        assert a == pytest.approx(lp.real.min())
        assert b == pytest.approx(lp.real.max())
        assert lp.real.max() <= 1.0 + 1e-9
        assert abs(lp[0, 0] - 1.0) <= 1e-9  # DC: unit-mass low-pass alone

    def test_symmetrization_is_even(self, bank_2d_small):
        lp = littlewood_paley(
            bank_2d_small.low_pass.samples,
            [w.samples for w in bank_2d_small.wavelets.values()],
        )
        from scatterkit.signal import negate_frequency

        assert np.allclose(lp, negate_frequency(lp), atol=1e-12)


class TestCascade:
    def test_first_scale_filters_equal_wavelets(self, bank_2d_small):
        # phi_0 is the identity, so w_[1,k] == psi_[1,k] exactly
        cas = cascade_filters(bank_2d_small)
        for k in range(bank_2d_small.n_bands):
            assert np.array_equal(cas[(1, k)].samples, bank_2d_small.wavelets[(1, k)].samples)

    def test_recursion_reconstructs_wavelets(self, bank_2d_128):
        # w_[j,k] * phi_[j-1] == psi_[j,k] within 1e-3 relative L2
        cas = bank_2d_128.cascade
        for (j, k), kern in bank_2d_128.wavelets.items():
            rebuilt = cas[(j, k)].samples * bank_2d_128.low_pass_at_scale(j - 1)
            rel = np.linalg.norm(rebuilt - kern.samples) / np.linalg.norm(kern.samples)
            assert rel <= 1e-3, (j, k, rel)

    def test_low_pass_chain_reconstructs_phi(self, bank_2d_128):
        prod = np.ones(bank_2d_128.shape, dtype=np.complex128)
        for j in range(1, bank_2d_128.n_scales + 1):
            prod = prod * bank_2d_128.cascade[(j, -1)].samples
        rel = np.linalg.norm(prod - bank_2d_128.low_pass.samples) / np.linalg.norm(
            bank_2d_128.low_pass.samples
        )
        assert rel <= 1e-3

    def test_fast_cascade_matches_direct(self, bank_2d_128):
        rng = np.random.default_rng(0)
        x = Signal(rng.standard_normal((128, 128)))
        low_fast, bands_fast = apply_cascade(x, bank_2d_128)
        for key, fast in bands_fast.items():
            direct = convolve(x, bank_2d_128.wavelets[key])
            rel = np.linalg.norm(fast.samples - direct.samples) / direct.norm()
            assert rel <= 1e-3, key
        direct_low = convolve(x, bank_2d_128.low_pass)
        assert np.linalg.norm(low_fast.samples - direct_low.samples) / direct_low.norm() <= 1e-3

    def test_fast_cascade_matches_direct_1d(self, bank_1d_128):
        rng = np.random.default_rng(1)
        x = Signal(rng.standard_normal(128))
        low_fast, bands_fast = apply_cascade(x, bank_1d_128)
        for key, fast in bands_fast.items():
            direct = convolve(x, bank_1d_128.wavelets[key])
            assert np.linalg.norm(fast.samples - direct.samples) / direct.norm() <= 1e-3


class TestPeriodizeKernel:
    def test_matches_strided_spatial_taps(self):
        rng = np.random.default_rng(4)
        h = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        hat = np.fft.fft(h)
        folded = periodize_kernel(hat, 4)
        taps = np.fft.ifft(folded)
        assert np.allclose(taps, 4.0 * h[::4], atol=1e-12)

    def test_preserves_dc_gain(self, bank_2d_small):
        # sum-periodization keeps unit DC gain up to the filter's own tail
        # mass beyond the folded Nyquist (a mean-periodization would divide
        # the gain by the fold factor instead)
        phi = bank_2d_small.low_pass.samples
        folded = periodize_kernel(phi, 4)
        assert folded[0, 0] == pytest.approx(phi[0, 0].real, abs=1e-4)


class TestBankSerialization:
    def test_round_trip(self, tmp_path, bank_2d_small):
        save_bank(bank_2d_small, tmp_path / "bank")
        loaded = load_bank(tmp_path / "bank")
        assert loaded.n_scales == bank_2d_small.n_scales
        assert loaded.n_bands == bank_2d_small.n_bands
        assert loaded.frame_lower == pytest.approx(bank_2d_small.frame_lower)
        assert np.array_equal(loaded.low_pass.samples, bank_2d_small.low_pass.samples)
        for key in bank_2d_small.wavelets:
            assert np.array_equal(loaded.wavelets[key].samples, bank_2d_small.wavelets[key].samples)
        for key in bank_2d_small.cascade:
            assert np.array_equal(loaded.cascade[key].samples, bank_2d_small.cascade[key].samples)
