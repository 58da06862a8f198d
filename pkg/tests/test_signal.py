"""Signal grid operations: convolution, subsampling, shifts, norms, formats."""

import numpy as np
import pytest

from scatterkit.errors import DimensionError, FormatError
from scatterkit.signal import (
    Signal,
    convolve,
    load_pgm,
    load_sig,
    save_pgm,
    save_sig,
    shift,
    subsample,
    upsample,
)


def _random_signal(shape, seed, complex_=False):
    rng = np.random.default_rng(seed)
    data = rng.standard_normal(shape)
    if complex_:
        data = data + 1j * rng.standard_normal(shape)
    return Signal(data)


def _random_kernel(shape, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class TestSignalInvariants:
    def test_rejects_non_power_of_two(self):
        with pytest.raises(DimensionError):
            Signal(np.zeros(12))

    def test_rejects_3d(self):
        with pytest.raises(DimensionError):
            Signal(np.zeros((4, 4, 4)))

    def test_immutable(self):
        x = _random_signal(8, 0)
        with pytest.raises(ValueError):
            x.samples[0] = 1.0

    def test_norm_convention(self):
        x = Signal(np.array([3.0, 4.0, 0.0, 0.0]), sample_spacing=2.0)
        assert x.norm2() == pytest.approx(25.0 * 2.0)

    def test_parseval(self):
        # sum |fft|^2 == N * ||x||^2 at unit spacing
        for seed in range(10):
            x = _random_signal((16, 16), seed, complex_=True)
            lhs = np.sum(np.abs(np.fft.fftn(x.samples)) ** 2)
            assert lhs == pytest.approx(x.size * x.norm2(), rel=1e-10)


class TestConvolve:
    def test_dirac_identity(self):
        # convolving a Dirac with h returns h's spatial samples
        d = np.zeros(16)
        d[0] = 1.0
        h = _random_kernel(16, 1)
        out = convolve(Signal(d), h)
        assert np.allclose(out.samples, np.fft.ifft(h), atol=1e-12)

    def test_zero_mean_kernel_kills_constants(self):
        h = _random_kernel((8, 8), 2)
        h[0, 0] = 0.0
        out = convolve(Signal(np.full((8, 8), 3.7)), h)
        assert np.max(np.abs(out.samples)) < 1e-12

    def test_matches_direct_sum_oracle(self):
        # direct O(N^2) circular convolution of 16-sample signals
        rng = np.random.default_rng(3)
        x = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        h_spatial = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        direct = np.array(
            [sum(x[m] * h_spatial[(n - m) % 16] for m in range(16)) for n in range(16)]
        )
        out = convolve(Signal(x), np.fft.fft(h_spatial))
        assert np.linalg.norm(out.samples - direct) / np.linalg.norm(direct) < 1e-10

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            convolve(_random_signal(8, 0), _random_kernel(16, 0))

    def test_nonexpansive_when_kernel_bounded(self):
        for seed in range(20):
            x = _random_signal(32, seed, complex_=True)
            h = _random_kernel(32, seed + 100)
            h /= np.max(np.abs(h))
            assert convolve(x, h).norm() <= x.norm() + 1e-12

    def test_commutes_with_shifts(self):
        for seed in range(50):
            rng = np.random.default_rng(seed)
            x = _random_signal(16, seed, complex_=True)
            h = _random_kernel(16, seed + 1000)
            tau = int(rng.integers(0, 16))
            a = convolve(shift(x, tau), h)
            b = shift(convolve(x, h), tau)
            assert np.linalg.norm(a.samples - b.samples) < 1e-12 * max(1.0, b.norm())


class TestSubsample:
    def test_keeps_stride_samples(self):
        x = Signal(np.arange(8, dtype=float) ** 2)
        y = subsample(x, 2)
        assert np.array_equal(y.samples.real, np.array([0.0, 4.0, 16.0, 36.0]))
        assert y.sample_spacing == 2.0

    def test_factor_one_identity(self):
        x = _random_signal(8, 0)
        assert subsample(x, 1) is x

    def test_non_divisible_factor(self):
        with pytest.raises(DimensionError):
            subsample(_random_signal(8, 0), 16)
        with pytest.raises(DimensionError):
            subsample(_random_signal(8, 0), 3)

    def test_lowpassed_signal_survives_round_trip(self):
        # band-limit at scale 2^j with a wide Gaussian, subsample by 2^j,
        # upsample back: residual is the aliasing level, below 1e-3
        j = 2
        for seed in range(5):
            x = _random_signal(64, seed)
            w = 2 * np.pi * np.fft.fftfreq(64)
            sigma = 1.5 * 2**j
            x_lp = convolve(x, np.exp(-0.5 * sigma**2 * w**2))
            back = upsample(subsample(x_lp, 2**j), 2**j)
            rel = np.linalg.norm(back.samples - x_lp.samples) / np.linalg.norm(x_lp.samples)
            assert rel < 1e-3

    def test_upsample_inverts_subsample_2d(self):
        rng = np.random.default_rng(7)
        w = 2 * np.pi * np.fft.fftfreq(32)
        w2 = w[:, None] ** 2 + w[None, :] ** 2
        x = convolve(Signal(rng.standard_normal((32, 32))), np.exp(-0.5 * 36.0 * w2))
        back = upsample(subsample(x, 4), 4)
        assert np.linalg.norm(back.samples - x.samples) / x.norm() < 1e-3


class TestShift:
    def test_zero_shift_identity(self):
        x = _random_signal(16, 0)
        assert np.array_equal(shift(x, 0).samples, x.samples)

    def test_round_trip_bit_exact(self):
        x = _random_signal((8, 16), 1, complex_=True)
        assert np.array_equal(shift(shift(x, (3, 5)), (-3, -5)).samples, x.samples)

    def test_norm_preserved(self):
        x = _random_signal(32, 2, complex_=True)
        assert shift(x, 11).norm() == x.norm()


class TestSig1Format:
    def test_real_round_trip(self, tmp_path):
        x = _random_signal((8, 4), 0)
        save_sig(x, tmp_path / "x.sig")
        y = load_sig(tmp_path / "x.sig")
        assert np.array_equal(y.samples, x.samples)
        assert abs(y.norm2() - x.norm2()) <= 1e-12 * x.norm2()

    def test_complex_round_trip(self, tmp_path):
        x = _random_signal(16, 1, complex_=True)
        save_sig(x, tmp_path / "x.sig")
        y = load_sig(tmp_path / "x.sig")
        assert np.array_equal(y.samples, x.samples)

    def test_layout_bytes(self, tmp_path):
        x = Signal(np.array([1.0, 2.0, 3.0, 4.0]))
        save_sig(x, tmp_path / "x.sig")
        blob = (tmp_path / "x.sig").read_bytes()
        assert blob[:4] == b"SIG1"
        assert int.from_bytes(blob[4:8], "little") == 1
        assert int.from_bytes(blob[8:12], "little") == 4
        assert blob[12] == 0  # real flag
        assert np.frombuffer(blob[13:], dtype="<f8").tolist() == [1.0, 2.0, 3.0, 4.0]

    def test_bad_magic(self, tmp_path):
        (tmp_path / "junk.sig").write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(FormatError):
            load_sig(tmp_path / "junk.sig")


class TestPgm:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        img = Signal(np.round(rng.random((16, 32)) * 255) / 255.0)
        save_pgm(img, tmp_path / "x.pgm")
        y = load_pgm(tmp_path / "x.pgm")
        assert np.allclose(y.samples.real, img.samples.real, atol=1e-12)

    def test_header_with_comment(self, tmp_path):
        body = b"P5\n# a comment\n4 4\n255\n" + bytes(range(16))
        (tmp_path / "c.pgm").write_bytes(body)
        y = load_pgm(tmp_path / "c.pgm")
        assert y.shape == (4, 4)
        assert y.samples.real[0, 1] == pytest.approx(1 / 255)

    def test_rejects_1d_export(self, tmp_path):
        with pytest.raises(DimensionError):
            save_pgm(_random_signal(8, 0), tmp_path / "x.pgm")
