"""Deterministic synthetic test signals: textures, images, audio, and digits.

Everything here is a pure function of its seed, so experiments and the
acceptance suite are reproducible without bundling binary assets.  The digit
generator renders ten stroke-skeleton classes at 28x28 with per-sample
rotation, shear, scale, stroke-width and translation variability, zero-padded
to 32x32; intra-class variability is dominated by translations and small
deformations, which is the regime scattering features are built for.
"""

from __future__ import annotations

import numpy as np

from .signal import Signal

__all__ = [
    "filtered_noise_image",
    "natural_image",
    "audio_signal",
    "sparse_image",
    "spike_texture",
    "texture_image",
    "digits_dataset",
    "render_digit",
]


def filtered_noise_image(n: int = 64, seed: int = 0, bandwidth: float = 0.25) -> Signal:
    """Random real image with energy mostly below ``bandwidth`` * Nyquist."""
    rng = np.random.default_rng(seed)
    w = 2.0 * np.pi * np.fft.fftfreq(n)
    w2 = w[:, None] ** 2 + w[None, :] ** 2
    kernel = np.exp(-w2 / (2.0 * (bandwidth * np.pi) ** 2))
    img = np.fft.ifft2(np.fft.fft2(rng.standard_normal((n, n))) * kernel).real
    return Signal(img / img.std())


def natural_image(n: int = 64, seed: int = 0) -> Signal:
    """Natural-statistics stand-in: 1/f noise plus soft-edged patches.

    Pixel values lie in [0, 1]; the spectrum decays like a photograph's and
    the patches provide the edge/corner geometry real scenes have.
    """
    rng = np.random.default_rng(seed)
    w = 2.0 * np.pi * np.fft.fftfreq(n)
    radius = np.sqrt(w[:, None] ** 2 + w[None, :] ** 2)
    amp = 1.0 / (radius + 2.0 * np.pi / n)
    amp[0, 0] = 0.0
    noise = np.fft.ifft2(np.fft.fft2(rng.standard_normal((n, n))) * amp).real
    noise /= max(np.abs(noise).max(), 1e-12)

    yy, xx = np.mgrid[0:n, 0:n] / n
    img = 0.25 * noise + 0.1 * (xx + yy)
    for _ in range(4):
        cy, cx = rng.random(2)
        hy, hx = 0.08 + 0.17 * rng.random(2)
        level = rng.uniform(-0.4, 0.4)
        edge = 1.0 / (1.0 + np.exp((np.abs(yy - cy) - hy) / 0.01)) * 1.0 / (
            1.0 + np.exp((np.abs(xx - cx) - hx) / 0.01)
        )
        img = img + level * edge
    img = img - img.min()
    img = img / max(img.max(), 1e-12)
    return Signal(img)


def audio_signal(n: int = 4096, seed: int = 0) -> Signal:
    """Audio-like 1D test signal: two modulated harmonic notes over pink noise.

    Band-limited below 0.7 * pi so a high-Q bank's covered range sees all of
    the energy.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(n)
    out = np.zeros(n)
    for f0, t0, span in ((0.028, 0.15, 0.45), (0.047, 0.5, 0.4)):
        envelope = np.exp(-0.5 * ((t / n - t0 - span / 2) / (span / 4)) ** 2)
        for harmonic in range(1, 6):
            freq = f0 * harmonic * 2.0 * np.pi
            if freq > 0.7 * np.pi:
                break
            out += envelope * np.cos(freq * t + rng.uniform(0, 2 * np.pi)) / harmonic
    w = 2.0 * np.pi * np.fft.fftfreq(n)
    amp = np.where(np.abs(w) > 0, 1.0 / np.sqrt(np.abs(w) + 1e-3), 0.0)
    amp[np.abs(w) > 0.7 * np.pi] = 0.0
    pink = np.fft.ifft(np.fft.fft(rng.standard_normal(n)) * amp).real
    out += 0.1 * pink / pink.std()
    return Signal(out / out.std())


def sparse_image(n: int = 32, seed: int = 0, bumps: int = 2, width: float = 1.6) -> Signal:
    """A few isolated Gaussian bumps: sparse wavelet support by construction."""
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:n, 0:n]
    img = np.zeros((n, n))
    for _ in range(bumps):
        cy, cx = rng.integers(n // 4, 3 * n // 4, size=2)
        a = rng.uniform(0.6, 1.0)
        img += a * np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * width**2))
    return Signal(img)


def spike_texture(n: int = 32, seed: int = 0, density: float = 0.04) -> Signal:
    """Sparse +-1 spikes: strongly non-Gaussian with a nearly flat spectrum."""
    rng = np.random.default_rng(seed)
    shape = (n, n)
    hits = rng.random(shape) < density
    signs = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    return Signal(hits * signs)


def texture_image(n: int = 32, seed: int = 0) -> Signal:
    """Stationary oscillatory texture (modulated noise), zero mean."""
    rng = np.random.default_rng(seed)
    w = 2.0 * np.pi * np.fft.fftfreq(n)
    w2 = w[:, None] ** 2 + w[None, :] ** 2
    base = np.fft.ifft2(np.fft.fft2(rng.standard_normal((n, n))) * np.exp(-w2 * 4.0)).real
    yy, xx = np.mgrid[0:n, 0:n]
    carrier = np.cos(2.0 * np.pi * 4.0 * xx / n) + np.cos(2.0 * np.pi * 3.0 * yy / n)
    img = base / base.std() + 0.5 * carrier * np.abs(base) / base.std()
    img = img - img.mean()
    return Signal(img / img.std())


# ---------------------------------------------------------------------------
# Digits
# ---------------------------------------------------------------------------


def _ellipse(cx, cy, rx, ry, n=16, start=0.0, sweep=2.0 * np.pi):
    t = start + sweep * np.arange(n + 1) / n
    return np.stack([cx + rx * np.cos(t), cy + ry * np.sin(t)], axis=1)


def _strokes():
    """Unit-square polylines per class; x right, y down."""
    s = {
        0: [_ellipse(0.5, 0.5, 0.24, 0.33)],
        1: [np.array([[0.38, 0.28], [0.54, 0.16], [0.54, 0.84]])],
        2: [
            np.array([[0.32, 0.30], [0.40, 0.18], [0.58, 0.16], [0.68, 0.28],
                      [0.64, 0.44], [0.34, 0.72], [0.30, 0.84]]),
            np.array([[0.30, 0.84], [0.70, 0.84]]),
        ],
        3: [
            np.array([[0.32, 0.22], [0.52, 0.16], [0.66, 0.28], [0.52, 0.46]]),
            np.array([[0.52, 0.46], [0.68, 0.62], [0.56, 0.82], [0.32, 0.80]]),
        ],
        4: [
            np.array([[0.60, 0.16], [0.28, 0.60], [0.76, 0.60]]),
            np.array([[0.60, 0.16], [0.60, 0.84]]),
        ],
        5: [
            np.array([[0.68, 0.18], [0.36, 0.18], [0.34, 0.46]]),
            np.array([[0.34, 0.46], [0.58, 0.42], [0.68, 0.58], [0.62, 0.78], [0.34, 0.82]]),
        ],
        6: [
            np.array([[0.62, 0.16], [0.44, 0.34], [0.34, 0.58]]),
            _ellipse(0.50, 0.66, 0.17, 0.17),
        ],
        7: [
            np.array([[0.28, 0.18], [0.72, 0.18], [0.44, 0.84]]),
        ],
        8: [
            _ellipse(0.5, 0.33, 0.16, 0.15),
            _ellipse(0.5, 0.67, 0.20, 0.17),
        ],
        9: [
            _ellipse(0.52, 0.36, 0.17, 0.16),
            np.array([[0.69, 0.36], [0.64, 0.84]]),
        ],
    }
    return s


_STROKES = _strokes()


def _segment_distance(points: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each point (m, 2) to segment a-b."""
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip(((points - a) @ ab) / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(points - proj, axis=1)


def render_digit(cls: int, rng, size: int = 28, pad_to: int = 32) -> Signal:
    """One randomized sample of a digit class on a pad_to x pad_to grid."""
    angle = rng.uniform(-0.18, 0.18)
    scale = rng.uniform(0.85, 1.1)
    shear = rng.uniform(-0.12, 0.12)
    width = rng.uniform(0.035, 0.05)
    c, s = np.cos(angle), np.sin(angle)
    lin = scale * np.array([[c, -s], [s, c]]) @ np.array([[1.0, shear], [0.0, 1.0]])

    yy, xx = np.mgrid[0:size, 0:size]
    pts = np.stack([(xx.ravel() + 0.5) / size, (yy.ravel() + 0.5) / size], axis=1)
    img = np.zeros(size * size)
    for poly in _STROKES[cls]:
        jitter = rng.normal(0.0, 0.012, size=poly.shape)
        warped = (poly - 0.5 + jitter) @ lin.T + 0.5
        for i in range(len(warped) - 1):
            d = _segment_distance(pts, warped[i], warped[i + 1])
            img = np.maximum(img, np.exp(-(d**2) / (2.0 * width**2)))
    img = img.reshape(size, size)

    canvas = np.zeros((pad_to, pad_to))
    margin = pad_to - size
    oy, ox = rng.integers(0, margin + 1, size=2)
    canvas[oy : oy + size, ox : ox + size] = img
    return Signal(canvas)


def digits_dataset(n_train: int, n_test: int, seed: int = 0, pad_to: int = 32):
    """Balanced randomized digit samples: (train_images, train_labels,
    test_images, test_labels), images (n, pad_to, pad_to) float arrays."""
    rng = np.random.default_rng(seed)
    total = n_train + n_test
    labels = np.arange(total) % 10
    rng.shuffle(labels)
    images = np.stack(
        [render_digit(int(cls), rng, pad_to=pad_to).samples.real for cls in labels]
    )
    return (
        images[:n_train],
        labels[:n_train],
        images[n_train:],
        labels[n_train:],
    )
