"""The wavelet transform operator and its dual-frame inverse.

``forward`` computes the low-pass average together with all band-pass
convolutions, each subsampled according to its scale and the oversampling
margin.  Subsampled outputs are exact strides of the full-resolution
convolution (product in frequency, then folding), so shift covariance holds
bit-for-bit whenever the shift is a multiple of the stride.

The inverse divides by the frame function in the frequency domain, which is
exact for this periodized construction; it targets real signals (the analytic
wavelets never measure the negative-frequency half of a complex signal).
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FormatError, FrameError
from .filterbank import FilterBank, periodize_kernel
from .signal import Signal, load_sig, negate_frequency, save_sig, upsample

__all__ = [
    "WaveletCoefficients",
    "forward",
    "inverse",
    "transform_energy",
    "save_coefficients",
    "load_coefficients",
]

UNSUBSAMPLED = None  # pass as oversampling to disable subsampling entirely


def stride_for(scale: int, oversampling, max_scale: int | None = None) -> int:
    """Dyadic stride for a coefficient at the given scale."""
    if oversampling is None or (isinstance(oversampling, float) and math.isinf(oversampling)):
        return 1
    if oversampling < 0:
        raise ValueError("oversampling must be >= 0, None or inf")
    j = scale if max_scale is None else min(scale, max_scale)
    return 2 ** max(0, j - int(oversampling))


@dataclass(frozen=True)
class WaveletCoefficients:
    """Output of `forward`: low = x * phi_J, bands[(j, k)] = x * psi_[j,k]."""

    low: Signal
    bands: dict
    oversampling: int | None
    n_scales: int
    n_bands: int
    input_shape: tuple

    def band_keys(self):
        return sorted(self.bands.keys())


def _strided_convolution(spectrum: np.ndarray, kernel: np.ndarray, stride: int, spacing: float) -> Signal:
    """Exact stride of ifft(spectrum * kernel): fold the product, then ifft."""
    prod = spectrum * kernel
    if stride > 1:
        prod = periodize_kernel(prod, stride) / (stride ** prod.ndim)
    return Signal(np.fft.ifftn(prod), spacing * stride)


def forward(x: Signal, bank: FilterBank, oversampling: int | None = 1) -> WaveletCoefficients:
    """Wavelet transform of ``x``: {x * phi_J, x * psi_[j,k]}.

    Parameters
    ----------
    x : Signal
    bank : FilterBank built on the same grid.
    oversampling : int or None
        Band (j, k) is kept at stride 2**max(0, j - oversampling); None (or
        inf) keeps everything at full resolution, in which case the frame
        inequality holds with the bank's measured bounds.
    """
    if x.shape != bank.shape:
        raise DimensionError(f"signal shape {x.shape} != bank shape {bank.shape}")
    spectrum = np.fft.fftn(x.samples)
    low = _strided_convolution(
        spectrum, bank.low_pass.samples, stride_for(bank.n_scales, oversampling), x.sample_spacing
    )
    bands = {}
    for (j, k), kern in sorted(bank.wavelets.items()):
        bands[(j, k)] = _strided_convolution(
            spectrum, kern.samples, stride_for(j, oversampling), x.sample_spacing
        )
    return WaveletCoefficients(
        low=low,
        bands=bands,
        oversampling=oversampling,
        n_scales=bank.n_scales,
        n_bands=bank.n_bands,
        input_shape=x.shape,
    )


def transform_energy(c: WaveletCoefficients) -> float:
    """Spacing-weighted energy ||Wx||^2 = ||low||^2 + sum of band energies."""
    total = c.low.norm2()
    for key in c.band_keys():
        total += c.bands[key].norm2()
    return total


def inverse(c: WaveletCoefficients, bank: FilterBank) -> Signal:
    """Dual-frame reconstruction of a real signal from its wavelet transform.

    Exact (up to roundoff) for unsubsampled coefficients; subsampled bands
    are first upsampled trigonometrically, so the residual error is their
    aliasing level.  Refuses banks whose measured lower frame bound sits
    below the configured gate.
    """
    if bank.frame_lower < bank.params.frame_min:
        raise FrameError(
            f"frame lower bound {bank.frame_lower:.4f} below gate {bank.params.frame_min}; "
            "inverse would amplify noise unboundedly"
        )
    shape = bank.shape

    def _full_res(sig: Signal) -> np.ndarray:
        factor = shape[0] // sig.shape[0]
        return (sig if factor == 1 else upsample(sig, factor)).samples

    numerator = np.zeros(shape, dtype=np.complex128)
    denominator = np.zeros(shape, dtype=np.float64)

    phi = bank.low_pass.samples
    y_low = np.fft.fftn(_full_res(c.low))
    numerator += np.conj(phi) * y_low
    denominator += np.abs(phi) ** 2

    for key in c.band_keys():
        psi = bank.wavelets[key].samples
        y = np.fft.fftn(_full_res(c.bands[key]))
        psi_neg = negate_frequency(psi)
        y_neg = negate_frequency(y)
        # real-signal constraint: conj(y(-w)) = x(w) * conj(psi(-w))
        numerator += np.conj(psi) * y + psi_neg * np.conj(y_neg)
        denominator += np.abs(psi) ** 2 + np.abs(psi_neg) ** 2

    out = np.fft.ifftn(numerator / np.maximum(denominator, 1e-12))
    low_stride = shape[0] // c.low.shape[0]
    return Signal(out.real, sample_spacing=c.low.sample_spacing / low_stride)


# ---------------------------------------------------------------------------
# Serialization: a directory of SIG1 files plus manifest.json with strides.
# ---------------------------------------------------------------------------


def save_coefficients(c: WaveletCoefficients, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    save_sig(c.low, os.path.join(directory, "low.sig"))
    files = {"low.sig": {"scale": c.n_scales, "band": None, "spacing": c.low.sample_spacing}}
    for (j, k), sig in sorted(c.bands.items()):
        name = f"band_j{j}_k{k}.sig"
        save_sig(sig, os.path.join(directory, name))
        files[name] = {"scale": j, "band": k, "spacing": sig.sample_spacing}
    manifest = {
        "format": "scatterkit-coeffs-v1",
        "scales": c.n_scales,
        "bands": c.n_bands,
        "oversampling": c.oversampling,
        "input_shape": list(c.input_shape),
        "files": files,
    }
    with open(os.path.join(directory, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_coefficients(directory) -> WaveletCoefficients:
    path = os.path.join(directory, "manifest.json")
    try:
        with open(path) as fh:
            manifest = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot read coefficients manifest {path}: {exc}") from exc
    if manifest.get("format") != "scatterkit-coeffs-v1":
        raise FormatError(f"{path}: unknown manifest format")
    low = None
    bands = {}
    for name, meta in manifest["files"].items():
        sig = load_sig(os.path.join(directory, name), sample_spacing=meta["spacing"])
        if name == "low.sig":
            low = sig
        else:
            bands[(meta["scale"], meta["band"])] = sig
    if low is None:
        raise FormatError(f"{directory}: manifest lists no low.sig")
    return WaveletCoefficients(
        low=low,
        bands=bands,
        oversampling=manifest["oversampling"],
        n_scales=manifest["scales"],
        n_bands=manifest["bands"],
        input_shape=tuple(manifest["input_shape"]),
    )
