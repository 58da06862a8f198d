"""Periodic n-dimensional signal grids (n = 1 or 2) with exact circular convolution.

All operations are pure functions over immutable `Signal` values.  Convolution
is carried out in the frequency domain, which is exact on the periodic grid,
and grids are restricted to power-of-two axis lengths so the dyadic cascade
stays closed under subsampling.

Norm convention: ``norm(x)**2 = sum(|x(u)|**2) * spacing**ndims``, the discrete
counterpart of the L2 integral.  With unit spacing Parseval reads
``sum(|fft(x)|**2) == N * norm(x)**2``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, FormatError

__all__ = [
    "Signal",
    "convolve",
    "subsample",
    "upsample",
    "shift",
    "angular_frequencies",
    "negate_frequency",
    "save_sig",
    "load_sig",
    "save_pgm",
    "load_pgm",
]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Signal:
    """Complex samples on a periodic grid, row-major, immutable after construction.

    Parameters
    ----------
    samples : ndarray
        1D or 2D complex array; every axis length must be a power of two.
        Input grids built from files or generators are at least 4 samples per
        axis; subsampled coefficient grids may be shorter (down to a single
        sample at full averaging).
    sample_spacing : float
        Grid step in units of u. Subsampling by ``2**j`` multiplies it by
        ``2**j``, so spacing-weighted norms stay comparable across strides.
    """

    samples: np.ndarray
    sample_spacing: float = 1.0

    def __post_init__(self):
        arr = np.asarray(self.samples, dtype=np.complex128)
        if arr.ndim not in (1, 2):
            raise DimensionError(f"signals are 1D or 2D, got {arr.ndim}D")
        for n in arr.shape:
            if not _is_power_of_two(n):
                raise DimensionError(f"axis length {n} is not a power of two")
        if self.sample_spacing <= 0:
            raise DimensionError("sample_spacing must be positive")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    @property
    def ndims(self) -> int:
        return self.samples.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.samples.shape

    @property
    def size(self) -> int:
        return self.samples.size

    @property
    def cell_volume(self) -> float:
        """Weight of one sample in the discrete L2 norm."""
        return float(self.sample_spacing) ** self.ndims

    def norm2(self) -> float:
        """Squared L2 norm, spacing-weighted."""
        return float(np.sum(np.abs(self.samples) ** 2)) * self.cell_volume

    def norm(self) -> float:
        return float(np.sqrt(self.norm2()))

    def spectrum(self) -> np.ndarray:
        """Unnormalized DFT of the samples (numpy fftn convention)."""
        return np.fft.fftn(self.samples)

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.samples.imag), initial=0.0) <= tol)

    def real_signal(self) -> "Signal":
        """Drop the imaginary part (used after provably-real operations)."""
        return Signal(self.samples.real.astype(np.complex128), self.sample_spacing)

    def with_samples(self, samples: np.ndarray) -> "Signal":
        return Signal(samples, self.sample_spacing)


def _kernel_array(kernel) -> np.ndarray:
    """Accept a FrequencyKernel or a bare frequency-domain array."""
    arr = getattr(kernel, "samples", kernel)
    return np.asarray(arr)


def convolve(x: Signal, kernel) -> Signal:
    """Circular convolution of ``x`` with a filter given in the frequency domain.

    Parameters
    ----------
    x : Signal
    kernel : FrequencyKernel or ndarray
        DFT samples of the filter on the same grid as ``x``.

    Returns
    -------
    Signal
        ``ifft(fft(x) * kernel)``.  Linear in ``x`` and commutes exactly with
        integer circular shifts.
    """
    h = _kernel_array(kernel)
    if h.shape != x.shape:
        raise DimensionError(f"kernel shape {h.shape} != signal shape {x.shape}")
    out = np.fft.ifftn(np.fft.fftn(x.samples) * h)
    return Signal(out, x.sample_spacing)


def subsample(x: Signal, factor: int) -> Signal:
    """Keep samples at stride ``factor`` (a power of two) along every axis."""
    if factor == 1:
        return x
    if not _is_power_of_two(factor):
        raise DimensionError(f"subsampling factor {factor} is not a power of two")
    for n in x.shape:
        if n % factor != 0:
            raise DimensionError(f"factor {factor} does not divide axis length {n}")
    sl = tuple(slice(None, None, factor) for _ in range(x.ndims))
    return Signal(x.samples[sl], x.sample_spacing * factor)


def upsample(x: Signal, factor: int) -> Signal:
    """Trigonometric (band-limited) upsampling by a power-of-two factor.

    Exact inverse of `subsample` for signals with no energy above the
    subsampled grid's Nyquist frequency; otherwise the residual is the
    aliasing error.  Nyquist bins are split symmetrically.
    """
    if factor == 1:
        return x
    if not _is_power_of_two(factor):
        raise DimensionError(f"upsampling factor {factor} is not a power of two")
    arr = np.fft.fftn(x.samples)
    for axis in range(arr.ndim):
        n = arr.shape[axis]
        m = n * factor
        shape = list(arr.shape)
        shape[axis] = m
        out = np.zeros(shape, dtype=np.complex128)
        half = n // 2
        idx_src_lo = [slice(None)] * arr.ndim
        idx_src_lo[axis] = slice(0, half)
        idx_dst_lo = list(idx_src_lo)
        out[tuple(idx_dst_lo)] = arr[tuple(idx_src_lo)]
        idx_src_hi = [slice(None)] * arr.ndim
        idx_src_hi[axis] = slice(half + 1, n)
        idx_dst_hi = [slice(None)] * arr.ndim
        idx_dst_hi[axis] = slice(m - half + 1, m)
        out[tuple(idx_dst_hi)] = arr[tuple(idx_src_hi)]
        # split the Nyquist bin so real signals stay real
        idx_ny = [slice(None)] * arr.ndim
        idx_ny[axis] = half
        idx_pos = [slice(None)] * arr.ndim
        idx_pos[axis] = half
        idx_neg = [slice(None)] * arr.ndim
        idx_neg[axis] = m - half
        out[tuple(idx_pos)] = arr[tuple(idx_ny)] / 2.0
        out[tuple(idx_neg)] = arr[tuple(idx_ny)] / 2.0
        arr = out * factor
    res = np.fft.ifftn(arr)
    return Signal(res, x.sample_spacing / factor)


def shift(x: Signal, tau) -> Signal:
    """Circular shift: ``y(u) = x(u - tau)`` for integer per-axis offsets."""
    tau = np.atleast_1d(np.asarray(tau, dtype=int))
    if tau.size != x.ndims:
        raise DimensionError(f"shift needs {x.ndims} offsets, got {tau.size}")
    return Signal(np.roll(x.samples, tuple(tau), axis=tuple(range(x.ndims))), x.sample_spacing)


def angular_frequencies(shape) -> list[np.ndarray]:
    """Per-axis angular frequency samples (radians per sample, fft layout)."""
    return [2.0 * np.pi * np.fft.fftfreq(n) for n in shape]


def negate_frequency(field: np.ndarray) -> np.ndarray:
    """Resample a frequency-domain array at -omega (index map m -> -m mod N)."""
    out = field
    for axis in range(field.ndim):
        out = np.roll(np.flip(out, axis=axis), 1, axis=axis)
    return out


# ---------------------------------------------------------------------------
# SIG1 binary format
#
# magic 'SIG1' | u32 ndims | u32 axis lengths | u8 flag | f64 samples
# flag 0: real samples, one f64 each; flag 1: complex, (re, im) f64 pairs.
# Little-endian, row-major sample order.
# ---------------------------------------------------------------------------

_MAGIC = b"SIG1"


def save_sig(x: Signal, path) -> None:
    """Write a signal in the SIG1 binary format."""
    real = x.is_real()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", x.ndims))
        for n in x.shape:
            fh.write(struct.pack("<I", n))
        fh.write(struct.pack("<B", 0 if real else 1))
        if real:
            fh.write(x.samples.real.astype("<f8").tobytes(order="C"))
        else:
            inter = np.empty(x.shape + (2,), dtype="<f8")
            inter[..., 0] = x.samples.real
            inter[..., 1] = x.samples.imag
            fh.write(inter.tobytes(order="C"))


def load_sig(path, sample_spacing: float = 1.0) -> Signal:
    """Read a SIG1 file; the spacing is supplied by the caller (default 1)."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC:
        raise FormatError(f"{path}: bad magic {data[:4]!r}")
    (ndims,) = struct.unpack_from("<I", data, 4)
    if ndims not in (1, 2):
        raise FormatError(f"{path}: unsupported ndims {ndims}")
    off = 8
    dims = []
    for _ in range(ndims):
        (n,) = struct.unpack_from("<I", data, off)
        dims.append(n)
        off += 4
    (flag,) = struct.unpack_from("<B", data, off)
    off += 1
    count = int(np.prod(dims))
    if flag == 0:
        body = np.frombuffer(data, dtype="<f8", count=count, offset=off)
        samples = body.astype(np.complex128).reshape(dims)
    elif flag == 1:
        body = np.frombuffer(data, dtype="<f8", count=2 * count, offset=off)
        body = body.reshape(dims + [2])
        samples = (body[..., 0] + 1j * body[..., 1]).reshape(dims)
    else:
        raise FormatError(f"{path}: unknown sample flag {flag}")
    expected = off + count * 8 * (1 if flag == 0 else 2)
    if len(data) != expected:
        raise FormatError(f"{path}: size {len(data)} != expected {expected}")
    return Signal(samples, sample_spacing)


# ---------------------------------------------------------------------------
# PGM (P5, maxval 255) import/export for 2D real signals, [0, 255] <-> [0, 1]
# ---------------------------------------------------------------------------


def save_pgm(x: Signal, path) -> None:
    """Write the real part of a 2D signal as binary PGM, mapping [0,1] to [0,255]."""
    if x.ndims != 2:
        raise DimensionError("PGM export requires a 2D signal")
    img = np.clip(x.samples.real, 0.0, 1.0)
    pix = np.round(img * 255.0).astype(np.uint8)
    with open(path, "wb") as fh:
        fh.write(f"P5\n{x.shape[1]} {x.shape[0]}\n255\n".encode("ascii"))
        fh.write(pix.tobytes(order="C"))


def _pgm_tokens(data: bytes):
    """Yield header tokens, skipping '#' comments."""
    i = 0
    while True:
        while i < len(data) and data[i : i + 1].isspace():
            i += 1
        if i < len(data) and data[i : i + 1] == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
            continue
        j = i
        while j < len(data) and not data[j : j + 1].isspace():
            j += 1
        yield data[i:j], j
        i = j


def load_pgm(path) -> Signal:
    """Read a binary PGM (P5, maxval 255) into a real 2D signal in [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    toks = _pgm_tokens(data)
    magic, _ = next(toks)
    if magic != b"P5":
        raise FormatError(f"{path}: not a P5 PGM (magic {magic!r})")
    (w_tok, _), (h_tok, _), (max_tok, end) = next(toks), next(toks), next(toks)
    width, height, maxval = int(w_tok), int(h_tok), int(max_tok)
    if maxval != 255:
        raise FormatError(f"{path}: maxval {maxval} unsupported, expected 255")
    body = data[end + 1 : end + 1 + width * height]
    if len(body) != width * height:
        raise FormatError(f"{path}: truncated pixel data")
    pix = np.frombuffer(body, dtype=np.uint8).reshape(height, width)
    return Signal(pix.astype(np.float64) / 255.0)
