"""Diffeomorphism action, deformation metric, and the stability harness.

A warp field g assigns a displacement to every grid point; the action is
``(g.x)(u) = x(u - g(u))`` with periodic cubic interpolation.  The distance of
the warp to the identity at invariance scale 2**J is
``2**-J * sup|g| + sup|grad g|``, and `stability_ratio` measures how far a
representation moves under the warp relative to that distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DimensionError, NonDiffeomorphicError, UndefinedRatioError
from .signal import Signal

__all__ = [
    "WarpField",
    "make_warp",
    "warp",
    "diff_metric",
    "stability_ratio",
    "sin_warp",
    "random_smooth_warp",
    "rep_identity",
    "rep_fourier_modulus",
]


@dataclass(frozen=True)
class WarpField:
    """Displacement field with cached sup and Jacobian norms.

    field has shape grid + (ndims,), in units of u (grid samples for unit
    spacing).  sup_norm is max |g(u)|_2; jac_norm is the max spectral norm of
    the centered-finite-difference Jacobian.  Fields with jac_norm >= 1 are
    not small diffeomorphisms and are rejected by `warp`.
    """

    field: np.ndarray
    sup_norm: float
    jac_norm: float

    @property
    def ndims(self) -> int:
        return self.field.ndim - 1

    @property
    def grid_shape(self) -> tuple:
        return self.field.shape[:-1]

    def scaled(self, factor: float) -> "WarpField":
        return make_warp(self.field * factor)


def make_warp(field: np.ndarray) -> WarpField:
    """Wrap a displacement array, computing its norms.

    field : array of shape grid + (ndims,) for 2D, or (n,) / (n, 1) for 1D.
    """
    field = np.asarray(field, dtype=np.float64)
    if field.ndim == 1:
        field = field[:, None]
    ndims = field.shape[-1]
    if field.ndim - 1 != ndims:
        raise DimensionError(f"field shape {field.shape} is not grid + (ndims,)")
    sup = float(np.max(np.sqrt(np.sum(field**2, axis=-1))))
    jac = _jacobian_sup_norm(field)
    arr = field.copy()
    arr.setflags(write=False)
    return WarpField(field=arr, sup_norm=sup, jac_norm=jac)


def _jacobian_sup_norm(field: np.ndarray) -> float:
    """Max spectral norm over u of the periodic centered-difference Jacobian."""
    ndims = field.shape[-1]
    if ndims == 1:
        g = field[:, 0]
        d = (np.roll(g, -1) - np.roll(g, 1)) / 2.0
        return float(np.max(np.abs(d)))
    jac = np.empty(field.shape[:-1] + (2, 2))
    for comp in range(2):
        for axis in range(2):
            g = field[..., comp]
            jac[..., comp, axis] = (np.roll(g, -1, axis=axis) - np.roll(g, 1, axis=axis)) / 2.0
    # spectral norm of each 2x2 block: largest singular value
    a, b = jac[..., 0, 0], jac[..., 0, 1]
    c, d = jac[..., 1, 0], jac[..., 1, 1]
    t = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = np.sqrt(np.maximum(t * t - 4.0 * det * det, 0.0))
    smax2 = (t + disc) / 2.0
    return float(np.sqrt(np.max(smax2)))


def warp(x: Signal, g: WarpField) -> Signal:
    """Evaluate x(u - g(u)) with periodic cubic spline interpolation."""
    if g.grid_shape != x.shape:
        raise DimensionError(f"warp grid {g.grid_shape} != signal grid {x.shape}")
    if g.jac_norm >= 1.0:
        raise NonDiffeomorphicError(
            f"jacobian norm {g.jac_norm:.3f} >= 1: displacement folds the grid"
        )
    if g.sup_norm == 0.0:
        return x
    coords = np.indices(x.shape, dtype=np.float64)
    for axis in range(x.ndims):
        coords[axis] -= g.field[..., axis] / x.sample_spacing

    def interp(values: np.ndarray) -> np.ndarray:
        return ndimage.map_coordinates(values, coords, order=3, mode="grid-wrap")

    out = interp(x.samples.real)
    if not x.is_real(0.0):
        out = out + 1j * interp(x.samples.imag)
    return Signal(out, x.sample_spacing)


def diff_metric(g: WarpField, invariance_scale: int) -> float:
    """Deformation distance to the identity: 2**-J * |g|_inf + |grad g|_inf."""
    return (2.0 ** (-invariance_scale)) * g.sup_norm + g.jac_norm


def stability_ratio(rep, x: Signal, g: WarpField, invariance_scale: int) -> float:
    """||rep(g.x) - rep(x)|| / (|g|_Diff * ||x||) for any feature map ``rep``.

    ``rep`` maps a Signal to a flat float array and must be deterministic.
    """
    metric = diff_metric(g, invariance_scale)
    denom = metric * x.norm()
    if denom == 0.0:
        raise UndefinedRatioError("deformation metric is zero; ratio undefined")
    fa = np.asarray(rep(x), dtype=np.float64)
    fb = np.asarray(rep(warp(x, g)), dtype=np.float64)
    return float(np.linalg.norm(fb - fa) / denom)


def rep_identity(x: Signal) -> np.ndarray:
    """Raw samples as features (no invariance at all: the baseline)."""
    return x.samples.real.ravel()


def rep_fourier_modulus(x: Signal) -> np.ndarray:
    """Fourier modulus features |fft(x)| / sqrt(N): translation invariant but
    unstable to deformations at high frequency."""
    return (np.abs(np.fft.fftn(x.samples)) / np.sqrt(x.size)).ravel()


def sin_warp(shape, amplitude: float, cycles=1, phase: float = 0.0, axis: int = 0) -> WarpField:
    """Sinusoidal displacement along one axis: g(u) = amplitude * sin field.

    ``cycles`` counts full periods across the grid (per axis in 2D).
    """
    if isinstance(shape, int):
        shape = (shape,)
    grids = np.meshgrid(*[np.arange(n) for n in shape], indexing="ij")
    arg = np.zeros(shape)
    cyc = np.broadcast_to(np.asarray(cycles, dtype=float), (len(shape),))
    for g, n, c in zip(grids, shape, cyc):
        arg = arg + 2.0 * np.pi * c * g / n
    field = np.zeros(shape + (len(shape),))
    field[..., axis] = amplitude * np.sin(arg + phase)
    return make_warp(field)


def random_smooth_warp(shape, jac_target: float, seed: int, smoothness: float = 8.0) -> WarpField:
    """Random low-pass displacement field rescaled to a target Jacobian norm.

    White noise per component is smoothed by a periodic Gaussian of width
    ``smoothness`` samples, then scaled so jac_norm == jac_target.
    """
    if isinstance(shape, int):
        shape = (shape,)
    rng = np.random.default_rng(seed)
    freqs = [2.0 * np.pi * np.fft.fftfreq(n) for n in shape]
    w2 = np.zeros(shape)
    for axis, w in enumerate(freqs):
        sl = [None] * len(shape)
        sl[axis] = slice(None)
        w2 = w2 + (w[tuple(sl)] ** 2 if len(shape) > 1 else w**2)
    kernel = np.exp(-0.5 * smoothness**2 * w2)
    comps = []
    for _ in range(len(shape)):
        noise = rng.standard_normal(shape)
        comps.append(np.fft.ifftn(np.fft.fftn(noise) * kernel).real)
    field = np.stack(comps, axis=-1)
    rough = make_warp(field)
    if rough.jac_norm == 0.0:
        raise UndefinedRatioError("degenerate random field")
    return rough.scaled(jac_target / rough.jac_norm)
