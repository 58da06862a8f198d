"""Scattering transform: iterated wavelet convolutions, phase removal, averaging.

A path ((j1, k1), ..., (jm, km)) with strictly increasing scales indexes one
output channel: the input is convolved with each wavelet in turn, a pointwise
contractive nonlinearity strips the phase after every convolution, and the
final envelope is averaged by the low-pass kernel.  The order-0 path () is
the plain average.

Propagation subsamples each envelope at 2**(j - oversampling) (never below
full resolution); every subsampling is an exact stride of the convolution
computed at the parent resolution, so an independent direct implementation
following the same stride rule reproduces the outputs to roundoff.  Paths are
always processed in a fixed lexicographic order, which makes outputs and
energy bookkeeping independent of the worker-thread count.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .filterbank import FilterBank, periodize_kernel
from .signal import Signal
from .wavelet import stride_for

__all__ = [
    "rho",
    "ScatteringOutput",
    "FeatureLayout",
    "scatter",
    "enumerate_paths",
    "path_label",
    "flatten",
    "unflatten",
    "scattering_distance",
    "default_threads",
]

NONLINEARITIES = ("modulus", "rectifier")


def rho(values, kind: str = "modulus"):
    """Pointwise phase removal: modulus |a| or rectifier max(0, Re a).

    Both satisfy |rho(a) - rho(b)| <= |a - b|, so every scattering layer is
    a contraction.
    """
    arr = np.asarray(values)
    if kind == "modulus":
        return np.abs(arr)
    if kind == "rectifier":
        return np.maximum(arr.real, 0.0)
    raise ValueError(f"unknown nonlinearity {kind!r}; pick one of {NONLINEARITIES}")


def enumerate_paths(n_scales: int, n_bands: int, max_order: int) -> list:
    """All scattering paths up to max_order, lexicographic in (order, scales, bands).

    Scales along a path increase strictly, so orders beyond n_scales are
    empty rather than an error.
    """
    paths = [()]
    frontier = [()]
    for _ in range(max_order):
        new = []
        for path in frontier:
            j_min = path[-1][0] + 1 if path else 1
            for j in range(j_min, n_scales + 1):
                for k in range(n_bands):
                    new.append(path + ((j, k),))
        frontier = new
        paths.extend(new)
    return sorted(paths, key=_path_key)


def _path_key(path):
    return (len(path), tuple(jk[0] for jk in path), tuple(jk[1] for jk in path))


def path_label(path) -> str:
    """Stable text label: m0, m1_j2k0, m2_j1k3_j3k0, ..."""
    if not path:
        return "m0"
    return f"m{len(path)}_" + "_".join(f"j{j}k{k}" for j, k in path)


@dataclass(frozen=True)
class ScatteringOutput:
    """Map path -> averaged coefficient grid, plus bookkeeping.

    coefficients values are Signals at stride 2**max(0, J - oversampling);
    all order >= 1 grids are nonnegative up to roundoff.  order_energies[m]
    records the spacing-weighted energy of order-m coefficients.
    """

    coefficients: dict
    n_scales: int
    n_bands: int
    max_order: int
    nonlinearity: str
    oversampling: int | None
    input_shape: tuple

    def paths(self) -> list:
        return sorted(self.coefficients.keys(), key=_path_key)

    @property
    def order_energies(self) -> dict:
        energies = {m: 0.0 for m in range(self.max_order + 1)}
        for path in self.paths():
            energies[len(path)] += self.coefficients[path].norm2()
        return energies

    def energy(self) -> float:
        return sum(self.order_energies.values())

    def config(self) -> tuple:
        return (
            self.n_scales,
            self.n_bands,
            self.max_order,
            self.nonlinearity,
            self.oversampling,
            tuple(self.input_shape),
        )


def default_threads() -> int:
    env = os.environ.get("SCATTERKIT_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


class _Node:
    __slots__ = ("path", "envelope", "stride", "spectrum", "pre_rho")

    def __init__(self, path, envelope: np.ndarray, stride: int, pre_rho=None):
        self.path = path
        self.envelope = envelope          # spatial samples at this node's stride
        self.stride = stride
        self.spectrum = None              # fft of envelope, filled on expansion
        self.pre_rho = pre_rho            # convolution output before rho (gradients)


def _fold_product(spectrum: np.ndarray, kernel: np.ndarray, fold: int) -> np.ndarray:
    """ifft of the product, strided by ``fold`` (exact spatial subsampling)."""
    prod = spectrum * kernel
    if fold > 1:
        prod = periodize_kernel(prod, fold) / (fold ** prod.ndim)
    return np.fft.ifftn(prod)


def _propagate(
    x: Signal,
    bank: FilterBank,
    max_order: int,
    oversampling,
    nonlinearity: str,
    threads: int = 1,
    keep_tree: bool = False,
):
    """Breadth-first scattering cascade.

    Returns (coefficients dict, nodes dict or None).  Deterministic: layers
    are expanded in path order and outputs are keyed by path, so the thread
    count never changes a single float.
    """
    if x.shape != bank.shape:
        raise DimensionError(f"signal shape {x.shape} != bank shape {bank.shape}")
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    rho(0.0, nonlinearity)  # validate the kind early
    n_scales = bank.n_scales
    out_stride = stride_for(n_scales, oversampling)
    phi_cache = {}
    psi_cache = {}

    def phi_at(stride: int) -> np.ndarray:
        if stride not in phi_cache:
            phi_cache[stride] = periodize_kernel(bank.low_pass.samples, stride)
        return phi_cache[stride]

    def psi_at(key, stride: int) -> np.ndarray:
        ck = (key, stride)
        if ck not in psi_cache:
            psi_cache[ck] = periodize_kernel(bank.wavelets[key].samples, stride)
        return psi_cache[ck]

    coefficients = {}
    nodes = {} if keep_tree else None
    root = _Node((), x.samples, 1)
    frontier = [root]
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for order in range(max_order + 1):
            expand = order < max_order

            def process(node: _Node):
                node.spectrum = np.fft.fftn(node.envelope)
                fold = out_stride // node.stride
                avg = _fold_product(node.spectrum, phi_at(node.stride), fold)
                children = []
                if expand:
                    j_min = node.path[-1][0] + 1 if node.path else 1
                    for j in range(j_min, n_scales + 1):
                        child_stride = stride_for(j, oversampling)
                        fold_c = child_stride // node.stride
                        for k in range(bank.n_bands):
                            z = _fold_product(node.spectrum, psi_at((j, k), node.stride), fold_c)
                            children.append(
                                _Node(node.path + ((j, k),), rho(z, nonlinearity), child_stride,
                                      pre_rho=z if keep_tree else None)
                            )
                return node, avg, children

            results = list(pool.map(process, frontier)) if pool else [process(n) for n in frontier]

            next_frontier = []
            for node, avg, children in results:
                value = avg if (node.path == () and not x.is_real(0.0)) else avg.real
                coefficients[node.path] = Signal(value, x.sample_spacing * out_stride)
                if nodes is not None:
                    nodes[node.path] = node
                next_frontier.extend(children)
            frontier = sorted(next_frontier, key=lambda n: _path_key(n.path))
    finally:
        if pool:
            pool.shutdown()
    return coefficients, nodes


def scatter(
    x: Signal,
    bank: FilterBank,
    max_order: int = 2,
    oversampling: int | None = 1,
    nonlinearity: str = "modulus",
    threads: int | None = None,
) -> ScatteringOutput:
    """Scattering transform of ``x`` over all paths with increasing scales.

    Parameters
    ----------
    x : Signal
    bank : FilterBank on the same grid.
    max_order : int
        Deepest path length M; 2 by default (higher orders carry negligible
        energy for natural signals).
    oversampling : int or None
        Extra dyadic resolution kept at every stage; None disables
        subsampling entirely (exact contraction arithmetic).
    nonlinearity : "modulus" or "rectifier"
    threads : int, optional
        Worker threads for the per-layer band convolutions; defaults to
        SCATTERKIT_THREADS or the CPU count.  Results are identical for any
        value.
    """
    if threads is None:
        threads = default_threads()
    coefficients, _ = _propagate(x, bank, max_order, oversampling, nonlinearity, threads=threads)
    return ScatteringOutput(
        coefficients=coefficients,
        n_scales=bank.n_scales,
        n_bands=bank.n_bands,
        max_order=max_order,
        nonlinearity=nonlinearity,
        oversampling=oversampling,
        input_shape=x.shape,
    )


@dataclass(frozen=True)
class FeatureLayout:
    """Index table mapping flattened feature offsets back to paths."""

    entries: tuple  # (path, offset, shape, spacing) per path, in path order
    n_scales: int
    n_bands: int
    max_order: int
    nonlinearity: str
    oversampling: int | None
    input_shape: tuple

    def length(self) -> int:
        path, offset, shape, _ = self.entries[-1]
        return offset + int(np.prod(shape))

    def labels(self) -> list:
        """One label per feature: the path label, with _p{i} when a path
        spans several grid positions."""
        out = []
        for path, _, shape, _ in self.entries:
            n = int(np.prod(shape))
            base = path_label(path)
            if n == 1:
                out.append(base)
            else:
                out.extend(f"{base}_p{i}" for i in range(n))
        return out

    def path_at(self, offset: int):
        """Path owning the feature at a flat offset."""
        for path, start, shape, _ in self.entries:
            if start <= offset < start + int(np.prod(shape)):
                return path
        raise IndexError(offset)


def flatten(output: ScatteringOutput) -> tuple[np.ndarray, FeatureLayout]:
    """Concatenate all coefficient grids (row-major) in fixed path order."""
    chunks = []
    entries = []
    offset = 0
    for path in output.paths():
        sig = output.coefficients[path]
        vals = sig.samples.real.ravel(order="C")
        entries.append((path, offset, sig.shape, sig.sample_spacing))
        chunks.append(vals)
        offset += vals.size
    layout = FeatureLayout(
        entries=tuple(entries),
        n_scales=output.n_scales,
        n_bands=output.n_bands,
        max_order=output.max_order,
        nonlinearity=output.nonlinearity,
        oversampling=output.oversampling,
        input_shape=tuple(output.input_shape),
    )
    return np.concatenate(chunks), layout


def unflatten(vector: np.ndarray, layout: FeatureLayout) -> ScatteringOutput:
    """Inverse of `flatten`: rebuild the path -> grid map bit-exactly."""
    vector = np.asarray(vector)
    if vector.size != layout.length():
        raise DimensionError(f"feature length {vector.size} != layout length {layout.length()}")
    coefficients = {}
    for path, offset, shape, spacing in layout.entries:
        n = int(np.prod(shape))
        coefficients[path] = Signal(vector[offset : offset + n].reshape(shape), spacing)
    return ScatteringOutput(
        coefficients=coefficients,
        n_scales=layout.n_scales,
        n_bands=layout.n_bands,
        max_order=layout.max_order,
        nonlinearity=layout.nonlinearity,
        oversampling=layout.oversampling,
        input_shape=layout.input_shape,
    )


def scattering_distance(a: ScatteringOutput, b: ScatteringOutput) -> float:
    """Spacing-weighted L2 distance between two outputs of the same config."""
    if a.config() != b.config():
        raise DimensionError(f"incompatible scattering configs {a.config()} vs {b.config()}")
    total = 0.0
    for path in a.paths():
        diff = a.coefficients[path].samples - b.coefficients[path].samples
        total += float(np.sum(np.abs(diff) ** 2)) * a.coefficients[path].cell_volume
    return float(np.sqrt(total))
