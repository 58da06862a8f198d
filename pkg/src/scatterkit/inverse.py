"""Reconstruction from scattering coefficients by gradient descent.

The objective is the squared spacing-weighted distance between the target
coefficients and the scattering of the current iterate.  Its gradient is
computed by reverse-mode differentiation through the convolution / phase
removal / averaging cascade: convolutions transpose to convolutions with the
conjugate spectrum, subsampling transposes to zero insertion, and the modulus
backpropagates the unit phase (subgradient 0 at the origin).

Descent starts from a Gaussian white noise iterate and uses Armijo
backtracking, so the recorded objective history is monotone by construction.
It stops once the objective drops below the empirical spatial deviation of
the target coefficients (the single-image surrogate for the estimation noise
floor of stationary-process coefficients).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError
from .filterbank import FilterBank, periodize_kernel
from .scattering import ScatteringOutput, _propagate, scatter
from .signal import Signal

__all__ = [
    "ReconstructionRun",
    "scatter_objective_gradient",
    "scatter_gradient",
    "reconstruct",
    "sigma_threshold",
    "align_by_translation",
    "aligned_relative_error",
]


def sigma_threshold(target: ScatteringOutput) -> float:
    """Empirical spatial standard deviation of the target's coefficient grids.

    sqrt(sum over paths of ||S_p - mean(S_p)||^2), spacing-weighted: the
    stopping level below which coefficient differences are indistinguishable
    from spatial estimation noise.
    """
    total = 0.0
    for path in target.paths():
        sig = target.coefficients[path]
        vals = sig.samples.real
        total += float(np.sum((vals - vals.mean()) ** 2)) * sig.cell_volume
    return float(np.sqrt(total))


def _zero_insert(grid: np.ndarray, factor: int, shape) -> np.ndarray:
    """Adjoint of striding: place values at stride multiples, zeros elsewhere."""
    if factor == 1:
        return grid.astype(np.complex128, copy=True)
    out = np.zeros(shape, dtype=np.complex128)
    sl = tuple(slice(None, None, factor) for _ in range(out.ndim))
    out[sl] = grid
    return out


def scatter_objective_gradient(
    x: Signal,
    bank: FilterBank,
    target: ScatteringOutput,
    oversampling: int | None = 1,
    nonlinearity: str = "modulus",
) -> tuple[float, Signal]:
    """Objective ||scatter(x) - target||^2 and its gradient with respect to x.

    ``x`` is treated as a real signal (reconstruction iterates are real).
    The returned gradient matches central finite differences to first order;
    at modulus zeros the subgradient 0 is used.
    """
    if tuple(target.input_shape) != x.shape:
        raise DimensionError(f"target was computed on grid {target.input_shape}, x is {x.shape}")
    if not x.is_real(0.0):
        raise DimensionError("gradients are defined for real iterates")
    max_order = target.max_order
    coeffs, nodes = _propagate(
        x, bank, max_order, oversampling, nonlinearity, threads=1, keep_tree=True
    )

    out_stride = x.shape[0] // next(iter(coeffs.values())).shape[0]
    phi_conj = {}

    def phi_at(stride: int) -> np.ndarray:
        if stride not in phi_conj:
            phi_conj[stride] = np.conj(periodize_kernel(bank.low_pass.samples, stride))
        return phi_conj[stride]

    loss = 0.0
    # cotangent of each node's envelope, keyed by path; seeded from the
    # averaged outputs, then pushed to parents deepest-order-first
    grad_env = {path: np.zeros(nodes[path].envelope.shape) for path in nodes}
    for path, node in nodes.items():
        s_sig = coeffs[path]
        t_sig = target.coefficients.get(path)
        if t_sig is None or t_sig.shape != s_sig.shape:
            raise DimensionError(f"target missing or mismatched for path {path}")
        diff = s_sig.samples.real - t_sig.samples.real
        weight = s_sig.cell_volume
        loss += float(np.sum(diff**2)) * weight
        g_s = 2.0 * weight * diff
        up = _zero_insert(g_s, out_stride // node.stride, node.envelope.shape)
        g = np.fft.ifftn(np.fft.fftn(up) * phi_at(node.stride))
        grad_env[path] += g.real

    # walk orders deepest-first, pushing each node's cotangent to its parent
    for path in sorted(nodes, key=lambda p: -len(p)):
        if not path:
            break
        node = nodes[path]
        parent = nodes[path[:-1]]
        j, k = path[-1]
        g_u = grad_env[path]
        z = node.pre_rho
        if nonlinearity == "modulus":
            mag = np.abs(z)
            phase = np.where(mag > 0, z / np.where(mag > 0, mag, 1.0), 0.0)
            g_z = g_u * phase
        else:  # rectifier: derivative 1 where Re z > 0, else 0
            g_z = (g_u * (z.real > 0)).astype(np.complex128)
        fold = node.stride // parent.stride
        up = _zero_insert(g_z, fold, parent.envelope.shape)
        kern = np.conj(periodize_kernel(bank.wavelets[(j, k)].samples, parent.stride))
        g = np.fft.ifftn(np.fft.fftn(up) * kern)
        grad_env[path[:-1]] += g.real

    return loss, Signal(grad_env[()], x.sample_spacing)


def scatter_gradient(x, bank, max_order, target, oversampling=1, nonlinearity="modulus"):
    """Gradient of the scattering objective (loss discarded)."""
    if target.max_order != max_order:
        raise DimensionError("max_order disagrees with the target's")
    return scatter_objective_gradient(x, bank, target, oversampling, nonlinearity)[1]


@dataclass(frozen=True)
class ReconstructionRun:
    """Descent record: monotone objective history and the stop diagnostics."""

    history: tuple
    sigma_threshold: float
    converged: bool
    iterations: int
    seed: int


def reconstruct(
    target: ScatteringOutput,
    bank: FilterBank,
    seed: int = 0,
    max_iter: int = 2000,
    stop: float | None = None,
    initial_step: float = 1.0,
    shrink: float = 0.5,
    armijo: float = 1e-4,
    init: Signal | None = None,
) -> tuple[Signal, ReconstructionRun]:
    """Gradient descent on ||scatter(x) - target||^2 from white noise.

    Backtracking keeps the objective non-increasing; the accepted step is
    doubled as the next trial so the line search adapts in both directions.
    Stops when sqrt(objective) <= stop (default: `sigma_threshold` of the
    target) or after max_iter accepted iterations, in which case the best
    iterate is returned with converged=False.
    """
    if stop is None:
        stop = sigma_threshold(target)
    rng = np.random.default_rng(seed)
    if init is None:
        x = Signal(rng.standard_normal(tuple(target.input_shape)))
    else:
        x = init

    oversampling = target.oversampling
    kind = target.nonlinearity
    loss, grad = scatter_objective_gradient(x, bank, target, oversampling, kind)
    history = [loss]
    step = initial_step
    converged = np.sqrt(loss) <= stop
    iters = 0
    while not converged and iters < max_iter:
        g2 = grad.norm2()
        if g2 == 0.0:
            break
        accepted = False
        while step > 1e-16:
            trial = Signal(x.samples.real - step * grad.samples.real, x.sample_spacing)
            trial_loss, trial_grad = scatter_objective_gradient(trial, bank, target, oversampling, kind)
            if trial_loss <= loss - armijo * step * g2:
                accepted = True
                break
            step *= shrink
        if not accepted:
            break
        x, loss, grad = trial, trial_loss, trial_grad
        history.append(loss)
        step *= 2.0
        iters += 1
        if np.sqrt(loss) <= stop:
            converged = True
    run = ReconstructionRun(
        history=tuple(history),
        sigma_threshold=float(stop),
        converged=bool(converged),
        iterations=iters,
        seed=seed,
    )
    return x, run


def align_by_translation(reference: Signal, moving: Signal) -> tuple[Signal, tuple]:
    """Circularly shift ``moving`` to maximize correlation with ``reference``."""
    if reference.shape != moving.shape:
        raise DimensionError("shapes differ")
    corr = np.fft.ifftn(np.fft.fftn(reference.samples) * np.conj(np.fft.fftn(moving.samples)))
    offset = np.unravel_index(np.argmax(corr.real), corr.shape)
    rolled = np.roll(moving.samples, offset, axis=tuple(range(moving.ndims)))
    return Signal(rolled, moving.sample_spacing), tuple(int(o) for o in offset)


def aligned_relative_error(reference: Signal, moving: Signal) -> float:
    """Relative L2 error after translation alignment."""
    aligned, _ = align_by_translation(reference, moving)
    return float(
        np.linalg.norm(aligned.samples - reference.samples) / np.linalg.norm(reference.samples)
    )
