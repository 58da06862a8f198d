"""Wavelet scattering toolkit.

Multiscale Morlet filter banks with measured frame bounds, the scattering
cascade with its contraction and deformation-stability guarantees, inverse
scattering by gradient descent, scattering moments of stationary processes,
and a linear classification harness on scattering features.
"""

from .classify import Dataset, LinearModel, classify_ova, fit, predict
from .deform import (
    WarpField,
    diff_metric,
    make_warp,
    random_smooth_warp,
    rep_fourier_modulus,
    rep_identity,
    sin_warp,
    stability_ratio,
    warp,
)
from .errors import (
    CascadeAccuracyError,
    DimensionError,
    FormatError,
    FrameError,
    NonDiffeomorphicError,
    RegularizationRequiredError,
    ScaleError,
    ScatterkitError,
    SplitError,
    UndefinedRatioError,
)
from .filterbank import (
    BankParams,
    FilterBank,
    FrequencyKernel,
    apply_cascade,
    build_bank_1d,
    build_morlet_2d,
    cascade_filters,
    frame_bounds,
    littlewood_paley,
    load_bank,
    save_bank,
)
from .inverse import (
    ReconstructionRun,
    aligned_relative_error,
    align_by_translation,
    reconstruct,
    scatter_gradient,
    scatter_objective_gradient,
    sigma_threshold,
)
from .moments import (
    GaussianContrastReport,
    MomentEstimate,
    ProcessModel,
    estimate_moments,
    gaussian_contrast,
    phase_randomized,
    variance_decay,
)
from .scattering import (
    FeatureLayout,
    ScatteringOutput,
    enumerate_paths,
    flatten,
    path_label,
    rho,
    scatter,
    scattering_distance,
    unflatten,
)
from .signal import (
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
from .wavelet import WaveletCoefficients, forward, inverse, transform_energy

__version__ = "0.1.0"
