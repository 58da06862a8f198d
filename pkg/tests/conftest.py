"""Shared fixtures: filter banks are immutable, so build once per session."""

import numpy as np
import pytest

from scatterkit.filterbank import build_bank_1d, build_morlet_2d


@pytest.fixture(scope="session")
def bank_2d_small():
    """32x32, J=3, K=4: the workhorse for 2D operator tests."""
    return build_morlet_2d((32, 32), 3, 4)


@pytest.fixture(scope="session")
def bank_2d_128():
    """128x128, J=4, K=4: the paper-figure layout."""
    return build_morlet_2d((128, 128), 4, 4)


@pytest.fixture(scope="session")
def bank_1d_16():
    """16 samples, J=2, K=1: oracle-scale 1D bank."""
    return build_bank_1d((16,), 2, 1)


@pytest.fixture(scope="session")
def bank_1d_128():
    return build_bank_1d((128,), 4, 2)


def random_real(shape, seed):
    return np.random.default_rng(seed).standard_normal(shape)
