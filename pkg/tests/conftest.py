import numpy as np
import pytest

from simlab import CodebookConfig, build_codebook, sample_compressor


@pytest.fixture(scope="session")
def small_codebook():
    return build_codebook(CodebookConfig(dimension=100, n_labels=5, n_nuisances=3, separation=1.0, seed=42))


@pytest.fixture(scope="session")
def small_compressor():
    return sample_compressor(10, 100, seed=1)


@pytest.fixture(scope="session")
def std_codebook():
    """Default simulation geometry: N=1000, moderate anchor spread."""
    return build_codebook(
        CodebookConfig(dimension=1000, n_labels=5, n_nuisances=3, separation=1.0, anchor_scale=1.4, seed=11)
    )


@pytest.fixture(scope="session")
def std_compressor():
    return sample_compressor(50, 1000, seed=7)


@pytest.fixture(scope="session")
def wide_codebook():
    """Well-separated geometry: projected inter-label distances far exceed
    the sphere radius, so entering a target sphere wins the argmin."""
    return build_codebook(
        CodebookConfig(dimension=1000, n_labels=5, n_nuisances=3, separation=1.0, anchor_scale=32.0, seed=11)
    )


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
