"""Shared fixtures: the worked cells and their band diagrams.

The two five-band diagrams take a few seconds each, so they are built once
per test session and shared across the spectra, topology, and edge tests.
"""
import pytest

from photonband import presets, spectra


@pytest.fixture(scope="session")
def herm_preset():
    return presets.get_preset("example3-hermitian")


@pytest.fixture(scope="session")
def nh_preset():
    return presets.get_preset("example3-nonhermitian")


@pytest.fixture(scope="session")
def herm_cell(herm_preset):
    return herm_preset.cell


@pytest.fixture(scope="session")
def nh_cell(nh_preset):
    return nh_preset.cell


@pytest.fixture(scope="session")
def herm_diagram(herm_preset):
    return spectra.band_diagram(herm_preset.cell, herm_preset.region,
                                herm_preset.n_bands, k_samples=512)


@pytest.fixture(scope="session")
def nh_diagram(nh_preset):
    return spectra.band_diagram(nh_preset.cell, nh_preset.region,
                                nh_preset.n_bands, k_samples=512)
