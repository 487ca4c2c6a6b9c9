"""Band structure, spectral topology, and edge modes of 1D anisotropic photonic crystals."""

__version__ = "0.1.0"

from . import cli, edge, linalg, media, presets, spectra, topology, transfer  # noqa: F401
from .errors import PhotonbandError  # noqa: F401
