"""Exception types shared across the package.

Names mirror the failure modes of the numerical contracts; everything derives
from PhotonbandError so callers can catch the package's failures in one clause.
"""


class PhotonbandError(Exception):
    """Base class for all package-specific failures."""


class SizeMismatch(PhotonbandError):
    """Multiset arguments have different sizes."""


class InvalidThickness(PhotonbandError):
    """A layer thickness is outside its admissible range."""


class StructureMismatch(PhotonbandError):
    """Two unit cells do not share a common layer structure."""


class DegenerateMedium(PhotonbandError):
    """Material parameters make the closed-form propagator singular."""


class UnsupportedLayer(PhotonbandError):
    """The closed-form path was requested for a generic layer."""


class UnimodularityViolation(PhotonbandError):
    """A monodromy determinant drifted away from 1 beyond tolerance."""


class BoundaryTooClose(PhotonbandError):
    """A search-region boundary passes too close to a root."""


class MaxDepthExceeded(PhotonbandError):
    """Rectangle subdivision hit its depth limit without isolating roots."""


class TooManyRoots(PhotonbandError):
    """The argument-principle count exceeds the requested maximum."""


class ContinuationStall(PhotonbandError):
    """Band continuation could not advance above the minimum k step."""


class BandCollision(PhotonbandError):
    """Two traced bands approached within the collision tolerance.

    Carries the partial curve traced so far in the ``partial`` attribute.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class OnSpectrum(PhotonbandError):
    """The frequency lies on the spectrum within tolerance.

    Carries ``min_gap``, the smallest distance of an eigenvalue modulus to 1.
    """

    def __init__(self, message, min_gap=None):
        super().__init__(message)
        self.min_gap = min_gap


class UnstableIndex(PhotonbandError):
    """Perturbed re-evaluations of the spectral index disagree."""


class BasePointOnCurve(PhotonbandError):
    """The winding base point lies on (or too close to) the curve."""


class NoInterior(PhotonbandError):
    """The curve encloses no usable interior (degenerate loop)."""


class RefinementBudgetExceeded(PhotonbandError):
    """Adaptive curve resampling exhausted its budget."""


class PathBlocked(PhotonbandError):
    """Homotopy tracking could not keep the witness clear of the spectrum."""


class WrongSelectionSize(PhotonbandError):
    """The boundary matrix needs 3 or 4 selected eigenpairs."""


class BranchPoint(PhotonbandError):
    """Eigenvalues are too close to each other to select eigenpairs."""


class IndexZero(PhotonbandError):
    """The spectral index is 0: no edge mode from this mechanism."""


class NumericalContradiction(PhotonbandError):
    """A nullspace that must exist analytically was not found numerically."""


class ConfigError(PhotonbandError):
    """Invalid CLI or file configuration."""
