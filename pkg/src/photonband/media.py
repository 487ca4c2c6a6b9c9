"""Material tensors, layers, unit cells, symmetry predicates, and the
Hermitian-to-non-Hermitian interpolation family.

The propagation state is transverse, so only the in-plane 2x2 blocks of the
permittivity and permeability enter the ODE; zz entries are stored for
configuration fidelity but never used by propagation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InvalidThickness, StructureMismatch

ISO_TOL = 1e-12


@dataclass(frozen=True)
class MaterialTensor:
    """2x2 in-plane complex tensor plus the (propagation-inert) zz entry."""

    xx: complex
    xy: complex
    yx: complex
    yy: complex
    zz: complex = 1.0 + 0.0j

    def inplane(self) -> np.ndarray:
        return np.array([[self.xx, self.xy], [self.yx, self.yy]], dtype=complex)

    def is_hermitian(self, tol: float = ISO_TOL) -> bool:
        return (abs(self.xx.imag) <= tol and abs(self.yy.imag) <= tol
                and abs(self.xy - np.conj(self.yx)) <= tol)

    def isclose(self, other: "MaterialTensor", tol: float) -> bool:
        return (abs(self.xx - other.xx) <= tol and abs(self.xy - other.xy) <= tol
                and abs(self.yx - other.yx) <= tol and abs(self.yy - other.yy) <= tol)

    def scalar_value(self, tol: float = ISO_TOL) -> Optional[complex]:
        """The scalar s when the in-plane block is s*I, else None."""
        if abs(self.xy) <= tol and abs(self.yx) <= tol and abs(self.xx - self.yy) <= tol:
            return complex(self.xx)
        return None

    @staticmethod
    def isotropic(value: complex, zz: complex | None = None) -> "MaterialTensor":
        v = complex(value)
        return MaterialTensor(v, 0.0, 0.0, v, v if zz is None else complex(zz))

    @staticmethod
    def from_inplane(block: np.ndarray, zz: complex = 1.0) -> "MaterialTensor":
        b = np.asarray(block, dtype=complex)
        return MaterialTensor(b[0, 0], b[0, 1], b[1, 0], b[1, 1], complex(zz))


@dataclass(frozen=True)
class Layer:
    """A constant-material slab.

    ``kind`` is "A", "F", or "generic"; A and F layers remember their
    constructor parameters in ``params`` so the closed-form propagator can be
    dispatched without re-deriving them from the tensors.
    """

    thickness: float
    eps: MaterialTensor
    mu: MaterialTensor
    kind: str = "generic"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.thickness > 0:
            raise InvalidThickness(f"layer thickness must be positive, got {self.thickness}")

    def is_hermitian(self, tol: float = ISO_TOL) -> bool:
        return self.eps.is_hermitian(tol) and self.mu.is_hermitian(tol)

    def scalar_parts(self, tol: float = ISO_TOL):
        """(eps_s, mu_s) when both tensors are scalar isotropic, else None."""
        e = self.eps.scalar_value(tol)
        m = self.mu.scalar_value(tol)
        if e is None or m is None:
            return None
        return e, m


@dataclass(frozen=True)
class UnitCell:
    """Ordered layer stack with total thickness equal to the period (1)."""

    layers: tuple
    period: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        total = sum(l.thickness for l in self.layers)
        if abs(total - self.period) > 1e-12:
            raise InvalidThickness(
                f"layer thicknesses sum to {total!r}, expected period {self.period!r}")

    def boundaries(self) -> np.ndarray:
        """Cumulative layer boundaries 0 = z0 < z1 < ... < zn = period."""
        edges = np.empty(len(self.layers) + 1)
        edges[0] = 0.0
        np.cumsum([l.thickness for l in self.layers], out=edges[1:])
        return edges

    def layer_at(self, z: float) -> Layer:
        """Layer containing position z (periodically extended)."""
        s = z % self.period
        acc = 0.0
        for layer in self.layers:
            acc += layer.thickness
            if s < acc:
                return layer
        return self.layers[-1]

    def is_isotropic(self, tol: float = ISO_TOL) -> bool:
        return all(l.scalar_parts(tol) is not None for l in self.layers)


def a_layer(eps0: complex, delta: float, phi: float, thickness: float) -> Layer:
    """Anisotropic layer: principal permittivities eps0 +/- delta rotated by phi."""
    c2, s2 = np.cos(2.0 * phi), np.sin(2.0 * phi)
    eps = MaterialTensor(eps0 + delta * c2, delta * s2, delta * s2,
                         eps0 - delta * c2, zz=eps0)
    return Layer(thickness=thickness, eps=eps, mu=MaterialTensor.isotropic(1.0, zz=1.0),
                 kind="A", params={"eps0": complex(eps0), "delta": float(delta),
                                   "phi": float(phi)})


def f_layer(eps0t: complex, alpha: float, beta: float, thickness: float) -> Layer:
    """Gyrotropic (Faraday) layer with imaginary antisymmetric off-diagonals."""
    eps = MaterialTensor(eps0t, 1j * alpha, -1j * alpha, eps0t, zz=eps0t)
    mu = MaterialTensor(1.0, 1j * beta, -1j * beta, 1.0, zz=1.0)
    return Layer(thickness=thickness, eps=eps, mu=mu, kind="F",
                 params={"eps0t": complex(eps0t), "alpha": float(alpha),
                         "beta": float(beta)})


def vacuum_cell() -> UnitCell:
    """Single vacuum layer of unit thickness."""
    return UnitCell(layers=(Layer(1.0, MaterialTensor.isotropic(1.0),
                                  MaterialTensor.isotropic(1.0), kind="generic"),))


def isotropic_cell(eps: complex, mu: complex = 1.0) -> UnitCell:
    """Single isotropic layer of unit thickness."""
    return UnitCell(layers=(Layer(1.0, MaterialTensor.isotropic(eps),
                                  MaterialTensor.isotropic(mu), kind="generic"),))


def afa_cell(eps0: complex, delta: float, phi1: float, phi2: float,
             alpha: float, beta: float, L: float = 0.25) -> UnitCell:
    """Three-layer cell A(phi1) | F | A(phi2) with thicknesses L, 1-2L, L.

    The middle thickness is constructed so the floating-point sum of the
    three thicknesses is exactly 1.0.
    """
    if not 0.0 < L < 0.5:
        raise InvalidThickness(f"A-layer thickness must satisfy 0 < L < 1/2, got {L}")
    t_mid = 1.0 - 2.0 * L
    t_last = 1.0 - (L + t_mid)
    return UnitCell(layers=(
        a_layer(eps0, delta, phi1, L),
        f_layer(1.0, alpha, beta, t_mid),
        a_layer(eps0, delta, phi2, t_last),
    ))


def is_hermitian(cell: UnitCell, tol: float = ISO_TOL) -> bool:
    """True when every layer's eps and mu equal their conjugate transposes."""
    return all(l.is_hermitian(tol) for l in cell.layers)


def has_inversion_symmetry(cell: UnitCell, tol: float = ISO_TOL) -> bool:
    """True when the stack read in reverse about the midpoint equals itself."""
    fw = cell.layers
    bw = fw[::-1]
    for a, b in zip(fw, bw):
        if abs(a.thickness - b.thickness) > tol:
            return False
        if not (a.eps.isclose(b.eps, tol) and a.mu.isclose(b.mu, tol)):
            return False
    return True


@dataclass(frozen=True)
class HomotopyFamily:
    """Entrywise-linear interpolation between two structurally equal cells."""

    cell_start: UnitCell
    cell_end: UnitCell

    def __post_init__(self):
        a, b = self.cell_start.layers, self.cell_end.layers
        if len(a) != len(b):
            raise StructureMismatch("cells have different layer counts")
        for la, lb in zip(a, b):
            if abs(la.thickness - lb.thickness) > 1e-12:
                raise StructureMismatch("layer thicknesses differ between endpoints")


def _lerp(a: complex, b: complex, t: float) -> complex:
    return (1.0 - t) * a + t * b


def _lerp_tensor(a: MaterialTensor, b: MaterialTensor, t: float) -> MaterialTensor:
    return MaterialTensor(_lerp(a.xx, b.xx, t), _lerp(a.xy, b.xy, t),
                          _lerp(a.yx, b.yx, t), _lerp(a.yy, b.yy, t),
                          _lerp(a.zz, b.zz, t))


def homotopy_at(family: HomotopyFamily, t: float) -> UnitCell:
    """Cell at parameter t: entrywise (1-t)*start + t*end.

    Endpoints are returned exactly.  When both endpoint layers are A layers
    differing only in eps0 (same delta, phi), the interpolated layer is again
    an A layer with interpolated eps0, which coincides with the entrywise
    interpolation and keeps the closed-form propagator available; same for F
    layers differing only in eps0t.
    """
    if t == 0.0:
        return family.cell_start
    if t == 1.0:
        return family.cell_end
    layers = []
    for la, lb in zip(family.cell_start.layers, family.cell_end.layers):
        if (la.kind == "A" and lb.kind == "A"
                and la.params["delta"] == lb.params["delta"]
                and la.params["phi"] == lb.params["phi"]):
            layers.append(a_layer(_lerp(la.params["eps0"], lb.params["eps0"], t),
                                  la.params["delta"], la.params["phi"], la.thickness))
        elif (la.kind == "F" and lb.kind == "F"
                and la.params["alpha"] == lb.params["alpha"]
                and la.params["beta"] == lb.params["beta"]):
            layers.append(f_layer(_lerp(la.params["eps0t"], lb.params["eps0t"], t),
                                  la.params["alpha"], la.params["beta"], la.thickness))
        else:
            layers.append(Layer(la.thickness, _lerp_tensor(la.eps, lb.eps, t),
                                _lerp_tensor(la.mu, lb.mu, t), kind="generic"))
    return UnitCell(layers=tuple(layers), period=family.cell_start.period)
