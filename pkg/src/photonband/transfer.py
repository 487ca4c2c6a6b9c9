"""Transfer matrices for layered media.

Closed-form single-layer propagators, a fixed-step RK4 integration oracle for
the first-order field ODE, cell monodromy, partial-cell transfer, and state
propagation.  The state ordering is Phi = (E_x, E_y, H_x, H_y); the field ODE
is dE/dz = i*omega*Qinv*mu*H, dH/dz = -i*omega*Qinv*eps*E with
Qinv = [[0, 1], [-1, 0]].
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .errors import DegenerateMedium, UnimodularityViolation, UnsupportedLayer
from .linalg import QuarticCoeffs
from .media import Layer, UnitCell

QMAT = np.array([[0.0, -1.0], [1.0, 0.0]])
QINV = np.array([[0.0, 1.0], [-1.0, 0.0]])

DEFAULT_STEPS = 512
# target |omega|*n*h per RK4 step when auto-scaling step counts (keeps the
# determinant drift of the 4th-order scheme below ~1e-10 per unit length)
_PHASE_PER_STEP = 6.5e-3


@dataclass(frozen=True)
class StateVector:
    """Transverse field state (E, H), each a complex 2-vector."""

    E: np.ndarray
    H: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate([np.asarray(self.E, dtype=complex).ravel(),
                               np.asarray(self.H, dtype=complex).ravel()])

    @staticmethod
    def from_array(phi) -> "StateVector":
        phi = np.asarray(phi, dtype=complex).ravel()
        return StateVector(E=phi[:2].copy(), H=phi[2:].copy())


def generator(layer: Layer, omega: complex) -> np.ndarray:
    """The constant 4x4 coefficient matrix G with Phi' = G Phi inside the layer."""
    G = np.zeros((4, 4), dtype=complex)
    G[:2, 2:] = 1j * omega * (QINV @ layer.mu.inplane())
    G[2:, :2] = -1j * omega * (QINV @ layer.eps.inplane())
    return G


def transfer_A(omega: complex, L: float, delta: float, phi: float,
               eps0: complex) -> np.ndarray:
    """Closed-form propagator of an A layer over thickness L.

    Principal-axis polarizations with indices n1 = sqrt(eps0 + delta) and
    n2 = sqrt(eps0 - delta), rotated by phi.  Entire in eps0 (the matrix is
    even in each n_i), so the branch of the square roots is immaterial.
    """
    n1 = np.sqrt(complex(eps0 + delta))
    n2 = np.sqrt(complex(eps0 - delta))
    T0 = np.zeros((4, 4), dtype=complex)
    _fill_polarization_block(T0, (0, 3), n1, omega * L, sign=+1.0)
    _fill_polarization_block(T0, (1, 2), n2, omega * L, sign=-1.0)
    if phi == 0.0:
        return T0
    c, s = math.cos(phi), math.sin(phi)
    R = np.array([[c, -s], [s, c]])
    R4 = np.zeros((4, 4))
    R4[:2, :2] = R
    R4[2:, 2:] = R
    return R4 @ T0 @ R4.T


def _fill_polarization_block(T, idx, n, wl, sign):
    # (E_x, H_y) couples with +i, (E_y, H_x) with -i
    i, j = idx
    c = np.cos(n * wl)
    if n == 0:
        s_over_n, s_times_n = wl, 0.0
    else:
        s_over_n = np.sin(n * wl) / n
        s_times_n = np.sin(n * wl) * n
    T[i, i] = c
    T[i, j] = sign * 1j * s_over_n
    T[j, i] = sign * 1j * s_times_n
    T[j, j] = c


def transfer_F(omega: complex, L: float, eps0t: complex, alpha: float,
               beta: float) -> np.ndarray:
    """Closed-form propagator of a gyrotropic F layer over thickness L.

    Decouples in the circular basis v-+ = (1, -+i)/sqrt(2) into two 2x2
    oscillator blocks with m1 = sqrt((eps0t+alpha)(1+beta)) and
    m2 = sqrt((eps0t-alpha)(1-beta)); each block is even in its m, so branch
    choices are immaterial.  Degenerate gyromagnetic coupling (1 +- beta = 0)
    is rejected.
    """
    pe, me_ = complex(eps0t + alpha), complex(eps0t - alpha)
    pb, mb = 1.0 + beta, 1.0 - beta
    if pb == 0.0 or mb == 0.0:
        raise DegenerateMedium("transfer_F needs 1 +- beta nonzero")
    wl = omega * L
    m1 = np.sqrt(pe * pb)
    m2 = np.sqrt(me_ * mb)
    s1, s2 = np.cos(m1 * wl), np.cos(m2 * wl)
    st1 = np.sin(m1 * wl) / m1 if m1 != 0 else wl
    st2 = np.sin(m2 * wl) / m2 if m2 != 0 else wl
    # block entries, already divided by m: st_i = sin(m_i w L)/m_i
    a1, b1 = s1, st1 * pb          # e <- e, e <- h on the minus mode
    c1, d1 = -st1 * pe, s1         # h <- e, h <- h
    a2, b2 = s2, -st2 * mb
    c2, d2 = st2 * me_, s2
    # conjugate the block-diagonal circular form back to Cartesian components:
    # V diag(x1, x2) V^-1 = [[(x1+x2)/2, i(x1-x2)/2], [-i(x1-x2)/2, (x1+x2)/2]]
    T = np.zeros((4, 4), dtype=complex)
    _embed_circular(T, (0, 0), a1, a2)
    _embed_circular(T, (0, 2), b1, b2)
    _embed_circular(T, (2, 0), c1, c2)
    _embed_circular(T, (2, 2), d1, d2)
    return T


def _embed_circular(T, corner, x1, x2):
    r, c = corner
    half_sum = 0.5 * (x1 + x2)
    half_dif = 0.5j * (x1 - x2)
    T[r, c] = half_sum
    T[r, c + 1] = half_dif
    T[r + 1, c] = -half_dif
    T[r + 1, c + 1] = half_sum


def transfer_isotropic(omega: complex, L: float, eps_s: complex,
                       mu_s: complex) -> np.ndarray:
    """Exact propagator of a scalar isotropic layer (two decoupled 2x2 blocks)."""
    b1 = scalar_layer_matrix(eps_s, mu_s, omega, L)
    T = np.zeros((4, 4), dtype=complex)
    # (E_x, H_y) block carries b1 directly; (E_y, H_x) flips the coupling sign
    T[0, 0], T[0, 3], T[3, 0], T[3, 3] = b1[0, 0], b1[0, 1], b1[1, 0], b1[1, 1]
    T[1, 1], T[1, 2], T[2, 1], T[2, 2] = b1[0, 0], -b1[0, 1], -b1[1, 0], b1[1, 1]
    return T


def scalar_layer_matrix(eps_s: complex, mu_s: complex, omega: complex,
                        t: float) -> np.ndarray:
    """2x2 (E_x, H_y) propagator of a scalar layer: the decoupled block."""
    n = np.sqrt(complex(eps_s) * complex(mu_s))
    wl = omega * t
    c = np.cos(n * wl)
    s_over = np.sin(n * wl) / n if n != 0 else wl
    return np.array([[c, 1j * mu_s * s_over],
                     [1j * eps_s * s_over, c]], dtype=complex)


def scalar_monodromy(cell: UnitCell, omega: complex) -> np.ndarray:
    """2x2 monodromy of the decoupled block for an all-isotropic cell."""
    M = np.eye(2, dtype=complex)
    for layer in cell.layers:
        parts = layer.scalar_parts()
        if parts is None:
            raise UnsupportedLayer("scalar_monodromy requires isotropic layers")
        M = scalar_layer_matrix(parts[0], parts[1], omega, layer.thickness) @ M
    return M


def _rk4_step_operator(G: np.ndarray, h: float) -> np.ndarray:
    I4 = np.eye(4, dtype=complex)
    k1 = G
    k2 = G @ (I4 + 0.5 * h * k1)
    k3 = G @ (I4 + 0.5 * h * k2)
    k4 = G @ (I4 + h * k3)
    return I4 + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _rk4_layer(layer: Layer, omega: complex, seg_len: float, n_steps: int) -> np.ndarray:
    # G is constant inside a layer, so the classical RK4 update is one fixed
    # step operator applied n times.
    G = generator(layer, omega)
    S = _rk4_step_operator(G, seg_len / n_steps)
    T = np.eye(4, dtype=complex)
    for _ in range(n_steps):
        T = S @ T
    return T


def _auto_steps(layer: Layer, omega: complex, seg_len: float, steps) -> int:
    if steps is not None:
        return max(1, math.ceil(steps * seg_len / layer.thickness))
    n_bound = math.sqrt(max(np.linalg.norm(layer.eps.inplane()), 1.0)
                        * max(np.linalg.norm(layer.mu.inplane()), 1.0))
    needed = abs(omega) * n_bound * seg_len / _PHASE_PER_STEP
    return max(math.ceil(DEFAULT_STEPS * seg_len / layer.thickness),
               math.ceil(needed), 1)


def _segments(cell: UnitCell, z1: float, z2: float):
    """Split [z1, z2] at (periodically extended) layer boundaries."""
    edges = cell.boundaries()
    per = cell.period
    tiny = 1e-12 * per
    segs = []
    p = z1
    while p < z2 - tiny:
        s = p - math.floor(p / per) * per
        i = int(np.searchsorted(edges, s, side="right")) - 1
        i = min(max(i, 0), len(cell.layers) - 1)
        d = edges[i + 1] - s
        if d <= tiny:
            i = (i + 1) % len(cell.layers)
            d = cell.layers[i].thickness
        seg = min(d, z2 - p)
        segs.append((cell.layers[i], seg))
        p += seg
    return segs


def integrate_transfer(cell: UnitCell, omega: complex, z1: float = 0.0,
                       z2: float = 1.0, steps: int = DEFAULT_STEPS) -> np.ndarray:
    """RK4 transfer matrix from z1 to z2 (the ODE oracle).

    Fixed-step classical Runge-Kutta with ``steps`` steps per layer and
    substeps aligned to layer boundaries (no step straddles a material
    discontinuity); partial layers get a proportional step count.
    """
    if z2 <= z1:
        raise ValueError("integrate_transfer needs z2 > z1")
    T = np.eye(4, dtype=complex)
    for layer, seg_len in _segments(cell, z1, z2):
        n = max(1, math.ceil(steps * seg_len / layer.thickness))
        T = _rk4_layer(layer, omega, seg_len, n) @ T
    return T


def layer_matrix(layer: Layer, omega: complex, thickness: float | None = None,
                 steps: int | None = None) -> np.ndarray:
    """Best available propagator for one layer (closed form when possible)."""
    t = layer.thickness if thickness is None else thickness
    if t == 0.0:
        return np.eye(4, dtype=complex)
    if layer.kind == "A":
        p = layer.params
        return transfer_A(omega, t, p["delta"], p["phi"], p["eps0"])
    if layer.kind == "F":
        p = layer.params
        return transfer_F(omega, t, p["eps0t"], p["alpha"], p["beta"])
    parts = layer.scalar_parts()
    if parts is not None:
        return transfer_isotropic(omega, t, parts[0], parts[1])
    return _rk4_layer(layer, omega, t, _auto_steps(layer, omega, t, steps))


@dataclass
class Monodromy:
    """One-period transfer matrix with its characteristic data."""

    omega: complex
    matrix: np.ndarray
    coeffs: QuarticCoeffs
    det_error: float
    _eigen: object = field(default=None, repr=False)

    def lambdas(self) -> np.ndarray:
        return linalg.quartic_roots(*self.coeffs)

    def eigen(self) -> linalg.EigenSet:
        if self._eigen is None:
            self._eigen = linalg.eigen4(self.matrix)
        return self._eigen


def monodromy(cell: UnitCell, omega: complex, method: str = "auto",
              steps: int | None = None, composition: str = "propagation",
              det_tol: float = 1e-9) -> Monodromy:
    """Transfer matrix over one period, with characteristic coefficients.

    method "closed_form" requires every layer to be of kind A or F;
    "integrate" uses the RK4 oracle on every layer (step count auto-scaled
    with |omega| when ``steps`` is None); "auto" uses closed forms where
    available and RK4 elsewhere.  composition "propagation" applies the first
    layer first (M = T_last ... T_first); "paper" reproduces the printed
    left-to-right product.
    """
    mats = []
    for layer in cell.layers:
        if method == "closed_form":
            if layer.kind not in ("A", "F"):
                raise UnsupportedLayer(
                    f"closed_form cannot handle a {layer.kind!r} layer")
            mats.append(layer_matrix(layer, omega))
        elif method == "integrate":
            n = _auto_steps(layer, omega, layer.thickness, steps)
            mats.append(_rk4_layer(layer, omega, layer.thickness, n))
        elif method == "auto":
            mats.append(layer_matrix(layer, omega, steps=steps))
        else:
            raise ValueError(f"unknown monodromy method {method!r}")
    M = np.eye(4, dtype=complex)
    if composition == "propagation":
        for T in mats:
            M = T @ M
    elif composition == "paper":
        for T in reversed(mats):
            M = T @ M
    else:
        raise ValueError(f"unknown composition {composition!r}")
    coeffs = linalg.char_poly4(M)
    # |det - 1| is checked with the backward-stable LU determinant; the trace
    # recursion behind char_poly4 has forward error ~eps*||M||^4, far too
    # loose a yardstick once the entries grow at complex omega.
    det_err = abs(np.linalg.det(M) - 1.0)
    if det_err > det_tol:
        # strongly evanescent regimes round the matrix entries themselves, so
        # |det - 1| ~ eps * kappa(M) is the certification floor; only flag
        # drift that exceeds what conditioning alone explains
        kappa = np.linalg.norm(M) * np.linalg.norm(np.linalg.inv(M))
        if det_err > max(det_tol, 100.0 * np.finfo(float).eps * kappa):
            raise UnimodularityViolation(
                f"|det M - 1| = {det_err:.3e} exceeds {det_tol:.1e} at omega={omega}")
    # the constant term is 1 exactly for any well-formed cell; pinning it
    # keeps the lambda-product identity exact for downstream root finding
    coeffs = QuarticCoeffs(coeffs.a3, coeffs.a2, coeffs.a1, 1.0 + 0.0j)
    return Monodromy(omega=complex(omega), matrix=M, coeffs=coeffs, det_error=det_err)


def partial_transfer(cell: UnitCell, omega: complex, z: float,
                     steps: int | None = None) -> np.ndarray:
    """Transfer matrix from 0 to z within one period (0 <= z <= period)."""
    if z < 0 or z > cell.period + 1e-12:
        raise ValueError("partial_transfer needs 0 <= z <= period")
    T = np.eye(4, dtype=complex)
    remaining = z
    for layer in cell.layers:
        if remaining <= 1e-15:
            break
        seg = min(layer.thickness, remaining)
        T = layer_matrix(layer, omega, thickness=seg, steps=steps) @ T
        remaining -= seg
    return T


def matrix_power_int(M: np.ndarray, n: int) -> np.ndarray:
    """M^n for n >= 0; direct product for small n, repeated squaring beyond 8."""
    if n < 0:
        raise ValueError("negative powers not supported")
    if n <= 8:
        P = np.eye(M.shape[0], dtype=complex)
        for _ in range(n):
            P = P @ M
        return P
    half = matrix_power_int(M, n // 2)
    P = half @ half
    return P @ M if n % 2 else P


def propagate(cell: UnitCell, omega: complex, state0: StateVector,
              z: float) -> StateVector:
    """State at position z >= 0: partial transfer after floor(z) full periods."""
    if z < 0:
        raise ValueError("propagate needs z >= 0")
    n = int(math.floor(z / cell.period + 1e-15))
    frac = z - n * cell.period
    if frac < 0:
        frac = 0.0
    phi = state0.as_array()
    if n > 0:
        M = monodromy(cell, omega).matrix
        phi = matrix_power_int(M, n) @ phi
    if frac > 1e-15:
        phi = partial_transfer(cell, omega, frac) @ phi
    return StateVector.from_array(phi)
