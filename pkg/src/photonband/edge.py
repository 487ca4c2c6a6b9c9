"""Edge modes of the semi-infinite crystal.

At a frequency inside a dispersion loop the monodromy eigenvalues split 3/1
(or 1/3) across the unit circle.  The three eigenpairs decaying into the
crystal span the admissible initial states; the boundary condition at z = 0
restricts them through a 2x3 linear system B alpha = 0, which always has a
nullvector.  The resulting field decays exponentially, cell to cell, at the
rate of the slowest selected eigenvalue.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import linalg, topology, transfer
from .errors import (BranchPoint, IndexZero, NumericalContradiction,
                     OnSpectrum, WrongSelectionSize)
from .media import UnitCell
from .spectra import DispersionCurve
from .transfer import StateVector

TOL_BC = 1e-9
RIGHT = "right_half_line"
LEFT = "left_half_line"

# the in-plane quarter-turn J: the vacuum outgoing condition couples E and H
# at the boundary through it
_Q2 = np.array([[0.0, -1.0], [1.0, 0.0]], dtype=complex)


@dataclass(frozen=True)
class BoundaryCondition:
    """Termination of the crystal at z = 0."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("outgoing_vacuum", "pec", "pmc"):
            raise ValueError(f"unknown boundary condition {self.kind!r}")


OUTGOING_VACUUM = BoundaryCondition("outgoing_vacuum")
PEC = BoundaryCondition("pec")
PMC = BoundaryCondition("pmc")


@dataclass(frozen=True)
class EdgeMode:
    """One solution of the semi-infinite boundary problem.

    ``alphas`` combines the selected eigenpairs into the boundary state
    Phi(0) = sum_j alpha_j Phi_j with ||alpha|| = 1.  ``decay_rate`` is the
    modulus of the selected eigenvalue that decays slowest into the crystal:
    max |lambda_j| < 1 on the right half-line, min |lambda_j| > 1 on the
    left (whose reciprocal is the per-cell envelope factor).  When the
    boundary system is degenerate (nullspace dimension > 1), the extra basis
    vectors are carried in ``extra_alphas`` and ``degenerate`` is set.
    """

    omega: complex
    side: str
    alphas: np.ndarray
    eigenpairs: tuple
    decay_rate: float
    bc: BoundaryCondition
    boundary_residual: float
    index_value: int
    degenerate: bool = False
    extra_alphas: tuple = field(default_factory=tuple)

    def boundary_state(self) -> StateVector:
        phi0 = sum(a * v for a, (_, v) in zip(self.alphas, self.eigenpairs))
        return StateVector.from_array(phi0)


def boundary_matrix(eigenpairs: Sequence, side: str,
                    bc: BoundaryCondition) -> np.ndarray:
    """The 2 x m boundary system acting on the combination coefficients.

    Outgoing vacuum: the ambient wave carries H(0) = -Q E(0) away from a
    crystal on the right half-line (and +Q E(0) on the left), so the rows
    are [H_j] + Q [E_j] (right) or [H_j] - Q [E_j] (left).  A perfect
    electric (magnetic) wall pins E(0) (H(0)) to zero instead.
    """
    m = len(eigenpairs)
    if m not in (3, 4):
        raise WrongSelectionSize(f"boundary system needs 3 or 4 eigenpairs, got {m}")
    E = np.column_stack([np.asarray(v, dtype=complex)[:2] for _, v in eigenpairs])
    H = np.column_stack([np.asarray(v, dtype=complex)[2:] for _, v in eigenpairs])
    if bc.kind == "pec":
        return E
    if bc.kind == "pmc":
        return H
    if side == RIGHT:
        return H + _Q2 @ E
    if side == LEFT:
        return H - _Q2 @ E
    raise ValueError(f"unknown side {side!r}")


def _select_eigenpairs(matrix: np.ndarray, omega: complex, *,
                       tol_circle: float, tol_cluster: Optional[float]):
    """Eigenpairs of the matrix split by the unit circle, with the index.

    Rejects frequencies on the spectrum (a unit-modulus eigenvalue) and
    branch points (coalescing eigenvalues), where the selection is not
    well defined.
    """
    es = linalg.eigen4(matrix, tol_cluster=tol_cluster)
    lambdas = es.lambdas
    min_gap = min(abs(abs(l) - 1.0) for l in lambdas)
    if min_gap <= tol_circle:
        raise OnSpectrum(
            f"omega={omega} has a unit-modulus eigenvalue "
            f"(min ||lambda|-1| = {min_gap:.3e})", min_gap=min_gap)
    sep = min(abs(lambdas[i] - lambdas[j])
              for i in range(4) for j in range(i + 1, 4))
    sep_bar = tol_cluster if tol_cluster is not None \
        else 1e-8 * (1.0 + max(abs(l) for l in lambdas))
    if es.defective or bool(es.degenerate.any()) or sep <= sep_bar:
        raise BranchPoint(
            f"eigenvalues coalesce at omega={omega} "
            f"(min separation {sep:.3e})")
    n_in = sum(1 for l in lambdas if abs(l) < 1.0)
    value = (n_in - (4 - n_in)) // 2
    if value == 0:
        raise IndexZero(
            f"index 0 at omega={omega}: no decaying 3-space on either side")
    side = RIGHT if value > 0 else LEFT
    if side == RIGHT:
        selected = [(l, v) for l, v in es.pairs() if abs(l) < 1.0]
    else:
        selected = [(l, v) for l, v in es.pairs() if abs(l) > 1.0]
    return tuple(selected), side, value


def edge_mode_from_matrix(matrix: np.ndarray, omega: complex,
                          bc: BoundaryCondition = OUTGOING_VACUUM, *,
                          tol_circle: float = 1e-8,
                          tol_cluster: Optional[float] = None,
                          tol_bc: float = TOL_BC) -> EdgeMode:
    """Edge mode from an explicit 4x4 one-period matrix.

    The matrix-level entry point: it makes no unimodularity assumption, so
    synthetic matrices with all four eigenvalues on one side of the circle
    (index +/-2, unreachable for physical cells) exercise the 4-pair path.
    """
    selected, side, value = _select_eigenpairs(
        matrix, omega, tol_circle=tol_circle, tol_cluster=tol_cluster)
    B = boundary_matrix(selected, side, bc)
    basis = linalg.nullspace2xm(B, tol_bc)
    if basis.shape[1] == 0:
        raise NumericalContradiction(
            f"the {B.shape[0]}x{B.shape[1]} boundary system reported an "
            "empty nullspace; its rank cannot exceed 2")
    alphas = _fix_phase(basis[:, 0])
    residual = float(np.linalg.norm(B @ alphas))
    if residual > tol_bc * max(1.0, float(np.linalg.norm(B))):
        raise NumericalContradiction(
            f"boundary residual {residual:.3e} exceeds tol_bc")
    mods = [abs(l) for l, _ in selected]
    decay = max(mods) if side == RIGHT else min(mods)
    extra = tuple(_fix_phase(basis[:, j]) for j in range(1, basis.shape[1]))
    expected_dim = len(selected) - 2
    return EdgeMode(omega=complex(omega), side=side, alphas=alphas,
                    eigenpairs=selected, decay_rate=float(decay), bc=bc,
                    boundary_residual=residual, index_value=value,
                    degenerate=basis.shape[1] > expected_dim,
                    extra_alphas=extra)


def _fix_phase(alpha: np.ndarray) -> np.ndarray:
    """Unit norm with the first nonzero component rotated to positive real."""
    alpha = np.asarray(alpha, dtype=complex)
    alpha = alpha / np.linalg.norm(alpha)
    for a in alpha:
        if abs(a) > 1e-12:
            alpha = alpha * (abs(a) / a)
            break
    return alpha


def find_edge_mode(cell: UnitCell, omega: complex,
                   bc: BoundaryCondition = OUTGOING_VACUUM, *,
                   tol_circle: float = 1e-8,
                   tol_cluster: Optional[float] = None,
                   tol_bc: float = TOL_BC) -> EdgeMode:
    """Edge mode of the semi-infinite crystal at a point-gap frequency.

    The index sign picks the half-line: +1 puts the crystal on the right
    (three eigenvalues inside the circle decay as z grows), -1 on the left.
    """
    M = transfer.monodromy(cell, complex(omega))
    return edge_mode_from_matrix(M.matrix, complex(omega), bc,
                                 tol_circle=tol_circle,
                                 tol_cluster=tol_cluster, tol_bc=tol_bc)


def count_edge_modes(cell: UnitCell, omega: complex,
                     bc: BoundaryCondition = OUTGOING_VACUUM, *,
                     tol_circle: float = 1e-8,
                     tol_cluster: Optional[float] = None,
                     tol_bc: float = TOL_BC) -> int:
    """Number of independent edge modes (boundary-system nullspace size)."""
    try:
        selected, side, _ = _select_eigenpairs(
            transfer.monodromy(cell, complex(omega)).matrix, complex(omega),
            tol_circle=tol_circle, tol_cluster=tol_cluster)
    except IndexZero:
        return 0
    B = boundary_matrix(selected, side, bc)
    return int(linalg.nullspace2xm(B, tol_bc).shape[1])


def _lattice_state(mode: EdgeMode, n: int) -> np.ndarray:
    """Phi at the n-th cell boundary into the crystal (z = n or z = -n).

    Powers are formed as exp(+/-n log lambda), so only decaying factors are
    ever produced; a factor underflowing to zero is already negligible.
    """
    sgn = 1.0 if mode.side == RIGHT else -1.0
    phi = np.zeros(4, dtype=complex)
    for a, (lam, v) in zip(mode.alphas, mode.eigenpairs):
        phi += a * np.exp(sgn * n * np.log(complex(lam))) * np.asarray(v)
    return phi


def mode_profile(cell: UnitCell, mode: EdgeMode, z_max: float,
                 samples_per_cell: int = 16) -> list:
    """Field profile (z, StateVector) over |z| <= z_max into the crystal.

    Cell boundaries come from the eigen-expansion (stable at any depth);
    interior points propagate across the partial cell from the boundary
    below, which involves one bounded period at most.  Left half-line
    profiles are reported at nonpositive z, decaying toward -infinity.
    """
    if z_max <= 0:
        raise ValueError("z_max must be positive")
    n_cells = int(math.ceil(z_max - 1e-12))
    out = []
    for n in range(n_cells):
        base = _lattice_state(mode, n if mode.side == RIGHT else n + 1)
        for i in range(samples_per_cell):
            u = i / samples_per_cell
            T = transfer.partial_transfer(cell, mode.omega, u) \
                if u > 0 else np.eye(4, dtype=complex)
            phi = T @ base
            z = (n + u) if mode.side == RIGHT else (-(n + 1) + u)
            out.append((z, StateVector.from_array(phi)))
    final_n = n_cells if mode.side == RIGHT else 0
    z_end = float(n_cells) if mode.side == RIGHT else 0.0
    out.append((z_end, StateVector.from_array(_lattice_state(mode, final_n))))
    out.sort(key=lambda s: s[0])
    return out


def decay_fit(mode: EdgeMode, *, window: int = 8) -> tuple:
    """Fitted per-cell slope of log ||Phi(n)|| and the window start used.

    The expansion mixes all selected eigenvalues, so the slope approaches
    the dominant rate like r c^n, with c the per-cell decay ratio of a
    contaminant against the dominant component and r their coefficient
    ratio (the boundary system can put a near-zero weight on the dominant
    eigenvector, which pushes the asymptotic regime much deeper than the
    moduli alone suggest).  The window starts where every r c^n term drops
    below 1e-9.  The fit evaluates log ||Phi(n)|| with the dominant rate
    factored out analytically, so it stays exact at any depth: the factored
    states cannot underflow, and the huge linear part of the log-norm never
    enters the least-squares arithmetic.
    """
    sgn = 1.0 if mode.side == RIGHT else -1.0
    # per-cell log decay of each component (negative), and its weight
    comps = []
    for a, (lam, v) in zip(mode.alphas, mode.eigenpairs):
        if abs(a) > 1e-300:
            comps.append((sgn * math.log(abs(lam)), complex(a),
                          complex(lam), np.asarray(v)))
    if not comps:
        raise NumericalContradiction("edge mode has no nonzero coefficients")
    slope_dom = max(rate for rate, _, _, _ in comps)
    a_dom = max(abs(a) for rate, a, _, _ in comps
                if rate == slope_dom)
    n0 = 3
    for rate, a, _, _ in comps:
        gap = slope_dom - rate
        if gap <= 0:
            continue
        # r c^n <= 1e-9  with  log r = log|a/a_dom|, log c = -gap
        need = (math.log(1e-9) - math.log(abs(a) / a_dom)) / -gap
        n0 = max(n0, int(math.ceil(need)))
    n0 = min(n0, 10 ** 15)
    ns = np.arange(n0, n0 + window, dtype=float)
    logs = np.empty(window)
    for i, n in enumerate(ns):
        psi = np.zeros(4, dtype=complex)
        for rate, a, lam, v in comps:
            # exponent has nonpositive real part by construction
            psi += a * np.exp(n * (sgn * np.log(lam) - slope_dom)) * v
        logs[i] = math.log(np.linalg.norm(psi))
    xs = ns - ns.mean()
    slope = slope_dom + float(np.polyfit(xs, logs, 1)[0])
    return slope, int(n0)


def expected_decay_slope(mode: EdgeMode) -> float:
    """The per-cell log decrement the dominant selected eigenvalue predicts."""
    return math.log(mode.decay_rate) if mode.side == RIGHT \
        else -math.log(mode.decay_rate)


def boundary_condition_residual(mode: EdgeMode) -> float:
    """||H(0) -+ Q E(0)|| / ||Phi(0)|| per the mode's own side and bc."""
    phi0 = mode.boundary_state()
    E0, H0 = phi0.E, phi0.H
    if mode.bc.kind == "pec":
        num = np.linalg.norm(E0)
    elif mode.bc.kind == "pmc":
        num = np.linalg.norm(H0)
    elif mode.side == RIGHT:
        num = np.linalg.norm(H0 + _Q2 @ E0)
    else:
        num = np.linalg.norm(H0 - _Q2 @ E0)
    return float(num / np.linalg.norm(phi0.as_array()))


def ode_residual(cell: UnitCell, mode: EdgeMode, *, n_cells: int = 2,
                 per_layer: int = 4, h: float = 3e-6) -> float:
    """Worst relative residual of Phi' = G(z) Phi at layer-interior points.

    Centered differences with step h, kept a safe margin away from layer
    interfaces where the coefficient matrix jumps.  The default step keeps
    the h^2 truncation term (scale ||G||^3 h^2 / 6, and ||G|| grows with
    omega and eps) below 1e-8 for the cells of interest while the
    subtraction noise stays two orders below that.
    """
    worst = 0.0
    for n in range(n_cells):
        base = _lattice_state(mode, n if mode.side == RIGHT else n + 1)
        z0 = 0.0
        for layer in cell.layers:
            G = transfer.generator(layer, mode.omega)
            us = np.linspace(z0 + 4 * h, z0 + layer.thickness - 4 * h,
                             per_layer)
            for u in us:
                Tm = transfer.partial_transfer(cell, mode.omega, u - h)
                T0 = transfer.partial_transfer(cell, mode.omega, u)
                Tp = transfer.partial_transfer(cell, mode.omega, u + h)
                phi_m, phi_0, phi_p = Tm @ base, T0 @ base, Tp @ base
                dphi = (phi_p - phi_m) / (2.0 * h)
                r = np.linalg.norm(dphi - G @ phi_0) / np.linalg.norm(phi_0)
                worst = max(worst, float(r))
            z0 += layer.thickness
    return worst


def verify_edge_theorem(cell: UnitCell, curve: DispersionCurve,
                        n_samples: int, bc: BoundaryCondition = OUTGOING_VACUUM,
                        *, others: Sequence[DispersionCurve] = (),
                        seed: int = 0, tol_bc: float = TOL_BC,
                        tol_decay: float = 1e-6,
                        tol_ode: float = 1e-6) -> dict:
    """Sample the loop interior and check the edge-mode predictions at each.

    Every accepted sample must produce a mode on the side the winding sign
    predicts, with boundary residual <= tol_bc, fitted decay slope within
    tol_decay of the dominant eigenvalue's, and ODE residual <= tol_ode.
    Samples falling inside another band's loop are skipped (the index jump
    from the other loop changes the selection there); samples on the
    spectrum or at branch points are rejected and counted.
    """
    rng = np.random.default_rng(seed)
    pts = [w for _, w in curve.samples]
    re_lo, re_hi = min(p.real for p in pts), max(p.real for p in pts)
    im_lo, im_hi = min(p.imag for p in pts), max(p.imag for p in pts)
    results = []
    n_skipped = n_rejected = 0
    attempts = 0
    while len(results) < n_samples and attempts < 400 * n_samples:
        attempts += 1
        p = complex(rng.uniform(re_lo, re_hi), rng.uniform(im_lo, im_hi))
        try:
            w = topology.winding_number(curve, p, cell=cell).winding
        except Exception:
            continue
        if w == 0:
            continue
        inside_other = False
        for other in others:
            try:
                if topology.winding_number(other, p, cell=cell).winding != 0:
                    inside_other = True
                    break
            except Exception:
                inside_other = True
                break
        if inside_other:
            n_skipped += 1
            continue
        try:
            mode = find_edge_mode(cell, p, bc, tol_bc=tol_bc)
        except (OnSpectrum, BranchPoint):
            n_rejected += 1
            continue
        expected_side = RIGHT if w > 0 else LEFT
        slope, n0 = decay_fit(mode)
        ode_r = ode_residual(cell, mode)
        entry = {
            "omega": p,
            "winding": w,
            "side": mode.side,
            "side_ok": mode.side == expected_side,
            "boundary_residual": mode.boundary_residual,
            "boundary_ok": mode.boundary_residual <= tol_bc,
            "decay_slope": slope,
            "decay_expected": expected_decay_slope(mode),
            "decay_ok": abs(slope - expected_decay_slope(mode)) <= tol_decay,
            "fit_start": n0,
            "ode_residual": ode_r,
            "ode_ok": ode_r <= tol_ode,
            "rank2": len(mode.extra_alphas) == 0 and not mode.degenerate,
            "count": count_edge_modes(cell, p, bc, tol_bc=tol_bc),
        }
        entry["passed"] = bool(entry["side_ok"] and entry["boundary_ok"]
                               and entry["decay_ok"] and entry["ode_ok"])
        results.append(entry)
    n_pass = sum(1 for r in results if r["passed"])
    return {
        "band_index": curve.band_index,
        "bc": bc.kind,
        "n_samples": len(results),
        "n_pass": n_pass,
        "n_fail": len(results) - n_pass,
        "n_skipped_other_loop": n_skipped,
        "n_rejected_on_spectrum": n_rejected,
        "samples": results,
        "passed": bool(results) and n_pass == len(results),
    }
