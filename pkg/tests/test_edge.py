"""Edge modes of the semi-infinite crystal: boundary systems, selection,
profiles, and the side/winding correspondence at the worked loop points."""
import math

import numpy as np
import pytest

from photonband import edge, topology, transfer
from photonband.errors import (BranchPoint, IndexZero, OnSpectrum,
                               WrongSelectionSize)

Q2 = np.array([[0.0, -1.0], [1.0, 0.0]])

# interior points of the five non-Hermitian loops (band: frozen point);
# bands 1 and 5 wind negatively (left half-line), 2-4 positively (right)
LOOP_POINTS = {1: 0.6505 - 0.0998j, 2: 1.0823 - 0.2189j, 3: 1.4751 - 0.2631j,
               4: 2.4988 - 0.6240j, 5: 3.0366 - 0.4074j}
LOOP_SIDES = {1: edge.LEFT, 2: edge.RIGHT, 3: edge.RIGHT, 4: edge.RIGHT,
              5: edge.LEFT}


@pytest.fixture(scope="module")
def nh_modes(nh_cell):
    return {band: edge.find_edge_mode(nh_cell, w)
            for band, w in LOOP_POINTS.items()}


def _random_pairs(rng, n, lambdas, kernel_sign=None):
    pairs = []
    for lam in lambdas:
        E = rng.normal(size=2) + 1j * rng.normal(size=2)
        if kernel_sign is None:
            H = rng.normal(size=2) + 1j * rng.normal(size=2)
        else:
            H = kernel_sign * (Q2 @ E)
        v = np.concatenate([E, H])
        pairs.append((lam, v / np.linalg.norm(v)))
    return pairs


def test_boundary_matrix_layout():
    rng = np.random.default_rng(11)
    pairs = _random_pairs(rng, 3, [0.3, 0.5, 0.7])
    E = np.column_stack([v[:2] for _, v in pairs])
    H = np.column_stack([v[2:] for _, v in pairs])
    np.testing.assert_allclose(
        edge.boundary_matrix(pairs, edge.RIGHT, edge.PEC), E)
    np.testing.assert_allclose(
        edge.boundary_matrix(pairs, edge.RIGHT, edge.PMC), H)
    np.testing.assert_allclose(
        edge.boundary_matrix(pairs, edge.RIGHT, edge.OUTGOING_VACUUM),
        H + Q2 @ E)
    np.testing.assert_allclose(
        edge.boundary_matrix(pairs, edge.LEFT, edge.OUTGOING_VACUUM),
        H - Q2 @ E)


def test_boundary_matrix_constructed_kernel():
    # eigenvectors built with H_j = -Q E_j annihilate the right-side
    # outgoing system identically; +Q E_j the left-side one
    rng = np.random.default_rng(2)
    pairs = _random_pairs(rng, 3, [0.2, 0.4, 0.6], kernel_sign=-1.0)
    B = edge.boundary_matrix(pairs, edge.RIGHT, edge.OUTGOING_VACUUM)
    assert np.linalg.norm(B) == 0.0
    pairs = _random_pairs(rng, 3, [1.5, 2.5, 3.5], kernel_sign=+1.0)
    B = edge.boundary_matrix(pairs, edge.LEFT, edge.OUTGOING_VACUUM)
    assert np.linalg.norm(B) == 0.0


def test_boundary_matrix_selection_size():
    rng = np.random.default_rng(3)
    with pytest.raises(WrongSelectionSize):
        edge.boundary_matrix(_random_pairs(rng, 2, [0.3, 0.5]),
                             edge.RIGHT, edge.OUTGOING_VACUUM)


def test_boundary_condition_validation():
    with pytest.raises(ValueError):
        edge.BoundaryCondition("dirichlet")


def test_modes_at_loop_points(nh_modes):
    for band, mode in nh_modes.items():
        assert mode.side == LOOP_SIDES[band]
        assert mode.index_value == (1 if mode.side == edge.RIGHT else -1)
        assert mode.boundary_residual <= 1e-9
        assert not mode.degenerate and len(mode.extra_alphas) == 0
        assert abs(np.linalg.norm(mode.alphas) - 1.0) < 1e-12
        first = mode.alphas[np.flatnonzero(np.abs(mode.alphas) > 1e-12)[0]]
        assert abs(first.imag) < 1e-12 and first.real > 0
        mods = [abs(l) for l, _ in mode.eigenpairs]
        if mode.side == edge.RIGHT:
            assert all(m < 1 for m in mods)
            assert mode.decay_rate == pytest.approx(max(mods))
        else:
            assert all(m > 1 for m in mods)
            assert mode.decay_rate == pytest.approx(min(mods))


def test_boundary_system_rank_two(nh_cell, nh_modes):
    # Ind = +/-1 gives a 2x3 system of full rank 2: exactly one mode
    for band, mode in nh_modes.items():
        B = edge.boundary_matrix(mode.eigenpairs, mode.side, mode.bc)
        assert np.linalg.matrix_rank(B, tol=1e-9) == 2
        assert edge.count_edge_modes(nh_cell, LOOP_POINTS[band]) == 1


def test_side_matches_winding(nh_cell, nh_diagram, nh_modes):
    for curve in nh_diagram.curves:
        mode = nh_modes[curve.band_index]
        w = topology.winding_number(curve, LOOP_POINTS[curve.band_index],
                                    cell=nh_cell).winding
        expected = edge.RIGHT if w == 1 else edge.LEFT
        assert mode.side == expected


def test_decay_fit_slope(nh_modes):
    for band, mode in nh_modes.items():
        slope, n0 = edge.decay_fit(mode)
        assert abs(slope - edge.expected_decay_slope(mode)) <= 1e-6
        assert slope < 0


def test_decay_fit_window_scales_with_contamination(nh_modes):
    # band 1's two slowest left-side moduli differ by 6e-4, so the fit
    # window must sit tens of thousands of cells deep; band 3 separates
    # after a few hundred
    _, n0_band1 = edge.decay_fit(nh_modes[1])
    _, n0_band3 = edge.decay_fit(nh_modes[3])
    assert n0_band1 > 10000
    assert n0_band3 < 2000


def test_single_eigenpair_profile_exact(nh_cell, nh_modes):
    mode = nh_modes[2]
    single = edge.EdgeMode(
        omega=mode.omega, side=mode.side,
        alphas=np.array([1.0, 0.0, 0.0], dtype=complex),
        eigenpairs=mode.eigenpairs, decay_rate=abs(mode.eigenpairs[0][0]),
        bc=mode.bc, boundary_residual=0.0, index_value=mode.index_value)
    lam, v = mode.eigenpairs[0]
    prof = edge.mode_profile(nh_cell, single, 8.0, samples_per_cell=1)
    for z, sv in prof:
        n = abs(z)
        expected = abs(lam) ** n * np.linalg.norm(v)
        assert np.linalg.norm(sv.as_array()) == pytest.approx(expected,
                                                              rel=1e-12)


def test_profile_boundary_state(nh_cell, nh_modes):
    mode = nh_modes[3]
    prof = edge.mode_profile(nh_cell, mode, 2.0, samples_per_cell=2)
    at_zero = [sv for z, sv in prof if z == 0.0]
    assert len(at_zero) == 1
    direct = sum(a * v for a, (_, v) in zip(mode.alphas, mode.eigenpairs))
    np.testing.assert_allclose(at_zero[0].as_array(), direct, atol=1e-14)


def test_profile_sides_and_ordering(nh_cell, nh_modes):
    right = edge.mode_profile(nh_cell, nh_modes[2], 3.0, samples_per_cell=4)
    zs = [z for z, _ in right]
    assert zs == sorted(zs)
    assert zs[0] == 0.0 and zs[-1] == 3.0
    left = edge.mode_profile(nh_cell, nh_modes[1], 3.0, samples_per_cell=4)
    zs = [z for z, _ in left]
    assert zs == sorted(zs)
    assert zs[0] == -3.0 and zs[-1] == 0.0


def test_profile_envelope_bound(nh_cell, nh_modes):
    # log||Phi(n)|| <= log C + n log rho with C from a least-squares fit
    # over the first 40 cells (the bound; the sharp slope is decay_fit's)
    for band in (2, 3, 5):
        mode = nh_modes[band]
        prof = edge.mode_profile(nh_cell, mode, 40.0, samples_per_cell=1)
        norms = {round(abs(z)): np.linalg.norm(sv.as_array())
                 for z, sv in prof if abs(z - round(z)) < 1e-12}
        ns = np.array(sorted(norms))
        logs = np.array([math.log(norms[n]) for n in ns])
        s = edge.expected_decay_slope(mode)
        log_c = float(np.polyfit(ns, logs - s * ns, 0)[0])
        assert np.all(logs <= log_c + s * ns + math.log(4.0))


def test_ode_residual(nh_cell, nh_modes):
    for band in (4, 5):
        assert edge.ode_residual(nh_cell, nh_modes[band]) <= 1e-6


def test_pec_pmc_modes(nh_cell):
    w = LOOP_POINTS[3]
    for bc in (edge.PEC, edge.PMC):
        mode = edge.find_edge_mode(nh_cell, w, bc)
        assert mode.bc is bc
        assert mode.boundary_residual <= 1e-9
        assert edge.count_edge_modes(nh_cell, w, bc) == 1
        slope, _ = edge.decay_fit(mode)
        assert abs(slope - edge.expected_decay_slope(mode)) <= 1e-6


def test_boundary_condition_residual_definition(nh_modes):
    for mode in nh_modes.values():
        phi0 = mode.boundary_state()
        sign = 1.0 if mode.side == edge.RIGHT else -1.0
        expected = np.linalg.norm(phi0.H + sign * (Q2 @ phi0.E))
        expected /= np.linalg.norm(phi0.as_array())
        assert edge.boundary_condition_residual(mode) == pytest.approx(
            expected, rel=1e-12)
        assert expected <= 1e-9


def test_synthetic_index_two():
    rng = np.random.default_rng(3)
    S = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    Sinv = np.linalg.inv(S)
    inside = S @ np.diag([0.3, 0.5 + 0.1j, -0.4, 0.2 - 0.3j]) @ Sinv
    mode = edge.edge_mode_from_matrix(inside, 1.0 + 0j)
    assert mode.index_value == 2 and mode.side == edge.RIGHT
    assert len(mode.eigenpairs) == 4
    assert 1 + len(mode.extra_alphas) == 2
    B = edge.boundary_matrix(mode.eigenpairs, mode.side, mode.bc)
    for alpha in (mode.alphas,) + mode.extra_alphas:
        assert np.linalg.norm(B @ alpha) <= 1e-9

    outside = S @ np.diag([3.0, 2.0 + 1.0j, -2.5, 1.0 + 2.0j]) @ Sinv
    mode = edge.edge_mode_from_matrix(outside, 1.0 + 0j)
    assert mode.index_value == -2 and mode.side == edge.LEFT
    assert 1 + len(mode.extra_alphas) == 2


def test_index_zero_errors(herm_cell):
    with pytest.raises(IndexZero):
        edge.find_edge_mode(herm_cell, 1.386 + 0j)
    assert edge.count_edge_modes(herm_cell, 1.386 + 0j) == 0


def test_on_spectrum_error(herm_cell):
    with pytest.raises(OnSpectrum):
        edge.find_edge_mode(herm_cell, 0.5 + 0j)


def test_branch_point_error():
    A = np.diag([0.5, 0.5, 2.0, 2.0]).astype(complex)
    A[0, 1] = 1.0
    with pytest.raises(BranchPoint):
        edge.edge_mode_from_matrix(A, 1.0 + 0j)


def test_verify_edge_theorem(nh_cell, nh_diagram):
    # band 3's loop self-intersects near its right horn (a small lobe of
    # winding -1 inside the crescent), so samples may legitimately carry
    # either sign; the theorem ties the SIDE to the sign, which is what
    # side_ok certifies per sample
    band3 = nh_diagram.curves[2]
    others = [c for c in nh_diagram.curves if c.band_index != 3]
    rep = edge.verify_edge_theorem(nh_cell, band3, 4, others=others, seed=5)
    assert rep["passed"] is True
    assert rep["n_samples"] == 4 and rep["n_fail"] == 0
    for entry in rep["samples"]:
        assert entry["side_ok"]
        assert entry["boundary_residual"] <= 1e-9
        assert entry["ode_residual"] <= 1e-6
        assert entry["count"] == 1


def test_negative_winding_lobe_gets_left_mode(nh_cell, nh_diagram):
    # inside the reversed lobe of band 3 the spectral index is -1 and the
    # edge mode lives on the left half-line, exactly as the winding sign
    # predicts (the self-intersecting-loop case)
    w = 1.85 - 0.31j
    band3 = nh_diagram.curves[2]
    res = topology.winding_number(band3, w, cell=nh_cell)
    assert res.winding == -1
    assert topology.spectral_index(nh_cell, w).value == -1
    mode = edge.find_edge_mode(nh_cell, w)
    assert mode.side == edge.LEFT


def test_verify_edge_theorem_left_band(nh_cell, nh_diagram):
    band1 = nh_diagram.curves[0]
    others = [c for c in nh_diagram.curves if c.band_index != 1]
    rep = edge.verify_edge_theorem(nh_cell, band1, 2, others=others, seed=9)
    assert rep["passed"] is True
    for entry in rep["samples"]:
        assert entry["side_ok"]
